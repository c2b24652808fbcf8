//! Tucker models `G ×_1 U_1 ×_2 … ×_N U_N` and the higher-order SVD.

use crate::error::{shape_err, Error, Result};
use crate::linalg::{has_orthonormal_columns, numerical_rank, qr, svd, truncation_rank};
use crate::ops::{mode_n_matrix_product, transpose, unfold};
use crate::tensor::Tensor;

const ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct TuckerForm {
    core: Tensor,
    factors: Vec<Tensor>,
    orthogonal: Vec<bool>,
}

impl TuckerForm {
    /// Checks that factor `n` has as many columns as core mode `n` and
    /// records which factors have orthonormal columns.
    pub fn new(core: Tensor, factors: Vec<Tensor>) -> Result<Self> {
        if core.order() != factors.len() {
            return shape_err(format!(
                "order-{} core with {} factors",
                core.order(),
                factors.len()
            ));
        }
        for (n, (u, &r)) in factors.iter().zip(core.shape()).enumerate() {
            if u.order() != 2 || u.shape()[1] != r {
                return shape_err(format!(
                    "factor {} has shape {:?}, core mode has dimension {r}",
                    n + 1,
                    u.shape()
                ));
            }
        }
        let orthogonal = factors
            .iter()
            .map(|u| has_orthonormal_columns(u, ORTHO_TOL))
            .collect();
        Ok(TuckerForm {
            core,
            factors,
            orthogonal,
        })
    }

    pub fn core(&self) -> &Tensor {
        &self.core
    }

    pub fn factors(&self) -> &[Tensor] {
        &self.factors
    }

    pub fn orthogonal(&self) -> &[bool] {
        &self.orthogonal
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.shape().to_vec()
    }

    pub fn reconstruct(&self) -> Tensor {
        self.factors
            .iter()
            .enumerate()
            .try_fold(self.core.clone(), |acc, (n, u)| mode_n_matrix_product(&acc, u, n + 1))
            .expect("consistent Tucker form")
    }

    /// Equivalent form with orthonormal factors: each `U_n = Q_n R_n` and the
    /// `R_n` are absorbed into the core.
    pub fn orthogonalize(&self) -> Result<TuckerForm> {
        let mut core = self.core.clone();
        let mut factors = Vec::with_capacity(self.factors.len());
        for (n, u) in self.factors.iter().enumerate() {
            let (q, r) = qr(u)?;
            core = mode_n_matrix_product(&core, &r, n + 1)?;
            factors.push(q);
        }
        TuckerForm::new(core, factors)
    }
}

/// How HOSVD chooses the per-mode ranks.
#[derive(Debug, Clone, PartialEq)]
pub enum HosvdRanks {
    /// Numerical rank of every unfolding (exact decomposition).
    Exact,
    /// At most `caps[n]` components in mode `n`.
    Caps(Vec<usize>),
    /// Per-mode discarded mass at most `tol · ‖T‖ / √N`.
    Tolerance(f64),
}

#[derive(Debug, Clone)]
pub struct Hosvd {
    pub form: TuckerForm,
    /// Norm of the discarded singular values of each unfolding.
    pub discarded: Vec<f64>,
}

pub fn hosvd(t: &Tensor, ranks: &HosvdRanks) -> Result<Hosvd> {
    let n = t.order();
    match ranks {
        HosvdRanks::Caps(c) if c.len() != n => {
            return Err(Error::InvalidArgument(format!(
                "{} rank caps for an order-{n} tensor",
                c.len()
            )))
        }
        HosvdRanks::Caps(c) if c.contains(&0) => {
            return Err(Error::InvalidArgument("rank caps must be positive".into()))
        }
        HosvdRanks::Tolerance(tol) if !(*tol >= 0.0) => {
            return Err(Error::InvalidArgument("tolerance must be non-negative".into()))
        }
        _ => {}
    }
    let norm = t.norm();
    let mut factors = Vec::with_capacity(n);
    let mut discarded = Vec::with_capacity(n);
    for mode in 1..=n {
        let dec = svd(&unfold(t, mode)?)?;
        let r = match ranks {
            HosvdRanks::Exact => truncation_rank(&dec.s, 0.0, None),
            HosvdRanks::Caps(c) => truncation_rank(&dec.s, 0.0, Some(c[mode - 1])),
            HosvdRanks::Tolerance(tol) => {
                truncation_rank(&dec.s, tol * norm / (n as f64).sqrt(), None)
            }
        };
        discarded.push(dec.s[r..].iter().map(|x| x * x).sum::<f64>().sqrt());
        factors.push(dec.truncate(r).u);
    }
    let mut core = t.clone();
    for (k, u) in factors.iter().enumerate() {
        core = mode_n_matrix_product(&core, &transpose(u)?, k + 1)?;
    }
    Ok(Hosvd {
        form: TuckerForm::new(core, factors)?,
        discarded,
    })
}

/// Numerical rank of each single-mode unfolding.
pub fn multilinear_rank(t: &Tensor) -> Result<Vec<usize>> {
    (1..=t.order())
        .map(|m| numerical_rank(&unfold(t, m)?))
        .collect()
}

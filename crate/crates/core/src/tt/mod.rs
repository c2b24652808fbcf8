//! Tensor trains: chains of order-3 cores `G_n` of shape `R_{n-1} × d_n × R_n`
//! with `R_0 = R_N = 1`, plus the operator version (MPO).

mod algebra;
mod decompose;
mod mpo;

pub use algebra::{tt_add, tt_hadamard, tt_inner, tt_inner_traced, tt_norm, tt_scale, tt_sum_entries};
pub use decompose::{tt_als_fit, tt_canonicalize, tt_round, tt_svd, TtAlsFit};
pub use mpo::{mpo_from_dense, mpo_matvec, mpo_reconstruct, Mpo};

use crate::error::{shape_err, Error, Result};
use crate::linalg::has_orthonormal_columns;
use crate::ops::{matmul, transpose};
use crate::random::uniform_tensor;
use crate::tensor::Tensor;

/// Tolerance of the orthogonality tests that back the `center` metadata.
pub const ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct TT {
    cores: Vec<Tensor>,
    center: Option<usize>,
}

impl TT {
    pub fn new(cores: Vec<Tensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidArgument("a tensor train needs at least one core".into()));
        }
        let mut prev = 1;
        for (k, c) in cores.iter().enumerate() {
            if c.order() != 3 {
                return shape_err(format!("core {} has order {}, expected 3", k + 1, c.order()));
            }
            if c.shape()[0] != prev {
                return shape_err(format!(
                    "core {} has left rank {}, expected {prev}",
                    k + 1,
                    c.shape()[0]
                ));
            }
            prev = c.shape()[2];
        }
        if prev != 1 {
            return shape_err(format!("last core has right rank {prev}, expected 1"));
        }
        Ok(TT { cores, center: None })
    }

    /// Random cores with entries uniform on `(-1, 1)`; core `k` uses seed
    /// `seed + k`. `ranks` holds the `N - 1` internal ranks.
    pub fn random(dims: &[usize], ranks: &[usize], seed: u64) -> Result<Self> {
        if dims.is_empty() || ranks.len() + 1 != dims.len() {
            return Err(Error::InvalidArgument(format!(
                "{} ranks for {} dimensions",
                ranks.len(),
                dims.len()
            )));
        }
        let full: Vec<usize> = std::iter::once(1).chain(ranks.iter().copied()).chain([1]).collect();
        let cores = dims
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                if d == 0 || full[k] == 0 || full[k + 1] == 0 {
                    return Err(Error::InvalidArgument("dimensions and ranks must be positive".into()));
                }
                Ok(uniform_tensor(&[full[k], d, full[k + 1]], -1.0, 1.0, seed.wrapping_add(k as u64)))
            })
            .collect::<Result<Vec<_>>>()?;
        TT::new(cores)
    }

    pub(crate) fn with_center(mut self, center: Option<usize>) -> Self {
        self.center = center;
        self
    }

    pub fn cores(&self) -> &[Tensor] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<Tensor> {
        self.cores
    }

    /// 1-based index of the orthogonality center, if the train is known to be
    /// in canonical form.
    pub fn center(&self) -> Option<usize> {
        self.center
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[1]).collect()
    }

    /// Internal ranks `R_1 … R_{N-1}`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1]
            .iter()
            .map(|c| c.shape()[2])
            .collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Number of stored parameters.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(Tensor::len).sum()
    }

    /// Checks the `center` metadata against the orthogonality tests.
    pub fn check_canonical(&self) -> bool {
        match self.center {
            None => true,
            Some(j) => self.cores.iter().enumerate().all(|(k, c)| {
                (k + 1 == j)
                    || (k + 1 < j && is_left_orthogonal(c, ORTHO_TOL))
                    || (k + 1 > j && is_right_orthogonal(c, ORTHO_TOL))
            }),
        }
    }
}

/// `G` reshaped to `(R_{n-1} d_n) × R_n` has orthonormal columns.
pub fn is_left_orthogonal(core: &Tensor, tol: f64) -> bool {
    let s = core.shape();
    core.reshape(&[s[0] * s[1], s[2]])
        .is_ok_and(|m| has_orthonormal_columns(&m, tol))
}

/// `G` reshaped to `R_{n-1} × (d_n R_n)` has orthonormal rows.
pub fn is_right_orthogonal(core: &Tensor, tol: f64) -> bool {
    let s = core.shape();
    core.reshape(&[s[0], s[1] * s[2]])
        .and_then(|m| transpose(&m))
        .is_ok_and(|m| has_orthonormal_columns(&m, tol))
}

/// Dense tensor of a train, built by absorbing one core at a time.
pub fn tt_reconstruct(t: &TT) -> Tensor {
    let mut acc = Tensor::ones(&[1, 1]);
    for core in &t.cores {
        let s = core.shape();
        let m = core.reshape(&[s[0], s[1] * s[2]]).unwrap();
        let rows = acc.shape()[0];
        acc = matmul(&acc, &m)
            .unwrap()
            .into_reshape(&[rows * s[1], s[2]])
            .unwrap();
    }
    acc.into_reshape(&t.dims()).unwrap()
}

/// One entry as the product of the core slices `G_n[:, i_n, :]` (0-based
/// indices).
pub fn tt_entry(t: &TT, index: &[usize]) -> Result<f64> {
    let dims = t.dims();
    if index.len() != dims.len() || index.iter().zip(&dims).any(|(i, d)| i >= d) {
        return Err(Error::IndexOutOfRange {
            index: index.to_vec(),
            shape: dims,
        });
    }
    let mut row = vec![1.0];
    for (core, &i) in t.cores.iter().zip(index) {
        let [r0, d, r1] = [core.shape()[0], core.shape()[1], core.shape()[2]];
        let data = core.data();
        let mut next = vec![0.0; r1];
        for (a, &x) in row.iter().enumerate() {
            let base = (a * d + i) * r1;
            for (b, n) in next.iter_mut().enumerate() {
                *n += x * data[base + b];
            }
        }
        debug_assert_eq!(row.len(), r0);
        row = next;
    }
    Ok(row[0])
}

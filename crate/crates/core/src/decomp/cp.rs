//! CP (canonical polyadic) models: sums of `R` rank-one tensors stored as
//! factor matrices `A_n` of shape `d_n × R`.

use crate::error::{shape_err, Error, Result};
use crate::ops::{khatri_rao_all, matmul, transpose, unfold};
use crate::random::uniform_tensor;
use crate::tensor::{check_mode, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct CpForm {
    factors: Vec<Tensor>,
}

impl CpForm {
    pub fn new(factors: Vec<Tensor>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::InvalidArgument("CP form needs at least one factor".into()))?;
        if first.order() != 2 {
            return shape_err("CP factors must be matrices");
        }
        let r = first.shape()[1];
        for (n, f) in factors.iter().enumerate() {
            if f.order() != 2 || f.shape()[1] != r {
                return shape_err(format!(
                    "factor {} has shape {:?}, expected d x {r}",
                    n + 1,
                    f.shape()
                ));
            }
        }
        Ok(CpForm { factors })
    }

    /// Rank-one term built from vectors.
    pub fn rank_one(vectors: &[Tensor]) -> Result<Self> {
        let factors = vectors
            .iter()
            .map(|v| v.reshape(&[v.len(), 1]))
            .collect::<Result<Vec<_>>>()?;
        CpForm::new(factors)
    }

    pub fn factors(&self) -> &[Tensor] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors[0].shape()[1]
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.shape()[0]).collect()
    }

    /// Khatri-Rao product of every factor except `skip` (1-based), in
    /// ascending mode order; a `1 × R` row of ones when nothing is left.
    pub fn khatri_rao_except(&self, skip: usize) -> Result<Tensor> {
        let others: Vec<&Tensor> = self
            .factors
            .iter()
            .enumerate()
            .filter(|(k, _)| k + 1 != skip)
            .map(|(_, f)| f)
            .collect();
        if others.is_empty() {
            return Ok(Tensor::ones(&[1, self.rank()]));
        }
        khatri_rao_all(&others)
    }

    /// Mode-`n` unfolding `A_n (A_1 ⊙ … ⊙ A_N without A_n)ᵀ`.
    pub fn unfold(&self, mode: usize) -> Result<Tensor> {
        check_mode(mode, self.order())?;
        let kr = self.khatri_rao_except(mode)?;
        matmul(&self.factors[mode - 1], &transpose(&kr)?)
    }

    /// Dense tensor `Σ_r a_1^(r) ∘ … ∘ a_N^(r)`.
    pub fn reconstruct(&self) -> Tensor {
        self.unfold(1)
            .and_then(|m| m.into_reshape(&self.shape()))
            .expect("consistent CP form")
    }
}

/// `‖T − [[A_1..A_N]]‖²_F`.
pub fn cp_loss(t: &Tensor, form: &CpForm) -> Result<f64> {
    Ok(t.sub(&form.reconstruct())?.norm().powi(2))
}

/// Gradient of [`cp_loss`] with respect to every factor:
/// `∂L/∂A_n = 2 ([[A]] − T)_(n) (⊙_{k≠n} A_k)`.
pub fn cp_gradient(t: &Tensor, form: &CpForm) -> Result<Vec<Tensor>> {
    if t.shape() != form.shape().as_slice() {
        return shape_err(format!(
            "tensor shape {:?} vs CP shape {:?}",
            t.shape(),
            form.shape()
        ));
    }
    let resid = form.reconstruct().sub(t)?;
    (1..=form.order())
        .map(|n| Ok(matmul(&unfold(&resid, n)?, &form.khatri_rao_except(n)?)?.scale(2.0)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct CpFitOptions {
    pub max_iters: usize,
    /// Stop once the relative loss change of an accepted step drops below this.
    pub tol: f64,
    pub seed: u64,
    /// First trial step of each backtracking search.
    pub initial_step: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for CpFitOptions {
    fn default() -> Self {
        CpFitOptions {
            max_iters: 5000,
            tol: 1e-12,
            seed: 0,
            initial_step: 0.1,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CpFit {
    pub form: CpForm,
    /// Loss before the first step and after every accepted step.
    pub losses: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl CpFit {
    pub fn loss(&self) -> f64 {
        *self.losses.last().unwrap()
    }
}

/// Fits a rank-`rank` CP model by gradient descent with backtracking line
/// search, from factors drawn uniformly on `(-1, 1)` with `opts.seed`.
pub fn cp_fit_gd(t: &Tensor, rank: usize, opts: &CpFitOptions) -> Result<CpFit> {
    if rank == 0 {
        return Err(Error::InvalidArgument("CP rank must be at least 1".into()));
    }
    let factors = t
        .shape()
        .iter()
        .enumerate()
        .map(|(n, &d)| uniform_tensor(&[d, rank], -1.0, 1.0, opts.seed.wrapping_add(n as u64)))
        .collect();
    cp_fit_gd_from(t, CpForm::new(factors)?, opts)
}

/// Gradient descent from a given starting point.
pub fn cp_fit_gd_from(t: &Tensor, init: CpForm, opts: &CpFitOptions) -> Result<CpFit> {
    let mut form = init;
    let mut loss = cp_loss(t, &form)?;
    let mut losses = vec![loss];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        if loss == 0.0 {
            converged = true;
            break;
        }
        let grad = cp_gradient(t, &form)?;
        let g2: f64 = grad.iter().map(|g| g.norm().powi(2)).sum();
        if g2 == 0.0 {
            converged = true;
            break;
        }
        iterations += 1;
        let mut step = opts.initial_step;
        let accepted = loop {
            let trial = CpForm::new(
                form.factors
                    .iter()
                    .zip(&grad)
                    .map(|(f, g)| f.sub(&g.scale(step)))
                    .collect::<Result<Vec<_>>>()?,
            )?;
            let trial_loss = cp_loss(t, &trial)?;
            if trial_loss <= loss - opts.armijo * step * g2 {
                break Some((trial, trial_loss));
            }
            step *= 0.5;
            if step < 1e-30 {
                break None;
            }
        };
        let Some((next, next_loss)) = accepted else {
            converged = true;
            break;
        };
        let change = (loss - next_loss).abs() / loss.max(f64::MIN_POSITIVE);
        form = next;
        loss = next_loss;
        losses.push(loss);
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(CpFit {
        form,
        losses,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::numerical_rank;
    use crate::ops::{copy_tensor, matricize, outer};
    use crate::tensor::ModeSet;

    fn random_cp(shape: &[usize], r: usize, seed: u64) -> CpForm {
        CpForm::new(
            shape
                .iter()
                .enumerate()
                .map(|(n, &d)| uniform_tensor(&[d, r], -1., 1., seed + n as u64))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn rank_one_reconstruction() {
        let cp = CpForm::rank_one(&[Tensor::vector(&[1., 2.]), Tensor::vector(&[3., 4.])]).unwrap();
        assert_eq!(cp.reconstruct().data(), &[3., 4., 6., 8.]);
        assert_eq!(cp.rank(), 1);
    }

    #[test]
    fn identity_factors_give_copy_tensor() {
        let cp = CpForm::new(vec![Tensor::eye(3); 3]).unwrap();
        assert_eq!(cp.reconstruct(), copy_tensor(3, 3).unwrap());
    }

    #[test]
    fn reconstruction_matches_loops() {
        let cp = random_cp(&[2, 3, 4], 2, 10);
        let [a, b, c] = [&cp.factors()[0], &cp.factors()[1], &cp.factors()[2]];
        let expect = Tensor::from_fn(&[2, 3, 4], |x| {
            (0..2)
                .map(|r| {
                    a.get(&[x[0], r]).unwrap() * b.get(&[x[1], r]).unwrap() * c.get(&[x[2], r]).unwrap()
                })
                .sum()
        });
        assert!(cp.reconstruct().max_abs_diff(&expect).unwrap() < 1e-14);
    }

    #[test]
    fn unfoldings_match_matricized_reconstruction() {
        let cp = random_cp(&[3, 2, 4], 2, 20);
        let full = cp.reconstruct();
        for n in 1..=3 {
            let a = cp.unfold(n).unwrap();
            let b = unfold(&full, n).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        }
        assert!(cp.unfold(4).is_err());
        // N = 2 is a matrix factorization A1 A2ᵀ
        let cp2 = random_cp(&[3, 4], 2, 30);
        let m = matmul(&cp2.factors()[0], &transpose(&cp2.factors()[1]).unwrap()).unwrap();
        assert!(cp2.unfold(1).unwrap().max_abs_diff(&m).unwrap() < 1e-14);
        // R = 1 is a rank-one outer product
        let cp1 = random_cp(&[2, 3], 1, 40);
        let o = outer(
            &cp1.factors()[0].reshape(&[2]).unwrap(),
            &cp1.factors()[1].reshape(&[3]).unwrap(),
        );
        assert!(cp1.reconstruct().max_abs_diff(&o).unwrap() < 1e-15);
    }

    #[test]
    fn matricizations_have_rank_at_most_r() {
        let cp = random_cp(&[3, 3, 3, 3], 2, 50);
        let full = cp.reconstruct();
        for rows in [vec![1], vec![2], vec![1, 2], vec![1, 3], vec![2, 4]] {
            let m = matricize(&full, &ModeSet::new(&rows).unwrap()).unwrap();
            assert!(numerical_rank(&m).unwrap() <= 2);
        }
    }

    #[test]
    fn stationary_at_the_truth() {
        let cp = CpForm::rank_one(&[Tensor::vector(&[1., 2.]), Tensor::vector(&[1., 1.])]).unwrap();
        let t = cp.reconstruct();
        let g = cp_gradient(&t, &cp).unwrap();
        assert!(g.iter().all(|x| x.max_abs() == 0.0));
        let fit = cp_fit_gd_from(&t, cp, &CpFitOptions::default()).unwrap();
        assert_eq!(fit.loss(), 0.0);
        assert!(fit.converged);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let t = uniform_tensor(&[3, 2, 4], -1., 1., 60);
        let cp = random_cp(&[3, 2, 4], 2, 70);
        let grad = cp_gradient(&t, &cp).unwrap();
        let h = 1e-5;
        for n in 0..3 {
            for e in 0..cp.factors()[n].len() {
                let bump = |delta: f64| {
                    let mut f = cp.factors().to_vec();
                    f[n].data_mut()[e] += delta;
                    cp_loss(&t, &CpForm::new(f).unwrap()).unwrap()
                };
                let fd = (bump(h) - bump(-h)) / (2.0 * h);
                let an = grad[n].data()[e];
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{fd} vs {an}");
            }
        }
    }

    #[test]
    fn loss_is_monotone() {
        let t = uniform_tensor(&[3, 3, 3], -1., 1., 80);
        let fit = cp_fit_gd(
            &t,
            2,
            &CpFitOptions {
                max_iters: 200,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(fit.losses.windows(2).all(|w| w[1] <= w[0]));
        assert!(cp_fit_gd(&t, 0, &CpFitOptions::default()).is_err());
    }
}

//! TT-SVD, canonical forms, rounding and single-site ALS.

use super::{tt_reconstruct, TT};
use crate::error::{Error, Result};
use crate::linalg::{lq, qr, svd, truncation_rank};
use crate::ops::{matmul, transpose};
use crate::tensor::Tensor;

fn as_left(core: &Tensor) -> Tensor {
    let s = core.shape();
    core.reshape(&[s[0] * s[1], s[2]]).unwrap()
}

fn as_right(core: &Tensor) -> Tensor {
    let s = core.shape();
    core.reshape(&[s[0], s[1] * s[2]]).unwrap()
}

/// Makes core `k` (0-based) left-orthogonal and pushes the triangular factor
/// into core `k + 1`.
fn move_right(cores: &mut [Tensor], k: usize) {
    let [r0, d, _] = shape3(&cores[k]);
    let (q, r) = qr(&as_left(&cores[k])).unwrap();
    let q_cols = q.shape()[1];
    cores[k] = q.into_reshape(&[r0, d, q_cols]).unwrap();
    let [_, d1, r2] = shape3(&cores[k + 1]);
    cores[k + 1] = matmul(&r, &as_right(&cores[k + 1]))
        .unwrap()
        .into_reshape(&[q_cols, d1, r2])
        .unwrap();
}

/// Makes core `k` right-orthogonal and pushes the triangular factor into
/// core `k - 1`.
fn move_left(cores: &mut [Tensor], k: usize) {
    let [_, d, r1] = shape3(&cores[k]);
    let (l, q) = lq(&as_right(&cores[k])).unwrap();
    let q_rows = q.shape()[0];
    cores[k] = q.into_reshape(&[q_rows, d, r1]).unwrap();
    let [r0, d0, _] = shape3(&cores[k - 1]);
    cores[k - 1] = matmul(&as_left(&cores[k - 1]), &l)
        .unwrap()
        .into_reshape(&[r0, d0, q_rows])
        .unwrap();
}

fn shape3(core: &Tensor) -> [usize; 3] {
    [core.shape()[0], core.shape()[1], core.shape()[2]]
}

/// Equivalent train with orthogonality center `j` (1-based): cores left of
/// `j` are left-orthogonal, cores right of `j` right-orthogonal.
pub fn tt_canonicalize(t: &TT, j: usize) -> Result<TT> {
    let n = t.order();
    if j == 0 || j > n {
        return Err(Error::InvalidArgument(format!(
            "center {j} outside 1..={n}"
        )));
    }
    let mut cores = t.cores().to_vec();
    for k in 0..j - 1 {
        move_right(&mut cores, k);
    }
    for k in (j..n).rev() {
        move_left(&mut cores, k);
    }
    Ok(TT::new(cores)?.with_center(Some(j)))
}

fn check_caps(caps: Option<&[usize]>, n: usize) -> Result<()> {
    if let Some(c) = caps {
        if c.len() + 1 != n {
            return Err(Error::InvalidArgument(format!(
                "{} rank caps for an order-{n} train",
                c.len()
            )));
        }
        if c.contains(&0) {
            return Err(Error::InvalidArgument("rank caps must be positive".into()));
        }
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be finite and non-negative")));
    }
    Ok(())
}

fn step_budget(tol: f64, norm: f64, n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        tol * norm / ((n - 1) as f64).sqrt()
    }
}

/// TT-SVD by successive truncated SVDs of the remainder. With `tol = 0` and
/// no caps the ranks are the numerical ranks of the prefix matricizations;
/// otherwise each step discards at most `tol·‖T‖/√(N−1)`, so the total error
/// is at most `tol·‖T‖` (before caps). The result has center `N`.
pub fn tt_svd(t: &Tensor, caps: Option<&[usize]>, tol: f64) -> Result<TT> {
    let dims = t.shape().to_vec();
    let n = dims.len();
    if n == 0 {
        return Err(Error::InvalidArgument("TT-SVD of an order-0 tensor".into()));
    }
    check_caps(caps, n)?;
    check_tol(tol)?;
    let delta = step_budget(tol, t.norm(), n);
    let mut cores = Vec::with_capacity(n);
    let mut rank = 1;
    let mut rest = t.clone();
    for k in 0..n - 1 {
        let cols = rest.len() / (rank * dims[k]);
        let dec = svd(&rest.into_reshape(&[rank * dims[k], cols])?)?;
        let r = truncation_rank(&dec.s, delta, caps.map(|c| c[k]));
        let dec = dec.truncate(r);
        cores.push(dec.u.clone().into_reshape(&[rank, dims[k], r])?);
        rest = dec.s_vt();
        rank = r;
    }
    cores.push(rest.into_reshape(&[rank, dims[n - 1], 1])?);
    Ok(TT::new(cores)?.with_center(Some(n)))
}

/// TT-rounding: right-to-left orthogonalization followed by a left-to-right
/// sweep of truncated SVDs with the same caps and budget as [`tt_svd`].
/// Produces the same tensor as `tt_svd(tt_reconstruct(t))`.
pub fn tt_round(t: &TT, caps: Option<&[usize]>, tol: f64) -> Result<TT> {
    let n = t.order();
    check_caps(caps, n)?;
    check_tol(tol)?;
    let mut cores = tt_canonicalize(t, 1)?.into_cores();
    let delta = step_budget(tol, cores[0].norm(), n);
    for k in 0..n - 1 {
        let [r0, d, _] = shape3(&cores[k]);
        let dec = svd(&as_left(&cores[k]))?;
        let r = truncation_rank(&dec.s, delta, caps.map(|c| c[k]));
        let dec = dec.truncate(r);
        cores[k] = dec.u.clone().into_reshape(&[r0, d, r])?;
        let [_, d1, r2] = shape3(&cores[k + 1]);
        cores[k + 1] = matmul(&dec.s_vt(), &as_right(&cores[k + 1]))?.into_reshape(&[r, d1, r2])?;
    }
    Ok(TT::new(cores)?.with_center(Some(n)))
}

#[derive(Debug, Clone)]
pub struct TtAlsFit {
    pub tt: TT,
    /// Squared residual `‖T − tt‖²` at the start and after every core update.
    pub losses: Vec<f64>,
}

impl TtAlsFit {
    pub fn loss(&self) -> f64 {
        *self.losses.last().unwrap()
    }
}

/// `(∏ d_1..d_{k-1}) × R_{k-1}` matrix of the cores left of `k` (0-based).
fn left_env(cores: &[Tensor], k: usize) -> Tensor {
    let mut acc = Tensor::ones(&[1, 1]);
    for core in &cores[..k] {
        let [_, d, r1] = shape3(core);
        let rows = acc.shape()[0];
        acc = matmul(&acc, &as_right(core))
            .unwrap()
            .into_reshape(&[rows * d, r1])
            .unwrap();
    }
    acc
}

/// `R_k × (∏ d_{k+1}..d_N)` matrix of the cores right of `k` (0-based).
fn right_env(cores: &[Tensor], k: usize) -> Tensor {
    let mut acc = Tensor::ones(&[1, 1]);
    for core in cores[k + 1..].iter().rev() {
        let [r0, d, _] = shape3(core);
        let cols = acc.shape()[1];
        acc = matmul(&as_left(core), &acc)
            .unwrap()
            .into_reshape(&[r0, d * cols])
            .unwrap();
    }
    acc
}

/// Optimal core `k` given orthonormal environments: `Lᵀ T Rᵀ`.
fn project(t: &Tensor, cores: &[Tensor], k: usize) -> Tensor {
    let [r0, d, r1] = shape3(&cores[k]);
    let l = left_env(cores, k);
    let r = right_env(cores, k);
    let (p, s) = (l.shape()[0], r.shape()[1]);
    let x = matmul(&transpose(&l).unwrap(), &t.reshape(&[p, d * s]).unwrap()).unwrap();
    matmul(&x.into_reshape(&[r0 * d, s]).unwrap(), &transpose(&r).unwrap())
        .unwrap()
        .into_reshape(&[r0, d, r1])
        .unwrap()
}

fn residual(t: &Tensor, cores: &[Tensor]) -> f64 {
    let approx = tt_reconstruct(&TT::new(cores.to_vec()).unwrap());
    t.sub(&approx).unwrap().norm().powi(2)
}

/// Single-site ALS for a train with the given internal ranks. Each full sweep
/// updates cores `1..N` left to right, then `N-1..1` right to left, keeping
/// the orthogonality center on the active core so that every update is the
/// orthogonal projection of `T` onto the fixed environment. The initial train
/// is [`TT::random`] with `seed`.
pub fn tt_als_fit(t: &Tensor, ranks: &[usize], sweeps: usize, seed: u64) -> Result<TtAlsFit> {
    let dims = t.shape().to_vec();
    let n = dims.len();
    if n == 0 {
        return Err(Error::InvalidArgument("TT-ALS of an order-0 tensor".into()));
    }
    if ranks.len() + 1 != n {
        return Err(Error::InvalidArgument(format!(
            "{} ranks for an order-{n} tensor",
            ranks.len()
        )));
    }
    let full: Vec<usize> = std::iter::once(1).chain(ranks.iter().copied()).chain([1]).collect();
    for k in 1..n {
        if full[k] == 0 || full[k] > full[k - 1] * dims[k - 1] || full[k] > dims[k] * full[k + 1] {
            return Err(Error::InvalidArgument(format!(
                "rank R_{k} = {} is not between 1 and min({}, {})",
                full[k],
                full[k - 1] * dims[k - 1],
                dims[k] * full[k + 1]
            )));
        }
    }
    let mut cores = tt_canonicalize(&TT::random(&dims, ranks, seed)?, 1)?.into_cores();
    let mut losses = vec![residual(t, &cores)];
    for _ in 0..sweeps {
        for k in 0..n {
            cores[k] = project(t, &cores, k);
            losses.push(residual(t, &cores));
            if k + 1 < n {
                move_right(&mut cores, k);
            }
        }
        for k in (0..n - 1).rev() {
            move_left(&mut cores, k + 1);
            cores[k] = project(t, &cores, k);
            losses.push(residual(t, &cores));
        }
    }
    Ok(TtAlsFit {
        tt: TT::new(cores)?.with_center(Some(1)),
        losses,
    })
}

//! Matrix factorizations on order-2 [`Tensor`]s, backed by faer.
//!
//! SVD factors are returned sorted by decreasing singular value with a
//! deterministic sign: each left singular vector is flipped so that its
//! largest-magnitude entry (lowest index on ties) is positive.

use faer::{Mat, MatRef, Side};

use crate::error::{shape_err, Error, Result};
use crate::tensor::Tensor;

/// Relative threshold used for numerical rank decisions.
pub const RANK_RTOL: f64 = 1e-12;

fn to_mat(t: &Tensor) -> Result<Mat<f64>> {
    if t.order() != 2 {
        return shape_err(format!("expected a matrix, got shape {:?}", t.shape()));
    }
    let c = t.shape()[1];
    Ok(Mat::from_fn(t.shape()[0], c, |i, j| t.data()[i * c + j]))
}

fn from_mat(m: MatRef<'_, f64>) -> Tensor {
    Tensor::from_fn(&[m.nrows(), m.ncols()], |ij| m[(ij[0], ij[1])])
}

/// Thin SVD `A = U diag(s) Vt` with `k = min(m, n)` components.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Tensor,
    pub s: Vec<f64>,
    pub vt: Tensor,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Keeps the leading `r` components.
    pub fn truncate(&self, r: usize) -> Svd {
        let (m, k) = (self.u.shape()[0], self.u.shape()[1]);
        let n = self.vt.shape()[1];
        let r = r.min(k).max(1);
        let u = Tensor::from_fn(&[m, r], |i| self.u.data()[i[0] * k + i[1]]);
        let vt = Tensor::new(vec![r, n], self.vt.data()[..r * n].to_vec()).unwrap();
        Svd {
            u,
            s: self.s[..r].to_vec(),
            vt,
        }
    }

    /// `diag(s) · Vt`.
    pub fn s_vt(&self) -> Tensor {
        let n = self.vt.shape()[1];
        let mut out = self.vt.clone();
        for (i, s) in self.s.iter().enumerate() {
            for v in &mut out.data_mut()[i * n..(i + 1) * n] {
                *v *= s;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Tensor {
        crate::ops::matmul(&self.u, &self.s_vt()).unwrap()
    }
}

/// Index of the largest-magnitude entry of column `j` (first on ties) and
/// the sign that makes it positive.
fn column_sign(m: MatRef<'_, f64>, j: usize) -> f64 {
    let mut pivot = 0;
    for i in 1..m.nrows() {
        if m[(i, j)].abs() > m[(pivot, j)].abs() {
            pivot = i;
        }
    }
    if m[(pivot, j)] < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn decreasing(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

pub fn svd(a: &Tensor) -> Result<Svd> {
    let m = to_mat(a)?;
    let (rows, cols) = (m.nrows(), m.ncols());
    let k = rows.min(cols);
    let dec = m
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let (u, v) = (dec.U(), dec.V());
    let s: Vec<f64> = (0..k).map(|i| dec.S().column_vector()[i]).collect();
    let mut u_out = vec![0.0; rows * k];
    let mut vt_out = vec![0.0; k * cols];
    let mut s_out = Vec::with_capacity(k);
    for (c, j) in decreasing(&s).into_iter().enumerate() {
        let sign = column_sign(u, j);
        for i in 0..rows {
            u_out[i * k + c] = sign * u[(i, j)];
        }
        for i in 0..cols {
            vt_out[c * cols + i] = sign * v[(i, j)];
        }
        s_out.push(s[j]);
    }
    Ok(Svd {
        u: Tensor::new(vec![rows, k], u_out).unwrap(),
        s: s_out,
        vt: Tensor::new(vec![k, cols], vt_out).unwrap(),
    })
}

/// Number of singular values above `RANK_RTOL * s_max`.
pub fn rank_from_singular_values(s: &[f64]) -> usize {
    let top = s.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > RANK_RTOL * top).count()
}

pub fn numerical_rank(a: &Tensor) -> Result<usize> {
    Ok(rank_from_singular_values(&svd(a)?.s))
}

/// How many leading singular values to keep.
///
/// Keeps at most `cap` values and drops the smallest ones as long as the
/// discarded tail has Euclidean norm at most `delta`. Values at or below the
/// numerical-rank threshold are always dropped. At least one is kept.
pub fn truncation_rank(s: &[f64], delta: f64, cap: Option<usize>) -> usize {
    let mut r = rank_from_singular_values(s).max(1);
    if let Some(c) = cap {
        r = r.min(c.max(1));
    }
    let mut tail2: f64 = s[r..].iter().map(|x| x * x).sum();
    while r > 1 {
        let next = tail2 + s[r - 1] * s[r - 1];
        if next.sqrt() > delta {
            break;
        }
        tail2 = next;
        r -= 1;
    }
    r
}

/// Thin QR: `A = Q R` with `Q` of shape `m × k`, `k = min(m, n)`.
/// The diagonal of `R` is made non-negative.
pub fn qr(a: &Tensor) -> Result<(Tensor, Tensor)> {
    let m = to_mat(a)?;
    let dec = m.qr();
    let mut q = from_mat(dec.compute_thin_Q().as_ref());
    let mut r = from_mat(dec.thin_R());
    let (rows, k, cols) = (q.shape()[0], q.shape()[1], r.shape()[1]);
    for j in 0..k {
        if r.data()[j * cols + j] < 0.0 {
            for v in &mut r.data_mut()[j * cols..(j + 1) * cols] {
                *v = -*v;
            }
            for i in 0..rows {
                q.data_mut()[i * k + j] *= -1.0;
            }
        }
    }
    Ok((q, r))
}

/// Thin LQ: `A = L Q` with `Q` having orthonormal rows.
pub fn lq(a: &Tensor) -> Result<(Tensor, Tensor)> {
    let at = crate::ops::transpose(a)?;
    let (q, r) = qr(&at)?;
    Ok((crate::ops::transpose(&r)?, crate::ops::transpose(&q)?))
}

/// Eigen-decomposition of a symmetric matrix: eigenvalues in decreasing
/// order and eigenvectors as columns, signed like the SVD factors.
pub fn symmetric_eigen(a: &Tensor) -> Result<(Vec<f64>, Tensor)> {
    let m = to_mat(a)?;
    let n = m.nrows();
    if n != m.ncols() {
        return shape_err("symmetric_eigen needs a square matrix");
    }
    let scale = a.max_abs().max(1.0);
    let asym = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (m[(i, j)] - m[(j, i)]).abs())
        .fold(0.0, f64::max);
    if asym > 1e-10 * scale {
        return Err(Error::InvalidArgument("matrix is not symmetric".into()));
    }
    let dec = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let vals_raw: Vec<f64> = (0..n).map(|i| dec.S().column_vector()[i]).collect();
    let u = dec.U();
    let mut vecs = vec![0.0; n * n];
    let mut vals = Vec::with_capacity(n);
    for (c, j) in decreasing(&vals_raw).into_iter().enumerate() {
        let sign = column_sign(u, j);
        for i in 0..n {
            vecs[i * n + c] = sign * u[(i, j)];
        }
        vals.push(vals_raw[j]);
    }
    Ok((vals, Tensor::new(vec![n, n], vecs).unwrap()))
}

/// Symmetric square root of a symmetric positive semidefinite matrix.
pub fn psd_sqrt(a: &Tensor) -> Result<Tensor> {
    let (vals, v) = symmetric_eigen(a)?;
    let top = vals.first().copied().unwrap_or(0.0).abs().max(1.0);
    if vals.iter().any(|&x| x < -1e-12 * top) {
        return Err(Error::InvalidArgument("matrix is not positive semidefinite".into()));
    }
    let n = vals.len();
    let roots: Vec<f64> = vals.iter().map(|&x| x.max(0.0).sqrt()).collect();
    Ok(Tensor::from_fn(&[n, n], |ij| {
        (0..n)
            .map(|k| v.data()[ij[0] * n + k] * roots[k] * v.data()[ij[1] * n + k])
            .sum()
    }))
}

/// `true` when `Qᵀ Q = I` (orthonormal columns) within `tol`.
pub fn has_orthonormal_columns(q: &Tensor, tol: f64) -> bool {
    if q.order() != 2 {
        return false;
    }
    let (m, k) = (q.shape()[0], q.shape()[1]);
    for a in 0..k {
        for b in 0..k {
            let dot: f64 = (0..m).map(|i| q.data()[i * k + a] * q.data()[i * k + b]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            if (dot - want).abs() > tol {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{matmul, transpose};

    fn test_matrix(m: usize, n: usize, seed: u64) -> Tensor {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        Tensor::from_fn(&[m, n], |_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn svd_of_sparse_rank_one_matrix() {
        // vec(I₂) vec(I₂)ᵀ has singular values (2, 0, 0, 0)
        let a = Tensor::matrix(4, 4, &[1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1.]).unwrap();
        let d = svd(&a).unwrap();
        assert!((d.s[0] - 2.0).abs() < 1e-14);
        assert_eq!(rank_from_singular_values(&d.s), 1);
        assert!(d.reconstruct().max_abs_diff(&a).unwrap() < 1e-14);
        let h = 0.5f64.sqrt();
        assert!(d.truncate(1).u.max_abs_diff(&Tensor::matrix(4, 1, &[h, 0., 0., h]).unwrap()).unwrap() < 1e-14);
    }

    #[test]
    fn svd_reconstructs_and_is_sorted() {
        for &(m, n) in &[(4, 3), (3, 5), (1, 4), (4, 1), (5, 5)] {
            let a = test_matrix(m, n, (m * 10 + n) as u64);
            let d = svd(&a).unwrap();
            assert!(d.reconstruct().max_abs_diff(&a).unwrap() < 1e-13);
            assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
            assert!(has_orthonormal_columns(&d.u, 1e-12));
            assert!(has_orthonormal_columns(&transpose(&d.vt).unwrap(), 1e-12));
        }
    }

    #[test]
    fn svd_sign_convention() {
        let a = test_matrix(5, 3, 7);
        let d = svd(&a).unwrap();
        let k = d.rank();
        for c in 0..k {
            let col: Vec<f64> = (0..5).map(|i| d.u.data()[i * k + c]).collect();
            let mut p = 0;
            for i in 1..5 {
                if col[i].abs() > col[p].abs() {
                    p = i;
                }
            }
            assert!(col[p] > 0.0);
        }
        let neg = a.scale(-1.0);
        let dn = svd(&neg).unwrap();
        // flipping A flips V, not U
        assert!(dn.u.max_abs_diff(&d.u).unwrap() < 1e-12);
    }

    #[test]
    fn rank_of_low_rank_product() {
        let a = test_matrix(6, 2, 1);
        let b = test_matrix(2, 5, 2);
        let p = matmul(&a, &b).unwrap();
        assert_eq!(numerical_rank(&p).unwrap(), 2);
        assert_eq!(numerical_rank(&Tensor::zeros(&[3, 3])).unwrap(), 0);
    }

    #[test]
    fn truncation_rule() {
        let s = [3.0, 2.0, 0.5, 0.1];
        assert_eq!(truncation_rank(&s, 0.0, None), 4);
        assert_eq!(truncation_rank(&s, 0.11, None), 3);
        assert_eq!(truncation_rank(&s, 0.52, None), 2);
        assert_eq!(truncation_rank(&s, 0.0, Some(2)), 2);
        assert_eq!(truncation_rank(&s, 100.0, None), 1);
        assert_eq!(truncation_rank(&[1.0, 1e-14], 0.0, None), 1);
    }

    #[test]
    fn qr_and_lq() {
        let a = test_matrix(5, 3, 3);
        let (q, r) = qr(&a).unwrap();
        assert_eq!(q.shape(), &[5, 3]);
        assert!(has_orthonormal_columns(&q, 1e-12));
        assert!(matmul(&q, &r).unwrap().max_abs_diff(&a).unwrap() < 1e-13);
        let b = test_matrix(2, 6, 4);
        let (l, q2) = lq(&b).unwrap();
        assert!(has_orthonormal_columns(&transpose(&q2).unwrap(), 1e-12));
        assert!(matmul(&l, &q2).unwrap().max_abs_diff(&b).unwrap() < 1e-13);
        let w = test_matrix(2, 5, 5);
        let (q3, r3) = qr(&w).unwrap();
        assert_eq!(q3.shape(), &[2, 2]);
        assert!(matmul(&q3, &r3).unwrap().max_abs_diff(&w).unwrap() < 1e-13);
    }

    #[test]
    fn psd_square_root() {
        let sigma = Tensor::matrix(2, 2, &[2.0, 0.6, 0.6, 1.0]).unwrap();
        let r = psd_sqrt(&sigma).unwrap();
        assert!(matmul(&r, &r).unwrap().max_abs_diff(&sigma).unwrap() < 1e-13);
        assert!(r.max_abs_diff(&transpose(&r).unwrap()).unwrap() < 1e-14);
        let bad = Tensor::matrix(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(psd_sqrt(&bad).is_err());
    }
}

//! Matrix product operators: chains of order-4 cores `R_{n-1} × I_n × J_n × R_n`
//! representing a `(∏ I_n) × (∏ J_n)` matrix.
//!
//! Row and column multi-indices are lexicographic over the sites. Inside a
//! site the pair `(i_n, j_n)` is grouped with the row index slower, so the
//! grouped leg has index `i_n · J_n + j_n`.

use super::{tt_reconstruct, tt_svd, TT};
use crate::error::{shape_err, Error, Result};
use crate::ops::permute0;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Mpo {
    cores: Vec<Tensor>,
}

impl Mpo {
    pub fn new(cores: Vec<Tensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidArgument("an MPO needs at least one core".into()));
        }
        let mut prev = 1;
        for (k, c) in cores.iter().enumerate() {
            if c.order() != 4 {
                return shape_err(format!("MPO core {} has order {}, expected 4", k + 1, c.order()));
            }
            if c.shape()[0] != prev {
                return shape_err(format!(
                    "MPO core {} has left rank {}, expected {prev}",
                    k + 1,
                    c.shape()[0]
                ));
            }
            prev = c.shape()[3];
        }
        if prev != 1 {
            return shape_err(format!("last MPO core has right rank {prev}, expected 1"));
        }
        Ok(Mpo { cores })
    }

    /// Identity operator on `∏ dims`, all ranks 1.
    pub fn identity(dims: &[usize]) -> Result<Self> {
        let cores = dims
            .iter()
            .map(|&d| Tensor::eye(d).into_reshape(&[1, d, d, 1]))
            .collect::<Result<Vec<_>>>()?;
        Mpo::new(cores)
    }

    pub fn cores(&self) -> &[Tensor] {
        &self.cores
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn row_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[1]).collect()
    }

    pub fn col_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[2]).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1]
            .iter()
            .map(|c| c.shape()[3])
            .collect()
    }

    /// The same chain viewed as a train over the grouped legs `I_n J_n`.
    fn as_tt(&self) -> TT {
        let cores = self
            .cores
            .iter()
            .map(|c| {
                let s = c.shape();
                c.reshape(&[s[0], s[1] * s[2], s[3]]).unwrap()
            })
            .collect();
        TT::new(cores).unwrap()
    }
}

/// Decomposes a matrix whose rows factor as `row_dims` and columns as
/// `col_dims`. The per-site grouped tensor is split by TT-SVD with relative
/// tolerance `tol`.
pub fn mpo_from_dense(m: &Tensor, row_dims: &[usize], col_dims: &[usize], tol: f64) -> Result<Mpo> {
    if m.order() != 2 {
        return shape_err(format!("expected a matrix, got shape {:?}", m.shape()));
    }
    let n = row_dims.len();
    if n == 0 || col_dims.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} row factors and {} column factors",
            n,
            col_dims.len()
        )));
    }
    if row_dims.iter().product::<usize>() != m.shape()[0] || col_dims.iter().product::<usize>() != m.shape()[1] {
        return shape_err(format!(
            "factors {row_dims:?} x {col_dims:?} do not match a {}x{} matrix",
            m.shape()[0],
            m.shape()[1]
        ));
    }
    let split: Vec<usize> = row_dims.iter().chain(col_dims).copied().collect();
    let perm: Vec<usize> = (0..n).flat_map(|k| [k, n + k]).collect();
    let grouped: Vec<usize> = row_dims.iter().zip(col_dims).map(|(i, j)| i * j).collect();
    let t = permute0(&m.reshape(&split)?, &perm).into_reshape(&grouped)?;
    let tt = tt_svd(&t, None, tol)?;
    let cores = tt
        .into_cores()
        .into_iter()
        .zip(row_dims.iter().zip(col_dims))
        .map(|(c, (&i, &j))| {
            let s = c.shape().to_vec();
            c.into_reshape(&[s[0], i, j, s[2]])
        })
        .collect::<Result<Vec<_>>>()?;
    Mpo::new(cores)
}

/// Dense `(∏ I_n) × (∏ J_n)` matrix.
pub fn mpo_reconstruct(m: &Mpo) -> Tensor {
    let (rows, cols) = (m.row_dims(), m.col_dims());
    let n = rows.len();
    let pairs: Vec<usize> = rows.iter().zip(&cols).flat_map(|(&i, &j)| [i, j]).collect();
    let t = tt_reconstruct(&m.as_tt()).into_reshape(&pairs).unwrap();
    let perm: Vec<usize> = (0..n).map(|k| 2 * k).chain((0..n).map(|k| 2 * k + 1)).collect();
    permute0(&t, &perm)
        .into_reshape(&[rows.iter().product(), cols.iter().product()])
        .unwrap()
}

/// Matrix-vector product in TT form. Output core `n` is
/// `Σ_j M_n[r, i, j, r'] V_n[s, j, s']` with the rank pairs `(r, s)` merged,
/// so the output ranks are `R_n S_n`.
pub fn mpo_matvec(m: &Mpo, v: &TT) -> Result<TT> {
    if m.col_dims() != v.dims() {
        return shape_err(format!(
            "MPO column dims {:?} vs train dims {:?}",
            m.col_dims(),
            v.dims()
        ));
    }
    let cores = m
        .cores
        .iter()
        .zip(v.cores())
        .map(|(a, x)| {
            let [r0, ii, jj, r1] = [a.shape()[0], a.shape()[1], a.shape()[2], a.shape()[3]];
            let [s0, _, s1] = [x.shape()[0], x.shape()[1], x.shape()[2]];
            let mut out = Tensor::zeros(&[r0 * s0, ii, r1 * s1]);
            let buf = out.data_mut();
            for r in 0..r0 {
                for i in 0..ii {
                    for j in 0..jj {
                        for rp in 0..r1 {
                            let c = a.data()[((r * ii + i) * jj + j) * r1 + rp];
                            if c == 0.0 {
                                continue;
                            }
                            for s in 0..s0 {
                                for sp in 0..s1 {
                                    let xv = x.data()[(s * jj + j) * s1 + sp];
                                    buf[((r * s0 + s) * ii + i) * (r1 * s1) + rp * s1 + sp] += c * xv;
                                }
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();
    TT::new(cores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{kronecker, matmul};
    use crate::random::uniform_tensor;
    use crate::tt::tt_round;

    fn dense_vec(v: &TT) -> Tensor {
        let t = tt_reconstruct(v);
        let n = t.len();
        t.into_reshape(&[n, 1]).unwrap()
    }

    #[test]
    fn identity_has_unit_ranks() {
        let m = mpo_from_dense(&Tensor::eye(4), &[2, 2], &[2, 2], 0.0).unwrap();
        assert_eq!(m.ranks(), vec![1]);
        assert!(mpo_reconstruct(&m).max_abs_diff(&Tensor::eye(4)).unwrap() < 1e-12);
        assert_eq!(mpo_reconstruct(&Mpo::identity(&[2, 3]).unwrap()), Tensor::eye(6));
    }

    #[test]
    fn kronecker_product_has_unit_ranks() {
        let a = uniform_tensor(&[2, 3], -1., 1., 1);
        let b = uniform_tensor(&[3, 2], -1., 1., 2);
        let k = kronecker(&a, &b).unwrap();
        let m = mpo_from_dense(&k, &[2, 3], &[3, 2], 0.0).unwrap();
        assert_eq!(m.ranks(), vec![1]);
        assert!(mpo_reconstruct(&m).max_abs_diff(&k).unwrap() < 1e-10);
    }

    #[test]
    fn random_matrix_round_trip() {
        let a = uniform_tensor(&[6, 6], -1., 1., 3);
        let m = mpo_from_dense(&a, &[2, 3], &[3, 2], 0.0).unwrap();
        assert!(mpo_reconstruct(&m).max_abs_diff(&a).unwrap() < 1e-10);
        assert!(mpo_from_dense(&a, &[2, 2], &[3, 2], 0.0).is_err());
        assert!(mpo_from_dense(&a, &[6], &[3, 2], 0.0).is_err());
    }

    #[test]
    fn matvec_matches_dense() {
        let mut cores = Vec::new();
        let (rows, cols, s) = ([2, 3, 2], [3, 2, 2], [1, 2, 2, 1]);
        for k in 0..3 {
            cores.push(uniform_tensor(&[s[k], rows[k], cols[k], s[k + 1]], -1., 1., 10 + k as u64));
        }
        let m = Mpo::new(cores).unwrap();
        let v = TT::random(&cols, &[2, 2], 20).unwrap();
        let y = mpo_matvec(&m, &v).unwrap();
        assert!(y.ranks().iter().all(|&r| r <= 4));
        assert_eq!(y.ranks(), vec![4, 4]);
        let expect = matmul(&mpo_reconstruct(&m), &dense_vec(&v)).unwrap();
        assert!(dense_vec(&y).max_abs_diff(&expect).unwrap() < 1e-10);

        let id = mpo_matvec(&Mpo::identity(&cols).unwrap(), &v).unwrap();
        assert!(dense_vec(&id).max_abs_diff(&dense_vec(&v)).unwrap() < 1e-14);

        let tol = 0.1;
        let rounded = tt_round(&y, Some(&[3, 3]), tol).unwrap();
        assert!(rounded.ranks().iter().all(|&r| r <= 3));
        let exact = tt_round(&y, None, tol).unwrap();
        assert!(dense_vec(&exact).sub(&expect).unwrap().norm() <= tol * expect.norm() + 1e-12);
        assert!(mpo_matvec(&m, &TT::random(&[2, 2, 2], &[1, 1], 0).unwrap()).is_err());
    }
}

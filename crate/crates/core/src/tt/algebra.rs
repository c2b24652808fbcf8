//! Arithmetic on trains without forming the dense tensor.

use super::TT;
use crate::error::{shape_err, Result};
use crate::tensor::Tensor;

fn check_dims(a: &TT, b: &TT, what: &str) -> Result<()> {
    if a.dims() != b.dims() {
        return shape_err(format!("{what}: dims {:?} vs {:?}", a.dims(), b.dims()));
    }
    Ok(())
}

/// Sum of two trains. Cores are stacked block-diagonally, so the ranks add.
pub fn tt_add(a: &TT, b: &TT) -> Result<TT> {
    check_dims(a, b, "tt_add")?;
    let n = a.order();
    if n == 1 {
        return TT::new(vec![a.cores()[0].add(&b.cores()[0])?]);
    }
    let cores = a
        .cores()
        .iter()
        .zip(b.cores())
        .enumerate()
        .map(|(k, (x, y))| {
            let [ra0, d, ra1] = [x.shape()[0], x.shape()[1], x.shape()[2]];
            let [rb0, _, rb1] = [y.shape()[0], y.shape()[1], y.shape()[2]];
            let r0 = if k == 0 { 1 } else { ra0 + rb0 };
            let r1 = if k == n - 1 { 1 } else { ra1 + rb1 };
            // offsets of b's block
            let (o0, o1) = (if k == 0 { 0 } else { ra0 }, if k == n - 1 { 0 } else { ra1 });
            let mut out = Tensor::zeros(&[r0, d, r1]);
            let buf = out.data_mut();
            for i in 0..ra0 {
                for j in 0..d {
                    for l in 0..ra1 {
                        buf[(i * d + j) * r1 + l] += x.data()[(i * d + j) * ra1 + l];
                    }
                }
            }
            for i in 0..rb0 {
                for j in 0..d {
                    for l in 0..rb1 {
                        buf[((i + o0) * d + j) * r1 + l + o1] += y.data()[(i * d + j) * rb1 + l];
                    }
                }
            }
            out
        })
        .collect();
    TT::new(cores)
}

/// `c · a`, absorbed into the first core; ranks are unchanged.
pub fn tt_scale(a: &TT, c: f64) -> TT {
    let mut cores = a.cores().to_vec();
    cores[0] = cores[0].scale(c);
    TT::new(cores).unwrap()
}

/// Entrywise product. Core slices are Kronecker products, so ranks multiply.
pub fn tt_hadamard(a: &TT, b: &TT) -> Result<TT> {
    check_dims(a, b, "tt_hadamard")?;
    let cores = a
        .cores()
        .iter()
        .zip(b.cores())
        .map(|(x, y)| {
            let [ra0, d, ra1] = [x.shape()[0], x.shape()[1], x.shape()[2]];
            let [rb0, _, rb1] = [y.shape()[0], y.shape()[1], y.shape()[2]];
            Tensor::from_fn(&[ra0 * rb0, d, ra1 * rb1], |idx| {
                let (i, j) = (idx[0] / rb0, idx[0] % rb0);
                let (l, m) = (idx[2] / rb1, idx[2] % rb1);
                x.data()[(i * d + idx[1]) * ra1 + l] * y.data()[(j * d + idx[1]) * rb1 + m]
            })
        })
        .collect();
    TT::new(cores)
}

/// Inner product by the zipper order: the running `R_a × R_b` boundary
/// matrix absorbs one core of `a`, then the matching core of `b`.
pub fn tt_inner(a: &TT, b: &TT) -> Result<f64> {
    tt_inner_traced(a, b).map(|(v, _)| v)
}

/// [`tt_inner`] together with the largest intermediate it held, in entries.
/// The intermediate after absorbing a core of `a` has `R_b · d · R_a'`
/// entries, so the peak stays at `R² d` for trains of rank `R`.
pub fn tt_inner_traced(a: &TT, b: &TT) -> Result<(f64, usize)> {
    check_dims(a, b, "tt_inner")?;
    let mut m = vec![1.0];
    let (mut ra, mut rb) = (1, 1);
    let mut peak = 1;
    for (x, y) in a.cores().iter().zip(b.cores()) {
        let (d, ra1, rb1) = (x.shape()[1], x.shape()[2], y.shape()[2]);
        // w[s, j, r'] = Σ_r m[r, s] x[r, j, r']
        let mut w = vec![0.0; rb * d * ra1];
        for r in 0..ra {
            for s in 0..rb {
                let c = m[r * rb + s];
                if c == 0.0 {
                    continue;
                }
                let src = &x.data()[r * d * ra1..(r + 1) * d * ra1];
                let dst = &mut w[s * d * ra1..(s + 1) * d * ra1];
                for (o, v) in dst.iter_mut().zip(src) {
                    *o += c * v;
                }
            }
        }
        // m'[r', s'] = Σ_{s, j} w[s, j, r'] y[s, j, s']
        let mut next = vec![0.0; ra1 * rb1];
        for s in 0..rb {
            for j in 0..d {
                let yrow = &y.data()[(s * d + j) * rb1..(s * d + j + 1) * rb1];
                for r1 in 0..ra1 {
                    let c = w[(s * d + j) * ra1 + r1];
                    for (o, v) in next[r1 * rb1..(r1 + 1) * rb1].iter_mut().zip(yrow) {
                        *o += c * v;
                    }
                }
            }
        }
        peak = peak.max(w.len()).max(next.len());
        m = next;
        ra = ra1;
        rb = rb1;
    }
    Ok((m[0], peak))
}

pub fn tt_norm(a: &TT) -> f64 {
    tt_inner(a, a).unwrap().max(0.0).sqrt()
}

/// Sum of all entries: each core is summed over its physical index and the
/// resulting matrices are multiplied.
pub fn tt_sum_entries(a: &TT) -> f64 {
    let mut row = vec![1.0];
    for core in a.cores() {
        let (r0, d, r1) = (core.shape()[0], core.shape()[1], core.shape()[2]);
        let mut next = vec![0.0; r1];
        for (i, &x) in row.iter().enumerate().take(r0) {
            for j in 0..d {
                for (l, n) in next.iter_mut().enumerate() {
                    *n += x * core.data()[(i * d + j) * r1 + l];
                }
            }
        }
        row = next;
    }
    row[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{hadamard, inner};
    use crate::tt::tt_reconstruct;

    #[test]
    fn add_and_scale() {
        let a = TT::random(&[3, 2, 4], &[2, 3], 1).unwrap();
        let b = TT::random(&[3, 2, 4], &[1, 2], 2).unwrap();
        let s = tt_add(&a, &b).unwrap();
        assert_eq!(s.ranks(), vec![3, 5]);
        let expect = tt_reconstruct(&a).add(&tt_reconstruct(&b)).unwrap();
        assert!(tt_reconstruct(&s).max_abs_diff(&expect).unwrap() < 1e-14);
        let twice = tt_add(&a, &a).unwrap();
        assert!(tt_reconstruct(&twice).max_abs_diff(&tt_reconstruct(&a).scale(2.0)).unwrap() < 1e-14);
        let sc = tt_scale(&a, -1.5);
        assert_eq!(sc.ranks(), a.ranks());
        assert!(tt_reconstruct(&sc).max_abs_diff(&tt_reconstruct(&a).scale(-1.5)).unwrap() < 1e-14);
        let one = TT::random(&[4], &[], 3).unwrap();
        let one_sum = tt_add(&one, &one).unwrap();
        assert!(tt_reconstruct(&one_sum).max_abs_diff(&tt_reconstruct(&one).scale(2.0)).unwrap() < 1e-15);
        assert!(tt_add(&a, &TT::random(&[3, 2], &[2], 0).unwrap()).is_err());
    }

    #[test]
    fn hadamard_ranks_multiply() {
        let a = TT::random(&[3, 3, 3], &[2, 3], 4).unwrap();
        let b = TT::random(&[3, 3, 3], &[2, 2], 5).unwrap();
        let h = tt_hadamard(&a, &b).unwrap();
        assert_eq!(h.ranks(), vec![4, 6]);
        let expect = hadamard(&tt_reconstruct(&a), &tt_reconstruct(&b)).unwrap();
        assert!(tt_reconstruct(&h).max_abs_diff(&expect).unwrap() < 1e-13);
    }

    #[test]
    fn inner_norm_sum_match_dense() {
        let a = TT::random(&[3, 3, 3, 3], &[2, 2, 2], 6).unwrap();
        let b = TT::random(&[3, 3, 3, 3], &[2, 2, 2], 7).unwrap();
        let (da, db) = (tt_reconstruct(&a), tt_reconstruct(&b));
        let (v, peak) = tt_inner_traced(&a, &b).unwrap();
        assert!((v - inner(&da, &db).unwrap()).abs() < 1e-10);
        assert!(peak <= 2 * 2 * 3);
        assert!((tt_norm(&a) - da.norm()).abs() < 1e-10);
        assert!((tt_sum_entries(&a) - da.sum()).abs() < 1e-10);
    }
}

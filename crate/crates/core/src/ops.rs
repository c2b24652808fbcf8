//! Index-level tensor algebra: permutations, unfoldings, mode products,
//! inner/outer/Kronecker/Khatri-Rao/Hadamard products, traces and copy tensors.
//!
//! Public functions take 1-based modes. Helpers with a `0` suffix take
//! 0-based axes and are used by the contraction engine.

use crate::error::{shape_err, Error, Result};
use crate::tensor::{check_mode, strides, ModeSet, Tensor};

/// Axis permutation with 0-based `perm`: output axis `t` is input axis `perm[t]`.
pub(crate) fn permute0(t: &Tensor, perm: &[usize]) -> Tensor {
    let n = t.order();
    debug_assert_eq!(perm.len(), n);
    if perm.iter().enumerate().all(|(a, &b)| a == b) {
        return t.clone();
    }
    let in_strides = strides(t.shape());
    let out_shape: Vec<usize> = perm.iter().map(|&p| t.shape()[p]).collect();
    let step: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let src = t.data();
    let mut data = Vec::with_capacity(src.len());
    let mut idx = vec![0usize; n];
    let mut off = 0usize;
    loop {
        data.push(src[off]);
        // advance the output multi-index and keep the input offset in sync
        let mut k = n;
        loop {
            if k == 0 {
                return Tensor::new(out_shape, data).expect("permute preserves size");
            }
            k -= 1;
            idx[k] += 1;
            off += step[k];
            if idx[k] < out_shape[k] {
                break;
            }
            off -= step[k] * idx[k];
            idx[k] = 0;
        }
    }
}

/// Reorders the modes of `t`. `perm` is a 1-based permutation: output mode
/// `k` is input mode `perm[k]`.
pub fn permute(t: &Tensor, perm: &[usize]) -> Result<Tensor> {
    if perm.len() != t.order() {
        return shape_err(format!(
            "permutation of length {} for an order-{} tensor",
            perm.len(),
            t.order()
        ));
    }
    let mut seen = vec![false; perm.len()];
    let mut p0 = Vec::with_capacity(perm.len());
    for &p in perm {
        check_mode(p, t.order())?;
        if seen[p - 1] {
            return Err(Error::InvalidArgument(format!("mode {p} repeated in permutation")));
        }
        seen[p - 1] = true;
        p0.push(p - 1);
    }
    Ok(permute0(t, &p0))
}

/// Unfolding with the modes in `rows` mapped (ascending, lexicographically)
/// to rows and the remaining modes to columns.
pub fn matricize(t: &Tensor, rows: &ModeSet) -> Result<Tensor> {
    rows.check(t.order())?;
    let cols = rows.complement(t.order());
    let perm: Vec<usize> = rows.modes().iter().chain(&cols).map(|m| m - 1).collect();
    let r: usize = rows.modes().iter().map(|&m| t.shape()[m - 1]).product();
    let c: usize = cols.iter().map(|&m| t.shape()[m - 1]).product();
    permute0(t, &perm).into_reshape(&[r, c])
}

/// Mode-`n` unfolding, shorthand for `matricize(t, {n})`.
pub fn unfold(t: &Tensor, mode: usize) -> Result<Tensor> {
    matricize(t, &ModeSet::single(mode)?)
}

pub fn vectorize(t: &Tensor) -> Tensor {
    Tensor::vector(t.data())
}

fn require_matrix(m: &Tensor, what: &str) -> Result<(usize, usize)> {
    if m.order() != 2 {
        return shape_err(format!("{what}: expected a matrix, got shape {:?}", m.shape()));
    }
    Ok((m.shape()[0], m.shape()[1]))
}

/// Dense matrix product.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = require_matrix(a, "matmul")?;
    let (k2, n) = require_matrix(b, "matmul")?;
    if k != k2 {
        return shape_err(format!("matmul: {m}x{k} times {k2}x{n}"));
    }
    Ok(Tensor::new(vec![m, n], matmul_raw(a.data(), b.data(), m, k, n)).unwrap())
}

pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
    out
}

pub fn transpose(a: &Tensor) -> Result<Tensor> {
    require_matrix(a, "transpose")?;
    Ok(permute0(a, &[1, 0]))
}

pub fn trace(a: &Tensor) -> Result<f64> {
    let (m, n) = require_matrix(a, "trace")?;
    if m != n {
        return shape_err(format!("trace of a non-square {m}x{n} matrix"));
    }
    Ok((0..m).map(|i| a.data()[i * n + i]).sum())
}

/// Contracts 0-based axes `axes_a` of `a` with `axes_b` of `b`. The result
/// carries the free axes of `a` followed by the free axes of `b`.
pub(crate) fn tensordot0(a: &Tensor, axes_a: &[usize], b: &Tensor, axes_b: &[usize]) -> Result<Tensor> {
    if axes_a.len() != axes_b.len() {
        return shape_err("tensordot: axis lists differ in length");
    }
    for (&x, &y) in axes_a.iter().zip(axes_b) {
        if a.shape()[x] != b.shape()[y] {
            return shape_err(format!(
                "tensordot: contracted dimensions {} and {} differ",
                a.shape()[x],
                b.shape()[y]
            ));
        }
    }
    let free_a: Vec<usize> = (0..a.order()).filter(|x| !axes_a.contains(x)).collect();
    let free_b: Vec<usize> = (0..b.order()).filter(|x| !axes_b.contains(x)).collect();
    let pa: Vec<usize> = free_a.iter().chain(axes_a).copied().collect();
    let pb: Vec<usize> = axes_b.iter().chain(&free_b).copied().collect();
    let m: usize = free_a.iter().map(|&x| a.shape()[x]).product();
    let k: usize = axes_a.iter().map(|&x| a.shape()[x]).product();
    let n: usize = free_b.iter().map(|&x| b.shape()[x]).product();
    let at = permute0(a, &pa);
    let bt = permute0(b, &pb);
    let data = matmul_raw(at.data(), bt.data(), m, k, n);
    let shape: Vec<usize> = free_a
        .iter()
        .map(|&x| a.shape()[x])
        .chain(free_b.iter().map(|&x| b.shape()[x]))
        .collect();
    Ok(Tensor::new(shape, data).unwrap())
}

/// Mode-`n` product `X ×_n M` with `M` of shape `m × d_n`; mode `n` of the
/// result has dimension `m`.
pub fn mode_n_matrix_product(x: &Tensor, m: &Tensor, mode: usize) -> Result<Tensor> {
    check_mode(mode, x.order())?;
    let (_, c) = require_matrix(m, "mode-n product")?;
    if c != x.shape()[mode - 1] {
        return shape_err(format!(
            "mode-{mode} product: matrix has {c} columns, mode has dimension {}",
            x.shape()[mode - 1]
        ));
    }
    // result axes: [m, other modes of x...]; move the first back into place
    let y = tensordot0(m, &[1], x, &[mode - 1])?;
    let mut perm: Vec<usize> = (1..x.order()).collect();
    perm.insert(mode - 1, 0);
    Ok(permute0(&y, &perm))
}

/// Mode-`n` vector product; the result has order `N - 1`.
pub fn mode_n_vector_product(x: &Tensor, v: &Tensor, mode: usize) -> Result<Tensor> {
    check_mode(mode, x.order())?;
    if v.order() != 1 || v.len() != x.shape()[mode - 1] {
        return shape_err(format!(
            "mode-{mode} vector product: vector shape {:?}, mode dimension {}",
            v.shape(),
            x.shape()[mode - 1]
        ));
    }
    tensordot0(x, &[mode - 1], v, &[0])
}

pub fn inner(a: &Tensor, b: &Tensor) -> Result<f64> {
    if a.shape() != b.shape() {
        return shape_err(format!("inner: shapes {:?} and {:?}", a.shape(), b.shape()));
    }
    Ok(a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum())
}

pub fn outer(a: &Tensor, b: &Tensor) -> Tensor {
    let mut data = Vec::with_capacity(a.len() * b.len());
    for &x in a.data() {
        data.extend(b.data().iter().map(|&y| x * y));
    }
    let shape = a.shape().iter().chain(b.shape()).copied().collect();
    Tensor::new(shape, data).unwrap()
}

/// Sums the diagonal over the 1-based modes `m1` and `m2`.
pub fn partial_trace(t: &Tensor, m1: usize, m2: usize) -> Result<Tensor> {
    check_mode(m1, t.order())?;
    check_mode(m2, t.order())?;
    if m1 == m2 {
        return Err(Error::InvalidArgument("partial trace needs two distinct modes".into()));
    }
    let (a, b) = (m1.min(m2) - 1, m1.max(m2) - 1);
    let d = t.shape()[a];
    if t.shape()[b] != d {
        return shape_err(format!(
            "partial trace over modes of dimension {d} and {}",
            t.shape()[b]
        ));
    }
    let out_shape: Vec<usize> = (0..t.order())
        .filter(|&k| k != a && k != b)
        .map(|k| t.shape()[k])
        .collect();
    let st = strides(t.shape());
    let diag_step = st[a] + st[b];
    let rest: Vec<usize> = (0..t.order()).filter(|&k| k != a && k != b).collect();
    Ok(Tensor::from_fn(&out_shape, |idx| {
        let base: usize = idx.iter().zip(&rest).map(|(&i, &k)| i * st[k]).sum();
        (0..d).map(|i| t.data()[base + i * diag_step]).sum()
    }))
}

/// Kronecker product of equal-order tensors: mode `k` has dimension
/// `a_k * b_k` with grouped index `i_k * b_k + j_k`.
pub fn kronecker(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.order() != b.order() {
        return shape_err(format!(
            "kronecker: orders {} and {} differ",
            a.order(),
            b.order()
        ));
    }
    let n = a.order();
    // outer product has axes (a_1..a_N, b_1..b_N); interleave to (a_1,b_1,..)
    let o = outer(a, b);
    let perm: Vec<usize> = (0..n).flat_map(|k| [k, n + k]).collect();
    let shape: Vec<usize> = a.shape().iter().zip(b.shape()).map(|(x, y)| x * y).collect();
    permute0(&o, &perm).into_reshape(&shape)
}

/// Column-wise Kronecker product of `m × R` and `n × R` matrices.
pub fn khatri_rao(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, r) = require_matrix(a, "khatri-rao")?;
    let (n, r2) = require_matrix(b, "khatri-rao")?;
    if r != r2 {
        return shape_err(format!("khatri-rao: column counts {r} and {r2} differ"));
    }
    let mut data = vec![0.0; m * n * r];
    for i in 0..m {
        for j in 0..n {
            for c in 0..r {
                data[(i * n + j) * r + c] = a.data()[i * r + c] * b.data()[j * r + c];
            }
        }
    }
    Tensor::new(vec![m * n, r], data)
}

/// Khatri-Rao product of a non-empty list, left to right.
pub fn khatri_rao_all(mats: &[&Tensor]) -> Result<Tensor> {
    let (first, rest) = mats
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("khatri-rao of an empty list".into()))?;
    rest.iter().try_fold((*first).clone(), |acc, m| khatri_rao(&acc, m))
}

pub fn hadamard(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.mul_entries(b)
}

/// Order-`order` hyper-diagonal tensor of side `dim` (generalized Kronecker delta).
pub fn copy_tensor(order: usize, dim: usize) -> Result<Tensor> {
    if order == 0 || dim == 0 {
        return Err(Error::InvalidArgument("copy tensor needs order >= 1 and dim >= 1".into()));
    }
    let shape = vec![dim; order];
    let mut t = Tensor::zeros(&shape);
    let step: usize = strides(&shape).iter().sum();
    for i in 0..dim {
        t.data_mut()[i * step] = 1.0;
    }
    Ok(t)
}

pub fn diag_embed(v: &Tensor) -> Result<Tensor> {
    if v.order() != 1 {
        return shape_err(format!("diag_embed expects a vector, got {:?}", v.shape()));
    }
    let n = v.len();
    let mut t = Tensor::zeros(&[n, n]);
    for i in 0..n {
        t.data_mut()[i * n + i] = v.data()[i];
    }
    Ok(t)
}

pub fn diag_extract(a: &Tensor) -> Result<Tensor> {
    let (m, n) = require_matrix(a, "diag_extract")?;
    if m != n {
        return shape_err(format!("diag_extract of a non-square {m}x{n} matrix"));
    }
    Ok(Tensor::vector(
        &(0..n).map(|i| a.data()[i * n + i]).collect::<Vec<_>>(),
    ))
}

/// Evaluates the polynomial `T ×_1 x ×_2 x … ×_N x`. When `homogeneous` is
/// false every mode of `T` must have dimension `len(x) + 1` and a constant
/// 1 is appended to `x`.
pub fn poly_eval(t: &Tensor, x: &Tensor, homogeneous: bool) -> Result<f64> {
    if x.order() != 1 {
        return shape_err("poly_eval: input must be a vector");
    }
    let xv: Vec<f64> = if homogeneous {
        x.data().to_vec()
    } else {
        x.data().iter().copied().chain(std::iter::once(1.0)).collect()
    };
    let d = xv.len();
    if t.shape().iter().any(|&s| s != d) {
        return shape_err(format!(
            "poly_eval: coefficient tensor {:?} does not match input length {d}{}",
            t.shape(),
            if homogeneous { "" } else { " (after appending 1)" }
        ));
    }
    let xv = Tensor::vector(&xv);
    // contract the last mode repeatedly
    let mut acc = t.clone();
    while acc.order() > 0 {
        let n = acc.order();
        acc = mode_n_vector_product(&acc, &xv, n)?;
    }
    acc.as_scalar()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(shape: &[usize]) -> Tensor {
        let n: usize = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|x| x as f64 * 0.5 - 1.0).collect()).unwrap()
    }

    #[test]
    fn permute_transposes_matrix() {
        let a = Tensor::matrix(2, 3, &[1., 2., 3., 4., 5., 6.]).unwrap();
        let t = permute(&a, &[2, 1]).unwrap();
        assert_eq!(t.shape(), &[3, 2]);
        assert_eq!(t.data(), &[1., 4., 2., 5., 3., 6.]);
        assert_eq!(permute(&a, &[1, 2]).unwrap(), a);
    }

    #[test]
    fn permute_matches_enumeration() {
        let t = Tensor::from_fn(&[2, 3, 4], |i| (100 * i[0] + 10 * i[1] + i[2]) as f64);
        let p = permute(&t, &[3, 1, 2]).unwrap();
        assert_eq!(p.shape(), &[4, 2, 3]);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(p.get(&[k, i, j]).unwrap(), (100 * i + 10 * j + k) as f64);
                }
            }
        }
    }

    #[test]
    fn permute_errors() {
        let t = seq(&[2, 2, 2]);
        assert!(permute(&t, &[1, 2]).is_err());
        assert!(permute(&t, &[1, 1, 2]).is_err());
        assert!(permute(&t, &[1, 2, 4]).is_err());
    }

    #[test]
    fn matricize_mode_one_rows() {
        let t = seq(&[2, 3, 4]);
        let m = unfold(&t, 1).unwrap();
        assert_eq!(m.shape(), &[2, 12]);
        assert_eq!(&m.data()[..12], &t.data()[..12]);
        let a = seq(&[3, 2]);
        assert_eq!(unfold(&a, 1).unwrap(), a);
        assert!(matricize(&t, &ModeSet::new(&[4]).unwrap()).is_err());
    }

    #[test]
    fn vectorize_basics() {
        let a = Tensor::matrix(2, 2, &[1., 2., 3., 4.]).unwrap();
        assert_eq!(vectorize(&a).data(), &[1., 2., 3., 4.]);
        assert_eq!(vectorize(&Tensor::scalar(7.)).shape(), &[1]);
        let uv = outer(&Tensor::vector(&[1., 2.]), &Tensor::vector(&[3., 4.]));
        assert_eq!(vectorize(&uv).data(), &[3., 4., 6., 8.]);
    }

    #[test]
    fn mode_product_matrix_case() {
        let a = seq(&[2, 3]);
        let b = seq(&[5, 3]);
        let y = mode_n_matrix_product(&a, &b, 2).unwrap();
        let expect = matmul(&a, &transpose(&b).unwrap()).unwrap();
        assert!(y.max_abs_diff(&expect).unwrap() < 1e-14);
        let x = seq(&[2, 3, 4]);
        assert_eq!(mode_n_matrix_product(&x, &Tensor::eye(3), 2).unwrap(), x);
        assert!(mode_n_matrix_product(&x, &b, 3).is_err());
    }

    #[test]
    fn mode_vector_product_basics() {
        let a = seq(&[2, 3]);
        let v = Tensor::vector(&[1., -1., 2.]);
        let y = mode_n_vector_product(&a, &v, 2).unwrap();
        let expect = matmul(&a, &v.reshape(&[3, 1]).unwrap()).unwrap();
        assert_eq!(y.data(), expect.data());
        let x = seq(&[2, 3, 4]);
        let e = Tensor::vector(&[0., 1., 0.]);
        assert_eq!(mode_n_vector_product(&x, &e, 2).unwrap(), x.select(2, 1).unwrap());
    }

    #[test]
    fn inner_outer_basics() {
        let u = Tensor::vector(&[1., 2.]);
        let v = Tensor::vector(&[3., 4.]);
        assert_eq!(inner(&u, &v).unwrap(), 11.0);
        assert!(inner(&u, &seq(&[3])).is_err());
        assert_eq!(outer(&u, &v).data(), &[3., 4., 6., 8.]);
        let t = seq(&[2, 2]);
        assert_eq!(outer(&Tensor::scalar(2.0), &t), t.scale(2.0));
    }

    #[test]
    fn traces() {
        assert_eq!(partial_trace(&Tensor::eye(3), 1, 2).unwrap().as_scalar().unwrap(), 3.0);
        assert!(partial_trace(&seq(&[2, 3]), 1, 2).is_err());
        assert!(partial_trace(&seq(&[2, 2]), 1, 1).is_err());
    }

    #[test]
    fn kronecker_block_formula() {
        let a = Tensor::matrix(2, 2, &[1., 2., 3., 4.]).unwrap();
        let b = Tensor::matrix(2, 2, &[0., 1., 1., 0.]).unwrap();
        let k = kronecker(&a, &b).unwrap();
        #[rustfmt::skip]
        let expect = [
            0., 1., 0., 2.,
            1., 0., 2., 0.,
            0., 3., 0., 4.,
            3., 0., 4., 0.,
        ];
        assert_eq!(k.data(), &expect);
        assert_eq!(kronecker(&Tensor::eye(2), &Tensor::eye(3)).unwrap(), Tensor::eye(6));
        assert!(kronecker(&a, &seq(&[2])).is_err());
    }

    #[test]
    fn khatri_rao_columns() {
        let a = Tensor::matrix(2, 1, &[1., 2.]).unwrap();
        let b = Tensor::matrix(2, 1, &[3., 4.]).unwrap();
        assert_eq!(khatri_rao(&a, &b).unwrap().data(), &[3., 4., 6., 8.]);
        assert!(khatri_rao(&a, &seq(&[2, 2])).is_err());
    }

    #[test]
    fn hadamard_and_copy() {
        let a = Tensor::matrix(2, 2, &[1., 2., 3., 4.]).unwrap();
        let b = Tensor::matrix(2, 2, &[0., 1., 1., 0.]).unwrap();
        assert_eq!(hadamard(&a, &b).unwrap().data(), &[0., 2., 3., 0.]);
        let c = copy_tensor(3, 3).unwrap();
        assert_eq!(hadamard(&c, &c).unwrap(), c);
        assert_eq!(copy_tensor(1, 4).unwrap(), Tensor::ones(&[4]));
        assert_eq!(copy_tensor(2, 4).unwrap(), Tensor::eye(4));
        assert!(copy_tensor(0, 2).is_err());
    }

    #[test]
    fn copy_tensor_copies_basis_vectors() {
        let c = copy_tensor(3, 3).unwrap();
        for i in 0..3 {
            let mut e = Tensor::zeros(&[3]);
            e.data_mut()[i] = 1.0;
            let got = mode_n_vector_product(&c, &e, 3).unwrap();
            assert_eq!(got, outer(&e, &e));
        }
    }

    #[test]
    fn diag_round_trip() {
        let v = Tensor::vector(&[1., 2.]);
        assert_eq!(diag_embed(&v).unwrap().data(), &[1., 0., 0., 2.]);
        let a = Tensor::matrix(2, 2, &[1., 2., 3., 4.]).unwrap();
        assert_eq!(diag_extract(&a).unwrap().data(), &[1., 4.]);
        assert_eq!(diag_extract(&diag_embed(&v).unwrap()).unwrap(), v);
        assert!(diag_extract(&seq(&[2, 3])).is_err());
    }

    #[test]
    fn poly_eval_cases() {
        let x = Tensor::vector(&[0.3, -2.0, 1.5]);
        let q = poly_eval(&copy_tensor(2, 3).unwrap(), &x, true).unwrap();
        assert!((q - x.norm().powi(2)).abs() < 1e-14);
        let mut t = Tensor::zeros(&[3, 3]);
        t.set(&[0, 0], 1.0).unwrap();
        let x2 = Tensor::vector(&[1.7, -0.4]);
        assert!((poly_eval(&t, &x2, false).unwrap() - 1.7 * 1.7).abs() < 1e-14);
        assert!(poly_eval(&t, &x2, true).is_err());
        assert!(poly_eval(&seq(&[2, 3]), &Tensor::vector(&[1., 1.]), true).is_err());
    }
}

//! Derivatives of tensor networks with respect to one of their tensors.
//!
//! The derivative of a contraction with respect to a tensor that occurs once
//! is the network with that node removed; its legs become extra dangling
//! legs. A tensor occurring `k` times gives `k` such networks, one per
//! occurrence, whose contractions add up.

use crate::error::{shape_err, Error, Result};
use crate::network::{Bindings, NetworkSpec, TensorNetwork};
use crate::ops::{matmul, permute0};
use crate::tensor::Tensor;
use crate::tt::Mpo;

/// Jacobian of a network with respect to one tensor, kept as a sum of
/// networks. Each summand has the original outputs followed by the legs of
/// the removed occurrence, in the tensor's mode order.
#[derive(Debug, Clone)]
pub struct JacobianNetwork {
    summands: Vec<TensorNetwork>,
    shape: Vec<usize>,
}

impl JacobianNetwork {
    pub fn summands(&self) -> &[TensorNetwork] {
        &self.summands
    }

    /// Output shape followed by the differentiated tensor's shape.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Contracts every summand and adds them in order.
    pub fn contract(&self) -> Result<Tensor> {
        let mut total = Tensor::zeros(&self.shape);
        for net in &self.summands {
            total = total.add(&net.contract()?)?;
        }
        Ok(total)
    }
}

/// Jacobian of `net` with respect to the tensor bound to `name`.
pub fn jacobian_wrt_node(net: &TensorNetwork, name: &str) -> Result<JacobianNetwork> {
    let ids = net.nodes_named(name);
    let first = *ids.first().ok_or_else(|| Error::UnknownName(name.to_string()))?;
    let summands = ids
        .iter()
        .map(|&id| net.without_node(id))
        .collect::<Result<Vec<_>>>()?;
    let mut shape = net.output_shape();
    shape.extend_from_slice(net.tensors()[first].shape());
    Ok(JacobianNetwork { summands, shape })
}

/// Gradient of a scalar-valued network with respect to `name`; it has the
/// shape of that tensor.
pub fn loss_gradient(net: &TensorNetwork, name: &str) -> Result<Tensor> {
    if !net.output().is_empty() {
        return Err(Error::InvalidArgument(format!(
            "loss_gradient needs a scalar network, output is {:?}",
            net.output()
        )));
    }
    jacobian_wrt_node(net, name)?.contract()
}

/// Central-difference Jacobian with the same layout as
/// [`jacobian_wrt_node`]. Every occurrence of `name` is perturbed together.
pub fn finite_diff_jacobian(net: &TensorNetwork, name: &str, step: f64) -> Result<Tensor> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step {step} must be positive")));
    }
    let ids = net.nodes_named(name);
    let base = net
        .tensors()
        .get(*ids.first().ok_or_else(|| Error::UnknownName(name.to_string()))?)
        .unwrap()
        .clone();
    let eval = |t: &Tensor| -> Result<Tensor> {
        let mut n = net.clone();
        for &id in &ids {
            n = n.with_tensor(id, t.clone())?;
        }
        n.contract()
    };
    let out_shape = net.output_shape();
    let out_len: usize = out_shape.iter().product();
    let mut data = vec![0.0; out_len * base.len()];
    for e in 0..base.len() {
        let mut plus = base.clone();
        plus.data_mut()[e] += step;
        let mut minus = base.clone();
        minus.data_mut()[e] -= step;
        let (fp, fm) = (eval(&plus)?, eval(&minus)?);
        for o in 0..out_len {
            data[o * base.len() + e] = (fp.data()[o] - fm.data()[o]) / (2.0 * step);
        }
    }
    let mut shape = out_shape;
    shape.extend_from_slice(base.shape());
    Tensor::new(shape, data)
}

/// Chain rule for Jacobians: `outer` has shape `(out…, mid…)` and `inner`
/// has shape `(mid…, param…)`, where `mid` spans the last `mid_order` modes of
/// `outer` and the first `mid_order` modes of `inner`.
pub fn chain_rule(outer: &Tensor, inner: &Tensor, mid_order: usize) -> Result<Tensor> {
    if mid_order > outer.order() || mid_order > inner.order() {
        return shape_err("chain_rule: mid_order exceeds a tensor order");
    }
    let split = outer.order() - mid_order;
    let (out, mid) = outer.shape().split_at(split);
    if mid != &inner.shape()[..mid_order] {
        return shape_err(format!(
            "chain_rule: intermediate shapes {:?} and {:?} differ",
            mid,
            &inner.shape()[..mid_order]
        ));
    }
    let param = &inner.shape()[mid_order..];
    let (o, m, p) = (
        out.iter().product::<usize>(),
        mid.iter().product::<usize>(),
        param.iter().product::<usize>(),
    );
    let prod = matmul(&outer.reshape(&[o, m])?, &inner.reshape(&[m, p])?)?;
    let shape: Vec<usize> = out.iter().chain(param).copied().collect();
    prod.into_reshape(&shape)
}

/// A scalar function written as `Σ c_t · contract(network_t)`, such as an
/// expanded squared loss `‖XW‖² − 2⟨XW, Y⟩ + ‖Y‖²`. Each network must have an
/// empty output.
#[derive(Debug, Clone, Default)]
pub struct NetworkSum {
    terms: Vec<(f64, NetworkSpec)>,
}

impl NetworkSum {
    pub fn new() -> Self {
        NetworkSum::default()
    }

    pub fn term(mut self, coeff: f64, spec: NetworkSpec) -> Result<Self> {
        if !spec.output().is_empty() {
            return Err(Error::InvalidArgument(format!(
                "network sum terms must be scalar, `{spec}` is not"
            )));
        }
        self.terms.push((coeff, spec));
        Ok(self)
    }

    /// Adds a term given in text form.
    pub fn parse_term(self, coeff: f64, text: &str) -> Result<Self> {
        self.term(coeff, NetworkSpec::parse(text)?)
    }

    pub fn terms(&self) -> &[(f64, NetworkSpec)] {
        &self.terms
    }

    pub fn value(&self, bindings: &Bindings) -> Result<f64> {
        let mut total = 0.0;
        for (c, spec) in &self.terms {
            total += c * spec.contract(bindings)?.as_scalar()?;
        }
        Ok(total)
    }

    /// Gradient with respect to `name`; terms that do not mention it
    /// contribute nothing.
    pub fn gradient(&self, bindings: &Bindings, name: &str) -> Result<Tensor> {
        let target = bindings
            .get(name)
            .ok_or_else(|| Error::UnknownName(name.to_string()))?;
        let mut total = Tensor::zeros(target.shape());
        for (c, spec) in &self.terms {
            if spec.occurrences(name).is_empty() {
                continue;
            }
            let g = loss_gradient(&spec.bind(bindings)?, name)?;
            total = total.add(&g.scale(*c))?;
        }
        Ok(total)
    }
}

/// `‖A − T‖²_F` for order-`n` tensors bound to `a` and `t`.
pub fn frobenius_loss(a: &str, t: &str, order: usize) -> Result<NetworkSum> {
    let idx: Vec<String> = (1..=order).map(|k| format!("i{k}")).collect();
    let legs = idx.join(",");
    NetworkSum::new()
        .parse_term(1.0, &format!("{a}[{legs}] {a}[{legs}] -> []"))?
        .parse_term(-2.0, &format!("{a}[{legs}] {t}[{legs}] -> []"))?
        .parse_term(1.0, &format!("{t}[{legs}] {t}[{legs}] -> []"))
}

/// `‖T − [[G_1, …, G_N]]‖²_F` with the target bound to `target` and the
/// factors to `factors[n]`.
pub fn cp_loss_network(target: &str, factors: &[&str]) -> Result<NetworkSum> {
    let n = factors.len();
    if n == 0 {
        return Err(Error::InvalidArgument("CP loss needs at least one factor".into()));
    }
    let idx: Vec<String> = (1..=n).map(|k| format!("i{k}")).collect();
    let model = |r: &str| -> String {
        factors
            .iter()
            .zip(&idx)
            .map(|(f, i)| format!("{f}[{i},{r}]"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let t = format!("{target}[{}]", idx.join(","));
    NetworkSum::new()
        .parse_term(1.0, &format!("{t} {t} -> []"))?
        .parse_term(-2.0, &format!("{t} {} -> []", model("r")))?
        .parse_term(1.0, &format!("{} {} -> []", model("r"), model("s")))
}

/// Gradient of a loss through the layer `y = W x`, where `W` is the matrix
/// of an MPO with cores `R_{k-1} × p_k × d_k × R_k`, `x` has `∏ d_k` entries
/// and `upstream = ∂L/∂y` has `∏ p_k` entries. Returns `∂L/∂W_k` for the
/// 1-based core `k` with modes ordered `(R_{k-1}, p_k, R_k, d_k)`; apply
/// [`mpo_grad_to_core_layout`] to line it up with the core itself.
pub fn mpo_layer_grad(w: &Mpo, x: &Tensor, upstream: &Tensor, k: usize) -> Result<Tensor> {
    let n = w.order();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("core {k} outside 1..={n}")));
    }
    let (p, d) = (w.row_dims(), w.col_dims());
    if x.len() != d.iter().product::<usize>() || upstream.len() != p.iter().product::<usize>() {
        return shape_err(format!(
            "layer maps {} inputs to {} outputs; got x with {} and upstream with {} entries",
            d.iter().product::<usize>(),
            p.iter().product::<usize>(),
            x.len(),
            upstream.len()
        ));
    }
    let mut bindings = Bindings::new();
    let mut terms = Vec::new();
    let ps: Vec<String> = (1..=n).map(|s| format!("p{s}")).collect();
    let ds: Vec<String> = (1..=n).map(|s| format!("d{s}")).collect();
    for (s, core) in w.cores().iter().enumerate() {
        let sh = core.shape();
        // boundary ranks are 1 and are dropped from the network
        let mut legs = Vec::new();
        let mut dims = Vec::new();
        if s > 0 {
            legs.push(format!("r{s}"));
            dims.push(sh[0]);
        }
        legs.push(ps[s].clone());
        legs.push(ds[s].clone());
        dims.extend([sh[1], sh[2]]);
        if s + 1 < n {
            legs.push(format!("r{}", s + 1));
            dims.push(sh[3]);
        }
        let name = format!("W{}", s + 1);
        terms.push(format!("{name}[{}]", legs.join(",")));
        bindings.insert(name, core.reshape(&dims)?);
    }
    terms.push(format!("X[{}]", ds.join(",")));
    terms.push(format!("G[{}]", ps.join(",")));
    bindings.insert("X".into(), x.reshape(&d)?);
    bindings.insert("G".into(), upstream.reshape(&p)?);
    let spec = NetworkSpec::parse(&format!("{} -> []", terms.join(" ")))?;
    let grad = loss_gradient(&spec.bind(&bindings)?, &format!("W{k}"))?;
    let sh = w.cores()[k - 1].shape();
    let core_layout = grad.into_reshape(sh)?;
    Ok(permute0(&core_layout, &[0, 1, 3, 2]))
}

/// Reorders an `(R_{k-1}, p_k, R_k, d_k)` gradient into the core layout
/// `(R_{k-1}, p_k, d_k, R_k)`.
pub fn mpo_grad_to_core_layout(g: &Tensor) -> Result<Tensor> {
    if g.order() != 4 {
        return shape_err(format!("expected an order-4 gradient, got {:?}", g.shape()));
    }
    Ok(permute0(g, &[0, 1, 3, 2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{cp_gradient, CpForm};
    use crate::ops::{khatri_rao, matmul, outer, transpose, unfold};
    use crate::random::uniform_tensor;
    use crate::tt::mpo_reconstruct;

    fn bind(pairs: &[(&str, Tensor)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    fn net(text: &str, b: &Bindings) -> TensorNetwork {
        NetworkSpec::parse(text).unwrap().bind(b).unwrap()
    }

    fn rel(a: &Tensor, b: &Tensor) -> f64 {
        a.sub(b).unwrap().norm() / b.norm().max(1e-300)
    }

    #[test]
    fn matrix_vector_wrt_matrix_is_identity_outer_x() {
        let x = Tensor::vector(&[1., -2., 3.]);
        let b = bind(&[("A", uniform_tensor(&[2, 3], -1., 1., 1)), ("x", x.clone())]);
        let j = jacobian_wrt_node(&net("A[i,j] x[j] -> [i]", &b), "A").unwrap();
        assert_eq!(j.summands().len(), 1);
        assert_eq!(j.shape(), &[2, 2, 3]);
        let expect = outer(&Tensor::eye(2), &x);
        assert!(j.contract().unwrap().max_abs_diff(&expect).unwrap() < 1e-14);
    }

    #[test]
    fn quadratic_form_has_two_summands() {
        let a = uniform_tensor(&[3, 3], -1., 1., 2);
        let x = uniform_tensor(&[3], -1., 1., 3);
        let b = bind(&[("A", a.clone()), ("x", x.clone())]);
        let n = net("x[i] A[i,j] x[j] -> []", &b);
        let j = jacobian_wrt_node(&n, "x").unwrap();
        assert_eq!(j.summands().len(), 2);
        let sym = a.add(&transpose(&a).unwrap()).unwrap();
        let expect = matmul(&sym, &x.reshape(&[3, 1]).unwrap()).unwrap().into_reshape(&[3]).unwrap();
        assert!(j.contract().unwrap().max_abs_diff(&expect).unwrap() < 1e-12);
        let fd = finite_diff_jacobian(&n, "x", 1e-5).unwrap();
        assert!(rel(&fd, &expect) < 1e-6);
    }

    #[test]
    fn trace_wrt_matrix_is_identity() {
        let b = bind(&[("A", uniform_tensor(&[3, 3], -1., 1., 4))]);
        let g = loss_gradient(&net("A[i,i] -> []", &b), "A").unwrap();
        assert_eq!(g, Tensor::eye(3));
    }

    #[test]
    fn inner_product_wrt_u_is_v() {
        let v = Tensor::vector(&[0.5, -1.0, 2.0]);
        let b = bind(&[("u", Tensor::vector(&[1., 2., 3.])), ("v", v.clone())]);
        assert_eq!(loss_gradient(&net("u[i] v[i] -> []", &b), "u").unwrap(), v);
        assert!(loss_gradient(&net("u[i] v[j] -> [i,j]", &b), "u").is_err());
        assert!(jacobian_wrt_node(&net("u[i] v[i] -> []", &b), "w").is_err());
    }

    #[test]
    fn least_squares_gradient() {
        let x = uniform_tensor(&[4, 3], -1., 1., 5);
        let w = uniform_tensor(&[3, 2], -1., 1., 6);
        let y = uniform_tensor(&[4, 2], -1., 1., 7);
        let b = bind(&[("X", x.clone()), ("W", w.clone()), ("Y", y.clone())]);
        // Y = 0: a single network with W occurring twice
        let g = loss_gradient(&net("X[a,i] W[i,j] X[a,k] W[k,j] -> []", &b), "W").unwrap();
        let xtx = matmul(&transpose(&x).unwrap(), &x).unwrap();
        let expect = matmul(&xtx, &w).unwrap().scale(2.0);
        assert!(g.max_abs_diff(&expect).unwrap() < 1e-12);
        // general Y through an expanded sum
        let loss = NetworkSum::new()
            .parse_term(1.0, "X[a,i] W[i,j] X[a,k] W[k,j] -> []")
            .unwrap()
            .parse_term(-2.0, "X[a,i] W[i,j] Y[a,j] -> []")
            .unwrap()
            .parse_term(1.0, "Y[a,j] Y[a,j] -> []")
            .unwrap();
        let resid = matmul(&x, &w).unwrap().sub(&y).unwrap();
        assert!((loss.value(&b).unwrap() - resid.norm().powi(2)).abs() < 1e-12);
        let expect = matmul(&transpose(&x).unwrap(), &resid).unwrap().scale(2.0);
        assert!(loss.gradient(&b, "W").unwrap().max_abs_diff(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn frobenius_loss_gradient() {
        let a = uniform_tensor(&[2, 3, 2], -1., 1., 8);
        let t = uniform_tensor(&[2, 3, 2], -1., 1., 9);
        let b = bind(&[("A", a.clone()), ("T", t.clone())]);
        let loss = frobenius_loss("A", "T", 3).unwrap();
        let g = loss.gradient(&b, "T").unwrap();
        assert!(g.max_abs_diff(&t.sub(&a).unwrap().scale(2.0)).unwrap() < 1e-12);
    }

    #[test]
    fn cp_loss_gradient_matches_closed_form() {
        let t = uniform_tensor(&[3, 2, 4], -1., 1., 10);
        let g: Vec<Tensor> = [3, 2, 4]
            .iter()
            .enumerate()
            .map(|(k, &d)| uniform_tensor(&[d, 2], -1., 1., 11 + k as u64))
            .collect();
        let b = bind(&[("T", t.clone()), ("G1", g[0].clone()), ("G2", g[1].clone()), ("G3", g[2].clone())]);
        let loss = cp_loss_network("T", &["G1", "G2", "G3"]).unwrap();
        let net_grad = loss.gradient(&b, "G1").unwrap();
        let cp = CpForm::new(g.clone()).unwrap();
        // 2([[G]] - T)_(1) (G2 ⊙ G3)
        let resid = cp.reconstruct().sub(&t).unwrap();
        let closed = matmul(&unfold(&resid, 1).unwrap(), &khatri_rao(&g[1], &g[2]).unwrap())
            .unwrap()
            .scale(2.0);
        assert!(net_grad.max_abs_diff(&closed).unwrap() < 1e-10);
        assert!(cp_gradient(&t, &cp).unwrap()[0].max_abs_diff(&closed).unwrap() < 1e-10);
    }

    #[test]
    fn chain_rule_composes_linear_maps() {
        let a = uniform_tensor(&[2, 3], -1., 1., 20);
        let b = uniform_tensor(&[3, 4], -1., 1., 21);
        assert!(chain_rule(&a, &b, 1).unwrap().max_abs_diff(&matmul(&a, &b).unwrap()).unwrap() < 1e-15);
        assert!(chain_rule(&a, &b.reshape(&[4, 3]).unwrap(), 1).is_err());
    }

    #[test]
    fn mpo_layer_gradient_matches_finite_differences() {
        let (p, d, r) = ([2, 3, 2, 2], [2, 2, 3, 2], [1, 2, 3, 2, 1]);
        let cores: Vec<Tensor> = (0..4)
            .map(|k| uniform_tensor(&[r[k], p[k], d[k], r[k + 1]], -1., 1., 30 + k as u64))
            .collect();
        let w = Mpo::new(cores.clone()).unwrap();
        let x = uniform_tensor(&[24], -1., 1., 40);
        let up = uniform_tensor(&[24], -1., 1., 41);
        let g = mpo_layer_grad(&w, &x, &up, 2).unwrap();
        assert_eq!(g.shape(), &[2, 3, 3, 2]);
        let value = |cs: Vec<Tensor>| {
            let m = mpo_reconstruct(&Mpo::new(cs).unwrap());
            let y = matmul(&m, &x.reshape(&[24, 1]).unwrap()).unwrap();
            y.data().iter().zip(up.data()).map(|(a, b)| a * b).sum::<f64>()
        };
        let gc = mpo_grad_to_core_layout(&g).unwrap();
        let h = 1e-5;
        for e in 0..cores[1].len() {
            let mut plus = cores.clone();
            plus[1].data_mut()[e] += h;
            let mut minus = cores.clone();
            minus[1].data_mut()[e] -= h;
            let fd = (value(plus) - value(minus)) / (2.0 * h);
            assert!((fd - gc.data()[e]).abs() <= 1e-5 * fd.abs().max(1.0));
        }
        assert!(mpo_layer_grad(&w, &x, &up, 5).is_err());
    }

    #[test]
    fn rank_one_mpo_layer() {
        let w = Mpo::new(vec![
            uniform_tensor(&[1, 2, 2, 1], -1., 1., 50),
            uniform_tensor(&[1, 2, 2, 1], -1., 1., 51),
        ])
        .unwrap();
        let x = uniform_tensor(&[4], -1., 1., 52);
        let up = uniform_tensor(&[4], -1., 1., 53);
        // L = Σ G[p1,p2] A[p1,d1] B[p2,d2] X[d1,d2]; ∂L/∂A = Σ G B X
        let b = w.cores()[1].reshape(&[2, 2]).unwrap();
        let gm = up.reshape(&[2, 2]).unwrap();
        let xm = x.reshape(&[2, 2]).unwrap();
        let expect = matmul(&matmul(&gm, &b).unwrap(), &transpose(&xm).unwrap()).unwrap();
        let g = mpo_layer_grad(&w, &x, &up, 1).unwrap();
        assert!(g.reshape(&[2, 2]).unwrap().max_abs_diff(&expect).unwrap() < 1e-14);
    }
}

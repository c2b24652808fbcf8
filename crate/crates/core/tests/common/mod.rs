//! Reference implementations for integration tests. Everything here is
//! written with plain loops over row-major buffers so it shares no code
//! paths with the library's contraction and decomposition routines.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tnkit::{Bindings, NetworkSpec, Tensor};

pub fn rel(a: &Tensor, b: &Tensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let num: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.data().iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

pub fn unravel(mut off: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = off % shape[k];
        off /= shape[k];
    }
    idx
}

pub fn naive_matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for l in 0..k {
                s += a[i * k + l] * b[l * n + j];
            }
            c[i * n + j] = s;
        }
    }
    c
}

/// Entry of a train given as `R_{k-1} × d_k × R_k` cores, by a running
/// row-vector product.
pub fn naive_tt_entry(cores: &[Tensor], idx: &[usize]) -> f64 {
    let mut row = vec![1.0];
    for (c, &i) in cores.iter().zip(idx) {
        let (r0, d, r1) = (c.shape()[0], c.shape()[1], c.shape()[2]);
        let mut next = vec![0.0; r1];
        for a in 0..r0 {
            for b in 0..r1 {
                next[b] += row[a] * c.data()[(a * d + i) * r1 + b];
            }
        }
        row = next;
    }
    row[0]
}

pub fn naive_tt_dense(cores: &[Tensor]) -> Tensor {
    let dims: Vec<usize> = cores.iter().map(|c| c.shape()[1]).collect();
    let n: usize = dims.iter().product();
    let data = (0..n).map(|o| naive_tt_entry(cores, &unravel(o, &dims))).collect();
    Tensor::new(dims, data).unwrap()
}

/// Sums out every mode not in `keep` (1-based, increasing).
pub fn naive_marginal(t: &Tensor, keep: &[usize]) -> Tensor {
    let shape: Vec<usize> = keep.iter().map(|&m| t.shape()[m - 1]).collect();
    let mut out = vec![0.0; shape.iter().product()];
    let st = strides(&shape);
    for (o, v) in t.data().iter().enumerate() {
        let idx = unravel(o, t.shape());
        let pos: usize = keep.iter().zip(&st).map(|(&m, s)| idx[m - 1] * s).sum();
        out[pos] += v;
    }
    Tensor::new(shape, out).unwrap()
}

/// Restricts `t` to the `(mode, index)` pairs (1-based modes) and
/// normalizes the remaining entries to sum to one.
pub fn naive_conditional(t: &Tensor, given: &[(usize, usize)]) -> Tensor {
    let rest: Vec<usize> = (1..=t.order()).filter(|m| !given.iter().any(|g| g.0 == *m)).collect();
    let shape: Vec<usize> = rest.iter().map(|&m| t.shape()[m - 1]).collect();
    let st = strides(&shape);
    let mut out = vec![0.0; shape.iter().product()];
    for (o, v) in t.data().iter().enumerate() {
        let idx = unravel(o, t.shape());
        if given.iter().all(|&(m, i)| idx[m - 1] == i) {
            let pos: usize = rest.iter().zip(&st).map(|(&m, s)| idx[m - 1] * s).sum();
            out[pos] += v;
        }
    }
    let z: f64 = out.iter().sum();
    Tensor::new(shape, out.iter().map(|v| v / z).collect()).unwrap()
}

pub fn uniform(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// A connected random network with distinct tensor names `N1..Nn`,
/// internal edges from a random spanning tree plus a few extra edges, and
/// `outputs` dangling legs. Returns the text form and random bindings.
pub fn random_network(seed: u64, max_nodes: usize, max_dim: usize, outputs: usize) -> (String, Bindings) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_nodes);
    let mut legs: Vec<Vec<(String, usize)>> = vec![Vec::new(); n];
    let mut label = 0;
    let mut edge = |legs: &mut Vec<Vec<(String, usize)>>, a: usize, b: usize, d: usize| {
        label += 1;
        let l = format!("e{label}");
        legs[a].push((l.clone(), d));
        legs[b].push((l, d));
    };
    for k in 1..n {
        let j = rng.random_range(0..k);
        let d = rng.random_range(1..=max_dim);
        edge(&mut legs, j, k, d);
    }
    for _ in 0..rng.random_range(0..=2) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            let d = rng.random_range(1..=max_dim);
            edge(&mut legs, a, b, d);
        }
    }
    let mut out = Vec::new();
    for o in 0..outputs {
        let l = format!("o{}", o + 1);
        let node = rng.random_range(0..n);
        legs[node].push((l.clone(), rng.random_range(1..=max_dim)));
        out.push(l);
    }
    let mut text = String::new();
    let mut bindings = Bindings::new();
    for (k, ls) in legs.iter().enumerate() {
        let name = format!("N{}", k + 1);
        let labels: Vec<&str> = ls.iter().map(|(l, _)| l.as_str()).collect();
        text.push_str(&format!("{name}[{}] ", labels.join(",")));
        let shape: Vec<usize> = ls.iter().map(|(_, d)| *d).collect();
        bindings.insert(name, uniform(&shape, &mut rng));
    }
    text.push_str(&format!("-> [{}]", out.join(",")));
    NetworkSpec::parse(&text).expect("generated network parses");
    (text, bindings)
}

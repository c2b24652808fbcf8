//! Monte Carlo expectations of networks with Gaussian nodes.

use rayon::prelude::*;

use super::rng::keyed_gaussian_tensor;
use crate::error::{Error, Result};
use crate::linalg::psd_sqrt;
use crate::network::{Bindings, ContractionProgram, NetworkSpec, TensorNetwork};
use crate::ops::matmul;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
struct RandomNode {
    name: String,
    shape: Vec<usize>,
    /// Symmetric square root of the covariance of the vectorized tensor.
    cov_sqrt: Option<Tensor>,
}

/// A network whose tensors are either fixed or random. Random tensors have
/// i.i.d. standard normal entries (or a given covariance); every occurrence
/// of a name uses the same sample.
#[derive(Debug, Clone)]
pub struct RandomSpec {
    spec: NetworkSpec,
    random: Vec<RandomNode>,
    fixed: Bindings,
}

impl RandomSpec {
    pub fn new(spec: NetworkSpec) -> Self {
        RandomSpec {
            spec,
            random: Vec::new(),
            fixed: Bindings::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(RandomSpec::new(NetworkSpec::parse(text)?))
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    fn check_new(&self, name: &str) -> Result<()> {
        if self.spec.occurrences(name).is_empty() {
            return Err(Error::UnknownName(name.to_string()));
        }
        if self.fixed.contains_key(name) || self.random.iter().any(|r| r.name == name) {
            return Err(Error::InvalidArgument(format!("`{name}` is already classified")));
        }
        Ok(())
    }

    /// Declares `name` as a tensor of the given shape with i.i.d. N(0, 1)
    /// entries.
    pub fn gaussian(mut self, name: &str, shape: &[usize]) -> Result<Self> {
        self.check_new(name)?;
        if shape.contains(&0) {
            return Err(Error::InvalidArgument("zero dimension".into()));
        }
        self.random.push(RandomNode {
            name: name.to_string(),
            shape: shape.to_vec(),
            cov_sqrt: None,
        });
        Ok(self)
    }

    /// Declares `name` as a Gaussian tensor whose vectorization has
    /// covariance `cov` (symmetric positive semidefinite). Samples are
    /// `cov^{1/2} g` with `g` standard normal.
    pub fn correlated(mut self, name: &str, shape: &[usize], cov: &Tensor) -> Result<Self> {
        self.check_new(name)?;
        let len: usize = shape.iter().product();
        if cov.shape() != [len, len] {
            return Err(Error::ShapeMismatch(format!(
                "covariance of a {len}-entry tensor must be {len}x{len}, got {:?}",
                cov.shape()
            )));
        }
        self.random.push(RandomNode {
            name: name.to_string(),
            shape: shape.to_vec(),
            cov_sqrt: Some(psd_sqrt(cov)?),
        });
        Ok(self)
    }

    /// Binds a deterministic tensor.
    pub fn fixed(mut self, name: &str, t: Tensor) -> Result<Self> {
        self.check_new(name)?;
        self.fixed.insert(name.to_string(), t);
        Ok(self)
    }

    /// Names in the spec that are neither random nor fixed.
    pub fn unclassified(&self) -> Vec<String> {
        self.spec
            .names()
            .into_iter()
            .filter(|n| !self.fixed.contains_key(*n) && !self.random.iter().any(|r| r.name == *n))
            .map(str::to_string)
            .collect()
    }

    /// One sample of every random tensor, in declaration order.
    fn draw(&self, seed: u64, sample: u64) -> Vec<Tensor> {
        self.random
            .iter()
            .enumerate()
            .map(|(q, r)| {
                let g = keyed_gaussian_tensor(&r.shape, seed, sample, q as u64);
                match &r.cov_sqrt {
                    None => g,
                    Some(s) => {
                        let v = g.into_reshape(&[s.shape()[0], 1]).unwrap();
                        matmul(s, &v).unwrap().into_reshape(&r.shape).unwrap()
                    }
                }
            })
            .collect()
    }

    fn template(&self) -> Result<TensorNetwork> {
        let missing = self.unclassified();
        if !missing.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "tensors {missing:?} are neither random nor fixed"
            )));
        }
        let mut bindings = self.fixed.clone();
        for r in &self.random {
            bindings.insert(r.name.clone(), Tensor::zeros(&r.shape));
        }
        self.spec.bind(&bindings)
    }
}

/// Per-entry sample mean and standard error of the mean.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub mean: Tensor,
    pub stderr: Tensor,
    pub samples: usize,
}

/// Running count, mean and sum of squared deviations.
struct Moments {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn empty(len: usize) -> Self {
        Moments {
            n: 0.0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1.0;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / self.n;
            *s += d * (v - *m);
        }
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        let n = a.n + b.n;
        let mut out = Moments::empty(a.mean.len());
        out.n = n;
        for i in 0..a.mean.len() {
            let d = b.mean[i] - a.mean[i];
            out.mean[i] = a.mean[i] + d * b.n / n;
            out.m2[i] = a.m2[i] + b.m2[i] + d * d * a.n * b.n / n;
        }
        out
    }
}

const LEAF: u64 = 256;

/// Estimates the expectation of the network's contraction. Sample `s` draws
/// every random tensor from streams keyed by `(seed, s, tensor)`, and the
/// per-sample results are combined by a fixed binary tree over sample
/// indices, so the result does not depend on how the work is scheduled.
pub fn mc_expectation(rs: &RandomSpec, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let net = rs.template()?;
    let program = net.compile(&net.contraction_order())?;
    // position of each node's tensor: Some(q) for the q-th random tensor
    let slots: Vec<Option<usize>> = net
        .nodes()
        .iter()
        .map(|n| {
            n.name
                .as_deref()
                .and_then(|name| rs.random.iter().position(|r| r.name == name))
        })
        .collect();
    let shape = net.output_shape();
    let len: usize = shape.iter().product();

    let eval = |s: u64| -> Result<Tensor> {
        let draws = rs.draw(seed, s);
        let inputs: Vec<&Tensor> = slots
            .iter()
            .zip(net.tensors())
            .map(|(slot, fixed)| slot.map_or(fixed, |q| &draws[q]))
            .collect();
        program.run(&inputs)
    };
    fn reduce(lo: u64, hi: u64, len: usize, eval: &(dyn Fn(u64) -> Result<Tensor> + Sync)) -> Result<Moments> {
        if hi - lo <= LEAF {
            let mut m = Moments::empty(len);
            for s in lo..hi {
                m.push(eval(s)?.data());
            }
            return Ok(m);
        }
        let mid = lo + (hi - lo) / 2;
        let (a, b) = rayon::join(|| reduce(lo, mid, len, eval), || reduce(mid, hi, len, eval));
        Ok(Moments::merge(a?, b?))
    }
    let m = reduce(0, samples as u64, len, &eval)?;
    let n = m.n;
    let stderr: Vec<f64> = m.m2.iter().map(|s| (s / (n - 1.0) / n).max(0.0).sqrt()).collect();
    Ok(McEstimate {
        mean: Tensor::new(shape.clone(), m.mean)?,
        stderr: Tensor::new(shape, stderr)?,
        samples,
    })
}

/// Like [`mc_expectation`] but returns every per-sample value, for tests of
/// the sampling itself.
pub fn mc_samples(rs: &RandomSpec, samples: usize, seed: u64) -> Result<Vec<Tensor>> {
    let net = rs.template()?;
    let program: ContractionProgram = net.compile(&net.contraction_order())?;
    (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let draws = rs.draw(seed, s);
            let inputs: Vec<&Tensor> = net
                .nodes()
                .iter()
                .zip(net.tensors())
                .map(|(n, fixed)| {
                    n.name
                        .as_deref()
                        .and_then(|name| rs.random.iter().position(|r| r.name == name))
                        .map_or(fixed, |q| &draws[q])
                })
                .collect();
            program.run(&inputs)
        })
        .collect()
}

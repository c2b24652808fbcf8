//! Closed-form expectations of Gaussian networks and their Monte Carlo check.

use super::mc::{mc_expectation, RandomSpec};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::ops::{matmul, trace, transpose};
use crate::tensor::Tensor;

/// Largest |z| accepted by [`IdentityReport::passed`].
pub const Z_THRESHOLD: f64 = 5.0;

/// Expectation identities for tensors with i.i.d. standard normal entries.
#[derive(Debug, Clone, PartialEq)]
pub enum Identity {
    /// `E[AᵀA] = m·I_n` for `A` of shape `m × n`.
    GramMean { m: usize, n: usize },
    /// `E[A ∘ A]_{i1 i2 i3 i4} = δ_{i1 i3} δ_{i2 i4}`.
    OuterPair { m: usize, n: usize },
    /// `E[‖T‖²] = ∏ dims`.
    FrobMean { shape: Vec<usize> },
    /// `E[‖AB‖²] = m n r` for `A: m × n`, `B: n × r`.
    ProdNorm { m: usize, n: usize, r: usize },
    /// `E[a∘a∘a∘a]` for `a ~ N(0, Σ)`: `Σ12 Σ34 + Σ13 Σ24 + Σ14 Σ23`.
    Isserlis4 { sigma: Tensor },
    /// `E[(AᵀA)∘(AᵀA)] = m² δ12 δ34 + m (δ13 δ24 + δ14 δ23)`.
    GramOuter2 { m: usize, n: usize },
    /// `E[(AB)∘(AB)]_{i1 i2 i3 i4} = n δ_{i1 i3} δ_{i2 i4}` for `A: m × n`,
    /// `B: n × p`.
    AbOuter2 { m: usize, n: usize, p: usize },
    /// `E[tr(X A Aᵀ Xᵀ)²] = n² ‖X‖⁴ + 2n tr((XᵀX)²)` for fixed `X: d × m`
    /// and random `A: m × n`.
    TraceQuartic { x: Tensor, n: usize },
    /// `E‖T‖²` for the chain `A[m1,d1,r1] B[m2,r1,d2,r2] C[m3,r2,d3]`
    /// contracted with a core `G[d1,d2,d3]`: the product of all eight
    /// dimensions, given as `(m1, m2, m3, r1, r2, d1, d2, d3)`.
    ChainExample { dims: [usize; 8] },
}

/// Catalog names accepted by [`Identity::from_name`].
pub const IDENTITY_NAMES: [&str; 9] = [
    "gram-mean",
    "outer-pair",
    "frob-mean",
    "prod-norm",
    "isserlis4",
    "gram-outer2",
    "ab-outer2",
    "trace-quartic",
    "chain-example",
];

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

fn need(dims: &[usize], k: usize, name: &str) -> Result<()> {
    if dims.len() != k || dims.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "{name} takes {k} positive dimensions, got {dims:?}"
        )));
    }
    Ok(())
}

impl Identity {
    /// Builds a catalog entry from its name and a list of dimensions.
    /// `isserlis4` uses `Σ = I_d` from `dims = [d]`; `trace-quartic` uses
    /// `X = I` of shape `d × m` from `dims = [d, m, n]`.
    pub fn from_name(name: &str, dims: &[usize]) -> Result<Identity> {
        Ok(match name {
            "gram-mean" => {
                need(dims, 2, name)?;
                Identity::GramMean { m: dims[0], n: dims[1] }
            }
            "outer-pair" => {
                need(dims, 2, name)?;
                Identity::OuterPair { m: dims[0], n: dims[1] }
            }
            "frob-mean" => {
                if dims.is_empty() || dims.contains(&0) {
                    return Err(Error::InvalidArgument("frob-mean takes a positive shape".into()));
                }
                Identity::FrobMean { shape: dims.to_vec() }
            }
            "prod-norm" => {
                need(dims, 3, name)?;
                Identity::ProdNorm { m: dims[0], n: dims[1], r: dims[2] }
            }
            "isserlis4" => {
                need(dims, 1, name)?;
                Identity::Isserlis4 { sigma: Tensor::eye(dims[0]) }
            }
            "gram-outer2" => {
                need(dims, 2, name)?;
                Identity::GramOuter2 { m: dims[0], n: dims[1] }
            }
            "ab-outer2" => {
                need(dims, 3, name)?;
                Identity::AbOuter2 { m: dims[0], n: dims[1], p: dims[2] }
            }
            "trace-quartic" => {
                need(dims, 3, name)?;
                let x = Tensor::from_fn(&[dims[0], dims[1]], |i| delta(i[0], i[1]));
                Identity::TraceQuartic { x, n: dims[2] }
            }
            "chain-example" => {
                need(dims, 8, name)?;
                let mut d = [0; 8];
                d.copy_from_slice(dims);
                Identity::ChainExample { dims: d }
            }
            other => {
                return Err(Error::UnknownName(format!(
                    "{other} (known identities: {})",
                    IDENTITY_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Identity::GramMean { .. } => "gram-mean",
            Identity::OuterPair { .. } => "outer-pair",
            Identity::FrobMean { .. } => "frob-mean",
            Identity::ProdNorm { .. } => "prod-norm",
            Identity::Isserlis4 { .. } => "isserlis4",
            Identity::GramOuter2 { .. } => "gram-outer2",
            Identity::AbOuter2 { .. } => "ab-outer2",
            Identity::TraceQuartic { .. } => "trace-quartic",
            Identity::ChainExample { .. } => "chain-example",
        }
    }

    /// The random network whose expectation the identity states.
    pub fn random_spec(&self) -> Result<RandomSpec> {
        match self {
            Identity::GramMean { m, n } => RandomSpec::parse("A[a,i] A[a,j] -> [i,j]")?.gaussian("A", &[*m, *n]),
            Identity::OuterPair { m, n } => {
                RandomSpec::parse("A[i1,i2] A[i3,i4] -> [i1,i2,i3,i4]")?.gaussian("A", &[*m, *n])
            }
            Identity::FrobMean { shape } => {
                let legs: Vec<String> = (1..=shape.len()).map(|k| format!("i{k}")).collect();
                let t = format!("T[{}]", legs.join(","));
                RandomSpec::parse(&format!("{t} {t} -> []"))?.gaussian("T", shape)
            }
            Identity::ProdNorm { m, n, r } => RandomSpec::parse("A[i,k] B[k,j] A[i,l] B[l,j] -> []")?
                .gaussian("A", &[*m, *n])?
                .gaussian("B", &[*n, *r]),
            Identity::Isserlis4 { sigma } => {
                let d = check_covariance(sigma)?;
                RandomSpec::parse("a[i] a[j] a[k] a[l] -> [i,j,k,l]")?.correlated("a", &[d], sigma)
            }
            Identity::GramOuter2 { m, n } => {
                RandomSpec::parse("A[a,i1] A[a,i2] A[b,i3] A[b,i4] -> [i1,i2,i3,i4]")?.gaussian("A", &[*m, *n])
            }
            Identity::AbOuter2 { m, n, p } => RandomSpec::parse("A[i1,k] B[k,i2] A[i3,l] B[l,i4] -> [i1,i2,i3,i4]")?
                .gaussian("A", &[*m, *n])?
                .gaussian("B", &[*n, *p]),
            Identity::TraceQuartic { x, n } => {
                if x.order() != 2 {
                    return Err(Error::ShapeMismatch("X must be a matrix".into()));
                }
                RandomSpec::parse("X[a,i] A[i,k] A[j,k] X[a,j] X[b,p] A[p,l] A[q,l] X[b,q] -> []")?
                    .gaussian("A", &[x.shape()[1], *n])?
                    .fixed("X", x.clone())
            }
            Identity::ChainExample { dims } => {
                let [m1, m2, m3, r1, r2, d1, d2, d3] = *dims;
                RandomSpec::parse(
                    "A[m1,d1,r1] B[m2,r1,d2,r2] C[m3,r2,d3] G[d1,d2,d3] \
                     A[m1,e1,s1] B[m2,s1,e2,s2] C[m3,s2,e3] G[e1,e2,e3] -> []",
                )?
                .gaussian("A", &[m1, d1, r1])?
                .gaussian("B", &[m2, r1, d2, r2])?
                .gaussian("C", &[m3, r2, d3])?
                .gaussian("G", &[d1, d2, d3])
            }
        }
    }

    /// Closed-form value of the expectation.
    pub fn analytic(&self) -> Result<Tensor> {
        Ok(match self {
            Identity::GramMean { m, n } => Tensor::eye(*n).scale(*m as f64),
            Identity::OuterPair { m, n } => {
                Tensor::from_fn(&[*m, *n, *m, *n], |i| delta(i[0], i[2]) * delta(i[1], i[3]))
            }
            Identity::FrobMean { shape } => Tensor::scalar(shape.iter().product::<usize>() as f64),
            Identity::ProdNorm { m, n, r } => Tensor::scalar((m * n * r) as f64),
            Identity::Isserlis4 { sigma } => {
                let d = check_covariance(sigma)?;
                let s = |a: usize, b: usize| sigma.data()[a * d + b];
                Tensor::from_fn(&[d, d, d, d], |i| {
                    s(i[0], i[1]) * s(i[2], i[3]) + s(i[0], i[2]) * s(i[1], i[3]) + s(i[0], i[3]) * s(i[1], i[2])
                })
            }
            Identity::GramOuter2 { m, n } => {
                let m = *m as f64;
                Tensor::from_fn(&[*n, *n, *n, *n], |i| {
                    m * m * delta(i[0], i[1]) * delta(i[2], i[3])
                        + m * (delta(i[0], i[2]) * delta(i[1], i[3]) + delta(i[0], i[3]) * delta(i[1], i[2]))
                })
            }
            Identity::AbOuter2 { m, n, p } => Tensor::from_fn(&[*m, *p, *m, *p], |i| {
                *n as f64 * delta(i[0], i[2]) * delta(i[1], i[3])
            }),
            Identity::TraceQuartic { x, n } => {
                let xtx = matmul(&transpose(x)?, x)?;
                let n = *n as f64;
                let f2: f64 = x.data().iter().map(|v| v * v).sum();
                Tensor::scalar(n * n * f2 * f2 + 2.0 * n * trace(&matmul(&xtx, &xtx)?)?)
            }
            Identity::ChainExample { dims } => Tensor::scalar(dims.iter().product::<usize>() as f64),
        })
    }
}

fn check_covariance(sigma: &Tensor) -> Result<usize> {
    if sigma.order() != 2 || sigma.shape()[0] != sigma.shape()[1] {
        return Err(Error::ShapeMismatch("covariance must be a square matrix".into()));
    }
    let (vals, _) = symmetric_eigen(sigma)?;
    let top = vals.first().copied().unwrap_or(0.0).abs().max(1.0);
    if vals.iter().any(|&v| v < -1e-12 * top) {
        return Err(Error::InvalidArgument("covariance is not positive semidefinite".into()));
    }
    Ok(sigma.shape()[0])
}

/// Outcome of a Monte Carlo check of one identity.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub identity: &'static str,
    pub estimate: Tensor,
    pub analytic: Tensor,
    pub stderr: Tensor,
    /// Largest `|estimate − analytic| / stderr` over entries. Entries with
    /// zero standard error count as 0 when they match exactly and as
    /// infinity otherwise.
    pub max_abs_z: f64,
    pub samples: usize,
    pub seed: u64,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.max_abs_z <= Z_THRESHOLD
    }
}

/// Estimates the identity's network by Monte Carlo and compares entrywise.
pub fn verify_identity(identity: &Identity, samples: usize, seed: u64) -> Result<IdentityReport> {
    let est = mc_expectation(&identity.random_spec()?, samples, seed)?;
    let analytic = identity.analytic()?;
    if analytic.shape() != est.mean.shape() {
        return Err(Error::ShapeMismatch(format!(
            "analytic shape {:?} vs network output {:?}",
            analytic.shape(),
            est.mean.shape()
        )));
    }
    let scale = analytic.max_abs().max(1.0);
    let max_abs_z = est
        .mean
        .data()
        .iter()
        .zip(analytic.data())
        .zip(est.stderr.data())
        .map(|((e, a), s)| {
            let diff = (e - a).abs();
            if *s > 0.0 {
                diff / s
            } else if diff <= 1e-12 * scale {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    Ok(IdentityReport {
        identity: identity.name(),
        estimate: est.mean,
        analytic,
        stderr: est.stderr,
        max_abs_z,
        samples,
        seed,
    })
}

//! Discrete joint distributions stored as tensors, and Born machines: tensor
//! trains whose squared entries are unnormalized probabilities.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::ops::matricize;
use crate::tensor::{unravel, ModeSet, Tensor};
use crate::tt::{tt_entry, TT};

/// Allowed deviation of the total mass from one.
pub const SUM_TOL: f64 = 1e-10;

/// Largest marginal a Born machine will materialize.
pub const MAX_MARGINAL_ENTRIES: usize = 1_000_000;

/// A tensor with non-negative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTensor(Tensor);

/// Checks non-negativity (reporting the first offending index) and total
/// mass.
pub fn prob_validate(t: Tensor) -> Result<ProbTensor> {
    if let Some(pos) = t.data().iter().position(|&x| !(x >= 0.0)) {
        return Err(Error::NotProbability(format!(
            "entry {:?} is {}",
            unravel(pos, t.shape()),
            t.data()[pos]
        )));
    }
    let s = t.sum();
    if (s - 1.0).abs() > SUM_TOL {
        return Err(Error::NotProbability(format!("entries sum to {s}")));
    }
    Ok(ProbTensor(t))
}

impl ProbTensor {
    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn order(&self) -> usize {
        self.0.order()
    }

    /// Distribution of the modes in `keep` (in ascending order), summing out
    /// the rest.
    pub fn marginal(&self, keep: &ModeSet) -> Result<ProbTensor> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument("marginal needs at least one kept mode".into()));
        }
        keep.check(self.order())?;
        let m = matricize(&self.0, keep)?;
        let cols = m.shape()[1];
        let sums: Vec<f64> = m.data().chunks(cols).map(|r| r.iter().sum()).collect();
        let shape: Vec<usize> = keep.modes().iter().map(|&k| self.0.shape()[k - 1]).collect();
        prob_validate(Tensor::new(shape, sums)?)
    }

    /// Distribution of the remaining modes given `(mode, index)` pairs
    /// (1-based modes, 0-based indices). Conditioning on every mode yields an
    /// order-0 point mass.
    pub fn conditional(&self, given: &[(usize, usize)]) -> Result<ProbTensor> {
        let mut sorted = given.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("a mode is conditioned twice".into()));
        }
        let mut t = self.0.clone();
        for &(mode, index) in sorted.iter().rev() {
            t = t.select(mode, index)?;
        }
        let mass = t.sum();
        if mass <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "conditioning event {given:?} has probability zero"
            )));
        }
        prob_validate(t.scale(1.0 / mass))
    }
}

/// A tensor train `T` defining `P(i) = T(i)² / ζ` with `ζ = Σ T(i)²`.
#[derive(Debug)]
pub struct BornMachine {
    tt: TT,
    zeta: OnceLock<f64>,
}

impl Clone for BornMachine {
    fn clone(&self) -> Self {
        BornMachine {
            tt: self.tt.clone(),
            zeta: self.zeta.clone(),
        }
    }
}

impl BornMachine {
    pub fn new(tt: TT) -> Self {
        BornMachine {
            tt,
            zeta: OnceLock::new(),
        }
    }

    pub fn tt(&self) -> &TT {
        &self.tt
    }

    pub fn dims(&self) -> Vec<usize> {
        self.tt.dims()
    }

    /// Normalizer `ζ`, computed once by a left-to-right sweep of transfer
    /// matrices `Σ_i G[:, i, :] ⊗ G[:, i, :]`.
    pub fn zeta(&self) -> f64 {
        *self.zeta.get_or_init(|| {
            let keep = vec![false; self.tt.order()];
            sweep(&self.tt, &keep)[0]
        })
    }

    /// `P(index)` for a 0-based multi-index.
    pub fn prob(&self, index: &[usize]) -> Result<f64> {
        let a = tt_entry(&self.tt, index)?;
        self.normalized(a * a)
    }

    fn normalized(&self, x: f64) -> Result<f64> {
        let z = self.zeta();
        if !(z > 0.0) {
            return Err(Error::Numerical("Born machine has zero normalizer".into()));
        }
        Ok(x / z)
    }

    /// Marginal over the modes in `keep`. Summed-out sites contribute their
    /// transfer matrix; kept sites leave the physical index open, shared by
    /// both copies of the core.
    pub fn marginal(&self, keep: &ModeSet) -> Result<ProbTensor> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument("marginal needs at least one kept mode".into()));
        }
        keep.check(self.tt.order())?;
        let dims = self.dims();
        let shape: Vec<usize> = keep.modes().iter().map(|&k| dims[k - 1]).collect();
        check_cap(&shape)?;
        let flags: Vec<bool> = (1..=dims.len()).map(|k| keep.contains(k)).collect();
        let z = self.zeta();
        if !(z > 0.0) {
            return Err(Error::Numerical("Born machine has zero normalizer".into()));
        }
        let values: Vec<f64> = sweep(&self.tt, &flags).into_iter().map(|x| x / z).collect();
        prob_validate(Tensor::new(shape, values)?)
    }

    /// Distribution of the remaining modes given `(mode, index)` pairs. The
    /// given sites are fixed to their core slices and the result is
    /// renormalized by the resulting conditional `ζ`.
    pub fn conditional(&self, given: &[(usize, usize)]) -> Result<ProbTensor> {
        let n = self.tt.order();
        let dims = self.dims();
        let mut fixed = vec![None; n];
        for &(mode, index) in given {
            if mode == 0 || mode > n {
                return Err(Error::ModeOutOfRange { mode, order: n });
            }
            if index >= dims[mode - 1] {
                return Err(Error::IndexOutOfRange {
                    index: vec![index],
                    shape: vec![dims[mode - 1]],
                });
            }
            if fixed[mode - 1].replace(index).is_some() {
                return Err(Error::InvalidArgument(format!("mode {mode} is conditioned twice")));
            }
        }
        let cores = self
            .tt
            .cores()
            .iter()
            .zip(&fixed)
            .map(|(c, f)| match f {
                Some(i) => c.select(2, *i).and_then(|s| {
                    let sh = s.shape().to_vec();
                    s.into_reshape(&[sh[0], 1, sh[1]])
                }),
                None => Ok(c.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        let sliced = TT::new(cores)?;
        let flags: Vec<bool> = fixed.iter().map(Option::is_none).collect();
        let shape: Vec<usize> = (0..n).filter(|&k| flags[k]).map(|k| dims[k]).collect();
        check_cap(&shape)?;
        let values = sweep(&sliced, &flags);
        let mass: f64 = values.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "conditioning event {given:?} has probability zero"
            )));
        }
        let values = values.into_iter().map(|x| x / mass).collect();
        prob_validate(Tensor::new(shape, values)?)
    }

    /// Full distribution, materialized.
    pub fn dense(&self) -> Result<ProbTensor> {
        let all: Vec<usize> = (1..=self.tt.order()).collect();
        self.marginal(&ModeSet::new(&all)?)
    }
}

fn check_cap(shape: &[usize]) -> Result<()> {
    let entries = shape
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .unwrap_or(usize::MAX);
    if entries > MAX_MARGINAL_ENTRIES {
        return Err(Error::InvalidArgument(format!(
            "marginal would have {entries} entries, more than {MAX_MARGINAL_ENTRIES}"
        )));
    }
    Ok(())
}

/// Left-to-right contraction of the doubled train. The state is
/// `E[k, a, b]` where `k` runs over the kept indices seen so far and `a`, `b`
/// over the bond of the two copies. Returns `E[:, 0, 0]`.
fn sweep(tt: &TT, keep: &[bool]) -> Vec<f64> {
    let mut e = vec![1.0];
    let (mut kk, mut r) = (1usize, 1usize);
    for (core, &kept) in tt.cores().iter().zip(keep) {
        let (d, r1) = (core.shape()[1], core.shape()[2]);
        let g = core.data();
        let kn = if kept { kk * d } else { kk };
        let mut next = vec![0.0; kn * r1 * r1];
        // w[b, a'] for one (k, i)
        let mut w = vec![0.0; r * r1];
        for k in 0..kk {
            let ek = &e[k * r * r..(k + 1) * r * r];
            for i in 0..d {
                w.iter_mut().for_each(|x| *x = 0.0);
                for a in 0..r {
                    let grow = &g[(a * d + i) * r1..(a * d + i + 1) * r1];
                    for b in 0..r {
                        let c = ek[a * r + b];
                        if c == 0.0 {
                            continue;
                        }
                        for (x, gv) in w[b * r1..(b + 1) * r1].iter_mut().zip(grow) {
                            *x += c * gv;
                        }
                    }
                }
                let slot = if kept { k * d + i } else { k };
                let out = &mut next[slot * r1 * r1..(slot + 1) * r1 * r1];
                for b in 0..r {
                    let grow = &g[(b * d + i) * r1..(b * d + i + 1) * r1];
                    for a1 in 0..r1 {
                        let c = w[b * r1 + a1];
                        if c == 0.0 {
                            continue;
                        }
                        for (x, gv) in out[a1 * r1..(a1 + 1) * r1].iter_mut().zip(grow) {
                            *x += c * gv;
                        }
                    }
                }
            }
        }
        e = next;
        kk = kn;
        r = r1;
    }
    e
}

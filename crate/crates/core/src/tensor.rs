//! Dense N-way arrays of `f64` in lexicographic (row-major) layout.
//!
//! The flat offset of a 0-based index tuple `(i_1, .., i_N)` is
//! `sum_k i_k * prod_{j>k} d_j`, so the last index varies fastest.
//! Modes are numbered from 1 at the API surface.

use std::fmt;

use crate::error::{shape_err, Error, Result};

#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .finish()
    }
}

/// Row-major strides for `shape`.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Flat offset of `index` under the lexicographic layout.
pub fn ravel(index: &[usize], shape: &[usize]) -> usize {
    index
        .iter()
        .zip(shape)
        .fold(0usize, |acc, (&i, &d)| acc * d + i)
}

/// Inverse of [`ravel`].
pub fn unravel(mut offset: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0usize; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = offset % shape[k];
        offset /= shape[k];
    }
    idx
}

/// Advance `idx` to the next multi-index in lexicographic order.
/// Returns false once the iteration wraps around.
pub fn next_index(idx: &mut [usize], shape: &[usize]) -> bool {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!(
                "dimensions must be positive, got {shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return shape_err(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            ));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn ones(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![1.0; n],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: vec![],
            data: vec![value],
        }
    }

    pub fn vector(values: &[f64]) -> Self {
        Tensor {
            shape: vec![values.len()],
            data: values.to_vec(),
        }
    }

    pub fn matrix(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Tensor::new(vec![rows, cols], values.to_vec())
    }

    pub fn eye(n: usize) -> Self {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    /// Builds a tensor by evaluating `f` at every 0-based multi-index.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..n {
            data.push(f(&idx));
            next_index(&mut idx, shape);
        }
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Dimension of the 1-based `mode`.
    pub fn dim(&self, mode: usize) -> Result<usize> {
        check_mode(mode, self.order())?;
        Ok(self.shape[mode - 1])
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        self.check_index(index)?;
        Ok(self.data[ravel(index, &self.shape)])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        self.check_index(index)?;
        let off = ravel(index, &self.shape);
        self.data[off] = value;
        Ok(())
    }

    fn check_index(&self, index: &[usize]) -> Result<()> {
        if index.len() != self.order() || index.iter().zip(&self.shape).any(|(&i, &d)| i >= d) {
            return Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                shape: self.shape.clone(),
            });
        }
        Ok(())
    }

    /// Value of an order-0 (or single-entry) tensor.
    pub fn as_scalar(&self) -> Result<f64> {
        if self.data.len() != 1 {
            return shape_err(format!("expected a scalar, got shape {:?}", self.shape));
        }
        Ok(self.data[0])
    }

    /// Same values under a new shape with the same number of entries.
    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        Tensor::new(shape.to_vec(), self.data.clone())
    }

    pub fn into_reshape(self, shape: &[usize]) -> Result<Tensor> {
        Tensor::new(shape.to_vec(), self.data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    fn zip_with(&self, other: &Tensor, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        if self.shape != other.shape {
            return shape_err(format!(
                "{what}: shapes {:?} and {:?} differ",
                self.shape, other.shape
            ));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub(crate) fn mul_entries(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Tensor {
        self.map(|x| c * x)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest absolute entrywise difference; errors on shape mismatch.
    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// `||self - other||_F / max(||other||_F, tiny)`.
    pub fn rel_error(&self, reference: &Tensor) -> Result<f64> {
        let d = self.sub(reference)?.norm();
        let r = reference.norm();
        Ok(if r > 0.0 { d / r } else { d })
    }

    /// Mode-`mode` fiber: all indices fixed except `mode` (1-based).
    /// `fixed` lists the indices of the remaining modes in ascending order.
    pub fn fiber(&self, mode: usize, fixed: &[usize]) -> Result<Tensor> {
        check_mode(mode, self.order())?;
        if fixed.len() + 1 != self.order() {
            return Err(Error::InvalidArgument(format!(
                "fiber of an order-{} tensor needs {} fixed indices",
                self.order(),
                self.order() - 1
            )));
        }
        let d = self.shape[mode - 1];
        let mut idx: Vec<usize> = Vec::with_capacity(self.order());
        idx.extend_from_slice(&fixed[..mode - 1]);
        idx.push(0);
        idx.extend_from_slice(&fixed[mode - 1..]);
        let mut out = Vec::with_capacity(d);
        for i in 0..d {
            idx[mode - 1] = i;
            out.push(self.get(&idx)?);
        }
        Ok(Tensor::vector(&out))
    }

    /// Sub-tensor with 1-based mode `mode` fixed to `index`; order drops by one.
    pub fn select(&self, mode: usize, index: usize) -> Result<Tensor> {
        check_mode(mode, self.order())?;
        let d = self.shape[mode - 1];
        if index >= d {
            return Err(Error::IndexOutOfRange {
                index: vec![index],
                shape: vec![d],
            });
        }
        let outer: usize = self.shape[..mode - 1].iter().product();
        let inner: usize = self.shape[mode..].iter().product();
        let mut data = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = (o * d + index) * inner;
            data.extend_from_slice(&self.data[base..base + inner]);
        }
        let mut shape = self.shape.clone();
        shape.remove(mode - 1);
        Ok(Tensor { shape, data })
    }

    /// Slice: every index fixed except the two 1-based modes `m1 < m2`.
    pub fn slice(&self, m1: usize, m2: usize, fixed: &[usize]) -> Result<Tensor> {
        if m1 >= m2 {
            return Err(Error::InvalidArgument("slice modes must be ascending".into()));
        }
        check_mode(m2, self.order())?;
        if fixed.len() + 2 != self.order() {
            return Err(Error::InvalidArgument(format!(
                "slice of an order-{} tensor needs {} fixed indices",
                self.order(),
                self.order() - 2
            )));
        }
        let (a, b) = (self.shape[m1 - 1], self.shape[m2 - 1]);
        let mut idx = Vec::with_capacity(self.order());
        let mut it = fixed.iter();
        for k in 1..=self.order() {
            idx.push(if k == m1 || k == m2 { 0 } else { *it.next().unwrap() });
        }
        Ok(Tensor::from_fn(&[a, b], |ij| {
            let mut full = idx.clone();
            full[m1 - 1] = ij[0];
            full[m2 - 1] = ij[1];
            self.data[ravel(&full, &self.shape)]
        }))
    }
}

pub(crate) fn check_mode(mode: usize, order: usize) -> Result<()> {
    if mode == 0 || mode > order {
        Err(Error::ModeOutOfRange { mode, order })
    } else {
        Ok(())
    }
}

/// Strictly ascending set of 1-based modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeSet(Vec<usize>);

impl ModeSet {
    /// Sorts `modes`; rejects zero and duplicates.
    pub fn new(modes: &[usize]) -> Result<Self> {
        let mut m = modes.to_vec();
        m.sort_unstable();
        if m.first() == Some(&0) {
            return Err(Error::ModeOutOfRange { mode: 0, order: 0 });
        }
        if m.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("repeated mode in {modes:?}")));
        }
        Ok(ModeSet(m))
    }

    pub fn single(mode: usize) -> Result<Self> {
        ModeSet::new(&[mode])
    }

    pub fn modes(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, mode: usize) -> bool {
        self.0.binary_search(&mode).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, order: usize) -> Result<()> {
        match self.0.last() {
            Some(&m) if m > order => Err(Error::ModeOutOfRange { mode: m, order }),
            _ => Ok(()),
        }
    }

    /// Modes of `1..=order` not in the set, ascending.
    pub fn complement(&self, order: usize) -> Vec<usize> {
        (1..=order).filter(|m| !self.contains(*m)).collect()
    }
}

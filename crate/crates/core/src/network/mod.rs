//! Tensor networks: the text form, binding tensors to it, pairwise
//! contraction with a greedy order, and cut-based matricization rank bounds.

mod contract;
mod cut;
mod spec;

use std::collections::{BTreeMap, HashMap};

pub use contract::{ContractionProgram, PlanCost};
pub use cut::CutBound;
pub use spec::{NetworkSpec, Term};

use crate::error::{Error, Result};
use crate::ops::copy_tensor;
use crate::tensor::Tensor;

/// Tensors bound to the names of a [`NetworkSpec`].
pub type Bindings = HashMap<String, Tensor>;

/// A node of a bound network.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Tensor name, or `None` for a copy tensor introduced for a hyperedge.
    pub name: Option<String>,
    /// Term index in the originating spec.
    pub term: Option<usize>,
    pub legs: Vec<String>,
}

/// A network with every node bound to a tensor. Hyperedges have been
/// lowered to copy-tensor nodes, so every label sits on at most two legs
/// (or one leg plus the output list).
#[derive(Debug, Clone)]
pub struct TensorNetwork {
    nodes: Vec<Node>,
    tensors: Vec<Tensor>,
    output: Vec<String>,
    dims: BTreeMap<String, usize>,
}

impl NetworkSpec {
    /// Binds tensors to names and lowers hyperedges to copy tensors.
    pub fn bind(&self, bindings: &Bindings) -> Result<TensorNetwork> {
        let mut dims: BTreeMap<String, usize> = BTreeMap::new();
        let mut tensors = Vec::with_capacity(self.terms().len());
        for t in self.terms() {
            let tensor = bindings
                .get(&t.name)
                .ok_or_else(|| Error::UnknownName(t.name.clone()))?;
            if tensor.order() != t.legs.len() {
                return Err(Error::ShapeMismatch(format!(
                    "tensor `{}` has order {} but the network gives it {} legs",
                    t.name,
                    tensor.order(),
                    t.legs.len()
                )));
            }
            for (l, &d) in t.legs.iter().zip(tensor.shape()) {
                match dims.get(l) {
                    Some(&prev) if prev != d => {
                        return Err(Error::ShapeMismatch(format!(
                            "label `{l}` has dimension {prev} and {d}"
                        )))
                    }
                    _ => {
                        dims.insert(l.clone(), d);
                    }
                }
            }
            tensors.push(tensor.clone());
        }

        let mut nodes: Vec<Node> = self
            .terms()
            .iter()
            .enumerate()
            .map(|(i, t)| Node {
                name: Some(t.name.clone()),
                term: Some(i),
                legs: t.legs.clone(),
            })
            .collect();
        let output = self.output().to_vec();

        // labels in order of first appearance
        let mut labels: Vec<String> = Vec::new();
        for t in self.terms() {
            for l in &t.legs {
                if !labels.contains(l) {
                    labels.push(l.clone());
                }
            }
        }
        let counts = self.leg_counts();
        for label in labels {
            let in_out = output.contains(&label);
            let degree = counts[label.as_str()] + usize::from(in_out);
            if degree < 3 {
                continue;
            }
            let d = dims[&label];
            let mut copy_legs = Vec::new();
            let mut k = 0;
            for node in nodes.iter_mut() {
                for leg in node.legs.iter_mut() {
                    if *leg == label {
                        let fresh = format!("{label}#{k}");
                        k += 1;
                        dims.insert(fresh.clone(), d);
                        copy_legs.push(fresh.clone());
                        *leg = fresh;
                    }
                }
            }
            if in_out {
                copy_legs.push(label.clone());
            } else {
                dims.remove(&label);
            }
            tensors.push(copy_tensor(copy_legs.len(), d)?);
            nodes.push(Node {
                name: None,
                term: None,
                legs: copy_legs,
            });
        }
        Ok(TensorNetwork {
            nodes,
            tensors,
            output,
            dims,
        })
    }

    /// Bind and contract in one step.
    pub fn contract(&self, bindings: &Bindings) -> Result<Tensor> {
        self.bind(bindings)?.contract()
    }
}

impl TensorNetwork {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn output(&self) -> &[String] {
        &self.output
    }

    pub fn dim(&self, label: &str) -> Option<usize> {
        self.dims.get(label).copied()
    }

    pub fn output_shape(&self) -> Vec<usize> {
        self.output.iter().map(|l| self.dims[l]).collect()
    }

    /// Node ids bound to tensor `name`.
    pub fn nodes_named(&self, name: &str) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.name.as_deref() == Some(name))
            .map(|(i, _)| i)
            .collect()
    }

    /// Same structure with the tensor of node `id` replaced.
    pub fn with_tensor(&self, id: usize, t: Tensor) -> Result<TensorNetwork> {
        if t.shape() != self.tensors[id].shape() {
            return Err(Error::ShapeMismatch(format!(
                "replacement for node {id} has shape {:?}, expected {:?}",
                t.shape(),
                self.tensors[id].shape()
            )));
        }
        let mut out = self.clone();
        out.tensors[id] = t;
        Ok(out)
    }

    /// Contracts with the greedy order of [`TensorNetwork::contraction_order`].
    pub fn contract(&self) -> Result<Tensor> {
        let plan = self.contraction_order();
        self.contract_with(&plan)
    }

    /// Contracts following `plan`, a list of pairwise merges on SSA ids:
    /// nodes are `0..n` and the k-th merge creates id `n + k`.
    pub fn contract_with(&self, plan: &[(usize, usize)]) -> Result<Tensor> {
        let program = self.compile(plan)?;
        program.run(&self.tensors.iter().collect::<Vec<_>>())
    }

    /// Splits the network along an internal edge: the network equals the
    /// sum over `index` of the returned slice networks.
    pub fn slice_edge(&self, label: &str, index: usize) -> Result<TensorNetwork> {
        if self.output.iter().any(|l| l == label) {
            return Err(Error::Network(format!("`{label}` is an output label")));
        }
        let d = self
            .dims
            .get(label)
            .copied()
            .ok_or_else(|| Error::Network(format!("unknown label `{label}`")))?;
        if index >= d {
            return Err(Error::IndexOutOfRange {
                index: vec![index],
                shape: vec![d],
            });
        }
        let mut out = self.clone();
        for (node, tensor) in out.nodes.iter_mut().zip(out.tensors.iter_mut()) {
            while let Some(pos) = node.legs.iter().position(|l| l == label) {
                *tensor = tensor.select(pos + 1, index)?;
                node.legs.remove(pos);
            }
        }
        out.dims.remove(label);
        Ok(out)
    }

    /// Removes node `id` and promotes its legs to dangling outputs, appended
    /// after the existing outputs in the node's mode order. Each removed leg
    /// is reconnected through an identity matrix, so a leg that was an output
    /// or that closed a trace on the removed node is handled the same way as
    /// an ordinary edge. Contracting the result gives the Jacobian of the
    /// network with respect to that single occurrence.
    pub fn without_node(&self, id: usize) -> Result<TensorNetwork> {
        if id >= self.nodes.len() {
            return Err(Error::InvalidArgument(format!(
                "node {id} out of range for a network of {} nodes",
                self.nodes.len()
            )));
        }
        let mut out = self.clone();
        let removed = out.nodes.remove(id);
        out.tensors.remove(id);
        for (p, label) in removed.legs.iter().enumerate() {
            let d = self.dims[label];
            let fresh = format!("∂{id}.{p}");
            out.dims.insert(fresh.clone(), d);
            out.output.push(fresh.clone());
            out.nodes.push(Node {
                name: None,
                term: None,
                legs: vec![label.clone(), fresh],
            });
            out.tensors.push(Tensor::eye(d));
        }
        if out.nodes.is_empty() {
            out.nodes.push(Node {
                name: None,
                term: None,
                legs: Vec::new(),
            });
            out.tensors.push(Tensor::scalar(1.0));
        }
        Ok(out)
    }

    /// Labels shared by two distinct nodes, with their endpoints.
    pub(crate) fn internal_edges(&self) -> Vec<(String, usize, usize)> {
        let mut first: HashMap<&str, usize> = HashMap::new();
        let mut edges = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            for l in &n.legs {
                match first.get(l.as_str()) {
                    Some(&j) if j != i => edges.push((l.clone(), j, i)),
                    Some(_) => {}
                    None => {
                        first.insert(l, i);
                    }
                }
            }
        }
        edges
    }

    /// Node carrying the dangling leg `label`.
    pub(crate) fn output_node(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.legs.iter().any(|l| l == label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{matmul, partial_trace, trace};
    use crate::random::uniform_tensor;

    fn bind(pairs: &[(&str, Tensor)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn matrix_chain_identity() {
        let a = Tensor::matrix(2, 2, &[1., 2., 3., 4.]).unwrap();
        let spec = NetworkSpec::parse("A[i,j] B[j,k] -> [i,k]").unwrap();
        let out = spec.contract(&bind(&[("A", a.clone()), ("B", Tensor::eye(2))])).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn cyclic_trace_matches_dense() {
        let a = uniform_tensor(&[2, 3], -1., 1., 1);
        let b = uniform_tensor(&[3, 4], -1., 1., 2);
        let c = uniform_tensor(&[4, 2], -1., 1., 3);
        let spec = NetworkSpec::parse("A[i,j] B[j,k] C[k,i] -> []").unwrap();
        let got = spec
            .contract(&bind(&[("A", a.clone()), ("B", b.clone()), ("C", c.clone())]))
            .unwrap()
            .as_scalar()
            .unwrap();
        let dense = trace(&matmul(&matmul(&a, &b).unwrap(), &c).unwrap()).unwrap();
        assert!((got - dense).abs() < 1e-12);
    }

    #[test]
    fn hyperedge_lowered_to_copy_node() {
        let spec = NetworkSpec::parse("A[i,r] B[j,r] C[k,r] -> [i,j,k]").unwrap();
        let a = uniform_tensor(&[2, 3], -1., 1., 4);
        let b = uniform_tensor(&[3, 3], -1., 1., 5);
        let c = uniform_tensor(&[4, 3], -1., 1., 6);
        let net = spec
            .bind(&bind(&[("A", a.clone()), ("B", b.clone()), ("C", c.clone())]))
            .unwrap();
        assert_eq!(net.nodes().len(), 4);
        assert_eq!(net.nodes()[3].name, None);
        assert_eq!(net.tensors()[3].shape(), &[3, 3, 3]);
        let t = net.contract().unwrap();
        let expect = Tensor::from_fn(&[2, 3, 4], |x| {
            (0..3)
                .map(|r| {
                    a.get(&[x[0], r]).unwrap() * b.get(&[x[1], r]).unwrap() * c.get(&[x[2], r]).unwrap()
                })
                .sum()
        });
        assert!(t.max_abs_diff(&expect).unwrap() < 1e-14);
    }

    #[test]
    fn output_hyperedge_is_hadamard() {
        let spec = NetworkSpec::parse("A[i,j] B[i,j] -> [i,j]").unwrap();
        let a = uniform_tensor(&[2, 3], -1., 1., 7);
        let b = uniform_tensor(&[2, 3], -1., 1., 8);
        let t = spec.contract(&bind(&[("A", a.clone()), ("B", b.clone())])).unwrap();
        assert!(t.max_abs_diff(&crate::ops::hadamard(&a, &b).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn self_edge_is_trace() {
        let spec = NetworkSpec::parse("A[i,i] -> []").unwrap();
        let t = spec.contract(&bind(&[("A", Tensor::eye(3))])).unwrap();
        assert_eq!(t.as_scalar().unwrap(), 3.0);
        let spec = NetworkSpec::parse("T[a,b,c,b,e] -> [a,c,e]").unwrap();
        let x = uniform_tensor(&[2, 3, 4, 3, 5], -1., 1., 9);
        let t = spec.contract(&bind(&[("T", x.clone())])).unwrap();
        assert!(t.max_abs_diff(&partial_trace(&x, 2, 4).unwrap()).unwrap() < 1e-14);
    }

    #[test]
    fn binding_errors() {
        let spec = NetworkSpec::parse("A[i,j] B[j,k] -> [i,k]").unwrap();
        let a = Tensor::zeros(&[2, 3]);
        assert!(matches!(
            spec.bind(&bind(&[("A", a.clone())])),
            Err(Error::UnknownName(_))
        ));
        assert!(spec.bind(&bind(&[("A", a.clone()), ("B", Tensor::zeros(&[2, 2]))])).is_err());
        assert!(spec.bind(&bind(&[("A", a), ("B", Tensor::zeros(&[3]))])).is_err());
    }

    #[test]
    fn edge_slices_sum_to_the_network() {
        let spec = NetworkSpec::parse("A[i,r] B[r,j] -> [i,j]").unwrap();
        let a = uniform_tensor(&[3, 4], -1., 1., 10);
        let b = uniform_tensor(&[4, 2], -1., 1., 11);
        let net = spec.bind(&bind(&[("A", a), ("B", b)])).unwrap();
        let full = net.contract().unwrap();
        let mut sum = Tensor::zeros(full.shape());
        for r in 0..4 {
            let part = net.slice_edge("r", r).unwrap().contract().unwrap();
            sum = sum.add(&part).unwrap();
        }
        assert!(sum.max_abs_diff(&full).unwrap() < 1e-14);
        assert!(net.slice_edge("i", 0).is_err());
    }
}

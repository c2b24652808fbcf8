use std::collections::HashSet;

use super::TensorNetwork;
use crate::error::{Error, Result};
use crate::ops::{outer, partial_trace, permute0, tensordot0};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
enum Step {
    /// Trace 0-based axes `a < b` of slot `slot`.
    Trace { slot: usize, a: usize, b: usize },
    /// Merge two slots into a new one.
    Merge {
        left: usize,
        right: usize,
        axes_left: Vec<usize>,
        axes_right: Vec<usize>,
    },
}

/// A contraction order resolved down to axis positions, so the same network
/// structure can be evaluated repeatedly on fresh tensors.
#[derive(Debug, Clone)]
pub struct ContractionProgram {
    inputs: usize,
    steps: Vec<Step>,
    final_slot: usize,
    final_perm: Vec<usize>,
}

/// Cost of a pairwise contraction plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanCost {
    /// Sum over merges of the product of all dimensions involved.
    pub flops: u64,
    /// Largest intermediate tensor created by a merge.
    pub peak_size: u64,
}

impl TensorNetwork {
    fn leg_dims(&self, legs: &[String]) -> u64 {
        legs.iter()
            .map(|l| self.dims[l] as u64)
            .fold(1u64, |a, b| a.saturating_mul(b))
    }

    /// Legs left on a node once repeated labels (self-edges) are traced out.
    fn traced_legs(legs: &[String]) -> Vec<String> {
        legs.iter()
            .filter(|l| legs.iter().filter(|m| m == l).count() == 1)
            .cloned()
            .collect()
    }

    fn merged_legs(a: &[String], b: &[String]) -> Vec<String> {
        a.iter()
            .filter(|l| !b.contains(l))
            .chain(b.iter().filter(|l| !a.contains(l)))
            .cloned()
            .collect()
    }

    /// Greedy pairwise order: repeatedly merge, among pairs sharing at least
    /// one edge (or among all pairs when none do), the pair whose result has
    /// the fewest entries; ties go to the smallest `(id, id)`. Merges are on
    /// SSA ids as in [`TensorNetwork::contract_with`].
    pub fn contraction_order(&self) -> Vec<(usize, usize)> {
        let mut active: Vec<(usize, Vec<String>)> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (i, Self::traced_legs(&n.legs)))
            .collect();
        let mut next_id = active.len();
        let mut plan = Vec::new();
        while active.len() > 1 {
            let mut best: Option<(bool, u64, usize, usize, usize, usize)> = None;
            for x in 0..active.len() {
                for y in x + 1..active.len() {
                    let (ia, la) = &active[x];
                    let (ib, lb) = &active[y];
                    let connected = la.iter().any(|l| lb.contains(l));
                    let size = self.leg_dims(&Self::merged_legs(la, lb));
                    let (lo, hi) = ((*ia).min(*ib), (*ia).max(*ib));
                    // prefer connected, then smaller result, then lower ids
                    let key = (!connected, size, lo, hi, x, y);
                    if best.is_none_or(|b| (key.0, key.1, key.2, key.3) < (b.0, b.1, b.2, b.3)) {
                        best = Some(key);
                    }
                }
            }
            let (_, _, lo, hi, x, y) = best.unwrap();
            let lb = active.remove(y).1;
            let la = active.remove(x).1;
            active.push((next_id, Self::merged_legs(&la, &lb)));
            next_id += 1;
            plan.push((lo, hi));
        }
        plan
    }

    /// Flop count and peak intermediate size of `plan`.
    pub fn plan_cost(&self, plan: &[(usize, usize)]) -> Result<PlanCost> {
        let mut slots: Vec<Option<Vec<String>>> = self
            .nodes
            .iter()
            .map(|n| Some(Self::traced_legs(&n.legs)))
            .collect();
        let mut cost = PlanCost {
            flops: 0,
            peak_size: 0,
        };
        for &(a, b) in plan {
            let la = take_slot(&mut slots, a)?;
            let lb = take_slot(&mut slots, b)?;
            let mut all: Vec<String> = la.clone();
            all.extend(lb.iter().filter(|l| !la.contains(l)).cloned());
            let merged = Self::merged_legs(&la, &lb);
            cost.flops = cost.flops.saturating_add(self.leg_dims(&all));
            cost.peak_size = cost.peak_size.max(self.leg_dims(&merged));
            slots.push(Some(merged));
        }
        Ok(cost)
    }

    /// Resolves `plan` to axis positions. Nodes left unmerged by the plan
    /// are combined by outer products in id order.
    pub fn compile(&self, plan: &[(usize, usize)]) -> Result<ContractionProgram> {
        let mut steps = Vec::new();
        let mut slots: Vec<Option<Vec<String>>> = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let mut legs = n.legs.clone();
            loop {
                let dup = (0..legs.len())
                    .find_map(|a| (a + 1..legs.len()).find(|&b| legs[a] == legs[b]).map(|b| (a, b)));
                match dup {
                    Some((a, b)) => {
                        steps.push(Step::Trace { slot: i, a, b });
                        legs.remove(b);
                        legs.remove(a);
                    }
                    None => break,
                }
            }
            slots.push(Some(legs));
        }
        let inputs = slots.len();
        let mut merge = |slots: &mut Vec<Option<Vec<String>>>, a: usize, b: usize| -> Result<()> {
            let la = take_slot(slots, a)?;
            let lb = take_slot(slots, b)?;
            let mut axes_left = Vec::new();
            let mut axes_right = Vec::new();
            for (x, l) in la.iter().enumerate() {
                if let Some(y) = lb.iter().position(|m| m == l) {
                    axes_left.push(x);
                    axes_right.push(y);
                }
            }
            steps.push(Step::Merge {
                left: a,
                right: b,
                axes_left,
                axes_right,
            });
            slots.push(Some(Self::merged_legs(&la, &lb)));
            Ok(())
        };
        for &(a, b) in plan {
            if a == b {
                return Err(Error::Network(format!("plan merges node {a} with itself")));
            }
            merge(&mut slots, a, b)?;
        }
        loop {
            let live: Vec<usize> = (0..slots.len()).filter(|&i| slots[i].is_some()).collect();
            if live.len() <= 1 {
                break;
            }
            merge(&mut slots, live[0], live[1])?;
        }
        let final_slot = (0..slots.len())
            .find(|&i| slots[i].is_some())
            .ok_or_else(|| Error::Network("empty network".into()))?;
        let legs = slots[final_slot].clone().unwrap();
        let got: HashSet<&String> = legs.iter().collect();
        let want: HashSet<&String> = self.output.iter().collect();
        if got != want || legs.len() != self.output.len() {
            return Err(Error::Network(format!(
                "contraction left legs {legs:?}, expected output {:?}",
                self.output
            )));
        }
        let final_perm = self
            .output
            .iter()
            .map(|l| legs.iter().position(|m| m == l).unwrap())
            .collect();
        Ok(ContractionProgram {
            inputs,
            steps,
            final_slot,
            final_perm,
        })
    }
}

fn take_slot(slots: &mut [Option<Vec<String>>], id: usize) -> Result<Vec<String>> {
    slots
        .get_mut(id)
        .and_then(Option::take)
        .ok_or_else(|| Error::Network(format!("plan refers to unavailable node {id}")))
}

impl ContractionProgram {
    /// Evaluates the program on `tensors`, one per network node.
    pub fn run(&self, tensors: &[&Tensor]) -> Result<Tensor> {
        if tensors.len() != self.inputs {
            return Err(Error::Network(format!(
                "program expects {} tensors, got {}",
                self.inputs,
                tensors.len()
            )));
        }
        let mut slots: Vec<Option<Tensor>> = Vec::with_capacity(self.inputs + self.steps.len());
        let mut traced: Vec<Option<Tensor>> = vec![None; self.inputs];
        for step in &self.steps {
            if let Step::Trace { slot, a, b } = step {
                let cur = traced[*slot].take().unwrap_or_else(|| tensors[*slot].clone());
                traced[*slot] = Some(partial_trace(&cur, a + 1, b + 1)?);
            }
        }
        // borrow untraced inputs lazily to avoid copies
        let mut borrowed: Vec<Option<&Tensor>> = tensors.iter().map(|t| Some(*t)).collect();
        for (i, t) in traced.into_iter().enumerate() {
            slots.push(t);
            if slots[i].is_some() {
                borrowed[i] = None;
            }
        }
        let mut fetch = |slots: &mut Vec<Option<Tensor>>, id: usize| -> Tensor {
            match slots[id].take() {
                Some(t) => t,
                None => borrowed[id].take().expect("slot consumed twice").clone(),
            }
        };
        for step in &self.steps {
            if let Step::Merge {
                left,
                right,
                axes_left,
                axes_right,
            } = step
            {
                let a = fetch(&mut slots, *left);
                let b = fetch(&mut slots, *right);
                let merged = if axes_left.is_empty() {
                    outer(&a, &b)
                } else {
                    tensordot0(&a, axes_left, &b, axes_right)?
                };
                slots.push(Some(merged));
            }
        }
        let result = fetch(&mut slots, self.final_slot);
        Ok(permute0(&result, &self.final_perm))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Bindings, NetworkSpec};
    use crate::random::uniform_tensor;
    use crate::tensor::Tensor;

    fn bindings(pairs: Vec<(&str, Tensor)>) -> Bindings {
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// All complete pairwise plans over `n` nodes.
    fn all_plans(live: Vec<usize>, next: usize) -> Vec<Vec<(usize, usize)>> {
        if live.len() <= 1 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for x in 0..live.len() {
            for y in x + 1..live.len() {
                let mut rest: Vec<usize> = live
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != x && *k != y)
                    .map(|(_, v)| *v)
                    .collect();
                rest.push(next);
                for mut tail in all_plans(rest, next + 1) {
                    tail.insert(0, (live[x], live[y]));
                    out.push(tail);
                }
            }
        }
        out
    }

    #[test]
    fn greedy_order_on_unbalanced_chain() {
        // A[2x100] B[100x100] C[100x2]: cheap ends first
        let spec = NetworkSpec::parse("A[a,b] B[b,c] C[c,d] -> [a,d]").unwrap();
        let net = spec
            .bind(&bindings(vec![
                ("A", Tensor::zeros(&[2, 100])),
                ("B", Tensor::zeros(&[100, 100])),
                ("C", Tensor::zeros(&[100, 2])),
            ]))
            .unwrap();
        let greedy = net.contraction_order();
        let greedy_cost = net.plan_cost(&greedy).unwrap().flops;
        let optimal = all_plans(vec![0, 1, 2], 3)
            .iter()
            .map(|p| net.plan_cost(p).unwrap().flops)
            .min()
            .unwrap();
        assert!(greedy_cost <= 2 * optimal, "{greedy_cost} vs {optimal}");
        assert_eq!(greedy, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn single_node_has_empty_plan() {
        let spec = NetworkSpec::parse("A[i,j] -> [j,i]").unwrap();
        let a = uniform_tensor(&[2, 3], -1., 1., 0);
        let net = spec.bind(&bindings(vec![("A", a.clone())])).unwrap();
        assert!(net.contraction_order().is_empty());
        let t = net.contract().unwrap();
        assert_eq!(t, crate::ops::transpose(&a).unwrap());
    }

    #[test]
    fn every_order_gives_the_same_result() {
        let spec = NetworkSpec::parse("A[i,j,k] B[j,l] C[k,l,m] D[m,n] -> [i,n]").unwrap();
        let net = spec
            .bind(&bindings(vec![
                ("A", uniform_tensor(&[2, 3, 2], -1., 1., 1)),
                ("B", uniform_tensor(&[3, 4], -1., 1., 2)),
                ("C", uniform_tensor(&[2, 4, 3], -1., 1., 3)),
                ("D", uniform_tensor(&[3, 2], -1., 1., 4)),
            ]))
            .unwrap();
        let reference = net.contract().unwrap();
        for plan in all_plans(vec![0, 1, 2, 3], 4) {
            let t = net.contract_with(&plan).unwrap();
            assert!(t.max_abs_diff(&reference).unwrap() < 1e-12);
        }
    }

    #[test]
    fn bad_plans_are_rejected() {
        let spec = NetworkSpec::parse("A[i,j] B[j,k] -> [i,k]").unwrap();
        let net = spec
            .bind(&bindings(vec![("A", Tensor::eye(2)), ("B", Tensor::eye(2))]))
            .unwrap();
        assert!(net.contract_with(&[(0, 0)]).is_err());
        assert!(net.contract_with(&[(0, 5)]).is_err());
        assert!(net.contract_with(&[(0, 1), (0, 2)]).is_err());
    }

    #[test]
    fn disconnected_parts_use_outer_products() {
        let spec = NetworkSpec::parse("u[i] v[j] -> [i,j]").unwrap();
        let u = Tensor::vector(&[1., 2.]);
        let v = Tensor::vector(&[3., 4.]);
        let t = spec.contract(&bindings(vec![("u", u), ("v", v)])).unwrap();
        assert_eq!(t.data(), &[3., 4., 6., 8.]);
    }
}

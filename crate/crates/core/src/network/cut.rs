use super::TensorNetwork;
use crate::error::{Error, Result};

/// Upper bound on the rank of a matricization, with the cut achieving it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutBound {
    pub bound: u64,
    /// Node ids on the row side of the witnessing cut.
    pub row_side: Vec<usize>,
    /// Set when no node bipartition separates the row and column legs (some
    /// node carries both); the bound is then the trivial `min(rows, cols)`.
    pub degenerate: bool,
}

const MAX_NODES: usize = 20;

impl TensorNetwork {
    /// Product of the dimensions of internal edges crossing the node
    /// bipartition given by `row_side` (true = row side).
    pub fn cut_weight(&self, row_side: &[bool]) -> u64 {
        self.internal_edges()
            .iter()
            .filter(|(_, a, b)| row_side[*a] != row_side[*b])
            .map(|(l, _, _)| self.dims[l] as u64)
            .fold(1u64, |acc, d| acc.saturating_mul(d))
    }

    /// Smallest cut weight over node bipartitions that put every node with a
    /// dangling leg in `rows` on one side and every node with another
    /// dangling leg on the other. Exhaustive over the free nodes.
    pub fn rank_bound(&self, rows: &[&str]) -> Result<CutBound> {
        let n = self.nodes.len();
        if n > MAX_NODES {
            return Err(Error::InvalidArgument(format!(
                "rank_bound enumerates bipartitions and supports at most {MAX_NODES} nodes, got {n}"
            )));
        }
        for r in rows {
            if !self.output.iter().any(|o| o == r) {
                return Err(Error::Network(format!("`{r}` is not an output label")));
            }
        }
        // 0 = free, 1 = row side, 2 = column side, 3 = both (conflict)
        let mut side = vec![0u8; n];
        for l in &self.output {
            let node = self.output_node(l).expect("output label on a node");
            side[node] |= if rows.contains(&l.as_str()) { 1 } else { 2 };
        }
        if side.contains(&3) {
            let prod = |want_row: bool| {
                self.output
                    .iter()
                    .filter(|l| rows.contains(&l.as_str()) == want_row)
                    .map(|l| self.dims[l] as u64)
                    .fold(1u64, |a, b| a.saturating_mul(b))
            };
            return Ok(CutBound {
                bound: prod(true).min(prod(false)),
                row_side: Vec::new(),
                degenerate: true,
            });
        }
        let free: Vec<usize> = (0..n).filter(|&i| side[i] == 0).collect();
        let mut assign: Vec<bool> = side.iter().map(|&s| s == 1).collect();
        let mut best: Option<(u64, Vec<bool>)> = None;
        for mask in 0u64..(1u64 << free.len()) {
            for (k, &node) in free.iter().enumerate() {
                assign[node] = mask >> k & 1 == 1;
            }
            let w = self.cut_weight(&assign);
            if best.as_ref().is_none_or(|(b, _)| w < *b) {
                best = Some((w, assign.clone()));
            }
        }
        let (bound, assign) = best.expect("at least one bipartition");
        Ok(CutBound {
            bound,
            row_side: (0..n).filter(|&i| assign[i]).collect(),
            degenerate: false,
        })
    }
}

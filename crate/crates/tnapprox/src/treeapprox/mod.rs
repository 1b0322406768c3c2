//! Tree tensor networks: canonical forms, canonicalization-based truncation,
//! and the density-matrix algorithm that approximates an arbitrary network
//! by a tree of a prescribed shape.

mod canonical;
mod density;

pub(crate) use canonical::qr_toward;
pub use canonical::{canonical_form, orthogonality_error, truncate_tree_canonical, CanonicalForm};
pub use density::{density_matrix_alg, DensityContext, DmOutput, DmStats, Target};

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::netgraph::{TensorNetwork, VertexId};
use crate::tensor::{FlopCounter, Mode, Tensor};

/// A network whose contracted edges form a tree, with a designated root.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeTensorNetwork {
    pub network: TensorNetwork,
    pub root: VertexId,
}

impl TreeTensorNetwork {
    pub fn new(network: TensorNetwork, root: VertexId) -> Result<Self> {
        let t = TreeTensorNetwork { network, root };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.network.tensor(self.root).is_none() {
            return Err(Error::TreeMismatch(format!("root {} is not a vertex", self.root)));
        }
        let adj = self.network.adjacency();
        if adj.len() + 1 != self.network.len() {
            return Err(Error::TreeMismatch(format!(
                "{} vertices joined by {} adjacent pairs is not a tree",
                self.network.len(),
                adj.len()
            )));
        }
        if self.parents().len() + 1 != self.network.len() {
            return Err(Error::TreeMismatch("tree network is disconnected".into()));
        }
        Ok(())
    }

    /// Adjacent vertices, ascending.
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let mut out: BTreeSet<VertexId> = BTreeSet::new();
        for ((a, b), _) in self.network.adjacency() {
            if a == v {
                out.insert(b);
            } else if b == v {
                out.insert(a);
            }
        }
        out.into_iter().collect()
    }

    fn neighbor_map(&self) -> BTreeMap<VertexId, Vec<VertexId>> {
        let mut out: BTreeMap<VertexId, Vec<VertexId>> = self.network.vertices().map(|v| (v, Vec::new())).collect();
        for ((a, b), _) in self.network.adjacency() {
            out.get_mut(&a).expect("vertex").push(b);
            out.get_mut(&b).expect("vertex").push(a);
        }
        out
    }

    /// Parent of every vertex except the root, rooted at `self.root`.
    pub fn parents(&self) -> BTreeMap<VertexId, VertexId> {
        self.parents_from(self.root)
    }

    pub fn parents_from(&self, root: VertexId) -> BTreeMap<VertexId, VertexId> {
        let nb = self.neighbor_map();
        let mut out = BTreeMap::new();
        let mut stack = vec![root];
        let mut seen = BTreeSet::from([root]);
        while let Some(x) = stack.pop() {
            for &y in &nb[&x] {
                if seen.insert(y) {
                    out.insert(y, x);
                    stack.push(y);
                }
            }
        }
        out
    }

    /// Children before parents, lower ids first; the root is last.
    pub fn post_order(&self) -> Vec<VertexId> {
        self.post_order_from(self.root)
    }

    pub fn post_order_from(&self, root: VertexId) -> Vec<VertexId> {
        let nb = self.neighbor_map();
        let mut out = Vec::with_capacity(nb.len());
        post(&nb, root, None, &mut out);
        out
    }

    /// Vertices from `a` to `b`, both included.
    pub fn path(&self, a: VertexId, b: VertexId) -> Vec<VertexId> {
        let parents = self.parents_from(b);
        let mut out = vec![a];
        let mut x = a;
        while x != b {
            x = parents[&x];
            out.push(x);
        }
        out
    }

    /// Modes shared by two vertices.
    pub fn bond(&self, a: VertexId, b: VertexId) -> Vec<Mode> {
        let tb = self.network.tensor(b).expect("vertex");
        self.network.tensor(a).expect("vertex").modes().iter().copied().filter(|m| tb.has(m.id)).collect()
    }

    /// Largest bond dimension (product of shared sizes) over tree edges.
    pub fn max_bond(&self) -> usize {
        self.parents().iter().map(|(&v, &p)| self.bond(v, p).iter().map(|m| m.size).product()).max().unwrap_or(1)
    }

    pub fn contract(&self, flops: &FlopCounter) -> Result<Tensor> {
        self.network.contract(flops)
    }

    /// Rescales the root to unit norm and returns the norm it had.
    pub fn normalize_root(&mut self) -> f64 {
        let t = self.network.tensor_mut(self.root).expect("root vertex");
        let n = t.norm();
        if n > 0.0 {
            t.scale(1.0 / n);
        }
        n
    }
}

fn post(nb: &BTreeMap<VertexId, Vec<VertexId>>, x: VertexId, from: Option<VertexId>, out: &mut Vec<VertexId>) {
    let mut kids: Vec<VertexId> = nb[&x].iter().copied().filter(|&y| Some(y) != from).collect();
    kids.sort_unstable();
    for y in kids {
        post(nb, y, Some(x), out);
    }
    out.push(x);
}

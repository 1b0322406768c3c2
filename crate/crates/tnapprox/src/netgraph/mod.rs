//! Tensor-network graphs: structure queries, min-cuts, recursive bisection,
//! partitioned contraction plans and embedding into binary trees.

mod bisect;
mod embed;
mod flow;
mod plan;

pub use bisect::{linear_ordering, order_edge_sets};
pub use embed::{tree_embedding, TreeEmbedding};
pub use flow::{mincut, mincut_within, MinCut};
pub use plan::{CtNode, ContractionTree, PartitionedPlan, Partitioning};

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::tensor::{contract_all, FlopCounter, Mode, Tensor};

pub type VertexId = usize;

/// An edge of the network. `b` is `None` for a dangling (uncontracted) edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub mode: Mode,
    pub a: VertexId,
    pub b: Option<VertexId>,
}

impl Edge {
    pub fn is_dangling(&self) -> bool {
        self.b.is_none()
    }

    pub fn other(&self, v: VertexId) -> Option<VertexId> {
        match self.b {
            Some(b) if self.a == v => Some(b),
            Some(_) => Some(self.a),
            None => None,
        }
    }
}

/// Sum of natural-log mode sizes.
pub fn edge_weight_sum(modes: &[Mode]) -> f64 {
    modes.iter().map(Mode::weight).sum()
}

/// Tensors keyed by vertex id. Edges are implied by labels: a label carried
/// by two tensors is contracted, a label carried by one is dangling.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorNetwork {
    tensors: BTreeMap<VertexId, Tensor>,
}

impl TensorNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Vertices are numbered `0..tensors.len()`.
    pub fn from_tensors(tensors: Vec<Tensor>) -> Result<Self> {
        Self::from_map(tensors.into_iter().enumerate().collect())
    }

    pub fn from_map(tensors: BTreeMap<VertexId, Tensor>) -> Result<Self> {
        let g = TensorNetwork { tensors };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen: BTreeMap<u64, (Mode, usize)> = BTreeMap::new();
        for (&v, t) in &self.tensors {
            for m in t.modes() {
                let e = seen.entry(m.id).or_insert((*m, 0));
                if e.0.size != m.size {
                    return Err(Error::InvalidNetwork(format!(
                        "edge {} joins modes of sizes {} and {} (vertex {v})",
                        m.id, e.0.size, m.size
                    )));
                }
                e.1 += 1;
                if e.1 > 2 {
                    return Err(Error::InvalidNetwork(format!("label {} appears on more than two tensors", m.id)));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.tensors.keys().copied()
    }

    pub fn tensor(&self, v: VertexId) -> Option<&Tensor> {
        self.tensors.get(&v)
    }

    pub fn tensor_mut(&mut self, v: VertexId) -> Option<&mut Tensor> {
        self.tensors.get_mut(&v)
    }

    pub fn tensors(&self) -> impl Iterator<Item = (VertexId, &Tensor)> {
        self.tensors.iter().map(|(&v, t)| (v, t))
    }

    pub fn into_map(self) -> BTreeMap<VertexId, Tensor> {
        self.tensors
    }

    pub fn next_id(&self) -> VertexId {
        self.tensors.keys().next_back().map_or(0, |v| v + 1)
    }

    /// Adds a tensor under a new id. The caller keeps labels consistent.
    pub fn push(&mut self, t: Tensor) -> VertexId {
        let id = self.next_id();
        self.tensors.insert(id, t);
        id
    }

    pub fn insert(&mut self, v: VertexId, t: Tensor) -> Option<Tensor> {
        self.tensors.insert(v, t)
    }

    pub fn remove(&mut self, v: VertexId) -> Option<Tensor> {
        self.tensors.remove(&v)
    }

    /// All edges, ordered by label.
    pub fn edges(&self) -> Vec<Edge> {
        self.edge_map().into_values().collect()
    }

    pub fn edge_map(&self) -> BTreeMap<u64, Edge> {
        let mut map: BTreeMap<u64, Edge> = BTreeMap::new();
        for (&v, t) in &self.tensors {
            for m in t.modes() {
                map.entry(m.id)
                    .and_modify(|e| e.b = Some(v))
                    .or_insert(Edge { mode: *m, a: v, b: None });
            }
        }
        map
    }

    /// Dangling modes ordered by label.
    pub fn dangling(&self) -> Vec<Mode> {
        self.edge_map().into_values().filter(|e| e.is_dangling()).map(|e| e.mode).collect()
    }

    /// Summed edge weight between each adjacent vertex pair `(u, v)`, `u < v`.
    pub fn adjacency(&self) -> BTreeMap<(VertexId, VertexId), f64> {
        let mut adj = BTreeMap::new();
        for e in self.edge_map().values() {
            if let Some(b) = e.b {
                let key = (e.a.min(b), e.a.max(b));
                *adj.entry(key).or_insert(0.0) += e.mode.weight();
            }
        }
        adj
    }

    /// Induced sub-network; edges leaving `vs` become dangling.
    pub fn subnetwork(&self, vs: &BTreeSet<VertexId>) -> TensorNetwork {
        TensorNetwork {
            tensors: self.tensors.iter().filter(|(v, _)| vs.contains(v)).map(|(&v, t)| (v, t.clone())).collect(),
        }
    }

    /// Disjoint union; vertices of `other` are renumbered after those of `self`.
    pub fn union(&self, other: &TensorNetwork) -> Result<TensorNetwork> {
        let mut out = self.clone();
        for t in other.tensors.values() {
            out.push(t.clone());
        }
        out.validate()?;
        Ok(out)
    }

    /// Labels shared between two vertex sets.
    pub fn edges_between(&self, a: &BTreeSet<VertexId>, b: &BTreeSet<VertexId>) -> Vec<Mode> {
        self.edge_map()
            .into_values()
            .filter(|e| match e.b {
                Some(y) => (a.contains(&e.a) && b.contains(&y)) || (a.contains(&y) && b.contains(&e.a)),
                None => false,
            })
            .map(|e| e.mode)
            .collect()
    }

    /// Exact contraction of the whole network with the greedy pairwise path.
    pub fn contract(&self, flops: &FlopCounter) -> Result<Tensor> {
        contract_all(self.tensors.values().cloned().collect(), flops)
    }
}

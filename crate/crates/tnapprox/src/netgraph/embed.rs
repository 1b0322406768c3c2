use std::collections::{BTreeMap, BTreeSet};

use super::flow::mincut_within;
use super::{TensorNetwork, VertexId};
use crate::error::{Error, Result};
use crate::ordering::{Child, EmbeddingTree};
use crate::tensor::{fresh_label, Mode, Tensor};

/// A network with identity tensors added so that it fits an embedding tree,
/// and the tree node of every vertex.
///
/// Each leaf edge sits on a vertex mapped to the leaf's parent, every
/// contracted edge joins vertices on equal or adjacent tree nodes, and every
/// tree node has at least one vertex.
#[derive(Clone, Debug)]
pub struct TreeEmbedding {
    pub network: TensorNetwork,
    pub phi: BTreeMap<VertexId, usize>,
}

impl TreeEmbedding {
    /// Vertices mapped to each tree node.
    pub fn preimages(&self, num_nodes: usize) -> Vec<BTreeSet<VertexId>> {
        let mut out = vec![BTreeSet::new(); num_nodes];
        for (&v, &n) in &self.phi {
            out[n].insert(v);
        }
        out
    }
}

/// Maps the vertices of `g` onto the nodes of `t` by recursive min-cut
/// bisection, then patches the network with identities along tree paths.
pub fn tree_embedding(g: &TensorNetwork, t: &EmbeddingTree) -> Result<TreeEmbedding> {
    t.validate()?;
    let leaves: BTreeSet<u64> = t.leaves().into_iter().collect();
    let dangling: BTreeSet<u64> = g.dangling().iter().map(|m| m.id).collect();
    if leaves != dangling {
        return Err(Error::TreeMismatch(format!(
            "embedding tree has {} leaves but the network has {} uncontracted edges",
            leaves.len(),
            dangling.len()
        )));
    }
    let mut phi = BTreeMap::new();
    let all: BTreeSet<VertexId> = g.vertices().collect();
    assign(g, t, t.root, all, &mut phi)?;
    let mut network = g.clone();
    route(&mut network, t, &mut phi);
    Ok(TreeEmbedding { network, phi })
}

fn assign(
    g: &TensorNetwork,
    t: &EmbeddingTree,
    node: usize,
    vs: BTreeSet<VertexId>,
    phi: &mut BTreeMap<VertexId, usize>,
) -> Result<()> {
    let children = &t.nodes[node].children;
    if children.len() < 2 {
        for v in vs {
            phi.insert(v, node);
        }
        return Ok(());
    }
    // Edges that must leave this subtree through `node` toward its parent:
    // edges to vertices outside `vs` and foreign leaves sitting inside it.
    let own: BTreeSet<u64> = t.leaves_under(node).into_iter().collect();
    let up: Vec<u64> = g
        .edges()
        .into_iter()
        .filter(|e| {
            vs.contains(&e.a)
                && match e.b {
                    None => !own.contains(&e.mode.id),
                    Some(b) => !vs.contains(&b),
                }
                || e.b.is_some_and(|b| vs.contains(&b) && !vs.contains(&e.a))
        })
        .map(|e| e.mode.id)
        .collect();
    let (left, right) = (children[0], children[1]);
    let e_l = t.child_leaves(left);
    let mut e_r = t.child_leaves(right);
    let (s_l, s_r) = match left {
        Child::Node(n) => {
            let sink: Vec<u64> = e_r.iter().chain(&up).copied().collect();
            let cut = mincut_within(g, &vs, &e_l, &sink)?;
            assign(g, t, n, cut.source.clone(), phi)?;
            (cut.source, cut.sink)
        }
        Child::Leaf(_) => (BTreeSet::new(), vs),
    };
    let mut e_l2: Vec<u64> = g.edges_between(&s_l, &s_r).iter().map(|m| m.id).collect();
    if let Child::Leaf(l) = left {
        e_l2.push(l);
    }
    e_l2.extend(&up);
    match right {
        Child::Node(n) => {
            let cut = mincut_within(g, &s_r, &e_l2, &e_r)?;
            for &v in &cut.source {
                phi.insert(v, node);
            }
            assign(g, t, n, cut.sink, phi)?;
        }
        Child::Leaf(_) => {
            e_r.clear();
            for v in s_r {
                phi.insert(v, node);
            }
        }
    }
    Ok(())
}

/// Chain of identities on the interior nodes of `path`, replacing `label` on
/// the vertex `from`. The last identity carries `label` itself.
fn bridge(g: &mut TensorNetwork, phi: &mut BTreeMap<VertexId, usize>, from: VertexId, mode: Mode, hops: &[usize]) {
    if hops.is_empty() {
        return;
    }
    let mut prev = Mode::fresh(mode.size);
    g.tensor_mut(from).expect("vertex exists").relabel_in_place(mode.id, prev.id);
    for (i, &node) in hops.iter().enumerate() {
        let next = if i + 1 == hops.len() { mode } else { Mode::new(fresh_label(), mode.size) };
        let id = g.push(Tensor::identity(prev, next).expect("matching sizes"));
        phi.insert(id, node);
        prev = next;
    }
}

fn route(g: &mut TensorNetwork, t: &EmbeddingTree, phi: &mut BTreeMap<VertexId, usize>) {
    let leaf_parent = t.leaf_parents();
    for e in g.edges() {
        let na = phi[&e.a];
        match e.b {
            None => {
                let target = leaf_parent[&e.mode.id];
                if na != target {
                    let path = t.path(na, target);
                    bridge(g, phi, e.a, e.mode, &path[1..]);
                }
            }
            Some(b) => {
                let nb = phi[&b];
                let path = t.path(na, nb);
                if path.len() > 2 {
                    bridge(g, phi, e.a, e.mode, &path[1..path.len() - 1]);
                }
            }
        }
    }
    let used: BTreeSet<usize> = phi.values().copied().collect();
    for n in t.post_order() {
        if !used.contains(&n) {
            let id = g.push(Tensor::scalar(1.0));
            phi.insert(id, n);
        }
    }
}

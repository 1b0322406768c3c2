use std::collections::{BTreeMap, BTreeSet};

use super::{TensorNetwork, VertexId};
use crate::error::{Error, Result};

/// Assignment of every vertex to one of `0..num_parts()` nonempty parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partitioning {
    part_of: BTreeMap<VertexId, usize>,
    members: Vec<BTreeSet<VertexId>>,
}

impl Partitioning {
    pub fn new(part_of: BTreeMap<VertexId, usize>) -> Result<Self> {
        let n = part_of.values().map(|&p| p + 1).max().unwrap_or(0);
        let mut members = vec![BTreeSet::new(); n];
        for (&v, &p) in &part_of {
            members[p].insert(v);
        }
        if let Some(p) = members.iter().position(BTreeSet::is_empty) {
            return Err(Error::InvalidPlan(format!("part {p} is empty")));
        }
        Ok(Partitioning { part_of, members })
    }

    /// Consecutive chunks of `size` vertices taken from `order`.
    pub fn chunks(order: &[VertexId], size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidPlan("partition size must be at least 1".into()));
        }
        Self::new(order.iter().enumerate().map(|(i, &v)| (v, i / size)).collect())
    }

    /// Every vertex of `g` in one part.
    pub fn single(g: &TensorNetwork) -> Result<Self> {
        Self::new(g.vertices().map(|v| (v, 0)).collect())
    }

    pub fn num_parts(&self) -> usize {
        self.members.len()
    }

    pub fn part_of(&self, v: VertexId) -> Option<usize> {
        self.part_of.get(&v).copied()
    }

    pub fn members(&self, part: usize) -> &BTreeSet<VertexId> {
        &self.members[part]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtNode {
    Leaf(usize),
    Join(usize, usize),
}

/// Rooted binary tree whose leaves are partitions. `Join` refers to other
/// node indices; a join's vertex set is the union of its children's.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractionTree {
    pub nodes: Vec<CtNode>,
    pub root: usize,
}

impl ContractionTree {
    /// `((p0 p1) p2) ... p(n-1)`: the maximally unbalanced path.
    pub fn sequential(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPlan("no partitions".into()));
        }
        let mut nodes = vec![CtNode::Leaf(0)];
        let mut root = 0;
        for p in 1..n {
            nodes.push(CtNode::Leaf(p));
            nodes.push(CtNode::Join(root, nodes.len() - 1));
            root = nodes.len() - 1;
        }
        Ok(ContractionTree { nodes, root })
    }

    /// Checks the tree is rooted, acyclic, and its leaves are exactly `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; self.nodes.len()];
        let mut leaves = BTreeSet::new();
        let mut stack = vec![*self.nodes.get(self.root).map(|_| &self.root).ok_or_else(|| bad("root out of range"))?];
        while let Some(i) = stack.pop() {
            if i >= self.nodes.len() {
                return Err(bad("child out of range"));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(bad("node reached twice"));
            }
            match self.nodes[i] {
                CtNode::Leaf(p) => {
                    if !leaves.insert(p) {
                        return Err(bad("partition appears twice"));
                    }
                }
                CtNode::Join(a, b) => stack.extend([a, b]),
            }
        }
        if leaves != (0..n).collect() {
            return Err(bad("leaves do not match the partitions"));
        }
        Ok(())
    }

    /// Parent of every node reachable from the root.
    pub fn parents(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if let CtNode::Join(a, b) = *n {
                out.insert(a, i);
                out.insert(b, i);
            }
        }
        out
    }

    /// Partitions below `node`.
    pub fn parts_under(&self, node: usize) -> BTreeSet<usize> {
        match self.nodes[node] {
            CtNode::Leaf(p) => BTreeSet::from([p]),
            CtNode::Join(a, b) => {
                let mut s = self.parts_under(a);
                s.extend(self.parts_under(b));
                s
            }
        }
    }

    /// Join nodes with children before parents, left subtree first.
    pub fn joins_post_order(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.post(self.root, &mut out);
        out
    }

    fn post(&self, i: usize, out: &mut Vec<usize>) {
        if let CtNode::Join(a, b) = self.nodes[i] {
            self.post(a, out);
            self.post(b, out);
            out.push(i);
        }
    }

    pub fn leaf_node(&self, part: usize) -> Option<usize> {
        self.nodes.iter().position(|n| *n == CtNode::Leaf(part))
    }
}

fn bad(msg: &str) -> Error {
    Error::InvalidPlan(msg.into())
}

/// A partitioning together with the order in which parts are merged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionedPlan {
    pub partitioning: Partitioning,
    pub tree: ContractionTree,
}

impl PartitionedPlan {
    pub fn new(partitioning: Partitioning, tree: ContractionTree) -> Result<Self> {
        tree.validate(partitioning.num_parts())?;
        Ok(PartitionedPlan { partitioning, tree })
    }

    /// Parts merged one at a time in index order.
    pub fn sequential(partitioning: Partitioning) -> Result<Self> {
        let tree = ContractionTree::sequential(partitioning.num_parts())?;
        Self::new(partitioning, tree)
    }

    pub fn validate(&self, g: &TensorNetwork) -> Result<()> {
        self.tree.validate(self.partitioning.num_parts())?;
        let plan_vs: BTreeSet<VertexId> = self.partitioning.part_of.keys().copied().collect();
        let net_vs: BTreeSet<VertexId> = g.vertices().collect();
        if plan_vs != net_vs {
            return Err(bad("partitioning does not cover exactly the network's vertices"));
        }
        Ok(())
    }

    /// Vertices below a contraction-tree node.
    pub fn vertices_under(&self, node: usize) -> BTreeSet<VertexId> {
        self.tree
            .parts_under(node)
            .into_iter()
            .flat_map(|p| self.partitioning.members(p).iter().copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_tree_shape() {
        let t = ContractionTree::sequential(3).unwrap();
        t.validate(3).unwrap();
        assert_eq!(t.joins_post_order().len(), 2);
        assert_eq!(t.parts_under(t.root), BTreeSet::from([0, 1, 2]));
        assert_eq!(t.nodes[t.root], CtNode::Join(2, 3));
    }

    #[test]
    fn empty_part_is_rejected() {
        let m = BTreeMap::from([(0, 0), (1, 2)]);
        assert!(Partitioning::new(m).is_err());
    }

    #[test]
    fn chunks_group_consecutive_vertices() {
        let p = Partitioning::chunks(&[5, 3, 1, 0, 2], 2).unwrap();
        assert_eq!(p.num_parts(), 3);
        assert_eq!(p.members(0), &BTreeSet::from([3, 5]));
        assert_eq!(p.part_of(2), Some(2));
    }

    #[test]
    fn duplicate_leaves_are_rejected() {
        let t = ContractionTree { nodes: vec![CtNode::Leaf(0), CtNode::Leaf(0), CtNode::Join(0, 1)], root: 2 };
        assert!(t.validate(1).is_err());
    }
}

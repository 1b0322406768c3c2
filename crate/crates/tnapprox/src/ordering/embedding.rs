use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Shape of every intermediate tree network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ansatz {
    Mps,
    Comb,
}

impl std::str::FromStr for Ansatz {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mps" => Ok(Ansatz::Mps),
            "comb" => Ok(Ansatz::Comb),
            other => Err(Error::InvalidParameter(format!("unknown ansatz {other:?}"))),
        }
    }
}

impl std::fmt::Display for Ansatz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ansatz::Mps => "mps",
            Ansatz::Comb => "comb",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Child {
    /// An uncontracted edge, by label.
    Leaf(u64),
    Node(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub children: Vec<Child>,
}

/// Rooted binary tree whose leaves are uncontracted edges.
///
/// Every node has two children, except a root over fewer than two leaves,
/// which holds them directly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingTree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
    pub ansatz: Ansatz,
}

impl EmbeddingTree {
    /// Node `i` joins node `i - 1` with `labels[i + 1]`; node 0 joins the
    /// first two labels.
    pub fn mps(labels: &[u64]) -> Self {
        let mut t = EmbeddingTree { nodes: Vec::new(), root: 0, ansatz: Ansatz::Mps };
        let items: Vec<Child> = labels.iter().map(|&l| Child::Leaf(l)).collect();
        t.root = t.chain(items);
        t
    }

    /// One chain per subset, and a spine chaining the subset chains in order.
    pub fn comb(sets: &[Vec<u64>]) -> Self {
        let mut t = EmbeddingTree { nodes: Vec::new(), root: 0, ansatz: Ansatz::Comb };
        let mut teeth = Vec::new();
        for set in sets.iter().filter(|s| !s.is_empty()) {
            if set.len() == 1 {
                teeth.push(Child::Leaf(set[0]));
            } else {
                let items = set.iter().map(|&l| Child::Leaf(l)).collect();
                teeth.push(Child::Node(t.chain(items)));
            }
        }
        t.root = match teeth.as_slice() {
            [Child::Node(n)] => *n,
            _ => t.chain(teeth),
        };
        t
    }

    /// Chains `items` left to right and returns the top node.
    fn chain(&mut self, items: Vec<Child>) -> usize {
        if items.len() < 2 {
            self.nodes.push(TreeNode { children: items });
            return self.nodes.len() - 1;
        }
        self.nodes.push(TreeNode { children: vec![items[0], items[1]] });
        for &it in &items[2..] {
            let prev = self.nodes.len() - 1;
            self.nodes.push(TreeNode { children: vec![Child::Node(prev), it] });
        }
        self.nodes.len() - 1
    }

    /// Leaf labels left to right.
    pub fn leaves(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.leaves_into(self.root, &mut out);
        out
    }

    pub fn leaves_under(&self, node: usize) -> Vec<u64> {
        let mut out = Vec::new();
        self.leaves_into(node, &mut out);
        out
    }

    fn leaves_into(&self, node: usize, out: &mut Vec<u64>) {
        for &c in &self.nodes[node].children {
            match c {
                Child::Leaf(l) => out.push(l),
                Child::Node(n) => self.leaves_into(n, out),
            }
        }
    }

    pub fn child_leaves(&self, c: Child) -> Vec<u64> {
        match c {
            Child::Leaf(l) => vec![l],
            Child::Node(n) => self.leaves_under(n),
        }
    }

    /// Parent of every non-root node.
    pub fn parents(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            for c in &n.children {
                if let Child::Node(j) = c {
                    out.insert(*j, i);
                }
            }
        }
        out
    }

    /// Node directly above each leaf label.
    pub fn leaf_parents(&self) -> BTreeMap<u64, usize> {
        let mut out = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            for c in &n.children {
                if let Child::Leaf(l) = c {
                    out.insert(*l, i);
                }
            }
        }
        out
    }

    /// Nodes reachable from the root, children before parents, left first.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.post(self.root, &mut out);
        out
    }

    fn post(&self, node: usize, out: &mut Vec<usize>) {
        for &c in &self.nodes[node].children {
            if let Child::Node(n) = c {
                self.post(n, out);
            }
        }
        out.push(node);
    }

    /// Nodes on the tree path from `a` to `b`, both included.
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let parents = self.parents();
        let up = |mut x: usize| {
            let mut chain = vec![x];
            while let Some(&p) = parents.get(&x) {
                chain.push(p);
                x = p;
            }
            chain
        };
        let ua = up(a);
        let ub = up(b);
        let in_b: BTreeSet<usize> = ub.iter().copied().collect();
        let meet_a = ua.iter().position(|x| in_b.contains(x)).expect("common root");
        let meet = ua[meet_a];
        let meet_b = ub.iter().position(|&x| x == meet).expect("common root");
        let mut out: Vec<usize> = ua[..=meet_a].to_vec();
        out.extend(ub[..meet_b].iter().rev());
        out
    }

    /// Checks binary shape, reachability and distinct leaves.
    pub fn validate(&self) -> Result<()> {
        let post = self.post_order();
        let distinct: BTreeSet<usize> = post.iter().copied().collect();
        if distinct.len() != post.len() {
            return Err(Error::TreeMismatch("embedding tree has a cycle or shared node".into()));
        }
        let leaves = self.leaves();
        let distinct: BTreeSet<u64> = leaves.iter().copied().collect();
        if distinct.len() != leaves.len() {
            return Err(Error::TreeMismatch("embedding tree repeats a leaf".into()));
        }
        for &n in &post {
            let k = self.nodes[n].children.len();
            let special_root = n == self.root && k < 2 && self.nodes[n].children.iter().all(|c| matches!(c, Child::Leaf(_)));
            if k != 2 && !special_root {
                return Err(Error::TreeMismatch(format!("embedding tree node {n} has {k} children")));
            }
        }
        Ok(())
    }
}

/// Embedding tree for edge subsets `sets` taken in the order `set_order`,
/// each subset's edges in their listed order.
pub fn build_embedding_tree(set_order: &[usize], sets: &[Vec<u64>], ansatz: Ansatz) -> Result<EmbeddingTree> {
    let distinct: BTreeSet<usize> = set_order.iter().copied().collect();
    if distinct.len() != set_order.len() || distinct != (0..sets.len()).collect() {
        return Err(Error::OrderingMismatch);
    }
    let ordered: Vec<Vec<u64>> = set_order.iter().map(|&i| sets[i].clone()).collect();
    let t = match ansatz {
        Ansatz::Mps => EmbeddingTree::mps(&ordered.concat()),
        Ansatz::Comb => EmbeddingTree::comb(&ordered),
    };
    t.validate()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mps_tree_on_four_leaves() {
        let t = EmbeddingTree::mps(&[1, 2, 3, 4]);
        assert_eq!(t.nodes.len(), 3);
        assert_eq!(t.nodes[0].children, vec![Child::Leaf(1), Child::Leaf(2)]);
        assert_eq!(t.nodes[1].children, vec![Child::Node(0), Child::Leaf(3)]);
        assert_eq!(t.nodes[2].children, vec![Child::Node(1), Child::Leaf(4)]);
        assert_eq!(t.root, 2);
        t.validate().unwrap();
    }

    #[test]
    fn mps_ansatz_concatenates_subsets() {
        let sets = vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]];
        let t = build_embedding_tree(&[0, 1, 2], &sets, Ansatz::Mps).unwrap();
        assert_eq!(t.leaves(), (1..=9).collect::<Vec<u64>>());
        assert_eq!(t.nodes.len(), 8);
        assert_eq!(t.post_order(), (0..8).collect::<Vec<usize>>());
    }

    #[test]
    fn comb_chains_three_teeth() {
        let sets = vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]];
        let t = build_embedding_tree(&[0, 1, 2], &sets, Ansatz::Comb).unwrap();
        assert_eq!(t.leaves(), (1..=9).collect::<Vec<u64>>());
        // Three 2-node teeth plus a 2-node spine.
        assert_eq!(t.nodes.len(), 8);
        let root = &t.nodes[t.root];
        assert_eq!(t.child_leaves(root.children[1]), vec![7, 8, 9]);
        let Child::Node(spine) = root.children[0] else { panic!() };
        assert_eq!(t.child_leaves(t.nodes[spine].children[0]), vec![1, 2, 3]);
        assert_eq!(t.child_leaves(t.nodes[spine].children[1]), vec![4, 5, 6]);
    }

    #[test]
    fn small_roots() {
        let t = EmbeddingTree::mps(&[]);
        assert!(t.nodes[t.root].children.is_empty());
        t.validate().unwrap();
        let t = EmbeddingTree::mps(&[5]);
        assert_eq!(t.leaves(), vec![5]);
        let t = EmbeddingTree::comb(&[vec![1, 2]]);
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn path_through_root() {
        let t = EmbeddingTree::comb(&[vec![1, 2], vec![3, 4]]);
        // teeth are nodes 0 and 1, spine node 2
        assert_eq!(t.path(0, 1), vec![0, 2, 1]);
        assert_eq!(t.path(0, 0), vec![0]);
        assert_eq!(t.path(2, 1), vec![2, 1]);
    }
}

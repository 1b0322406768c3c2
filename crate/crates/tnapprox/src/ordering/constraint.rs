use std::collections::BTreeSet;

use log::info;

use super::kendall_tau;
use crate::error::{Error, Result};

/// Unordered children may appear in any order; ordered children appear in
/// the listed order or its reverse. Either way each child stays contiguous.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Ordered,
    Unordered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtChild {
    Leaf(usize),
    Node(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintNode {
    pub kind: NodeKind,
    pub children: Vec<CtChild>,
}

/// Tree over items `0..num_items`. Nodes not reachable from `root` are
/// leftovers of restructuring and carry no meaning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintTree {
    pub num_items: usize,
    pub nodes: Vec<ConstraintNode>,
    pub root: CtChild,
}

/// Largest unordered node searched exhaustively.
const MAX_EXHAUSTIVE_CHILDREN: usize = 8;

impl ConstraintTree {
    /// One unordered root over all items.
    pub fn flat(num_items: usize) -> Self {
        let mut t = ConstraintTree { num_items, nodes: Vec::new(), root: CtChild::Leaf(0) };
        let children: Vec<CtChild> = (0..num_items).map(CtChild::Leaf).collect();
        t.root = t.group(children, NodeKind::Unordered);
        t
    }

    /// A single child stands for itself; several get a new node.
    pub fn group(&mut self, children: Vec<CtChild>, kind: NodeKind) -> CtChild {
        if children.len() == 1 {
            return children[0];
        }
        self.nodes.push(ConstraintNode { kind, children });
        CtChild::Node(self.nodes.len() - 1)
    }

    pub fn items_under(&self, c: CtChild) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect(c, &mut out);
        out
    }

    fn collect(&self, c: CtChild, out: &mut BTreeSet<usize>) {
        match c {
            CtChild::Leaf(i) => {
                out.insert(i);
            }
            CtChild::Node(n) => {
                for &ch in &self.nodes[n].children {
                    self.collect(ch, out);
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let items = self.items_under(self.root);
        let mut count = 0;
        self.count_leaves(self.root, &mut count);
        if items != (0..self.num_items).collect() || count != self.num_items {
            return Err(Error::TreeMismatch("constraint tree leaves do not match the items".into()));
        }
        Ok(())
    }

    fn count_leaves(&self, c: CtChild, count: &mut usize) {
        match c {
            CtChild::Leaf(_) => *count += 1,
            CtChild::Node(n) => self.nodes[n].children.iter().for_each(|&ch| self.count_leaves(ch, count)),
        }
    }
}

/// Builds the adjacency constraints for `num_items` edge subsets.
///
/// `steps[k]` lists the subsets that future contraction `k` must find
/// adjacent, already merged with the subsets of earlier contractions it
/// depends on. Components start as single leaves. A step inside one
/// component changes nothing; a step that is an exact union of components
/// groups them under an unordered node; a step cutting into one component
/// along its child boundaries attaches the rest at that side with an ordered
/// node; anything else falls back to an unordered node over all touched
/// components. Remaining components are joined under an unordered root.
pub fn build_constraint_tree(num_items: usize, steps: &[Vec<usize>]) -> Result<ConstraintTree> {
    if num_items == 0 {
        return Err(Error::InvalidParameter("constraint tree needs at least one item".into()));
    }
    let mut t = ConstraintTree { num_items, nodes: Vec::new(), root: CtChild::Leaf(0) };
    let mut comps: Vec<CtChild> = (0..num_items).map(CtChild::Leaf).collect();
    for step in steps {
        let s: BTreeSet<usize> = step.iter().copied().collect();
        if let Some(&bad) = s.iter().find(|&&i| i >= num_items) {
            return Err(Error::TreeMismatch(format!("contraction step names unknown edge subset {bad}")));
        }
        if s.len() < 2 {
            continue;
        }
        let sets: Vec<BTreeSet<usize>> = comps.iter().map(|&c| t.items_under(c)).collect();
        let touched: Vec<usize> = (0..comps.len()).filter(|&i| !sets[i].is_disjoint(&s)).collect();
        if touched.len() == 1 {
            continue;
        }
        let partial: Vec<usize> = touched.iter().copied().filter(|&i| !sets[i].is_subset(&s)).collect();
        let roots: Vec<CtChild> = touched.iter().map(|&i| comps[i]).collect();
        let merged = if partial.is_empty() {
            t.group(roots, NodeKind::Unordered)
        } else if partial.len() == 1 {
            let p = partial[0];
            let others: Vec<CtChild> = touched.iter().filter(|&&i| i != p).map(|&i| comps[i]).collect();
            match restructure(&mut t, comps[p], &s, others.clone()) {
                Some(c) => c,
                None => t.group(roots, NodeKind::Unordered),
            }
        } else {
            t.group(roots, NodeKind::Unordered)
        };
        let mut next: Vec<CtChild> = Vec::with_capacity(comps.len());
        for (i, &c) in comps.iter().enumerate() {
            if i == touched[0] {
                next.push(merged);
            } else if !touched.contains(&i) {
                next.push(c);
            }
        }
        comps = next;
    }
    t.root = t.group(comps, NodeKind::Unordered);
    Ok(t)
}

/// Places `others` next to the part of component `p` that lies in `s`, when
/// that part is a union of whole children of `p`'s root.
fn restructure(t: &mut ConstraintTree, p: CtChild, s: &BTreeSet<usize>, others: Vec<CtChild>) -> Option<CtChild> {
    let CtChild::Node(n) = p else { return None };
    let node = t.nodes[n].clone();
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for &c in &node.children {
        let items = t.items_under(c);
        if items.is_subset(s) {
            inside.push(c);
        } else if items.is_disjoint(s) {
            outside.push(c);
        } else {
            return None;
        }
    }
    let rest = t.group(others, NodeKind::Unordered);
    match node.kind {
        NodeKind::Unordered => {
            let out = t.group(outside, NodeKind::Unordered);
            let ins = t.group(inside, NodeKind::Unordered);
            Some(t.group(vec![out, ins, rest], NodeKind::Ordered))
        }
        NodeKind::Ordered => {
            let flags: Vec<bool> = node.children.iter().map(|c| inside.contains(c)).collect();
            let k = inside.len();
            let suffix = flags.iter().rev().take(k).all(|&f| f);
            let prefix = flags.iter().take(k).all(|&f| f);
            let mut children = node.children.clone();
            if suffix {
                children.push(rest);
            } else if prefix {
                children.insert(0, rest);
            } else {
                return None;
            }
            Some(t.group(children, NodeKind::Ordered))
        }
    }
}

/// Ordering of all items allowed by `ct` with the smallest Kendall-Tau
/// distance to `tau`.
///
/// Bottom-up: each node keeps its children's best orderings as blocks and
/// picks the best arrangement of blocks. Blocks interact only through
/// cross-block pairs, so this is optimal whenever unordered nodes are
/// searched exhaustively (at most eight children).
pub fn ordering_under_constraint(ct: &ConstraintTree, tau: &[usize]) -> Result<Vec<usize>> {
    ct.validate()?;
    let mut pos = vec![usize::MAX; ct.num_items];
    for (r, &x) in tau.iter().enumerate() {
        if x >= ct.num_items || pos[x] != usize::MAX {
            return Err(Error::OrderingMismatch);
        }
        pos[x] = r;
    }
    if tau.len() != ct.num_items {
        return Err(Error::OrderingMismatch);
    }
    Ok(best(ct, ct.root, &pos))
}

fn best(ct: &ConstraintTree, c: CtChild, pos: &[usize]) -> Vec<usize> {
    let n = match c {
        CtChild::Leaf(i) => return vec![i],
        CtChild::Node(n) => n,
    };
    let blocks: Vec<Vec<usize>> = ct.nodes[n].children.iter().map(|&ch| best(ct, ch, pos)).collect();
    let k = blocks.len();
    // cross[i][j]: discordant pairs when block i precedes block j.
    let mut cross = vec![vec![0u64; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                cross[i][j] = blocks[i]
                    .iter()
                    .map(|&a| blocks[j].iter().filter(|&&b| pos[a] > pos[b]).count() as u64)
                    .sum();
            }
        }
    }
    let cost = |order: &[usize]| -> u64 {
        let mut c = 0;
        for x in 0..order.len() {
            for y in x + 1..order.len() {
                c += cross[order[x]][order[y]];
            }
        }
        c
    };
    let order: Vec<usize> = match ct.nodes[n].kind {
        NodeKind::Ordered => {
            let fwd: Vec<usize> = (0..k).collect();
            let rev: Vec<usize> = (0..k).rev().collect();
            if cost(&rev) < cost(&fwd) {
                rev
            } else {
                fwd
            }
        }
        NodeKind::Unordered if k <= MAX_EXHAUSTIVE_CHILDREN => {
            let mut best_order: Vec<usize> = (0..k).collect();
            let mut best_cost = cost(&best_order);
            let mut perm: Vec<usize> = (0..k).collect();
            while next_permutation(&mut perm) {
                let c = cost(&perm);
                if c < best_cost {
                    best_cost = c;
                    best_order.copy_from_slice(&perm);
                }
            }
            best_order
        }
        NodeKind::Unordered => {
            info!("unordered constraint node with {k} children: using greedy insertion");
            let mut order: Vec<usize> = Vec::with_capacity(k);
            for b in 0..k {
                let mut best_at = 0;
                let mut best_cost = u64::MAX;
                for at in 0..=order.len() {
                    let mut trial = order.clone();
                    trial.insert(at, b);
                    let c = cost(&trial);
                    if c < best_cost {
                        best_cost = c;
                        best_at = at;
                    }
                }
                order.insert(best_at, b);
            }
            order
        }
    };
    order.into_iter().flat_map(|i| blocks[i].clone()).collect()
}

/// Lexicographic successor; false once `p` is the last permutation.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Every ordering allowed by `ct`. Exponential; meant for small trees.
pub fn constrained_orderings(ct: &ConstraintTree) -> Vec<Vec<usize>> {
    enumerate(ct, ct.root)
}

fn enumerate(ct: &ConstraintTree, c: CtChild) -> Vec<Vec<usize>> {
    let n = match c {
        CtChild::Leaf(i) => return vec![vec![i]],
        CtChild::Node(n) => n,
    };
    let options: Vec<Vec<Vec<usize>>> = ct.nodes[n].children.iter().map(|&ch| enumerate(ct, ch)).collect();
    let k = options.len();
    let arrangements: Vec<Vec<usize>> = match ct.nodes[n].kind {
        NodeKind::Ordered => vec![(0..k).collect(), (0..k).rev().collect()],
        NodeKind::Unordered => {
            let mut perm: Vec<usize> = (0..k).collect();
            let mut all = vec![perm.clone()];
            while next_permutation(&mut perm) {
                all.push(perm.clone());
            }
            all
        }
    };
    let mut out = Vec::new();
    for arr in arrangements {
        let mut partial: Vec<Vec<usize>> = vec![Vec::new()];
        for &child in &arr {
            let mut grown = Vec::new();
            for prefix in &partial {
                for opt in &options[child] {
                    let mut p = prefix.clone();
                    p.extend_from_slice(opt);
                    grown.push(p);
                }
            }
            partial = grown;
        }
        out.extend(partial);
    }
    out.sort();
    out.dedup();
    out
}

/// Whether `ordering` is allowed by `ct`.
pub fn satisfies(ct: &ConstraintTree, ordering: &[usize]) -> bool {
    let mut pos = vec![usize::MAX; ct.num_items];
    for (r, &x) in ordering.iter().enumerate() {
        if x >= ct.num_items || pos[x] != usize::MAX {
            return false;
        }
        pos[x] = r;
    }
    ordering.len() == ct.num_items && span(ct, ct.root, &pos).is_some()
}

/// Position interval covered by `c`, if its items are contiguous and every
/// node below respects its kind.
fn span(ct: &ConstraintTree, c: CtChild, pos: &[usize]) -> Option<(usize, usize)> {
    let n = match c {
        CtChild::Leaf(i) => return Some((pos[i], pos[i])),
        CtChild::Node(n) => n,
    };
    let spans: Vec<(usize, usize)> =
        ct.nodes[n].children.iter().map(|&ch| span(ct, ch, pos)).collect::<Option<_>>()?;
    let lo = spans.iter().map(|s| s.0).min()?;
    let hi = spans.iter().map(|s| s.1).max()?;
    let size: usize = spans.iter().map(|s| s.1 - s.0 + 1).sum();
    if hi - lo + 1 != size {
        return None;
    }
    if ct.nodes[n].kind == NodeKind::Ordered {
        let increasing = spans.windows(2).all(|w| w[0].1 < w[1].0);
        let decreasing = spans.windows(2).all(|w| w[0].0 > w[1].1);
        if !increasing && !decreasing {
            return None;
        }
    }
    Some((lo, hi))
}

/// Smallest distance to `tau` over all allowed orderings.
pub fn brute_force_min_distance(ct: &ConstraintTree, tau: &[usize]) -> u64 {
    constrained_orderings(ct)
        .iter()
        .map(|o| kendall_tau(o, tau).expect("same items"))
        .min()
        .expect("at least one ordering")
}

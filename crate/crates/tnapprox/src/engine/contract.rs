use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use log::debug;

use super::approx::approx_tensor_network;
use crate::error::{Error, Result};
use crate::netgraph::{linear_ordering, order_edge_sets, CtNode, PartitionedPlan, TensorNetwork, VertexId};
use crate::ordering::{build_constraint_tree, ordering_under_constraint, Ansatz};
use crate::tensor::{FlopCounter, Tensor};
use crate::treeapprox::TreeTensorNetwork;

/// Tuning knobs of the partitioned contraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContractOptions {
    /// Maximum bond size of every intermediate tree.
    pub chi: usize,
    /// Adjacent swaps absorbed by one density-matrix pass.
    pub swap_batch: usize,
    pub ansatz: Ansatz,
    /// Seed of the randomized bisection heuristics.
    pub seed: u64,
}

impl ContractOptions {
    pub fn new(chi: usize) -> Self {
        ContractOptions { chi, swap_batch: 32, ansatz: Ansatz::Mps, seed: 0 }
    }
}

/// What happened while merging one pair of contraction-tree children.
#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub node: usize,
    /// Uncontracted edge sets of the merged network; zero for a closing step.
    pub num_sets: usize,
    pub kt_distance: u64,
    pub passes: usize,
    pub max_bond: usize,
    pub flops: u128,
}

/// The contracted value `sign · exp(ln_abs)`. For an open network `tree`
/// holds the approximation with its root rescaled to unit norm, and the
/// value is the scale it carries.
#[derive(Clone, Debug)]
pub struct ContractResult {
    /// `1`, `-1`, or `0` when the network vanishes.
    pub sign: f64,
    pub ln_abs: f64,
    pub tree: Option<TreeTensorNetwork>,
    pub flops: u128,
    pub numeric_seconds: f64,
    pub analysis_seconds: f64,
    pub steps: Vec<StepInfo>,
}

impl ContractResult {
    pub fn value(&self) -> f64 {
        self.sign * self.ln_abs.exp()
    }

    fn zero(flops: u128, steps: Vec<StepInfo>) -> Self {
        ContractResult {
            sign: 0.0,
            ln_abs: f64::NEG_INFINITY,
            tree: None,
            flops,
            numeric_seconds: 0.0,
            analysis_seconds: 0.0,
            steps,
        }
    }
}

/// Edges of the input network grouped by the parts they join. `b == None`
/// marks the uncontracted edges of part `a`.
#[derive(Clone, Debug)]
struct EdgeSet {
    a: usize,
    b: Option<usize>,
    /// Ordered along a linear layout of the parts they touch.
    labels: Vec<u64>,
}

impl EdgeSet {
    fn touches(&self, parts: &BTreeSet<usize>) -> bool {
        parts.contains(&self.a) || self.b.is_some_and(|b| parts.contains(&b))
    }

    /// Exactly one side inside `parts`.
    fn crosses(&self, parts: &BTreeSet<usize>) -> bool {
        match self.b {
            None => parts.contains(&self.a),
            Some(b) => parts.contains(&self.a) != parts.contains(&b),
        }
    }
}

/// An edge label with its endpoints.
type Member = (u64, VertexId, Option<VertexId>);

fn edge_sets(g: &TensorNetwork, plan: &PartitionedPlan, seed: u64) -> Vec<EdgeSet> {
    let part = |v: VertexId| plan.partitioning.part_of(v).expect("validated plan");
    let mut groups: BTreeMap<(usize, Option<usize>), Vec<Member>> = BTreeMap::new();
    for e in g.edges() {
        let pa = part(e.a);
        let key = match e.b {
            None => (pa, None),
            Some(b) => {
                let pb = part(b);
                if pa == pb {
                    continue;
                }
                (pa.min(pb), Some(pa.max(pb)))
            }
        };
        groups.entry(key).or_default().push((e.mode.id, e.a, e.b));
    }
    groups
        .into_iter()
        .map(|((a, b), edges)| {
            let mut vs: BTreeSet<VertexId> = plan.partitioning.members(a).clone();
            if let Some(b) = b {
                vs.extend(plan.partitioning.members(b));
            }
            let items: Vec<VertexId> = vs.iter().copied().collect();
            let order = linear_ordering(&items, &g.subnetwork(&vs), seed);
            let rank: BTreeMap<VertexId, usize> = order.iter().enumerate().map(|(r, &v)| (v, r)).collect();
            let mut keyed: Vec<(usize, usize, u64)> = edges
                .iter()
                .map(|&(l, x, y)| {
                    let rx = rank[&x];
                    let ry = y.map_or(rx, |y| rank[&y]);
                    (rx.min(ry), rx.max(ry), l)
                })
                .collect();
            keyed.sort_unstable();
            EdgeSet { a, b, labels: keyed.into_iter().map(|k| k.2).collect() }
        })
        .collect()
}

/// Steps of the constraint tree for the sets `local` (indices into `sets`)
/// of the network under `node`: one step per later merge, grouping the sets
/// that merge consumes with the groups of earlier adjacent merges.
fn constraint_steps(plan: &PartitionedPlan, node: usize, sets: &[EdgeSet], local: &[usize]) -> Vec<Vec<usize>> {
    let parents = plan.tree.parents();
    let mut siblings: Vec<BTreeSet<usize>> = Vec::new();
    let mut cur = node;
    while let Some(&p) = parents.get(&cur) {
        let CtNode::Join(x, y) = plan.tree.nodes[p] else { unreachable!("parent is a join") };
        let sib = if x == cur { y } else { x };
        siblings.push(plan.tree.parts_under(sib));
        cur = p;
    }
    let adjacent = |u: &BTreeSet<usize>, w: &BTreeSet<usize>| {
        sets.iter().any(|e| match e.b {
            Some(b) => (u.contains(&e.a) && w.contains(&b)) || (u.contains(&b) && w.contains(&e.a)),
            None => false,
        })
    };
    let mut hats: Vec<BTreeSet<usize>> = Vec::with_capacity(siblings.len());
    for (k, u) in siblings.iter().enumerate() {
        let mut hat: BTreeSet<usize> = (0..local.len()).filter(|&i| sets[local[i]].touches(u)).collect();
        for j in 0..k {
            if adjacent(&siblings[j], u) {
                hat.extend(hats[j].iter().copied());
            }
        }
        hats.push(hat);
    }
    hats.into_iter().filter(|h| !h.is_empty()).map(|h| h.into_iter().collect()).collect()
}

/// Approximately contracts `g` by merging the parts of `plan` pairwise in
/// contraction-tree order, approximating every merged network by a tree of
/// bond size at most `opts.chi`.
///
/// Tensors are rescaled to unit norm as they are produced and the scales are
/// accumulated in log space, so the result does not overflow.
pub fn partitioned_contract(g: &TensorNetwork, plan: &PartitionedPlan, opts: &ContractOptions) -> Result<ContractResult> {
    if opts.chi == 0 {
        return Err(Error::InvalidParameter("chi must be at least 1".into()));
    }
    if opts.swap_batch == 0 {
        return Err(Error::InvalidParameter("swap batch size must be at least 1".into()));
    }
    g.validate()?;
    plan.validate(g)?;
    let flops = FlopCounter::new();
    let mut analysis = 0.0;
    let mut numeric = 0.0;

    let mut ln_acc = 0.0;
    let mut normalized = BTreeMap::new();
    for (v, t) in g.tensors() {
        let n = t.norm();
        if n == 0.0 {
            return Ok(ContractResult::zero(0, Vec::new()));
        }
        let mut t = t.clone();
        t.scale(1.0 / n);
        ln_acc += n.ln();
        normalized.insert(v, t);
    }
    let g = TensorNetwork::from_map(normalized)?;

    let clock = Instant::now();
    let sets = edge_sets(&g, plan, opts.seed);
    analysis += clock.elapsed().as_secs_f64();

    let tree = &plan.tree;
    let mut tn: BTreeMap<usize, TensorNetwork> = BTreeMap::new();
    for p in 0..plan.partitioning.num_parts() {
        let leaf = tree.leaf_node(p).expect("validated plan");
        tn.insert(leaf, g.subnetwork(plan.partitioning.members(p)));
    }
    let joins = tree.joins_post_order();
    let mut steps = Vec::with_capacity(joins.len());
    let mut sign = 1.0;
    let mut out_tree = None;

    let mut merge = |node: usize, x: TensorNetwork, steps: &mut Vec<StepInfo>| -> Result<Option<TensorNetwork>> {
        let parts = tree.parts_under(node);
        let local: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].crosses(&parts)).collect();
        let before = flops.total();
        if local.is_empty() {
            let clock = Instant::now();
            let v = x.contract(&flops)?.scalar_value().expect("closed network");
            numeric += clock.elapsed().as_secs_f64();
            steps.push(StepInfo { node, num_sets: 0, kt_distance: 0, passes: 0, max_bond: 1, flops: flops.total() - before });
            if v == 0.0 {
                return Ok(None);
            }
            ln_acc += v.abs().ln();
            sign *= v.signum();
            return Ok(Some(TensorNetwork::from_tensors(vec![Tensor::scalar(1.0)])?));
        }
        let clock = Instant::now();
        let set_labels: Vec<Vec<u64>> = local.iter().map(|&i| sets[i].labels.clone()).collect();
        let tau = order_edge_sets(&set_labels, &x, opts.seed);
        let ct = build_constraint_tree(local.len(), &constraint_steps(plan, node, &sets, &local))?;
        let sigma = ordering_under_constraint(&ct, &tau)?;
        analysis += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let approx =
            approx_tensor_network(&x, &set_labels, &sigma, &tau, opts.chi, opts.swap_batch, opts.ansatz, &flops)?;
        let mut t = approx.tree;
        let n = t.normalize_root();
        numeric += clock.elapsed().as_secs_f64();
        let info = StepInfo {
            node,
            num_sets: local.len(),
            kt_distance: approx.distance,
            passes: approx.passes,
            max_bond: t.max_bond(),
            flops: flops.total() - before,
        };
        debug!("merged node {node}: {info:?}");
        steps.push(info);
        if n == 0.0 {
            return Ok(None);
        }
        ln_acc += n.ln();
        if node == tree.root {
            out_tree = Some(t.clone());
        }
        Ok(Some(t.network))
    };

    if joins.is_empty() {
        let x = tn.remove(&tree.root).expect("single part");
        if merge(tree.root, x, &mut steps)?.is_none() {
            return Ok(ContractResult::zero(flops.total(), steps));
        }
    }
    for &s in &joins {
        let CtNode::Join(a, b) = tree.nodes[s] else { unreachable!("join node") };
        let x = tn.remove(&a).expect("child done").union(&tn.remove(&b).expect("child done"))?;
        match merge(s, x, &mut steps)? {
            Some(net) => {
                tn.insert(s, net);
            }
            None => return Ok(ContractResult::zero(flops.total(), steps)),
        }
    }
    Ok(ContractResult {
        sign,
        ln_abs: ln_acc,
        tree: out_tree,
        flops: flops.total(),
        numeric_seconds: numeric,
        analysis_seconds: analysis,
        steps,
    })
}

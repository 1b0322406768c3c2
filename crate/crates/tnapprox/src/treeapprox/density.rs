use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;

use super::TreeTensorNetwork;
use crate::error::{Error, Result};
use crate::linalg::{matmul, qr, truncated_eig, ZERO_CUTOFF};
use crate::netgraph::{tree_embedding, TensorNetwork};
use crate::ordering::{Child, EmbeddingTree};
use crate::tensor::{contract_all, fresh_label, size_of, FlopCounter, Mode, Tensor};

/// Which density matrix of a tree node to form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Target {
    /// Over the node's uncontracted labels, with everything else as
    /// environment.
    Open,
    /// The environment the node's side of the tree presents to this neighbor,
    /// over the labels shared with it.
    Neighbor(usize),
}

/// Sub-networks on the nodes of a tree, with memoized density matrices.
///
/// A density matrix is a tensor over some labels and their primed copies.
/// Primed labels are fresh labels fixed for the lifetime of the context, so
/// cached matrices plug into later contractions directly.
pub struct DensityContext<'a> {
    parts: BTreeMap<usize, Vec<Tensor>>,
    adj: BTreeMap<usize, BTreeSet<usize>>,
    cache: BTreeMap<(usize, Target), Tensor>,
    primes: BTreeMap<u64, u64>,
    evaluations: BTreeMap<(usize, Target), usize>,
    hits: usize,
    flops: &'a FlopCounter,
}

impl<'a> DensityContext<'a> {
    /// `edges` are the tree edges between node ids used in `parts`.
    pub fn new(parts: BTreeMap<usize, Vec<Tensor>>, edges: &[(usize, usize)], flops: &'a FlopCounter) -> Self {
        let mut adj: BTreeMap<usize, BTreeSet<usize>> = parts.keys().map(|&k| (k, BTreeSet::new())).collect();
        for &(a, b) in edges {
            adj.entry(a).or_default().insert(b);
            adj.entry(b).or_default().insert(a);
        }
        DensityContext {
            parts,
            adj,
            cache: BTreeMap::new(),
            primes: BTreeMap::new(),
            evaluations: BTreeMap::new(),
            hits: 0,
            flops,
        }
    }

    pub fn part(&self, x: usize) -> &[Tensor] {
        &self.parts[&x]
    }

    /// Stable primed copy of a label.
    pub fn prime(&mut self, l: u64) -> u64 {
        *self.primes.entry(l).or_insert_with(fresh_label)
    }

    fn counts(&self) -> BTreeMap<u64, usize> {
        let mut c = BTreeMap::new();
        for ts in self.parts.values() {
            for t in ts {
                for l in t.labels() {
                    *c.entry(l).or_insert(0) += 1;
                }
            }
        }
        c
    }

    /// Labels of node `x` left uncontracted by the whole remaining network.
    pub fn open_labels(&self, x: usize) -> BTreeSet<u64> {
        let counts = self.counts();
        self.parts[&x].iter().flat_map(|t| t.labels()).filter(|l| counts[l] == 1).collect()
    }

    /// Labels shared between nodes `x` and `y`.
    pub fn cross(&self, x: usize, y: usize) -> Vec<Mode> {
        let ys: BTreeSet<u64> = self.parts[&y].iter().flat_map(|t| t.labels()).collect();
        let mut out: Vec<Mode> = Vec::new();
        for t in &self.parts[&x] {
            for m in t.modes() {
                if ys.contains(&m.id) && !out.contains(m) {
                    out.push(*m);
                }
            }
        }
        out.sort_by_key(|m| m.id);
        out
    }

    fn alive_neighbors(&self, x: usize) -> Vec<usize> {
        self.adj[&x].iter().copied().filter(|y| self.parts.contains_key(y)).collect()
    }

    /// Density matrix of node `x` toward `target`, from cache when possible.
    pub fn density(&mut self, x: usize, target: Target) -> Result<Tensor> {
        if let Some(t) = self.cache.get(&(x, target)) {
            self.hits += 1;
            return Ok(t.clone());
        }
        let envs: Vec<usize> = self
            .alive_neighbors(x)
            .into_iter()
            .filter(|&w| target != Target::Neighbor(w))
            .collect();
        let mut tensors: Vec<Tensor> = Vec::new();
        for w in envs {
            tensors.push(self.density(w, Target::Neighbor(x))?);
        }
        let traced = match target {
            Target::Open => BTreeSet::new(),
            Target::Neighbor(_) => self.open_labels(x),
        };
        let ket: Vec<Tensor> = self.parts[&x].clone();
        let mut map = BTreeMap::new();
        for t in &ket {
            for l in t.labels() {
                if !traced.contains(&l) {
                    let p = self.prime(l);
                    map.insert(l, p);
                }
            }
        }
        let bra: Vec<Tensor> = ket.iter().map(|t| t.relabeled(&map)).collect();
        tensors.extend(ket);
        tensors.extend(bra);
        let out = contract_all(tensors, self.flops)?;
        *self.evaluations.entry((x, target)).or_insert(0) += 1;
        self.cache.insert((x, target), out.clone());
        Ok(out)
    }

    /// `density` as a matrix with rows over `labels` and columns over their
    /// primed copies, in the same order.
    pub fn density_matrix(&mut self, x: usize, target: Target, labels: &[u64]) -> Result<Array2<f64>> {
        let t = self.density(x, target)?;
        let mut order = labels.to_vec();
        for &l in labels {
            order.push(self.prime(l));
        }
        let p = t.permuted(&order)?;
        let n = labels.iter().map(|&l| p.mode(l).expect("label").size).product::<usize>();
        Ok(Array2::from_shape_vec((n, n), p.into_data()).expect("square"))
    }

    /// Moves node `v`'s tensors and `extra` into `u` and retires `v`.
    /// Drops every cached matrix whose side of the tree contains `u` or `v`.
    pub fn merge_into(&mut self, v: usize, u: usize, extra: Tensor) {
        let moved = self.parts.remove(&v).expect("alive node");
        let dest = self.parts.get_mut(&u).expect("alive node");
        dest.extend(moved);
        dest.push(extra);
        let stale: Vec<(usize, Target)> =
            self.cache.keys().copied().filter(|&(x, t)| x == v || t == Target::Neighbor(v) || self.side_contains(x, t, u)).collect();
        for k in stale {
            self.cache.remove(&k);
        }
    }

    /// Whether `z` lies on `x`'s side of the edge toward `target`.
    fn side_contains(&self, x: usize, target: Target, z: usize) -> bool {
        let Target::Neighbor(y) = target else { return true };
        let mut stack = vec![x];
        let mut seen = BTreeSet::from([x, y]);
        while let Some(a) = stack.pop() {
            if a == z {
                return true;
            }
            for &b in &self.adj[&a] {
                if seen.insert(b) {
                    stack.push(b);
                }
            }
        }
        false
    }

    pub fn stats(&self) -> DmStats {
        DmStats {
            evaluations: self.evaluations.values().sum(),
            max_per_matrix: self.evaluations.values().copied().max().unwrap_or(0),
            cache_hits: self.hits,
            ..DmStats::default()
        }
    }
}

/// Work accounting of one density-matrix run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DmStats {
    /// Density matrices formed by contraction.
    pub evaluations: usize,
    /// Most times any one (node, target) matrix was formed; it is formed
    /// again only after its side of the tree changed.
    pub max_per_matrix: usize,
    pub cache_hits: usize,
    /// Nodes truncated through the eigenvectors of their own density matrix.
    pub eig_steps: usize,
    /// Nodes truncated through a QR of the node followed by a small
    /// eigenproblem against the neighbor's density matrix.
    pub qr_steps: usize,
}

#[derive(Clone, Debug)]
pub struct DmOutput {
    /// Vertex `i` holds tree node `post_order[i]`; the root is last.
    pub tree: TreeTensorNetwork,
    pub post_order: Vec<usize>,
    pub stats: DmStats,
}

/// Approximates `g` by a tree network shaped like `t` with bonds at most `chi`.
///
/// Nodes are visited in post-order. Each node's orthogonal factor is taken
/// from the leading eigenvectors of its density matrix, or, when its
/// uncontracted side is heavier than the side facing its parent, from a QR of
/// the node followed by the eigenvectors of `R L Rᵀ` with `L` the parent's
/// environment. The node's tensors and the transposed factor then move into
/// the parent.
pub fn density_matrix_alg(g: &TensorNetwork, t: &EmbeddingTree, chi: usize, flops: &FlopCounter) -> Result<DmOutput> {
    if chi == 0 {
        return Err(Error::InvalidParameter("chi must be at least 1".into()));
    }
    let emb = tree_embedding(g, t)?;
    let post = t.post_order();
    let parents = t.parents();
    let mut parts: BTreeMap<usize, Vec<Tensor>> = post.iter().map(|&n| (n, Vec::new())).collect();
    for (v, tensor) in emb.network.tensors() {
        parts.get_mut(&emb.phi[&v]).expect("tree node").push(tensor.clone());
    }
    let edges: Vec<(usize, usize)> = parents.iter().map(|(&c, &p)| (c, p)).collect();
    let mut ctx = DensityContext::new(parts, &edges, flops);

    let mut bonds: BTreeMap<usize, Mode> = BTreeMap::new();
    let mut out: Vec<Tensor> = Vec::with_capacity(post.len());
    let mut eig_steps = 0;
    let mut qr_steps = 0;
    let open_of = |node: usize, bonds: &BTreeMap<usize, Mode>| -> Vec<u64> {
        t.nodes[node]
            .children
            .iter()
            .map(|c| match *c {
                Child::Leaf(l) => l,
                Child::Node(n) => bonds[&n].id,
            })
            .collect()
    };

    for &v in &post[..post.len() - 1] {
        let u = parents[&v];
        let a: Vec<u64> = open_of(v, &bonds);
        debug_assert_eq!(a.iter().copied().collect::<BTreeSet<_>>(), ctx.open_labels(v));
        let a_modes: Vec<Mode> = a.iter().map(|&l| find_mode(ctx.part(v), l)).collect();
        let b_modes = ctx.cross(v, u);
        let w_a: f64 = a_modes.iter().map(Mode::weight).sum();
        let w_b: f64 = b_modes.iter().map(Mode::weight).sum();
        let u_mat = if w_a <= w_b {
            eig_steps += 1;
            let l = ctx.density_matrix(v, Target::Open, &a)?;
            truncated_eig(&l, chi, ZERO_CUTOFF, flops)?.0
        } else {
            qr_steps += 1;
            let b: Vec<u64> = b_modes.iter().map(|m| m.id).collect();
            let m = contract_all(ctx.part(v).to_vec(), flops)?;
            let order: Vec<u64> = a.iter().chain(b.iter()).copied().collect();
            let m = m.permuted(&order)?;
            let rows = size_of(&a_modes) as usize;
            let mat = Array2::from_shape_vec((rows, m.len() / rows), m.into_data()).expect("shape");
            let (q, r) = qr(&mat, flops)?;
            let env = ctx.density_matrix(u, Target::Neighbor(v), &b)?;
            let small = matmul(matmul(r.view(), env.view(), flops).view(), r.t(), flops);
            let (uhat, _) = truncated_eig(&small, chi, ZERO_CUTOFF, flops)?;
            matmul(q.view(), uhat.view(), flops)
        };
        let bond = Mode::fresh(u_mat.ncols());
        let u_tensor = Tensor::from_matrix(u_mat, a_modes, vec![bond])?;
        bonds.insert(v, bond);
        ctx.merge_into(v, u, u_tensor.clone());
        out.push(u_tensor);
    }

    let root = *post.last().expect("tree has a root");
    let a = open_of(root, &bonds);
    let root_tensor = contract_all(ctx.part(root).to_vec(), flops)?.permuted(&a)?;
    out.push(root_tensor);
    let mut stats = ctx.stats();
    stats.eig_steps = eig_steps;
    stats.qr_steps = qr_steps;
    let network = TensorNetwork::from_tensors(out)?;
    let root_id = post.len() - 1;
    let tree = TreeTensorNetwork { network, root: root_id };
    Ok(DmOutput { tree, post_order: post, stats })
}

fn find_mode(ts: &[Tensor], l: u64) -> Mode {
    ts.iter().find_map(|t| t.mode(l)).expect("label present in part")
}

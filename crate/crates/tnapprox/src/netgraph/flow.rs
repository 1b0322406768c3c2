use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{TensorNetwork, VertexId};
use crate::error::{Error, Result};

/// A minimum cut separating two sets of dangling edges.
#[derive(Clone, Debug, PartialEq)]
pub struct MinCut {
    /// Summed weight of the network edges crossing the cut, excluding
    /// terminal edges.
    pub value: f64,
    /// Vertices on the side of the first edge set. This is the smallest
    /// source side among all minimum cuts.
    pub source: BTreeSet<VertexId>,
    pub sink: BTreeSet<VertexId>,
    /// Labels of network edges crossing the cut.
    pub cut_edges: Vec<u64>,
}

const TERMINAL_BIAS: f64 = 1e-6;

/// Minimum cut between two auxiliary terminals, one taking the place of the
/// missing endpoint of every edge in `e1`, the other of every edge in `e2`.
///
/// Terminal edges keep their own weight, so a vertex may end up apart from
/// its edge when cutting that edge is cheaper. They are inflated by a relative
/// `TERMINAL_BIAS` so that ties are cut on network edges instead.
pub fn mincut(g: &TensorNetwork, e1: &[u64], e2: &[u64]) -> Result<MinCut> {
    let all: BTreeSet<VertexId> = g.vertices().collect();
    mincut_within(g, &all, e1, e2)
}

/// Same as [`mincut`] on the induced sub-network over `vs`. A label in `e1`
/// or `e2` attaches its terminal to every endpoint it has inside `vs`.
pub fn mincut_within(g: &TensorNetwork, vs: &BTreeSet<VertexId>, e1: &[u64], e2: &[u64]) -> Result<MinCut> {
    if let Some(l) = e1.iter().find(|l| e2.contains(l)) {
        return Err(Error::OverlappingEdgeSets(*l));
    }
    let edges = g.edge_map();
    let index: BTreeMap<VertexId, usize> = vs.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let verts: Vec<VertexId> = vs.iter().copied().collect();
    let n = verts.len();
    let src = n;
    let dst = n + 1;
    let mut cap = vec![vec![0.0f64; n + 2]; n + 2];
    let mut total: f64 = 0.0;
    for e in edges.values() {
        if let Some(b) = e.b {
            if let (Some(&i), Some(&j)) = (index.get(&e.a), index.get(&b)) {
                let w = e.mode.weight();
                cap[i][j] += w;
                cap[j][i] += w;
                total += w;
            }
        }
    }
    let attach = |labels: &[u64]| -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        for l in labels {
            let e = edges.get(l).ok_or(Error::UnknownLabel(*l))?;
            for v in [Some(e.a), e.b].into_iter().flatten() {
                if let Some(&i) = index.get(&v) {
                    out.push((i, e.mode.weight() * (1.0 + TERMINAL_BIAS)));
                }
            }
        }
        Ok(out)
    };
    for (i, w) in attach(e1)? {
        cap[src][i] += w;
        cap[i][src] += w;
        total += w;
    }
    for (i, w) in attach(e2)? {
        cap[dst][i] += w;
        cap[i][dst] += w;
        total += w;
    }
    let eps = 1e-12 * total.max(1.0);

    // Edmonds-Karp on the dense residual matrix.
    loop {
        let mut prev = vec![usize::MAX; n + 2];
        prev[src] = src;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            if u == dst {
                break;
            }
            for v in 0..n + 2 {
                if prev[v] == usize::MAX && cap[u][v] > eps {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        if prev[dst] == usize::MAX {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = dst;
        while v != src {
            let u = prev[v];
            bottleneck = bottleneck.min(cap[u][v]);
            v = u;
        }
        let mut v = dst;
        while v != src {
            let u = prev[v];
            cap[u][v] -= bottleneck;
            cap[v][u] += bottleneck;
            v = u;
        }
    }

    let mut reach = vec![false; n + 2];
    reach[src] = true;
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for v in 0..n + 2 {
            if !reach[v] && cap[u][v] > eps {
                reach[v] = true;
                q.push_back(v);
            }
        }
    }
    let source: BTreeSet<VertexId> = (0..n).filter(|&i| reach[i]).map(|i| verts[i]).collect();
    let sink: BTreeSet<VertexId> = (0..n).filter(|&i| !reach[i]).map(|i| verts[i]).collect();
    let mut value = 0.0;
    let mut cut_edges = Vec::new();
    for e in edges.values() {
        if let Some(b) = e.b {
            let crosses = (source.contains(&e.a) && sink.contains(&b)) || (source.contains(&b) && sink.contains(&e.a));
            if crosses {
                value += e.mode.weight();
                cut_edges.push(e.mode.id);
            }
        }
    }
    Ok(MinCut { value, source, sink, cut_edges })
}

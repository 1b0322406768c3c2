use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{TensorNetwork, VertexId};

/// Exhaustive bisection up to this many vertices; greedy refinement above.
const EXHAUSTIVE_LIMIT: usize = 16;
const GREEDY_RESTARTS: usize = 4;
const TIE: f64 = 1e-9;

/// Linear ordering of `items` by recursive balanced bisection on the
/// sub-network they induce.
///
/// Each split minimizes the weight crossing the split point, counting edges
/// to vertices already placed on either side. Ties prefer balanced splits,
/// then the split placing the earliest input item first, so the result
/// depends on the input order and `seed`, never on vertex ids.
pub fn linear_ordering(items: &[VertexId], g: &TensorNetwork, seed: u64) -> Vec<VertexId> {
    let n = items.len();
    if n <= 1 {
        return items.to_vec();
    }
    let pos: BTreeMap<VertexId, usize> = items.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut w = vec![vec![0.0f64; n]; n];
    for ((a, b), wt) in g.adjacency() {
        if let (Some(&i), Some(&j)) = (pos.get(&a), pos.get(&b)) {
            w[i][j] += wt;
            w[j][i] += wt;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wl = vec![0.0; n];
    let mut wr = vec![0.0; n];
    let mut out = Vec::with_capacity(n);
    let all: Vec<usize> = (0..n).collect();
    recurse(&all, &w, &mut wl, &mut wr, &mut rng, &mut out);
    out.into_iter().map(|i| items[i]).collect()
}

/// Orders edge subsets by the earliest rank, then the latest rank, of the
/// vertices they attach to in a linear ordering of `g`.
pub fn order_edge_sets(sets: &[Vec<u64>], g: &TensorNetwork, seed: u64) -> Vec<usize> {
    let verts: Vec<VertexId> = g.vertices().collect();
    let order = linear_ordering(&verts, g, seed);
    let rank: BTreeMap<VertexId, usize> = order.iter().enumerate().map(|(r, &v)| (v, r)).collect();
    let edges = g.edge_map();
    let mut keys: Vec<(usize, usize, usize)> = sets
        .iter()
        .enumerate()
        .map(|(i, set)| {
            let ranks: Vec<usize> = set
                .iter()
                .filter_map(|l| edges.get(l))
                .flat_map(|e| [Some(e.a), e.b])
                .flatten()
                .filter_map(|v| rank.get(&v).copied())
                .collect();
            let lo = ranks.iter().copied().min().unwrap_or(usize::MAX);
            let hi = ranks.iter().copied().max().unwrap_or(usize::MAX);
            (lo, hi, i)
        })
        .collect();
    keys.sort();
    keys.into_iter().map(|k| k.2).collect()
}

fn recurse(
    set: &[usize],
    w: &[Vec<f64>],
    wl: &mut [f64],
    wr: &mut [f64],
    rng: &mut ChaCha8Rng,
    out: &mut Vec<usize>,
) {
    if set.len() == 1 {
        out.push(set[0]);
        return;
    }
    let in_a = if set.len() <= EXHAUSTIVE_LIMIT {
        exhaustive(set, w, wl, wr)
    } else {
        greedy(set, w, wl, wr, rng)
    };
    let a: Vec<usize> = set.iter().zip(&in_a).filter(|(_, &x)| x).map(|(&v, _)| v).collect();
    let b: Vec<usize> = set.iter().zip(&in_a).filter(|(_, &x)| !x).map(|(&v, _)| v).collect();
    for &v in &a {
        wr[v] += b.iter().map(|&u| w[v][u]).sum::<f64>();
    }
    for &v in &b {
        wl[v] += a.iter().map(|&u| w[v][u]).sum::<f64>();
    }
    recurse(&a, w, wl, wr, rng, out);
    recurse(&b, w, wl, wr, rng, out);
}

fn min_side(n: usize) -> usize {
    (n / 3).max(1)
}

/// Cost of placing side A before side B: the weight crossing the split point.
fn split_cost(set: &[usize], in_a: &[bool], w: &[Vec<f64>], wl: &[f64], wr: &[f64]) -> f64 {
    let mut c = 0.0;
    for (i, &v) in set.iter().enumerate() {
        if in_a[i] {
            c += wr[v];
            for (j, &u) in set.iter().enumerate() {
                if !in_a[j] {
                    c += w[v][u];
                }
            }
        } else {
            c += wl[v];
        }
    }
    c
}

fn better(cost: f64, imbalance: usize, first: bool, best: &(f64, usize, bool)) -> bool {
    if cost < best.0 - TIE {
        return true;
    }
    if cost > best.0 + TIE {
        return false;
    }
    if imbalance != best.1 {
        return imbalance < best.1;
    }
    first && !best.2
}

fn exhaustive(set: &[usize], w: &[Vec<f64>], wl: &[f64], wr: &[f64]) -> Vec<bool> {
    let n = set.len();
    let lo = min_side(n);
    let deg: Vec<f64> = set.iter().map(|&v| set.iter().map(|&u| w[v][u]).sum()).collect();
    let mut w_a = vec![0.0f64; n];
    let mut in_a = vec![false; n];
    let mut count = 0usize;
    let mut cut = 0.0;
    let mut ctx: f64 = set.iter().map(|&v| wl[v]).sum();
    let mut best = (f64::INFINITY, usize::MAX, false);
    let mut best_mask = vec![false; n];
    for step in 1u64..(1u64 << n) {
        // Gray code: flip the lowest set bit position of `step`.
        let k = step.trailing_zeros() as usize;
        let v = set[k];
        if in_a[k] {
            in_a[k] = false;
            count -= 1;
            cut += w_a[k] - (deg[k] - w_a[k]);
            ctx -= wr[v] - wl[v];
            for (j, &u) in set.iter().enumerate() {
                w_a[j] -= w[u][v];
            }
        } else {
            in_a[k] = true;
            count += 1;
            cut += (deg[k] - w_a[k]) - w_a[k];
            ctx += wr[v] - wl[v];
            for (j, &u) in set.iter().enumerate() {
                w_a[j] += w[u][v];
            }
        }
        if count < lo || n - count < lo {
            continue;
        }
        let imbalance = (2 * count).abs_diff(n);
        if better(cut + ctx, imbalance, in_a[0], &best) {
            best = (cut + ctx, imbalance, in_a[0]);
            best_mask.copy_from_slice(&in_a);
        }
    }
    // Recompute exactly to discard Gray-code drift in the reported choice.
    debug_assert!((split_cost(set, &best_mask, w, wl, wr) - best.0).abs() < 1e-6);
    best_mask
}

fn greedy(set: &[usize], w: &[Vec<f64>], wl: &[f64], wr: &[f64], rng: &mut ChaCha8Rng) -> Vec<bool> {
    let n = set.len();
    let lo = min_side(n);
    let mut best_mask = Vec::new();
    let mut best = (f64::INFINITY, usize::MAX, false);
    for _ in 0..GREEDY_RESTARTS {
        let mut in_a = grow(set, w, wl, wr, rng.gen_range(0..n));
        let mut count = n / 2;
        loop {
            let cur = split_cost(set, &in_a, w, wl, wr);
            let mut best_move: Option<(f64, usize)> = None;
            for k in 0..n {
                let ok = if in_a[k] { count > lo } else { n - count > lo };
                if !ok {
                    continue;
                }
                let v = set[k];
                let mut to_a = 0.0;
                let mut to_b = 0.0;
                for (j, &u) in set.iter().enumerate() {
                    if j == k {
                        continue;
                    }
                    if in_a[j] {
                        to_a += w[v][u];
                    } else {
                        to_b += w[v][u];
                    }
                }
                // Moving v flips which side its edges cross from.
                let delta = if in_a[k] { to_a - to_b + wl[v] - wr[v] } else { to_b - to_a + wr[v] - wl[v] };
                if delta < -TIE && best_move.is_none_or(|(d, _)| delta < d) {
                    best_move = Some((delta, k));
                }
            }
            match best_move {
                Some((_, k)) => {
                    if in_a[k] {
                        count -= 1;
                    } else {
                        count += 1;
                    }
                    in_a[k] = !in_a[k];
                    debug_assert!(split_cost(set, &in_a, w, wl, wr) < cur);
                }
                None => break,
            }
        }
        let cost = split_cost(set, &in_a, w, wl, wr);
        let imbalance = (2 * count).abs_diff(n);
        if better(cost, imbalance, in_a[0], &best) {
            best = (cost, imbalance, in_a[0]);
            best_mask = in_a;
        }
    }
    best_mask
}

/// Grows side A from `start` to half the vertices, each time adding the
/// vertex that raises the split cost least.
fn grow(set: &[usize], w: &[Vec<f64>], wl: &[f64], wr: &[f64], start: usize) -> Vec<bool> {
    let n = set.len();
    let mut in_a = vec![false; n];
    in_a[start] = true;
    // to_a[k] - to_b[k] for vertices outside A
    let deg: Vec<f64> = set.iter().map(|&v| set.iter().map(|&u| w[v][u]).sum()).collect();
    let mut to_a: Vec<f64> = set.iter().map(|&v| w[v][set[start]]).collect();
    for _ in 1..n / 2 {
        let mut pick: Option<(f64, usize)> = None;
        for k in 0..n {
            if in_a[k] {
                continue;
            }
            let v = set[k];
            let delta = (deg[k] - to_a[k]) - to_a[k] + wr[v] - wl[v];
            if pick.is_none_or(|(d, _)| delta < d - TIE) {
                pick = Some((delta, k));
            }
        }
        let (_, k) = pick.expect("vertices remain outside A");
        in_a[k] = true;
        for (j, &u) in set.iter().enumerate() {
            to_a[j] += w[u][set[k]];
        }
    }
    in_a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Mode, Tensor};

    fn t(modes: &[(u64, usize)]) -> Tensor {
        Tensor::zeros(modes.iter().map(|&(l, s)| Mode::new(l, s)).collect()).unwrap()
    }

    #[test]
    fn path_is_ordered_along_the_path() {
        let g = TensorNetwork::from_tensors(vec![
            t(&[(1, 2)]),
            t(&[(1, 2), (2, 2)]),
            t(&[(2, 2), (3, 2)]),
            t(&[(3, 2)]),
        ])
        .unwrap();
        let o = linear_ordering(&[0, 1, 2, 3], &g, 0);
        assert!(o == vec![0, 1, 2, 3] || o == vec![3, 2, 1, 0], "{o:?}");
    }

    #[test]
    fn single_item() {
        let g = TensorNetwork::from_tensors(vec![t(&[(1, 2)])]).unwrap();
        assert_eq!(linear_ordering(&[0], &g, 0), vec![0]);
    }

    #[test]
    fn components_stay_contiguous() {
        let g = TensorNetwork::from_tensors(vec![
            t(&[(1, 2)]),
            t(&[(2, 2)]),
            t(&[(1, 2)]),
            t(&[(2, 2)]),
        ])
        .unwrap();
        let o = linear_ordering(&[0, 1, 2, 3], &g, 0);
        let p = |v: usize| o.iter().position(|&x| x == v).unwrap();
        assert_eq!(p(0).abs_diff(p(2)), 1);
        assert_eq!(p(1).abs_diff(p(3)), 1);
    }

    #[test]
    fn greedy_path_keeps_low_cutwidth() {
        let n = 40;
        let mut ts = Vec::new();
        for i in 0..n {
            let mut modes = Vec::new();
            if i > 0 {
                modes.push((i as u64, 2));
            }
            if i + 1 < n {
                modes.push((i as u64 + 1, 2));
            }
            ts.push(t(&modes));
        }
        let g = TensorNetwork::from_tensors(ts).unwrap();
        let items: Vec<usize> = (0..n).collect();
        let o = linear_ordering(&items, &g, 3);
        let p: Vec<usize> = (0..n).map(|v| o.iter().position(|&x| x == v).unwrap()).collect();
        let mut width = 0;
        for cut in 0..n - 1 {
            let crossing = (0..n - 1).filter(|&i| p[i].min(p[i + 1]) <= cut && p[i].max(p[i + 1]) > cut).count();
            width = width.max(crossing);
        }
        assert!(width <= 3, "cutwidth {width}");
    }
}

use ndarray::Array2;

use super::TreeTensorNetwork;
use crate::error::{Error, Result};
use crate::linalg::{frobenius, qr, truncated_factor};
use crate::netgraph::VertexId;
use crate::tensor::{contract, FlopCounter, Mode, Tensor};

/// A tree with one side orthogonalized toward an edge and the remaining
/// non-orthogonal part stored in a new core vertex on that edge.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub tree: TreeTensorNetwork,
    pub core: VertexId,
    /// Core as a matrix: rows over the new bond to `u`, columns over the old
    /// bond to `v`.
    pub r: Array2<f64>,
}

/// `‖QᵀQ − I‖_F` for `t` matricized with `toward` as columns.
pub fn orthogonality_error(t: &Tensor, toward: &[u64]) -> Result<f64> {
    let rows: Vec<u64> = t.labels().filter(|l| !toward.contains(l)).collect();
    let m = t.matricize(&rows)?.mat;
    let g = m.t().dot(&m);
    Ok(frobenius(&(g - Array2::<f64>::eye(m.ncols()))))
}

/// Splits the tensor at `a` into an orthogonal factor kept at `a` and a
/// remainder pushed into `b`. The bond between them becomes one fresh label.
pub(crate) fn qr_toward(t: &mut TreeTensorNetwork, a: VertexId, b: VertexId, flops: &FlopCounter) -> Result<()> {
    let (q, r) = split(t, a, b, flops)?;
    t.network.insert(a, q);
    let tb = t.network.tensor(b).expect("vertex");
    let merged = contract(&r, tb, flops)?;
    t.network.insert(b, merged);
    Ok(())
}

/// QR of the tensor at `a` with its bond to `b` as columns: returns the
/// orthogonal tensor and the `R` tensor over (new bond, old bond).
fn split(t: &TreeTensorNetwork, a: VertexId, b: VertexId, flops: &FlopCounter) -> Result<(Tensor, Tensor)> {
    let bond: Vec<u64> = t.bond(a, b).iter().map(|m| m.id).collect();
    let ta = t.network.tensor(a).expect("vertex");
    let rows: Vec<u64> = ta.labels().filter(|l| !bond.contains(l)).collect();
    let m = ta.matricize(&rows)?;
    let (q, r) = qr(&m.mat, flops)?;
    let k = Mode::fresh(q.ncols());
    let qt = Tensor::from_matrix(q, m.rows, vec![k])?;
    let rt = Tensor::from_matrix(r, vec![k], m.cols)?;
    Ok((qt, rt))
}

/// Orthogonalizes every vertex on `u`'s side of the edge `(u, v)` toward
/// that edge and inserts the non-orthogonal core between `u` and `v`.
pub fn canonical_form(
    t: &TreeTensorNetwork,
    u: VertexId,
    v: VertexId,
    flops: &FlopCounter,
) -> Result<CanonicalForm> {
    if u == v || t.bond(u, v).is_empty() {
        return Err(Error::TreeMismatch(format!("vertices {u} and {v} are not adjacent")));
    }
    let mut out = t.clone();
    let parents = t.parents_from(v);
    let under_u = |x: VertexId| {
        let mut y = x;
        loop {
            if y == u {
                return true;
            }
            match parents.get(&y) {
                Some(&p) => y = p,
                None => return false,
            }
        }
    };
    for x in t.post_order_from(v) {
        if x != u && under_u(x) {
            qr_toward(&mut out, x, parents[&x], flops)?;
        }
    }
    let (q, r) = split(&out, u, v, flops)?;
    out.network.insert(u, q);
    let shape = (r.modes()[0].size, r.len() / r.modes()[0].size);
    let mat = Array2::from_shape_vec(shape, r.data().to_vec()).expect("matrix shape");
    let core = out.network.push(r);
    Ok(CanonicalForm { tree: out, core, r: mat })
}

/// Truncates every bond of `t` to at most `chi` by visiting vertices in
/// post-order and factoring each against its fully orthogonalized
/// environment.
///
/// Non-root output tensors are orthogonal toward their parent; the root
/// holds the norm and everything non-orthogonal.
pub fn truncate_tree_canonical(t: &TreeTensorNetwork, chi: usize, flops: &FlopCounter) -> Result<TreeTensorNetwork> {
    if chi == 0 {
        return Err(Error::InvalidParameter("chi must be at least 1".into()));
    }
    let mut t = t.clone();
    let post = t.post_order();
    if post.len() < 2 {
        return Ok(t);
    }
    let parents = t.parents();
    let first = post[0];
    let toward_first = t.parents_from(first);
    for x in t.post_order_from(first) {
        if x != first {
            qr_toward(&mut t, x, toward_first[&x], flops)?;
        }
    }
    let mut center = first;
    for &v in &post[..post.len() - 1] {
        let path = t.path(center, v);
        for w in path.windows(2) {
            qr_toward(&mut t, w[0], w[1], flops)?;
        }
        let p = parents[&v];
        let bond: Vec<u64> = t.bond(v, p).iter().map(|m| m.id).collect();
        let tv = t.network.tensor(v).expect("vertex");
        let rows: Vec<u64> = tv.labels().filter(|l| !bond.contains(l)).collect();
        let m = tv.matricize(&rows)?;
        let fz = truncated_factor(&m.mat, chi, flops)?;
        let b = Mode::fresh(fz.rank());
        let uv = Tensor::from_matrix(fz.u, m.rows, vec![b])?;
        let s = Tensor::from_matrix(fz.s, vec![b], m.cols)?;
        t.network.insert(v, uv);
        let merged = contract(&s, t.network.tensor(p).expect("vertex"), flops)?;
        t.network.insert(p, merged);
        center = p;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::TensorNetwork;
    use crate::tensor::relative_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(modes: &[(u64, usize)], rng: &mut ChaCha8Rng) -> Tensor {
        let modes: Vec<Mode> = modes.iter().map(|&(l, s)| Mode::new(l, s)).collect();
        let n: usize = modes.iter().map(|m| m.size).product();
        Tensor::new(modes, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Balanced tree: leaves 0,1 under 4; leaves 2,3 under 5; 4 and 5 joined.
    fn binary_tree(rng: &mut ChaCha8Rng) -> TreeTensorNetwork {
        let ts = vec![
            random(&[(10, 2), (1, 3)], rng),
            random(&[(11, 2), (2, 3)], rng),
            random(&[(12, 2), (3, 3)], rng),
            random(&[(13, 2), (4, 3)], rng),
            random(&[(1, 3), (2, 3), (5, 4)], rng),
            random(&[(3, 3), (4, 3), (5, 4)], rng),
        ];
        TreeTensorNetwork::new(TensorNetwork::from_tensors(ts).unwrap(), 5).unwrap()
    }

    #[test]
    fn canonical_form_preserves_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = binary_tree(&mut rng);
        let f = FlopCounter::new();
        let before = t.contract(&f).unwrap();
        let cf = canonical_form(&t, 4, 5, &f).unwrap();
        let after = cf.tree.contract(&f).unwrap();
        assert!(relative_distance(&after, &before).unwrap() < 1e-10);
        for x in [0, 1] {
            let p = cf.tree.parents_from(5)[&x];
            let bond: Vec<u64> = cf.tree.bond(x, p).iter().map(|m| m.id).collect();
            assert!(orthogonality_error(cf.tree.network.tensor(x).unwrap(), &bond).unwrap() < 1e-12);
        }
    }

    #[test]
    fn canonical_form_is_idempotent_up_to_gauge() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ts = vec![random(&[(10, 2), (1, 3)], &mut rng), random(&[(1, 3), (11, 2)], &mut rng)];
        let t = TreeTensorNetwork::new(TensorNetwork::from_tensors(ts).unwrap(), 1).unwrap();
        let f = FlopCounter::new();
        let first = canonical_form(&t, 0, 1, &f).unwrap();
        // Fold the core back into vertex 0 and canonicalize again.
        let mut net = first.tree.network.clone();
        let core = net.remove(first.core).unwrap();
        let folded = contract(net.tensor(0).unwrap(), &core, &f).unwrap();
        net.insert(0, folded);
        let again = canonical_form(&TreeTensorNetwork::new(net, 1).unwrap(), 0, 1, &f).unwrap();
        let g1 = first.r.t().dot(&first.r);
        let g2 = again.r.t().dot(&again.r);
        assert!(frobenius(&(g2 - &g1)) < 1e-12 * frobenius(&g1));
    }

    #[test]
    fn non_adjacent_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = binary_tree(&mut rng);
        assert!(canonical_form(&t, 0, 1, &FlopCounter::new()).is_err());
    }

    #[test]
    fn truncation_without_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = binary_tree(&mut rng);
        let f = FlopCounter::new();
        let out = truncate_tree_canonical(&t, 100, &f).unwrap();
        let d = relative_distance(&out.contract(&f).unwrap(), &t.contract(&f).unwrap()).unwrap();
        assert!(d < 1e-10, "{d}");
        let parents = out.parents();
        for (&v, &p) in &parents {
            let bond: Vec<u64> = out.bond(v, p).iter().map(|m| m.id).collect();
            assert!(orthogonality_error(out.network.tensor(v).unwrap(), &bond).unwrap() < 1e-10);
        }
    }

    #[test]
    fn product_state_with_inflated_bonds() {
        // Outer products carried over bonds of size 3 that hold rank 1.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 5;
        let mut ts = Vec::new();
        let bond_vec: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(0.5..1.0)).collect()).collect();
        for i in 0..n {
            let phys: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut modes = Vec::new();
            let mut factors: Vec<Vec<f64>> = Vec::new();
            if i > 0 {
                modes.push(Mode::new(i as u64, 3));
                factors.push(bond_vec[i - 1].clone());
            }
            modes.push(Mode::new(100 + i as u64, 2));
            factors.push(phys);
            if i + 1 < n {
                modes.push(Mode::new(i as u64 + 1, 3));
                factors.push(bond_vec[i].clone());
            }
            let mut data = vec![1.0];
            for f in &factors {
                data = data.iter().flat_map(|&x| f.iter().map(move |&y| x * y)).collect();
            }
            ts.push(Tensor::new(modes, data).unwrap());
        }
        let t = TreeTensorNetwork::new(TensorNetwork::from_tensors(ts).unwrap(), n - 1).unwrap();
        let f = FlopCounter::new();
        let out = truncate_tree_canonical(&t, 1, &f).unwrap();
        assert_eq!(out.max_bond(), 1);
        let d = relative_distance(&out.contract(&f).unwrap(), &t.contract(&f).unwrap()).unwrap();
        assert!(d < 1e-10, "{d}");
    }
}

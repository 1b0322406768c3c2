use crate::error::{Error, Result};
use crate::netgraph::TensorNetwork;
use crate::ordering::{bubble_path, build_embedding_tree, kendall_tau, Ansatz};
use crate::tensor::FlopCounter;
use crate::treeapprox::{density_matrix_alg, DmStats, TreeTensorNetwork};

/// Result of approximating a network by a tree whose leaves follow a target
/// set ordering.
#[derive(Clone, Debug)]
pub struct Approximation {
    pub tree: TreeTensorNetwork,
    /// Density-matrix passes performed, at least one.
    pub passes: usize,
    /// Swaps between the reference and target orderings.
    pub distance: u64,
    pub stats: Vec<DmStats>,
}

/// Orderings visited on the way from `tau` to `sigma` when each step may
/// perform at most `r` adjacent swaps. The last entry is always `sigma`.
pub fn interval_orderings(tau: &[usize], sigma: &[usize], r: usize) -> Result<Vec<Vec<usize>>> {
    if r == 0 {
        return Err(Error::InvalidParameter("swap batch size must be at least 1".into()));
    }
    let path = bubble_path(tau, sigma)?;
    let d = path.len();
    let n = d.div_ceil(r).max(1);
    let mut out: Vec<Vec<usize>> = (1..n).map(|k| path[k * r - 1].clone()).collect();
    out.push(sigma.to_vec());
    Ok(out)
}

/// Approximates `x` by a tree tensor network whose leaves are the edge sets
/// `sets` in the order `sigma`.
///
/// Starting from the structure suggested by `tau`, each density-matrix pass
/// moves at most `r` adjacent swaps closer to `sigma`, so that a single pass
/// never has to reshape the network too far from its current layout.
/// Labels inside each set are taken in the order given.
#[allow(clippy::too_many_arguments)]
pub fn approx_tensor_network(
    x: &TensorNetwork,
    sets: &[Vec<u64>],
    sigma: &[usize],
    tau: &[usize],
    chi: usize,
    r: usize,
    ansatz: Ansatz,
    flops: &FlopCounter,
) -> Result<Approximation> {
    let distance = kendall_tau(tau, sigma)?;
    let waypoints = interval_orderings(tau, sigma, r)?;
    let mut current = x.clone();
    let mut stats = Vec::with_capacity(waypoints.len());
    let mut tree = None;
    for order in &waypoints {
        let t = build_embedding_tree(order, sets, ansatz)?;
        let out = density_matrix_alg(&current, &t, chi, flops)?;
        stats.push(out.stats);
        current = out.tree.network.clone();
        tree = Some(out.tree);
    }
    Ok(Approximation { tree: tree.expect("at least one pass"), passes: waypoints.len(), distance, stats })
}

//! Benchmark networks: the Ising model and i.i.d. random tensors on lattices
//! and random regular graphs, the partition plans used with them, and exact
//! oracles for small instances.

mod oracle;

pub use oracle::{
    brute_force_ln_z, configuration_space, sequential_ln_z, sequential_width, spin_sum_ln_z, LogValue,
    BRUTE_FORCE_LIMIT,
};

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::netgraph::{linear_ordering, Partitioning, PartitionedPlan, TensorNetwork, VertexId};
use crate::tensor::{Mode, Tensor};

/// A simple undirected graph on vertices `0..num_vertices`. Edge `k` becomes
/// the mode label `k` of the network built on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    pub num_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

const REGULAR_ATTEMPTS: usize = 10_000;

impl Graph {
    /// Open-boundary lattice. Vertex `(x0, x1, ..)` has id `x0 + n0·(x1 + n1·(..))`.
    pub fn lattice(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidParameter(format!("lattice dimensions {dims:?} must be positive")));
        }
        let n: usize = dims.iter().product();
        let mut edges = Vec::new();
        for v in 0..n {
            let mut stride = 1;
            let mut rest = v;
            for &d in dims {
                if rest % d + 1 < d {
                    edges.push((v, v + stride));
                }
                rest /= d;
                stride *= d;
            }
        }
        edges.sort_unstable();
        Ok(Graph { num_vertices: n, edges })
    }

    /// Uniform-ish `degree`-regular graph from the pairing model, redrawing
    /// whenever a self-loop or repeated edge appears.
    pub fn random_regular(degree: usize, n: usize, seed: u64) -> Result<Self> {
        if degree >= n || (degree * n) % 2 == 1 {
            return Err(Error::InvalidParameter(format!("no {degree}-regular simple graph on {n} vertices")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
        'attempt: for _ in 0..REGULAR_ATTEMPTS {
            stubs.shuffle(&mut rng);
            let mut seen = BTreeSet::new();
            for p in stubs.chunks(2) {
                let e = (p[0].min(p[1]), p[0].max(p[1]));
                if e.0 == e.1 || !seen.insert(e) {
                    continue 'attempt;
                }
            }
            return Ok(Graph { num_vertices: n, edges: seen.into_iter().collect() });
        }
        Err(Error::InvalidParameter(format!("no simple {degree}-regular graph found in {REGULAR_ATTEMPTS} draws")))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Edge indices at each vertex, ascending.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_vertices];
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            out[a].push(k);
            out[b].push(k);
        }
        out
    }
}

/// Edge matrix `W` with `W Wᵀ = [[e^β, e^−β], [e^−β, e^β]]`.
pub fn ising_w(beta: f64) -> [[f64; 2]; 2] {
    let c = beta.cosh().sqrt();
    let s = beta.sinh().sqrt();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [[h * (c + s), h * (c - s)], [h * (c - s), h * (c + s)]]
}

/// Closed network whose contraction is the partition function
/// `Σ_σ Π_(i,j) exp(β σ_i σ_j)` of the ferromagnetic Ising model on `g`.
///
/// Every edge factor `exp(βσσ')` is split as `W Wᵀ` and each vertex tensor
/// sums over its own spin: `t[i_1..i_k] = Σ_σ Π_e W[σ][i_e]`.
pub fn ising_network(g: &Graph, beta: f64) -> Result<TensorNetwork> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be finite and non-negative, got {beta}")));
    }
    let w = ising_w(beta);
    let tensors = g
        .incidence()
        .into_iter()
        .map(|es| {
            let modes: Vec<Mode> = es.iter().map(|&e| Mode::new(e as u64, 2)).collect();
            let k = modes.len();
            let data = (0..1usize << k)
                .map(|idx| {
                    (0..2)
                        .map(|s| (0..k).map(|j| w[s][(idx >> (k - 1 - j)) & 1]).product::<f64>())
                        .sum()
                })
                .collect();
            Tensor::new(modes, data)
        })
        .collect::<Result<Vec<_>>>()?;
    TensorNetwork::from_tensors(tensors)
}

/// Parameters of the random model: entries i.i.d. uniform on `[alpha, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomSpec {
    pub alpha: f64,
    /// Size of every bond.
    pub mode_size: usize,
    pub seed: u64,
}

pub fn random_network(g: &Graph, spec: &RandomSpec) -> Result<TensorNetwork> {
    if !(-1.0..=0.0).contains(&spec.alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [-1, 0], got {}", spec.alpha)));
    }
    if spec.mode_size == 0 {
        return Err(Error::InvalidParameter("mode size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tensors = g
        .incidence()
        .into_iter()
        .map(|es| {
            let modes: Vec<Mode> = es.iter().map(|&e| Mode::new(e as u64, spec.mode_size)).collect();
            let n: usize = modes.iter().map(|m| m.size).product();
            let data = (0..n).map(|_| rng.gen_range(spec.alpha..=1.0)).collect();
            Tensor::new(modes, data)
        })
        .collect::<Result<Vec<_>>>()?;
    TensorNetwork::from_tensors(tensors)
}

/// Consecutive vertex ids in groups of `partition_size`, merged one group at
/// a time. On a lattice a group of `dims[0]` vertices is one column (2D) or
/// fiber (3D); smaller sizes split a fiber into pieces.
pub fn lattice_plan(dims: &[usize], partition_size: usize) -> Result<PartitionedPlan> {
    let n: usize = dims.iter().product();
    let order: Vec<VertexId> = (0..n).collect();
    PartitionedPlan::sequential(Partitioning::chunks(&order, partition_size)?)
}

/// Vertices laid out by recursive bisection, then chunked and merged in
/// layout order.
pub fn bisection_plan(g: &TensorNetwork, partition_size: usize, seed: u64) -> Result<PartitionedPlan> {
    let items: Vec<VertexId> = g.vertices().collect();
    let order = linear_ordering(&items, g, seed);
    PartitionedPlan::sequential(Partitioning::chunks(&order, partition_size)?)
}

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use tnapprox::engine::{partitioned_contract, ContractOptions};
use tnapprox::models::{
    bisection_plan, brute_force_ln_z, configuration_space, ising_network, lattice_plan, random_network, sequential_ln_z, sequential_width,
    spin_sum_ln_z, Graph, RandomSpec, BRUTE_FORCE_LIMIT,
};
use tnapprox::netgraph::{PartitionedPlan, TensorNetwork};
use tnapprox::ordering::Ansatz;
use tnapprox::{Error, FlopCounter, Result};

pub const REPORT_VERSION: u32 = 1;

/// Largest intermediate, in entries, the sequential oracle may build.
const SEQUENTIAL_LIMIT: u128 = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub enum GraphSpec {
    Lattice(Vec<usize>),
    Regular { degree: usize, n: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Ising { graph: GraphSpec, beta: f64 },
    Random { graph: GraphSpec, alpha: f64, mode_size: usize },
    File(PathBuf),
}

/// One sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct JobConfig {
    pub model: ModelSpec,
    pub ansatz: Ansatz,
    pub chi: usize,
    /// Vertices per partition; `None` picks one lattice column or fiber, or
    /// five vertices on other graphs.
    pub partition_size: Option<usize>,
    pub swap_batch: usize,
    pub seed: u64,
    pub oracle: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub format_version: u32,
    pub model: String,
    pub graph: String,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub chi: usize,
    pub partition_size: usize,
    pub swap_batch: usize,
    pub ansatz: String,
    pub seed: u64,
    /// Whether the result is a scalar; otherwise `ln_z` is the log scale of
    /// the returned tree.
    pub closed: bool,
    pub sign: f64,
    pub ln_z: f64,
    pub tree_vertices: Option<usize>,
    pub max_bond: usize,
    pub oracle: Option<String>,
    pub exact_ln_z: Option<f64>,
    pub relative_error: Option<f64>,
    pub flops: u64,
    pub numeric_seconds: f64,
    pub analysis_seconds: f64,
    pub wall_seconds: f64,
    pub steps: usize,
}

fn graph_of(spec: &GraphSpec, seed: u64) -> Result<Graph> {
    match spec {
        GraphSpec::Lattice(dims) => Graph::lattice(dims),
        GraphSpec::Regular { degree, n } => Graph::random_regular(*degree, *n, seed),
    }
}

fn describe(spec: &GraphSpec) -> String {
    match spec {
        GraphSpec::Lattice(dims) => dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x"),
        GraphSpec::Regular { degree, n } => format!("regular-{degree}-{n}"),
    }
}

fn plan_for(spec: Option<&GraphSpec>, net: &TensorNetwork, size: usize, seed: u64) -> Result<PartitionedPlan> {
    match spec {
        Some(GraphSpec::Lattice(dims)) => lattice_plan(dims, size),
        _ => bisection_plan(net, size, seed),
    }
}

/// Exact `ln |Z|` by the cheapest oracle that fits, if any.
fn oracle(net: &TensorNetwork, ising: Option<(&Graph, f64)>) -> Result<Option<(String, f64)>> {
    if !net.dangling().is_empty() {
        return Ok(None);
    }
    if let Some((g, beta)) = ising {
        if (1u128 << g.num_vertices.min(127)) <= BRUTE_FORCE_LIMIT {
            return Ok(Some(("spin_sum".into(), spin_sum_ln_z(g, beta)?)));
        }
    }
    if configuration_space(net) <= BRUTE_FORCE_LIMIT {
        return Ok(Some(("brute_force".into(), brute_force_ln_z(net)?.ln_abs)));
    }
    if sequential_width(net) <= SEQUENTIAL_LIMIT {
        return Ok(Some(("sequential".into(), sequential_ln_z(net, &FlopCounter::new())?.ln_abs)));
    }
    Ok(None)
}

pub fn run(cfg: &JobConfig) -> Result<Report> {
    if cfg.chi == 0 || cfg.swap_batch == 0 {
        return Err(Error::InvalidParameter("chi and swap batch must be at least 1".into()));
    }
    let wall = Instant::now();
    let (net, graph, name, label, beta, alpha) = match &cfg.model {
        ModelSpec::Ising { graph, beta } => {
            let g = graph_of(graph, cfg.seed)?;
            (ising_network(&g, *beta)?, Some((graph, g)), "ising", describe(graph), Some(*beta), None)
        }
        ModelSpec::Random { graph, alpha, mode_size } => {
            let g = graph_of(graph, cfg.seed)?;
            let spec = RandomSpec { alpha: *alpha, mode_size: *mode_size, seed: cfg.seed };
            (random_network(&g, &spec)?, Some((graph, g)), "random", describe(graph), None, Some(*alpha))
        }
        ModelSpec::File(path) => {
            (tnapprox::io::load_network(path)?, None, "file", path.display().to_string(), None, None)
        }
    };
    let size = cfg.partition_size.unwrap_or(match graph.as_ref().map(|g| g.0) {
        Some(GraphSpec::Lattice(dims)) => dims[0],
        _ => 5,
    });
    let plan = plan_for(graph.as_ref().map(|g| g.0), &net, size, cfg.seed)?;
    let opts = ContractOptions { chi: cfg.chi, swap_batch: cfg.swap_batch, ansatz: cfg.ansatz, seed: cfg.seed };
    let res = partitioned_contract(&net, &plan, &opts)?;
    let closed = res.tree.is_none();

    let exact = if cfg.oracle && closed {
        let ising = match (&cfg.model, &graph) {
            (ModelSpec::Ising { beta, .. }, Some((_, g))) => Some((g, *beta)),
            _ => None,
        };
        oracle(&net, ising)?
    } else {
        None
    };
    let relative_error = exact.as_ref().map(|(_, e)| (res.ln_abs - e).abs() / e.abs());
    Ok(Report {
        format_version: REPORT_VERSION,
        model: name.into(),
        graph: label,
        beta,
        alpha,
        chi: cfg.chi,
        partition_size: size,
        swap_batch: cfg.swap_batch,
        ansatz: cfg.ansatz.to_string(),
        seed: cfg.seed,
        closed,
        sign: res.sign,
        ln_z: res.ln_abs,
        tree_vertices: res.tree.as_ref().map(|t| t.network.len()),
        max_bond: res.steps.iter().map(|s| s.max_bond).max().unwrap_or(1),
        oracle: exact.as_ref().map(|e| e.0.clone()),
        exact_ln_z: exact.map(|e| e.1),
        relative_error,
        flops: u64::try_from(res.flops).unwrap_or(u64::MAX),
        numeric_seconds: res.numeric_seconds,
        analysis_seconds: res.analysis_seconds,
        wall_seconds: wall.elapsed().as_secs_f64(),
        steps: res.steps.len(),
    })
}

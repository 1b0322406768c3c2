mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use log::error;
use tnapprox::ordering::Ansatz;

use run::{run, GraphSpec, JobConfig, ModelSpec, Report};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    Ising,
    Random,
    File,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AnsatzArg {
    Mps,
    Comb,
}

/// Approximate contraction of Ising, random, or user-supplied tensor
/// networks. Every combination of `--chi` and `--seed` is one job, reported
/// as one JSON line.
#[derive(Debug, Parser)]
#[command(name = "tnapprox", version)]
struct Cli {
    #[arg(long, value_enum, default_value = "ising")]
    model: Model,
    /// Lattice side lengths, e.g. `4,4` or `5,5,5`.
    #[arg(long, value_delimiter = ',', default_value = "4,4")]
    dims: Vec<usize>,
    /// Random regular graph `degree,vertices` instead of a lattice; the graph
    /// is drawn from the job seed.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    regular: Option<Vec<usize>>,
    /// Inverse temperature of the Ising model.
    #[arg(long, default_value_t = 0.44)]
    beta: f64,
    /// Lower end of the uniform entry range of the random model.
    #[arg(long, default_value_t = -0.4, allow_hyphen_values = true)]
    alpha: f64,
    /// Bond size of the random model.
    #[arg(long, default_value_t = 2)]
    mode_size: usize,
    /// Network file for `--model file`.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Maximum bond sizes to sweep.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    chi: Vec<usize>,
    #[arg(long, value_enum, default_value = "mps")]
    ansatz: AnsatzArg,
    /// Vertices per partition [default: one lattice column or fiber, or 5].
    #[arg(long)]
    partition_size: Option<usize>,
    /// Adjacent swaps absorbed by one density-matrix pass.
    #[arg(long, default_value_t = 32)]
    swap_batch: usize,
    /// Seeds to sweep.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    /// Compare against an exact value when one is affordable.
    #[arg(long)]
    oracle: bool,
    /// JSON-lines report path [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the reports as a CSV table.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Sweep points run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn configs(cli: &Cli) -> Result<Vec<JobConfig>, String> {
    let graph = match &cli.regular {
        Some(v) if v.len() == 2 => GraphSpec::Regular { degree: v[0], n: v[1] },
        Some(_) => return Err("--regular takes `degree,vertices`".into()),
        None => GraphSpec::Lattice(cli.dims.clone()),
    };
    let model = match cli.model {
        Model::Ising => ModelSpec::Ising { graph, beta: cli.beta },
        Model::Random => ModelSpec::Random { graph, alpha: cli.alpha, mode_size: cli.mode_size },
        Model::File => ModelSpec::File(cli.file.clone().ok_or("--model file needs --file")?),
    };
    if cli.chi.contains(&0) || cli.swap_batch == 0 || cli.jobs == 0 {
        return Err("--chi, --swap-batch and --jobs must be at least 1".into());
    }
    let ansatz = Ansatz::from_str(match cli.ansatz {
        AnsatzArg::Mps => "mps",
        AnsatzArg::Comb => "comb",
    })
    .expect("known ansatz");
    Ok(cli
        .chi
        .iter()
        .flat_map(|&chi| {
            let model = model.clone();
            cli.seed.iter().map(move |&seed| JobConfig {
                model: model.clone(),
                ansatz,
                chi,
                partition_size: cli.partition_size,
                swap_batch: cli.swap_batch,
                seed,
                oracle: cli.oracle,
            })
        })
        .collect())
}

fn run_all(cfgs: &[JobConfig], jobs: usize) -> Vec<tnapprox::Result<Report>> {
    let mut out: Vec<Option<tnapprox::Result<Report>>> = (0..cfgs.len()).map(|_| None).collect();
    let per = cfgs.len().div_ceil(jobs).max(1);
    std::thread::scope(|s| {
        for (cfg_chunk, out_chunk) in cfgs.chunks(per).zip(out.chunks_mut(per)) {
            s.spawn(move || {
                for (c, o) in cfg_chunk.iter().zip(out_chunk) {
                    *o = Some(run(c));
                }
            });
        }
    });
    out.into_iter().map(|r| r.expect("every job ran")).collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfgs = match configs(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(p) => match File::create(p) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => {
                eprintln!("error: cannot create {}: {e}", p.display());
                return ExitCode::FAILURE;
            }
        },
        None => Box::new(io::stdout().lock()),
    };
    let mut table = match &cli.csv {
        Some(p) => match csv::Writer::from_path(p) {
            Ok(w) => Some(w),
            Err(e) => {
                eprintln!("error: cannot create {}: {e}", p.display());
                return ExitCode::FAILURE;
            }
        },
        None => None,
    };
    let mut ok = true;
    for result in run_all(&cfgs, cli.jobs) {
        match result {
            Ok(report) => {
                if report.relative_error.is_some_and(|e| !e.is_finite()) {
                    ok = false;
                }
                let line = serde_json::to_string(&report).expect("report serializes");
                if writeln!(sink, "{line}").is_err() {
                    ok = false;
                }
                if let Some(w) = table.as_mut() {
                    if w.serialize(&report).is_err() {
                        ok = false;
                    }
                }
            }
            Err(e) => {
                error!("job failed: {e}");
                eprintln!("error: {e}");
                ok = false;
            }
        }
    }
    if sink.flush().is_err() || table.as_mut().is_some_and(|w| w.flush().is_err()) {
        ok = false;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

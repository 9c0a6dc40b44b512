//! `aos`: solve, simulate and sweep weighted-AoS scheduling policies.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.
//! `AOS_THREADS` caps the worker pool.

mod artifact;
mod config;
mod csv;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aos_core::lagrange::{relaxed_policy, solve_system};
use aos_core::sim::{derive_seeds, run, sweep_n, sweep_q, SweepRow, SweepSettings};
use aos_core::{AosError, GreedyScheduler, NearStationaryScheduler, SimResult};
use clap::{Parser, Subcommand, ValueEnum};

use crate::artifact::Artifact;
use crate::csv::{g9, line};

#[derive(Parser)]
#[command(name = "aos", version, about = "Weighted age-of-synchronization scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the relaxed problem (or one fixed price) and write a policy artifact.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured bandwidth.
        #[arg(long = "N")]
        n: Option<usize>,
        /// Solve every node at this fixed price instead of meeting the budget.
        #[arg(long, conflicts_with = "n")]
        eta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a policy artifact or the greedy baseline; writes CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, required_unless_present = "greedy", conflicts_with = "greedy")]
        policy: Option<PathBuf>,
        #[arg(long)]
        greedy: bool,
        /// Seed; defaults to the configured one.
        #[arg(long)]
        seed: Option<u64>,
        /// Replications, seeded from `--seed` when more than one.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        #[arg(long = "T")]
        t: Option<u64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep N or q on the 40-node evaluation network; writes CSV.
    Sweep {
        #[arg(long, value_enum)]
        mode: SweepMode,
        /// Self-transition probability for `--mode n`.
        #[arg(long, default_value_t = 0.1)]
        q: f64,
        /// Bandwidth for `--mode q`.
        #[arg(long = "N", default_value_t = 6)]
        n: usize,
        /// Comma-separated sweep values (N or q).
        #[arg(long)]
        values: Option<String>,
        #[arg(long = "T", default_value_t = 100_000)]
        t: u64,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepMode {
    N,
    Q,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<AosError> for Failure {
    fn from(e: AosError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("AOS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Ignore the error if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Solve { config, n, eta, out } => {
            let mut cfg = config::load(&config)?;
            if let Some(n) = n {
                cfg.bandwidth = n;
                cfg.validate()?;
            }
            let artifact = match eta {
                Some(eta) => {
                    let sys = solve_system(eta, &cfg.nodes)?;
                    Artifact::fixed_eta(eta, &sys.nodes)
                }
                None => Artifact::relaxed(cfg.bandwidth, &relaxed_policy(&cfg.nodes, cfg.bandwidth)?),
            };
            let mut text = serde_json::to_string_pretty(&artifact)
                .map_err(|e| Failure::Numerical(format!("cannot serialize artifact: {e}")))?;
            text.push('\n');
            emit(out.as_deref(), &text)
        }
        Command::Simulate { config, policy, greedy, seed, seeds, t, n, out } => {
            let mut cfg = config::load(&config)?;
            if let Some(t) = t {
                cfg.horizon = t;
            }
            if let Some(n) = n {
                cfg.bandwidth = n;
            }
            cfg.validate()?;
            if seeds == 0 {
                return Err(Failure::Config("--seeds must be at least 1".into()));
            }
            let base = seed.unwrap_or(cfg.seed);
            let seed_list = if seeds == 1 { vec![base] } else { derive_seeds(base, seeds) };

            let (name, results): (&str, Vec<SimResult>) = if greedy {
                let sched = GreedyScheduler::for_nodes(&cfg.nodes, cfg.bandwidth)?;
                let res = seed_list.iter().map(|&s| run(&cfg, &mut sched.clone(), s)).collect();
                ("greedy", res)
            } else {
                let path = policy.expect("clap enforces --policy or --greedy");
                let artifact = load_artifact(&path)?;
                let policies = artifact.policies();
                if policies.len() != cfg.num_nodes() {
                    return Err(Failure::Config(format!(
                        "artifact has {} nodes, config has {}",
                        policies.len(),
                        cfg.num_nodes()
                    )));
                }
                for (i, (p, node)) in policies.iter().zip(&cfg.nodes).enumerate() {
                    if p.num_weight_states() != node.chain.num_states() || p.xi.len() != p.s_max + 1 {
                        return Err(Failure::Config(format!("artifact node {i} does not match the config")));
                    }
                }
                let sched = NearStationaryScheduler::new(policies, cfg.bandwidth);
                let res = seed_list.iter().map(|&s| run(&cfg, &mut sched.clone(), s)).collect();
                ("near_stationary", res)
            };

            let mut text = line(&["scheduler", "seed", "T", "J_avg", "D_avg"].map(String::from));
            for r in &results {
                text.push_str(&line(&[
                    name.to_string(),
                    r.seed.to_string(),
                    r.horizon.to_string(),
                    g9(r.j_avg),
                    g9(r.d_avg),
                ]));
            }
            emit(out.as_deref(), &text)
        }
        Command::Sweep { mode, q, n, values, t, seeds, seed, out } => {
            if seeds == 0 || t == 0 {
                return Err(Failure::Config("--seeds and --T must be positive".into()));
            }
            let settings = SweepSettings { horizon: t, num_seeds: seeds, master_seed: seed };
            let rows = match mode {
                SweepMode::N => {
                    let caps: Vec<usize> = match values {
                        Some(v) => parse_list(&v)?,
                        None => vec![2, 4, 6, 8, 12, 20],
                    };
                    sweep_n(q, &caps, &settings)?
                }
                SweepMode::Q => {
                    let qs: Vec<f64> = match values {
                        Some(v) => parse_list(&v)?,
                        None => vec![0.1, 0.3, 0.5, 0.7, 0.9],
                    };
                    sweep_q(&qs, n, &settings)?
                }
            };
            emit(out.as_deref(), &sweep_csv(&rows))
        }
    }
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let header = ["x", "J_ours_mean", "J_ours_se", "J_greedy_mean", "J_greedy_se", "J_lower"];
    let mut text = line(&header.map(String::from));
    for r in rows {
        text.push_str(&line(&[
            g9(r.x),
            g9(r.j_ours_mean),
            g9(r.j_ours_se),
            g9(r.j_greedy_mean),
            g9(r.j_greedy_se),
            g9(r.j_lower),
        ]));
    }
    text
}

fn parse_list<T: std::str::FromStr>(raw: &str) -> Result<Vec<T>, Failure> {
    let items: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Failure::Config("sweep range is empty".into()));
    }
    items
        .iter()
        .map(|s| s.parse::<T>().map_err(|_| Failure::Config(format!("bad sweep value {s:?}"))))
        .collect()
}

fn load_artifact(path: &Path) -> Result<Artifact, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("invalid policy artifact: {e}")))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

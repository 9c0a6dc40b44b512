//! Seeded slotted-time simulation and the parameter sweeps built on it.
//!
//! Randomness: one master seed per run. Node `i` draws from ChaCha stream
//! `i + 1` (arrival, then weight transition, each slot); the scheduler draws
//! from stream 0. Runs are bitwise reproducible and independent of how sweeps
//! are parallelized.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lagrange::relaxed_policy;
use crate::model::{make_paper_config, stationary_weights, NodeConfig, NodeState, SystemConfig};
use crate::occupation::TransmitPolicy;
use crate::scheduler::{GreedyScheduler, NearStationaryScheduler, Scheduler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Time-average weighted-sum AoS.
    pub j_avg: f64,
    /// Time-average transmissions per slot.
    pub d_avg: f64,
    pub per_node_j: Vec<f64>,
    /// Slots averaged over (after burn-in).
    pub horizon: u64,
    pub seed: u64,
    /// Most transmissions granted in any single slot.
    pub peak_transmissions: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Leading slots excluded from the averages.
    pub burn_in: u64,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn sample_index<G: Rng + ?Sized>(probs: &[f64], rng: &mut G) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Synchronized start with the weight state drawn from the chain's stationary
/// law (state 0 if the chain has none).
fn initial_state<G: Rng + ?Sized>(node: &NodeConfig, rng: &mut G) -> NodeState {
    let r = match stationary_weights(&node.chain) {
        Ok(sigma) => sample_index(&sigma, rng),
        Err(_) => 0,
    };
    NodeState::new(0, r)
}

pub fn run<S: Scheduler>(config: &SystemConfig, scheduler: &mut S, seed: u64) -> SimResult {
    run_with(config, scheduler, seed, RunOptions::default())
}

pub fn run_with<S: Scheduler>(
    config: &SystemConfig,
    scheduler: &mut S,
    seed: u64,
    opts: RunOptions,
) -> SimResult {
    let m = config.num_nodes();
    let mut sched_rng = stream(seed, 0);
    let mut node_rngs: Vec<ChaCha8Rng> = (0..m as u64).map(|i| stream(seed, i + 1)).collect();
    let mut states: Vec<NodeState> = config
        .nodes
        .iter()
        .zip(node_rngs.iter_mut())
        .map(|(n, rng)| initial_state(n, rng))
        .collect();

    let mut per_node = vec![0.0; m];
    let mut transmissions = 0u64;
    let mut peak = 0;
    for t in 0..config.horizon {
        let counted = t >= opts.burn_in;
        if counted {
            for ((acc, st), node) in per_node.iter_mut().zip(&states).zip(&config.nodes) {
                *acc += node.chain.weight(st.weight_state) * st.aos as f64;
            }
        }
        let decision = scheduler.decide(&states, &mut sched_rng);
        let sent = decision.count();
        assert!(
            sent <= config.bandwidth,
            "scheduler granted {sent} transmissions with N = {}",
            config.bandwidth
        );
        peak = peak.max(sent);
        if counted {
            transmissions += sent as u64;
        }
        for (i, node) in config.nodes.iter().enumerate() {
            states[i] = node.advance(states[i], decision.transmit[i], &mut node_rngs[i]);
        }
    }

    let slots = config.horizon.saturating_sub(opts.burn_in).max(1);
    let per_node_j: Vec<f64> = per_node.iter().map(|v| v / slots as f64).collect();
    SimResult {
        j_avg: per_node_j.iter().sum(),
        d_avg: transmissions as f64 / slots as f64,
        per_node_j,
        horizon: slots,
        seed,
        peak_transmissions: peak,
    }
}

/// Empirical `(s, r)` occupancy of one uncapped node following `policy`.
///
/// AoS values beyond the policy's bound are counted at the bound.
pub fn node_occupancy(node: &NodeConfig, policy: &TransmitPolicy, slots: u64, seed: u64) -> Vec<Vec<f64>> {
    let mut node_rng = stream(seed, 1);
    let mut policy_rng = stream(seed, 0);
    let rs = node.chain.num_states();
    let mut counts = vec![vec![0u64; rs]; policy.s_max + 1];
    let mut state = initial_state(node, &mut node_rng);
    for _ in 0..slots {
        let s = (state.aos as usize).min(policy.s_max);
        counts[s][state.weight_state] += 1;
        let send = policy_rng.gen::<f64>() < policy.prob(state.aos, state.weight_state);
        state = node.advance(state, send, &mut node_rng);
    }
    counts
        .into_iter()
        .map(|row| row.into_iter().map(|c| c as f64 / slots as f64).collect())
        .collect()
}

/// Deterministic per-replication seeds derived from a master seed.
pub fn derive_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct SweepSettings {
    pub horizon: u64,
    pub num_seeds: usize,
    pub master_seed: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            horizon: 100_000,
            num_seeds: 5,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `N` or `q`, depending on the sweep.
    pub x: f64,
    pub j_ours_mean: f64,
    pub j_ours_se: f64,
    pub j_greedy_mean: f64,
    pub j_greedy_se: f64,
    /// Relaxed-problem optimum (analytic).
    pub j_lower: f64,
    pub ours: Vec<SimResult>,
    pub greedy: Vec<SimResult>,
}

/// Simulates the near-stationary and greedy schedulers on `config` for each
/// derived seed and reports them next to the relaxed bound.
pub fn evaluate_point(x: f64, config: &SystemConfig, settings: &SweepSettings) -> Result<SweepRow> {
    let relaxed = relaxed_policy(&config.nodes, config.bandwidth)?;
    let greedy = GreedyScheduler::for_nodes(&config.nodes, config.bandwidth)?;
    let seeds = derive_seeds(settings.master_seed, settings.num_seeds);
    let runs: Vec<(SimResult, SimResult)> = seeds
        .par_iter()
        .map(|&seed| {
            let mut ours = NearStationaryScheduler::new(relaxed.policies.clone(), config.bandwidth);
            let mut base = greedy.clone();
            (run(config, &mut ours, seed), run(config, &mut base, seed))
        })
        .collect();
    let (ours, greedy): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let (j_ours_mean, j_ours_se) = mean_se(&ours.iter().map(|r| r.j_avg).collect::<Vec<_>>());
    let (j_greedy_mean, j_greedy_se) = mean_se(&greedy.iter().map(|r| r.j_avg).collect::<Vec<_>>());
    Ok(SweepRow {
        x,
        j_ours_mean,
        j_ours_se,
        j_greedy_mean,
        j_greedy_se,
        j_lower: relaxed.j_re,
        ours,
        greedy,
    })
}

/// Bandwidth sweep on the 40-node evaluation network.
pub fn sweep_n(q: f64, caps: &[usize], settings: &SweepSettings) -> Result<Vec<SweepRow>> {
    caps.iter()
        .map(|&n| {
            let cfg = make_paper_config(q, n, settings.horizon, settings.master_seed)?;
            evaluate_point(n as f64, &cfg, settings)
        })
        .collect()
}

/// Self-transition sweep on the 40-node evaluation network.
pub fn sweep_q(qs: &[f64], cap: usize, settings: &SweepSettings) -> Result<Vec<SweepRow>> {
    qs.iter()
        .map(|&q| {
            let cfg = make_paper_config(q, cap, settings.horizon, settings.master_seed)?;
            evaluate_point(q, &cfg, settings)
        })
        .collect()
}

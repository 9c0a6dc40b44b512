//! Domain types and slot-level dynamics.
//!
//! Weight states are 0-based (`0..R`) throughout the crate.
//!
//! Timing: an update that arrives during slot `t` is visible in the state of
//! slot `t + 1`. A node that transmits while desynchronized therefore moves to
//! AoS 1 (not 0) if another update arrived in the same slot.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AosError, Result};
use crate::linalg;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Markov chain of a node's weight state and the weight attached to each state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightChain {
    transition: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl WeightChain {
    pub fn new(transition: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let r = weights.len();
        if r == 0 {
            return Err(AosError::Config("weight chain needs at least one state".into()));
        }
        if transition.len() != r || transition.iter().any(|row| row.len() != r) {
            return Err(AosError::Config(format!(
                "transition matrix must be {r}x{r} to match {r} weight values"
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(AosError::Config(format!("row {i} has an entry outside [0,1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(AosError::Config(format!("row {i} sums to {sum}, not 1")));
            }
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(AosError::Config(format!("weights must be positive, got {w}")));
        }
        Ok(Self { transition, weights })
    }

    /// A chain with one weight state.
    pub fn constant(weight: f64) -> Result<Self> {
        Self::new(vec![vec![1.0]], vec![weight])
    }

    pub fn num_states(&self) -> usize {
        self.weights.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.transition[from][to]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, r: usize) -> f64 {
        self.weights[r]
    }

    /// Draws the next weight state from row `r` with a single uniform.
    pub fn sample_next<G: Rng + ?Sized>(&self, r: usize, rng: &mut G) -> usize {
        let u: f64 = rng.gen();
        let row = &self.transition[r];
        let mut acc = 0.0;
        for (next, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return next;
            }
        }
        // Rounding left `acc` a hair under 1; fall back to the last state with mass.
        row.iter().rposition(|&p| p > 0.0).unwrap_or(r)
    }

    /// Long-run average weight under the stationary distribution.
    pub fn mean_weight(&self) -> Result<f64> {
        let sigma = stationary_weights(self)?;
        Ok(sigma.iter().zip(&self.weights).map(|(s, w)| s * w).sum())
    }
}

/// One node: Bernoulli arrival probability per slot and its weight chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub arrival_rate: f64,
    pub chain: WeightChain,
}

impl NodeConfig {
    pub fn new(arrival_rate: f64, chain: WeightChain) -> Result<Self> {
        if !(0.0..=1.0).contains(&arrival_rate) {
            return Err(AosError::Config(format!(
                "arrival rate must lie in [0,1], got {arrival_rate}"
            )));
        }
        Ok(Self { arrival_rate, chain })
    }

    pub fn draw_arrival<G: Rng + ?Sized>(&self, rng: &mut G) -> bool {
        rng.gen::<f64>() < self.arrival_rate
    }

    /// Draws the arrival, then the weight transition, and applies both.
    pub fn advance<G: Rng + ?Sized>(&self, state: NodeState, transmit: bool, rng: &mut G) -> NodeState {
        let arrival = self.draw_arrival(rng);
        step_node(state, transmit, arrival, &self.chain, rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub nodes: Vec<NodeConfig>,
    /// Per-slot transmission cap `N`.
    pub bandwidth: usize,
    /// Horizon `T` in slots.
    pub horizon: u64,
    pub seed: u64,
}

impl SystemConfig {
    pub fn new(nodes: Vec<NodeConfig>, bandwidth: usize, horizon: u64, seed: u64) -> Result<Self> {
        let cfg = Self { nodes, bandwidth, horizon, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.nodes.len();
        if m == 0 {
            return Err(AosError::Config("at least one node is required".into()));
        }
        if self.bandwidth == 0 || self.bandwidth > m {
            return Err(AosError::Config(format!(
                "bandwidth N={} must satisfy 1 <= N <= M={m}",
                self.bandwidth
            )));
        }
        if self.horizon == 0 {
            return Err(AosError::Config("horizon T must be at least 1".into()));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// AoS in slots and current weight state of one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeState {
    pub aos: u64,
    pub weight_state: usize,
}

impl NodeState {
    pub fn new(aos: u64, weight_state: usize) -> Self {
        Self { aos, weight_state }
    }
}

/// Advances one node by a slot.
///
/// `arrival` is whether a new update arrived during this slot. The weight
/// transition is drawn from `rng` after the AoS update.
pub fn step_node<G: Rng + ?Sized>(
    state: NodeState,
    transmit: bool,
    arrival: bool,
    chain: &WeightChain,
    rng: &mut G,
) -> NodeState {
    // Transmitting while synchronized changes nothing.
    let aos = if state.aos == 0 || transmit {
        u64::from(arrival)
    } else {
        state.aos + 1
    };
    let weight_state = chain.sample_next(state.weight_state, rng);
    NodeState { aos, weight_state }
}

/// `sum_i w_i(r_i) * s_i` for the current slot.
pub fn weighted_aos(states: &[NodeState], nodes: &[NodeConfig]) -> Result<f64> {
    if states.len() != nodes.len() {
        return Err(AosError::Config(format!(
            "{} states for {} nodes",
            states.len(),
            nodes.len()
        )));
    }
    Ok(states
        .iter()
        .zip(nodes)
        .map(|(st, node)| node.chain.weight(st.weight_state) * st.aos as f64)
        .sum())
}

/// The unique stationary distribution of the weight chain.
pub fn stationary_weights(chain: &WeightChain) -> Result<Vec<f64>> {
    linalg::stationary_distribution(chain.transition()).ok_or_else(|| {
        AosError::NoUniqueStationary(format!(
            "{}-state chain has more than one recurrent class",
            chain.num_states()
        ))
    })
}

pub const PAPER_NODES: usize = 40;
pub const PAPER_ZIPF: f64 = 1.1;
pub const PAPER_STATE_WEIGHTS: [f64; 2] = [1.0, 10.0];

/// The 40-node evaluation network: arrival rates spaced linearly from 0.9 down
/// to 0.1, Zipf(1.1) base importance, state multipliers (1, 10) and a
/// symmetric two-state chain with self-transition `q`.
pub fn make_paper_config(q: f64, bandwidth: usize, horizon: u64, seed: u64) -> Result<SystemConfig> {
    if !(q > 0.0 && q < 1.0) {
        return Err(AosError::Config(format!("self-transition q must be in (0,1), got {q}")));
    }
    let m = PAPER_NODES;
    let nodes = (1..=m)
        .map(|i| {
            let lambda = 0.9 - 0.8 * (i - 1) as f64 / (m - 1) as f64;
            let base = (i as f64).powf(-PAPER_ZIPF);
            let chain = WeightChain::new(
                vec![vec![q, 1.0 - q], vec![1.0 - q, q]],
                PAPER_STATE_WEIGHTS.iter().map(|o| base * o).collect(),
            )?;
            NodeConfig::new(lambda, chain)
        })
        .collect::<Result<Vec<_>>>()?;
    SystemConfig::new(nodes, bandwidth, horizon, seed)
}

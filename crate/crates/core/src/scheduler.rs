//! Per-slot scheduling under the hard cap of `N` transmissions.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::model::{NodeConfig, NodeState};
use crate::occupation::TransmitPolicy;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleDecision {
    pub transmit: Vec<bool>,
}

impl ScheduleDecision {
    pub fn idle(num_nodes: usize) -> Self {
        Self { transmit: vec![false; num_nodes] }
    }

    pub fn count(&self) -> usize {
        self.transmit.iter().filter(|&&u| u).count()
    }

    pub fn granted(&self) -> impl Iterator<Item = usize> + '_ {
        self.transmit.iter().enumerate().filter(|(_, &u)| u).map(|(i, _)| i)
    }
}

pub trait Scheduler {
    fn decide<G: Rng + ?Sized>(&mut self, states: &[NodeState], rng: &mut G) -> ScheduleDecision;
}

/// Each node requests with its stationary probability; when more than `cap`
/// request, a uniformly random `cap`-subset of the requesters is granted.
pub fn near_stationary_schedule<G: Rng + ?Sized>(
    states: &[NodeState],
    policies: &[TransmitPolicy],
    cap: usize,
    rng: &mut G,
) -> ScheduleDecision {
    let mut requests: Vec<usize> = states
        .iter()
        .zip(policies)
        .enumerate()
        .filter_map(|(i, (st, pol))| {
            let u: f64 = rng.gen();
            (u < pol.prob(st.aos, st.weight_state)).then_some(i)
        })
        .collect();
    grant_subset(&mut requests, states.len(), cap, rng)
}

/// Grants all of `requests` if they fit, otherwise a uniform `cap`-subset
/// drawn by a partial Fisher-Yates shuffle.
pub fn grant_subset<G: Rng + ?Sized>(
    requests: &mut [usize],
    num_nodes: usize,
    cap: usize,
    rng: &mut G,
) -> ScheduleDecision {
    let mut decision = ScheduleDecision::idle(num_nodes);
    let granted: &[usize] = if requests.len() > cap {
        requests.partial_shuffle(rng, cap).0
    } else {
        requests
    };
    for &i in granted {
        decision.transmit[i] = true;
    }
    decision
}

/// The `cap` largest `aos * avg_weight` products; synchronized nodes are
/// never scheduled, ties go to the lower index.
pub fn greedy_schedule(states: &[NodeState], avg_weight: &[f64], cap: usize) -> ScheduleDecision {
    let mut ranked: Vec<(usize, f64)> = states
        .iter()
        .zip(avg_weight)
        .enumerate()
        .filter(|(_, (st, _))| st.aos > 0)
        .map(|(i, (st, w))| (i, st.aos as f64 * w))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut decision = ScheduleDecision::idle(states.len());
    for &(i, _) in ranked.iter().take(cap) {
        decision.transmit[i] = true;
    }
    decision
}

#[derive(Debug, Clone)]
pub struct NearStationaryScheduler {
    pub policies: Vec<TransmitPolicy>,
    pub cap: usize,
}

impl NearStationaryScheduler {
    pub fn new(policies: Vec<TransmitPolicy>, cap: usize) -> Self {
        Self { policies, cap }
    }
}

impl Scheduler for NearStationaryScheduler {
    fn decide<G: Rng + ?Sized>(&mut self, states: &[NodeState], rng: &mut G) -> ScheduleDecision {
        near_stationary_schedule(states, &self.policies, self.cap, rng)
    }
}

#[derive(Debug, Clone)]
pub struct GreedyScheduler {
    pub avg_weight: Vec<f64>,
    pub cap: usize,
}

impl GreedyScheduler {
    /// Uses each node's stationary mean weight.
    pub fn for_nodes(nodes: &[NodeConfig], cap: usize) -> Result<Self> {
        let avg_weight = nodes
            .iter()
            .map(|n| n.chain.mean_weight())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { avg_weight, cap })
    }
}

impl Scheduler for GreedyScheduler {
    fn decide<G: Rng + ?Sized>(&mut self, states: &[NodeState], _rng: &mut G) -> ScheduleDecision {
        greedy_schedule(states, &self.avg_weight, self.cap)
    }
}

//! The truncated per-node MDP over `{0..S_max} x {0..R-1}`.
//!
//! This is the single kernel construction used by the LP builder and by the
//! oracles. Transmission is forced at `s = S_max`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{NodeConfig, WeightChain};
use crate::occupation::TransmitPolicy;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedMdp {
    pub s_max: usize,
    pub arrival_rate: f64,
    pub chain: WeightChain,
    /// Price charged per transmission.
    pub eta: f64,
}

const IDLE_OR_SEND: [bool; 2] = [false, true];
const SEND_ONLY: [bool; 1] = [true];

impl TruncatedMdp {
    pub fn num_weight_states(&self) -> usize {
        self.chain.num_states()
    }

    pub fn num_states(&self) -> usize {
        (self.s_max + 1) * self.num_weight_states()
    }

    pub fn index(&self, aos: usize, r: usize) -> usize {
        aos * self.num_weight_states() + r
    }

    /// Inverse of [`index`](Self::index): `(aos, r)`.
    pub fn state(&self, idx: usize) -> (usize, usize) {
        let rs = self.num_weight_states();
        (idx / rs, idx % rs)
    }

    /// Admissible actions (`true` = transmit).
    pub fn actions(&self, aos: usize) -> &'static [bool] {
        if aos >= self.s_max {
            &SEND_ONLY
        } else {
            &IDLE_OR_SEND
        }
    }

    pub fn cost(&self, aos: usize, r: usize, transmit: bool) -> f64 {
        self.chain.weight(r) * aos as f64 + if transmit { self.eta } else { 0.0 }
    }

    /// Successor distribution as `(state index, probability)` pairs.
    ///
    /// Idling at the cap is inadmissible and yields an empty list.
    pub fn transitions(&self, aos: usize, r: usize, transmit: bool) -> Vec<(usize, f64)> {
        let lambda = self.arrival_rate;
        let rs = self.num_weight_states();
        let mut out = Vec::with_capacity(2 * rs);
        if aos == 0 || transmit {
            for next_r in 0..rs {
                let p = self.chain.prob(r, next_r);
                if p == 0.0 {
                    continue;
                }
                if lambda < 1.0 {
                    out.push((self.index(0, next_r), p * (1.0 - lambda)));
                }
                if lambda > 0.0 {
                    out.push((self.index(1, next_r), p * lambda));
                }
            }
        } else if aos < self.s_max {
            for next_r in 0..rs {
                let p = self.chain.prob(r, next_r);
                if p > 0.0 {
                    out.push((self.index(aos + 1, next_r), p));
                }
            }
        }
        out
    }
}

/// Builds the truncated MDP for `node` at price `eta`.
pub fn build_kernel(node: &NodeConfig, s_max: usize, eta: f64) -> TruncatedMdp {
    assert!(s_max >= 1, "S_max must be at least 1");
    TruncatedMdp {
        s_max,
        arrival_rate: node.arrival_rate,
        chain: node.chain.clone(),
        eta,
    }
}

/// Per-weight-state thresholds of a monotone transmit policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdProfile {
    /// First reachable AoS at which the node always transmits, per weight state.
    pub thresholds: Vec<usize>,
    /// The randomized state just below the threshold, if any.
    pub fractional_state: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdViolation {
    pub weight_state: usize,
    pub aos: usize,
    pub xi: f64,
}

impl fmt::Display for ThresholdViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "transmit probability {} at (s={}, r={}) breaks the threshold structure",
            self.xi, self.aos, self.weight_state
        )
    }
}

impl std::error::Error for ThresholdViolation {}

const XI_TOL: f64 = 1e-9;

/// Checks that, over reachable states, each weight state's transmit
/// probabilities read `0..0 [p] 1..1` in increasing AoS.
///
/// `reachable[s][r]` masks the states to check. When no reachable state
/// transmits for sure, the threshold is the one after the fractional state or,
/// failing that, the forced cap.
pub fn check_threshold(
    policy: &TransmitPolicy,
    reachable: &[Vec<bool>],
) -> Result<ThresholdProfile, ThresholdViolation> {
    #[derive(PartialEq)]
    enum Phase {
        Idle,
        Boundary,
        Send,
    }

    let rs = policy.num_weight_states();
    let mut thresholds = Vec::with_capacity(rs);
    let mut fractional_state = Vec::with_capacity(rs);
    for r in 0..rs {
        let mut phase = Phase::Idle;
        let mut tau = None;
        let mut frac = None;
        for s in 0..=policy.s_max {
            if !reachable[s][r] {
                continue;
            }
            let xi = policy.xi[s][r];
            let violation = ThresholdViolation { weight_state: r, aos: s, xi };
            if xi <= XI_TOL {
                if phase != Phase::Idle {
                    return Err(violation);
                }
            } else if xi >= 1.0 - XI_TOL {
                if phase != Phase::Send {
                    tau = Some(s);
                    phase = Phase::Send;
                }
            } else {
                if phase != Phase::Idle {
                    return Err(violation);
                }
                frac = Some(s);
                phase = Phase::Boundary;
            }
        }
        let tau = tau.unwrap_or_else(|| frac.map_or(policy.s_max, |f| (f + 1).min(policy.s_max)));
        thresholds.push(tau);
        fractional_state.push(frac);
    }
    Ok(ThresholdProfile { thresholds, fractional_state })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(lambda: f64, chain: WeightChain) -> NodeConfig {
        NodeConfig::new(lambda, chain).unwrap()
    }

    fn two_state() -> WeightChain {
        WeightChain::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]], vec![1.0, 4.0]).unwrap()
    }

    #[test]
    fn transmit_from_positive_aos() {
        let mdp = build_kernel(&node(0.25, two_state()), 5, 1.0);
        let t = mdp.transitions(1, 0, true);
        assert_eq!(
            t,
            vec![
                (mdp.index(0, 0), 0.3 * 0.75),
                (mdp.index(1, 0), 0.3 * 0.25),
                (mdp.index(0, 1), 0.7 * 0.75),
                (mdp.index(1, 1), 0.7 * 0.25),
            ]
        );
    }

    #[test]
    fn synchronized_state_only_sees_arrivals() {
        let mdp = build_kernel(&node(0.25, two_state()), 5, 1.0);
        for u in [false, true] {
            let t = mdp.transitions(0, 1, u);
            assert_eq!(
                t,
                vec![
                    (mdp.index(0, 0), 0.6 * 0.75),
                    (mdp.index(1, 0), 0.6 * 0.25),
                    (mdp.index(0, 1), 0.4 * 0.75),
                    (mdp.index(1, 1), 0.4 * 0.25),
                ]
            );
        }
    }

    #[test]
    fn idle_increments_aos() {
        let mdp = build_kernel(&node(0.25, two_state()), 5, 1.0);
        assert_eq!(
            mdp.transitions(3, 0, false),
            vec![(mdp.index(4, 0), 0.3), (mdp.index(4, 1), 0.7)]
        );
        assert!(mdp.transitions(5, 0, false).is_empty());
        assert_eq!(mdp.actions(5), &[true]);
        assert_eq!(mdp.actions(4), &[false, true]);
    }

    #[test]
    fn no_arrivals_stays_synchronized() {
        let mdp = build_kernel(&node(0.0, WeightChain::constant(1.0).unwrap()), 3, 1.0);
        assert_eq!(mdp.transitions(0, 0, false), vec![(0, 1.0)]);
    }

    #[test]
    fn cost_is_weighted_aos_plus_price() {
        let mdp = build_kernel(&node(0.5, two_state()), 5, 2.5);
        assert_eq!(mdp.cost(3, 1, false), 12.0);
        assert_eq!(mdp.cost(3, 1, true), 14.5);
        assert_eq!(mdp.cost(0, 0, true), 2.5);
    }

    #[test]
    fn kernel_rows_are_stochastic() {
        for lambda in [0.0, 0.1, 0.5, 1.0] {
            let mdp = build_kernel(&node(lambda, two_state()), 7, 1.0);
            for idx in 0..mdp.num_states() {
                let (s, r) = mdp.state(idx);
                for &u in mdp.actions(s) {
                    let total: f64 = mdp.transitions(s, r, u).iter().map(|(_, p)| p).sum();
                    assert!((total - 1.0).abs() < 1e-12, "s={s} r={r} u={u}");
                }
            }
        }
    }

    fn policy(col: &[f64]) -> TransmitPolicy {
        TransmitPolicy {
            s_max: col.len() - 1,
            xi: col.iter().map(|&x| vec![x]).collect(),
        }
    }

    fn all_reachable(n: usize) -> Vec<Vec<bool>> {
        vec![vec![true]; n]
    }

    #[test]
    fn threshold_examples() {
        let p = check_threshold(&policy(&[0.0, 0.0, 1.0, 1.0]), &all_reachable(4)).unwrap();
        assert_eq!(p.thresholds, vec![2]);
        assert_eq!(p.fractional_state, vec![None]);

        let err = check_threshold(&policy(&[0.0, 1.0, 0.0, 1.0]), &all_reachable(4)).unwrap_err();
        assert_eq!(err.aos, 2);

        let p = check_threshold(&policy(&[0.0, 0.4, 1.0, 1.0]), &all_reachable(4)).unwrap();
        assert_eq!(p.thresholds, vec![2]);
        assert_eq!(p.fractional_state, vec![Some(1)]);
    }

    #[test]
    fn threshold_ignores_unreachable_states() {
        let mask = vec![vec![true], vec![true], vec![false], vec![true]];
        let p = check_threshold(&policy(&[0.0, 1.0, 0.0, 1.0]), &mask).unwrap();
        assert_eq!(p.thresholds, vec![1]);
    }

    #[test]
    fn two_fractional_states_rejected() {
        let err = check_threshold(&policy(&[0.0, 0.3, 0.6, 1.0]), &all_reachable(4)).unwrap_err();
        assert_eq!(err.aos, 2);
    }
}

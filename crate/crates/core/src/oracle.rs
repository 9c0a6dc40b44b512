//! Reference solvers for checking the LP. They are slow and simple on purpose
//! and share nothing with the LP path except the kernel in [`crate::mdp`].

use crate::error::{AosError, Result};
use crate::linalg;
use crate::mdp::TruncatedMdp;
use crate::occupation::TransmitPolicy;

#[derive(Debug, Clone, PartialEq)]
pub struct RviSolution {
    /// Optimal long-run average cost.
    pub gain: f64,
    /// `send[s][r]`, a deterministic optimal policy.
    pub send: Vec<Vec<bool>>,
    pub iterations: usize,
}

impl RviSolution {
    pub fn as_policy(&self) -> TransmitPolicy {
        TransmitPolicy {
            s_max: self.send.len() - 1,
            xi: self
                .send
                .iter()
                .map(|row| row.iter().map(|&u| if u { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }
}

/// Action, its cost and its successor distribution.
type Choice = (bool, f64, Vec<(usize, f64)>);

pub const RVI_MAX_ITERATIONS: usize = 1_000_000;

/// Relative value iteration on the lazy chain `(P + I) / 2`, which has the
/// same stationary laws and gains but is aperiodic. The reference state is
/// `(0, 0)`. Stops when the span of `T h - h` drops below `tol`.
pub fn rvi_average_cost(mdp: &TruncatedMdp, tol: f64) -> Result<RviSolution> {
    let n = mdp.num_states();
    let kernel: Vec<Vec<Choice>> = (0..n)
        .map(|x| {
            let (s, r) = mdp.state(x);
            mdp.actions(s)
                .iter()
                .map(|&u| (u, mdp.cost(s, r, u), mdp.transitions(s, r, u)))
                .collect()
        })
        .collect();

    let reference = mdp.index(0, 0);
    let mut h = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut choice = vec![false; n];
    for iteration in 1..=RVI_MAX_ITERATIONS {
        for x in 0..n {
            let mut best = f64::INFINITY;
            let mut best_u = false;
            for (u, c, succ) in &kernel[x] {
                let expect: f64 = succ.iter().map(|&(y, p)| p * h[y]).sum();
                let q = c + 0.5 * expect + 0.5 * h[x];
                // Prefer idling unless sending is strictly better.
                if q < best - 1e-12 * best.abs().max(1.0) || best.is_infinite() {
                    best = q;
                    best_u = *u;
                }
            }
            next[x] = best;
            choice[x] = best_u;
        }
        let (lo, hi) = next
            .iter()
            .zip(&h)
            .map(|(a, b)| a - b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let offset = next[reference];
        for (hx, nx) in h.iter_mut().zip(&next) {
            *hx = nx - offset;
        }
        if hi - lo < tol {
            let send = (0..=mdp.s_max)
                .map(|s| (0..mdp.num_weight_states()).map(|r| choice[mdp.index(s, r)]).collect())
                .collect();
            return Ok(RviSolution { gain: 0.5 * (hi + lo), send, iterations: iteration });
        }
    }
    Err(AosError::Oracle(format!(
        "relative value iteration did not converge in {RVI_MAX_ITERATIONS} iterations"
    )))
}

/// Transition matrix of the chain induced by a (possibly randomized) policy.
pub fn policy_chain(mdp: &TruncatedMdp, policy: &TransmitPolicy) -> Vec<Vec<f64>> {
    let n = mdp.num_states();
    let mut rows = vec![vec![0.0; n]; n];
    for (x, row) in rows.iter_mut().enumerate() {
        let (s, r) = mdp.state(x);
        let xi = if s >= mdp.s_max { 1.0 } else { policy.xi[s][r] };
        for &u in mdp.actions(s) {
            let w = if u { xi } else { 1.0 - xi };
            if w == 0.0 {
                continue;
            }
            for (y, p) in mdp.transitions(s, r, u) {
                row[y] += w * p;
            }
        }
    }
    rows
}

/// Stationary distribution of a chain with a single recurrent class.
pub fn chain_stationary(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let pi = linalg::stationary_distribution(rows)
        .ok_or_else(|| AosError::Oracle("chain has more than one recurrent class".into()))?;
    let n = rows.len();
    let residual = (0..n)
        .map(|j| {
            let inflow: f64 = (0..n).map(|i| pi[i] * rows[i][j]).sum();
            (inflow - pi[j]).abs()
        })
        .fold(0.0, f64::max);
    if residual > 1e-10 {
        return Err(AosError::Oracle(format!("stationary residual {residual:.3e}")));
    }
    Ok(pi)
}

/// Long-run average cost of a policy, from its stationary distribution.
pub fn policy_gain(mdp: &TruncatedMdp, policy: &TransmitPolicy) -> Result<f64> {
    let pi = chain_stationary(&policy_chain(mdp, policy))?;
    Ok(pi
        .iter()
        .enumerate()
        .map(|(x, p)| {
            let (s, r) = mdp.state(x);
            let xi = if s >= mdp.s_max { 1.0 } else { policy.xi[s][r] };
            p * ((1.0 - xi) * mdp.cost(s, r, false) + xi * mdp.cost(s, r, true))
        })
        .sum())
}

pub const MAX_ENUMERATION: usize = 10_000;

/// Best threshold vector over `{1..=S_max}^R` by exhaustive search.
pub fn enumerate_threshold_policies(mdp: &TruncatedMdp) -> Result<(Vec<usize>, f64)> {
    let rs = mdp.num_weight_states();
    let s_max = mdp.s_max;
    let combos = s_max
        .checked_pow(rs as u32)
        .filter(|&c| c <= MAX_ENUMERATION)
        .ok_or_else(|| AosError::Oracle(format!("{s_max}^{rs} threshold vectors is too many")))?;

    let mut tau = vec![1usize; rs];
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..combos {
        let policy = TransmitPolicy {
            s_max,
            xi: (0..=s_max)
                .map(|s| tau.iter().map(|&t| if s >= t { 1.0 } else { 0.0 }).collect())
                .collect(),
        };
        let gain = policy_gain(mdp, &policy)?;
        if best.as_ref().is_none_or(|b| gain < b.1) {
            best = Some((tau.clone(), gain));
        }
        // Odometer increment over {1..=s_max}^R.
        for t in tau.iter_mut() {
            if *t < s_max {
                *t += 1;
                break;
            }
            *t = 1;
        }
    }
    best.ok_or_else(|| AosError::Oracle("no threshold vectors".into()))
}

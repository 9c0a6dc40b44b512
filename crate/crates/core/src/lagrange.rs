//! Transmission-price search and two-point mixing.
//!
//! For a price `eta` every node solves its own LP, giving the system-wide
//! transmission rate `D(eta)`, which is a non-increasing step function. The
//! relaxed optimum mixes the solutions on both sides of the step where `D`
//! crosses the budget `N`, weighting them so the mixture uses exactly `N`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AosError, Result};
use crate::model::NodeConfig;
use crate::occupation::{extract_policy, measure_j_d, solve_node, OccupationSolution, TransmitPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierBracket {
    /// Price at which the system transmits at least `N` per slot.
    pub eta1: f64,
    /// Price at which the system transmits at most `N` per slot.
    pub eta2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl MultiplierBracket {
    /// True when the budget is slack even at the smallest probed price.
    pub fn is_degenerate(&self) -> bool {
        self.eta1 == self.eta2
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub eta_min: f64,
    pub eta_start: f64,
    /// Relative bisection width, `|hi - lo| <= eta_tol * max(1, hi)`.
    pub eta_tol: f64,
    pub max_doublings: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            eta_min: 1e-6,
            eta_start: 1.0,
            eta_tol: 1e-6,
            max_doublings: 64,
        }
    }
}

/// Per-node solutions at one price plus their total rate.
#[derive(Debug, Clone)]
pub struct SystemSolve {
    pub eta: f64,
    pub nodes: Vec<OccupationSolution>,
    pub d: f64,
    pub j: f64,
}

/// Solves every node at `eta`. Node solves run in parallel; totals are
/// summed in node order.
pub fn solve_system(eta: f64, nodes: &[NodeConfig]) -> Result<SystemSolve> {
    let sols = nodes
        .par_iter()
        .map(|n| solve_node(n, eta))
        .collect::<Result<Vec<_>>>()?;
    let d = sols.iter().map(|s| s.d).sum();
    let j = sols.iter().map(|s| s.j).sum();
    Ok(SystemSolve { eta, nodes: sols, d, j })
}

/// `D(eta)`: total time-average transmissions.
pub fn system_d(eta: f64, nodes: &[NodeConfig]) -> Result<f64> {
    Ok(solve_system(eta, nodes)?.d)
}

/// Bracket plus the solves at both ends.
#[derive(Debug, Clone)]
pub struct BracketSearch {
    pub bracket: MultiplierBracket,
    pub low: SystemSolve,
    pub high: SystemSolve,
    /// Every `(eta, D)` evaluated, in evaluation order.
    pub probes: Vec<(f64, f64)>,
}

pub fn bracket_multiplier(nodes: &[NodeConfig], cap: usize, eta_tol: f64) -> Result<MultiplierBracket> {
    let opts = SearchOptions { eta_tol, ..SearchOptions::default() };
    Ok(search_multiplier(nodes, cap, &opts)?.bracket)
}

pub fn search_multiplier(nodes: &[NodeConfig], cap: usize, opts: &SearchOptions) -> Result<BracketSearch> {
    if cap == 0 {
        return Err(AosError::Config("bandwidth N must be at least 1".into()));
    }
    let target = cap as f64;
    let mut probes = Vec::new();
    let mut eval = |eta: f64| -> Result<SystemSolve> {
        let s = solve_system(eta, nodes)?;
        probes.push((eta, s.d));
        Ok(s)
    };

    let floor = eval(opts.eta_min)?;
    if floor.d <= target {
        let bracket = MultiplierBracket {
            eta1: opts.eta_min,
            eta2: opts.eta_min,
            d1: floor.d,
            d2: floor.d,
        };
        return Ok(BracketSearch { bracket, high: floor.clone(), low: floor, probes });
    }

    let mut low = floor;
    let mut high = eval(opts.eta_start.max(opts.eta_min))?;
    let mut doublings = 0;
    while high.d > target {
        doublings += 1;
        if doublings > opts.max_doublings {
            return Err(AosError::Bracket(format!(
                "D(eta) still {:.6} > N={cap} at eta={:.3e}",
                high.d, high.eta
            )));
        }
        let next = eval(high.eta * 2.0)?;
        low = std::mem::replace(&mut high, next);
    }

    while high.eta - low.eta > opts.eta_tol * high.eta.max(1.0) {
        let mid = eval(0.5 * (low.eta + high.eta))?;
        if mid.d > target {
            low = mid;
        } else {
            high = mid;
        }
    }

    let bracket = MultiplierBracket {
        eta1: low.eta,
        eta2: high.eta,
        d1: low.d,
        d2: high.d,
    };
    Ok(BracketSearch { bracket, low, high, probes })
}

/// Mixing weight on the high-rate solution so the mixture transmits `cap`.
pub fn compute_alpha(d1: f64, d2: f64, cap: f64) -> Result<f64> {
    if d1 == d2 {
        return if (d1 - cap).abs() <= 1e-12 {
            Ok(1.0)
        } else {
            Err(AosError::Bracket(format!("degenerate bracket D1 = D2 = {d1} != N = {cap}")))
        };
    }
    if d1 < d2 {
        return Err(AosError::Bracket(format!("bracket inverted: D1 = {d1} < D2 = {d2}")));
    }
    Ok(((cap - d2) / (d1 - d2)).clamp(0.0, 1.0))
}

/// Convex combination of two occupation measures for the same node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedMeasure {
    pub s_max: usize,
    pub mu: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
}

/// `alpha * first + (1 - alpha) * second` on the larger of the two bounds,
/// zero-padding the shorter measure.
pub fn mix_solutions(first: &OccupationSolution, second: &OccupationSolution, alpha: f64) -> MixedMeasure {
    let s_max = first.s_max.max(second.s_max);
    let rs = first.num_weight_states();
    let at = |m: &[Vec<f64>], s: usize, r: usize| m.get(s).map_or(0.0, |row| row[r]);
    let blend = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..=s_max)
            .map(|s| {
                (0..rs)
                    .map(|r| alpha * at(a, s, r) + (1.0 - alpha) * at(b, s, r))
                    .collect()
            })
            .collect()
    };
    MixedMeasure {
        s_max,
        mu: blend(&first.mu, &second.mu),
        nu: blend(&first.nu, &second.nu),
    }
}

impl MixedMeasure {
    pub fn policy(&self) -> TransmitPolicy {
        let as_solution = OccupationSolution {
            s_max: self.s_max,
            eta: f64::NAN,
            mu: self.mu.clone(),
            nu: self.nu.clone(),
            j: 0.0,
            d: 0.0,
            objective: 0.0,
        };
        extract_policy(&as_solution)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelaxedSolution {
    pub bracket: MultiplierBracket,
    pub alpha: f64,
    pub policies: Vec<TransmitPolicy>,
    pub mixed: Vec<MixedMeasure>,
    /// Lower bound on the weighted AoS per slot.
    pub j_re: f64,
    /// Transmissions per slot of the relaxed policy.
    pub d_re: f64,
}

/// The optimal policy under the time-averaged bandwidth budget.
pub fn relaxed_policy(nodes: &[NodeConfig], cap: usize) -> Result<RelaxedSolution> {
    relaxed_policy_with(nodes, cap, &SearchOptions::default())
}

pub fn relaxed_policy_with(nodes: &[NodeConfig], cap: usize, opts: &SearchOptions) -> Result<RelaxedSolution> {
    let search = search_multiplier(nodes, cap, opts)?;
    let bracket = search.bracket;
    let alpha = if bracket.is_degenerate() {
        1.0
    } else {
        compute_alpha(bracket.d1, bracket.d2, cap as f64)?
    };
    let mixed: Vec<MixedMeasure> = search
        .low
        .nodes
        .iter()
        .zip(&search.high.nodes)
        .map(|(a, b)| mix_solutions(a, b, alpha))
        .collect();
    let policies = mixed.iter().map(MixedMeasure::policy).collect();
    let (j_re, d_re) = nodes
        .iter()
        .zip(&mixed)
        .map(|(n, m)| measure_j_d(n, &m.mu, &m.nu))
        .fold((0.0, 0.0), |acc, (j, d)| (acc.0 + j, acc.1 + d));
    Ok(RelaxedSolution {
        bracket,
        alpha,
        policies,
        mixed,
        j_re,
        d_re,
    })
}

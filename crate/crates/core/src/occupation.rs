//! Occupation-measure LP for one node at a fixed transmission price.
//!
//! Variables are `mu[s][r]`, the long-run probability of state `(s, r)`, and
//! `nu[s][r] <= mu[s][r]`, the probability of being there and transmitting.
//! The optimal stationary policy transmits with probability `nu / mu`.

use serde::{Deserialize, Serialize};

use crate::error::{AosError, Result};
use crate::mdp::{build_kernel, TruncatedMdp};
use crate::model::NodeConfig;
use crate::simplex::{solve_lp, LinearProgram, SparseRow};

/// States with less stationary mass than this are treated as unreachable.
pub const REACH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationSolution {
    pub s_max: usize,
    pub eta: f64,
    /// `mu[s][r]`.
    pub mu: Vec<Vec<f64>>,
    /// `nu[s][r]`.
    pub nu: Vec<Vec<f64>>,
    /// Time-average weighted AoS `sum w(r) s mu`.
    pub j: f64,
    /// Time-average transmissions `sum nu`.
    pub d: f64,
    /// LP objective `j + eta d`.
    pub objective: f64,
}

impl OccupationSolution {
    /// Probability mass sitting at the truncation bound.
    pub fn cap_mass(&self) -> f64 {
        self.mu[self.s_max].iter().sum()
    }

    pub fn num_weight_states(&self) -> usize {
        self.mu.first().map_or(0, Vec::len)
    }

    pub fn reachable(&self) -> Vec<Vec<bool>> {
        self.mu
            .iter()
            .map(|row| row.iter().map(|&m| m > REACH_TOL).collect())
            .collect()
    }
}

/// Per-state transmit probabilities `xi[s][r]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitPolicy {
    pub s_max: usize,
    pub xi: Vec<Vec<f64>>,
}

impl TransmitPolicy {
    pub fn num_weight_states(&self) -> usize {
        self.xi.first().map_or(0, Vec::len)
    }

    /// Transmit probability; AoS beyond the bound is looked up at the bound.
    pub fn prob(&self, aos: u64, r: usize) -> f64 {
        let s = usize::try_from(aos).map_or(self.s_max, |s| s.min(self.s_max));
        self.xi[s][r]
    }
}

/// Variable layout of the node LP: `mu` first, then `nu`, each `s`-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpLayout {
    pub s_max: usize,
    pub weight_states: usize,
}

impl LpLayout {
    pub fn num_states(&self) -> usize {
        (self.s_max + 1) * self.weight_states
    }

    pub fn num_vars(&self) -> usize {
        2 * self.num_states()
    }

    pub fn mu(&self, s: usize, r: usize) -> usize {
        s * self.weight_states + r
    }

    pub fn nu(&self, s: usize, r: usize) -> usize {
        self.num_states() + self.mu(s, r)
    }
}

/// Builds the occupation-measure LP.
///
/// Equality rows, in order: normalization; inflow into `(0, r)` for each `r`;
/// inflow into `(1, r)`; inflow into `(s, r)` for `s = 2..=S_max`; and
/// `mu = nu` at the bound. Inequalities are `nu <= mu`. `nu[0][r]` is pinned
/// to zero through its upper bound, since transmitting while synchronized only
/// adds cost.
pub fn build_lp(mdp: &TruncatedMdp) -> (LinearProgram, LpLayout) {
    let layout = LpLayout {
        s_max: mdp.s_max,
        weight_states: mdp.num_weight_states(),
    };
    let rs = layout.weight_states;
    let mut lp = LinearProgram::new(layout.num_vars());

    for s in 0..=mdp.s_max {
        for r in 0..rs {
            lp.cost[layout.mu(s, r)] = mdp.cost(s, r, false);
            lp.cost[layout.nu(s, r)] = mdp.eta;
        }
    }
    for r in 0..rs {
        lp.upper[layout.nu(0, r)] = Some(0.0);
    }

    // Inflow rows: mu_y - sum_x [ (mu_x - nu_x) P(y|x,idle) + nu_x P(y|x,send) ] = 0.
    let mut inflow: Vec<SparseRow> = (0..layout.num_states())
        .map(|y| vec![(y, 1.0)])
        .collect();
    for s in 0..=mdp.s_max {
        for r in 0..rs {
            for &send in mdp.actions(s) {
                for (y, p) in mdp.transitions(s, r, send) {
                    if send {
                        inflow[y].push((layout.nu(s, r), -p));
                    } else {
                        inflow[y].push((layout.mu(s, r), -p));
                        inflow[y].push((layout.nu(s, r), p));
                    }
                }
            }
        }
    }
    for row in inflow.iter_mut() {
        merge_duplicates(row);
    }

    lp.add_eq((0..layout.num_states()).map(|i| (i, 1.0)).collect(), 1.0);
    for s in 0..=mdp.s_max {
        for r in 0..rs {
            lp.add_eq(std::mem::take(&mut inflow[layout.mu(s, r)]), 0.0);
        }
    }
    for r in 0..rs {
        lp.add_eq(vec![(layout.mu(mdp.s_max, r), 1.0), (layout.nu(mdp.s_max, r), -1.0)], 0.0);
    }
    for s in 0..=mdp.s_max {
        for r in 0..rs {
            lp.add_le(vec![(layout.nu(s, r), 1.0), (layout.mu(s, r), -1.0)], 0.0);
        }
    }
    (lp, layout)
}

fn merge_duplicates(row: &mut SparseRow) {
    row.sort_by_key(|e| e.0);
    let mut merged: SparseRow = Vec::with_capacity(row.len());
    for &(j, a) in row.iter() {
        match merged.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => merged.push((j, a)),
        }
    }
    merged.retain(|e| e.1 != 0.0);
    *row = merged;
}

/// Solves the node LP at a fixed truncation bound.
pub fn solve_node_truncated(node: &NodeConfig, eta: f64, s_max: usize) -> Result<OccupationSolution> {
    let mdp = build_kernel(node, s_max, eta);
    let (lp, layout) = build_lp(&mdp);
    let sol = solve_lp(&lp)?;
    let rs = layout.weight_states;
    let mu: Vec<Vec<f64>> = (0..=s_max)
        .map(|s| (0..rs).map(|r| sol.x[layout.mu(s, r)]).collect())
        .collect();
    let nu: Vec<Vec<f64>> = (0..=s_max)
        .map(|s| (0..rs).map(|r| sol.x[layout.nu(s, r)].min(sol.x[layout.mu(s, r)])).collect())
        .collect();
    let (j, d) = measure_j_d(node, &mu, &nu);
    Ok(OccupationSolution {
        s_max,
        eta,
        mu,
        nu,
        j,
        d,
        objective: sol.objective,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct Truncation {
    pub initial: usize,
    pub ceiling: usize,
    /// Cap mass below which the bound is considered inert.
    pub cap_mass_tol: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            initial: 32,
            ceiling: 4096,
            cap_mass_tol: 1e-8,
        }
    }
}

/// Solves the node LP, doubling `S_max` until the bound carries no mass.
pub fn solve_node(node: &NodeConfig, eta: f64) -> Result<OccupationSolution> {
    solve_node_with(node, eta, &Truncation::default())
}

pub fn solve_node_with(node: &NodeConfig, eta: f64, trunc: &Truncation) -> Result<OccupationSolution> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(AosError::Config(format!("multiplier must be finite and >= 0, got {eta}")));
    }
    let mut s_max = trunc.initial.max(1);
    loop {
        let sol = solve_node_truncated(node, eta, s_max)?;
        let mass = sol.cap_mass();
        if mass < trunc.cap_mass_tol {
            return Ok(sol);
        }
        if s_max >= trunc.ceiling {
            return Err(AosError::Truncation { s_max, mass });
        }
        s_max = (2 * s_max).min(trunc.ceiling);
    }
}

/// `xi = nu / mu` on reachable states; unreachable states transmit.
pub fn extract_policy(sol: &OccupationSolution) -> TransmitPolicy {
    let xi = sol
        .mu
        .iter()
        .zip(&sol.nu)
        .enumerate()
        .map(|(s, (mu_row, nu_row))| {
            mu_row
                .iter()
                .zip(nu_row)
                .map(|(&m, &n)| {
                    if s == sol.s_max || m <= REACH_TOL {
                        1.0
                    } else {
                        (n / m).clamp(0.0, 1.0)
                    }
                })
                .collect()
        })
        .collect();
    TransmitPolicy { s_max: sol.s_max, xi }
}

/// `(J, D)` of a solution.
pub fn node_j_d(sol: &OccupationSolution) -> (f64, f64) {
    (sol.j, sol.d)
}

/// `J = sum w(r) s mu[s][r]` and `D = sum nu[s][r]` for arbitrary measures.
pub fn measure_j_d(node: &NodeConfig, mu: &[Vec<f64>], nu: &[Vec<f64>]) -> (f64, f64) {
    let j = mu
        .iter()
        .enumerate()
        .map(|(s, row)| {
            row.iter()
                .enumerate()
                .map(|(r, m)| node.chain.weight(r) * s as f64 * m)
                .sum::<f64>()
        })
        .sum();
    let d = nu.iter().flatten().sum();
    (j, d)
}

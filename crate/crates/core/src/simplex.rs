//! Dense two-phase tableau simplex.
//!
//! Problems here are small (a few thousand columns at most) and well scaled,
//! so a dense tableau is enough. Pricing is Dantzig's rule; after a run of
//! degenerate pivots the solver switches to Bland's rule until it makes
//! progress again, which rules out cycling. The final basis is re-solved
//! against the original data with an LU factorization to clean up
//! accumulated rounding.

use nalgebra::{DMatrix, DVector};

use crate::error::{AosError, Result};

/// Sparse row: `(column, coefficient)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

/// `min cost.x  s.t.  eq_rows x = eq_rhs,  le_rows x <= le_rhs,  0 <= x <= upper`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub eq_rows: Vec<SparseRow>,
    pub eq_rhs: Vec<f64>,
    pub le_rows: Vec<SparseRow>,
    pub le_rhs: Vec<f64>,
    /// `None` means unbounded above.
    pub upper: Vec<Option<f64>>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            cost: vec![0.0; num_vars],
            upper: vec![None; num_vars],
            ..Self::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn add_eq(&mut self, row: SparseRow, rhs: f64) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn add_le(&mut self, row: SparseRow, rhs: f64) {
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let dot = |row: &SparseRow| row.iter().map(|&(j, a)| a * x[j]).sum::<f64>();
        let eq = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|(row, b)| (dot(row) - b).abs());
        let le = self
            .le_rows
            .iter()
            .zip(&self.le_rhs)
            .map(|(row, b)| (dot(row) - b).max(0.0));
        let bounds = x.iter().zip(&self.upper).map(|(&v, ub)| {
            let above = ub.map_or(0.0, |u| (v - u).max(0.0));
            (-v).max(0.0).max(above)
        });
        eq.chain(le).chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Accepted primal residual of the returned point.
    pub feasibility_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_streak: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            feasibility_tol: 1e-9,
            degenerate_streak: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, &SimplexOptions::default())
}

const PIVOT_TOL: f64 = 1e-10;

struct Tableau {
    /// `rows x width`, the last column is the right-hand side.
    data: Vec<f64>,
    width: usize,
    rows: usize,
    /// Reduced-cost row (same width); its rhs entry is minus the objective.
    obj: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        let (before, rest) = self.data.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        for v in prow.iter_mut() {
            *v *= inv;
        }
        prow[pc] = 1.0;
        let eliminate = |row: &mut [f64]| {
            let f = row[pc];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        };
        for (i, row) in before.chunks_mut(w).enumerate() {
            if self.active[i] {
                eliminate(row);
            }
        }
        for (k, row) in after.chunks_mut(w).enumerate() {
            if self.active[pr + 1 + k] {
                eliminate(row);
            }
        }
        eliminate(&mut self.obj);
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations on the current objective row. Columns at or
    /// beyond `enter_limit` never enter.
    fn optimize(&mut self, enter_limit: usize, opts: &SimplexOptions, iterations: &mut usize) -> Result<()> {
        let scale = self.obj[..enter_limit].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let dj_tol = 1e-11 * scale;
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= opts.degenerate_streak;
            let mut enter = None;
            let mut best = -dj_tol;
            for j in 0..enter_limit {
                let d = self.obj[j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = enter else { return Ok(()) };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.rows {
                if !self.active[i] {
                    continue;
                }
                let a = self.at(i, pc);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if ratio < best_ratio - 1e-12 {
                            true
                        } else if ratio <= best_ratio + 1e-12 {
                            if bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                a > self.at(l, pc)
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some(i);
                    best_ratio = best_ratio.min(ratio);
                }
            }
            let Some(pr) = leave else { return Err(AosError::Unbounded) };

            if best_ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
            *iterations += 1;
            if *iterations >= opts.max_iterations {
                return Err(AosError::IterationLimit {
                    iterations: *iterations,
                    residual: self.infeasibility(),
                });
            }
        }
    }

    fn infeasibility(&self) -> f64 {
        (0..self.rows)
            .filter(|&i| self.active[i])
            .map(|i| (-self.rhs(i)).max(0.0))
            .fold(0.0, f64::max)
    }
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    let n = lp.num_vars();
    if lp.eq_rows.len() != lp.eq_rhs.len() || lp.le_rows.len() != lp.le_rhs.len() || lp.upper.len() != n {
        return Err(AosError::Config("inconsistent LP dimensions".into()));
    }

    // Variables pinned at zero are dropped; other finite bounds become rows.
    let mut col_of = vec![usize::MAX; n];
    let mut var_of = Vec::with_capacity(n);
    for j in 0..n {
        if lp.upper[j] != Some(0.0) {
            col_of[j] = var_of.len();
            var_of.push(j);
        }
    }
    let kept = var_of.len();

    // Rows as (coefficients over kept columns, rhs, slack sign).
    let mut rows: Vec<(SparseRow, f64, Option<f64>)> = Vec::new();
    let remap = |row: &SparseRow| -> SparseRow {
        row.iter()
            .filter(|(j, _)| col_of[*j] != usize::MAX)
            .map(|&(j, a)| (col_of[j], a))
            .collect()
    };
    for (row, &b) in lp.eq_rows.iter().zip(&lp.eq_rhs) {
        rows.push((remap(row), b, None));
    }
    for (row, &b) in lp.le_rows.iter().zip(&lp.le_rhs) {
        rows.push((remap(row), b, Some(1.0)));
    }
    for (j, ub) in lp.upper.iter().enumerate() {
        if let Some(u) = *ub {
            if u != 0.0 {
                rows.push((vec![(col_of[j], 1.0)], u, Some(1.0)));
            }
        }
    }
    let m = rows.len();
    let num_slack = rows.iter().filter(|r| r.2.is_some()).count();

    // Normalize to a non-negative rhs and decide which rows need an artificial.
    let mut needs_art = Vec::with_capacity(m);
    for row in rows.iter_mut() {
        if row.1 < 0.0 {
            for e in row.0.iter_mut() {
                e.1 = -e.1;
            }
            row.1 = -row.1;
            row.2 = row.2.map(|s| -s);
        }
        needs_art.push(row.2 != Some(1.0));
    }
    let num_art = needs_art.iter().filter(|&&a| a).count();
    let structural = kept + num_slack;
    let width = structural + num_art + 1;

    let mut tab = Tableau {
        data: vec![0.0; m * width],
        width,
        rows: m,
        obj: vec![0.0; width],
        basis: vec![0; m],
        active: vec![true; m],
    };
    let mut slack_col = kept;
    let mut art_col = structural;
    for (i, (coeffs, b, slack)) in rows.iter().enumerate() {
        let base = i * width;
        for &(j, a) in coeffs {
            tab.data[base + j] += a;
        }
        tab.data[base + width - 1] = *b;
        if let Some(sign) = slack {
            tab.data[base + slack_col] = *sign;
            if *sign > 0.0 {
                tab.basis[i] = slack_col;
            }
            slack_col += 1;
        }
        if needs_art[i] {
            tab.data[base + art_col] = 1.0;
            tab.basis[i] = art_col;
            art_col += 1;
        }
    }

    let mut iterations = 0;

    // Phase one: minimize the sum of artificials.
    if num_art > 0 {
        for i in 0..m {
            if needs_art[i] {
                for j in 0..width {
                    if j < structural || j == width - 1 {
                        tab.obj[j] -= tab.data[i * width + j];
                    }
                }
            }
        }
        tab.optimize(structural, opts, &mut iterations)?;
        let phase_one = -tab.obj[width - 1];
        let scale = rows.iter().fold(1.0f64, |s, r| s.max(r.1.abs()));
        if phase_one > opts.feasibility_tol * scale {
            return Err(AosError::Infeasible { residual: phase_one });
        }
        // Pivot remaining artificials out; rows where that is impossible are redundant.
        for i in 0..m {
            if tab.basis[i] < structural {
                continue;
            }
            let col = (0..structural)
                .filter(|&j| tab.at(i, j).abs() > 1e-9)
                .max_by(|&a, &b| tab.at(i, a).abs().total_cmp(&tab.at(i, b).abs()));
            match col {
                Some(j) => tab.pivot(i, j),
                None => tab.active[i] = false,
            }
        }
    }

    // Phase two.
    let mut cost = vec![0.0; structural];
    for (c, &j) in cost.iter_mut().zip(&var_of) {
        *c = lp.cost[j];
    }
    tab.obj.iter_mut().for_each(|v| *v = 0.0);
    tab.obj[..structural].copy_from_slice(&cost);
    for i in 0..m {
        if !tab.active[i] {
            continue;
        }
        let cb = cost.get(tab.basis[i]).copied().unwrap_or(0.0);
        if cb != 0.0 {
            for j in 0..width {
                tab.obj[j] -= cb * tab.data[i * width + j];
            }
        }
    }
    tab.optimize(structural, opts, &mut iterations)?;

    // Re-solve the final basis against the original rows.
    let active_rows: Vec<usize> = (0..m).filter(|&i| tab.active[i]).collect();
    let basis_cols: Vec<usize> = active_rows.iter().map(|&i| tab.basis[i]).collect();
    let mut column_values = vec![0.0; structural];
    for &i in &active_rows {
        column_values[tab.basis[i]] = tab.rhs(i).max(0.0);
    }
    let k = active_rows.len();
    let mut bmat = DMatrix::<f64>::zeros(k, k);
    let mut bvec = DVector::<f64>::zeros(k);
    let mut slack_index = vec![usize::MAX; m];
    let mut next = kept;
    for (i, row) in rows.iter().enumerate() {
        if row.2.is_some() {
            slack_index[i] = next;
            next += 1;
        }
    }
    let pos: std::collections::HashMap<usize, usize> =
        basis_cols.iter().enumerate().map(|(p, &c)| (c, p)).collect();
    for (r, &i) in active_rows.iter().enumerate() {
        let (coeffs, b, slack) = &rows[i];
        bvec[r] = *b;
        for &(j, a) in coeffs {
            if let Some(&p) = pos.get(&j) {
                bmat[(r, p)] += a;
            }
        }
        if let Some(sign) = slack {
            if let Some(&p) = pos.get(&slack_index[i]) {
                bmat[(r, p)] += sign;
            }
        }
    }
    if let Some(xb) = bmat.lu().solve(&bvec) {
        if xb.iter().all(|v| v.is_finite() && *v >= -1e-9) {
            for (p, &c) in basis_cols.iter().enumerate() {
                column_values[c] = xb[p].max(0.0);
            }
        }
    }

    let mut x = vec![0.0; n];
    for (c, &j) in var_of.iter().enumerate() {
        x[j] = column_values[c];
    }
    let residual = lp.residual(&x);
    if residual > opts.feasibility_tol {
        return Err(AosError::Inaccurate { residual });
    }
    Ok(LpSolution {
        objective: lp.objective(&x),
        x,
        residual,
        iterations,
    })
}

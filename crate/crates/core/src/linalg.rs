//! Small dense linear-algebra helpers shared by the model and the oracles.

use nalgebra::DMatrix;

/// Stationary distribution of a row-stochastic matrix given as row-major rows.
///
/// Solves `pi (P - I) = 0` with one balance equation replaced by the
/// normalization `sum(pi) = 1`. Returns `None` when the system is singular,
/// i.e. the chain has more than one recurrent class.
pub fn stationary_distribution(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return None;
    }
    // A[j][i] = P[i][j] - delta_ij; last equation becomes the normalization.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            a[(j, i)] += p;
        }
        a[(i, i)] -= 1.0;
    }
    for i in 0..n {
        a[(n - 1, i)] = 1.0;
    }
    let mut b = nalgebra::DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;

    let lu = a.clone().full_piv_lu();
    let u = lu.u();
    let max_pivot = (0..n).map(|k| u[(k, k)].abs()).fold(0.0, f64::max);
    let min_pivot = (0..n).map(|k| u[(k, k)].abs()).fold(f64::INFINITY, f64::min);
    if max_pivot == 0.0 || min_pivot <= 1e-11 * max_pivot {
        return None;
    }
    let x = lu.solve(&b)?;
    let mut pi: Vec<f64> = x.iter().map(|&v| if v.abs() < 1e-15 { 0.0 } else { v }).collect();
    if pi.iter().any(|&v| v < -1e-9 || !v.is_finite()) {
        return None;
    }
    for v in pi.iter_mut() {
        *v = v.max(0.0);
    }
    let total: f64 = pi.iter().sum();
    for v in pi.iter_mut() {
        *v /= total;
    }
    Some(pi)
}

/// Solves the square system `a x = b` (row-major `a`), `None` if singular.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = m.lu().solve(&rhs)?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

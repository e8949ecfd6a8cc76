//! Dense tableau simplex for small packing LPs.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Solves `max 1ᵀx  s.t.  A x ≤ 1, x ≥ 0` for a strictly positive matrix
/// `A` (rows = constraints). The origin is feasible and positivity keeps the
/// problem bounded. Bland's rule rules out cycling.
pub fn maximize_packing(a: &[Vec<f64>], max_iterations: usize) -> Result<LpSolution> {
    let m = a.len();
    let k = a.first().map_or(0, Vec::len);
    if m == 0 || k == 0 || a.iter().any(|row| row.len() != k) {
        return Err(Error::Validation("LP matrix must be non-empty and rectangular".into()));
    }
    if a.iter().flatten().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Validation("LP matrix entries must be positive".into()));
    }
    let width = k + m + 1;
    let rhs = width - 1;
    // constraint rows then the objective row (reduced costs, maximizing)
    let mut tab = vec![vec![0.0; width]; m + 1];
    for (i, row) in a.iter().enumerate() {
        tab[i][..k].copy_from_slice(row);
        tab[i][k + i] = 1.0;
        tab[i][rhs] = 1.0;
    }
    for j in 0..k {
        tab[m][j] = -1.0;
    }
    let mut basis: Vec<usize> = (k..k + m).collect();
    let mut trace: Vec<String> = Vec::new();
    for iteration in 0..max_iterations {
        let Some(enter) = (0..k + m).find(|&j| tab[m][j] < -PIVOT_EPS) else {
            let mut x = vec![0.0; k];
            for (i, &b) in basis.iter().enumerate() {
                if b < k {
                    x[b] = tab[i][rhs];
                }
            }
            return Ok(LpSolution { x, objective: tab[m][rhs], iterations: iteration });
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let coef = tab[i][enter];
            if coef > PIVOT_EPS {
                let ratio = tab[i][rhs] / coef;
                let better = ratio < best - PIVOT_EPS
                    || (ratio <= best + PIVOT_EPS && leave.is_some_and(|l| basis[i] < basis[l]));
                if leave.is_none() || better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return Err(Error::SolverNonConvergence {
                iterations: iteration,
                trace: format!("unbounded direction at column {enter}"),
            });
        };
        if trace.len() == 8 {
            trace.remove(0);
        }
        trace.push(format!("it {iteration}: in {enter} out {} obj {:.6}", basis[row], tab[m][rhs]));
        let pivot = tab[row][enter];
        for v in tab[row].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = tab[row].clone();
        for (i, r) in tab.iter_mut().enumerate() {
            if i != row {
                let f = r[enter];
                if f != 0.0 {
                    for (v, p) in r.iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
        basis[row] = enter;
    }
    Err(Error::SolverNonConvergence { iterations: max_iterations, trace: trace.join("; ") })
}

//! Stabilizer-basis eigenvalues of mixed test operators, uniform schemes and
//! the minimax LP over measurement distributions.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::group::StabilizerGroup;
use super::lp::maximize_packing;
use super::symplectic::{anticommutation_vectors, span, stabilizer_basis_diagonal, SymplecticVector};
use crate::combinatorics::{binomial, factorial};
use crate::error::{invalid, Error, Result};

const LP_MAX_ITERATIONS: usize = 100_000;

/// Uniform sampling schemes over weight-`t` measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniformScheme {
    /// Every weight-`t` measurement equally likely.
    Naive,
    /// Every GHZ equivalence class `(m_x, m_y, m_z)` equally likely, uniform
    /// within a class.
    GhzClasses,
}

impl fmt::Display for UniformScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UniformScheme::Naive => "naive",
            UniformScheme::GhzClasses => "classes",
        })
    }
}

impl FromStr for UniformScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "naive" | "uniform" => Ok(UniformScheme::Naive),
            "classes" | "ghz-classes" | "class-uniform" => Ok(UniformScheme::GhzClasses),
            other => Err(Error::Parse(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Diagonal of a mixed test operator `Σ_μ p_μ Ω_μ` in the stabilizer basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    pub n: usize,
    pub t: usize,
    /// Indexed by `w`; `values[0]` is 1.
    pub values: Vec<f64>,
}

impl GammaTable {
    /// Largest entry over `w ≠ 0` and the first `w` attaining it.
    pub fn second_largest(&self) -> (u64, f64) {
        let mut best = (1u64, f64::NEG_INFINITY);
        for (w, &g) in self.values.iter().enumerate().skip(1) {
            if g > best.1 + 1e-13 {
                best = (w as u64, g);
            }
        }
        best
    }

    /// `ν = 1 - max_{w≠0} γ_w`.
    pub fn gap(&self) -> f64 {
        if self.values.len() <= 1 {
            return 1.0;
        }
        1.0 - self.second_largest().1
    }

    /// All `w ≠ 0` whose entry is within `tol` of the maximum.
    pub fn maximizers(&self, tol: f64) -> Vec<u64> {
        let (_, max) = self.second_largest();
        (1..self.values.len())
            .filter(|&w| self.values[w] >= max - tol)
            .map(|w| w as u64)
            .collect()
    }

    /// Rows `(w, gamma)` as CSV body lines, `w` written as a bit string with
    /// generator 0 first.
    pub fn csv_rows(&self) -> Vec<String> {
        self.values
            .iter()
            .enumerate()
            .map(|(w, g)| {
                let bits: String = (0..self.n).map(|i| if w >> i & 1 == 1 { '1' } else { '0' }).collect();
                format!("{bits},{g}")
            })
            .collect()
    }
}

/// `Σ_μ p_μ γ_{μ,w}` for every `w`. Chunks are reduced in a fixed order so
/// the floating-point result does not depend on thread scheduling.
pub fn weighted_gamma(s: &StabilizerGroup, weights: &[(SymplecticVector, f64)]) -> Result<GammaTable> {
    let n = s.num_qubits();
    if !s.is_full() {
        return invalid("a full stabilizer group is required");
    }
    if n > 24 {
        return Err(Error::Capacity { requested: 1 << n.min(63), max: 1 << 24 });
    }
    let t = weights.first().map_or(0, |(m, _)| m.weight());
    for (mu, _) in weights {
        if mu.num_qubits() != n || mu.weight() == 0 || mu.weight() >= n {
            return invalid(format!("measurement {mu} is not a valid weight-t measurement"));
        }
    }
    let partials: Vec<Vec<f64>> = weights
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = vec![0.0; 1 << n];
            for (mu, p) in chunk {
                if *p == 0.0 {
                    continue;
                }
                for w in span(&anticommutation_vectors(s, mu)) {
                    acc[w as usize] += p;
                }
            }
            acc
        })
        .collect();
    let mut values = vec![0.0; 1 << n];
    for part in partials {
        for (v, p) in values.iter_mut().zip(part) {
            *v += p;
        }
    }
    Ok(GammaTable { n, t, values })
}

/// Probability `2 / ((t+1)(t+2))` of each GHZ class.
pub fn ghz_class_probability(t: usize) -> f64 {
    2.0 / ((t + 1) as f64 * (t + 2) as f64)
}

/// Number of weight-`t` measurements with letter counts `(m_x, m_y, m_z)`.
pub fn ghz_class_size(n: usize, counts: (usize, usize, usize)) -> u128 {
    let (mx, my, mz) = counts;
    let t = (mx + my + mz) as u64;
    binomial(n as u64, t) * factorial(t) / (factorial(mx as u64) * factorial(my as u64) * factorial(mz as u64))
}

/// Measurement weights of a uniform scheme over weight-`t` measurements.
pub fn uniform_weights(n: usize, t: usize, scheme: UniformScheme) -> Result<Vec<(SymplecticVector, f64)>> {
    let all = SymplecticVector::all_of_weight(n, t)?;
    Ok(match scheme {
        UniformScheme::Naive => {
            let p = 1.0 / all.len() as f64;
            all.into_iter().map(|m| (m, p)).collect()
        }
        UniformScheme::GhzClasses => {
            let pc = ghz_class_probability(t);
            all.into_iter()
                .map(|m| {
                    let size = ghz_class_size(n, m.counts());
                    (m, pc / size as f64)
                })
                .collect()
        }
    })
}

pub fn uniform_gamma_table(s: &StabilizerGroup, t: usize, scheme: UniformScheme) -> Result<GammaTable> {
    let n = s.num_qubits();
    if scheme == UniformScheme::GhzClasses && !s.same_group(&StabilizerGroup::ghz(n)?) {
        return invalid("the class-uniform scheme is defined for GHZ targets only");
    }
    weighted_gamma(s, &uniform_weights(n, t, scheme)?)
}

/// Spectral gap of a uniform scheme, read off the γ table.
pub fn uniform_gap(s: &StabilizerGroup, t: usize, scheme: UniformScheme) -> Result<f64> {
    Ok(uniform_gamma_table(s, t, scheme)?.gap())
}

/// Optimal measurement distribution from the minimax LP.
#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub distribution: Vec<(SymplecticVector, f64)>,
    pub nu: f64,
    pub iterations: usize,
}

/// `min_p max_{w≠0} Σ_μ p_μ γ_{μ,w}` over weight-`t` measurements, solved as
/// the packing LP of the shifted game `γ + 1`.
pub fn lp_optimize(s: &StabilizerGroup, t: usize) -> Result<LpOutcome> {
    let n = s.num_qubits();
    let mus = SymplecticVector::all_of_weight(n, t)?;
    let tables: Vec<Vec<bool>> = mus
        .par_iter()
        .map(|m| stabilizer_basis_diagonal(s, m))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = (1..1usize << n)
        .map(|w| tables.iter().map(|col| if col[w] { 2.0 } else { 1.0 }).collect())
        .collect();
    let sol = maximize_packing(&rows, LP_MAX_ITERATIONS)?;
    let value = 1.0 / sol.objective;
    let mut p: Vec<f64> = sol.x.iter().map(|x| (x * value).max(0.0)).collect();
    let total: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= total;
        if *v < 1e-15 {
            *v = 0.0;
        }
    }
    let distribution: Vec<(SymplecticVector, f64)> = mus.into_iter().zip(p).collect();
    let nu = weighted_gamma(s, &distribution)?.gap();
    Ok(LpOutcome { distribution, nu, iterations: sol.iterations })
}

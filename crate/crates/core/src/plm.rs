//! Pass/fail test strategies: strategy operators, sequential verification
//! runs and their sample complexity.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    gap_from_eigenvalues, hermitian_eig, hermiticity_error, max_abs_diff, DensityOperator, HermitianSpectrum,
    Operator, PureState,
};

const PROJECTOR_TOL: f64 = 1e-9;
const FIXATION_TOL: f64 = 1e-8;
const WEIGHT_TOL: f64 = 1e-10;
/// Gaps below this are treated as zero.
pub const GAP_EPS: f64 = 1e-12;

/// A two-outcome test `{E, I - E}` chosen with probability `weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTest {
    pass: Operator,
    weight: f64,
}

impl BinaryTest {
    pub fn new(pass: Operator, weight: f64) -> Result<Self> {
        if !pass.is_square() {
            return invalid("test operator must be square");
        }
        if !(0.0..=1.0).contains(&weight) {
            return invalid(format!("test weight {weight} outside [0, 1]"));
        }
        let herm = hermiticity_error(&pass);
        if herm > PROJECTOR_TOL {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let idem = max_abs_diff(&(&pass * &pass), &pass);
        if idem > PROJECTOR_TOL {
            return invalid(format!("test operator is not a projector (‖E²-E‖ = {idem:e})"));
        }
        Ok(Self { pass, weight })
    }

    pub fn pass_operator(&self) -> &Operator {
        &self.pass
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn pass_probability(&self, rho: &DensityOperator) -> f64 {
        rho.expectation(&self.pass).clamp(0.0, 1.0)
    }
}

/// Which construction produced a strategy operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Plm,
    SopL,
    Dpso,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Plm => "plm",
            Provenance::SopL => "sop",
            Provenance::Dpso => "dpso",
        })
    }
}

/// Hermitian `0 ≤ Ω ≤ I` fixing the target, with its cached spectrum.
#[derive(Debug, Clone)]
pub struct StrategyOperator {
    matrix: Operator,
    spectrum: HermitianSpectrum,
    provenance: Provenance,
}

impl StrategyOperator {
    /// Validates `0 ≤ Ω ≤ I` and `Ω|ψ⟩ = |ψ⟩`, then caches the spectrum.
    pub fn new(matrix: Operator, provenance: Provenance, target: &PureState) -> Result<Self> {
        if matrix.nrows() != target.dim() || !matrix.is_square() {
            return invalid("strategy operator and target dimensions differ");
        }
        let fixed = &matrix * target.amplitudes() - target.amplitudes();
        let err = fixed.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if err > FIXATION_TOL {
            return Err(Error::Construction(format!(
                "{provenance} operator does not fix the target (deviation {err:e})"
            )));
        }
        Self::without_target(matrix, provenance)
    }

    /// Validates `0 ≤ Ω ≤ I` only.
    pub fn without_target(matrix: Operator, provenance: Provenance) -> Result<Self> {
        let spectrum = hermitian_eig(&matrix)?;
        let (lo, hi) = (
            spectrum.eigenvalues.last().copied().unwrap_or(0.0),
            spectrum.eigenvalues.first().copied().unwrap_or(0.0),
        );
        if lo < -PROJECTOR_TOL || hi > 1.0 + PROJECTOR_TOL {
            return Err(Error::Construction(format!(
                "{provenance} operator eigenvalues [{lo}, {hi}] leave [0, 1]"
            )));
        }
        Ok(Self { matrix, spectrum, provenance })
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn spectrum(&self) -> &HermitianSpectrum {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn num_qubits(&self) -> usize {
        self.matrix.nrows().trailing_zeros() as usize
    }

    /// `ν = 1 - λ₂`.
    pub fn gap(&self) -> Result<f64> {
        gap_from_eigenvalues(&self.spectrum.eigenvalues)
    }

    /// Pass probability `Tr(Ωρ)`.
    pub fn pass_probability(&self, rho: &DensityOperator) -> f64 {
        rho.expectation(&self.matrix)
    }
}

/// `Ω = Σ_j p_j E_j`.
pub fn build_strategy(tests: &[BinaryTest], target: &PureState) -> Result<StrategyOperator> {
    if tests.is_empty() {
        return invalid("at least one test is required");
    }
    let total: f64 = tests.iter().map(|t| t.weight).sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return invalid(format!("test weights sum to {total}, expected 1"));
    }
    let dim = target.dim();
    for (j, t) in tests.iter().enumerate() {
        if t.pass.nrows() != dim {
            return invalid(format!("test {j} has the wrong dimension"));
        }
        let fixed = &t.pass * target.amplitudes() - target.amplitudes();
        let err = fixed.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if err > PROJECTOR_TOL {
            return Err(Error::Construction(format!("test {j} does not fix the target (deviation {err:e})")));
        }
    }
    let mut omega = Operator::zeros(dim, dim);
    for t in tests {
        omega += &t.pass * Complex64::new(t.weight, 0.0);
    }
    StrategyOperator::new(omega, Provenance::Plm, target)
}

/// Outcome of a sequential pass/fail run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PlmVerdict {
    pub accepted: bool,
    /// Copies consumed before the verdict (the first failure stops the run).
    pub copies_used: usize,
}

/// Draws a test for every copy and rejects on the first failure.
pub fn plm_run<R: Rng + ?Sized>(device: &[DensityOperator], tests: &[BinaryTest], rng: &mut R) -> Result<PlmVerdict> {
    if device.is_empty() {
        return invalid("at least one copy is required");
    }
    if tests.is_empty() {
        return invalid("at least one test is required");
    }
    let dim = tests[0].pass.nrows();
    let mut omega = Operator::zeros(dim, dim);
    for t in tests {
        omega += &t.pass * Complex64::new(t.weight, 0.0);
    }
    let strategy = StrategyOperator::without_target(omega, Provenance::Plm)?;
    if strategy.gap()? <= GAP_EPS {
        return Err(Error::ZeroGap);
    }
    let cumulative: Vec<f64> = tests
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t.weight;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().expect("non-empty");
    for (i, rho) in device.iter().enumerate() {
        let u = rng.random::<f64>() * total;
        let j = cumulative.iter().position(|c| u < *c).unwrap_or(tests.len() - 1);
        if rng.random::<f64>() >= tests[j].pass_probability(rho) {
            return Ok(PlmVerdict { accepted: false, copies_used: i + 1 });
        }
    }
    Ok(PlmVerdict { accepted: true, copies_used: device.len() })
}

/// Rounds up, snapping values within `1e-12` (relative) of an integer to it.
pub(crate) fn snap_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// `N = ⌈ln δ / ln(1 - νε)⌉`.
pub fn plm_sample_complexity(epsilon: f64, delta: f64, nu: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon {epsilon} outside (0, 1)"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta {delta} outside (0, 1)"));
    }
    if nu <= GAP_EPS {
        return Err(Error::ZeroGap);
    }
    if nu > 1.0 + 1e-12 {
        return invalid(format!("gap {nu} exceeds 1"));
    }
    let n = snap_ceil(delta.ln() / (1.0 - nu * epsilon).ln());
    Ok(n.max(1.0) as u64)
}

//! Hypothesis-testing layer: decision rule, Hoeffding bounds and sample
//! complexities for averaged single-trial estimators.

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::plm::{snap_ceil, GAP_EPS};

/// Parameters of a verification test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestConfig {
    /// Infidelity `ε` separating the hypotheses.
    pub epsilon: f64,
    /// Target Type I error `δ`.
    pub delta: f64,
    /// Optional Type II cap `χ`; `δ` is used when absent.
    pub chi: Option<f64>,
    /// Range `[a, b]` of one trial's estimate.
    pub a: f64,
    pub b: f64,
    /// Spectral gap `ν` of the averaged operator.
    pub nu: f64,
}

impl TestConfig {
    pub fn new(epsilon: f64, delta: f64, a: f64, b: f64, nu: f64) -> Result<Self> {
        let cfg = Self { epsilon, delta, chi: None, a, b, nu };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_chi(mut self, chi: f64) -> Result<Self> {
        self.chi = Some(chi);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return invalid(format!("epsilon {} outside (0, 1]", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid(format!("delta {} outside (0, 1)", self.delta));
        }
        if let Some(chi) = self.chi {
            if !(chi > 0.0 && chi < 1.0) {
                return invalid(format!("chi {chi} outside (0, 1)"));
            }
        }
        if !(self.a < self.b) || !self.a.is_finite() || !self.b.is_finite() {
            return invalid(format!("estimator range [{}, {}] is empty", self.a, self.b));
        }
        if !(self.nu >= 0.0 && self.nu <= 1.0 + 1e-12) {
            return invalid(format!("gap {} outside [0, 1]", self.nu));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    fn require_gap(&self) -> Result<()> {
        if self.nu <= GAP_EPS {
            Err(Error::ZeroGap)
        } else {
            Ok(())
        }
    }
}

/// `t₀ = 1 - νε/2`.
pub fn default_threshold(cfg: &TestConfig) -> f64 {
    1.0 - cfg.nu * cfg.epsilon / 2.0
}

/// `exp(-2 N t² / (b - a)²)`.
pub fn hoeffding_tail(n: u64, t: f64, a: f64, b: f64) -> f64 {
    (-2.0 * n as f64 * t * t / ((b - a) * (b - a))).exp()
}

/// Hoeffding bounds on (Type I, Type II) errors at threshold `t0`.
pub fn error_bounds(cfg: &TestConfig, t0: f64, n: u64) -> Result<(f64, f64)> {
    cfg.validate()?;
    let lo = 1.0 - cfg.nu * cfg.epsilon;
    if !(t0 > lo && t0 < 1.0) {
        return invalid(format!("threshold {t0} outside ({lo}, 1)"));
    }
    if n == 0 {
        return invalid("at least one trial is required");
    }
    Ok((
        hoeffding_tail(n, t0 - lo, cfg.a, cfg.b),
        hoeffding_tail(n, 1.0 - t0, cfg.a, cfg.b),
    ))
}

/// Threshold and trial count achieving Type I `≤ δ` and Type II `≤ χ`:
/// `N = ⌈(b-a)²/(2ν²ε²)·(√ln χ⁻¹ + √ln δ⁻¹)²⌉`, `t₀ = 1 - (b-a)√(ln χ⁻¹ / 2N)`.
pub fn theorem1_plan(cfg: &TestConfig) -> Result<(f64, u64)> {
    cfg.validate()?;
    cfg.require_gap()?;
    let chi = cfg.chi.unwrap_or(cfg.delta);
    let (lc, ld) = ((1.0 / chi).ln(), (1.0 / cfg.delta).ln());
    let w = cfg.width();
    let bound = w * w / (2.0 * cfg.nu * cfg.nu * cfg.epsilon * cfg.epsilon) * (lc.sqrt() + ld.sqrt()).powi(2);
    let n = snap_ceil(bound).max(1.0) as u64;
    let t0 = 1.0 - w * (lc / (2.0 * n as f64)).sqrt();
    Ok((t0, n))
}

/// `N = ⌈2(b-a)² ln δ⁻¹ / (ν²ε²)⌉`.
pub fn simple_sample_complexity(cfg: &TestConfig) -> Result<u64> {
    cfg.validate()?;
    cfg.require_gap()?;
    let w = cfg.width();
    let bound = 2.0 * w * w * (1.0 / cfg.delta).ln() / (cfg.nu * cfg.nu * cfg.epsilon * cfg.epsilon);
    Ok(snap_ceil(bound).max(1.0) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        })
    }
}

/// Accept only when the mean strictly exceeds the threshold.
pub fn decide(mean: f64, threshold: f64) -> Decision {
    if mean > threshold {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

/// Aggregated outcome of `N` trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport {
    pub trials: u64,
    pub mean: f64,
    pub threshold: f64,
    pub decision: Decision,
    pub type_i_bound: f64,
    pub type_ii_bound: f64,
    /// Smallest and largest single-trial estimates.
    pub min_estimate: f64,
    pub max_estimate: f64,
    pub negative_estimates: u64,
}

impl VerdictReport {
    /// Folds estimates in index order at threshold `1 - νε/2`.
    pub fn from_estimates(cfg: &TestConfig, estimates: &[f64]) -> Result<Self> {
        Self::with_threshold(cfg, estimates, default_threshold(cfg))
    }

    pub fn with_threshold(cfg: &TestConfig, estimates: &[f64], threshold: f64) -> Result<Self> {
        if estimates.is_empty() {
            return invalid("no trials to aggregate");
        }
        cfg.require_gap()?;
        let n = estimates.len() as u64;
        let mean = estimates.iter().sum::<f64>() / n as f64;
        let (type_i_bound, type_ii_bound) = error_bounds(cfg, threshold, n)?;
        Ok(Self {
            trials: n,
            mean,
            threshold,
            decision: decide(mean, threshold),
            type_i_bound,
            type_ii_bound,
            min_estimate: estimates.iter().copied().fold(f64::INFINITY, f64::min),
            max_estimate: estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            negative_estimates: estimates.iter().filter(|e| **e < 0.0).count() as u64,
        })
    }
}

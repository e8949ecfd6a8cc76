//! Partial shadow overlap verification: random Pauli measurements on `n - r`
//! qubits, a classical shadow of the remaining `r`, and its overlap with the
//! exactly computed post-measurement target state.

mod optimize;
mod plan;

pub use optimize::{optimize_plan, optimize_plan_in, OptimizeMethod, OptimizedPlan, PlanSpace};
pub use plan::{parse_layout, SamplingPlan};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::axes_to_string;
use crate::error::{invalid, Error, Result};
use crate::hypotest::{simple_sample_complexity, TestConfig, VerdictReport};
use crate::linalg::{extract_bits, DensityOperator, Operator, PureState, C0};
use crate::measurement::{born_sample, shadow_overlap, shadow_snapshot, ClassicalShadow, PauliLayout};
use crate::plm::{Provenance, StrategyOperator};
use crate::rng::stream_rng;
use crate::target::TargetModel;

/// `Ω_{K,l} = Σ_z |z⟩⟨z| ⊗ |φ_{K,z}⟩⟨φ_{K,z}|` over nonzero branches.
#[derive(Debug, Clone)]
pub struct DpsoTestOperator {
    pub layout: PauliLayout,
    pub matrix: Operator,
    /// `(z, |φ_{K,z}⟩)` for every branch with nonzero probability.
    pub branches: Vec<(Vec<u8>, PureState)>,
}

fn bits_of(z: usize, t: usize) -> Vec<u8> {
    (0..t).map(|i| ((z >> (t - 1 - i)) & 1) as u8).collect()
}

/// Full-register vector `|z⟩_J ⊗ |φ⟩_K` with `|z⟩` in the layout's axes.
fn branch_vector(layout: &PauliLayout, z: &[u8], phi: &PureState) -> Vec<Complex64> {
    let n = layout.num_qubits();
    let j = layout.measured();
    let k = layout.unmeasured();
    let eig: Vec<[Complex64; 2]> = j.iter().zip(z).map(|((_, a), b)| a.eigenvector(*b)).collect();
    (0..1usize << n)
        .map(|i| {
            let mut amp = phi.amplitude(extract_bits(i, n, k));
            if amp == C0 {
                return C0;
            }
            for ((q, _), e) in j.iter().zip(&eig) {
                amp *= e[(i >> (n - 1 - q)) & 1];
            }
            amp
        })
        .collect()
}

pub fn build_test_operator(target: &dyn TargetModel, layout: &PauliLayout) -> Result<DpsoTestOperator> {
    let n = target.num_qubits();
    if layout.num_qubits() != n {
        return invalid("layout and target sizes differ");
    }
    crate::linalg::check_dim(1 << n, crate::linalg::DEFAULT_MAX_DIM)?;
    let t = layout.t();
    let mut branches = Vec::new();
    for z in 0..1usize << t {
        let bits = bits_of(z, t);
        match target.post_measurement(layout, &bits) {
            Ok(phi) => branches.push((bits, phi)),
            Err(Error::ZeroBranch) => {}
            Err(e) => return Err(e),
        }
    }
    let dim = 1usize << n;
    let mut b = Operator::zeros(dim, branches.len());
    for (c, (z, phi)) in branches.iter().enumerate() {
        for (i, v) in branch_vector(layout, z, phi).into_iter().enumerate() {
            b[(i, c)] = v;
        }
    }
    let matrix = &b * b.adjoint();
    Ok(DpsoTestOperator { layout: layout.clone(), matrix, branches })
}

/// Test operators of every layout in the plan's support, in plan order.
pub fn build_test_operators(target: &dyn TargetModel, layouts: &[PauliLayout]) -> Result<Vec<Operator>> {
    layouts
        .par_iter()
        .map(|l| build_test_operator(target, l).map(|op| op.matrix))
        .collect()
}

/// `Σ_i w_i M_i`, reduced chunk-by-chunk in index order.
pub(crate) fn weighted_sum(ops: &[Operator], weights: &[f64]) -> Operator {
    let dim = ops[0].nrows();
    let partials: Vec<Operator> = ops
        .par_chunks(32)
        .zip(weights.par_chunks(32))
        .map(|(os, ws)| {
            let mut acc = Operator::zeros(dim, dim);
            for (o, w) in os.iter().zip(ws) {
                if *w != 0.0 {
                    acc += o * Complex64::new(*w, 0.0);
                }
            }
            acc
        })
        .collect();
    partials.into_iter().fold(Operator::zeros(dim, dim), |acc, p| acc + p)
}

/// `Ω = Σ_{K,l} p_{K,l} Ω_{K,l}`.
pub fn build_strategy_operator(target: &dyn TargetModel, plan: &SamplingPlan) -> Result<StrategyOperator> {
    if plan.num_qubits() != target.num_qubits() {
        return invalid("plan and target sizes differ");
    }
    let layouts: Vec<PauliLayout> = plan.entries().iter().map(|(l, _)| l.clone()).collect();
    let weights: Vec<f64> = plan.entries().iter().map(|(_, p)| *p).collect();
    let ops = build_test_operators(target, &layouts)?;
    let omega = weighted_sum(&ops, &weights);
    StrategyOperator::new(omega, Provenance::Dpso, &target.to_dense()?)
}

/// One run of the measure-shadow-overlap procedure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: u64,
    pub layout: PauliLayout,
    pub outcomes: Vec<u8>,
    pub shadow: ClassicalShadow,
    pub omega_hat: f64,
}

impl TrialRecord {
    pub const CSV_HEADER: &'static str = "trial_index,K,axes,z,shadow_axes,shadow_outcomes,omega_hat";

    pub fn csv_row(&self) -> String {
        let k: Vec<String> = self.layout.unmeasured().iter().map(|q| q.to_string()).collect();
        let z: String = self.outcomes.iter().map(|b| char::from(b'0' + b)).collect();
        format!(
            "{},{},{},{},{},{},{}",
            self.index,
            k.join(";"),
            axes_to_string(&self.layout.axes()),
            z,
            self.shadow.axes_string(),
            self.shadow.bits_string(),
            self.omega_hat
        )
    }
}

/// Samples `(K, l)` from the plan, measures, shadows the unmeasured register
/// and returns `ω̂ = ⟨φ_{K,z}|ζ̂|φ_{K,z}⟩`. A branch the target assigns zero
/// amplitude contributes `ω̂ = 0`, matching its absence from `Ω`.
pub fn dpso_trial<R: Rng + ?Sized>(
    rho: &DensityOperator,
    target: &dyn TargetModel,
    plan: &SamplingPlan,
    index: u64,
    rng: &mut R,
) -> Result<TrialRecord> {
    if rho.num_qubits() != target.num_qubits() || plan.num_qubits() != target.num_qubits() {
        return invalid("device, target and plan sizes differ");
    }
    let layout = plan.sample(rng).clone();
    let born = born_sample(rho, &layout, rng)?;
    let shadow = shadow_snapshot(&born.reduced, rng);
    let omega_hat = match target.post_measurement(&layout, &born.outcomes) {
        Ok(phi) => shadow_overlap(&shadow, &phi)?,
        Err(Error::ZeroBranch) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(TrialRecord { index, layout, outcomes: born.outcomes, shadow, omega_hat })
}

/// Runs trials `0..count` on independent streams `(seed, index)`; the
/// result is ordered by index regardless of scheduling.
pub fn dpso_trials(
    rho: &DensityOperator,
    target: &dyn TargetModel,
    plan: &SamplingPlan,
    count: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    (0..count)
        .into_par_iter()
        .map(|i| dpso_trial(rho, target, plan, i, &mut stream_rng(seed, i)))
        .collect()
}

/// Like [`dpso_trials`] but keeps only the estimates.
pub fn dpso_estimates(
    rho: &DensityOperator,
    target: &dyn TargetModel,
    plan: &SamplingPlan,
    count: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..count)
        .into_par_iter()
        .map(|i| dpso_trial(rho, target, plan, i, &mut stream_rng(seed, i)).map(|r| r.omega_hat))
        .collect()
}

/// Estimator range used in Hoeffding bounds: `[0, 2^r]` by default, or the
/// symmetric `[-2^r, 2^r]` when `conservative`.
pub fn dpso_estimator_range(r: usize, conservative: bool) -> (f64, f64) {
    let b = (1u64 << r) as f64;
    (if conservative { -b } else { 0.0 }, b)
}

/// `N = ⌈2^{2r+1} ln δ⁻¹ / (ν²ε²)⌉`.
pub fn dpso_sample_complexity(r: usize, epsilon: f64, delta: f64, nu: f64) -> Result<u64> {
    let (a, b) = dpso_estimator_range(r, false);
    simple_sample_complexity(&TestConfig::new(epsilon, delta, a, b, nu)?)
}

/// Runs `trials` trials against `rho` and applies the threshold
/// `1 - νε/2` to their mean.
pub fn dpso_verify(
    rho: &DensityOperator,
    target: &dyn TargetModel,
    plan: &SamplingPlan,
    cfg: &TestConfig,
    trials: u64,
    seed: u64,
) -> Result<VerdictReport> {
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    let estimates = dpso_estimates(rho, target, plan, trials, seed)?;
    VerdictReport::from_estimates(cfg, &estimates)
}

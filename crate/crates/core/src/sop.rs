//! Level-ℓ shadow overlap verification: computational-basis measurements on
//! most qubits, a classical shadow on a small random subset, and overlaps
//! with two-term states built from amplitude queries.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::basis::Axis;
use crate::combinatorics::{binomial, combinations};
use crate::dpso::TrialRecord;
use crate::error::{invalid, Result};
use crate::hypotest::{simple_sample_complexity, TestConfig, VerdictReport};
use crate::linalg::{check_dim, complement, deposit_bits, DensityOperator, Operator, C0, DEFAULT_MAX_DIM};
use crate::measurement::{born_sample, shadow_snapshot, ClassicalShadow, PauliLayout};
use crate::plm::{Provenance, StrategyOperator};
use crate::rng::stream_rng;
use crate::target::{TargetModel, ZERO_BRANCH_NORM_SQR};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SopParams {
    pub level: usize,
    pub trials: u64,
    pub config: TestConfig,
}

fn check_level(n: usize, level: usize) -> Result<()> {
    if level == 0 || level >= n {
        return invalid(format!("level {level} must satisfy 1 <= level < n={n}"));
    }
    Ok(())
}

/// Uniform subset of size `1..=level`: size `r` with weight `C(n, r)`,
/// then a uniform subset of that size, sorted.
pub fn sample_subset<R: Rng + ?Sized>(n: usize, level: usize, rng: &mut R) -> Result<Vec<usize>> {
    check_level(n, level)?;
    let total: u128 = (1..=level).map(|i| binomial(n as u64, i as u64)).sum();
    let mut pick = rng.random_range(0..total);
    let mut size = 1;
    for i in 1..=level {
        let c = binomial(n as u64, i as u64);
        if pick < c {
            size = i;
            break;
        }
        pick -= c;
    }
    let mut k = sample(rng, n, size).into_vec();
    k.sort_unstable();
    Ok(k)
}

/// The two-term states `(ψ(z,b)|b⟩ + ψ(z,b̄)|b̄⟩)/norm` for the complementary
/// pairs `b < b̄`; pairs with both amplitudes zero are skipped.
fn pair_states(amps: &[Complex64]) -> Vec<(usize, usize, Complex64, Complex64)> {
    let dk = amps.len();
    let mask = dk - 1;
    (0..dk / 2)
        .filter_map(|b1| {
            let b2 = b1 ^ mask;
            let (a1, a2) = (amps[b1], amps[b2]);
            let norm_sqr = a1.norm_sqr() + a2.norm_sqr();
            if norm_sqr <= ZERO_BRANCH_NORM_SQR {
                return None;
            }
            let s = norm_sqr.sqrt();
            Some((b1, b2, a1 / s, a2 / s))
        })
        .collect()
}

/// Computational-basis amplitudes `ψ(z, b)` over the `K` register.
fn subset_amplitudes(target: &dyn TargetModel, k: &[usize], z: usize) -> Result<Vec<Complex64>> {
    let n = target.num_qubits();
    let kbar = complement(n, k);
    let base = deposit_bits(0, n, &kbar, z);
    (0..1usize << k.len())
        .map(|b| {
            let idx = deposit_bits(base, n, k, b);
            let basis: Vec<(Axis, u8)> = (0..n).map(|q| (Axis::Z, ((idx >> (n - 1 - q)) & 1) as u8)).collect();
            target.amplitude(&basis)
        })
        .collect()
}

/// `L_{z_K̄}` on the `K` register (qubits in ascending order). Zero when no
/// pair has a nonzero amplitude.
pub fn build_l_z(target: &dyn TargetModel, k: &[usize], z: usize) -> Result<Operator> {
    let n = target.num_qubits();
    if k.is_empty() || k.len() >= n || k.windows(2).any(|w| w[0] >= w[1]) || k[k.len() - 1] >= n {
        return invalid("subset must be sorted, nonempty, proper and in range");
    }
    if z >= 1 << (n - k.len()) {
        return invalid("outcome string out of range");
    }
    let amps = subset_amplitudes(target, k, z)?;
    let dk = amps.len();
    let mut l = Operator::zeros(dk, dk);
    for (b1, b2, a1, a2) in pair_states(&amps) {
        l[(b1, b1)] += a1 * a1.conj();
        l[(b1, b2)] += a1 * a2.conj();
        l[(b2, b1)] += a2 * a1.conj();
        l[(b2, b2)] += a2 * a2.conj();
    }
    Ok(l)
}

/// `L = E_{K,z}[|z⟩⟨z| ⊗ L_{z_K̄}]`, averaging uniformly over the
/// `Σ_{i≤ℓ} C(n,i)` subsets.
pub fn build_l(target: &dyn TargetModel, level: usize) -> Result<StrategyOperator> {
    let n = target.num_qubits();
    check_level(n, level)?;
    check_dim(1 << n, DEFAULT_MAX_DIM)?;
    let subsets: Vec<Vec<usize>> = (1..=level).flat_map(|r| combinations(n, r)).collect();
    let dim = 1usize << n;
    let parts: Vec<Operator> = subsets
        .par_iter()
        .map(|k| -> Result<Operator> {
            let kbar = complement(n, k);
            let mut acc = Operator::zeros(dim, dim);
            for z in 0..1usize << kbar.len() {
                let lz = build_l_z(target, k, z)?;
                let base = deposit_bits(0, n, &kbar, z);
                let idx: Vec<usize> = (0..lz.nrows()).map(|b| deposit_bits(base, n, k, b)).collect();
                for (a, &ia) in idx.iter().enumerate() {
                    for (b, &ib) in idx.iter().enumerate() {
                        acc[(ia, ib)] += lz[(a, b)];
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let scale = Complex64::new(1.0 / subsets.len() as f64, 0.0);
    let l = parts.into_iter().fold(Operator::zeros(dim, dim), |acc, p| acc + p) * scale;
    StrategyOperator::new(l, Provenance::SopL, &target.to_dense()?)
}

/// `ω̂ = Tr(ζ̂ L_{z_K̄}) = Σ_pairs ⟨φ|ζ̂|φ⟩`.
fn shadow_pair_overlap(shadow: &ClassicalShadow, amps: &[Complex64]) -> f64 {
    let r = shadow.num_qubits();
    let factors: Vec<_> = shadow.axes.iter().zip(&shadow.bits).map(|(a, b)| a.shadow_factor(*b)).collect();
    // ⟨b|ζ̂|b'⟩ factorizes over qubits
    let elem = |b: usize, bp: usize| -> Complex64 {
        factors.iter().enumerate().fold(Complex64::new(1.0, 0.0), |acc, (q, f)| {
            let s = r - 1 - q;
            acc * f[(b >> s) & 1][(bp >> s) & 1]
        })
    };
    let mut total = C0;
    for (b1, b2, a1, a2) in pair_states(amps) {
        total += a1.conj() * a1 * elem(b1, b1)
            + a1.conj() * a2 * elem(b1, b2)
            + a2.conj() * a1 * elem(b2, b1)
            + a2.conj() * a2 * elem(b2, b2);
    }
    total.re
}

/// Samples `K`, measures `K̄` in the computational basis, shadows `K` and
/// returns `ω̂ = Tr(ζ̂ L_{z_K̄})`.
pub fn sop_trial<R: Rng + ?Sized>(
    rho: &DensityOperator,
    target: &dyn TargetModel,
    level: usize,
    index: u64,
    rng: &mut R,
) -> Result<TrialRecord> {
    let n = target.num_qubits();
    if rho.num_qubits() != n {
        return invalid("device and target sizes differ");
    }
    let k = sample_subset(n, level, rng)?;
    let layout = PauliLayout::from_unmeasured(n, &k, &vec![Axis::Z; n - k.len()])?;
    let born = born_sample(rho, &layout, rng)?;
    let shadow = shadow_snapshot(&born.reduced, rng);
    let z = born.outcomes.iter().fold(0usize, |acc, b| (acc << 1) | *b as usize);
    let amps = subset_amplitudes(target, &k, z)?;
    let omega_hat = shadow_pair_overlap(&shadow, &amps);
    Ok(TrialRecord { index, layout, outcomes: born.outcomes, shadow, omega_hat })
}

/// Trials `0..count` on streams `(seed, index)`, ordered by index.
pub fn sop_trials(
    rho: &DensityOperator,
    target: &dyn TargetModel,
    level: usize,
    count: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    (0..count)
        .into_par_iter()
        .map(|i| sop_trial(rho, target, level, i, &mut stream_rng(seed, i)))
        .collect()
}

pub fn sop_estimates(
    rho: &DensityOperator,
    target: &dyn TargetModel,
    level: usize,
    count: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..count)
        .into_par_iter()
        .map(|i| sop_trial(rho, target, level, i, &mut stream_rng(seed, i)).map(|r| r.omega_hat))
        .collect()
}

/// Estimator range `[0, 2^{2ℓ-1}]`, or `[-2^{2ℓ-1}, 2^{2ℓ-1}]` when
/// `conservative`.
pub fn sop_estimator_range(level: usize, conservative: bool) -> (f64, f64) {
    let b = (1u64 << (2 * level - 1)) as f64;
    (if conservative { -b } else { 0.0 }, b)
}

/// `N = ⌈2^{4ℓ-1} ln δ⁻¹ / (ν²ε²)⌉`.
pub fn sop_sample_complexity(level: usize, epsilon: f64, delta: f64, nu: f64) -> Result<u64> {
    if level == 0 {
        return invalid("level must be at least 1");
    }
    let (a, b) = sop_estimator_range(level, false);
    simple_sample_complexity(&TestConfig::new(epsilon, delta, a, b, nu)?)
}

pub fn sop_verify(
    rho: &DensityOperator,
    target: &dyn TargetModel,
    params: &SopParams,
    seed: u64,
) -> Result<VerdictReport> {
    if params.trials == 0 {
        return invalid("at least one trial is required");
    }
    check_level(target.num_qubits(), params.level)?;
    let estimates = sop_estimates(rho, target, params.level, params.trials, seed)?;
    VerdictReport::from_estimates(&params.config, &estimates)
}

//! Simulated randomized Pauli measurements and classical-shadow snapshots.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{axes_to_string, Axis};
use crate::combinatorics::{axis_strings, combinations};
use crate::error::{invalid, Result};
use crate::linalg::{
    conjugate_1q, deposit_bits, extract_bits, mat2_to_operator, qubit_shift, DensityOperator,
    Operator, PureState, C0, C1,
};

/// Which qubits are measured, along which axes, and which are left for the
/// shadow. Measured qubits are kept in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliLayout {
    n: usize,
    measured: Vec<(usize, Axis)>,
    unmeasured: Vec<usize>,
}

impl PauliLayout {
    pub fn new(n: usize, mut measured: Vec<(usize, Axis)>) -> Result<Self> {
        measured.sort_by_key(|(q, _)| *q);
        if measured.iter().any(|(q, _)| *q >= n) {
            return invalid(format!("measured qubit out of range for {n} qubits"));
        }
        if measured.windows(2).any(|w| w[0].0 == w[1].0) {
            return invalid("a qubit is measured twice");
        }
        let unmeasured: Vec<usize> = (0..n).filter(|q| !measured.iter().any(|(m, _)| m == q)).collect();
        if unmeasured.is_empty() {
            return invalid("at least one qubit must remain unmeasured");
        }
        Ok(Self { n, measured, unmeasured })
    }

    /// Layout measuring the complement of `unmeasured`, with `axes` assigned
    /// to the measured qubits in ascending order.
    pub fn from_unmeasured(n: usize, unmeasured: &[usize], axes: &[Axis]) -> Result<Self> {
        let measured_qubits: Vec<usize> = (0..n).filter(|q| !unmeasured.contains(q)).collect();
        if measured_qubits.len() != axes.len() {
            return invalid(format!(
                "{} axes given for {} measured qubits",
                axes.len(),
                measured_qubits.len()
            ));
        }
        if unmeasured.iter().any(|&q| q >= n) {
            return invalid("unmeasured qubit out of range");
        }
        Self::new(n, measured_qubits.into_iter().zip(axes.iter().copied()).collect())
    }

    /// Every layout with `r` unmeasured qubits, ordered by unmeasured set then
    /// axis string.
    pub fn all(n: usize, r: usize) -> Result<Vec<Self>> {
        if r == 0 || r > n {
            return invalid(format!("level r={r} must satisfy 1 <= r <= n={n}"));
        }
        let strings = axis_strings(n - r);
        let mut out = Vec::new();
        for k in combinations(n, r) {
            for l in &strings {
                out.push(Self::from_unmeasured(n, &k, l)?);
            }
        }
        Ok(out)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn measured(&self) -> &[(usize, Axis)] {
        &self.measured
    }

    pub fn measured_qubits(&self) -> Vec<usize> {
        self.measured.iter().map(|(q, _)| *q).collect()
    }

    pub fn axes(&self) -> Vec<Axis> {
        self.measured.iter().map(|(_, a)| *a).collect()
    }

    pub fn unmeasured(&self) -> &[usize] {
        &self.unmeasured
    }

    /// Weight of the measurement, `t = |J|`.
    pub fn t(&self) -> usize {
        self.measured.len()
    }

    /// Size of the shadow register, `r = |K|`.
    pub fn r(&self) -> usize {
        self.unmeasured.len()
    }

    pub fn is_all_z(&self) -> bool {
        self.measured.iter().all(|(_, a)| *a == Axis::Z)
    }
}

impl fmt::Display for PauliLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut letters = vec!['_'; self.n];
        for (q, a) in &self.measured {
            letters[*q] = a.letter();
        }
        write!(f, "{}", letters.into_iter().collect::<String>())
    }
}

/// Outcome of a Born-rule partial measurement.
#[derive(Debug, Clone)]
pub struct BornOutcome {
    /// One bit per measured qubit, in the layout's measured order.
    pub outcomes: Vec<u8>,
    pub probability: f64,
    /// Normalized post-measurement state of the unmeasured register.
    pub reduced: DensityOperator,
}

/// Rotates every measured qubit of `rho` into the computational frame.
fn rotate_measured(rho: &Operator, n: usize, measured: &[(usize, Axis)]) -> Operator {
    let mut m = rho.clone();
    for (q, axis) in measured {
        if *axis != Axis::Z {
            conjugate_1q(&mut m, n, *q, &axis.to_computational());
        }
    }
    m
}

/// Samples bits for `qubits` one at a time from the diagonal `diag`,
/// conditioning each draw on the previous ones.
fn sample_sequential<R: Rng + ?Sized>(diag: &[f64], n: usize, qubits: &[usize], rng: &mut R) -> (Vec<u8>, f64) {
    let mut bits = Vec::with_capacity(qubits.len());
    let mut fixed_mask = 0usize;
    let mut fixed_val = 0usize;
    let mut prob = 1.0;
    for &q in qubits {
        let s = qubit_shift(n, q);
        let (mut p0, mut p1) = (0.0, 0.0);
        for (i, &d) in diag.iter().enumerate() {
            if i & fixed_mask != fixed_val {
                continue;
            }
            if (i >> s) & 1 == 0 {
                p0 += d;
            } else {
                p1 += d;
            }
        }
        let total = p0 + p1;
        let bit = if p0 <= 0.0 {
            1
        } else if p1 <= 0.0 {
            0
        } else if rng.random::<f64>() * total < p0 {
            0
        } else {
            1
        };
        prob *= if bit == 0 { p0 / total } else { p1 / total };
        bits.push(bit);
        fixed_mask |= 1 << s;
        fixed_val |= (bit as usize) << s;
    }
    (bits, prob)
}

/// Measures the layout's qubits of `rho` and returns the outcome bits with the
/// normalized reduced state `⟨z|ρ|z⟩ / Tr` on the unmeasured qubits.
pub fn born_sample<R: Rng + ?Sized>(rho: &DensityOperator, layout: &PauliLayout, rng: &mut R) -> Result<BornOutcome> {
    let n = rho.num_qubits();
    if layout.num_qubits() != n {
        return invalid("layout and state sizes differ");
    }
    let m = rotate_measured(rho.matrix(), n, layout.measured());
    let diag: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].re.max(0.0)).collect();
    let measured = layout.measured_qubits();
    let (outcomes, probability) = sample_sequential(&diag, n, &measured, rng);
    let z = outcomes.iter().fold(0usize, |acc, b| (acc << 1) | *b as usize);
    let k = layout.unmeasured();
    let dk = 1usize << k.len();
    let base = deposit_bits(0, n, &measured, z);
    let idx: Vec<usize> = (0..dk).map(|b| deposit_bits(base, n, k, b)).collect();
    let mut reduced = Operator::from_fn(dk, dk, |a, b| m[(idx[a], idx[b])]);
    let tr: f64 = (0..dk).map(|a| reduced[(a, a)].re).sum();
    reduced /= Complex64::new(tr, 0.0);
    Ok(BornOutcome {
        outcomes,
        probability,
        reduced: DensityOperator::new_unchecked(reduced),
    })
}

/// A classical-shadow snapshot `⊗ (3|s_a⟩⟨s_a| - I)` of an `r`-qubit register.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalShadow {
    pub axes: Vec<Axis>,
    pub bits: Vec<u8>,
}

impl ClassicalShadow {
    pub fn new(axes: Vec<Axis>, bits: Vec<u8>) -> Result<Self> {
        if axes.len() != bits.len() {
            return invalid("shadow axes and bits differ in length");
        }
        if bits.iter().any(|b| *b > 1) {
            return invalid("shadow outcome bits must be 0 or 1");
        }
        Ok(Self { axes, bits })
    }

    pub fn num_qubits(&self) -> usize {
        self.axes.len()
    }

    /// The materialized snapshot operator.
    pub fn operator(&self) -> Operator {
        self.axes
            .iter()
            .zip(&self.bits)
            .fold(Operator::from_element(1, 1, C1), |acc, (a, b)| {
                acc.kronecker(&mat2_to_operator(&a.shadow_factor(*b)))
            })
    }

    pub fn axes_string(&self) -> String {
        axes_to_string(&self.axes)
    }

    pub fn bits_string(&self) -> String {
        self.bits.iter().map(|b| char::from(b'0' + b)).collect()
    }
}

/// Draws uniform random axes for every qubit of `zeta` and samples the
/// product-basis outcome by the Born rule.
pub fn shadow_snapshot<R: Rng + ?Sized>(zeta: &DensityOperator, rng: &mut R) -> ClassicalShadow {
    let r = zeta.num_qubits();
    let axes: Vec<Axis> = (0..r).map(|_| Axis::from_index(rng.random_range(0..3))).collect();
    let measured: Vec<(usize, Axis)> = axes.iter().copied().enumerate().collect();
    let m = rotate_measured(zeta.matrix(), r, &measured);
    let diag: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].re.max(0.0)).collect();
    let qubits: Vec<usize> = (0..r).collect();
    let (bits, _) = sample_sequential(&diag, r, &qubits, rng);
    ClassicalShadow { axes, bits }
}

/// Raw single-snapshot estimate `Tr(ζ̂ |φ⟩⟨φ|) = ⟨φ|ζ̂|φ⟩`. No clamping.
pub fn shadow_overlap(shadow: &ClassicalShadow, phi: &PureState) -> Result<f64> {
    let r = shadow.num_qubits();
    if phi.num_qubits() != r {
        return invalid(format!(
            "shadow acts on {r} qubits but the state has {}",
            phi.num_qubits()
        ));
    }
    let mut v: Vec<Complex64> = phi.amplitudes().iter().copied().collect();
    for (q, (a, b)) in shadow.axes.iter().zip(&shadow.bits).enumerate() {
        crate::linalg::apply_1q_vec(&mut v, r, q, &a.shadow_factor(*b));
    }
    let val: Complex64 = phi
        .amplitudes()
        .iter()
        .zip(&v)
        .fold(C0, |acc, (p, w)| acc + p.conj() * w);
    debug_assert!(val.im.abs() < 1e-10);
    Ok(val.re)
}

/// Exact Born probabilities of every outcome string for a layout.
pub fn outcome_distribution(rho: &DensityOperator, layout: &PauliLayout) -> Vec<f64> {
    let n = rho.num_qubits();
    let m = rotate_measured(rho.matrix(), n, layout.measured());
    let measured = layout.measured_qubits();
    let mut probs = vec![0.0; 1 << measured.len()];
    for i in 0..m.nrows() {
        probs[extract_bits(i, n, &measured)] += m[(i, i)].re;
    }
    probs
}

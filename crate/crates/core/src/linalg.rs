//! Dense complex linear algebra over small qubit registers.
//!
//! Qubit-index convention used everywhere in this crate: qubits are numbered
//! `0..n` and qubit 0 is the most significant bit of a basis-state index.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::Mat2;
use crate::error::{invalid, Error, Result};

pub type Operator = DMatrix<Complex64>;
pub type StateVector = DVector<Complex64>;

/// Largest matrix dimension allowed by default (12 qubits).
pub const DEFAULT_MAX_DIM: usize = 1 << 12;

const EIG_TOLERANCE: f64 = 1e-11;
const EIG_MAX_ITER: usize = 100_000;

pub(crate) const C0: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Number of qubits for a power-of-two dimension.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return invalid(format!("dimension {dim} is not a power of two"));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub fn check_dim(dim: usize, max: usize) -> Result<()> {
    if dim > max {
        Err(Error::Capacity { requested: dim, max })
    } else {
        Ok(())
    }
}

#[inline]
pub fn qubit_shift(n: usize, q: usize) -> usize {
    n - 1 - q
}

/// Reads the bits of `index` at `qubits`; the first listed qubit becomes the
/// most significant bit of the result.
#[inline]
pub fn extract_bits(index: usize, n: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .fold(0, |acc, &q| (acc << 1) | ((index >> qubit_shift(n, q)) & 1))
}

/// Writes `value` (MSB first, one bit per listed qubit) into `index`.
#[inline]
pub fn deposit_bits(mut index: usize, n: usize, qubits: &[usize], value: usize) -> usize {
    let k = qubits.len();
    for (pos, &q) in qubits.iter().enumerate() {
        let bit = (value >> (k - 1 - pos)) & 1;
        let s = qubit_shift(n, q);
        index = (index & !(1 << s)) | (bit << s);
    }
    index
}

pub fn complement(n: usize, qubits: &[usize]) -> Vec<usize> {
    (0..n).filter(|q| !qubits.contains(q)).collect()
}

pub fn max_abs_diff(a: &Operator, b: &Operator) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_error(a: &Operator) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(a: &Operator) -> Complex64 {
    a.diagonal().iter().sum()
}

/// A normalized pure state on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    amplitudes: StateVector,
}

impl PureState {
    pub fn new(amplitudes: StateVector) -> Result<Self> {
        let n = qubits_for_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return invalid(format!("state norm {norm} differs from 1"));
        }
        Ok(Self { n, amplitudes })
    }

    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn normalized(amplitudes: StateVector) -> Result<Self> {
        let n = qubits_for_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if norm < 1e-150 || !norm.is_finite() {
            return invalid("cannot normalize a zero vector");
        }
        Ok(Self {
            n,
            amplitudes: amplitudes / Complex64::new(norm, 0.0),
        })
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut v = StateVector::zeros(1 << n);
        v[index] = C1;
        Self { n, amplitudes: v }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &StateVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn projector(&self) -> Operator {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            n: self.n,
            matrix: self.projector(),
        }
    }
}

/// A density operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    n: usize,
    matrix: Operator,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: Operator) -> Result<Self> {
        if !matrix.is_square() {
            return invalid("density matrix must be square");
        }
        let n = qubits_for_dim(matrix.nrows())?;
        let herm = hermiticity_error(&matrix);
        if herm > 1e-12 {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return invalid(format!("density matrix trace {tr} differs from 1"));
        }
        let spec = hermitian_eig(&matrix)?;
        let min = spec.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return invalid(format!("density matrix has negative eigenvalue {min:e}"));
        }
        Ok(Self { n, matrix })
    }

    /// Skips validation; used for matrices that are valid by construction.
    pub(crate) fn new_unchecked(matrix: Operator) -> Self {
        let n = qubits_for_dim(matrix.nrows()).expect("power-of-two dimension");
        Self { n, matrix }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        Self {
            n,
            matrix: Operator::identity(d, d) / Complex64::new(d as f64, 0.0),
        }
    }

    /// Convex combination `Σ w_i ρ_i`; weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Validation("empty mixture".into()))?;
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-10 || parts.iter().any(|(w, _)| *w < 0.0) {
            return invalid("mixture weights must be a probability distribution");
        }
        let mut m = Operator::zeros(first.1.dim(), first.1.dim());
        for (w, rho) in parts {
            if rho.n != first.1.n {
                return invalid("mixture components have different sizes");
            }
            m += &rho.matrix * Complex64::new(*w, 0.0);
        }
        Ok(Self::new_unchecked(m))
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn into_matrix(self) -> Operator {
        self.matrix
    }

    /// `Tr(A ρ)`, real part.
    pub fn expectation(&self, a: &Operator) -> f64 {
        let mut acc = C0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += a[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc.re
    }
}

/// Eigen-decomposition of a Hermitian operator, sorted non-increasing.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Operator,
}

impl HermitianSpectrum {
    pub fn eigenvector(&self, i: usize) -> StateVector {
        self.eigenvectors.column(i).into_owned()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Kronecker product with the default dimension cap.
pub fn tensor_product(a: &Operator, b: &Operator) -> Result<Operator> {
    tensor_product_capped(a, b, DEFAULT_MAX_DIM)
}

/// Kronecker product `a ⊗ b`; `a` acts on the more significant qubits.
pub fn tensor_product_capped(a: &Operator, b: &Operator, max_dim: usize) -> Result<Operator> {
    if !a.is_square() || !b.is_square() {
        return invalid("tensor product operands must be square");
    }
    qubits_for_dim(a.nrows())?;
    qubits_for_dim(b.nrows())?;
    let dim = a
        .nrows()
        .checked_mul(b.nrows())
        .ok_or(Error::Capacity { requested: usize::MAX, max: max_dim })?;
    check_dim(dim, max_dim)?;
    Ok(a.kronecker(b))
}

/// Partial trace keeping the listed qubits (in ascending order). An empty
/// `keep` returns the full trace as a 1×1 operator.
pub fn partial_trace(op: &Operator, keep: &[usize]) -> Result<Operator> {
    let n = qubits_for_dim(op.nrows())?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&q| q >= n) {
        return invalid(format!("qubit index out of range for {n} qubits"));
    }
    let traced = complement(n, &keep);
    let dk = 1usize << keep.len();
    let dt = 1usize << traced.len();
    let mut out = Operator::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = C0;
            for t in 0..dt {
                let i = deposit_bits(deposit_bits(0, n, &keep, a), n, &traced, t);
                let j = deposit_bits(deposit_bits(0, n, &keep, b), n, &traced, t);
                acc += op[(i, j)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Full spectrum of a Hermitian operator, eigenvalues sorted descending.
pub fn hermitian_eig(a: &Operator) -> Result<HermitianSpectrum> {
    if !a.is_square() {
        return invalid("eigen-decomposition needs a square matrix");
    }
    let dev = hermiticity_error(a);
    if dev > 1e-10 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let eig = SymmetricEigen::try_new(a.clone(), EIG_TOLERANCE, EIG_MAX_ITER)
        .ok_or(Error::EigenNonConvergence)?;
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    // Stable sort keeps the solver's deterministic order among ties.
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Operator::zeros(a.nrows(), a.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianSpectrum {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Eigenvalues only, sorted descending.
pub fn hermitian_eigenvalues(a: &Operator) -> Result<Vec<f64>> {
    let dev = hermiticity_error(a);
    if dev > 1e-10 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let mut vals: Vec<f64> = a.clone().symmetric_eigenvalues().iter().cloned().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

/// `1 - λ₂` for a spectrum whose top eigenvalue is 1.
///
/// One-dimensional spaces have no second eigenvalue and report a gap of 1.
pub fn spectral_gap(spectrum: &HermitianSpectrum) -> Result<f64> {
    gap_from_eigenvalues(&spectrum.eigenvalues)
}

pub fn gap_from_eigenvalues(eigenvalues: &[f64]) -> Result<f64> {
    let top = *eigenvalues
        .first()
        .ok_or_else(|| Error::Validation("empty spectrum".into()))?;
    if (top - 1.0).abs() > 1e-8 {
        return Err(Error::Construction(format!(
            "largest eigenvalue {top} is not 1; the operator does not fix the target"
        )));
    }
    Ok(match eigenvalues.get(1) {
        None => 1.0,
        Some(l2) => (1.0 - l2).clamp(0.0, 1.0),
    })
}

/// `⟨ψ|ρ|ψ⟩` clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityOperator, psi: &PureState) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return invalid(format!(
            "dimension mismatch: density {} vs state {}",
            rho.dim(),
            psi.dim()
        ));
    }
    let v = psi.amplitudes();
    let f = v.dotc(&(rho.matrix() * v)).re;
    if !(-1e-12..=1.0 + 1e-12).contains(&f) {
        return invalid(format!("fidelity {f} outside [0, 1]"));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// Applies a single-qubit operator to qubit `q` of a state vector in place.
pub fn apply_1q_vec(v: &mut [Complex64], n: usize, q: usize, u: &Mat2) {
    let stride = 1usize << qubit_shift(n, q);
    let dim = v.len();
    let mut base = 0;
    while base < dim {
        for off in 0..stride {
            let i0 = base + off;
            let i1 = i0 + stride;
            let (a, b) = (v[i0], v[i1]);
            v[i0] = u[0][0] * a + u[0][1] * b;
            v[i1] = u[1][0] * a + u[1][1] * b;
        }
        base += 2 * stride;
    }
}

/// `ρ ← U ρ U†` with `U` acting on qubit `q`.
pub fn conjugate_1q(m: &mut Operator, n: usize, q: usize, u: &Mat2) {
    let dim = m.nrows();
    let stride = 1usize << qubit_shift(n, q);
    // rows: m ← U m
    for col in 0..dim {
        let mut base = 0;
        while base < dim {
            for off in 0..stride {
                let i0 = base + off;
                let i1 = i0 + stride;
                let (a, b) = (m[(i0, col)], m[(i1, col)]);
                m[(i0, col)] = u[0][0] * a + u[0][1] * b;
                m[(i1, col)] = u[1][0] * a + u[1][1] * b;
            }
            base += 2 * stride;
        }
    }
    // columns: m ← m U†
    for row in 0..dim {
        let mut base = 0;
        while base < dim {
            for off in 0..stride {
                let j0 = base + off;
                let j1 = j0 + stride;
                let (a, b) = (m[(row, j0)], m[(row, j1)]);
                m[(row, j0)] = a * u[0][0].conj() + b * u[0][1].conj();
                m[(row, j1)] = a * u[1][0].conj() + b * u[1][1].conj();
            }
            base += 2 * stride;
        }
    }
}

pub fn mat2_to_operator(m: &Mat2) -> Operator {
    Operator::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
}

/// Builds the `n`-qubit operator `⊗ parts` where each part acts on its listed
/// qubits (first listed = most significant within the part); qubits covered
/// by no part receive the identity.
pub fn place_product(parts: &[(&Operator, &[usize])], n: usize) -> Result<Operator> {
    let mut covered = vec![false; n];
    for (op, qs) in parts {
        if op.nrows() != 1 << qs.len() || !op.is_square() {
            return invalid("operator size does not match its qubit list");
        }
        for &q in qs.iter() {
            if q >= n || covered[q] {
                return invalid("qubit lists must be disjoint and in range");
            }
            covered[q] = true;
        }
    }
    let rest: Vec<usize> = (0..n).filter(|&q| !covered[q]).collect();
    let dim = 1usize << n;
    check_dim(dim, DEFAULT_MAX_DIM)?;
    let mut out = Operator::zeros(dim, dim);
    for i in 0..dim {
        let ri = extract_bits(i, n, &rest);
        for j in 0..dim {
            if extract_bits(j, n, &rest) != ri {
                continue;
            }
            let mut acc = C1;
            for (op, qs) in parts {
                acc *= op[(extract_bits(i, n, qs), extract_bits(j, n, qs))];
                if acc == C0 {
                    break;
                }
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Product state `⊗ parts` with each part living on its listed qubits; the
/// parts must cover all `n` qubits.
pub fn place_state(parts: &[(&[Complex64], &[usize])], n: usize) -> Result<StateVector> {
    let mut covered = vec![false; n];
    for (v, qs) in parts {
        if v.len() != 1 << qs.len() {
            return invalid("vector size does not match its qubit list");
        }
        for &q in qs.iter() {
            if q >= n || covered[q] {
                return invalid("qubit lists must be disjoint and in range");
            }
            covered[q] = true;
        }
    }
    if covered.iter().any(|c| !c) {
        return invalid("product state parts must cover every qubit");
    }
    let dim = 1usize << n;
    Ok(StateVector::from_fn(dim, |i, _| {
        parts
            .iter()
            .map(|(v, qs)| v[extract_bits(i, n, qs)])
            .product()
    }))
}

/// Serializable complex number as `[re, im]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ComplexPair(pub f64, pub f64);

impl From<Complex64> for ComplexPair {
    fn from(c: Complex64) -> Self {
        ComplexPair(c.re, c.im)
    }
}

impl From<ComplexPair> for Complex64 {
    fn from(p: ComplexPair) -> Self {
        Complex64::new(p.0, p.1)
    }
}

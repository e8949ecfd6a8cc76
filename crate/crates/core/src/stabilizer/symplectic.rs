use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::group::StabilizerGroup;
use super::pauli::PauliString;
use crate::basis::Axis;
use crate::combinatorics::{axis_strings, combinations};
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    mat2_to_operator, partial_trace, place_product, DensityOperator, Operator,
};
use crate::measurement::PauliLayout;

/// Probability below which a measurement branch counts as absent.
const BRANCH_EPS: f64 = 1e-12;

/// Composite Pauli measurement `μ = (μˣ; μᶻ)`; bit `q` belongs to qubit `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymplecticVector {
    n: usize,
    x: u64,
    z: u64,
}

impl SymplecticVector {
    pub fn new(n: usize, x: u64, z: u64) -> Result<Self> {
        if n == 0 || n > 64 || (n < 64 && (x | z) >> n != 0) {
            return invalid("symplectic vector does not fit the register");
        }
        Ok(Self { n, x, z })
    }

    pub fn from_layout(layout: &PauliLayout) -> Self {
        let (mut x, mut z) = (0u64, 0u64);
        for (q, a) in layout.measured() {
            match a {
                Axis::X => x |= 1 << q,
                Axis::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                Axis::Z => z |= 1 << q,
            }
        }
        Self { n: layout.num_qubits(), x, z }
    }

    pub fn to_layout(&self) -> Result<PauliLayout> {
        PauliLayout::new(self.n, self.measured())
    }

    /// All weight-`t` vectors, in the same order as `PauliLayout::all(n, n - t)`.
    pub fn all_of_weight(n: usize, t: usize) -> Result<Vec<Self>> {
        if t == 0 || t >= n {
            return invalid(format!("weight {t} must satisfy 1 <= t < n = {n}"));
        }
        let strings = axis_strings(t);
        let mut out = Vec::with_capacity(combinations(n, t).len() * strings.len());
        for k in combinations(n, n - t) {
            let j: Vec<usize> = (0..n).filter(|q| !k.contains(q)).collect();
            for l in &strings {
                out.push(Self::from_axes(n, &j, l));
            }
        }
        Ok(out)
    }

    pub(crate) fn from_axes(n: usize, qubits: &[usize], axes: &[Axis]) -> Self {
        let (mut x, mut z) = (0u64, 0u64);
        for (q, a) in qubits.iter().zip(axes) {
            if *a != Axis::Z {
                x |= 1 << q;
            }
            if *a != Axis::X {
                z |= 1 << q;
            }
        }
        Self { n, x, z }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn axis(&self, q: usize) -> Option<Axis> {
        match (self.x >> q & 1, self.z >> q & 1) {
            (0, 0) => None,
            (1, 0) => Some(Axis::X),
            (1, 1) => Some(Axis::Y),
            _ => Some(Axis::Z),
        }
    }

    pub fn measured(&self) -> Vec<(usize, Axis)> {
        (0..self.n).filter_map(|q| self.axis(q).map(|a| (q, a))).collect()
    }

    pub fn measured_qubits(&self) -> Vec<usize> {
        (0..self.n).filter(|q| self.support() >> q & 1 == 1).collect()
    }

    pub fn unmeasured_qubits(&self) -> Vec<usize> {
        (0..self.n).filter(|q| self.support() >> q & 1 == 0).collect()
    }

    /// `(m_x, m_y, m_z)` letter counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        let y = (self.x & self.z).count_ones() as usize;
        ((self.x.count_ones() as usize) - y, y, (self.z.count_ones() as usize) - y)
    }

    /// `W_μ(u) = ⊗_j σ_j^{u_j}`; bit `i` of `u` selects the `i`-th measured qubit.
    pub fn w(&self, u: u64) -> PauliString {
        let mut p = PauliString::identity(self.n);
        for (i, (q, a)) in self.measured().into_iter().enumerate() {
            if u >> i & 1 == 1 {
                p = p.mul(&PauliString::single(self.n, q, a));
            }
        }
        p
    }

    /// The measurement group `T_μ`, all `2^t` elements indexed by `u`.
    pub fn measurement_group(&self) -> Vec<PauliString> {
        (0..1u64 << self.weight()).map(|u| self.w(u)).collect()
    }
}

impl fmt::Display for SymplecticVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.n).map(|q| self.axis(q).map_or('I', Axis::letter)).collect();
        write!(f, "{s}")
    }
}

fn check_pair(n: usize, mu: &SymplecticVector) -> Result<()> {
    if mu.num_qubits() != n {
        return invalid("measurement and state sizes differ");
    }
    if mu.weight() == 0 {
        return invalid("measurement weight must be at least 1");
    }
    if mu.weight() == n {
        return invalid("at least one qubit must remain unmeasured");
    }
    Ok(())
}

fn parity(a: u64) -> bool {
    a.count_ones() % 2 == 1
}

fn bits_to_mask(v: &[u8]) -> u64 {
    v.iter().enumerate().fold(0, |acc, (i, b)| acc | (*b as u64 & 1) << i)
}

/// `Π_{μ,v} = 2^{-t} Σ_u (-1)^{u·v} W_μ(u)` on the full register.
pub fn outcome_projector(mu: &SymplecticVector, v: &[u8]) -> Result<Operator> {
    let t = mu.weight();
    if v.len() != t {
        return invalid(format!("{} outcome bits for weight {t}", v.len()));
    }
    let vm = bits_to_mask(v);
    let dim = 1usize << mu.num_qubits();
    let mut acc = Operator::zeros(dim, dim);
    for u in 0..1u64 << t {
        let w = mu.w(u).to_operator()?;
        if parity(u & vm) {
            acc -= w;
        } else {
            acc += w;
        }
    }
    Ok(acc / Complex64::new((1u64 << t) as f64, 0.0))
}

/// Local projector `⊗_j |s_j⟩⟨s_j|` on the measured qubits only.
fn local_projector(mu: &SymplecticVector, v: &[u8]) -> Operator {
    mu.measured()
        .iter()
        .zip(v)
        .fold(Operator::from_element(1, 1, Complex64::new(1.0, 0.0)), |acc, ((_, a), b)| {
            acc.kronecker(&mat2_to_operator(&a.projector(*b)))
        })
}

/// `Ω_μ = (2^t Tr(ρΠ_μ))^{-1} Σ_{T∈T_μ} T ⊗ Tr_J(ρT)`, with `Π_μ = Π_{μ,v}`
/// for the first outcome `v` of nonzero probability. For stabilizer `ρ`
/// every such branch has the same probability `|T_μ∩S|/|T_μ|`.
///
/// Valid for stabilizer `ρ`; for other states it generally differs from the
/// branch-sum operator.
pub fn general_test_operator(rho: &DensityOperator, mu: &SymplecticVector) -> Result<Operator> {
    let n = rho.num_qubits();
    check_pair(n, mu)?;
    let t = mu.weight();
    let expectations: Vec<f64> = (0..1u64 << t)
        .map(|u| Ok(rho.expectation(&mu.w(u).to_operator()?)))
        .collect::<Result<_>>()?;
    let p0 = (0..1u64 << t)
        .map(|v| {
            expectations
                .iter()
                .enumerate()
                .map(|(u, e)| if parity(u as u64 & v) { -e } else { *e })
                .sum::<f64>()
                / (1u64 << t) as f64
        })
        .find(|p| *p > BRANCH_EPS)
        .ok_or(Error::IncompatibleMeasurement)?;
    let j = mu.measured_qubits();
    let k = mu.unmeasured_qubits();
    let dim = 1usize << n;
    let mut acc = Operator::zeros(dim, dim);
    for u in 0..1u64 << t {
        let w = mu.w(u);
        let reduced = partial_trace(&(rho.matrix() * w.to_operator()?), &k)?;
        let local = w.restrict(&j).to_operator()?;
        acc += place_product(&[(&local, &j), (&reduced, &k)], n)?;
    }
    Ok(acc / Complex64::new((1u64 << t) as f64 * p0, 0.0))
}

/// `Ω_μ = Σ_v Π_{μ,v} ⊗ Tr_J(ρΠ_{μ,v}) / Tr(ρΠ_{μ,v})` over nonzero branches.
pub fn branch_sum_test_operator(rho: &DensityOperator, mu: &SymplecticVector) -> Result<Operator> {
    let n = rho.num_qubits();
    check_pair(n, mu)?;
    let t = mu.weight();
    let j = mu.measured_qubits();
    let k = mu.unmeasured_qubits();
    let dim = 1usize << n;
    let mut acc = Operator::zeros(dim, dim);
    for vm in 0..1u64 << t {
        let v: Vec<u8> = (0..t).map(|i| (vm >> i & 1) as u8).collect();
        let local = local_projector(mu, &v);
        let full = place_product(&[(&local, &j)], n)?;
        let branch = rho.matrix() * &full;
        let p: f64 = branch.trace().re;
        if p <= BRANCH_EPS {
            continue;
        }
        let reduced = partial_trace(&branch, &k)? / Complex64::new(p, 0.0);
        acc += place_product(&[(&local, &j), (&reduced, &k)], n)?;
    }
    Ok(acc)
}

/// Local anticommutation vectors: bit `i` of the `j`-th entry is set when
/// generator `g_i` anticommutes with `σ_j` on measured site `j`.
pub(crate) fn anticommutation_vectors(s: &StabilizerGroup, mu: &SymplecticVector) -> Vec<u64> {
    let n = s.num_qubits();
    mu.measured()
        .into_iter()
        .map(|(q, a)| {
            let sigma = PauliString::single(n, q, a);
            s.generators()
                .iter()
                .enumerate()
                .filter(|(_, g)| g.anticommutes_at(&sigma, q))
                .fold(0u64, |acc, (i, _)| acc | 1 << i)
        })
        .collect()
}

/// Basis of `{v : v·c = 0 for all c}` in `Z₂^m`.
fn orthogonal_complement(cs: &[u64], m: usize) -> Vec<u64> {
    // row-reduce cs, then read off the null space
    let mut rows: Vec<u64> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for &c in cs {
        let mut r = c;
        for (row, &p) in rows.iter().zip(&pivots) {
            if r >> p & 1 == 1 {
                r ^= row;
            }
        }
        if r == 0 {
            continue;
        }
        let p = r.trailing_zeros() as usize;
        for row in rows.iter_mut() {
            if *row >> p & 1 == 1 {
                *row ^= r;
            }
        }
        rows.push(r);
        pivots.push(p);
    }
    (0..m)
        .filter(|b| !pivots.contains(b))
        .map(|free| {
            let mut v = 1u64 << free;
            for (row, &p) in rows.iter().zip(&pivots) {
                if row >> free & 1 == 1 {
                    v |= 1 << p;
                }
            }
            v
        })
        .collect()
}

/// `R_μ`: elements of `S` whose restriction to every measured site is the
/// identity or the measured letter.
pub fn r_group(s: &StabilizerGroup, mu: &SymplecticVector) -> Result<StabilizerGroup> {
    let n = s.num_qubits();
    if !s.is_full() {
        return invalid("a full stabilizer group is required");
    }
    check_pair(n, mu)?;
    let cs = anticommutation_vectors(s, mu);
    let gens = orthogonal_complement(&cs, n).into_iter().map(|v| s.element(v)).collect();
    StabilizerGroup::new(n, gens)
}

/// `|T_μ ∩ S|` up to sign: elements `T` with `T ∈ S` or `-T ∈ S`. This is
/// the count entering `|R_μ| = 2^{n-t}|T_μ ∩ S|`; the two agree whenever
/// `(-T_μ) ∩ S = ∅`.
pub fn measurement_intersection_size(s: &StabilizerGroup, mu: &SymplecticVector) -> usize {
    mu.measurement_group()
        .iter()
        .filter(|t| s.contains(t) || s.contains(&t.negated()))
        .count()
}

/// `Ω_μ = |R_μ|^{-1} Σ_{R∈R_μ} R`, the projector onto the `R_μ` code.
pub fn stabilizer_test_operator(s: &StabilizerGroup, mu: &SymplecticVector) -> Result<Operator> {
    r_group(s, mu)?.projector()
}

/// `γ_{μ,w} = ⟨S_w|Ω_μ|S_w⟩` for every `w ∈ Z₂ⁿ` (bit `i` flips generator
/// `g_i`). The value is 1 exactly when `w` lies in the span of the local
/// anticommutation vectors.
pub fn stabilizer_basis_diagonal(s: &StabilizerGroup, mu: &SymplecticVector) -> Result<Vec<bool>> {
    let n = s.num_qubits();
    if !s.is_full() {
        return invalid("a full stabilizer group is required");
    }
    check_pair(n, mu)?;
    if n > 24 {
        return Err(Error::Capacity { requested: 1 << n.min(63), max: 1 << 24 });
    }
    let mut table = vec![false; 1 << n];
    for w in span(&anticommutation_vectors(s, mu)) {
        table[w as usize] = true;
    }
    Ok(table)
}

/// Every element of the GF(2) span of `vectors`.
pub(crate) fn span(vectors: &[u64]) -> Vec<u64> {
    let mut basis: Vec<u64> = Vec::new();
    for &v in vectors {
        let mut r = v;
        for b in &basis {
            r = r.min(r ^ b);
        }
        if r != 0 {
            basis.push(r);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    let mut out = vec![0u64];
    for b in basis {
        let more: Vec<u64> = out.iter().map(|e| e ^ b).collect();
        out.extend(more);
    }
    out
}

/// Projector onto the stabilizer-basis state `|S_w⟩`.
pub fn stabilizer_basis_projector(s: &StabilizerGroup, w: u64) -> Result<Operator> {
    let gens: Vec<PauliString> = s
        .generators()
        .iter()
        .enumerate()
        .map(|(i, g)| if w >> i & 1 == 1 { g.negated() } else { *g })
        .collect();
    StabilizerGroup::new(s.num_qubits(), gens)?.projector()
}

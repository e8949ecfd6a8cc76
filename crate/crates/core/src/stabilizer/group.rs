use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use super::pauli::{Clifford, PauliString};
use crate::basis::Axis;
use crate::error::{invalid, Error, Result};
use crate::linalg::{check_dim, Operator, PureState, StateVector, DEFAULT_MAX_DIM};
use crate::measurement::PauliLayout;
use crate::target::{check_basis_len, check_branch_args, dense_amplitude, dense_branch, TargetModel};

/// Abelian group of Hermitian Pauli strings not containing `-I`, stored by
/// an independent generating set. Element `v` is `Π_{i: v_i = 1} g_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerGroup {
    n: usize,
    generators: Vec<PauliString>,
}

/// GF(2) rank of a list of bit vectors.
pub(crate) fn gf2_rank(rows: impl IntoIterator<Item = u128>) -> usize {
    let mut pivots: Vec<u128> = Vec::new();
    for mut r in rows {
        for p in &pivots {
            r = r.min(r ^ p);
        }
        if r != 0 {
            pivots.push(r);
            pivots.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    pivots.len()
}

fn symplectic_bits(p: &PauliString) -> u128 {
    (p.x_mask() as u128) << 64 | p.z_mask() as u128
}

impl StabilizerGroup {
    pub fn new(n: usize, generators: Vec<PauliString>) -> Result<Self> {
        if generators.iter().any(|g| g.num_qubits() != n) {
            return invalid("generator length differs from the register size");
        }
        if let Some(g) = generators.iter().find(|g| !g.is_hermitian()) {
            return invalid(format!("generator {g} is not Hermitian"));
        }
        for (i, a) in generators.iter().enumerate() {
            for b in &generators[i + 1..] {
                if !a.commutes_with(b) {
                    return invalid(format!("generators {a} and {b} anticommute"));
                }
            }
        }
        if gf2_rank(generators.iter().map(symplectic_bits)) != generators.len() {
            return invalid("generators are not independent");
        }
        if generators.len() > n {
            return invalid("more generators than qubits");
        }
        Ok(Self { n, generators })
    }

    pub fn from_strings<S: AsRef<str>>(strings: &[S]) -> Result<Self> {
        let gens = strings
            .iter()
            .map(|s| s.as_ref().parse::<PauliString>())
            .collect::<Result<Vec<_>>>()?;
        let n = gens.first().map_or(0, |g| g.num_qubits());
        Self::new(n, gens)
    }

    /// JSON array of generator strings such as `["+XXX", "+ZZI"]`.
    pub fn from_json(text: &str) -> Result<Self> {
        let strings: Vec<String> = serde_json::from_str(text)?;
        if strings.is_empty() {
            return invalid("no generators given");
        }
        Self::from_strings(&strings)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_strings()).expect("strings serialize")
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.to_string()).collect()
    }

    /// `X^⊗n` and `Z_0 Z_a` for `a = 1..n`.
    pub fn ghz(n: usize) -> Result<Self> {
        if n < 2 {
            return invalid("GHZ needs at least 2 qubits");
        }
        let mut gens = vec![PauliString::from_masks(n, (1u64 << n) - 1, 0, 0)?];
        for a in 1..n {
            gens.push(PauliString::from_masks(n, 0, 1 | 1 << a, 0)?);
        }
        Self::new(n, gens)
    }

    /// Stabilizer group of a random Clifford state: `|0…0⟩` scrambled by a
    /// random gate sequence, with random generator signs and recombination.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || n > 64 {
            return invalid("qubit count out of range");
        }
        let mut gens: Vec<PauliString> = (0..n).map(|q| PauliString::single(n, q, Axis::Z)).collect();
        for _ in 0..4 * n * n + 8 {
            let gate = match rng.random_range(0..3) {
                0 => Clifford::H(rng.random_range(0..n)),
                1 => Clifford::S(rng.random_range(0..n)),
                _ if n > 1 => {
                    let c = rng.random_range(0..n);
                    let t = (c + rng.random_range(1..n)) % n;
                    Clifford::Cnot(c, t)
                }
                _ => Clifford::H(0),
            };
            for g in gens.iter_mut() {
                *g = g.conjugate(gate);
            }
        }
        for g in gens.iter_mut() {
            if rng.random::<bool>() {
                *g = g.negated();
            }
        }
        for _ in 0..n {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            if i != j {
                gens[i] = gens[i].mul(&gens[j]);
            }
        }
        Self::new(n, gens)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        1 << self.generators.len()
    }

    /// Whether the group stabilizes a unique state (`n` generators).
    pub fn is_full(&self) -> bool {
        self.generators.len() == self.n
    }

    pub fn element(&self, v: u64) -> PauliString {
        self.generators
            .iter()
            .enumerate()
            .filter(|(i, _)| v >> i & 1 == 1)
            .fold(PauliString::identity(self.n), |acc, (_, g)| acc.mul(g))
    }

    /// All elements, indexed by the generator bitmask `v`.
    pub fn elements(&self) -> Vec<PauliString> {
        let mut out = vec![PauliString::identity(self.n)];
        for g in &self.generators {
            let more: Vec<PauliString> = out.iter().map(|e| e.mul(g)).collect();
            out.extend(more);
        }
        out
    }

    /// Exponent `v` with `g^v = p` (phase included), if `p` is in the group.
    pub fn decompose(&self, p: &PauliString) -> Option<u64> {
        if self.generators.len() > 20 {
            return self.decompose_linear(p);
        }
        self.elements().iter().position(|e| e == p).map(|v| v as u64)
    }

    fn decompose_linear(&self, p: &PauliString) -> Option<u64> {
        // Gaussian elimination over the symplectic bits
        let mut rows: Vec<(u128, u64)> = self
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| (symplectic_bits(g), 1u64 << i))
            .collect();
        let mut target = (symplectic_bits(p), 0u64);
        let mut used = vec![false; rows.len()];
        for bit in (0..128).rev() {
            let Some(pi) = (0..rows.len()).find(|&i| !used[i] && rows[i].0 >> bit & 1 == 1) else {
                continue;
            };
            used[pi] = true;
            let pivot = rows[pi];
            for (i, r) in rows.iter_mut().enumerate() {
                if i != pi && r.0 >> bit & 1 == 1 {
                    r.0 ^= pivot.0;
                    r.1 ^= pivot.1;
                }
            }
            if target.0 >> bit & 1 == 1 {
                target.0 ^= pivot.0;
                target.1 ^= pivot.1;
            }
        }
        (target.0 == 0 && self.element(target.1) == *p).then_some(target.1)
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.decompose(p).is_some()
    }

    /// Same group, possibly with different generators.
    pub fn same_group(&self, other: &Self) -> bool {
        self.n == other.n
            && self.generators.len() == other.generators.len()
            && other.generators.iter().all(|g| self.contains(g))
    }

    /// Code projector `(1/|G|) Σ_{g∈G} g`.
    pub fn projector(&self) -> Result<Operator> {
        let dim = 1usize << self.n;
        check_dim(dim, DEFAULT_MAX_DIM)?;
        let mut acc = Operator::zeros(dim, dim);
        for e in self.elements() {
            acc += e.to_operator()?;
        }
        Ok(acc / Complex64::new(self.order() as f64, 0.0))
    }

    /// The stabilized state of a full group, with its first nonzero
    /// amplitude made real and positive.
    pub fn state(&self) -> Result<PureState> {
        if !self.is_full() {
            return invalid("group does not fix a unique state");
        }
        let dim = 1usize << self.n;
        check_dim(dim, DEFAULT_MAX_DIM)?;
        for seed in 0..dim {
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            v[seed] = Complex64::new(1.0, 0.0);
            for g in &self.generators {
                let gv = g.apply(&v);
                for (a, b) in v.iter_mut().zip(gv) {
                    *a = (*a + b) * 0.5;
                }
            }
            let norm_sqr: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            if norm_sqr > 1e-6 {
                let first = *v.iter().find(|c| c.norm() > 1e-9).expect("nonzero vector");
                let fix = first.conj() / first.norm() / norm_sqr.sqrt();
                return PureState::new(StateVector::from_iterator(dim, v.into_iter().map(|c| c * fix)));
            }
        }
        Err(Error::Construction("stabilizer projector vanished on every basis state".into()))
    }
}

/// Stabilizer state with both its group and its dense amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerTarget {
    group: StabilizerGroup,
    state: PureState,
}

impl StabilizerTarget {
    pub fn new(group: StabilizerGroup) -> Result<Self> {
        let state = group.state()?;
        Ok(Self { group, state })
    }

    pub fn group(&self) -> &StabilizerGroup {
        &self.group
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(StabilizerGroup::from_json(&std::fs::read_to_string(path)?)?)
    }
}

impl TargetModel for StabilizerTarget {
    fn num_qubits(&self) -> usize {
        self.group.num_qubits()
    }

    fn amplitude(&self, basis: &[(Axis, u8)]) -> Result<Complex64> {
        let n = self.num_qubits();
        check_basis_len(n, basis)?;
        Ok(dense_amplitude(self.state.amplitudes(), n, basis))
    }

    fn branch(&self, layout: &PauliLayout, outcomes: &[u8]) -> Result<StateVector> {
        let n = self.num_qubits();
        check_branch_args(n, layout, outcomes)?;
        Ok(dense_branch(self.state.amplitudes(), n, layout, outcomes))
    }

    fn to_dense(&self) -> Result<PureState> {
        Ok(self.state.clone())
    }

    fn stabilizer_group(&self) -> Option<&StabilizerGroup> {
        Some(&self.group)
    }
}

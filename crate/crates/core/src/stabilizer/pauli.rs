use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::basis::Axis;
use crate::error::{invalid, Error, Result};
use crate::linalg::{check_dim, Operator, DEFAULT_MAX_DIM};

/// Largest register a bitmask Pauli string can describe.
pub const MAX_PAULI_QUBITS: usize = 64;

/// `i^phase · ⊗_q σ_q` with Hermitian letters σ ∈ {I, X, Y, Z}.
///
/// Bit `q` of `x`/`z` belongs to qubit `q`; letters are X = (1,0),
/// Z = (0,1), Y = (1,1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: u8,
}

/// Clifford gates used to scramble stabilizer groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clifford {
    H(usize),
    S(usize),
    Cnot(usize, usize),
}

fn i_pow(k: u8) -> Complex64 {
    match k & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Moves mask bit `q` to basis-index bit `n - 1 - q`.
pub(crate) fn index_mask(mask: u64, n: usize) -> usize {
    (0..n).filter(|q| mask >> q & 1 == 1).fold(0, |acc, q| acc | 1 << (n - 1 - q))
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { n, x: 0, z: 0, phase: 0 }
    }

    pub fn from_masks(n: usize, x: u64, z: u64, phase: u8) -> Result<Self> {
        if n > MAX_PAULI_QUBITS {
            return invalid(format!("at most {MAX_PAULI_QUBITS} qubits supported"));
        }
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        if (x | z) & !full != 0 {
            return invalid("Pauli mask exceeds the register");
        }
        Ok(Self { n, x, z, phase: phase & 3 })
    }

    /// Single-qubit letter `axis` on qubit `q`.
    pub fn single(n: usize, q: usize, axis: Axis) -> Self {
        let bit = 1u64 << q;
        let (x, z) = match axis {
            Axis::X => (bit, 0),
            Axis::Y => (bit, bit),
            Axis::Z => (0, bit),
        };
        Self { n, x, z, phase: 0 }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.support() == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    /// `+1` or `-1` for Hermitian strings.
    pub fn sign(&self) -> Option<i8> {
        match self.phase {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn negated(&self) -> Self {
        Self { phase: (self.phase + 2) & 3, ..*self }
    }

    pub fn letter(&self, q: usize) -> Option<Axis> {
        match (self.x >> q & 1, self.z >> q & 1) {
            (0, 0) => None,
            (1, 0) => Some(Axis::X),
            (1, 1) => Some(Axis::Y),
            _ => Some(Axis::Z),
        }
    }

    /// Letters without the phase.
    pub fn letters(&self) -> String {
        (0..self.n)
            .map(|q| self.letter(q).map_or('I', Axis::letter))
            .collect()
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Whether the single-site letters at `q` anticommute.
    pub fn anticommutes_at(&self, other: &Self, q: usize) -> bool {
        let m = 1u64 << q;
        ((self.x & other.z & m).count_ones() + (self.z & other.x & m).count_ones()) % 2 == 1
    }

    /// Operator product `self · other`, phase included.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        // work in the X^x Z^z form where Y = i X Z
        let e1 = self.phase as u32 + (self.x & self.z).count_ones();
        let e2 = other.phase as u32 + (other.x & other.z).count_ones();
        let e = e1 + e2 + 2 * (self.z & other.x).count_ones();
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let phase = ((e + 4 * 64 - (x & z).count_ones()) % 4) as u8;
        Self { n: self.n, x, z, phase }
    }

    /// Restriction to the listed qubits, in listed order, keeping the phase.
    pub fn restrict(&self, qubits: &[usize]) -> Self {
        let (mut x, mut z) = (0u64, 0u64);
        for (pos, &q) in qubits.iter().enumerate() {
            x |= (self.x >> q & 1) << pos;
            z |= (self.z >> q & 1) << pos;
        }
        Self { n: qubits.len(), x, z, phase: self.phase }
    }

    /// Applies the string to a state vector (qubit 0 = most significant).
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let xm = index_mask(self.x, self.n);
        let zm = index_mask(self.z, self.n);
        let coeff = i_pow(((self.phase as u32 + (self.x & self.z).count_ones()) % 4) as u8);
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for (i, a) in v.iter().enumerate() {
            let s = if (i & zm).count_ones() % 2 == 1 { -coeff } else { coeff };
            out[i ^ xm] = s * a;
        }
        out
    }

    pub fn to_operator(&self) -> Result<Operator> {
        let dim = 1usize << self.n;
        check_dim(dim, DEFAULT_MAX_DIM)?;
        let xm = index_mask(self.x, self.n);
        let zm = index_mask(self.z, self.n);
        let coeff = i_pow(((self.phase as u32 + (self.x & self.z).count_ones()) % 4) as u8);
        let mut m = Operator::zeros(dim, dim);
        for i in 0..dim {
            m[(i ^ xm, i)] = if (i & zm).count_ones() % 2 == 1 { -coeff } else { coeff };
        }
        Ok(m)
    }

    /// `U P U†` for a Clifford gate `U`.
    pub fn conjugate(&self, gate: Clifford) -> Self {
        let n = self.n;
        let image_x = |q: usize| -> Self {
            match gate {
                Clifford::H(a) if a == q => Self::single(n, q, Axis::Z),
                Clifford::S(a) if a == q => Self::single(n, q, Axis::Y),
                Clifford::Cnot(c, t) if c == q => Self::single(n, c, Axis::X).mul(&Self::single(n, t, Axis::X)),
                _ => Self::single(n, q, Axis::X),
            }
        };
        let image_z = |q: usize| -> Self {
            match gate {
                Clifford::H(a) if a == q => Self::single(n, q, Axis::X),
                Clifford::Cnot(c, t) if t == q => Self::single(n, c, Axis::Z).mul(&Self::single(n, t, Axis::Z)),
                _ => Self::single(n, q, Axis::Z),
            }
        };
        let mut acc = Self { n, x: 0, z: 0, phase: ((self.phase as u32 + (self.x & self.z).count_ones()) % 4) as u8 };
        for q in (0..n).filter(|q| self.x >> q & 1 == 1) {
            acc = acc.mul(&image_x(q));
        }
        for q in (0..n).filter(|q| self.z >> q & 1 == 1) {
            acc = acc.mul(&image_z(q));
        }
        acc
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["+", "+i", "-", "-i"][self.phase as usize];
        write!(f, "{prefix}{}", self.letters())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts an optional `+`, `-`, `+i`, `-i` or `i` prefix followed by
    /// letters from `IXYZ`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("+i").or_else(|| s.strip_prefix('i')) {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else {
            (0, s.strip_prefix('+').unwrap_or(s))
        };
        if body.is_empty() {
            return Err(Error::Parse(format!("empty Pauli string {s:?}")));
        }
        let n = body.chars().count();
        if n > MAX_PAULI_QUBITS {
            return Err(Error::Parse(format!("Pauli string longer than {MAX_PAULI_QUBITS}")));
        }
        let mut p = Self::identity(n);
        p.phase = phase;
        for (q, c) in body.chars().enumerate() {
            match c.to_ascii_uppercase() {
                'I' => {}
                'X' => p.x |= 1 << q,
                'Y' => {
                    p.x |= 1 << q;
                    p.z |= 1 << q;
                }
                'Z' => p.z |= 1 << q,
                other => return Err(Error::Parse(format!("invalid Pauli letter {other:?} in {s:?}"))),
            }
        }
        Ok(p)
    }
}

//! Single-qubit Pauli measurement bases.
//!
//! Outcomes are encoded as bits `v ∈ {0, 1}` with physical eigenvalue `(-1)^v`.
//! Eigenstate conventions:
//!
//! | axis | bit 0 | bit 1 |
//! |------|-------|-------|
//! | X | `(|0⟩+|1⟩)/√2` | `(|0⟩-|1⟩)/√2` |
//! | Y | `(|0⟩+i|1⟩)/√2` | `(|0⟩-i|1⟩)/√2` |
//! | Z | `|0⟩` | `|1⟩` |

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Eigenvector for the given outcome bit, as `[⟨0|s⟩, ⟨1|s⟩]`.
    pub fn eigenvector(self, bit: u8) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let sign = if bit == 0 { 1.0 } else { -1.0 };
        match self {
            Axis::X => [Complex64::new(h, 0.0), Complex64::new(sign * h, 0.0)],
            Axis::Y => [Complex64::new(h, 0.0), Complex64::new(0.0, sign * h)],
            Axis::Z => {
                if bit == 0 {
                    [ONE, ZERO]
                } else {
                    [ZERO, ONE]
                }
            }
        }
    }

    /// Unitary whose rows are the eigenbras `⟨s_0|`, `⟨s_1|`. Applying it maps
    /// the axis eigenbasis onto the computational basis.
    pub fn to_computational(self) -> Mat2 {
        let e0 = self.eigenvector(0);
        let e1 = self.eigenvector(1);
        [[e0[0].conj(), e0[1].conj()], [e1[0].conj(), e1[1].conj()]]
    }

    /// Projector `|s⟩⟨s|` for the given outcome bit.
    pub fn projector(self, bit: u8) -> Mat2 {
        let e = self.eigenvector(bit);
        [
            [e[0] * e[0].conj(), e[0] * e[1].conj()],
            [e[1] * e[0].conj(), e[1] * e[1].conj()],
        ]
    }

    /// Single-qubit shadow factor `3|s⟩⟨s| - I`.
    pub fn shadow_factor(self, bit: u8) -> Mat2 {
        let p = self.projector(bit);
        [
            [p[0][0] * 3.0 - ONE, p[0][1] * 3.0],
            [p[1][0] * 3.0, p[1][1] * 3.0 - ONE],
        ]
    }

    pub fn pauli_matrix(self) -> Mat2 {
        let i = Complex64::new(0.0, 1.0);
        match self {
            Axis::X => [[ZERO, ONE], [ONE, ZERO]],
            Axis::Y => [[ZERO, -i], [i, ZERO]],
            Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i % 3]
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "X" | "x" => Ok(Axis::X),
            "Y" | "y" => Ok(Axis::Y),
            "Z" | "z" => Ok(Axis::Z),
            other => Err(Error::Parse(format!("unknown Pauli axis '{other}'"))),
        }
    }
}

/// Physical eigenvalue `(-1)^bit` of an outcome bit.
pub fn outcome_sign(bit: u8) -> i8 {
    if bit == 0 {
        1
    } else {
        -1
    }
}

/// Inverse of [`outcome_sign`].
pub fn sign_to_bit(sign: i8) -> Result<u8> {
    match sign {
        1 => Ok(0),
        -1 => Ok(1),
        _ => Err(Error::Validation(format!("outcome sign must be ±1, got {sign}"))),
    }
}

/// Formats an axis string like `XYZ`.
pub fn axes_to_string(axes: &[Axis]) -> String {
    axes.iter().map(|a| a.letter()).collect()
}

pub fn parse_axes(s: &str) -> Result<Vec<Axis>> {
    s.chars().map(|c| c.to_string().parse()).collect()
}

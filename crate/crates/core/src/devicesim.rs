//! Simulated i.i.d. device sources.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{DensityOperator, Operator, PureState};
use crate::plm::StrategyOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DeviceKind {
    Exact,
    WorstCase { epsilon: f64 },
    Depolarized { p: f64 },
    File,
}

/// Emits the same density operator on every call.
#[derive(Debug, Clone)]
pub struct DeviceSource {
    kind: DeviceKind,
    state: DensityOperator,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DensityJson {
    Wrapped { matrix: Vec<Vec<[f64; 2]>> },
    Bare(Vec<Vec<[f64; 2]>>),
}

impl DeviceSource {
    /// `|ψ⟩⟨ψ|`.
    pub fn exact(target: &PureState) -> Self {
        Self { kind: DeviceKind::Exact, state: target.density() }
    }

    /// `(1-ε)|ψ⟩⟨ψ| + ε|v₂⟩⟨v₂|` with `v₂` the eigenvector of the second
    /// largest eigenvalue of `omega`, so that `Tr(Ωρ) = 1 - νε`.
    pub fn worst_case(target: &PureState, omega: &StrategyOperator, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return invalid(format!("infidelity {epsilon} outside [0, 1]"));
        }
        let spec = omega.spectrum();
        if spec.dim() != target.dim() {
            return invalid("strategy operator and target sizes differ");
        }
        if spec.dim() < 2 {
            return invalid("worst case needs at least two dimensions");
        }
        let mut v = spec.eigenvector(1);
        let psi = target.amplitudes();
        let overlap = psi.dotc(&v);
        v -= psi * overlap;
        let norm = v.norm();
        if norm < 1e-8 {
            return Err(Error::Construction("second eigenvector is parallel to the target".into()));
        }
        let v2 = PureState::new(v / Complex64::new(norm, 0.0))?;
        let state = DensityOperator::mixture(&[(1.0 - epsilon, &target.density()), (epsilon, &v2.density())])?;
        Ok(Self { kind: DeviceKind::WorstCase { epsilon }, state })
    }

    /// `(1-p)|ψ⟩⟨ψ| + p I/2ⁿ`.
    pub fn depolarized(target: &PureState, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return invalid(format!("depolarizing strength {p} outside [0, 1]"));
        }
        let mixed = DensityOperator::maximally_mixed(target.num_qubits());
        let state = DensityOperator::mixture(&[(1.0 - p, &target.density()), (p, &mixed)])?;
        Ok(Self { kind: DeviceKind::Depolarized { p }, state })
    }

    pub fn from_density(state: DensityOperator) -> Self {
        Self { kind: DeviceKind::File, state }
    }

    /// Parses a dense matrix given as rows of `[re, im]` pairs, either bare
    /// or under a `matrix` key.
    pub fn from_json(text: &str) -> Result<Self> {
        let rows = match serde_json::from_str::<DensityJson>(text)
            .map_err(|e| Error::Parse(format!("density matrix: {e}")))?
        {
            DensityJson::Wrapped { matrix } | DensityJson::Bare(matrix) => matrix,
        };
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return invalid("density matrix must be square and nonempty");
        }
        let m = Operator::from_fn(d, d, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
        Ok(Self::from_density(DensityOperator::new(m)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn kind(&self) -> DeviceKind {
        self.kind
    }

    pub fn num_qubits(&self) -> usize {
        self.state.num_qubits()
    }

    pub fn emit(&self) -> &DensityOperator {
        &self.state
    }
}

/// Serializes a density matrix as rows of `[re, im]` pairs.
pub fn density_to_json(rho: &DensityOperator) -> String {
    let m = rho.matrix();
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    serde_json::json!({ "matrix": rows }).to_string()
}

//! Stabilizer formalism: Pauli strings, stabilizer groups, composite Pauli
//! measurements and their test operators, stabilizer-basis eigenvalues, and
//! the GHZ gap machinery.

mod gamma;
mod ghz;
mod group;
mod lp;
mod pauli;
mod symplectic;

pub use gamma::{
    ghz_class_probability, ghz_class_size, lp_optimize, uniform_gamma_table, uniform_gap, uniform_weights,
    weighted_gamma, GammaTable, LpOutcome, UniformScheme,
};
pub use ghz::{ghz_counting_check, ghz_equivalence_classes, ghz_gap_table, GhzClass, GhzCountingCheck, GhzGapRow};
pub use group::{StabilizerGroup, StabilizerTarget};
pub use lp::{maximize_packing, LpSolution};
pub use pauli::{Clifford, PauliString};
pub use symplectic::{
    branch_sum_test_operator, general_test_operator, measurement_intersection_size, outcome_projector, r_group,
    stabilizer_basis_diagonal, stabilizer_basis_projector, stabilizer_test_operator, SymplecticVector,
};

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::Operator;
use crate::plm::BinaryTest;

/// Generator tests `(I + g_i)/2`, each chosen with probability `1/k`.
pub fn generator_tests(s: &StabilizerGroup) -> Result<Vec<BinaryTest>> {
    let k = s.generators().len();
    let dim = 1usize << s.num_qubits();
    s.generators()
        .iter()
        .map(|g| {
            let e = (Operator::identity(dim, dim) + g.to_operator()?) * Complex64::new(0.5, 0.0);
            BinaryTest::new(e, 1.0 / k as f64)
        })
        .collect()
}

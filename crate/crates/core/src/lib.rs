//! Quantum state verification toolkit: sequential pass/fail strategies,
//! shadow overlap protocols, stabilizer-formalism gap analysis and a
//! seeded Monte Carlo harness.

pub mod basis;
pub mod cli;
pub mod combinatorics;
pub mod devicesim;
pub mod dpso;
pub mod error;
pub mod hypotest;
pub mod linalg;
pub mod measurement;
pub mod plm;
pub mod rng;
pub mod sop;
pub mod stabilizer;
pub mod target;

pub use error::{Error, Result};

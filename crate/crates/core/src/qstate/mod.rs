//! Dense linear algebra and state functionals for registers of a few qubits.

mod bell;
mod density;
mod entropy;
mod matrix;

pub use bell::{bell_basis, bell_vector, BellDiagonalState};
pub use density::{DensityMatrix, STATE_TOL};
pub use entropy::{
    binary_entropy, purity_and_mixedness, relative_entropy, shannon_entropy, von_neumann_entropy, EIG_CLAMP,
};
pub use matrix::{c, gates, re, ComplexMatrix, C64, ONE, ZERO};

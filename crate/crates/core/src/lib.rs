//! Eigenvalues, eigenstates and spectral analysis of 1D Schrödinger
//! operators with confining superexponential potentials.

// `!(x > y)` is how NaN gets rejected along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops read closer to the matrix algebra they implement
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod band;
pub mod config;
pub mod discretization;
pub mod eigensolver;
pub mod error;
pub mod exec;
pub mod figures;
mod linalg;
pub mod oracles;
pub mod output;
pub mod pipeline;
pub mod potentials;
pub mod runner;
pub mod spectral;
pub mod states;
pub mod sweep;

pub use band::BandMatrix;
pub use discretization::{assemble_hamiltonian, auto_domain, Grid};
pub use eigensolver::{solve_below, solve_lowest, spacing_floor, Spectrum};
pub use error::{Error, Result};
pub use exec::Execution;
pub use potentials::{Family, Potential, PotentialSpec, WellGeometry};

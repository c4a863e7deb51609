//! Simulation of a phase-mismatched degenerate parametric amplifier in a
//! truncated two-mode Fock space.
//!
//! The signal mode `a` couples to the pump `b` through `g(a†²b + a²b†)`. A
//! strongly displaced pump and a large phase mismatch turn this into a
//! quantum nondemolition coupling between the squeezed photon number of the
//! signal and the pump `x` quadrature. The crate builds the Hamiltonians,
//! propagates states, and implements the three applications: photon-number
//! resolving measurement, GKP grid-state preparation and OPO trajectories.

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod gkp;
pub mod linalg;
pub mod opo;
pub mod qnd;
pub mod rng;
pub mod sparse;
pub mod validation;

pub use error::{Error, Result};
pub use sparse::CsrMatrix;

pub type C64 = num_complex::Complex64;

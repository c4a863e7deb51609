//! Hamiltonians and time evolution: unitary propagation, the Lindblad
//! master equation and its diffusive homodyne unraveling.

pub mod hamiltonians;
pub mod master;
pub mod rwa_compare;
pub mod sme;
pub mod unitary;

pub use hamiltonians::{
    build_h_bogoliubov_form, build_h_displaced, build_h_eff, build_h_lab, BogoliubovForm,
    HamiltonianSpec, HamiltonianVariant,
};
pub use master::{evolve_master, liouvillian_superoperator, LindbladChannel, Liouvillian};
pub use rwa_compare::{compare_exact_vs_rwa, RwaComparison};
pub use sme::{evolve_sme_homodyne, SmeObservables, SmeSettings, TrajectoryRecord};
pub use unitary::{evolve_signal_blocks, evolve_unitary, evolve_unitary_steps};

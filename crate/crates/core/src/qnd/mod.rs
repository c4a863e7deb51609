//! Photon-number-resolving QND measurement of the signal Bogoliubov
//! excitation number by pump homodyne detection.

pub mod basis;
pub mod kraus;
pub mod protocol;

pub use basis::{
    basis_transform_sandwich, n_max_for_weights, squeeze_unitary, Sandwich, SandwichInput, SandwichOutput,
    SqueezedNumberBasis,
};
pub use kraus::{
    apply_measurement, kraus_amplitude, kraus_operator, outcome_distribution, povm_element, povm_purity_matrix,
    KrausFamily, QndOutcome,
};
pub use protocol::{run_qnd_protocol, BinSummary, KrausCheck, QndConfig, QndDataset, QndSummary, QndWigner, WignerWindow};

//! Driven, lossy parametric oscillator: stationary pump states per signal
//! level, loss-induced jumps between squeezed photon-number states, and
//! their observation through the pump homodyne record.

pub mod blocks;
pub mod channels;
pub mod requirements;
pub mod trajectories;

pub use blocks::{displacement_matrix, BlockModel, BlockState, PumpFrame, SmeIntegrator};
pub use channels::{
    build_opo_channels, opo_operators, photon_subtraction_action, rwa_lindblad_split, stationary_pump_amplitude,
    stationary_residual, verify_stationary_state, LevelRates, LindbladSplit, OpoChannels, PUMP_HOMODYNE_THETA,
};
pub use requirements::{feasibility_check, jump_exponent, jump_probability, pump_width_decay, FeasibilityReport};
pub use trajectories::{
    analyze_trajectory, detect_plateaus, run_opo_trajectories, EnsembleComparison, FullOpoModel, Jump, OpoConfig,
    OpoRun, OpoSummary, Plateau, PlateauDetector, SignalLoss, TrajectoryAnalysis,
};

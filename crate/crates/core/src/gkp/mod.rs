//! Grid-state preparation by a modular measurement of the pump `x`
//! quadrature. The pump is represented on a uniform `x` grid; `H_eff` is
//! diagonal there, so evolution and readout are exact up to sampling.

pub mod generaldyne;
pub mod metrics;
pub mod protocol;
pub mod target;
pub mod wavefunction;

pub use generaldyne::{
    completeness_at, generaldyne_c_amplitude, generaldyne_c_approx, generaldyne_kraus, outcome_density,
    sample_outcomes, AmplitudeModel, GeneralDyneKraus, GeneralDyneOutcome, MeterParams,
};
pub use metrics::{
    comb_locality, effective_squeezing_db, fit_teeth, stabilizer_expectations, stabilizer_width, EffectiveSqueezing,
    MarginalTeeth, ToothFit,
};
pub use protocol::{
    evolve_and_project, feedforward_displacement, kraus_pathway, meter_coefficients, run_gkp_protocol,
    squeezed_pump_wavefunction, Feedforward, GkpConfig, GkpDataset, GkpReport, GkpWignerWindow,
};
pub use target::{analytic_gkp_state, analytic_gkp_wavefunction, gkp_spacing, kappa_for, symmetric_a0, GkpTarget};
pub use wavefunction::{GridSpec, PumpWavefunction};

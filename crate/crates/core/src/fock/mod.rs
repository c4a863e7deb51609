//! Truncated two-mode Fock space: signal mode `a` and pump mode `b`.
//!
//! Quadratures are `x = (a + a†)/2` and `p = (a − a†)/2i`, so the vacuum has
//! `Var(x) = Var(p) = 1/4` and quadrature width `w₀ = 1/2`. Joint vectors are
//! indexed `i_signal · n_pump + i_pump`.

pub mod metrics;
pub mod operators;
pub mod params;
pub mod quadrature;
pub mod states;
pub mod wigner;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use metrics::DensityMatrix;
pub use operators::{make_operators, make_operators_in, ActsOn, LadderOps, ModeOperator, Operators};
pub use params::{bogoliubov_params, params_from_targets, BogoliubovParams, SystemParams};
pub use quadrature::{Grid, Quadrature};
pub use states::{Ket, TwoModeState};

/// Vacuum quadrature standard deviation.
pub const VACUUM_WIDTH: f64 = 0.5;

/// Vacuum quadrature variance.
pub const VACUUM_VARIANCE: f64 = 0.25;

/// Default bound on the top-level population of any produced state.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-8;

/// Squeezing of a quadrature with standard deviation `width`, positive when
/// the width is below the vacuum value.
pub fn squeezing_db(width: f64) -> f64 {
    -20.0 * (width / VACUUM_WIDTH).log10()
}

/// Inverse of [`squeezing_db`].
pub fn width_from_db(db: f64) -> f64 {
    VACUUM_WIDTH * 10f64.powf(-db / 20.0)
}

/// Noise of a quadrature variance relative to vacuum, negative when squeezed.
pub fn noise_db(variance: f64) -> f64 {
    10.0 * (variance / VACUUM_VARIANCE).log10()
}

/// Which representation the signal-mode vectors are expanded in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SignalBasis {
    /// Bare photon-number states `|n⟩`.
    Fock,
    /// Squeezed photon-number states `|N_a⟩`, eigenstates of `Â†Â` for the
    /// given squeeze parameter. `Â` is then the exact truncated lowering
    /// operator and `a = cosh u·Â − sinh u·Â†`.
    Bogoliubov { u: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeSpace {
    pub n_signal: usize,
    pub n_pump: usize,
}

impl ModeSpace {
    pub fn new(n_signal: usize, n_pump: usize) -> Result<Self> {
        if n_signal < 2 {
            return Err(Error::Dimension(n_signal));
        }
        if n_pump < 2 {
            return Err(Error::Dimension(n_pump));
        }
        Ok(Self { n_signal, n_pump })
    }

    pub fn dim(&self) -> usize {
        self.n_signal * self.n_pump
    }

    pub fn index(&self, signal: usize, pump: usize) -> usize {
        signal * self.n_pump + pump
    }
}

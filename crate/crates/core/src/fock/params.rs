use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Derived quantities of the Bogoliubov diagonalisation of the quadratic
/// part `δ a†a + (r/2)(a†² + a²) = Δ Â†Â + const`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovParams {
    /// Bogoliubov frequency `Δ = √(δ² − r²)`.
    pub big_delta: f64,
    /// Squeeze parameter `u = ½ atanh(r/δ)`.
    pub u: f64,
    /// Enhanced coupling `g̃ = g sinh 2u`.
    pub g_tilde: f64,
}

impl BogoliubovParams {
    pub fn cosh_u(&self) -> f64 {
        self.u.cosh()
    }

    pub fn sinh_u(&self) -> f64 {
        self.u.sinh()
    }
}

pub fn bogoliubov_params(delta: f64, r: f64, g: f64) -> Result<BogoliubovParams> {
    if !(delta.is_finite() && r.is_finite()) || r < 0.0 || delta <= r {
        return Err(Error::BogoliubovDomain { delta, r });
    }
    let big_delta = (delta * delta - r * r).sqrt();
    let u = 0.5 * (r / delta).atanh();
    Ok(BogoliubovParams {
        big_delta,
        u,
        g_tilde: g * (2.0 * u).sinh(),
    })
}

/// Inverts the targets `(Δ, g̃)` into the Hamiltonian
/// parameters `(δ, r)`.
pub fn params_from_targets(big_delta: f64, g_tilde: f64, g: f64) -> Result<(f64, f64)> {
    if !(big_delta > 0.0) || !(g_tilde >= 0.0) || !(g > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "targets require Δ > 0, g̃ >= 0, g > 0 (got Δ = {big_delta}, g̃ = {g_tilde}, g = {g})"
        )));
    }
    let sinh_2u = g_tilde / g;
    let cosh_2u = (1.0 + sinh_2u * sinh_2u).sqrt();
    let delta = big_delta * cosh_2u;
    let r = big_delta * sinh_2u;
    if !(delta.is_finite() && r.is_finite()) {
        return Err(Error::Numerical("target inversion overflowed".into()));
    }
    Ok((delta, r))
}

/// Physical parameters in units where the bare coupling sets the time scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Nonlinear coupling rate.
    pub g: f64,
    /// Phase mismatch δ.
    pub delta: f64,
    /// Real pump displacement β defining the displaced frame.
    pub beta: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    /// Pump drive rate λ.
    pub lambda: f64,
}

impl SystemParams {
    pub fn new(g: f64, delta: f64, beta: f64) -> Self {
        Self {
            g,
            delta,
            beta,
            kappa_a: 0.0,
            kappa_b: 0.0,
            lambda: 0.0,
        }
    }

    /// Parameters realising the given `(Δ, g̃)`; β follows from `r = 2gβ`.
    pub fn from_targets(big_delta: f64, g_tilde: f64, g: f64) -> Result<Self> {
        let (delta, r) = params_from_targets(big_delta, g_tilde, g)?;
        Ok(Self::new(g, delta, r / (2.0 * g)))
    }

    pub fn with_losses(mut self, kappa_a: f64, kappa_b: f64) -> Self {
        self.kappa_a = kappa_a;
        self.kappa_b = kappa_b;
        self
    }

    /// `r = 2gβ`.
    pub fn r(&self) -> f64 {
        2.0 * self.g * self.beta
    }

    pub fn bogoliubov(&self) -> Result<BogoliubovParams> {
        bogoliubov_params(self.delta, self.r(), self.g)
    }

    /// Drive rate that cancels the displaced pump loss: `λ = κ_b β / 2`.
    pub fn balanced_drive(&self) -> f64 {
        0.5 * self.kappa_b * self.beta
    }
}

//! Loss budget of the photon-number measurement: jump probability of a
//! squeezed single photon, pump-width broadening, and the resulting
//! coupling requirement `g/κ_a ≳ w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::VACUUM_WIDTH;

/// `3 cosh²u − 2`, the decay exponent of `|N_a = 1⟩` in units of `κ_a`.
pub fn jump_exponent(u: f64) -> f64 {
    3.0 * u.cosh().powi(2) - 2.0
}

/// `1 − e^{−κ_a (3cosh²u − 2) t}`.
pub fn jump_probability(u: f64, kappa_a: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !(kappa_a >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "jump probability needs t >= 0 and κ_a >= 0 (t = {t}, κ_a = {kappa_a})"
        )));
    }
    Ok(-(-kappa_a * jump_exponent(u) * t).exp_m1())
}

/// `√(w² e^{−κ_b t} + (1 − e^{−κ_b t})/4)`: a `p` width `w` relaxing
/// towards vacuum under pump loss.
pub fn pump_width_decay(w: f64, kappa_b: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !(kappa_b >= 0.0) || !(w > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "pump width decay needs w > 0, κ_b >= 0, t >= 0 (w = {w}, κ_b = {kappa_b}, t = {t})"
        )));
    }
    let decay = (-kappa_b * t).exp();
    Ok((w * w * decay - 0.25 * (-kappa_b * t).exp_m1()).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub u: f64,
    pub w: f64,
    pub g_over_kappa_a: f64,
    /// Order-of-magnitude jump time `1/(cosh²u κ_a)`.
    pub t_jump: f64,
    /// Exact decay exponent `3cosh²u − 2` of `|N_a = 1⟩`.
    pub jump_exponent: f64,
    pub pump_width_at_t_jump: f64,
    /// `g̃ t_jump / w′(t_jump)` with `g̃ = g sinh 2u`.
    pub displacement_ratio: f64,
    /// `(g/κ_a)/w`; the requirement holds when this is at least one.
    pub headline_ratio: f64,
    /// Reduction of the coupling requirement relative to a vacuum pump,
    /// `w₀/w`.
    pub relaxation_factor: f64,
    pub pass: bool,
}

/// Coupling requirement `g/κ_a ≳ w` for pump width `w` and signal squeeze `u`.
pub fn feasibility_check(g: f64, kappa_a: f64, kappa_b: f64, w: f64, u: f64) -> Result<FeasibilityReport> {
    if !(g > 0.0) || !(kappa_a > 0.0) || !(kappa_b > 0.0) || !(w > 0.0) || !(u >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "feasibility needs positive rates and width (g = {g}, κ_a = {kappa_a}, κ_b = {kappa_b}, w = {w}, u = {u})"
        )));
    }
    let t_jump = 1.0 / (u.cosh().powi(2) * kappa_a);
    let w_jump = pump_width_decay(w, kappa_b, t_jump)?;
    let g_tilde = g * (2.0 * u).sinh();
    let headline_ratio = g / kappa_a / w;
    Ok(FeasibilityReport {
        u,
        w,
        g_over_kappa_a: g / kappa_a,
        t_jump,
        jump_exponent: jump_exponent(u),
        pump_width_at_t_jump: w_jump,
        displacement_ratio: g_tilde * t_jump / w_jump,
        headline_ratio,
        relaxation_factor: VACUUM_WIDTH / w,
        pass: headline_ratio >= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unsqueezed_jump_is_bare_loss() {
        let p = jump_probability(0.0, 0.5, 0.3).unwrap();
        assert!((p - (1.0 - (-0.15f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn width_limits() {
        assert!((pump_width_decay(0.1, 2.0, 0.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((pump_width_decay(0.1, 2.0, 50.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(jump_probability(0.1, 1.0, -1.0).is_err());
        assert!(pump_width_decay(0.0, 1.0, 1.0).is_err());
        assert!(feasibility_check(1.0, 0.0, 1.0, 0.1, 0.5).is_err());
    }
}

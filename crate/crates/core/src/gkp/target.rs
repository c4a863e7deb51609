//! Approximate GKP logical state `|0̃⟩ ∝ Σ_n c_n D(n√(2π))|κ⟩` with a
//! Gaussian envelope inherited from the pump.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::wavefunction::PumpWavefunction;
use crate::error::{Error, Result};
use crate::fock::quadrature::Grid;
use crate::fock::states::Ket;
use crate::C64;

/// Lattice spacing of the square code, `√(2π)`.
pub fn gkp_spacing() -> f64 {
    (2.0 * PI).sqrt()
}

/// Teeth whose probability weight `e^{−8w²x_n²}` falls below this are dropped.
pub const TOOTH_WEIGHT_CUTOFF: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GkpTarget {
    /// Pump `p` width, which sets the envelope.
    pub w: f64,
    /// Tooth `x` width `1/(2√π A₀)`.
    pub kappa: f64,
    pub a0: f64,
    pub spacing: f64,
    /// Envelope centre offset: tooth `n` has amplitude `e^{−4w²(n√(2π) + x_φ)²}`.
    pub x_phi: f64,
}

impl GkpTarget {
    pub fn new(w: f64, a0: f64, x_phi: f64) -> Result<Self> {
        if !(w > 0.0) || !(a0 > 0.0) || !w.is_finite() || !a0.is_finite() || !x_phi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "GKP target needs w > 0 and A₀ > 0 (w = {w}, A₀ = {a0})"
            )));
        }
        Ok(Self {
            w,
            kappa: kappa_for(a0),
            a0,
            spacing: gkp_spacing(),
            x_phi,
        })
    }

    /// Target with `κ = w`.
    pub fn symmetric(w: f64, x_phi: f64) -> Result<Self> {
        Self::new(w, symmetric_a0(w), x_phi)
    }

    pub fn is_symmetric(&self) -> bool {
        (self.w - self.kappa).abs() <= 1e-6
    }

    /// Envelope amplitude of tooth `n`. The pump's `x` wavefunction is
    /// `∝ e^{−4w²x²}` for `p` width `w`.
    pub fn envelope(&self, n: i64) -> f64 {
        let x = n as f64 * self.spacing + self.x_phi;
        (-4.0 * self.w * self.w * x * x).exp()
    }

    /// Tooth indices whose weight `envelope(n)²` is at least
    /// [`TOOTH_WEIGHT_CUTOFF`].
    pub fn teeth(&self) -> Vec<i64> {
        let reach = (-TOOTH_WEIGHT_CUTOFF.ln() / 8.0).sqrt() / self.w;
        let lo = ((-reach - self.x_phi) / self.spacing).floor() as i64;
        let hi = ((reach - self.x_phi) / self.spacing).ceil() as i64;
        (lo..=hi).filter(|&n| self.envelope(n).powi(2) >= TOOTH_WEIGHT_CUTOFF).collect()
    }

    /// Unnormalised `⟨x|0̃⟩`.
    pub fn amplitude(&self, x: f64, teeth: &[i64]) -> f64 {
        let k2 = 4.0 * self.kappa * self.kappa;
        teeth
            .iter()
            .map(|&n| {
                let d = x - n as f64 * self.spacing;
                self.envelope(n) * (-d * d / k2).exp()
            })
            .sum()
    }
}

/// `κ = 1/(2√π A₀)`.
pub fn kappa_for(a0: f64) -> f64 {
    1.0 / (2.0 * PI.sqrt() * a0)
}

/// Meter amplitude giving `κ = w`: `A₀ = 1/(2√π w)`.
pub fn symmetric_a0(w: f64) -> f64 {
    1.0 / (2.0 * PI.sqrt() * w)
}

/// `|0̃⟩` sampled on `grid` and normalised. Fails if any retained tooth lies
/// within five tooth widths of the grid edge.
pub fn analytic_gkp_wavefunction(target: &GkpTarget, grid: &Grid) -> Result<PumpWavefunction> {
    let teeth = target.teeth();
    let margin = 5.0 * target.kappa;
    let (lo, hi) = (
        teeth.first().copied().unwrap_or(0) as f64 * target.spacing,
        teeth.last().copied().unwrap_or(0) as f64 * target.spacing,
    );
    if lo - margin < grid.min || hi + margin > grid.max() {
        return Err(Error::Grid(format!(
            "comb spans [{lo:.2}, {hi:.2}] but the grid is [{:.2}, {:.2}]",
            grid.min,
            grid.max()
        )));
    }
    if grid.step > target.kappa / 5.0 {
        return Err(Error::Grid(format!(
            "x step {} does not resolve teeth of width {:.4}",
            grid.step, target.kappa
        )));
    }
    PumpWavefunction::from_fn(*grid, |x| C64::new(target.amplitude(x, &teeth), 0.0)).normalized()
}

/// `|0̃⟩` in `dim` Fock levels, projected from a grid sample. Fails when the
/// truncation misses more than `tol` of the norm.
pub fn analytic_gkp_state(target: &GkpTarget, grid: &Grid, dim: usize, tol: f64) -> Result<Ket> {
    let psi = analytic_gkp_wavefunction(target, grid)?;
    psi.to_ket(dim, tol)?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::squeezing_db;

    #[test]
    fn symmetric_target_at_fifteen_db() {
        let w = crate::fock::width_from_db(15.0);
        let t = GkpTarget::symmetric(w, 0.0).unwrap();
        assert!(t.is_symmetric());
        assert!((t.a0 - 3.17264).abs() < 1e-4, "{}", t.a0);
        assert!((squeezing_db(t.kappa) - 15.0).abs() < 1e-9);
        let teeth = t.teeth();
        assert_eq!((teeth[0], *teeth.last().unwrap()), (-7, 7));
    }

    #[test]
    fn asymmetric_target_is_flagged() {
        let t = GkpTarget::new(0.1, 3.0, 0.0).unwrap();
        assert!(!t.is_symmetric());
    }

    #[test]
    fn single_tooth_limit_is_a_squeezed_vacuum() {
        let t = GkpTarget::new(1.5, 2.0, 0.0).unwrap();
        let g = Grid::new(-6.0, 6.0, 0.005).unwrap();
        let comb = analytic_gkp_wavefunction(&t, &g).unwrap();
        let k = t.kappa;
        let single = PumpWavefunction::from_fn(g, |x| C64::new((-x * x / (4.0 * k * k)).exp(), 0.0));
        assert!(comb.fidelity(&single).unwrap() > 0.99);
    }

    #[test]
    fn small_grid_is_rejected() {
        let t = GkpTarget::symmetric(0.0889, 0.0).unwrap();
        let g = Grid::new(-5.0, 5.0, 0.01).unwrap();
        assert!(matches!(analytic_gkp_wavefunction(&t, &g), Err(Error::Grid(_))));
    }
}

//! Effective squeezing of grid states, from stabilizer expectations and from
//! Gaussian fits to the comb teeth of each marginal.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::target::gkp_spacing;
use super::wavefunction::PumpWavefunction;
use crate::error::{Error, Result};
use crate::fock::quadrature::Grid;
use crate::fock::squeezing_db;
use crate::C64;

/// Teeth with peak density below this fraction of the highest peak are
/// ignored by the fits.
const TOOTH_PEAK_FRACTION: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToothFit {
    pub center: f64,
    /// Standard deviation of the fitted Gaussian.
    pub width: f64,
    /// `√(2π)·peak·width`, the area of the fitted Gaussian.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalTeeth {
    pub teeth: Vec<ToothFit>,
    /// Weight-averaged tooth width.
    pub mean_width: f64,
    /// Median distance between neighbouring fitted centres; `None` for a
    /// single tooth.
    pub spacing: Option<f64>,
}

/// Fits a Gaussian to every local maximum of `density` by least squares on
/// `ln density` over the contiguous points above half the peak.
pub fn fit_teeth(grid: &Grid, density: &[f64]) -> Result<MarginalTeeth> {
    if density.len() != grid.len {
        return Err(Error::DimensionMismatch {
            expected: grid.len,
            found: density.len(),
        });
    }
    let top = density.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(Error::Undefined("marginal vanishes everywhere".into()));
    }
    let n = density.len();
    let mut teeth = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let v = density[i];
        if v < TOOTH_PEAK_FRACTION * top || v < density[i - 1] || v <= density[i + 1] {
            continue;
        }
        let half = 0.5 * v;
        let mut lo = i;
        while lo > 0 && density[lo - 1] >= half && density[lo - 1] <= density[lo] {
            lo -= 1;
        }
        let mut hi = i;
        while hi + 1 < n && density[hi + 1] >= half && density[hi + 1] <= density[hi] {
            hi += 1;
        }
        if hi - lo < 2 {
            return Err(Error::Grid(format!(
                "tooth at x = {:.4} spans fewer than three grid points",
                grid.point(i)
            )));
        }
        if let Some(fit) = fit_log_parabola(grid, density, lo, hi, grid.point(i)) {
            teeth.push(fit);
        }
    }
    if teeth.is_empty() {
        return Err(Error::Undefined("no Gaussian tooth could be fitted".into()));
    }
    let total: f64 = teeth.iter().map(|t| t.weight).sum();
    let mean_width = teeth.iter().map(|t| t.weight * t.width).sum::<f64>() / total;
    let spacing = if teeth.len() > 1 {
        let mut gaps: Vec<f64> = teeth.windows(2).map(|p| p[1].center - p[0].center).collect();
        gaps.sort_by(|a, b| a.total_cmp(b));
        Some(gaps[gaps.len() / 2])
    } else {
        None
    };
    Ok(MarginalTeeth {
        teeth,
        mean_width,
        spacing,
    })
}

/// Least-squares `ln d = c₀ + c₁ y + c₂ y²` with `y = x − origin`.
fn fit_log_parabola(grid: &Grid, density: &[f64], lo: usize, hi: usize, origin: f64) -> Option<ToothFit> {
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for (i, &d) in density.iter().enumerate().take(hi + 1).skip(lo) {
        let y = grid.point(i) - origin;
        let l = d.ln();
        let mut yk = 1.0;
        for k in 0..5 {
            s[k] += yk;
            if k < 3 {
                t[k] += yk * l;
            }
            yk *= y;
        }
    }
    let m = nalgebra::Matrix3::new(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
    let c = m.lu().solve(&nalgebra::Vector3::new(t[0], t[1], t[2]))?;
    if !(c[2] < 0.0) {
        return None;
    }
    let var = -1.0 / (2.0 * c[2]);
    let shift = c[1] * var;
    let peak = (c[0] + 0.5 * c[1] * shift).exp();
    let width = var.sqrt();
    Some(ToothFit {
        center: origin + shift,
        width,
        weight: (2.0 * PI).sqrt() * peak * width,
    })
}

/// Stabilizer expectations `⟨D(i√(2π))⟩ = ⟨e^{2i√(2π)x}⟩` and
/// `⟨D(√(2π))⟩ = ⟨e^{−2i√(2π)p}⟩` of a normalised state.
pub fn stabilizer_expectations(state: &PumpWavefunction, p_grid: &Grid) -> Result<(C64, C64)> {
    let k = 2.0 * gkp_spacing();
    let nx = state.norm_sqr();
    let sx = state
        .psi
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm_sqr() * C64::from_polar(1.0, k * state.grid.point(i)))
        .sum::<C64>()
        * state.grid.step
        / nx;
    let psi_p = state.to_p(p_grid);
    let np: f64 = psi_p.iter().map(|c| c.norm_sqr()).sum::<f64>() * p_grid.step;
    if (np - nx).abs() > 1e-6 * nx {
        return Err(Error::Grid(format!(
            "momentum grid holds {np:.8} of norm {nx:.8}"
        )));
    }
    let sp = psi_p
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm_sqr() * C64::from_polar(1.0, -k * p_grid.point(i)))
        .sum::<C64>()
        * p_grid.step
        / np;
    Ok((sx, sp))
}

/// Tooth width implied by a stabilizer magnitude, `σ² = −ln|⟨S⟩| / 4π`,
/// which is exact for Gaussian teeth.
pub fn stabilizer_width(magnitude: f64) -> Option<f64> {
    if !(magnitude > 1e-12) || magnitude > 1.0 {
        return None;
    }
    Some((-magnitude.ln() / (4.0 * PI)).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSqueezing {
    pub stabilizer_x: C64,
    pub stabilizer_p: C64,
    /// From `|⟨D(i√(2π))⟩|`; `None` when the expectation vanishes.
    pub modular_db_x: Option<f64>,
    /// From `|⟨D(√(2π))⟩|`; `None` when the expectation vanishes.
    pub modular_db_p: Option<f64>,
    pub tooth_db_x: f64,
    pub tooth_db_p: f64,
    pub x_teeth: MarginalTeeth,
    pub p_teeth: MarginalTeeth,
}

/// Both squeezing metrics of a pump state; `p_grid` must resolve its
/// momentum representation.
pub fn effective_squeezing_db(state: &PumpWavefunction, p_grid: &Grid) -> Result<EffectiveSqueezing> {
    let (sx, sp) = stabilizer_expectations(state, p_grid)?;
    let x_teeth = fit_teeth(&state.grid, &state.density())?;
    let p_density: Vec<f64> = state.to_p(p_grid).iter().map(|c| c.norm_sqr()).collect();
    let p_teeth = fit_teeth(p_grid, &p_density)?;
    let db = |w: Option<f64>| w.map(squeezing_db);
    Ok(EffectiveSqueezing {
        stabilizer_x: sx,
        stabilizer_p: sp,
        modular_db_x: db(stabilizer_width(sx.norm())),
        modular_db_p: db(stabilizer_width(sp.norm())),
        tooth_db_x: squeezing_db(x_teeth.mean_width),
        tooth_db_p: squeezing_db(p_teeth.mean_width),
        x_teeth,
        p_teeth,
    })
}

/// Fraction of the `x` density within `half_width` of the lattice
/// `offset + nμ`.
pub fn comb_locality(state: &PumpWavefunction, offset: f64, mu: f64, half_width: f64) -> f64 {
    let total = state.norm_sqr();
    let inside: f64 = state
        .psi
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let d = (state.grid.point(*i) - offset).rem_euclid(mu);
            d.min(mu - d) <= half_width
        })
        .map(|(_, c)| c.norm_sqr())
        .sum::<f64>()
        * state.grid.step;
    inside / total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_gaussian_fit_is_exact() {
        let g = Grid::new(-5.0, 5.0, 0.01).unwrap();
        let d: Vec<f64> = g
            .points()
            .iter()
            .map(|x| (-(x - 0.37f64).powi(2) / (2.0 * 0.3 * 0.3)).exp() * 2.0)
            .collect();
        let fit = fit_teeth(&g, &d).unwrap();
        assert_eq!(fit.teeth.len(), 1);
        assert!((fit.mean_width - 0.3).abs() < 1e-10);
        assert!((fit.teeth[0].center - 0.37).abs() < 1e-10);
        assert!(fit.spacing.is_none());
    }

    #[test]
    fn vacuum_is_zero_db_by_both_tooth_fits() {
        let g = Grid::new(-6.0, 6.0, 0.01).unwrap();
        let p = Grid::new(-6.0, 6.0, 0.01).unwrap();
        let vac = PumpWavefunction::from_fn(g, |x| C64::new((-x * x).exp(), 0.0)).normalized().unwrap();
        let s = effective_squeezing_db(&vac, &p).unwrap();
        assert!(s.tooth_db_x.abs() < 1e-6 && s.tooth_db_p.abs() < 1e-6, "{s:?}");
    }

    #[test]
    fn stabilizer_width_round_trip() {
        for s in [0.05, 0.0889, 0.3] {
            let m = (-4.0 * PI * s * s).exp();
            assert!((stabilizer_width(m).unwrap() - s).abs() < 1e-14);
        }
        assert!(stabilizer_width(0.0).is_none());
    }
}

//! General-dyne readout of the signal phase. Under `H_eff` the Bogoliubov
//! amplitude rotates as `Â(t) = e^{i(2g̃t x_b − Δt)} Â(0)`, so projecting the
//! signal onto `|e^{iφ}(A₀+ε)⟩` measures `x_b` modulo `μ = π/g̃t`.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::wavefunction::PumpWavefunction;
use crate::error::{Error, Result};
use crate::fock::quadrature::Grid;
use crate::rng::seed_policy;
use crate::C64;

/// Meter amplitude and interaction settings shared by a family of outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeterParams {
    /// Initial Bogoliubov coherent amplitude `A₀ > 0`.
    pub a0: f64,
    pub g_tilde_t: f64,
    pub delta_t: f64,
}

impl MeterParams {
    pub fn new(a0: f64, g_tilde_t: f64, delta_t: f64) -> Result<Self> {
        if !(a0 > 0.0) || !a0.is_finite() {
            return Err(Error::InvalidParameter(format!("meter amplitude must be positive, got {a0}")));
        }
        if !(g_tilde_t > 0.0) || !g_tilde_t.is_finite() {
            return Err(Error::InvalidParameter(format!("g̃t must be positive, got {g_tilde_t}")));
        }
        if !delta_t.is_finite() {
            return Err(Error::InvalidParameter(format!("Δt must be finite, got {delta_t}")));
        }
        Ok(Self { a0, g_tilde_t, delta_t })
    }

    pub fn modulus(&self) -> f64 {
        PI / self.g_tilde_t
    }

    /// Standard deviation of one comb tooth of `|C_x|²` at `ε = 0`,
    /// `1/(2√2 A₀ g̃t)`; equals `1/(2√π A₀)` at `g̃t = √(π/2)`.
    pub fn tooth_width(&self) -> f64 {
        1.0 / (2.0 * 2f64.sqrt() * self.a0 * self.g_tilde_t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralDyneOutcome {
    pub epsilon: f64,
    pub phi: f64,
    /// `(φ + Δt)/(2g̃t) mod μ`, in `[0, μ)`.
    pub x_phi: f64,
    pub mu: f64,
}

impl GeneralDyneOutcome {
    pub fn new(epsilon: f64, phi: f64, meter: &MeterParams) -> Result<Self> {
        if meter.a0 + epsilon < 0.0 || !epsilon.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "outcome radius A₀ + ε = {} must be non-negative",
                meter.a0 + epsilon
            )));
        }
        let mu = meter.modulus();
        let x_phi = ((phi + meter.delta_t) / (2.0 * meter.g_tilde_t)).rem_euclid(mu);
        // rem_euclid can round up to exactly μ.
        let x_phi = if x_phi >= mu { 0.0 } else { x_phi };
        Ok(Self { epsilon, phi, x_phi, mu })
    }

    pub fn radius(&self, meter: &MeterParams) -> f64 {
        meter.a0 + self.epsilon
    }
}

/// `C = exp{−½(A₀² + (A₀+ε)² − 2A₀(A₀+ε) e^{i(2g̃t x_b − Δt − φ)})}`, the
/// overlap `⟨e^{iφ}(A₀+ε)|e^{i(2g̃t x_b − Δt)}A₀⟩` of Bogoliubov coherent states.
pub fn generaldyne_c_amplitude(x_b: f64, epsilon: f64, phi: f64, a0: f64, g_tilde_t: f64, delta_t: f64) -> C64 {
    let r = a0 + epsilon;
    let rot = C64::from_polar(1.0, 2.0 * g_tilde_t * x_b - delta_t - phi);
    (C64::new(-0.5 * (a0 * a0 + r * r), 0.0) + rot * (a0 * r)).exp()
}

/// Comb approximation of [`generaldyne_c_amplitude`] for `|ε| ≪ A₀`:
/// `Σ_n exp{−2A₀²(g̃t)²(x_b − x_n − x_φ)²} exp{2iA₀²g̃t(x_b − x_n − x_φ)}`.
pub fn generaldyne_c_approx(x_b: f64, outcome: &GeneralDyneOutcome, meter: &MeterParams) -> C64 {
    let (a2, gt, mu) = (meter.a0 * meter.a0, meter.g_tilde_t, outcome.mu);
    let n0 = ((x_b - outcome.x_phi) / mu).round() as i64;
    // Teeth more than three periods away contribute below e^{−18π²A₀²}.
    (n0 - 3..=n0 + 3)
        .map(|n| {
            let d = x_b - n as f64 * mu - outcome.x_phi;
            C64::from_polar((-2.0 * a2 * gt * gt * d * d).exp(), 2.0 * a2 * gt * d)
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeModel {
    /// Exact coherent-state overlap.
    Exact,
    /// Gaussian comb valid for `|ε| ≪ A₀`.
    Approximate,
}

/// Diagonal Kraus operator `M(ε, φ) = √((A₀+ε)/π) ∫dx C_x(ε, φ)|x⟩⟨x|` on a
/// pump grid. With the square root, `‖Mψ‖²` is the outcome density with
/// respect to `dε dφ` and `∫ M†M dε dφ = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralDyneKraus {
    pub outcome: GeneralDyneOutcome,
    pub meter: MeterParams,
    pub model: AmplitudeModel,
    pub grid: Grid,
    pub diagonal: Vec<C64>,
}

impl GeneralDyneKraus {
    pub fn apply(&self, psi: &PumpWavefunction) -> Result<PumpWavefunction> {
        if psi.grid != self.grid {
            return Err(Error::Grid("Kraus operator and state use different grids".into()));
        }
        let out = psi.psi.iter().zip(&self.diagonal).map(|(a, m)| a * m).collect();
        PumpWavefunction::new(self.grid, out)
    }

    /// Outcome density `p(ε, φ) = ‖Mψ‖²` per unit `dε dφ`.
    pub fn probability_density(&self, psi: &PumpWavefunction) -> Result<f64> {
        if psi.grid != self.grid {
            return Err(Error::Grid("Kraus operator and state use different grids".into()));
        }
        Ok(psi
            .psi
            .iter()
            .zip(&self.diagonal)
            .map(|(a, m)| (a * m).norm_sqr())
            .sum::<f64>()
            * self.grid.step)
    }
}

/// Kraus operator of one outcome sampled on `grid`, which must resolve the
/// comb teeth with at least five points per standard deviation.
pub fn generaldyne_kraus(
    outcome: &GeneralDyneOutcome,
    meter: &MeterParams,
    grid: &Grid,
    model: AmplitudeModel,
) -> Result<GeneralDyneKraus> {
    let width = meter.tooth_width() * (meter.a0 / outcome.radius(meter).max(1e-12)).sqrt().min(1.0);
    if grid.step > width / 5.0 {
        return Err(Error::Grid(format!(
            "x step {} does not resolve comb teeth of width {width:.4}",
            grid.step
        )));
    }
    if grid.max() - grid.min < 2.0 * outcome.mu {
        return Err(Error::Grid(format!(
            "x grid spans less than two comb periods of {:.4}",
            outcome.mu
        )));
    }
    let scale = (outcome.radius(meter) / PI).sqrt();
    let diagonal = (0..grid.len)
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let c = match model {
                AmplitudeModel::Exact => generaldyne_c_amplitude(
                    x,
                    outcome.epsilon,
                    outcome.phi,
                    meter.a0,
                    meter.g_tilde_t,
                    meter.delta_t,
                ),
                AmplitudeModel::Approximate => generaldyne_c_approx(x, outcome, meter),
            };
            c * scale
        })
        .collect();
    Ok(GeneralDyneKraus {
        outcome: *outcome,
        meter: *meter,
        model,
        grid: *grid,
        diagonal,
    })
}

/// `p(ε, φ) = (A₀+ε)/π ∫ |C_x|² |ψ(x)|² dx` for a pump state with `x`
/// density `density` on `grid`.
pub fn outcome_density(epsilon: f64, phi: f64, meter: &MeterParams, grid: &Grid, density: &[f64]) -> f64 {
    let r = meter.a0 + epsilon;
    if r < 0.0 {
        return 0.0;
    }
    let s: f64 = density
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let c = generaldyne_c_amplitude(grid.point(i), epsilon, phi, meter.a0, meter.g_tilde_t, meter.delta_t);
            c.norm_sqr() * d
        })
        .sum();
    s * grid.step * r / PI
}

/// `Σ (A₀+ε)/π |C_x(ε, φ)|² δε δφ` over a uniform outcome grid with
/// `ε ∈ [−A₀, ε_max]`; tends to 1 for every `x`.
pub fn completeness_at(x_b: f64, meter: &MeterParams, epsilon_max: f64, n_eps: usize, n_phi: usize) -> f64 {
    let de = (epsilon_max + meter.a0) / n_eps as f64;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut acc = 0.0;
    for i in 0..n_eps {
        let eps = -meter.a0 + (i as f64 + 0.5) * de;
        for j in 0..n_phi {
            let phi = j as f64 * dphi;
            let c = generaldyne_c_amplitude(x_b, eps, phi, meter.a0, meter.g_tilde_t, meter.delta_t);
            acc += (meter.a0 + eps) / PI * c.norm_sqr();
        }
    }
    acc * de * dphi
}

/// Box `ε ∈ [max(−A₀, −w), w]`, `φ ∈ [0, 2π)` used for sampling.
const SAMPLING_HALF_WIDTH: f64 = 7.0;

/// Draws outcomes from the exact density by rejection sampling. Sample `k`
/// uses the stream `(seed, k)`, so results do not depend on thread count.
pub fn sample_outcomes(
    meter: &MeterParams,
    state: &PumpWavefunction,
    count: usize,
    seed: u64,
) -> Result<Vec<GeneralDyneOutcome>> {
    let density = state.normalized_density()?;
    let grid = state.grid;
    let lo = (-meter.a0).max(-SAMPLING_HALF_WIDTH);
    let hi = SAMPLING_HALF_WIDTH;
    let probe = 64;
    let peak = (0..probe * probe)
        .into_par_iter()
        .map(|k| {
            let eps = lo + (hi - lo) * (k / probe) as f64 / (probe - 1) as f64;
            let phi = 2.0 * PI * (k % probe) as f64 / probe as f64;
            outcome_density(eps, phi, meter, &grid, &density)
        })
        .reduce(|| 0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::ZeroProbability("outcome density vanishes on the sampling box".into()));
    }
    let bound = 2.0 * peak;
    (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed_policy(seed, k as u64);
            for _ in 0..1_000_000 {
                let eps = rng.gen_range(lo..hi);
                let phi = rng.gen_range(0.0..2.0 * PI);
                let p = outcome_density(eps, phi, meter, &grid, &density);
                if p > bound {
                    return Err(Error::Numerical(format!(
                        "outcome density {p:.4e} exceeds the sampling bound {bound:.4e}"
                    )));
                }
                if rng.gen::<f64>() * bound < p {
                    return GeneralDyneOutcome::new(eps, phi, meter);
                }
            }
            Err(Error::Numerical("rejection sampling did not accept within 10⁶ draws".into()))
        })
        .collect()
}

impl PumpWavefunction {
    fn normalized_density(&self) -> Result<Vec<f64>> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::ZeroProbability("pump state has zero norm".into()));
        }
        Ok(self.psi.iter().map(|c| c.norm_sqr() / n).collect())
    }
}

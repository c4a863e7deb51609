//! GKP preparation: evolve `|A₀⟩ ⊗ |w⟩` under `H_eff`, read out the signal
//! phase by general-dyne detection, and displace the pump back onto the
//! code lattice.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::generaldyne::{generaldyne_c_approx, generaldyne_c_amplitude, AmplitudeModel, GeneralDyneOutcome, MeterParams};
use super::metrics::{comb_locality, effective_squeezing_db, EffectiveSqueezing};
use super::target::{analytic_gkp_wavefunction, symmetric_a0, GkpTarget};
use super::wavefunction::{GridSpec, PumpWavefunction};
use crate::error::{Error, Result};
use crate::fock::quadrature::Grid;
use crate::fock::wigner::{wigner_from_wavefunction_rows, WignerGrid};
use crate::fock::{width_from_db, SystemParams};
use crate::C64;

/// Norm the meter expansion may leave outside its truncation.
const METER_TRUNCATION_TOL: f64 = 1e-12;

/// Pump norm allowed within one unit of the grid edges.
const EDGE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GkpWignerWindow {
    pub x: [f64; 2],
    pub p: [f64; 2],
    pub step: f64,
}

impl Default for GkpWignerWindow {
    fn default() -> Self {
        Self {
            x: [-6.0, 6.0],
            p: [-4.0, 4.0],
            step: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GkpConfig {
    pub g: f64,
    pub g_tilde: f64,
    pub big_delta: f64,
    /// Interaction strength; `√(π/2)` gives the code spacing `√(2π)`.
    pub g_tilde_t: f64,
    /// Pump `p` squeezing, converted to a width unless `w` is given.
    pub squeezing_db: f64,
    pub w: Option<f64>,
    /// Meter amplitude; defaults to the symmetric choice `1/(2√π w)`.
    pub a0: Option<f64>,
    pub epsilon: f64,
    pub phi: f64,
    pub model: AmplitudeModel,
    /// Also undo the `D(ig̃t/2)` kick from the `½` in `N̂_a + ½`.
    pub compensate_zero_point: bool,
    /// Squeezed-number levels kept for the meter state.
    pub meter_levels: usize,
    pub x_grid: GridSpec,
    pub p_grid: GridSpec,
    pub wigner: Option<GkpWignerWindow>,
}

impl Default for GkpConfig {
    fn default() -> Self {
        Self {
            g: 1.0,
            g_tilde: 1.0,
            big_delta: 100.0,
            g_tilde_t: (PI / 2.0).sqrt(),
            squeezing_db: 15.0,
            w: None,
            a0: None,
            epsilon: 0.1,
            phi: PI / 4.0,
            model: AmplitudeModel::Exact,
            compensate_zero_point: true,
            meter_levels: 60,
            x_grid: GridSpec {
                min: -24.0,
                max: 24.0,
                step: 0.01,
            },
            p_grid: GridSpec {
                min: -30.0,
                max: 30.0,
                step: 0.01,
            },
            wigner: Some(GkpWignerWindow::default()),
        }
    }
}

impl GkpConfig {
    pub fn pump_width(&self) -> f64 {
        self.w.unwrap_or_else(|| width_from_db(self.squeezing_db))
    }

    pub fn meter_amplitude(&self) -> f64 {
        self.a0.unwrap_or_else(|| symmetric_a0(self.pump_width()))
    }

    pub fn interaction_time(&self) -> f64 {
        self.g_tilde_t / self.g_tilde
    }

    pub fn meter(&self) -> Result<MeterParams> {
        MeterParams::new(
            self.meter_amplitude(),
            self.g_tilde_t,
            self.big_delta * self.interaction_time(),
        )
    }
}

/// `D(−x_φ)·D(−iγ)`: a momentum kick `e^{−2iγx}` followed by the shift
/// `ψ(x) → ψ(x + x_φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feedforward {
    pub shift: f64,
    pub momentum: f64,
}

impl Feedforward {
    /// `γ = g̃t⌊A₀²⌋`.
    pub fn lattice(x_phi: f64, a0: f64, g_tilde_t: f64) -> Self {
        Self {
            shift: x_phi,
            momentum: g_tilde_t * (a0 * a0).floor(),
        }
    }

    /// `γ = g̃t(⌊A₀²⌋ + ½)`, which also removes the zero-point kick. That kick
    /// alternates the sign of neighbouring teeth, so it is not a local phase.
    pub fn with_zero_point(x_phi: f64, a0: f64, g_tilde_t: f64) -> Self {
        Self {
            shift: x_phi,
            momentum: g_tilde_t * ((a0 * a0).floor() + 0.5),
        }
    }
}

pub fn feedforward_displacement(state: &PumpWavefunction, ff: &Feedforward, p_grid: &Grid) -> Result<PumpWavefunction> {
    state.kicked(-ff.momentum).shifted(-ff.shift, p_grid)
}

/// Poisson amplitudes `⟨N|A₀⟩` of the meter in the squeezed-number basis.
pub fn meter_coefficients(a0: f64, levels: usize) -> Result<Vec<f64>> {
    let mut c = Vec::with_capacity(levels);
    let mut v = (-0.5 * a0 * a0).exp();
    for n in 0..levels {
        if n > 0 {
            v *= a0 / (n as f64).sqrt();
        }
        c.push(v);
    }
    let missing = (1.0 - c.iter().map(|v| v * v).sum::<f64>()).max(0.0);
    if missing > METER_TRUNCATION_TOL {
        return Err(Error::Truncation {
            population: missing,
            tolerance: METER_TRUNCATION_TOL,
            context: format!("meter |A₀ = {a0:.4}⟩ in {levels} squeezed-number levels"),
        });
    }
    Ok(c)
}

/// `x` wavefunction `∝ e^{−4w²x²}` of the pump squeezed to `p` width `w`.
pub fn squeezed_pump_wavefunction(w: f64, grid: &Grid) -> Result<PumpWavefunction> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidParameter(format!("pump width must be positive, got {w}")));
    }
    let psi = PumpWavefunction::from_fn(*grid, |x| C64::new((-4.0 * w * w * x * x).exp(), 0.0)).normalized()?;
    let edge = psi.edge_population(1.0);
    if edge > EDGE_TOL {
        return Err(Error::Truncation {
            population: edge,
            tolerance: EDGE_TOL,
            context: format!("pump of width {w:.4} on x ∈ [{:.1}, {:.1}]", grid.min, grid.max()),
        });
    }
    Ok(psi)
}

/// Unnormalised conditional pump state `⟨β|e^{−iH_eff t}|A₀⟩|ψ⟩` with
/// `β = e^{iφ}(A₀+ε)`, scaled by `√((A₀+ε)/π)`. Each squeezed-number block
/// `N` picks up `e^{−iΔtN}` and the pump kick `e^{2ig̃t(N+½)x}`.
pub fn evolve_and_project(
    meter: &MeterParams,
    coeffs: &[f64],
    outcome: &GeneralDyneOutcome,
    pump: &PumpWavefunction,
) -> PumpWavefunction {
    let radius = outcome.radius(meter);
    let norm = (-0.5 * radius * radius).exp() * (radius / PI).sqrt();
    // a_N = ⟨β|N⟩ c_N e^{−iΔtN}, with ⟨β|N⟩ = e^{−|β|²/2} β*^N/√N!.
    let mut a = Vec::with_capacity(coeffs.len());
    let mut bn = C64::new(norm, 0.0);
    let step = C64::from_polar(radius, -outcome.phi - meter.delta_t);
    for (n, c) in coeffs.iter().enumerate() {
        if n > 0 {
            bn = bn * step / (n as f64).sqrt();
        }
        a.push(bn * *c);
    }
    let gt = meter.g_tilde_t;
    PumpWavefunction::from_fn(pump.grid, |x| {
        let i = ((x - pump.grid.min) / pump.grid.step).round() as usize;
        let z = C64::from_polar(1.0, 2.0 * gt * x);
        let poly = a.iter().rev().fold(C64::new(0.0, 0.0), |acc, an| acc * z + an);
        poly * C64::from_polar(1.0, gt * x) * pump.psi[i]
    })
}

/// Closed-form counterpart of [`evolve_and_project`]: the zero-point kick
/// times the Kraus amplitude of `model`.
pub fn kraus_pathway(
    meter: &MeterParams,
    outcome: &GeneralDyneOutcome,
    pump: &PumpWavefunction,
    model: AmplitudeModel,
) -> PumpWavefunction {
    let scale = (outcome.radius(meter) / PI).sqrt();
    let gt = meter.g_tilde_t;
    PumpWavefunction::from_fn(pump.grid, |x| {
        let i = ((x - pump.grid.min) / pump.grid.step).round() as usize;
        let c = match model {
            AmplitudeModel::Exact => {
                generaldyne_c_amplitude(x, outcome.epsilon, outcome.phi, meter.a0, gt, meter.delta_t)
            }
            AmplitudeModel::Approximate => generaldyne_c_approx(x, outcome, meter),
        };
        c * scale * C64::from_polar(1.0, gt * x) * pump.psi[i]
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GkpReport {
    pub config: GkpConfig,
    pub w: f64,
    pub a0: f64,
    pub kappa: f64,
    pub symmetric: bool,
    pub t: f64,
    pub delta_t: f64,
    /// Bare phase mismatch and pump amplitude realising `(Δ, g̃)`.
    pub delta: f64,
    pub beta: f64,
    pub outcome: GeneralDyneOutcome,
    /// Outcome density `p(ε, φ)` per unit `dε dφ`.
    pub outcome_density: f64,
    /// Max deviation between the evolved state and the exact Kraus pathway,
    /// relative to the largest amplitude.
    pub evolution_vs_kraus: f64,
    /// Fraction of the conditional `x` density within `±3κ` of `x_φ + nμ`.
    pub comb_locality: f64,
    pub feedforward: Feedforward,
    pub fidelity: f64,
    pub squeezing: EffectiveSqueezing,
    pub target_squeezing: EffectiveSqueezing,
    /// Fitted distance between `x` teeth.
    pub tooth_spacing: Option<f64>,
    pub target: GkpTarget,
}

#[derive(Clone, Debug)]
pub struct GkpDataset {
    pub report: GkpReport,
    pub x_grid: Grid,
    pub p_grid: Grid,
    pub conditional: PumpWavefunction,
    pub final_state: PumpWavefunction,
    pub target_state: PumpWavefunction,
    pub final_p: Vec<C64>,
    pub target_p: Vec<C64>,
    pub wigner: Option<WignerGrid>,
}

pub fn run_gkp_protocol(config: &GkpConfig) -> Result<GkpDataset> {
    let w = config.pump_width();
    let a0 = config.meter_amplitude();
    let meter = config.meter()?;
    let params = SystemParams::from_targets(config.big_delta, config.g_tilde, config.g)?;
    let outcome = GeneralDyneOutcome::new(config.epsilon, config.phi, &meter)?;
    let x_grid = config.x_grid.build()?;
    let p_grid = config.p_grid.build()?;

    let pump = squeezed_pump_wavefunction(w, &x_grid)?;
    let coeffs = meter_coefficients(a0, config.meter_levels)?;
    let evolved = evolve_and_project(&meter, &coeffs, &outcome, &pump);
    let exact = kraus_pathway(&meter, &outcome, &pump, AmplitudeModel::Exact);
    let scale = exact.psi.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let evolution_vs_kraus = evolved
        .psi
        .iter()
        .zip(&exact.psi)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale.max(f64::MIN_POSITIVE);
    let conditional = match config.model {
        AmplitudeModel::Exact => evolved,
        AmplitudeModel::Approximate => kraus_pathway(&meter, &outcome, &pump, AmplitudeModel::Approximate),
    };
    let outcome_density = conditional.norm_sqr();
    if !(outcome_density > 1e-300) {
        return Err(Error::ZeroProbability(format!(
            "general-dyne outcome ε = {}, φ = {}",
            config.epsilon, config.phi
        )));
    }
    let conditional = conditional.normalized()?;
    let locality = comb_locality(&conditional, outcome.x_phi, outcome.mu, 3.0 * meter.tooth_width());

    let ff = if config.compensate_zero_point {
        Feedforward::with_zero_point(outcome.x_phi, a0, config.g_tilde_t)
    } else {
        Feedforward::lattice(outcome.x_phi, a0, config.g_tilde_t)
    };
    let final_state = feedforward_displacement(&conditional, &ff, &p_grid)?.normalized()?;
    let target = GkpTarget::new(w, a0, outcome.x_phi)?;
    let target_state = analytic_gkp_wavefunction(&target, &x_grid)?;
    let fidelity = final_state.fidelity(&target_state)?;
    let squeezing = effective_squeezing_db(&final_state, &p_grid)?;
    let target_squeezing = effective_squeezing_db(&target_state, &p_grid)?;
    let tooth_spacing = squeezing.x_teeth.spacing;

    let wigner = match &config.wigner {
        Some(win) => Some(gkp_wigner(&final_state, win)?),
        None => None,
    };
    let final_p = final_state.to_p(&p_grid);
    let target_p = target_state.to_p(&p_grid);
    let t = config.interaction_time();
    Ok(GkpDataset {
        report: GkpReport {
            config: config.clone(),
            w,
            a0,
            kappa: target.kappa,
            symmetric: target.is_symmetric(),
            t,
            delta_t: meter.delta_t,
            delta: params.delta,
            beta: params.beta,
            outcome,
            outcome_density,
            evolution_vs_kraus,
            comb_locality: locality,
            feedforward: ff,
            fidelity,
            squeezing,
            target_squeezing,
            tooth_spacing,
            target,
        },
        x_grid,
        p_grid,
        conditional,
        final_state,
        target_state,
        final_p,
        target_p,
        wigner,
    })
}

fn gkp_wigner(state: &PumpWavefunction, win: &GkpWignerWindow) -> Result<WignerGrid> {
    let g = state.grid;
    if !(win.step > 0.0) || win.x[1] <= win.x[0] || win.p[1] <= win.p[0] {
        return Err(Error::InvalidParameter("empty Wigner window".into()));
    }
    let stride = ((win.step / g.step).round() as usize).max(1);
    let rows: Vec<usize> = (0..g.len)
        .step_by(stride)
        .filter(|&i| {
            let x = g.point(i);
            x >= win.x[0] - 1e-9 && x <= win.x[1] + 1e-9
        })
        .collect();
    let ps = Grid::new(win.p[0], win.p[1], win.step)?.points();
    wigner_from_wavefunction_rows(&g, &state.psi, &rows, &ps)
}

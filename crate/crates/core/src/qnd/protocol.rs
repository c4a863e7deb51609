//! Full QND pipeline: evolve `|α⟩ ⊗ |w⟩`, project the pump onto `p`
//! eigenstates, and extract conditional signal states per outcome and per
//! outcome window.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{n_max_for_weights, SqueezedNumberBasis};
use super::kraus::{apply_measurement, outcome_distribution, KrausFamily};
use crate::dynamics::{evolve_unitary, HamiltonianSpec, HamiltonianVariant};
use crate::error::{Error, Result};
use crate::fock::metrics::{reduced_pump, reduced_signal};
use crate::fock::quadrature::{quadrature_table, Grid, Quadrature};
use crate::fock::states::{coherent_state, squeezed_vacuum_pump, Ket, TwoModeState};
use crate::fock::wigner::{wigner_density, WignerGrid};
use crate::fock::{make_operators_in, DensityMatrix, ModeSpace, SignalBasis, SystemParams};
use crate::C64;

/// Input weight that the squeezed-number expansion must capture.
const WEIGHT_TOL: f64 = 1e-8;

/// Bound on the top-level population of the evolved joint state.
const EVOLVED_TRUNCATION_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerWindow {
    /// Points per axis.
    pub points: usize,
    /// Signal panels cover `[−e, e]²`.
    pub signal_extent: f64,
    pub pump_x: [f64; 2],
    pub pump_p: [f64; 2],
}

impl Default for WignerWindow {
    fn default() -> Self {
        Self {
            points: 81,
            signal_extent: 2.5,
            pump_x: [-4.0, 4.0],
            pump_p: [-1.5, 4.5],
        }
    }
}

fn axis(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QndConfig {
    pub g: f64,
    /// Target `Δ`.
    pub big_delta: f64,
    /// Target `g̃`.
    pub g_tilde: f64,
    pub t: f64,
    /// Coherent signal amplitude `[Re α, Im α]`.
    pub alpha: [f64; 2],
    /// Pump `p` width.
    pub w: f64,
    pub n_signal: usize,
    pub n_pump: usize,
    pub hamiltonian: HamiltonianVariant,
    /// Outcome windows `[dN, d(N+1))` for `N < bins`.
    pub bins: usize,
    /// Number of single outcomes, drawn from the outcome windows, compared
    /// against the Kraus prediction.
    pub kraus_checks: usize,
    pub wigner: Option<WignerWindow>,
}

impl Default for QndConfig {
    fn default() -> Self {
        Self {
            g: 1.0,
            big_delta: 150.0,
            g_tilde: 1.0,
            t: 1.0,
            alpha: [0.7, 0.0],
            w: 0.25,
            n_signal: 50,
            n_pump: 400,
            hamiltonian: HamiltonianVariant::Effective,
            bins: 4,
            kraus_checks: 24,
            wigner: Some(WignerWindow::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub n: usize,
    pub p_lo: f64,
    pub p_hi: f64,
    /// `∫_bin P(p_b) dp_b` from the simulation.
    pub probability: f64,
    /// `⟨N_a|ρ_bin|N_a⟩` of the simulated window-averaged state.
    pub fidelity: f64,
    /// Same quantity predicted by the Kraus operators.
    pub kraus_fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausCheck {
    pub p_b: f64,
    pub probability_density: f64,
    /// Fidelity between the simulated and the Kraus conditional states.
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QndSummary {
    pub config: QndConfig,
    pub delta: f64,
    pub r: f64,
    pub u: f64,
    pub d: f64,
    pub n_max: usize,
    /// `⟨N̂_a⟩` before and after the interaction.
    pub n_a_initial: f64,
    pub n_a_final: f64,
    /// `Σ P(p_i) δp` of the simulated distribution.
    pub probability_mass: f64,
    /// Top-level populations `(signal, pump)` of the evolved state.
    pub top_populations: (f64, f64),
    pub bins: Vec<BinSummary>,
    pub kraus_checks: Vec<KrausCheck>,
    pub min_kraus_fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QndWigner {
    pub initial_signal: WignerGrid,
    pub initial_pump: WignerGrid,
    pub final_signal: WignerGrid,
    pub final_pump: WignerGrid,
    /// One panel per outcome window.
    pub conditional: Vec<WignerGrid>,
}

#[derive(Clone, Debug)]
pub struct QndDataset {
    pub summary: QndSummary,
    pub p_grid: Grid,
    /// Simulated `P(p_b)`.
    pub probability: Vec<f64>,
    /// `⟨φ|F(p_b)|φ⟩` from the Kraus family.
    pub kraus_probability: Vec<f64>,
    pub purity: Vec<Option<f64>>,
    pub final_signal: DensityMatrix,
    pub final_pump: DensityMatrix,
    /// Window-averaged conditional signal states.
    pub conditional: Vec<DensityMatrix>,
    pub wigner: Option<QndWigner>,
}

/// Conditional signal vectors `φ_i[k] = Σ_j ⟨p_i|j⟩ ψ[k, j]` (unnormalised).
fn project_pump(psi: &Ket, space: &ModeSpace, grid: &Grid) -> Array2<C64> {
    let table = quadrature_table(space.n_pump, grid, Quadrature::P);
    let joint = Array2::from_shape_vec((space.n_signal, space.n_pump), psi.0.clone())
        .expect("joint vector matches the mode space");
    table.dot(&joint.t())
}

fn outer_accumulate(acc: &mut Array2<C64>, v: &[C64], weight: f64) {
    let n = v.len();
    for i in 0..n {
        let vi = v[i] * weight;
        if vi.norm_sqr() == 0.0 {
            continue;
        }
        for j in 0..n {
            acc[[i, j]] += vi * v[j].conj();
        }
    }
}

pub fn run_qnd_protocol(config: &QndConfig) -> Result<QndDataset> {
    if matches!(config.hamiltonian, HamiltonianVariant::Lab) {
        return Err(Error::InvalidParameter(
            "the QND pipeline projects the displaced-frame pump; use effective, displaced or bogoliubov-form".into(),
        ));
    }
    if config.bins == 0 {
        return Err(Error::InvalidParameter("at least one outcome window is required".into()));
    }
    let params = SystemParams::from_targets(config.big_delta, config.g_tilde, config.g)?;
    let bp = params.bogoliubov()?;
    let space = ModeSpace::new(config.n_signal, config.n_pump)?;
    let ops = make_operators_in(space, SignalBasis::Fock, bp.u)?;

    let alpha = C64::new(config.alpha[0], config.alpha[1]);
    let signal = coherent_state(space.n_signal, alpha)?;
    let pump = squeezed_vacuum_pump(space.n_pump, config.w)?;
    let psi0 = signal.kron(&pump);

    let full_basis = SqueezedNumberBasis::fock(space.n_signal, bp.u, space.n_signal)?;
    let weights: Vec<f64> = full_basis.coefficients(&signal)?.iter().map(|c| c.norm_sqr()).collect();
    let n_max = n_max_for_weights(&weights, signal.norm_sqr(), WEIGHT_TOL)?.max(config.bins);
    let family = KrausFamily::from_params(&bp, config.t, config.w, n_max)?;
    let basis = full_basis.truncated(n_max + 1)?;
    let grid = family.grid;

    let h = HamiltonianSpec {
        variant: config.hamiltonian,
        params,
    }
    .build(&ops)?;
    let psi = evolve_unitary(&h, &psi0, config.t)?;
    let joint = TwoModeState::new(psi.clone(), space)?;
    joint.check_truncation(EVOLVED_TRUNCATION_TOL, "evolved QND state")?;
    let top_populations = joint.top_populations();

    let n_a_initial = psi0.expectation(&ops.big_n)?.re;
    let n_a_final = psi.expectation(&ops.big_n)?.re;

    let phi = project_pump(&psi, &space, &grid);
    let probability: Vec<f64> = phi
        .outer_iter()
        .map(|row| row.iter().map(|c| c.norm_sqr()).sum())
        .collect();
    let probability_mass = probability.iter().sum::<f64>() * grid.step;
    if (probability_mass - 1.0).abs() > 1e-3 {
        return Err(Error::Numerical(format!(
            "simulated outcome distribution integrates to {probability_mass:.6} on [{:.3}, {:.3}]",
            grid.min,
            grid.max()
        )));
    }
    let kraus_probability = outcome_distribution(&signal, &family, &basis)?;
    let purity = family.purity_curve();

    // Window-averaged states and their fidelities.
    let d = family.d;
    let mut bins = Vec::with_capacity(config.bins);
    let mut conditional = Vec::with_capacity(config.bins);
    let kraus_table = family.amplitude_table();
    let coeffs = basis.coefficients(&signal)?;
    for n in 0..config.bins {
        let (lo, hi) = (d * n as f64, d * (n + 1) as f64);
        let members: Vec<usize> = (0..grid.len)
            .filter(|&i| {
                let p = grid.point(i);
                p >= lo - 1e-9 * grid.step && p < hi - 1e-9 * grid.step
            })
            .collect();
        let target = basis.state(n);
        let mut rho = Array2::<C64>::zeros((space.n_signal, space.n_signal));
        let mut mass = 0.0;
        let mut overlap = 0.0;
        let mut kraus_mass = 0.0;
        let mut kraus_overlap = 0.0;
        for &i in &members {
            let row: Vec<C64> = phi.row(i).to_vec();
            outer_accumulate(&mut rho, &row, grid.step);
            mass += probability[i] * grid.step;
            overlap += Ket(row).inner(&target)?.norm_sqr() * grid.step;
            kraus_mass += kraus_probability[i] * grid.step;
            kraus_overlap += (kraus_table[[i, n]] * coeffs[n]).norm_sqr() * grid.step;
        }
        if !(mass > 0.0) {
            return Err(Error::ZeroProbability(format!("outcome window N = {n}")));
        }
        rho.mapv_inplace(|v| v / mass);
        conditional.push(DensityMatrix::new(rho)?);
        bins.push(BinSummary {
            n,
            p_lo: lo,
            p_hi: hi,
            probability: mass,
            fidelity: overlap / mass,
            kraus_fidelity: kraus_overlap / kraus_mass,
        });
    }

    // Single-outcome comparison with the Kraus prediction.
    let peak = probability.iter().cloned().fold(0.0, f64::max);
    let window_end = d * config.bins as f64;
    let eligible: Vec<usize> = (0..grid.len)
        .filter(|&i| probability[i] > 1e-3 * peak && grid.point(i) < window_end)
        .collect();
    let count = config.kraus_checks.min(eligible.len());
    let picks: Vec<usize> = (0..count)
        .map(|k| eligible[(k * (eligible.len() - 1)) / (count - 1).max(1)])
        .collect();
    let kraus_checks: Vec<KrausCheck> = picks
        .par_iter()
        .map(|&i| {
            let p_b = grid.point(i);
            let sim = Ket(phi.row(i).to_vec()).normalized()?;
            let pred = apply_measurement(&signal, p_b, &family, &basis)?;
            Ok(KrausCheck {
                p_b,
                probability_density: probability[i],
                fidelity: sim.fidelity(&pred.state)?,
            })
        })
        .collect::<Result<_>>()?;
    let min_kraus_fidelity = kraus_checks.iter().map(|c| c.fidelity).fold(1.0, f64::min);

    let final_signal = reduced_signal(&psi, &space)?;
    let final_pump = reduced_pump(&psi, &space)?;

    let wigner = match &config.wigner {
        None => None,
        Some(win) => {
            let s_axis = axis(-win.signal_extent, win.signal_extent, win.points);
            let px = axis(win.pump_x[0], win.pump_x[1], win.points);
            let pp = axis(win.pump_p[0], win.pump_p[1], win.points);
            let init_s = DensityMatrix::from_ket(&signal);
            let init_p = DensityMatrix::from_ket(&pump);
            Some(QndWigner {
                initial_signal: wigner_density(&init_s.matrix, &s_axis, &s_axis)?,
                initial_pump: wigner_density(&init_p.matrix, &px, &pp)?,
                final_signal: wigner_density(&final_signal.matrix, &s_axis, &s_axis)?,
                final_pump: wigner_density(&final_pump.matrix, &px, &pp)?,
                conditional: conditional
                    .iter()
                    .map(|rho| wigner_density(&rho.matrix, &s_axis, &s_axis))
                    .collect::<Result<_>>()?,
            })
        }
    };

    Ok(QndDataset {
        summary: QndSummary {
            config: config.clone(),
            delta: params.delta,
            r: params.r(),
            u: bp.u,
            d,
            n_max,
            n_a_initial,
            n_a_final,
            probability_mass,
            top_populations,
            bins,
            kraus_checks,
            min_kraus_fidelity,
        },
        p_grid: grid,
        probability,
        kraus_probability,
        purity,
        final_signal,
        final_pump,
        conditional,
        wigner,
    })
}

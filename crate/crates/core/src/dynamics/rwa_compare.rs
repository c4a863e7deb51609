use serde::{Deserialize, Serialize};

use super::hamiltonians::{build_h_displaced, build_h_eff};
use super::unitary::evolve_unitary;
use crate::error::Result;
use crate::fock::operators::Operators;
use crate::fock::states::Ket;
use crate::fock::SystemParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwaComparison {
    pub times: Vec<f64>,
    /// `|⟨ψ_D(t)|ψ_eff(t)⟩|²`.
    pub fidelity: Vec<f64>,
    /// `g e^{2u} / Δ`, small when the rotating-wave approximation holds.
    pub validity_ratio: f64,
}

impl RwaComparison {
    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().unwrap_or(&1.0)
    }
}

/// Evolves `initial` under the displaced Hamiltonian and under the
/// effective one, comparing them at `steps` evenly spaced times up to `t`.
pub fn compare_exact_vs_rwa(
    params: &SystemParams,
    ops: &Operators,
    initial: &Ket,
    t: f64,
    steps: usize,
) -> Result<RwaComparison> {
    let bp = params.bogoliubov()?;
    let hd = build_h_displaced(params, ops);
    let he = build_h_eff(params, ops)?;
    let steps = steps.max(1);
    let dt = t / steps as f64;
    let mut exact = initial.clone();
    let mut rwa = initial.clone();
    let mut times = Vec::with_capacity(steps);
    let mut fidelity = Vec::with_capacity(steps);
    for k in 1..=steps {
        exact = evolve_unitary(&hd, &exact, dt)?;
        rwa = evolve_unitary(&he, &rwa, dt)?;
        times.push(k as f64 * dt);
        fidelity.push(exact.fidelity(&rwa)?);
    }
    Ok(RwaComparison {
        times,
        fidelity,
        validity_ratio: params.g * (2.0 * bp.u).exp() / bp.big_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::states::{coherent_state, squeezed_vacuum_pump};
    use crate::fock::{make_operators_in, ModeSpace, SignalBasis};
    use crate::C64;

    #[test]
    fn zero_coupling_gives_unit_fidelity() {
        let space = ModeSpace::new(12, 16).unwrap();
        let p = SystemParams::new(0.0, 5.0, 0.0);
        let ops = make_operators_in(space, SignalBasis::Fock, 0.0).unwrap();
        let psi = coherent_state(12, C64::new(0.5, 0.0))
            .unwrap()
            .kron(&squeezed_vacuum_pump(16, 0.4).unwrap());
        let cmp = compare_exact_vs_rwa(&p, &ops, &psi, 1.0, 2).unwrap();
        assert!((cmp.final_fidelity() - 1.0).abs() < 1e-10);
    }
}

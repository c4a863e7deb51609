//! Structural invariants checked as a suite: offset independence of the OPO
//! generator, conserved quantities of the effective Hamiltonian, its
//! closed-form Heisenberg solution, and the defining relations of every
//! state factory.

use serde::{Deserialize, Serialize};

use crate::dynamics::hamiltonians::{effective_from, interior_indices};
use crate::dynamics::master::liouvillian_superoperator;
use crate::dynamics::unitary::evolve_unitary;
use crate::error::Result;
use crate::fock::operators::{ladder_ops, lowering};
use crate::fock::states::{
    bogoliubov_coherent_state, coherent_state, displace, squeezed_number_state, squeezed_vacuum_pump,
    x_squeezed_vacuum, Ket,
};
use crate::fock::{make_operators_in, ModeSpace, SignalBasis, SystemParams, VACUUM_VARIANCE};
use crate::opo::channels::{build_opo_channels, opo_operators, verify_stationary_state};
use crate::sparse::CsrMatrix;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl InvariantCheck {
    /// Passes when `value < tolerance`.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value < tolerance,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<InvariantCheck>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InvariantCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Checks whose name starts with `prefix`.
    pub fn group<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a InvariantCheck> {
        self.checks.iter().filter(move |c| c.name.starts_with(prefix))
    }
}

/// Largest entry of the difference between the OPO generator with a
/// balanced offset `β` (`λ = κ_b β/2`) and the generator without offset.
pub fn offset_generator_difference(beta: f64) -> Result<f64> {
    let base = SystemParams::from_targets(100.0, 1.5, 1.0)?.with_losses(0.03, 3.0);
    let ops = opo_operators(ModeSpace::new(4, 6)?, &base)?;
    let generator = |beta: f64| -> Result<CsrMatrix> {
        let p = SystemParams {
            beta,
            lambda: 0.5 * base.kappa_b * beta,
            ..base
        };
        let ch = build_opo_channels(&p, &ops)?;
        let h = effective_from(100.0, 1.5, &ops).add(&ch.h_drive);
        Ok(liouvillian_superoperator(&h, &ch.lindblad()))
    };
    Ok(generator(beta)?.sub(&generator(0.0)?).max_abs())
}

pub fn offset_independence() -> Result<Vec<InvariantCheck>> {
    [0.5, 1.0, 2.0, 5.0]
        .iter()
        .map(|&beta| {
            Ok(InvariantCheck::below(
                format!("opo.offset_independence[beta={beta}]"),
                offset_generator_difference(beta)?,
                1e-8,
            ))
        })
        .collect()
}

/// `[H_eff, N̂_a]` away from the two top signal levels and `[H_eff, x_b]`.
pub fn effective_commutators() -> Result<Vec<InvariantCheck>> {
    let mut out = Vec::new();
    for (big_delta, g_tilde) in [(150.0, 1.0), (100.0, 1.5)] {
        let u = SystemParams::from_targets(big_delta, g_tilde, 1.0)?.bogoliubov()?.u;
        for (label, basis) in [("fock", SignalBasis::Fock), ("squeezed", SignalBasis::Bogoliubov { u })] {
            let ops = make_operators_in(ModeSpace::new(12, 10)?, basis, u)?;
            let h = effective_from(big_delta, g_tilde, &ops);
            let keep = interior_indices(&ops, 2);
            let tag = format!("delta={big_delta},g_tilde={g_tilde},{label}");
            out.push(InvariantCheck::below(
                format!("h_eff.commutes_with_n_a[{tag}]"),
                h.commutator(&ops.big_n.matrix).submatrix(&keep).max_abs(),
                1e-9,
            ));
            out.push(InvariantCheck::below(
                format!("h_eff.commutes_with_x_b[{tag}]"),
                h.commutator(&ops.x_b.matrix).max_abs(),
                1e-9,
            ));
        }
    }
    Ok(out)
}

/// Closed-form evolution under `H_eff`: `N̂_a` and `x_b` conserved,
/// `p_b(t) = p_b + g̃t(N̂_a + ½)` and `Â(t) = e^{i(2g̃t x_b − Δt)} Â`.
pub fn heisenberg_relations() -> Result<Vec<InvariantCheck>> {
    let mut out = Vec::new();
    let (big_delta, g_tilde, t) = (150.0, 1.0, 1.0);
    let u = SystemParams::from_targets(big_delta, g_tilde, 1.0)?.bogoliubov()?.u;

    let space = ModeSpace::new(6, 70)?;
    let ops = make_operators_in(space, SignalBasis::Bogoliubov { u }, u)?;
    let h = effective_from(big_delta, g_tilde, &ops);
    let pump = squeezed_vacuum_pump(space.n_pump, 0.25)?;
    let s = 0.5f64.sqrt();
    let mut superposed = Ket::zeros(space.n_signal);
    superposed.0[0] = C64::new(s, 0.0);
    superposed.0[2] = C64::new(0.0, s);
    let signals = [("n_a=1", Ket::fock(space.n_signal, 1)?), ("n_a=0+2", superposed)];
    for (label, signal) in signals {
        let psi0 = signal.kron(&pump);
        let psi = evolve_unitary(&h, &psi0, t)?;
        let ev = |k: &Ket, op: &CsrMatrix| -> Result<f64> { Ok(k.expectation(op)?.re) };
        let n0 = ev(&psi0, &ops.big_n.matrix)?;
        out.push(InvariantCheck::below(
            format!("heisenberg.n_a_conserved[{label}]"),
            (ev(&psi, &ops.big_n.matrix)? - n0).abs(),
            1e-8,
        ));
        out.push(InvariantCheck::below(
            format!("heisenberg.x_b_conserved[{label}]"),
            (ev(&psi, &ops.x_b.matrix)? - ev(&psi0, &ops.x_b.matrix)?).abs(),
            1e-6,
        ));
        let shift = ev(&psi, &ops.p_b.matrix)? - ev(&psi0, &ops.p_b.matrix)?;
        out.push(InvariantCheck::below(
            format!("heisenberg.p_b_shift[{label}]"),
            (shift - g_tilde * t * (n0 + 0.5)).abs(),
            1e-6,
        ));
    }

    // Bogoliubov-coherent signal and an x-displaced, x-squeezed pump.
    let space = ModeSpace::new(16, 50)?;
    let ops = make_operators_in(space, SignalBasis::Bogoliubov { u }, u)?;
    let h = effective_from(big_delta, g_tilde, &ops);
    let x0 = 0.3;
    let pump = displace(&x_squeezed_vacuum(space.n_pump, 0.25)?, C64::new(x0, 0.0), 1e-8)?;
    let big_a = C64::new(0.7, 0.0);
    let psi0 = coherent_state(space.n_signal, big_a)?.kron(&pump);
    let psi = evolve_unitary(&h, &psi0, t)?;
    let a0 = psi0.expectation(&ops.big_a.matrix)?;
    let a1 = psi.expectation(&ops.big_a.matrix)?;
    let advance = (a1 / a0).arg();
    let expected = 2.0 * g_tilde * t * x0 - big_delta * t;
    let wrapped = (advance - expected + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
        - std::f64::consts::PI;
    out.push(InvariantCheck::below("heisenberg.big_a_phase", wrapped.abs(), 1e-6));
    Ok(out)
}

/// Eigen-relations and moments of the state factories.
pub fn factory_relations() -> Result<Vec<InvariantCheck>> {
    let mut out = Vec::new();
    let dim = 120;
    let pad = dim + 4;
    let a = lowering(pad);
    for u in [0.0f64, 0.4407, 0.5974] {
        let big_a = a.scale_real(u.cosh()).add(&a.adjoint().scale_real(u.sinh()));
        let big_n = big_a.adjoint().matmul(&big_a);
        for n in 0..5 {
            let k = squeezed_number_state(dim, u, n)?.padded(pad);
            out.push(InvariantCheck::below(
                format!("factory.squeezed_number[u={u},n={n}]"),
                k.eigen_residual(&big_n, C64::new(n as f64, 0.0))?,
                1e-6,
            ));
        }
        for amp in [C64::new(0.7, 0.0), C64::new(-0.4, 1.1)] {
            let k = bogoliubov_coherent_state(dim, u, amp)?.padded(pad);
            out.push(InvariantCheck::below(
                format!("factory.bogoliubov_coherent[u={u},A={amp}]"),
                k.eigen_residual(&big_a, amp)?,
                1e-6,
            ));
        }
    }
    let (big, amp) = (100, C64::new(3.172, 0.0));
    let a_big = lowering(big + 4);
    let u: f64 = 0.4407;
    let big_a = a_big.scale_real(u.cosh()).add(&a_big.adjoint().scale_real(u.sinh()));
    out.push(InvariantCheck::below(
        "factory.bogoliubov_coherent[u=0.4407,A=3.172]",
        bogoliubov_coherent_state(big, u, amp)?.padded(big + 4).eigen_residual(&big_a, amp)?,
        1e-6,
    ));

    let alpha = C64::new(0.6, -0.8);
    out.push(InvariantCheck::below(
        "factory.coherent",
        coherent_state(dim, alpha)?.padded(pad).eigen_residual(&a, alpha)?,
        1e-6,
    ));

    let lo = ladder_ops(dim)?;
    let vac = Ket::fock(dim, 0)?;
    out.push(InvariantCheck::below(
        "factory.vacuum_variance",
        (vac.variance(&lo.x)? - VACUUM_VARIANCE).abs() + (vac.variance(&lo.p)? - VACUUM_VARIANCE).abs(),
        1e-12,
    ));
    for w in [0.5, 0.25, 0.125, 0.0889] {
        let k = squeezed_vacuum_pump(400, w)?;
        let lo = ladder_ops(400)?;
        out.push(InvariantCheck::below(
            format!("factory.pump_width[w={w}]"),
            (k.variance(&lo.p)?.sqrt() - w).abs(),
            1e-6,
        ));
        let kx = x_squeezed_vacuum(400, w)?;
        out.push(InvariantCheck::below(
            format!("factory.x_width[w={w}]"),
            (kx.variance(&lo.x)?.sqrt() - w).abs(),
            1e-6,
        ));
    }
    Ok(out)
}

/// Pump states `|β_N⟩` are stationary for each signal level without signal
/// loss.
pub fn opo_stationary_states() -> Result<Vec<InvariantCheck>> {
    let params = SystemParams::from_targets(100.0, 1.5, 1.0)?.with_losses(0.0, 3.0);
    let space = ModeSpace::new(5, 48)?;
    (0..3)
        .map(|n| {
            Ok(InvariantCheck::below(
                format!("opo.stationary_residual[n_a={n}]"),
                verify_stationary_state(n, &params, space)?,
                1e-6,
            ))
        })
        .collect()
}

pub fn run_invariant_suite() -> Result<ValidationReport> {
    let mut checks = offset_independence()?;
    checks.extend(effective_commutators()?);
    checks.extend(heisenberg_relations()?);
    checks.extend(factory_relations()?);
    checks.extend(opo_stationary_states()?);
    Ok(ValidationReport { checks })
}

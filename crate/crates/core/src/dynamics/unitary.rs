use crate::error::{Error, Result};
use crate::fock::states::Ket;
use crate::linalg::propagate;
use crate::sparse::CsrMatrix;

/// `exp(−iHt)ψ`; fails if the norm drifts by more than 1e−8.
pub fn evolve_unitary(h: &CsrMatrix, psi: &Ket, t: f64) -> Result<Ket> {
    let out = Ket(propagate(h, &psi.0, t)?);
    let drift = (out.norm() - psi.norm()).abs();
    if drift > 1e-8 {
        return Err(Error::Numerical(format!("norm drift {drift:.3e} in unitary step")));
    }
    Ok(out)
}

/// States at `t/steps, 2t/steps, …, t`.
pub fn evolve_unitary_steps(h: &CsrMatrix, psi: &Ket, t: f64, steps: usize) -> Result<Vec<Ket>> {
    let steps = steps.max(1);
    let dt = t / steps as f64;
    let mut out = Vec::with_capacity(steps);
    let mut cur = psi.clone();
    for _ in 0..steps {
        cur = evolve_unitary(h, &cur, dt)?;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Evolution of a joint vector in the squeezed-number basis under a
/// Hamiltonian that is block diagonal in the signal index:
/// `H = Σ_N |N⟩⟨N| ⊗ (phase_N + H_N)`, with `H_N` acting on the pump and a
/// scalar `phase_N` applied exactly.
pub fn evolve_signal_blocks<F>(psi: &Ket, n_pump: usize, t: f64, block: F) -> Result<Ket>
where
    F: Fn(usize) -> (f64, CsrMatrix) + Sync,
{
    use rayon::prelude::*;
    if psi.dim() % n_pump != 0 {
        return Err(Error::DimensionMismatch {
            expected: n_pump,
            found: psi.dim(),
        });
    }
    let n_signal = psi.dim() / n_pump;
    let blocks: Vec<Result<Vec<crate::C64>>> = (0..n_signal)
        .into_par_iter()
        .map(|k| {
            let slice = &psi.0[k * n_pump..(k + 1) * n_pump];
            if slice.iter().all(|c| c.norm_sqr() == 0.0) {
                return Ok(slice.to_vec());
            }
            let (phase, h) = block(k);
            let mut v = propagate(&h, slice, t)?;
            let rot = crate::C64::from_polar(1.0, -phase * t);
            v.iter_mut().for_each(|c| *c *= rot);
            Ok(v)
        })
        .collect();
    let mut out = Vec::with_capacity(psi.dim());
    for b in blocks {
        out.extend(b?);
    }
    Ok(Ket(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::hamiltonians::{build_h_displaced, build_h_eff, build_h_q};
    use crate::fock::operators::ladder_ops;
    use crate::fock::states::{squeezed_number_state, squeezed_vacuum_pump};
    use crate::fock::{make_operators, make_operators_in, ModeSpace, SignalBasis, SystemParams};
    use crate::C64;

    #[test]
    fn zero_time_is_identity() {
        let ops = make_operators(ModeSpace::new(5, 5).unwrap()).unwrap();
        let h = build_h_displaced(&SystemParams::new(1.0, 4.0, 1.0), &ops);
        let psi = Ket::fock(25, 3).unwrap();
        assert_eq!(evolve_unitary(&h, &psi, 0.0).unwrap(), psi);
    }

    #[test]
    fn composition() {
        let ops = make_operators(ModeSpace::new(8, 8).unwrap()).unwrap();
        let h = build_h_displaced(&SystemParams::new(1.0, 6.0, 1.0), &ops);
        let psi = Ket::fock(64, 9).unwrap();
        let once = evolve_unitary(&h, &psi, 0.7).unwrap();
        let twice = evolve_unitary(&h, &evolve_unitary(&h, &psi, 0.3).unwrap(), 0.4).unwrap();
        for (a, b) in once.0.iter().zip(&twice.0) {
            assert!((a - b).norm() < 1e-7);
        }
        let steps = evolve_unitary_steps(&h, &psi, 0.7, 7).unwrap();
        assert_eq!(steps.len(), 7);
        assert!((steps[6].inner(&once).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn quadratic_part_squeezes_the_vacuum() {
        let p = SystemParams::new(1.0, 0.0, 0.5);
        let ops = make_operators(ModeSpace::new(30, 2).unwrap()).unwrap();
        let h = build_h_q(&p, &ops);
        let vac = Ket::fock(60, 0).unwrap();
        let out = evolve_unitary(&h, &vac, 0.5).unwrap();
        let sig = ladder_ops(30).unwrap();
        let xa = ops.embed_signal(&sig.x);
        let pa = ops.embed_signal(&sig.p);
        let vx = out.variance(&xa).unwrap();
        let vp = out.variance(&pa).unwrap();
        // H = (r/2)(a†² + a²) with r = 1 squeezes the (x − p) diagonal; the
        // area of the ellipse stays at the vacuum value.
        let cov = out.expectation(&xa.matmul(&pa).add(&pa.matmul(&xa))).unwrap().re / 2.0;
        let det = vx * vp - cov * cov;
        assert!((det - 1.0 / 16.0).abs() < 1e-8);
        let min_var = 0.5 * (vx + vp) - ((0.5 * (vx - vp)).powi(2) + cov * cov).sqrt();
        assert!((min_var - (-1.0f64).exp() / 4.0).abs() < 1e-8, "{min_var}");
    }

    #[test]
    fn heisenberg_shift_of_pump_momentum() {
        let p = SystemParams::from_targets(150.0, 1.0, 1.0).unwrap();
        let u = p.bogoliubov().unwrap().u;
        let space = ModeSpace::new(40, 50).unwrap();
        let ops = make_operators_in(space, SignalBasis::Fock, u).unwrap();
        let h = build_h_eff(&p, &ops).unwrap();
        let sig = squeezed_number_state(40, u, 1).unwrap();
        let pump = squeezed_vacuum_pump(50, 0.25).unwrap();
        let psi = sig.kron(&pump);
        let out = evolve_unitary(&h, &psi, 1.0).unwrap();
        let pb = out.expectation(&ops.p_b).unwrap().re;
        assert!((pb - 1.5).abs() < 1e-4, "{pb}");
        let n = out.expectation(&ops.big_n).unwrap().re;
        assert!((n - 1.0).abs() < 1e-6);
    }

    #[test]
    fn block_evolution_matches_joint_propagation() {
        let p = SystemParams::from_targets(30.0, 1.0, 1.0).unwrap();
        let bp = p.bogoliubov().unwrap();
        let space = ModeSpace::new(6, 30).unwrap();
        let ops = make_operators_in(space, SignalBasis::Bogoliubov { u: bp.u }, bp.u).unwrap();
        let h = build_h_eff(&p, &ops).unwrap();
        let mut sig = Ket::zeros(6);
        for k in 0..4 {
            sig.0[k] = C64::new(1.0, 0.3 * k as f64);
        }
        let psi = sig.normalized().unwrap().kron(&squeezed_vacuum_pump(30, 0.3).unwrap());
        let joint = evolve_unitary(&h, &psi, 0.8).unwrap();
        let xb = ladder_ops(30).unwrap().x;
        let blocks = evolve_signal_blocks(&psi, 30, 0.8, |n| {
            (bp.big_delta * n as f64, xb.scale_real(-2.0 * bp.g_tilde * (n as f64 + 0.5)))
        })
        .unwrap();
        for (a, b) in joint.0.iter().zip(&blocks.0) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}

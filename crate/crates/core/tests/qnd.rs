use paraqnd_core::fock::quadrature::Grid;
use paraqnd_core::fock::states::{coherent_state, Ket};
use paraqnd_core::fock::SystemParams;
use paraqnd_core::qnd::*;
use paraqnd_core::C64;
use proptest::prelude::*;

fn unit_ratio_u() -> f64 {
    0.5 * 1.0f64.asinh()
}

fn peak(n: usize, d: f64) -> f64 {
    d * (n as f64 + 0.5)
}

#[test]
fn kraus_amplitudes_are_normalised_gaussians() {
    let grid = Grid::new(-6.0, 12.0, 0.005).unwrap();
    for n in 0..4 {
        let s: f64 = grid
            .points()
            .iter()
            .map(|&p| kraus_amplitude(n, p, 1.3, 0.3, 2.0).norm_sqr())
            .sum::<f64>()
            * grid.step;
        assert!((s - 1.0).abs() < 1e-10);
    }
}

#[test]
fn completeness_on_low_subspace_and_convergence() {
    let base = KrausFamily::new(1.0, 0.25, 150.0, unit_ratio_u(), 6).unwrap();
    let err = base.completeness_error();
    assert!(err < 1e-3, "{err}");

    // Halving δp from coarse sampling converges down to the tail floor.
    let by_step: Vec<f64> = [2.0, 1.0, 0.5, 0.25, 0.1, 0.05]
        .iter()
        .map(|k| {
            let g = Grid::new(base.grid.min, base.grid.max(), k * 0.25).unwrap();
            base.clone().with_grid(g).completeness_error()
        })
        .collect();
    for pair in by_step.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-9, "{by_step:?}");
    }
    assert!(by_step[0] > 1e-3 && by_step[5] < 1e-8, "{by_step:?}");

    // A range cut close to the outer peak loses tail weight; growing it back converges.
    let errors: Vec<f64> = [1.0, 2.0, 4.0, 6.0]
        .iter()
        .map(|k| {
            let g = Grid::new(-2.0, peak(6, 1.0) + k * 0.25, 0.025).unwrap();
            base.clone().with_grid(g).completeness_error()
        })
        .collect();
    for pair in errors.windows(2) {
        assert!(pair[1] < pair[0], "{errors:?}");
    }
    assert!(errors[0] > 1e-3);
}

#[test]
fn purity_midpoints_peaks_and_width_ordering() {
    let f = KrausFamily::new(1.0, 0.25, 0.0, 0.0, 8).unwrap();
    for n in 0..6 {
        let mid = f.povm_purity(1.0 * (n + 1) as f64).unwrap();
        assert!((mid - 0.5).abs() < 1e-3, "midpoint {n}: {mid}");
        let top = f.povm_purity(peak(n, 1.0)).unwrap();
        assert!(top >= 0.99);
        if n > 0 {
            // Two neighbours, each with relative weight e^{−8}.
            assert!((top - 0.99866).abs() < 1e-4, "{top}");
        }
    }
    let widths = [0.5, 0.25, 0.125];
    for n in 0..6 {
        let p: Vec<f64> = widths
            .iter()
            .map(|&w| KrausFamily::new(1.0, w, 0.0, 0.0, 8).unwrap().povm_purity(peak(n, 1.0)).unwrap())
            .collect();
        assert!(p[0] < p[1] && p[1] < p[2], "N = {n}: {p:?}");
    }
}

#[test]
fn purity_formula_matches_matrix_definition() {
    let u = unit_ratio_u();
    let f = KrausFamily::new(1.0, 0.25, 150.0, u, 6).unwrap();
    let basis = SqueezedNumberBasis::fock(60, u, 7).unwrap();
    for p in f.grid.points() {
        let a = f.povm_purity(p).unwrap();
        let b = povm_purity_matrix(p, &f, &basis).unwrap();
        assert!((a - b).abs() < 1e-10, "p = {p}: {a} vs {b}");
    }
}

#[test]
fn povm_element_is_kraus_product() {
    let u = unit_ratio_u();
    let f = KrausFamily::new(1.0, 0.25, 150.0, u, 4).unwrap();
    let basis = SqueezedNumberBasis::fock(50, u, 5).unwrap();
    let m = kraus_operator(1.7, &f, &basis).unwrap().to_dense();
    let e = povm_element(1.7, &f, &basis).unwrap().to_dense();
    let mm = m.t().mapv(|v| v.conj()).dot(&m);
    let diff = (&mm - &e).iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
}

#[test]
fn kraus_reweights_coefficients() {
    let u = unit_ratio_u();
    let f = KrausFamily::new(1.0, 0.25, 150.0, u, 10).unwrap();
    let basis = SqueezedNumberBasis::fock(60, u, 11).unwrap();
    let psi = coherent_state(60, C64::new(0.7, 0.0)).unwrap();
    let c = basis.coefficients(&psi).unwrap();
    let m = kraus_operator(2.3, &f, &basis).unwrap();
    let out = basis.coefficients(&psi.apply(&m).unwrap()).unwrap();
    let amps = f.amplitudes(2.3);
    for n in 0..=10 {
        assert!((out[n] - amps[n] * c[n]).norm() < 1e-9, "N = {n}");
    }
}

#[test]
fn well_separated_outcomes_select_disjoint_numbers() {
    let u = unit_ratio_u();
    let (d, w) = (1.0, 0.125);
    let f = KrausFamily::new(d, w, 0.0, u, 6).unwrap();
    let basis = SqueezedNumberBasis::fock(60, u, 7).unwrap();
    let psi = coherent_state(60, C64::new(0.7, 0.0)).unwrap();
    let a = apply_measurement(&psi, peak(1, d), &f, &basis).unwrap();
    let b = apply_measurement(&psi, peak(3, d), &f, &basis).unwrap();
    assert!(a.state.fidelity(&b.state).unwrap().sqrt() < 1e-6);
}

#[test]
fn repeatability_at_projective_limit() {
    let u = unit_ratio_u();
    let f = KrausFamily::new(1.0, 0.125, 150.0, u, 8).unwrap();
    let basis = SqueezedNumberBasis::fock(60, u, 9).unwrap();
    let psi = coherent_state(60, C64::new(0.7, 0.0)).unwrap();
    for n in 0..4 {
        let once = apply_measurement(&psi, peak(n, 1.0), &f, &basis).unwrap();
        let twice = apply_measurement(&once.state, peak(n, 1.0), &f, &basis).unwrap();
        let change = 1.0 - once.state.fidelity(&twice.state).unwrap();
        assert!(change < 1e-6, "N = {n}: {change}");
    }
}

#[test]
fn squeezed_vacuum_outcome_is_single_gaussian() {
    let u = unit_ratio_u();
    let f = KrausFamily::new(1.0, 0.25, 150.0, u, 3).unwrap();
    let basis = SqueezedNumberBasis::fock(50, u, 4).unwrap();
    let p = outcome_distribution(&basis.state(0), &f, &basis).unwrap();
    let xs = f.grid.points();
    let mass: f64 = p.iter().sum::<f64>() * f.grid.step;
    let mean: f64 = xs.iter().zip(&p).map(|(x, v)| x * v).sum::<f64>() * f.grid.step;
    let var: f64 = xs.iter().zip(&p).map(|(x, v)| (x - mean).powi(2) * v).sum::<f64>() * f.grid.step;
    assert!((mass - 1.0).abs() < 1e-6);
    assert!((mean - 0.5).abs() < 1e-6);
    assert!((var.sqrt() - 0.25).abs() < 1e-6);
}

#[test]
fn coherent_input_gives_comb_at_half_integers() {
    let u = unit_ratio_u();
    let f = KrausFamily::new(1.0, 0.25, 150.0, u, 12).unwrap();
    let basis = SqueezedNumberBasis::fock(60, u, 13).unwrap();
    let psi = coherent_state(60, C64::new(0.7, 0.0)).unwrap();
    let p = outcome_distribution(&psi, &f, &basis).unwrap();
    let at = |x: f64| p[((x - f.grid.min) / f.grid.step).round() as usize];
    for n in 0..4 {
        assert!(at(peak(n, 1.0)) > at(1.0 * (n + 1) as f64));
    }
    assert!((p.iter().sum::<f64>() * f.grid.step - 1.0).abs() < 1e-3);
}

#[test]
fn peak_outcome_projects_with_high_fidelity() {
    let u = unit_ratio_u();
    let f = KrausFamily::new(1.0, 0.25, 150.0, u, 10).unwrap();
    let basis = SqueezedNumberBasis::fock(60, u, 11).unwrap();
    let psi = coherent_state(60, C64::new(0.7, 0.0)).unwrap();
    let out = apply_measurement(&psi, peak(1, 1.0), &f, &basis).unwrap();
    assert_eq!(out.nearest, 1);
    assert!(out.fidelity_nearest > 0.9);
    assert!((out.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-8);
}

#[test]
fn midpoint_outcome_gives_equal_superposition() {
    let u = unit_ratio_u();
    let f = KrausFamily::new(1.0, 0.25, 150.0, u, 4).unwrap();
    let basis = SqueezedNumberBasis::fock(50, u, 5).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = basis
        .synthesize(&[C64::new(0.0, 0.0), C64::new(h, 0.0), C64::new(h, 0.0)])
        .unwrap();
    let out = apply_measurement(&psi, 2.0, &f, &basis).unwrap();
    assert!((out.posterior[1] - 0.5).abs() < 1e-6);
    assert!((out.posterior[2] - 0.5).abs() < 1e-6);
    // The relative phase carries e^{−iΔt}.
    let c = basis.coefficients(&out.state).unwrap();
    let rel = (c[2] / c[1]).arg();
    let want = C64::from_polar(1.0, -150.0).arg();
    assert!((rel - want).abs() < 1e-6);
    assert!((f.povm_purity(2.0).unwrap() - 0.5).abs() < 1e-3);
}

#[test]
fn plain_number_basis_gives_fock_states() {
    let f = KrausFamily::new(1.0, 0.1, 0.0, 0.0, 5).unwrap();
    let basis = SqueezedNumberBasis::fock(12, 0.0, 6).unwrap();
    let psi = coherent_state(12, C64::new(0.6, 0.0)).unwrap().padded(12);
    for n in 0..4 {
        let out = apply_measurement(&psi, peak(n, 1.0), &f, &basis).unwrap();
        assert!(out.state.fidelity(&Ket::fock(12, n).unwrap()).unwrap() > 1.0 - 1e-10);
    }
}

#[test]
fn vacuum_occupies_only_even_squeezed_numbers() {
    let u = unit_ratio_u();
    let basis = SqueezedNumberBasis::fock(60, u, 8).unwrap();
    let w: Vec<f64> = basis
        .coefficients(&Ket::fock(60, 0).unwrap())
        .unwrap()
        .iter()
        .map(|c| c.norm_sqr())
        .collect();
    assert!((w[0] - 1.0 / u.cosh()).abs() < 1e-10);
    for n in (1..8).step_by(2) {
        assert!(w[n] < 1e-20);
    }
}

#[test]
fn sandwich_preserves_outcome_statistics() {
    let u = unit_ratio_u();
    let f = KrausFamily::new(1.0, 0.25, 150.0, u, 10).unwrap();
    let basis = SqueezedNumberBasis::fock(60, u, 11).unwrap();
    let s = Sandwich::new(squeeze_unitary(60, 0.2).unwrap()).unwrap();
    let psi = coherent_state(60, C64::new(0.5, 0.2)).unwrap();
    let p0 = outcome_distribution(&psi, &f, &basis).unwrap();
    let p1 = outcome_distribution(&s.map_state(&psi).unwrap(), &f, &s.effective_basis(&basis).unwrap()).unwrap();
    for (a, b) in p0.iter().zip(&p1) {
        assert!((a - b).abs() < 1e-10);
    }
    match basis_transform_sandwich(SandwichInput::State(&psi), &s.unitary).unwrap() {
        SandwichOutput::State(k) => assert!(k.fidelity(&s.map_state(&psi).unwrap()).unwrap() > 1.0 - 1e-12),
        SandwichOutput::Operator(_) => panic!("expected a state"),
    }
}

#[test]
fn sandwich_with_inverse_squeeze_measures_photon_number() {
    let u = unit_ratio_u();
    let s = Sandwich::inverse_bogoliubov(50, u).unwrap();
    let basis = SqueezedNumberBasis::fock(50, u, 5).unwrap();
    let eff = s.effective_basis(&basis).unwrap();
    for n in 0..5 {
        assert!(eff.state(n).fidelity(&Ket::fock(50, n).unwrap()).unwrap() > 1.0 - 1e-6);
    }
}

#[test]
fn small_protocol_conserves_excitation_number() {
    let cfg = QndConfig {
        big_delta: 60.0,
        alpha: [0.4, 0.1],
        n_signal: 50,
        n_pump: 200,
        bins: 3,
        kraus_checks: 20,
        wigner: None,
        ..QndConfig::default()
    };
    let out = run_qnd_protocol(&cfg).unwrap();
    let s = &out.summary;
    assert!((s.n_a_final - s.n_a_initial).abs() < 1e-8);
    assert_eq!(s.kraus_checks.len(), 20);
    assert!(s.min_kraus_fidelity > 0.999);
    assert!(out.conditional.iter().all(|r| (r.trace().re - 1.0).abs() < 1e-10));
    let p = SystemParams::from_targets(60.0, 1.0, 1.0).unwrap();
    assert!((s.delta - p.delta).abs() < 1e-12);
}

proptest! {
    #[test]
    fn purity_in_unit_interval(p in -1.0f64..8.0, w in 0.1f64..0.6, d in 0.5f64..2.0) {
        let f = KrausFamily::new(d, w, 1.0, 0.0, 6).unwrap();
        let v = f.povm_purity(p).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0 + 1e-12);
    }

    #[test]
    fn posterior_sums_to_one(p in 0.0f64..5.0, re in -0.8f64..0.8, im in -0.8f64..0.8) {
        let u = 0.3;
        let f = KrausFamily::new(1.0, 0.3, 10.0, u, 12).unwrap();
        let basis = SqueezedNumberBasis::fock(60, u, 13).unwrap();
        let psi = coherent_state(60, C64::new(re, im)).unwrap();
        let out = apply_measurement(&psi, p, &f, &basis).unwrap();
        prop_assert!((out.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        prop_assert!((out.state.norm() - 1.0).abs() < 1e-8);
    }
}

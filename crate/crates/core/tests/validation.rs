use paraqnd_core::validation::*;

#[test]
fn invariant_suite_passes() {
    let report = run_invariant_suite().unwrap();
    for c in &report.checks {
        println!("{:<60} {:.3e} < {:.0e} {}", c.name, c.value, c.tolerance, if c.pass { "ok" } else { "FAIL" });
    }
    assert!(report.all_pass());
    for prefix in ["opo.offset_independence", "h_eff.commutes_with_n_a", "h_eff.commutes_with_x_b", "heisenberg.", "factory."] {
        assert!(report.group(prefix).count() > 0, "{prefix}");
    }
}

#[test]
fn offset_difference_is_exactly_cancelled_by_the_drive() {
    for beta in [0.0, 0.3, 4.0] {
        assert!(offset_generator_difference(beta).unwrap() < 1e-10);
    }
}

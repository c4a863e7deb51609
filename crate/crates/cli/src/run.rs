//! Experiment drivers. Every run writes its artifacts through an
//! [`OutputDir`] and finishes with `manifest.json`, which lists each file
//! with its SHA-256 and the physics checks that gate the exit status.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use paraqnd_core::fock::{noise_db, Grid};
use paraqnd_core::gkp::run_gkp_protocol;
use paraqnd_core::opo::run_opo_trajectories;
use paraqnd_core::qnd::{run_qnd_protocol, KrausFamily};
use paraqnd_core::rng::SEED_POLICY;
use paraqnd_core::validation::{run_invariant_suite, InvariantCheck};
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::output::{sha256_hex, FileEntry, OutputDir};

/// Relative tolerance on the unconditional trace lost to truncation.
const TRACE_LOSS_TOL: f64 = 1e-4;
const PROBABILITY_MASS_TOL: f64 = 1e-3;
const COMPLETENESS_TOL: f64 = 1e-3;
const EVOLUTION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    /// Resolved configuration; feeding it back reproduces the run.
    pub config: ExperimentConfig,
    /// Digest of the canonical JSON form of `config`.
    pub config_sha256: String,
    pub code_version: String,
    pub seed: Option<u64>,
    pub seed_policy: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Every artifact except the manifest itself.
    pub files: Vec<FileEntry>,
    pub checks: Vec<InvariantCheck>,
    pub pass: bool,
}

impl RunManifest {
    pub fn failures(&self) -> impl Iterator<Item = &InvariantCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn physics(e: paraqnd_core::Error) -> CliError {
    CliError::Physics(e.to_string())
}

fn canonical_json(config: &ExperimentConfig) -> Result<String, CliError> {
    serde_json::to_string(config).map_err(|e| CliError::Io(e.into()))
}

/// Runs `config` (already resolved) into `out` and writes the manifest.
/// Failed physics checks are reported in the manifest, not as an error.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunManifest, CliError> {
    config.validate()?;
    let started_unix = unix_now();
    let mut dir = OutputDir::create(out)?;
    let checks = match config.experiment {
        Experiment::QndProtocol => run_qnd(config, &mut dir)?,
        Experiment::PovmPurity => run_povm(config, &mut dir)?,
        Experiment::GkpGenerate => run_gkp(config, &mut dir)?,
        Experiment::OpoTrajectories => run_opo(config, &mut dir)?,
        Experiment::Validate => run_validate(&mut dir)?,
    };
    let manifest = RunManifest {
        experiment: config.experiment,
        config: config.clone(),
        config_sha256: sha256_hex(canonical_json(config)?.as_bytes()),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        seed_policy: SEED_POLICY.to_string(),
        started_unix,
        finished_unix: unix_now(),
        files: dir.files().to_vec(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    };
    dir.write_json("manifest.json", &manifest)?;
    Ok(manifest)
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn run_qnd(config: &ExperimentConfig, dir: &mut OutputDir) -> Result<Vec<InvariantCheck>, CliError> {
    let data = run_qnd_protocol(&config.qnd).map_err(physics)?;
    let s = &data.summary;
    let params = format!("g = {}, Delta = {}, g_tilde = {}, t = {}, w = {}", s.config.g, s.config.big_delta, s.config.g_tilde, s.config.t, s.config.w);
    let grid = &data.p_grid;
    dir.write_csv(
        "probability.csv",
        &[
            ("quantity", "pump p-quadrature outcome density after the interaction".into()),
            ("units", "p_b in vacuum units (Var p = 1/4); densities per unit p_b; purity dimensionless".into()),
            ("P_sim", "|<p_b| psi(t)>|^2 summed over the signal, from the full unitary".into()),
            ("P_kraus", "sum_N |C_N(p_b)|^2 |<N_a|alpha>|^2 from the Kraus family".into()),
            ("purity", "Tr(F^2)/Tr(F)^2 of the POVM element; nan where undefined".into()),
            ("parameters", params.clone()),
        ],
        &["p_b", "P_sim", "P_kraus", "purity"],
        (0..grid.len).map(|i| vec![grid.point(i), data.probability[i], data.kraus_probability[i], opt(data.purity[i])]),
    )?;
    dir.write_csv(
        "bins.csv",
        &[
            ("quantity", "outcome windows centred on d(N + 1/2)".into()),
            ("columns", "window index, bounds in p_b, outcome probability, fidelity of the averaged signal with the squeezed number state, same from the Kraus model".into()),
            ("parameters", params.clone()),
        ],
        &["n", "p_lo", "p_hi", "probability", "fidelity", "kraus_fidelity"],
        s.bins.iter().map(|b| vec![b.n as f64, b.p_lo, b.p_hi, b.probability, b.fidelity, b.kraus_fidelity]),
    )?;
    dir.write_csv(
        "kraus_checks.csv",
        &[
            ("quantity", "fidelity of the conditional signal with the Kraus prediction at sampled outcomes".into()),
            ("parameters", params),
        ],
        &["p_b", "probability_density", "fidelity"],
        s.kraus_checks.iter().map(|k| vec![k.p_b, k.probability_density, k.fidelity]),
    )?;
    let checks = vec![InvariantCheck::below(
        "qnd.probability_mass",
        (s.probability_mass - 1.0).abs(),
        PROBABILITY_MASS_TOL,
    )];
    if let Some(w) = &data.wigner {
        let panels = [
            ("wigner_signal_initial", &w.initial_signal),
            ("wigner_pump_initial", &w.initial_pump),
            ("wigner_signal_final", &w.final_signal),
            ("wigner_pump_final", &w.final_pump),
        ];
        for (stem, g) in panels {
            dir.write_wigner(stem, g, &[])?;
        }
        for (n, g) in w.conditional.iter().enumerate() {
            let stem = format!("wigner_signal_conditional_{n:02}");
            dir.write_wigner(&stem, g, &[("condition", format!("p_b within outcome window {n}"))])?;
        }
    }
    dir.write_json("summary.json", s)?;
    Ok(checks)
}

#[derive(Serialize)]
struct PovmSummary<'a> {
    d: f64,
    n_max: usize,
    widths: &'a [f64],
    /// Completeness error of each family on its own full-coverage grid.
    completeness_error: Vec<f64>,
}

fn run_povm(config: &ExperimentConfig, dir: &mut OutputDir) -> Result<Vec<InvariantCheck>, CliError> {
    let p = &config.povm;
    let grid = Grid::new(p.p_min, p.p_max, p.step).map_err(physics)?;
    let mut families = Vec::with_capacity(p.widths.len());
    for &w in &p.widths {
        families.push(KrausFamily::new(p.d, w, 0.0, 0.0, p.n_max).map_err(physics)?);
    }
    let completeness: Vec<f64> = families.iter().map(KrausFamily::completeness_error).collect();
    let curves: Vec<Vec<Option<f64>>> = families
        .iter()
        .map(|f| f.clone().with_grid(grid).purity_curve())
        .collect();
    let mut header = vec!["p_b".to_string()];
    header.extend(p.widths.iter().map(|w| format!("purity_w{w}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    dir.write_csv(
        "purity.csv",
        &[
            ("quantity", "POVM purity Tr(F^2)/Tr(F)^2 against outcome, one column per pump width w".into()),
            ("units", "p_b in vacuum units (Var p = 1/4); purity dimensionless; nan where undefined".into()),
            ("parameters", format!("d = {}, N_max = {}", p.d, p.n_max)),
        ],
        &header,
        (0..grid.len).map(|i| {
            let mut row = vec![grid.point(i)];
            row.extend(curves.iter().map(|c| opt(c[i])));
            row
        }),
    )?;
    dir.write_json(
        "summary.json",
        &PovmSummary {
            d: p.d,
            n_max: p.n_max,
            widths: &p.widths,
            completeness_error: completeness.clone(),
        },
    )?;
    Ok(p.widths
        .iter()
        .zip(completeness)
        .map(|(w, c)| InvariantCheck::below(format!("povm.completeness_w{w}"), c, COMPLETENESS_TOL))
        .collect())
}

fn run_gkp(config: &ExperimentConfig, dir: &mut OutputDir) -> Result<Vec<InvariantCheck>, CliError> {
    let data = run_gkp_protocol(&config.gkp).map_err(physics)?;
    let r = &data.report;
    let params = format!(
        "w = {}, A = {}, g_tilde t = {}, Delta t = {}, epsilon = {}, phi = {}",
        r.w, r.a0, r.config.g_tilde_t, r.delta_t, r.config.epsilon, r.config.phi
    );
    let xg = &data.x_grid;
    dir.write_csv(
        "wavefunction_x.csv",
        &[
            ("quantity", "pump x-wavefunctions: conditional state after the meter, state after feedforward, target grid state".into()),
            ("units", "x in vacuum units (Var x = 1/4); amplitudes per sqrt(unit x)".into()),
            ("parameters", params.clone()),
        ],
        &["x", "cond_re", "cond_im", "final_re", "final_im", "target_re", "target_im"],
        (0..xg.len).map(|i| {
            let (c, f, t) = (data.conditional.psi[i], data.final_state.psi[i], data.target_state.psi[i]);
            vec![xg.point(i), c.re, c.im, f.re, f.im, t.re, t.im]
        }),
    )?;
    let pg = &data.p_grid;
    dir.write_csv(
        "wavefunction_p.csv",
        &[
            ("quantity", "pump p-wavefunctions after feedforward and of the target grid state".into()),
            ("units", "p in vacuum units (Var p = 1/4); amplitudes per sqrt(unit p)".into()),
            ("parameters", params),
        ],
        &["p", "final_re", "final_im", "target_re", "target_im"],
        (0..pg.len).map(|i| {
            let (f, t) = (data.final_p[i], data.target_p[i]);
            vec![pg.point(i), f.re, f.im, t.re, t.im]
        }),
    )?;
    let checks = vec![InvariantCheck::below("gkp.evolution_vs_kraus", r.evolution_vs_kraus, EVOLUTION_TOL)];
    if let Some(w) = &data.wigner {
        dir.write_wigner("wigner_pump_final", w, &[])?;
    }
    dir.write_json("report.json", r)?;
    Ok(checks)
}

fn run_opo(config: &ExperimentConfig, dir: &mut OutputDir) -> Result<Vec<InvariantCheck>, CliError> {
    let run = run_opo_trajectories(&config.opo).map_err(physics)?;
    let c = &run.config;
    let params = format!(
        "g = {}, g_tilde = {}, Delta = {}, kappa_a = {}, kappa_b = {}, dt = {}, seed = {}",
        c.g, c.g_tilde, c.big_delta, c.kappa_a, c.kappa_b, c.dt, c.base_seed
    );
    for rec in &run.records {
        dir.write_csv(
            &format!("trajectory_{:03}.csv", rec.index),
            &[
                ("quantity", "conditional expectations along one pump-homodyne trajectory".into()),
                ("units", "t in inverse coupling units; p_b in vacuum units; noise in dB relative to vacuum (Var = 1/4)".into()),
                ("current", "homodyne current averaged over each recording interval".into()),
                ("seed", format!("base {} stream {} ({SEED_POLICY})", rec.base_seed, rec.index)),
                ("parameters", params.clone()),
            ],
            &["t", "N_a", "p_b", "var_x_a", "noise_x_a_db", "current"],
            (0..rec.times.len()).map(|i| {
                let v = rec.var_x_a[i];
                vec![rec.times[i], rec.n_a[i], rec.p_b[i], v, noise_db(v), rec.current[i]]
            }),
        )?;
    }
    dir.write_csv(
        "plateaus.csv",
        &[
            ("quantity", "detected constant-N_a plateaus with mean pump quadrature and expected level".into()),
            ("parameters", params.clone()),
        ],
        &["trajectory", "t_start", "t_end", "level", "mean_N_a", "p_b", "expected_p_b", "p_b_rel_error", "min_noise_db"],
        run.analyses.iter().flat_map(|a| {
            a.plateaus.iter().map(move |p| {
                vec![a.index as f64, p.t_start, p.t_end, p.level as f64, p.mean_n_a, p.p_b, p.expected_p_b, p.p_b_rel_error, p.min_noise_db]
            })
        }),
    )?;
    dir.write_csv(
        "jumps.csv",
        &[
            ("quantity", "photon-number jumps and the time p_b reached the new level (nan if never)".into()),
            ("parameters", params.clone()),
        ],
        &["trajectory", "from", "to", "t_jump", "t_p_b"],
        run.analyses.iter().flat_map(|a| {
            a.jumps.iter().map(move |j| vec![a.index as f64, j.from as f64, j.to as f64, j.time, opt(j.p_b_time)])
        }),
    )?;
    let s = &run.summary;
    dir.write_csv(
        "ensemble.csv",
        &[
            ("quantity", "trajectory average against the unconditional master equation".into()),
            ("bound", format!("trace distance must stay below {}", s.trace_distance_bound)),
            ("parameters", params),
        ],
        &["t", "trace_distance", "ensemble_N_a", "master_N_a", "master_trace_loss"],
        s.comparisons.iter().map(|e| vec![e.time, e.trace_distance, e.ensemble_n_a, e.master_n_a, e.master_trace_loss]),
    )?;
    dir.write_json("summary.json", s)?;
    let trace_loss = s.comparisons.iter().map(|e| e.master_trace_loss.abs()).fold(0.0, f64::max);
    Ok(vec![
        InvariantCheck::below("opo.trace_distance", s.max_trace_distance, s.trace_distance_bound),
        InvariantCheck::below("opo.master_trace_loss", trace_loss, TRACE_LOSS_TOL),
    ])
}

fn run_validate(dir: &mut OutputDir) -> Result<Vec<InvariantCheck>, CliError> {
    let report = run_invariant_suite().map_err(physics)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["name", "value", "tolerance", "pass"])
            .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
        for c in &report.checks {
            w.write_record([
                c.name.clone(),
                crate::output::fmt_num(c.value),
                crate::output::fmt_num(c.tolerance),
                c.pass.to_string(),
            ])
            .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
        }
        w.flush()?;
    }
    dir.write_bytes("checks.csv", &buf)?;
    dir.write_json("validation.json", &report)?;
    Ok(report.checks)
}

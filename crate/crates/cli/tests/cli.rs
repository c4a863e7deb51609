use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use paraqnd_cli::config::to_toml;
use paraqnd_cli::output::WignerAxes;
use paraqnd_cli::{parse_config, run_experiment, CliError, Experiment, ExperimentConfig, RunManifest};

const ALL: [Experiment; 5] = [
    Experiment::QndProtocol,
    Experiment::PovmPurity,
    Experiment::GkpGenerate,
    Experiment::OpoTrajectories,
    Experiment::Validate,
];

fn preset_path(e: Experiment) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(format!("{}.toml", e.id()))
}

fn config_err(text: &str) -> String {
    match parse_config(text) {
        Err(CliError::Config(msg)) => msg,
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

fn small_opo(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Experiment::OpoTrajectories);
    c.seed = Some(seed);
    c.opo.n_signal = 4;
    c.opo.initial_n_a = 1;
    c.opo.kappa_a = 0.3;
    c.opo.trajectories = 3;
    c.opo.duration = 2.0;
    c.opo.record_every = 10;
    c.opo.checkpoints = 2;
    c.resolve().unwrap()
}

fn checksums(m: &RunManifest) -> BTreeMap<String, String> {
    m.files.iter().map(|f| (f.path.clone(), f.sha256.clone())).collect()
}

/// Comment lines, header and numeric rows of a CLI CSV table.
fn read_table(path: &Path) -> (Vec<String>, Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let comments = text.lines().take_while(|l| l.starts_with('#')).map(str::to_string).collect();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|s| s.parse::<f64>().unwrap()).collect())
        .collect();
    (comments, header, rows)
}

#[test]
fn presets_parse_to_the_defaults() {
    for e in ALL {
        let text = fs::read_to_string(preset_path(e)).unwrap();
        let c = parse_config(&text).unwrap();
        let d = ExperimentConfig::new(e);
        assert_eq!(c.experiment, e);
        assert_eq!((&c.qnd, &c.povm, &c.gkp), (&d.qnd, &d.povm, &d.gkp), "{}", e.id());
        let mut opo = d.opo.clone();
        opo.base_seed = c.opo.base_seed;
        assert_eq!(c.opo, opo, "{}", e.id());
    }
}

#[test]
fn empty_config_lists_required_keys() {
    for text in ["", "  \n\t"] {
        let msg = config_err(text);
        assert!(msg.contains("required keys: experiment"), "{msg}");
    }
}

#[test]
fn missing_experiment_lists_required_keys() {
    let msg = config_err("seed = 3\n");
    assert!(msg.contains("experiment"), "{msg}");
    assert!(msg.contains("required keys"), "{msg}");
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(config_err("experiment = \"validate\"\nspeed = 1\n").contains("speed"));
    assert!(config_err("experiment = \"povm-purity\"\n[povm]\nwidth = 0.1\n").contains("width"));
    assert!(config_err("experiment = \"opo-trajectories\"\n[opo.detector]\nwindows = 3\n").contains("windows"));
    assert!(config_err("{\"experiment\": \"validate\", \"extra\": 1}").contains("extra"));
}

#[test]
fn bogoliubov_domain_is_a_config_error() {
    for (delta, r) in [(1.0, 1.0), (0.5, 1.0), (1.0, -0.1)] {
        let text = format!("experiment = \"qnd-protocol\"\n[params]\ndelta = {delta}\nr = {r}\n");
        let msg = config_err(&text);
        assert!(msg.to_lowercase().contains("delta") || msg.contains('δ'), "{msg}");
    }
}

#[test]
fn bare_params_replace_targets() {
    let c = parse_config("experiment = \"opo-trajectories\"\n[params]\ndelta = 2.0\nr = 1.0\n").unwrap();
    let u = 0.5 * 0.5f64.atanh();
    assert!((c.opo.big_delta - 3f64.sqrt()).abs() < 1e-12);
    assert!((c.opo.g_tilde - (2.0 * u).sinh()).abs() < 1e-12);
    assert_eq!(c.qnd.big_delta, c.opo.big_delta);
}

#[test]
fn invalid_sections_are_config_errors() {
    config_err("experiment = \"povm-purity\"\n[povm]\nwidths = []\n");
    config_err("experiment = \"povm-purity\"\n[povm]\np_min = 3.0\np_max = 1.0\n");
    config_err("experiment = \"qnd-protocol\"\n[qnd]\nt = -1.0\n");
    config_err("experiment = \"opo-trajectories\"\n[opo]\ntrajectories = 0\n");
    config_err("experiment = \"gkp-generate\"\n[gkp]\nx_grid = { min = 1.0, max = -1.0, step = 0.1 }\n");
}

#[test]
fn json_round_trip_is_lossless() {
    for e in ALL {
        let mut c = ExperimentConfig::new(e);
        c.seed = Some(11);
        c.qnd.wigner = None;
        c.gkp.wigner = None;
        c.gkp.a0 = Some(3.5);
        c.povm.widths = vec![0.3, 0.1 + 0.2];
        let c = c.resolve().unwrap();
        let back = parse_config(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c, "{}", e.id());
    }
}

#[test]
fn toml_round_trip_of_presets() {
    for e in ALL {
        let c = parse_config(&fs::read_to_string(preset_path(e)).unwrap()).unwrap();
        let back = parse_config(&to_toml(&c).unwrap()).unwrap();
        assert_eq!(back, c, "{}", e.id());
    }
}

#[test]
fn manifest_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig::new(Experiment::PovmPurity).resolve().unwrap();
    let m = run_experiment(&c, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let stored: RunManifest = serde_json::from_str(&text).unwrap();
    assert_eq!(stored, m);
    let replay = parse_config(&serde_json::to_string(&stored.config).unwrap()).unwrap();
    assert_eq!(replay, c);
    assert!(m.files.iter().all(|f| f.path != "manifest.json"));
    for f in &m.files {
        let bytes = fs::read(dir.path().join(&f.path)).unwrap();
        assert_eq!(bytes.len() as u64, f.bytes);
        assert_eq!(paraqnd_cli::output::sha256_hex(&bytes), f.sha256);
    }
}

#[test]
fn povm_run_schema() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig::new(Experiment::PovmPurity).resolve().unwrap();
    let m = run_experiment(&c, dir.path()).unwrap();
    assert!(m.pass);
    let (comments, header, rows) = read_table(&dir.path().join("purity.csv"));
    assert!(comments.iter().any(|l| l.starts_with("# units:")));
    assert_eq!(header, ["p_b", "purity_w0.5", "purity_w0.25", "purity_w0.125"]);
    assert_eq!(rows.len(), 1401);
    assert!((rows[0][0] + 1.0).abs() < 1e-12);
    // Midway between teeth the narrowest pump mixes two levels equally.
    let mid = rows.iter().find(|r| (r[0] - 2.0).abs() < 1e-9).unwrap();
    assert!((mid[3] - 0.5).abs() < 1e-6, "{mid:?}");
    assert!(rows.iter().flat_map(|r| &r[1..]).all(|p| p.is_nan() || (*p > 0.0 && *p <= 1.0 + 1e-12)));
}

#[test]
fn opo_run_schema_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = small_opo(5);
    let ma = run_experiment(&c, a.path()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mb = pool.install(|| run_experiment(&c, b.path())).unwrap();
    assert_eq!(checksums(&ma), checksums(&mb));
    assert_eq!(ma.config_sha256, mb.config_sha256);
    assert!(ma.pass, "{:?}", ma.checks);
    assert_eq!(ma.seed, Some(5));

    let (comments, header, rows) = read_table(&a.path().join("trajectory_002.csv"));
    assert!(comments.iter().any(|l| l.contains("stream 2")));
    assert_eq!(header, ["t", "N_a", "p_b", "var_x_a", "noise_x_a_db", "current"]);
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0][1], 1.0);
    for r in &rows {
        assert!((r[4] - 10.0 * (r[3] / 0.25).log10()).abs() < 1e-9);
    }
    let (_, header, rows) = read_table(&a.path().join("ensemble.csv"));
    assert_eq!(header, ["t", "trace_distance", "ensemble_N_a", "master_N_a", "master_trace_loss"]);
    assert_eq!(rows.len(), 2);
    for name in ["plateaus.csv", "jumps.csv", "summary.json"] {
        assert!(a.path().join(name).exists(), "{name}");
    }

    let other = tempfile::tempdir().unwrap();
    let mo = run_experiment(&small_opo(6), other.path()).unwrap();
    assert_ne!(checksums(&mo)["trajectory_000.csv"], checksums(&ma)["trajectory_000.csv"]);
}

#[test]
fn gkp_wigner_grid_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::new(Experiment::GkpGenerate);
    c.gkp.wigner.as_mut().unwrap().step = 0.1;
    let c = c.resolve().unwrap();
    let m = run_experiment(&c, dir.path()).unwrap();
    assert!(m.pass, "{:?}", m.checks);
    let axes: WignerAxes =
        serde_json::from_str(&fs::read_to_string(dir.path().join("wigner_pump_final.axes.json")).unwrap()).unwrap();
    assert_eq!((axes.rows.as_str(), axes.columns.as_str()), ("p", "x"));
    let text = fs::read_to_string(dir.path().join("wigner_pump_final.csv")).unwrap();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .from_reader(text.as_bytes());
    let matrix: Vec<Vec<f64>> = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|s| s.parse().unwrap()).collect())
        .collect();
    assert_eq!(matrix.len(), axes.p.len());
    assert!(matrix.iter().all(|row| row.len() == axes.x.len()));
    let (dx, dp) = (axes.x[1] - axes.x[0], axes.p[1] - axes.p[0]);
    let integral: f64 = matrix.iter().flatten().sum::<f64>() * dx * dp;
    assert!((integral - axes.window_integral).abs() < 1e-9);
    assert!(axes.min_value < 0.0, "grid states have negative Wigner regions");

    let (_, header, rows) = read_table(&dir.path().join("wavefunction_x.csv"));
    assert_eq!(header, ["x", "cond_re", "cond_im", "final_re", "final_im", "target_re", "target_im"]);
    let dx = rows[1][0] - rows[0][0];
    let norm: f64 = rows.iter().map(|r| r[3] * r[3] + r[4] * r[4]).sum::<f64>() * dx;
    assert!((norm - 1.0).abs() < 1e-6, "{norm}");
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn validate_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig::new(Experiment::Validate).resolve().unwrap();
    let m = run_experiment(&c, dir.path()).unwrap();
    assert!(m.pass, "{:?}", m.failures().collect::<Vec<_>>());
    let text = fs::read_to_string(dir.path().join("checks.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("name,value,tolerance,pass"));
    assert_eq!(text.lines().count(), m.checks.len() + 1);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paraqnd"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };

    let ok = bin()
        .args(["povm-purity", "--out"])
        .arg(dir.path().join("ok"))
        .status()
        .unwrap();
    assert_eq!(ok.code(), Some(0));
    assert!(dir.path().join("ok/manifest.json").exists());

    let empty = write("empty.toml", "");
    let s = bin().arg("validate").arg("--config").arg(&empty).output().unwrap();
    assert_eq!(s.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&s.stderr).contains("required keys"));

    let unknown = write("unknown.toml", "experiment = \"validate\"\ncolour = 1\n");
    let s = bin().arg("validate").arg("--config").arg(&unknown).status().unwrap();
    assert_eq!(s.code(), Some(2));

    let mismatch = write("mismatch.toml", "experiment = \"validate\"\n");
    let s = bin().arg("povm-purity").arg("--config").arg(&mismatch).status().unwrap();
    assert_eq!(s.code(), Some(2));

    let s = bin().arg("validate").arg("--config").arg(dir.path().join("absent.toml")).status().unwrap();
    assert_eq!(s.code(), Some(2));

    // The QND pipeline projects the displaced-frame pump, so the lab frame fails at run time.
    let lab = write("lab.toml", "experiment = \"qnd-protocol\"\n[qnd]\nhamiltonian = \"lab\"\n");
    let s = bin()
        .arg("qnd-protocol")
        .arg("--config")
        .arg(&lab)
        .arg("--out")
        .arg(dir.path().join("lab"))
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(1));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("opo.json");
    let mut c = small_opo(1);
    c.opo.trajectories = 1;
    fs::write(&cfg, serde_json::to_string(&c).unwrap()).unwrap();
    let out = dir.path().join("run");
    let s = bin()
        .arg("opo-trajectories")
        .arg("--config")
        .arg(&cfg)
        .args(["--seed", "77", "--threads", "1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(0));
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.seed, Some(77));
    assert_eq!(m.config.opo.base_seed, 77);
}

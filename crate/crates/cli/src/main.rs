use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use paraqnd_cli::{parse_config, run_experiment, CliError, Experiment, ExperimentConfig};

/// Run one simulation experiment and write its artifacts and manifest.
#[derive(Parser, Debug)]
#[command(name = "paraqnd", version)]
struct Args {
    experiment: Experiment,
    /// TOML or JSON configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the configuration's `out`, then `out/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for trajectory ensembles; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn load(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => ExperimentConfig::new(args.experiment),
    };
    if config.experiment != args.experiment {
        return Err(CliError::Config(format!(
            "configuration is for '{}' but '{}' was requested",
            config.experiment.id(),
            args.experiment.id()
        )));
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    config.resolve()
}

fn run(args: &Args) -> Result<bool, CliError> {
    let config = load(args)?;
    if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(config.experiment.id()));
    let manifest = run_experiment(&config, &out)?;
    for c in &manifest.checks {
        let tag = if c.pass { "pass" } else { "FAIL" };
        println!("{tag} {} = {:.3e} (tolerance {:.1e})", c.name, c.value, c.tolerance);
    }
    println!("{} files written to {}", manifest.files.len() + 1, out.display());
    Ok(manifest.pass)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: physics checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

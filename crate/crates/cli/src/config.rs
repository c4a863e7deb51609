//! Experiment configuration: one TOML (or JSON) document naming the
//! experiment, with a section per experiment. Unknown keys are rejected.

use std::path::PathBuf;

use paraqnd_core::fock::params::bogoliubov_params;
use paraqnd_core::fock::SystemParams;
use paraqnd_core::gkp::GkpConfig;
use paraqnd_core::opo::OpoConfig;
use paraqnd_core::qnd::QndConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QndProtocol,
    PovmPurity,
    GkpGenerate,
    OpoTrajectories,
    Validate,
}

impl Experiment {
    pub fn id(self) -> &'static str {
        match self {
            Experiment::QndProtocol => "qnd-protocol",
            Experiment::PovmPurity => "povm-purity",
            Experiment::GkpGenerate => "gkp-generate",
            Experiment::OpoTrajectories => "opo-trajectories",
            Experiment::Validate => "validate",
        }
    }
}

/// Bare Hamiltonian parameters; when present they replace the `(Δ, g̃, g)`
/// targets of the selected experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BareParams {
    #[serde(default = "unit")]
    pub g: f64,
    /// Phase mismatch δ.
    pub delta: f64,
    /// `r = 2gβ`.
    pub r: f64,
}

fn unit() -> f64 {
    1.0
}

/// POVM purity curves for several pump widths at fixed `d = g̃t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PovmConfig {
    pub d: f64,
    pub widths: Vec<f64>,
    /// Highest squeezed photon number kept in the Kraus family.
    pub n_max: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub step: f64,
}

impl Default for PovmConfig {
    fn default() -> Self {
        Self {
            d: 1.0,
            widths: vec![0.5, 0.25, 0.125],
            n_max: 8,
            p_min: -1.0,
            p_max: 6.0,
            step: 0.005,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Base seed of all random streams; only trajectory runs draw numbers.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: Option<BareParams>,
    #[serde(default)]
    pub qnd: QndConfig,
    #[serde(default)]
    pub povm: PovmConfig,
    #[serde(default)]
    pub gkp: GkpConfig,
    #[serde(default)]
    pub opo: OpoConfig,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: None,
            out: None,
            params: None,
            qnd: QndConfig::default(),
            povm: PovmConfig::default(),
            gkp: GkpConfig::default(),
            opo: OpoConfig::default(),
        }
    }

    /// Folds `params` into the experiment sections and checks every value
    /// the selected experiment uses.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if let Some(p) = self.params {
            let bp = bogoliubov_params(p.delta, p.r, p.g).map_err(CliError::config)?;
            let (big_delta, g_tilde) = (bp.big_delta, bp.g_tilde);
            (self.qnd.g, self.qnd.big_delta, self.qnd.g_tilde) = (p.g, big_delta, g_tilde);
            (self.gkp.g, self.gkp.big_delta, self.gkp.g_tilde) = (p.g, big_delta, g_tilde);
            (self.opo.g, self.opo.big_delta, self.opo.g_tilde) = (p.g, big_delta, g_tilde);
        }
        if let Some(seed) = self.seed {
            self.opo.base_seed = seed;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        match self.experiment {
            Experiment::QndProtocol => {
                let q = &self.qnd;
                SystemParams::from_targets(q.big_delta, q.g_tilde, q.g)
                    .and_then(|p| p.bogoliubov())
                    .map_err(CliError::config)?;
                if !(q.t > 0.0) || !(q.w > 0.0) || q.bins == 0 || q.alpha.iter().any(|a| !a.is_finite()) {
                    return bad(format!(
                        "qnd needs t > 0, w > 0, finite alpha and at least one bin (t = {}, w = {}, bins = {})",
                        q.t, q.w, q.bins
                    ));
                }
            }
            Experiment::PovmPurity => {
                let p = &self.povm;
                if !(p.d > 0.0) || p.widths.is_empty() || p.widths.iter().any(|w| !(*w > 0.0)) {
                    return bad(format!("povm needs d > 0 and positive widths (d = {}, widths = {:?})", p.d, p.widths));
                }
                if !(p.step > 0.0) || !(p.p_max > p.p_min) || p.n_max == 0 {
                    return bad(format!(
                        "povm grid needs step > 0, p_max > p_min and n_max > 0 (step = {}, range = [{}, {}])",
                        p.step, p.p_min, p.p_max
                    ));
                }
            }
            Experiment::GkpGenerate => {
                let g = &self.gkp;
                SystemParams::from_targets(g.big_delta, g.g_tilde, g.g)
                    .and_then(|p| p.bogoliubov())
                    .map_err(CliError::config)?;
                g.meter().map_err(CliError::config)?;
                g.x_grid.build().map_err(CliError::config)?;
                g.p_grid.build().map_err(CliError::config)?;
                if !(g.pump_width() > 0.0) {
                    return bad(format!("gkp pump width must be positive, got {}", g.pump_width()));
                }
            }
            Experiment::OpoTrajectories => self.opo.validate().map_err(CliError::config)?,
            Experiment::Validate => {}
        }
        Ok(())
    }
}

/// Keys that every configuration must set.
pub const REQUIRED_KEYS: &[&str] = &["experiment"];

/// Parses a TOML document, or JSON when the text starts with `{`, and
/// resolves it.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return Err(CliError::Config(format!(
            "empty configuration; required keys: {}",
            REQUIRED_KEYS.join(", ")
        )));
    }
    let raw: ExperimentConfig = if trimmed.starts_with('{') {
        serde_json::from_str(text).map_err(CliError::config)?
    } else {
        toml::from_str(text).map_err(|e| {
            let msg = e.to_string();
            if msg.contains("missing field") {
                CliError::Config(format!("{msg}required keys: {}", REQUIRED_KEYS.join(", ")))
            } else {
                CliError::Config(msg)
            }
        })?
    };
    raw.resolve()
}

pub fn to_toml(config: &ExperimentConfig) -> Result<String, CliError> {
    toml::to_string(config).map_err(CliError::config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_ids_match_serde_names() {
        for e in [
            Experiment::QndProtocol,
            Experiment::PovmPurity,
            Experiment::GkpGenerate,
            Experiment::OpoTrajectories,
            Experiment::Validate,
        ] {
            assert_eq!(serde_json::to_string(&e).unwrap(), format!("\"{}\"", e.id()));
        }
    }

    #[test]
    fn seed_reaches_trajectories() {
        let c = parse_config("experiment = \"opo-trajectories\"\nseed = 9\n").unwrap();
        assert_eq!(c.opo.base_seed, 9);
    }
}

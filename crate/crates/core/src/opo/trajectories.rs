//! Conditional OPO trajectories under pump `p` homodyne with unmonitored
//! signal loss, plateau and jump detection, and the ensemble check against
//! the master equation.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blocks::{BlockModel, BlockState, PumpFrame, SmeIntegrator};
use super::channels::{build_opo_channels, opo_operators, rwa_lindblad_split, stationary_pump_amplitude, PUMP_HOMODYNE_THETA};
use crate::dynamics::hamiltonians::{effective_from, HamiltonianVariant};
use crate::dynamics::master::LindbladChannel;
use crate::dynamics::sme::{SmeObservables, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::fock::metrics::DensityMatrix;
use crate::fock::operators::Operators;
use crate::fock::states::{check_truncation, coherent_state, Ket};
use crate::C64;
use crate::fock::{noise_db, ModeSpace, SystemParams};
use crate::rng::{seed_policy, SEED_POLICY};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlateauDetector {
    /// Sliding window length in recorded samples.
    pub window: usize,
    /// A window is quiet when `Var(⟨N̂_a⟩)` over it is below this.
    pub max_variance: f64,
    /// Minimum level change between neighbouring plateaus counted as a jump.
    pub min_jump: f64,
}

impl Default for PlateauDetector {
    fn default() -> Self {
        Self {
            window: 50,
            max_variance: 0.1,
            min_jump: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpoConfig {
    pub g: f64,
    pub g_tilde: f64,
    pub big_delta: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    /// Only the effective Hamiltonian is supported.
    pub hamiltonian: HamiltonianVariant,
    pub n_signal: usize,
    /// Pump levels per block, counted in the block's frame.
    pub n_pump: usize,
    pub pump_frame: PumpFrame,
    /// Steps between moves of the signal-loss feeding into target blocks.
    pub transfer_every: usize,
    /// Initial state `|N_a⟩|β_{N_a}⟩`.
    pub initial_n_a: usize,
    pub trajectories: usize,
    pub duration: f64,
    pub dt: f64,
    pub record_every: usize,
    pub base_seed: u64,
    pub detector: PlateauDetector,
    /// RK4 step of the reference master equation.
    pub master_dt: f64,
    /// Number of equally spaced times at which the ensemble is compared
    /// with the master equation.
    pub checkpoints: usize,
    /// Largest tolerated population of the top pump level.
    pub truncation_tol: f64,
}

impl Default for OpoConfig {
    fn default() -> Self {
        Self {
            g: 1.0,
            g_tilde: 1.5,
            big_delta: 100.0,
            kappa_a: 0.03,
            kappa_b: 3.0,
            hamiltonian: HamiltonianVariant::Effective,
            n_signal: 6,
            n_pump: 16,
            pump_frame: PumpFrame::Stationary,
            transfer_every: 10,
            initial_n_a: 2,
            trajectories: 24,
            duration: 100.0,
            dt: 1e-3,
            record_every: 100,
            base_seed: 2024,
            detector: PlateauDetector::default(),
            master_dt: 5e-3,
            checkpoints: 10,
            truncation_tol: 1e-6,
        }
    }
}

impl OpoConfig {
    /// Displaced-frame parameters with the balanced drive.
    pub fn params(&self) -> Result<SystemParams> {
        let mut p = SystemParams::from_targets(self.big_delta, self.g_tilde, self.g)?.with_losses(self.kappa_a, self.kappa_b);
        p.lambda = p.balanced_drive();
        Ok(p)
    }

    pub fn space(&self) -> Result<ModeSpace> {
        ModeSpace::new(self.n_signal, self.n_pump)
    }

    pub fn squeeze(&self) -> Result<f64> {
        Ok(self.params()?.bogoliubov()?.u)
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// `Im β_N`, the expected plateau value of `⟨p_b⟩`.
    pub fn plateau_level(&self, n_a: usize) -> Result<f64> {
        Ok(stationary_pump_amplitude(n_a, self.g_tilde, self.kappa_b)?.im)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hamiltonian != HamiltonianVariant::Effective {
            return Err(Error::InvalidParameter(
                "OPO trajectories support only the effective Hamiltonian".into(),
            ));
        }
        let positive = [self.g, self.kappa_a, self.kappa_b, self.duration, self.dt, self.master_dt];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || !(self.g_tilde >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "OPO rates, duration and steps must be positive (g = {}, κ_a = {}, κ_b = {}, T = {}, dt = {}, master dt = {})",
                self.g, self.kappa_a, self.kappa_b, self.duration, self.dt, self.master_dt
            )));
        }
        if self.dt * self.g > 1e-3 + 1e-15 {
            return Err(Error::InvalidParameter(format!(
                "SME step g·dt = {} exceeds 1e-3",
                self.dt * self.g
            )));
        }
        if self.trajectories == 0 || self.record_every == 0 || self.checkpoints == 0 || self.transfer_every == 0 {
            return Err(Error::InvalidParameter(
                "trajectories, record_every, checkpoints and transfer_every must be positive".into(),
            ));
        }
        if self.record_every % self.transfer_every != 0 {
            return Err(Error::InvalidParameter(format!(
                "record_every = {} is not a multiple of transfer_every = {}",
                self.record_every, self.transfer_every
            )));
        }
        if self.initial_n_a + 1 >= self.n_signal {
            return Err(Error::InvalidParameter(format!(
                "initial level {} needs more than {} signal levels",
                self.initial_n_a, self.n_signal
            )));
        }
        if self.detector.window < 2 {
            return Err(Error::InvalidParameter("plateau window must span two samples".into()));
        }
        let steps = self.steps();
        if steps % self.checkpoints != 0 || (steps / self.checkpoints) % self.record_every != 0 {
            return Err(Error::InvalidParameter(format!(
                "{steps} steps do not split into {} checkpoints on the recording grid",
                self.checkpoints
            )));
        }
        self.params()?.bogoliubov()?;
        Ok(())
    }

    pub fn block_model(&self) -> Result<BlockModel> {
        BlockModel::new(
            self.space()?,
            self.g_tilde,
            self.squeeze()?,
            self.kappa_a,
            self.kappa_b,
            self.pump_frame,
        )
    }

    /// Initial pump amplitude `β_{N₀}`.
    pub fn initial_amplitude(&self) -> Result<C64> {
        stationary_pump_amplitude(self.initial_n_a, self.g_tilde, self.kappa_b)
    }

    pub fn initial_block_state(&self, model: &BlockModel) -> Result<BlockState> {
        let state = model.coherent_product(self.initial_n_a, self.initial_amplitude()?)?;
        let top = state.pump_top_population();
        if top > self.truncation_tol {
            return Err(Error::Truncation {
                population: top,
                tolerance: self.truncation_tol,
                context: "initial OPO pump state".into(),
            });
        }
        Ok(state)
    }
}

/// Signal-loss model of the joint-space reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalLoss {
    /// `√κ_a a`.
    Full,
    /// `L₊` and `L₋`.
    RwaSplit,
}

/// The OPO problem on the joint space in the squeezed-number basis, for
/// the generic master-equation and SME solvers.
#[derive(Clone, Debug)]
pub struct FullOpoModel {
    pub ops: Operators,
    pub h: CsrMatrix,
    pub channels: Vec<LindbladChannel>,
    pub observables: SmeObservables,
    pub rho0: DensityMatrix,
}

impl FullOpoModel {
    /// Displaced frame with `β = λ = 0`, where `L_b = √κ_b b`, on `n_pump`
    /// undisplaced pump levels.
    pub fn build(config: &OpoConfig, loss: SignalLoss, n_pump: usize) -> Result<Self> {
        let mut params = config.params()?;
        let ops = opo_operators(ModeSpace::new(config.n_signal, n_pump)?, &params)?;
        params.beta = 0.0;
        params.lambda = 0.0;
        let ch = build_opo_channels(&params, &ops)?;
        let h = effective_from(config.big_delta, config.g_tilde, &ops);
        let mut channels = match loss {
            SignalLoss::Full => vec![LindbladChannel::unmonitored(ch.l_a, "L_a")],
            SignalLoss::RwaSplit => {
                let split = rwa_lindblad_split(config.squeeze()?, config.kappa_a, config.n_signal)?;
                vec![
                    LindbladChannel::unmonitored(ops.embed_signal(&split.l_plus), "L_+"),
                    LindbladChannel::unmonitored(ops.embed_signal(&split.l_minus), "L_-"),
                ]
            }
        };
        channels.push(LindbladChannel::homodyne(ch.l_b, PUMP_HOMODYNE_THETA, "L_b"));
        let signal = Ket::fock(config.n_signal, config.initial_n_a)?;
        let pump = coherent_state(n_pump, config.initial_amplitude()?)?;
        check_truncation(&pump, config.truncation_tol, "initial OPO pump state")?;
        let rho0 = DensityMatrix::from_ket(&signal.kron(&pump));
        let observables = SmeObservables {
            big_n: ops.big_n.matrix.clone(),
            p_b: ops.p_b.matrix.clone(),
            x_a: ops.x_a.matrix.clone(),
        };
        Ok(Self {
            ops,
            h,
            channels,
            observables,
            rho0,
        })
    }
}

/// Interval of recorded samples `[start, end)` on which `⟨N̂_a⟩` sits at
/// one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub start: usize,
    pub end: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub level: usize,
    pub mean_n_a: f64,
    /// Median of `⟨p_b⟩` over the plateau.
    pub p_b: f64,
    pub expected_p_b: f64,
    pub p_b_rel_error: f64,
    /// Lowest signal `x` noise over the plateau, relative to vacuum.
    pub min_noise_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub from: usize,
    pub to: usize,
    /// When `⟨N̂_a⟩` crosses the midpoint between the two plateaus.
    pub time: f64,
    /// When `⟨p_b⟩` crosses the midpoint between the plateau values.
    pub p_b_time: Option<f64>,
}

impl Jump {
    pub fn lag(&self) -> Option<f64> {
        self.p_b_time.map(|t| t - self.time)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryAnalysis {
    pub index: u64,
    pub plateaus: Vec<Plateau>,
    pub jumps: Vec<Jump>,
    /// Lowest signal `x` noise on any `N_a = 0` plateau.
    pub zero_plateau_noise_db: Option<f64>,
    pub max_pump_top_population: f64,
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Plateaus of `n_a`: maximal runs of samples covered by a quiet window and
/// sharing one rounded level, at least one window long. Returns
/// `(start, end, level)`.
pub fn detect_plateaus(n_a: &[f64], detector: &PlateauDetector) -> Vec<(usize, usize, usize)> {
    let w = detector.window;
    let n = n_a.len();
    if n < w || w == 0 {
        return Vec::new();
    }
    let mut covered = vec![false; n];
    for s in 0..=n - w {
        if variance(&n_a[s..s + w]) < detector.max_variance {
            covered[s..s + w].iter_mut().for_each(|c| *c = true);
        }
    }
    let level = |i: usize| n_a[i].round().max(0.0) as usize;
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if !covered[i] {
            i += 1;
            continue;
        }
        let lv = level(i);
        let mut j = i + 1;
        while j < n && covered[j] && level(j) == lv {
            j += 1;
        }
        if j - i >= w {
            out.push((i, j, lv));
        }
        i = j;
    }
    out
}

fn crossing(times: &[f64], series: &[f64], from: usize, to: usize, threshold: f64, rising: bool) -> Option<f64> {
    (from..to.min(series.len()))
        .find(|&i| if rising { series[i] >= threshold } else { series[i] <= threshold })
        .map(|i| times[i])
}

/// Plateaus, jumps and squeezing of one recorded trajectory.
pub fn analyze_trajectory(record: &TrajectoryRecord, config: &OpoConfig) -> Result<TrajectoryAnalysis> {
    let raw = detect_plateaus(&record.n_a, &config.detector);
    let mut plateaus = Vec::with_capacity(raw.len());
    for (start, end, level) in raw {
        let expected = config.plateau_level(level)?;
        let p_b = median(&record.p_b[start..end]);
        let min_noise_db = record.var_x_a[start..end]
            .iter()
            .map(|&v| noise_db(v))
            .fold(f64::INFINITY, f64::min);
        plateaus.push(Plateau {
            start,
            end,
            t_start: record.times[start],
            t_end: record.times[end - 1],
            level,
            mean_n_a: record.n_a[start..end].iter().sum::<f64>() / (end - start) as f64,
            p_b,
            expected_p_b: expected,
            p_b_rel_error: ((p_b - expected) / expected).abs(),
            min_noise_db,
        });
    }
    let mut jumps = Vec::new();
    for pair in plateaus.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if (b.mean_n_a - a.mean_n_a).abs() < config.detector.min_jump {
            continue;
        }
        let rising = b.mean_n_a > a.mean_n_a;
        let n_mid = 0.5 * (a.mean_n_a + b.mean_n_a);
        let p_mid = 0.5 * (a.p_b + b.p_b);
        let time = crossing(&record.times, &record.n_a, a.end - 1, b.end, n_mid, rising)
            .unwrap_or(record.times[b.start]);
        jumps.push(Jump {
            from: a.level,
            to: b.level,
            time,
            p_b_time: crossing(&record.times, &record.p_b, a.end - 1, b.end, p_mid, b.p_b > a.p_b),
        });
    }
    let zero_plateau_noise_db = plateaus
        .iter()
        .filter(|p| p.level == 0)
        .map(|p| p.min_noise_db)
        .reduce(f64::min);
    Ok(TrajectoryAnalysis {
        index: record.index,
        plateaus,
        jumps,
        zero_plateau_noise_db,
        max_pump_top_population: 0.0,
    })
}

struct TrajectoryOutput {
    record: TrajectoryRecord,
    checkpoints: Vec<BlockState>,
    max_pump_top: f64,
}

fn run_one(model: &BlockModel, config: &OpoConfig, initial: &BlockState, index: u64) -> Result<TrajectoryOutput> {
    let dt = config.dt;
    let steps = config.steps();
    let every = config.record_every;
    let cp_every = steps / config.checkpoints;
    let mut rng = seed_policy(config.base_seed, index);
    let mut state = initial.clone();
    let mut integrator = SmeIntegrator::new(model, dt, config.transfer_every)?;
    let mut record = TrajectoryRecord::new(config.base_seed, index, dt);
    let sample = |s: &BlockState| (s.mean_n_a(), model.mean_p_b(s), model.var_x_a(s));
    let (n0, p0, v0) = sample(&state);
    record.push(0.0, n0, p0, v0, 0.0);
    let mut checkpoints = Vec::with_capacity(config.checkpoints);
    let mut max_pump_top = state.pump_top_population();
    let mut current = 0.0;
    for step in 1..=steps {
        let dw = rng.sample::<f64, _>(StandardNormal) * dt.sqrt();
        current += integrator.step(&mut state, dw)?;
        if step % every == 0 {
            let (n, p, v) = sample(&state);
            record.push(step as f64 * dt, n, p, v, current / (every as f64 * dt));
            current = 0.0;
            max_pump_top = max_pump_top.max(state.pump_top_population());
        }
        if step % cp_every == 0 {
            checkpoints.push(state.clone());
        }
    }
    if max_pump_top > config.truncation_tol {
        return Err(Error::Truncation {
            population: max_pump_top,
            tolerance: config.truncation_tol,
            context: format!("pump mode along OPO trajectory {index}"),
        });
    }
    Ok(TrajectoryOutput {
        record,
        checkpoints,
        max_pump_top,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleComparison {
    pub time: f64,
    pub trace_distance: f64,
    pub ensemble_n_a: f64,
    pub master_n_a: f64,
    /// `1 − Tr ρ_ME`, the weight lost above the pump truncation.
    pub master_trace_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpoSummary {
    pub trajectories: usize,
    pub u: f64,
    /// Signal `x` noise of `|N_a = 0⟩`, relative to vacuum.
    pub zero_level_noise_db: f64,
    pub plateau_count: usize,
    pub max_plateau_p_b_rel_error: f64,
    pub min_jumps_per_trajectory: usize,
    pub total_jumps: usize,
    /// Largest `|lag|` between the `⟨N̂_a⟩` and `⟨p_b⟩` crossings of a jump.
    pub max_jump_lag: Option<f64>,
    pub best_zero_plateau_noise_db: Option<f64>,
    pub comparisons: Vec<EnsembleComparison>,
    pub max_trace_distance: f64,
    /// `5/√M` for `M` trajectories.
    pub trace_distance_bound: f64,
    pub max_pump_top_population: f64,
    pub seed_policy: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpoRun {
    pub config: OpoConfig,
    pub summary: OpoSummary,
    pub records: Vec<TrajectoryRecord>,
    pub analyses: Vec<TrajectoryAnalysis>,
}

/// Runs the trajectory ensemble in parallel; results are ordered by
/// trajectory index and do not depend on scheduling.
pub fn run_opo_trajectories(config: &OpoConfig) -> Result<OpoRun> {
    config.validate()?;
    let model = config.block_model()?;
    let initial = config.initial_block_state(&model)?;
    let outputs: Vec<TrajectoryOutput> = (0..config.trajectories as u64)
        .into_par_iter()
        .map(|i| run_one(&model, config, &initial, i))
        .collect::<Result<_>>()?;

    let m = outputs.len();
    let cp_time = config.duration / config.checkpoints as f64;
    let mut master = initial.clone();
    let mut comparisons = Vec::with_capacity(config.checkpoints);
    for k in 0..config.checkpoints {
        master = model.evolve_master(&master, cp_time, config.master_dt)?;
        let mut mean = initial.zeros_like();
        for o in &outputs {
            mean.scale_add(&o.checkpoints[k], 1.0 / m as f64);
        }
        comparisons.push(EnsembleComparison {
            time: cp_time * (k + 1) as f64,
            trace_distance: mean.trace_distance(&master)?,
            ensemble_n_a: mean.mean_n_a(),
            master_n_a: master.mean_n_a(),
            master_trace_loss: 1.0 - master.trace(),
        });
    }

    let mut analyses = Vec::with_capacity(m);
    for o in &outputs {
        let mut a = analyze_trajectory(&o.record, config)?;
        a.max_pump_top_population = o.max_pump_top;
        analyses.push(a);
    }
    let u = config.squeeze()?;
    let plateaus = analyses.iter().flat_map(|a| a.plateaus.iter());
    let summary = OpoSummary {
        trajectories: m,
        u,
        zero_level_noise_db: noise_db(model.x_a_sq[0]),
        plateau_count: analyses.iter().map(|a| a.plateaus.len()).sum(),
        max_plateau_p_b_rel_error: plateaus.map(|p| p.p_b_rel_error).fold(0.0, f64::max),
        min_jumps_per_trajectory: analyses.iter().map(|a| a.jumps.len()).min().unwrap_or(0),
        total_jumps: analyses.iter().map(|a| a.jumps.len()).sum(),
        max_jump_lag: analyses
            .iter()
            .flat_map(|a| a.jumps.iter().filter_map(Jump::lag))
            .map(f64::abs)
            .reduce(f64::max),
        best_zero_plateau_noise_db: analyses.iter().filter_map(|a| a.zero_plateau_noise_db).reduce(f64::min),
        max_trace_distance: comparisons.iter().map(|c| c.trace_distance).fold(0.0, f64::max),
        comparisons,
        trace_distance_bound: 5.0 / (m as f64).sqrt(),
        max_pump_top_population: analyses.iter().map(|a| a.max_pump_top_population).fold(0.0, f64::max),
        seed_policy: SEED_POLICY.to_string(),
    };
    Ok(OpoRun {
        config: config.clone(),
        summary,
        records: outputs.into_iter().map(|o| o.record).collect(),
        analyses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detector_finds_two_levels() {
        let mut n = vec![2.0; 120];
        n.extend(vec![1.0; 120]);
        let p = detect_plateaus(&n, &PlateauDetector::default());
        assert_eq!(p.len(), 2);
        assert_eq!((p[0].2, p[1].2), (2, 1));
        assert_eq!(p[0].0, 0);
        assert_eq!(p[1].1, 240);
    }

    #[test]
    fn noisy_series_has_no_plateau() {
        let n: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 0.0 } else { 1.0 }).collect();
        assert!(detect_plateaus(&n, &PlateauDetector::default()).is_empty());
    }

    #[test]
    fn config_validation() {
        let mut c = OpoConfig::default();
        assert!(c.validate().is_ok());
        c.hamiltonian = HamiltonianVariant::Lab;
        assert!(c.validate().is_err());
        let c = OpoConfig {
            dt: 1e-2,
            ..OpoConfig::default()
        };
        assert!(c.validate().is_err());
        let c = OpoConfig {
            checkpoints: 7,
            ..OpoConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_plateau_levels() {
        let c = OpoConfig::default();
        for n in 0..3 {
            assert!((c.plateau_level(n).unwrap() - (n as f64 + 0.5)).abs() < 1e-15);
        }
    }
}

//! Diffusive stochastic master equation for one homodyne-monitored channel:
//! `dρ = 𝓛ρ dt + (cρ + ρc† − ⟨c + c†⟩ρ) dW`, `dI = ⟨c + c†⟩ dt + dW`,
//! with `c = e^{−iθ}L` and unit detection efficiency.
//!
//! Each Euler–Maruyama step first applies the diagonal Hamiltonian phases
//! exactly, then the remaining drift and the innovation, then restores
//! Hermiticity and unit trace.

use ndarray::{Array2, Zip};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::master::{LindbladChannel, Liouvillian};
use crate::error::{Error, Result};
use crate::fock::metrics::DensityMatrix;
use crate::linalg::trace;
use crate::rng::seed_policy;
use crate::sparse::CsrMatrix;
use crate::C64;

/// Conditional expectations and homodyne record of one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `⟨N̂_a⟩`.
    pub n_a: Vec<f64>,
    /// `⟨p_b⟩`.
    pub p_b: Vec<f64>,
    /// `Var(x_a)`.
    pub var_x_a: Vec<f64>,
    /// Homodyne current averaged over each recording interval.
    pub current: Vec<f64>,
    pub base_seed: u64,
    pub index: u64,
    pub dt: f64,
}

impl TrajectoryRecord {
    pub fn new(base_seed: u64, index: u64, dt: f64) -> Self {
        Self {
            times: Vec::new(),
            n_a: Vec::new(),
            p_b: Vec::new(),
            var_x_a: Vec::new(),
            current: Vec::new(),
            base_seed,
            index,
            dt,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, n_a: f64, p_b: f64, var_x_a: f64, current: f64) {
        self.times.push(t);
        self.n_a.push(n_a);
        self.p_b.push(p_b);
        self.var_x_a.push(var_x_a);
        self.current.push(current);
    }

    /// All series share one length.
    pub fn is_consistent(&self) -> bool {
        let n = self.times.len();
        [self.n_a.len(), self.p_b.len(), self.var_x_a.len(), self.current.len()]
            .iter()
            .all(|&l| l == n)
    }
}

/// Operators recorded along a trajectory, on the joint space.
#[derive(Clone, Debug)]
pub struct SmeObservables {
    pub big_n: CsrMatrix,
    pub p_b: CsrMatrix,
    pub x_a: CsrMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmeSettings {
    pub duration: f64,
    pub dt: f64,
    /// Record every this many steps (the initial state is always recorded).
    pub record_every: usize,
    pub base_seed: u64,
    pub index: u64,
}

fn real_expectation(op: &CsrMatrix, rho: &Array2<C64>, what: &str) -> Result<f64> {
    let v = trace(&op.mul_dense(rho));
    if v.im.abs() > 1e-8 * v.re.abs().max(1.0) {
        return Err(Error::Numerical(format!("⟨{what}⟩ has imaginary part {:.3e}", v.im)));
    }
    Ok(v.re)
}

fn record(obs: &SmeObservables, rho: &Array2<C64>, x2: &CsrMatrix) -> Result<(f64, f64, f64)> {
    let n = real_expectation(&obs.big_n, rho, "N_a")?;
    let p = real_expectation(&obs.p_b, rho, "p_b")?;
    let x = real_expectation(&obs.x_a, rho, "x_a")?;
    let xx = real_expectation(x2, rho, "x_a²")?;
    Ok((n, p, xx - x * x))
}

/// Single conditional trajectory. Exactly one channel must be monitored.
pub fn evolve_sme_homodyne(
    h: &CsrMatrix,
    channels: &[LindbladChannel],
    rho0: &DensityMatrix,
    observables: &SmeObservables,
    settings: &SmeSettings,
) -> Result<(TrajectoryRecord, DensityMatrix)> {
    let monitored: Vec<&LindbladChannel> = channels.iter().filter(|c| c.monitored).collect();
    if monitored.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "homodyne unraveling needs exactly one monitored channel, found {}",
            monitored.len()
        )));
    }
    let c_op = monitored[0].measured_operator();
    let c_adj = c_op.adjoint();
    let liou = Liouvillian::new(h, channels)?;
    let dt = settings.dt;
    if !(dt > 0.0) || !(settings.duration >= 0.0) {
        return Err(Error::InvalidParameter("SME needs dt > 0 and duration >= 0".into()));
    }
    let steps = (settings.duration / dt).round() as usize;
    let every = settings.record_every.max(1);
    let mut rng = seed_policy(settings.base_seed, settings.index);
    let x2 = observables.x_a.matmul(&observables.x_a);

    let n = liou.dim;
    let phases: Vec<C64> = liou.h_diag.iter().map(|d| C64::from_polar(1.0, -d * dt)).collect();
    let split = Array2::from_shape_fn((n, n), |(r, c)| phases[r] * phases[c].conj());

    let mut rho = rho0.matrix.clone();
    let mut rec = TrajectoryRecord::new(settings.base_seed, settings.index, dt);
    let (n0, p0, v0) = record(observables, &rho, &x2)?;
    rec.push(0.0, n0, p0, v0, 0.0);
    let mut current_acc = 0.0;
    let sqrt_dt = dt.sqrt();

    for step in 1..=steps {
        rho = &rho * &split;
        let drift = liou.apply_rest(&rho);
        let c_rho = c_op.mul_dense(&rho);
        let rho_cd = c_adj.dense_mul(&rho);
        let m = trace(&c_rho).re * 2.0;
        let z: f64 = rng.sample(StandardNormal);
        let dw = z * sqrt_dt;
        Zip::from(&mut rho)
            .and(&drift)
            .and(&c_rho)
            .and(&rho_cd)
            .for_each(|r, d, cr, rc| {
                let innov = (cr + rc - *r * m) * dw;
                *r += d * dt + innov;
            });
        hermitize_normalize(&mut rho)?;
        current_acc += m * dt + dw;
        if step % every == 0 {
            let (nn, pp, vv) = record(observables, &rho, &x2)?;
            rec.push(step as f64 * dt, nn, pp, vv, current_acc / (every as f64 * dt));
            current_acc = 0.0;
        }
    }
    Ok((rec, DensityMatrix { matrix: rho }))
}

/// Symmetrises `ρ` and rescales it to unit trace.
pub fn hermitize_normalize(rho: &mut Array2<C64>) -> Result<()> {
    let n = rho.nrows();
    for r in 0..n {
        for c in r + 1..n {
            let avg = 0.5 * (rho[[r, c]] + rho[[c, r]].conj());
            rho[[r, c]] = avg;
            rho[[c, r]] = avg.conj();
        }
        rho[[r, r]] = C64::new(rho[[r, r]].re, 0.0);
    }
    let tr = trace(rho).re;
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::Numerical(format!(
            "conditional state trace {tr}; step too large"
        )));
    }
    rho.mapv_inplace(|v| v / tr);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::master::evolve_master;
    use crate::fock::states::{coherent_state, Ket};
    use crate::fock::{make_operators, ModeSpace};

    fn setup(kappa_b: f64) -> (CsrMatrix, Vec<LindbladChannel>, SmeObservables, DensityMatrix) {
        let space = ModeSpace::new(3, 8).unwrap();
        let ops = make_operators(space).unwrap();
        let h = ops.big_n.scale_real(2.0).sub(&ops.big_n.matmul(&ops.x_b).scale_real(0.8));
        let channels = vec![
            LindbladChannel::unmonitored(ops.a.scale_real(0.2), "L_a"),
            LindbladChannel::homodyne(ops.b.scale_real(kappa_b.sqrt()), std::f64::consts::FRAC_PI_2, "L_b"),
        ];
        let obs = SmeObservables {
            big_n: ops.big_n.matrix.clone(),
            p_b: ops.p_b.matrix.clone(),
            x_a: ops.x_a.matrix.clone(),
        };
        let sig = Ket(vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0), C64::new(0.0, 0.0)]);
        let pump = coherent_state(8, C64::new(0.0, 0.3)).unwrap();
        (h, channels, obs, DensityMatrix::from_ket(&sig.kron(&pump)))
    }

    fn settings(seed: u64, index: u64) -> SmeSettings {
        SmeSettings {
            duration: 1.0,
            dt: 1e-3,
            record_every: 100,
            base_seed: seed,
            index,
        }
    }

    #[test]
    fn record_is_consistent_and_reproducible() {
        let (h, ch, obs, rho) = setup(1.0);
        let (a, _) = evolve_sme_homodyne(&h, &ch, &rho, &obs, &settings(42, 3)).unwrap();
        let (b, _) = evolve_sme_homodyne(&h, &ch, &rho, &obs, &settings(42, 3)).unwrap();
        let (c, _) = evolve_sme_homodyne(&h, &ch, &rho, &obs, &settings(42, 4)).unwrap();
        assert!(a.is_consistent());
        assert_eq!(a.len(), 11);
        assert_eq!(a, b);
        assert_ne!(a.p_b, c.p_b);
    }

    #[test]
    fn unmonitored_limit_follows_master_equation() {
        let (h, mut ch, obs, rho) = setup(1.0);
        ch[1].operator = ch[1].operator.scale_real(0.0);
        let (_, out) = evolve_sme_homodyne(&h, &ch, &rho, &obs, &settings(1, 0)).unwrap();
        let l = Liouvillian::new(&h, &ch).unwrap();
        let me = evolve_master(&l, &rho, 1.0, 1e-3).unwrap();
        assert!(out.trace_distance(&me).unwrap() < 2e-3);
    }

    #[test]
    fn requires_one_monitored_channel() {
        let (h, mut ch, obs, rho) = setup(1.0);
        ch[1].monitored = false;
        assert!(evolve_sme_homodyne(&h, &ch, &rho, &obs, &settings(1, 0)).is_err());
    }

    #[test]
    fn homodyne_phase_selects_pump_momentum() {
        let ops = make_operators(ModeSpace::new(2, 6).unwrap()).unwrap();
        let ch = LindbladChannel::homodyne(ops.b.matrix.clone(), std::f64::consts::FRAC_PI_2, "L_b");
        let c = ch.measured_operator();
        // c + c† = 2 p_b for c = −i b.
        let sum = c.add(&c.adjoint());
        assert!(sum.sub(&ops.p_b.scale_real(2.0)).max_abs() < 1e-14);
    }
}

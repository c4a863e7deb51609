//! OPO dynamics restricted to states block-diagonal in `N̂_a`.
//!
//! `H_eff` conserves `N̂_a`, pump loss acts within each block, and under the
//! rotating-wave split the signal loss moves whole blocks to `N_a ± 1`. A
//! state `Σ_N |N⟩⟨N| ⊗ σ_N` therefore stays of this form, and only the pump
//! matrices `σ_N` are stored. The constant `Δ N̂_a` drops out.
//!
//! Each `σ_N` may be stored in a pump frame displaced by an offset `β_N`,
//! `σ_N = D(β_N) σ′_N D(β_N)†`. With `β_N` the stationary amplitude of the
//! block, the pump stays close to the frame vacuum and few levels suffice.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::channels::{stationary_pump_amplitude, LevelRates};
use crate::error::{Error, Result};
use crate::fock::metrics::DensityMatrix;
use crate::fock::operators::ladder_ops;
use crate::fock::states::displacement_generator;
use crate::fock::ModeSpace;
use crate::linalg::{dagger, exp_anti_hermitian_dense, hermitian_eigvals, trace};
use crate::sparse::CsrMatrix;
use crate::C64;

/// Largest relative trace change accepted from one master-equation call.
/// Cropped frame displacements lose the weight pushed above the truncation.
const MASTER_TRACE_TOL: f64 = 1e-4;

/// Extra levels used when building displacement matrices before cropping.
const DISPLACEMENT_PADDING: usize = 40;

/// Block-diagonal joint state; `blocks[N]` is the unnormalised pump matrix
/// of signal level `N`, in that block's frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockState {
    pub blocks: Vec<Array2<C64>>,
}

impl BlockState {
    /// `|N⟩⟨N| ⊗ |ψ⟩⟨ψ|` with `ψ` given in the frame of block `N`.
    pub fn product(n_signal: usize, n_a: usize, pump: &[C64]) -> Result<Self> {
        if n_a >= n_signal {
            return Err(Error::InvalidParameter(format!(
                "level {n_a} outside {n_signal} signal levels"
            )));
        }
        let np = pump.len();
        let mut blocks = vec![Array2::<C64>::zeros((np, np)); n_signal];
        blocks[n_a] = Array2::from_shape_fn((np, np), |(i, j)| pump[i] * pump[j].conj());
        Ok(Self { blocks })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| Array2::zeros(b.raw_dim())).collect(),
        }
    }

    pub fn n_pump(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.nrows())
    }

    /// Population of each signal level.
    pub fn populations(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| trace(b).re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.populations().iter().sum()
    }

    pub fn mean_n_a(&self) -> f64 {
        self.populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / self.trace()
    }

    /// Population of the highest pump level of the frames.
    pub fn pump_top_population(&self) -> f64 {
        let top = self.n_pump().saturating_sub(1);
        self.blocks.iter().map(|b| b[[top, top]].re).sum::<f64>() / self.trace()
    }

    pub fn scale_add(&mut self, other: &BlockState, c: f64) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.scaled_add(C64::new(c, 0.0), b);
        }
    }

    /// Hermitian part divided by `norm`.
    fn hermitize_scale(&mut self, norm: f64) {
        for b in &mut self.blocks {
            hermitize_scale(b, norm);
        }
    }

    /// `½‖ρ − σ‖₁`, evaluated block by block; both states must use the same
    /// frames.
    pub fn trace_distance(&self, other: &BlockState) -> Result<f64> {
        if self.blocks.len() != other.blocks.len() || self.n_pump() != other.n_pump() {
            return Err(Error::DimensionMismatch {
                expected: self.blocks.len() * self.n_pump(),
                found: other.blocks.len() * other.n_pump(),
            });
        }
        let mut sum = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            let d = a - b;
            let herm = Array2::from_shape_fn(d.raw_dim(), |(i, j)| 0.5 * (d[[i, j]] + d[[j, i]].conj()));
            sum += hermitian_eigvals(&herm).into_iter().map(f64::abs).sum::<f64>();
        }
        Ok(0.5 * sum)
    }
}

/// `Tr(op · m)` without forming the product.
fn trace_product(op: &CsrMatrix, m: &Array2<C64>) -> C64 {
    op.triplets().map(|(i, j, v)| v * m[[j, i]]).sum()
}

fn hermitize_scale(b: &mut Array2<C64>, norm: f64) {
    let n = b.nrows();
    for r in 0..n {
        b[[r, r]] = C64::new(b[[r, r]].re / norm, 0.0);
        for c in r + 1..n {
            let avg = 0.5 * (b[[r, c]] + b[[c, r]].conj()) / norm;
            b[[r, c]] = avg;
            b[[c, r]] = avg.conj();
        }
    }
}

/// `D(α)` on `dim` levels, computed on a padded space and cropped.
pub fn displacement_matrix(dim: usize, alpha: C64) -> Result<Array2<C64>> {
    let big = dim + DISPLACEMENT_PADDING;
    if !(alpha.norm_sqr() < 0.25 * big as f64) {
        return Err(Error::InvalidParameter(format!(
            "displacement {alpha} too large for {dim} pump levels"
        )));
    }
    let full = exp_anti_hermitian_dense(&displacement_generator(big, alpha))?;
    Ok(full.slice(s![..dim, ..dim]).to_owned())
}

/// Pump frame of each signal block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PumpFrame {
    /// Undisplaced Fock basis for every block.
    Fock,
    /// Block `N` displaced by its stationary amplitude `β_N`.
    Stationary,
}

/// Per-block generators of the OPO in the rotating-wave picture.
#[derive(Clone, Debug)]
pub struct BlockModel {
    pub space: ModeSpace,
    pub u: f64,
    pub g_tilde: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub frame: PumpFrame,
    /// Frame offset of each block.
    pub offsets: Vec<C64>,
    /// Level rates with the upward rate of the top level removed.
    pub rates: Vec<LevelRates>,
    /// `K_N = −2g̃(N + ½)x_b − (i/2)(L_N†L_N + Γ_N)` in the block frame.
    k: Vec<CsrMatrix>,
    k_adj: Vec<CsrMatrix>,
    /// `L_N = √κ_b (b + β_N)` in the block frame.
    l: Vec<CsrMatrix>,
    l_adj: Vec<CsrMatrix>,
    /// `−i L_N`, the monitored operator at `θ = π/2`.
    c: Vec<CsrMatrix>,
    /// `D(β_N − β_{N−1})`, carrying block `N` into the frame of `N − 1`.
    down_shift: Vec<Option<Array2<C64>>>,
    /// `D(β_N − β_{N+1})`.
    up_shift: Vec<Option<Array2<C64>>>,
    /// `p_b` of the frame.
    p_local: CsrMatrix,
    /// Diagonal of `x_a²` in the squeezed-number basis.
    pub x_a_sq: Vec<f64>,
}

impl BlockModel {
    pub fn new(space: ModeSpace, g_tilde: f64, u: f64, kappa_a: f64, kappa_b: f64, frame: PumpFrame) -> Result<Self> {
        if !(kappa_a >= 0.0) || !(kappa_b >= 0.0) || !g_tilde.is_finite() || !(u >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "block model needs κ_a, κ_b >= 0, u >= 0 (κ_a = {kappa_a}, κ_b = {kappa_b}, u = {u})"
            )));
        }
        let ns = space.n_signal;
        let np = space.n_pump;
        let offsets: Vec<C64> = match frame {
            PumpFrame::Fock => vec![C64::new(0.0, 0.0); ns],
            PumpFrame::Stationary => (0..ns)
                .map(|n| stationary_pump_amplitude(n, g_tilde, kappa_b))
                .collect::<Result<_>>()?,
        };
        let pump = ladder_ops(np)?;
        let rates: Vec<LevelRates> = (0..ns)
            .map(|n| {
                let mut r = LevelRates::new(n, u, kappa_a);
                if n + 1 == ns {
                    r.up = 0.0;
                }
                r
            })
            .collect();
        let id = CsrMatrix::identity(np);
        let sk = kappa_b.sqrt();
        let half_i = C64::new(0.0, -0.5);
        let mut k = Vec::with_capacity(ns);
        let mut l = Vec::with_capacity(ns);
        for (n, r) in rates.iter().enumerate() {
            let beta = offsets[n];
            let ln = pump.a.add(&id.scale(beta)).scale_real(sk);
            let x = pump.x.add(&id.scale_real(beta.re));
            let kn = x
                .scale_real(-2.0 * g_tilde * (n as f64 + 0.5))
                .add(&ln.adjoint().matmul(&ln).add(&id.scale_real(r.total())).scale(half_i));
            k.push(kn);
            l.push(ln);
        }
        let shift = |from: usize, to: usize| -> Result<Option<Array2<C64>>> {
            let d = offsets[from] - offsets[to];
            if d.norm() == 0.0 {
                Ok(None)
            } else {
                displacement_matrix(np, d).map(Some)
            }
        };
        let mut down_shift = vec![None];
        for n in 1..ns {
            down_shift.push(shift(n, n - 1)?);
        }
        let mut up_shift = Vec::with_capacity(ns);
        for n in 0..ns {
            up_shift.push(if n + 1 < ns { shift(n, n + 1)? } else { None });
        }
        // x_a = e^{−u}(Â + Â†)/2 on the truncated ladder.
        let e2 = (-2.0 * u).exp() / 4.0;
        let x_a_sq = (0..ns)
            .map(|n| e2 * (n as f64 + if n + 1 < ns { n as f64 + 1.0 } else { 0.0 }))
            .collect();
        Ok(Self {
            space,
            u,
            g_tilde,
            kappa_a,
            kappa_b,
            frame,
            offsets,
            rates,
            k_adj: k.iter().map(CsrMatrix::adjoint).collect(),
            k,
            l_adj: l.iter().map(CsrMatrix::adjoint).collect(),
            c: l.iter().map(|m| m.scale(C64::new(0.0, -1.0))).collect(),
            l,
            down_shift,
            up_shift,
            p_local: pump.p,
            x_a_sq,
        })
    }

    fn check(&self, state: &BlockState) -> Result<()> {
        if state.blocks.len() != self.space.n_signal || state.n_pump() != self.space.n_pump {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                found: state.blocks.len() * state.n_pump(),
            });
        }
        Ok(())
    }

    /// `|N⟩⟨N| ⊗ |γ⟩⟨γ|` for a coherent pump `γ`, expressed in the frame of
    /// block `N`.
    pub fn coherent_product(&self, n_a: usize, gamma: C64) -> Result<BlockState> {
        if n_a >= self.space.n_signal {
            return Err(Error::InvalidParameter(format!("level {n_a} outside the signal truncation")));
        }
        let local = gamma - self.offsets[n_a];
        let pump = crate::fock::states::coherent_state(self.space.n_pump, local)?;
        BlockState::product(self.space.n_signal, n_a, &pump.0)
    }

    fn transfer(shift: &Option<Array2<C64>>, src: &Array2<C64>) -> Array2<C64> {
        match shift {
            Some(u) => u.dot(src).dot(&dagger(u)),
            None => src.clone(),
        }
    }

    /// Master-equation generator applied to `state`.
    pub fn generator(&self, state: &BlockState) -> BlockState {
        let i = C64::new(0.0, 1.0);
        let ns = self.space.n_signal;
        let mut blocks: Vec<Array2<C64>> = state
            .blocks
            .iter()
            .enumerate()
            .map(|(n, s)| {
                let mut out = self.k[n].mul_dense(s).mapv(|v| -i * v);
                out += &self.k_adj[n].dense_mul(s).mapv(|v| i * v);
                out += &self.l_adj[n].dense_mul(&self.l[n].mul_dense(s));
                out
            })
            .collect();
        for n in 0..ns {
            let (down, up) = (self.rates[n].down, self.rates[n].up);
            if n > 0 && down > 0.0 {
                let t = Self::transfer(&self.down_shift[n], &state.blocks[n]);
                blocks[n - 1].scaled_add(C64::new(down, 0.0), &t);
            }
            if n + 1 < ns && up > 0.0 {
                let t = Self::transfer(&self.up_shift[n], &state.blocks[n]);
                blocks[n + 1].scaled_add(C64::new(up, 0.0), &t);
            }
        }
        BlockState { blocks }
    }

    /// Classical RK4 for the unconditional state. The trace is not
    /// renormalised, so its loss measures truncation leakage.
    pub fn evolve_master(&self, state: &BlockState, t: f64, dt: f64) -> Result<BlockState> {
        self.check(state)?;
        if !(dt > 0.0) || !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("need dt > 0 and t >= 0 (dt = {dt}, t = {t})")));
        }
        let steps = (t / dt).round() as usize;
        let h = if steps > 0 { t / steps as f64 } else { dt };
        let mut cur = state.clone();
        for _ in 0..steps {
            let k1 = self.generator(&cur);
            let mut a = cur.clone();
            a.scale_add(&k1, 0.5 * h);
            let k2 = self.generator(&a);
            let mut b = cur.clone();
            b.scale_add(&k2, 0.5 * h);
            let k3 = self.generator(&b);
            let mut c = cur.clone();
            c.scale_add(&k3, h);
            let k4 = self.generator(&c);
            cur.scale_add(&k1, h / 6.0);
            cur.scale_add(&k2, h / 3.0);
            cur.scale_add(&k3, h / 3.0);
            cur.scale_add(&k4, h / 6.0);
        }
        let (before, after) = (state.trace(), cur.trace());
        if !after.is_finite() || (after - before).abs() > MASTER_TRACE_TOL * before {
            return Err(Error::Numerical(format!(
                "master-equation trace went from {before} to {after}; reduce dt or raise the pump truncation"
            )));
        }
        Ok(cur)
    }

    /// Homodyne record mean `⟨c + c†⟩ = 2√κ_b ⟨p_b⟩`.
    pub fn record_mean(&self, state: &BlockState) -> f64 {
        2.0 * state
            .blocks
            .iter()
            .zip(&self.c)
            .map(|(s, c)| trace_product(c, s).re)
            .sum::<f64>()
            / state.trace()
    }

    /// `⟨p_b⟩` in the displaced frame of the simulation.
    pub fn mean_p_b(&self, state: &BlockState) -> f64 {
        state
            .blocks
            .iter()
            .zip(&self.offsets)
            .map(|(s, beta)| trace_product(&self.p_local, s).re + beta.im * trace(s).re)
            .sum::<f64>()
            / state.trace()
    }

    /// `Var(x_a)`; `⟨x_a⟩` vanishes on block-diagonal states.
    pub fn var_x_a(&self, state: &BlockState) -> f64 {
        state.populations().iter().zip(&self.x_a_sq).map(|(p, x)| p * x).sum::<f64>() / state.trace()
    }

    /// Joint density matrix on `n_lab` undisplaced pump levels, indexed
    /// `N · n_lab + k`.
    pub fn to_density(&self, state: &BlockState, n_lab: usize) -> Result<DensityMatrix> {
        self.check(state)?;
        let np = self.space.n_pump;
        let big = n_lab.max(np) + DISPLACEMENT_PADDING;
        let ns = self.space.n_signal;
        let mut m = Array2::<C64>::zeros((ns * n_lab, ns * n_lab));
        for (n, b) in state.blocks.iter().enumerate() {
            let mut padded = Array2::<C64>::zeros((big, big));
            padded.slice_mut(s![..np, ..np]).assign(b);
            let lab = if self.offsets[n].norm() == 0.0 {
                padded
            } else {
                let d = exp_anti_hermitian_dense(&displacement_generator(big, self.offsets[n]))?;
                d.dot(&padded).dot(&dagger(&d))
            };
            m.slice_mut(s![n * n_lab..(n + 1) * n_lab, n * n_lab..(n + 1) * n_lab])
                .assign(&lab.slice(s![..n_lab, ..n_lab]));
        }
        Ok(DensityMatrix { matrix: m })
    }
}

/// Conditional evolution under pump `p` homodyne. Each step applies
/// `ρ ↦ MρM†` with `M = 1 − iK dt + c dy`, `dy = ⟨c + c†⟩dt + dW`, and
/// collects the signal-loss feeding `dt Σ_± L_±ρL_±†` in per-block buffers
/// that are moved into the target frames every `transfer_every` steps.
#[derive(Clone, Debug)]
pub struct SmeIntegrator<'a> {
    model: &'a BlockModel,
    dt: f64,
    /// `1 − iK_N dt` and its adjoint.
    a: Vec<CsrMatrix>,
    a_adj: Vec<CsrMatrix>,
    c_adj: Vec<CsrMatrix>,
    transfer_every: usize,
    pending_down: Vec<Array2<C64>>,
    pending_up: Vec<Array2<C64>>,
    steps: usize,
}

impl<'a> SmeIntegrator<'a> {
    pub fn new(model: &'a BlockModel, dt: f64, transfer_every: usize) -> Result<Self> {
        if transfer_every == 0 || !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "SME needs dt > 0 and a positive transfer interval (dt = {dt}, interval = {transfer_every})"
            )));
        }
        let np = model.space.n_pump;
        let zeros = vec![Array2::<C64>::zeros((np, np)); model.space.n_signal];
        let id = CsrMatrix::identity(np);
        let a: Vec<CsrMatrix> = model.k.iter().map(|k| id.add(&k.scale(C64::new(0.0, -dt)))).collect();
        Ok(Self {
            model,
            dt,
            a_adj: a.iter().map(CsrMatrix::adjoint).collect(),
            a,
            c_adj: model.c.iter().map(CsrMatrix::adjoint).collect(),
            transfer_every,
            pending_down: zeros.clone(),
            pending_up: zeros,
            steps: 0,
        })
    }

    /// Whether the buffers are empty, so that `state` is complete.
    pub fn is_flushed(&self) -> bool {
        self.steps % self.transfer_every == 0
    }

    fn pending_trace(&self) -> f64 {
        self.pending_down.iter().chain(&self.pending_up).map(|b| trace(b).re).sum()
    }

    /// Moves the buffered feeding into the target blocks.
    pub fn flush(&mut self, state: &mut BlockState) {
        let ns = self.model.space.n_signal;
        for n in 0..ns {
            if n > 0 {
                let t = BlockModel::transfer(&self.model.down_shift[n], &self.pending_down[n]);
                state.blocks[n - 1] += &t;
            }
            if n + 1 < ns {
                let t = BlockModel::transfer(&self.model.up_shift[n], &self.pending_up[n]);
                state.blocks[n + 1] += &t;
            }
            self.pending_down[n].fill(C64::new(0.0, 0.0));
            self.pending_up[n].fill(C64::new(0.0, 0.0));
        }
    }

    /// One step with Wiener increment `dw`; returns the record increment `dy`.
    pub fn step(&mut self, state: &mut BlockState, dw: f64) -> Result<f64> {
        let model = self.model;
        let dt = self.dt;
        model.check(state)?;
        let dy = model.record_mean(state) * dt + dw;
        let cdy = C64::new(dy, 0.0);
        for n in 0..model.space.n_signal {
            let r = model.rates[n];
            let src = &state.blocks[n];
            if n > 0 && r.down > 0.0 {
                self.pending_down[n].scaled_add(C64::new(r.down * dt, 0.0), src);
            }
            if n + 1 < model.space.n_signal && r.up > 0.0 {
                self.pending_up[n].scaled_add(C64::new(r.up * dt, 0.0), src);
            }
        }
        for n in 0..model.space.n_signal {
            let sigma = &state.blocks[n];
            let mut x = self.a[n].mul_dense(sigma);
            x.scaled_add(cdy, &model.c[n].mul_dense(sigma));
            let mut y = self.a_adj[n].dense_mul(&x);
            y.scaled_add(cdy, &self.c_adj[n].dense_mul(&x));
            state.blocks[n] = y;
        }
        self.steps += 1;
        if self.is_flushed() {
            self.flush(state);
        }
        let total = state.trace() + self.pending_trace();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Numerical(format!("conditional state trace {total}; step too large")));
        }
        state.hermitize_scale(total);
        for b in self.pending_down.iter_mut().chain(self.pending_up.iter_mut()) {
            hermitize_scale(b, total);
        }
        Ok(dy)
    }
}

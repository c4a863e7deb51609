//! Lindblad master equation `dρ/dt = −i[H, ρ] + Σ_k D[L_k]ρ`.
//!
//! The Hamiltonian's diagonal is integrated exactly as elementwise phases
//! (integrating-factor RK4), so large detunings such as `Δ N̂_a` do not
//! limit the step size.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::metrics::DensityMatrix;
use crate::linalg::hermitian_eigvals;
use crate::sparse::CsrMatrix;
use crate::C64;

/// Jump operator with its rate absorbed, `L = √κ · c`.
#[derive(Clone, Debug)]
pub struct LindbladChannel {
    pub operator: CsrMatrix,
    pub monitored: bool,
    /// Homodyne phase; the record measures `e^{−iθ}L + e^{iθ}L†`.
    pub theta: f64,
    pub label: String,
}

impl LindbladChannel {
    pub fn unmonitored(operator: CsrMatrix, label: impl Into<String>) -> Self {
        Self {
            operator,
            monitored: false,
            theta: 0.0,
            label: label.into(),
        }
    }

    pub fn homodyne(operator: CsrMatrix, theta: f64, label: impl Into<String>) -> Self {
        Self {
            operator,
            monitored: true,
            theta,
            label: label.into(),
        }
    }

    /// `e^{−iθ} L`, the operator whose Hermitian part is recorded.
    pub fn measured_operator(&self) -> CsrMatrix {
        self.operator.scale(C64::from_polar(1.0, -self.theta))
    }
}

/// Precomputed pieces of the Lindblad generator.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub dim: usize,
    /// Diagonal of `H`, applied as exact phases.
    pub h_diag: Vec<f64>,
    /// `H_offdiag − (i/2) Σ L†L`.
    pub k_rest: CsrMatrix,
    pub jumps: Vec<CsrMatrix>,
    pub jumps_adj: Vec<CsrMatrix>,
}

impl Liouvillian {
    pub fn new(h: &CsrMatrix, channels: &[LindbladChannel]) -> Result<Self> {
        let dim = h.nrows();
        let res = h.hermiticity_residual();
        if res > 1e-10 * h.max_abs().max(1.0) {
            return Err(Error::NotHermitian(res));
        }
        for ch in channels {
            if ch.operator.nrows() != dim || ch.operator.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: ch.operator.nrows(),
                });
            }
        }
        let (diag, off) = h.split_diagonal();
        let mut k_rest = off;
        for ch in channels {
            let ldl = ch.operator.adjoint().matmul(&ch.operator);
            k_rest = k_rest.sub(&ldl.scale(C64::new(0.0, 0.5)));
        }
        Ok(Self {
            dim,
            h_diag: diag.iter().map(|c| c.re).collect(),
            k_rest,
            jumps: channels.iter().map(|c| c.operator.clone()).collect(),
            jumps_adj: channels.iter().map(|c| c.operator.adjoint()).collect(),
        })
    }

    /// Full generator applied to `ρ`.
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let mut out = self.apply_rest(rho);
        let i = C64::new(0.0, 1.0);
        Zip::indexed(&mut out).and(rho).for_each(|(r, c), o, v| {
            *o -= i * (self.h_diag[r] - self.h_diag[c]) * v;
        });
        out
    }

    /// Generator without the diagonal Hamiltonian phases.
    pub fn apply_rest(&self, rho: &Array2<C64>) -> Array2<C64> {
        let i = C64::new(0.0, 1.0);
        // −i(Kρ − ρK†) with K = H_off − (i/2)ΣL†L.
        let k_rho = self.k_rest.mul_dense(rho);
        let mut out = Array2::<C64>::zeros(rho.raw_dim());
        Zip::from(&mut out).and(&k_rho).for_each(|o, v| *o = -i * v);
        let rho_kdag = self.k_rest.adjoint().dense_mul(rho);
        Zip::from(&mut out).and(&rho_kdag).for_each(|o, v| *o += i * v);
        for (l, ld) in self.jumps.iter().zip(&self.jumps_adj) {
            let lr = l.mul_dense(rho);
            out += &ld.dense_mul(&lr);
        }
        out
    }

    fn phase_factors(&self, t: f64) -> Array2<C64> {
        let n = self.dim;
        let ph: Vec<C64> = self.h_diag.iter().map(|d| C64::from_polar(1.0, -d * t)).collect();
        Array2::from_shape_fn((n, n), |(r, c)| ph[r] * ph[c].conj())
    }

    /// One integrating-factor RK4 step of length `dt`.
    pub fn step(&self, rho: &Array2<C64>, dt: f64) -> Array2<C64> {
        let e_half = self.phase_factors(0.5 * dt);
        let e_full = &e_half * &e_half;
        self.step_with(rho, dt, &e_half, &e_full)
    }

    fn step_with(&self, rho: &Array2<C64>, dt: f64, e_half: &Array2<C64>, e_full: &Array2<C64>) -> Array2<C64> {
        let h2 = C64::new(0.5 * dt, 0.0);
        let k1 = self.apply_rest(rho);
        let a = e_half * &(rho + &(&k1 * h2));
        let k2 = self.apply_rest(&a);
        let e_rho = e_half * rho;
        let b = &e_rho + &(&k2 * h2);
        let k3 = self.apply_rest(&b);
        let c = e_full * rho + &(e_half * &k3) * C64::new(dt, 0.0);
        let k4 = self.apply_rest(&c);
        let sixth = C64::new(dt / 6.0, 0.0);
        e_full * rho + &((e_full * &k1 + &(e_half * &(&k2 + &k3)) * C64::new(2.0, 0.0) + k4) * sixth)
    }
}

fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Evolves `ρ` for time `t` with step `dt`. The first step is repeated as
/// two half steps; a relative discrepancy above 1e−8 rejects `dt`.
pub fn evolve_master(
    liouvillian: &Liouvillian,
    rho: &DensityMatrix,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    evolve_master_observed(liouvillian, rho, t, dt, |_, _| {})
}

/// [`evolve_master`] calling `observe(time, ρ)` after every step.
pub fn evolve_master_observed<F>(
    liouvillian: &Liouvillian,
    rho: &DensityMatrix,
    t: f64,
    dt: f64,
    mut observe: F,
) -> Result<DensityMatrix>
where
    F: FnMut(f64, &Array2<C64>),
{
    if rho.dim() != liouvillian.dim {
        return Err(Error::DimensionMismatch {
            expected: liouvillian.dim,
            found: rho.dim(),
        });
    }
    if !(dt > 0.0) || t < 0.0 {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t >= 0 (dt = {dt}, t = {t})")));
    }
    let steps = (t / dt).round().max(if t > 0.0 { 1.0 } else { 0.0 }) as usize;
    if steps == 0 {
        return Ok(rho.clone());
    }
    let h = t / steps as f64;
    let e_half = liouvillian.phase_factors(0.5 * h);
    let e_full = &e_half * &e_half;

    let mut cur = rho.matrix.clone();
    let full = liouvillian.step_with(&cur, h, &e_half, &e_full);
    let half = liouvillian.step(&liouvillian.step(&cur, 0.5 * h), 0.5 * h);
    let err = max_abs(&(&full - &half)) / max_abs(&cur).max(1e-300);
    if err > 1e-8 || !err.is_finite() {
        return Err(Error::Numerical(format!(
            "master-equation step {h:.3e} too large: halving changes the state by {err:.3e}"
        )));
    }
    cur = full;
    observe(h, &cur);
    for k in 1..steps {
        cur = liouvillian.step_with(&cur, h, &e_half, &e_full);
        observe(h * (k + 1) as f64, &cur);
    }
    let out = DensityMatrix { matrix: cur };
    check_physical(&out, 1e-6)?;
    Ok(out)
}

/// Trace within `tol` of one and no eigenvalue below `−tol`.
pub fn check_physical(rho: &DensityMatrix, tol: f64) -> Result<()> {
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > tol {
        return Err(Error::Numerical(format!("trace drifted to {tr}")));
    }
    let herm = (&rho.matrix + &crate::linalg::dagger(&rho.matrix)).mapv(|c| c * 0.5);
    let min = hermitian_eigvals(&herm).into_iter().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::Numerical(format!(
            "negative eigenvalue {min:.3e}; reduce the step size"
        )));
    }
    Ok(())
}

/// Generator as an `n² × n²` matrix acting on row-major `vec(ρ)`, where
/// `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.
pub fn liouvillian_superoperator(h: &CsrMatrix, channels: &[LindbladChannel]) -> CsrMatrix {
    let n = h.nrows();
    let id = CsrMatrix::identity(n);
    let mi = C64::new(0.0, -1.0);
    let mut sup = h.kron(&id).sub(&id.kron(&h.transpose())).scale(mi);
    for ch in channels {
        let l = &ch.operator;
        let ldl = l.adjoint().matmul(l);
        sup = sup
            .add(&l.kron(&l.conj()))
            .sub(&ldl.kron(&id).scale_real(0.5))
            .sub(&id.kron(&ldl.transpose()).scale_real(0.5));
    }
    sup
}

/// Serializable summary of a channel for manifests.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelInfo {
    pub label: String,
    pub monitored: bool,
    pub theta: f64,
}

impl From<&LindbladChannel> for ChannelInfo {
    fn from(c: &LindbladChannel) -> Self {
        Self {
            label: c.label.clone(),
            monitored: c.monitored,
            theta: c.theta,
        }
    }
}

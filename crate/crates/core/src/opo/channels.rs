//! Drive and loss channels of the OPO and the stationary states they admit.

use serde::{Deserialize, Serialize};

use crate::dynamics::hamiltonians::effective_from;
use crate::dynamics::master::{LindbladChannel, Liouvillian};
use crate::error::{Error, Result};
use crate::fock::metrics::DensityMatrix;
use crate::fock::operators::{lowering, Operators};
use crate::fock::states::{coherent_state, Ket};
use crate::fock::{make_operators_in, ModeSpace, SignalBasis, SystemParams};
use crate::sparse::CsrMatrix;
use crate::C64;

/// Homodyne phase that makes the pump record measure `p_b`.
pub const PUMP_HOMODYNE_THETA: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Clone, Debug)]
pub struct OpoChannels {
    /// `iλ(b† − b)`.
    pub h_drive: CsrMatrix,
    /// `√κ_a a`.
    pub l_a: CsrMatrix,
    /// `√κ_b (b + β)`.
    pub l_b: CsrMatrix,
}

impl OpoChannels {
    /// `L_a` unmonitored and `L_b` under `p` homodyne.
    pub fn lindblad(&self) -> Vec<LindbladChannel> {
        vec![
            LindbladChannel::unmonitored(self.l_a.clone(), "L_a"),
            LindbladChannel::homodyne(self.l_b.clone(), PUMP_HOMODYNE_THETA, "L_b"),
        ]
    }
}

fn check_rates(params: &SystemParams) -> Result<()> {
    if !(params.kappa_a >= 0.0) || !(params.kappa_b >= 0.0) || !params.lambda.is_finite() || !params.beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "OPO channels need κ_a, κ_b >= 0 and finite λ, β (κ_a = {}, κ_b = {}, λ = {}, β = {})",
            params.kappa_a, params.kappa_b, params.lambda, params.beta
        )));
    }
    Ok(())
}

/// Drive Hamiltonian and loss operators on the joint space of `ops`, using
/// `params.lambda` and `params.beta` as given.
pub fn build_opo_channels(params: &SystemParams, ops: &Operators) -> Result<OpoChannels> {
    check_rates(params)?;
    let i = C64::new(0.0, 1.0);
    let h_drive = ops.bdag.matrix.sub(&ops.b.matrix).scale(i * params.lambda);
    let l_a = ops.a.scale_real(params.kappa_a.sqrt());
    let l_b = ops
        .b
        .matrix
        .add(&ops.identity.scale_real(params.beta))
        .scale_real(params.kappa_b.sqrt());
    Ok(OpoChannels { h_drive, l_a, l_b })
}

/// `β_{N_a} = 2i g̃ (N_a + ½) / κ_b`, the pump amplitude left stationary by
/// the balanced drive.
pub fn stationary_pump_amplitude(n_a: usize, g_tilde: f64, kappa_b: f64) -> Result<C64> {
    if !(kappa_b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "stationary pump amplitude needs κ_b > 0 (got {kappa_b})"
        )));
    }
    Ok(C64::new(0.0, 2.0 * g_tilde * (n_a as f64 + 0.5) / kappa_b))
}

/// Operators with the signal in the squeezed-number basis of `params`.
pub fn opo_operators(space: ModeSpace, params: &SystemParams) -> Result<Operators> {
    let u = params.bogoliubov()?.u;
    make_operators_in(space, SignalBasis::Bogoliubov { u }, u)
}

/// Frobenius norm of `𝓛ρ` for `ρ = |N_a⟩⟨N_a| ⊗ |γ⟩⟨γ|`, with `H_eff` plus
/// the balanced drive and both losses.
pub fn stationary_residual(n_a: usize, pump_amplitude: C64, params: &SystemParams, space: ModeSpace) -> Result<f64> {
    if n_a + 1 >= space.n_signal {
        return Err(Error::InvalidParameter(format!(
            "N_a = {n_a} needs at least {} signal levels",
            n_a + 2
        )));
    }
    let params = SystemParams {
        lambda: params.balanced_drive(),
        ..*params
    };
    let ops = opo_operators(space, &params)?;
    let bp = params.bogoliubov()?;
    let ch = build_opo_channels(&params, &ops)?;
    let h = effective_from(bp.big_delta, bp.g_tilde, &ops).add(&ch.h_drive);
    let liou = Liouvillian::new(&h, &ch.lindblad())?;
    let signal = Ket::fock(space.n_signal, n_a)?;
    let pump = coherent_state(space.n_pump, pump_amplitude)?;
    crate::fock::states::check_truncation(&pump, 1e-12, "stationary pump state")?;
    let rho = DensityMatrix::from_ket(&signal.kron(&pump));
    let out = liou.apply(&rho.matrix);
    Ok(out.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
}

/// [`stationary_residual`] at `β_{N_a}`. The stationarity claim holds
/// without signal loss, so `κ_a` must vanish.
pub fn verify_stationary_state(n_a: usize, params: &SystemParams, space: ModeSpace) -> Result<f64> {
    if params.kappa_a != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "stationary states require κ_a = 0 (got {})",
            params.kappa_a
        )));
    }
    let bp = params.bogoliubov()?;
    let beta_n = stationary_pump_amplitude(n_a, bp.g_tilde, params.kappa_b)?;
    stationary_residual(n_a, beta_n, params, space)
}

/// Coefficients of `a|N_a⟩ = c₋|N_a − 1⟩ + c₊|N_a + 1⟩`, returned as
/// `(cosh u √N_a, −sinh u √(N_a + 1))`.
pub fn photon_subtraction_action(n_a: usize, u: f64) -> (f64, f64) {
    let n = n_a as f64;
    (u.cosh() * n.sqrt(), -u.sinh() * (n + 1.0).sqrt())
}

/// Rotating-wave decomposition of signal loss on `dim` squeezed-number
/// levels: `L₊ = √κ_a sinh u Â†` and `L₋ = √κ_a cosh u Â`.
#[derive(Clone, Debug)]
pub struct LindbladSplit {
    pub l_plus: CsrMatrix,
    pub l_minus: CsrMatrix,
    /// `√κ_a a` with `a = cosh u Â − sinh u Â†`, in the same basis.
    pub l_full: CsrMatrix,
}

pub fn rwa_lindblad_split(u: f64, kappa_a: f64, dim: usize) -> Result<LindbladSplit> {
    if !(u >= 0.0) || !(kappa_a >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Lindblad split needs u >= 0 and κ_a >= 0 (u = {u}, κ_a = {kappa_a})"
        )));
    }
    if dim < 2 {
        return Err(Error::Dimension(dim));
    }
    let big_a = lowering(dim);
    let big_ad = big_a.adjoint();
    let k = kappa_a.sqrt();
    Ok(LindbladSplit {
        l_plus: big_ad.scale_real(k * u.sinh()),
        l_minus: big_a.scale_real(k * u.cosh()),
        l_full: big_a.scale_real(k * u.cosh()).sub(&big_ad.scale_real(k * u.sinh())),
    })
}

/// Decay rates of a squeezed-number level under the split channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRates {
    /// `κ_a cosh²u · N`, towards `N − 1`.
    pub down: f64,
    /// `κ_a sinh²u · (N + 1)`, towards `N + 1`.
    pub up: f64,
}

impl LevelRates {
    pub fn new(n_a: usize, u: f64, kappa_a: f64) -> Self {
        let n = n_a as f64;
        Self {
            down: kappa_a * u.cosh().powi(2) * n,
            up: kappa_a * u.sinh().powi(2) * (n + 1.0),
        }
    }

    /// `κ_a (cosh 2u · N + sinh²u)`.
    pub fn total(&self) -> f64 {
        self.down + self.up
    }
}

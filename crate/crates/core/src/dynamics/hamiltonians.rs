//! Hamiltonians of the degenerate parametric interaction. Constant energy
//! offsets are dropped throughout; they only contribute a global phase.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::operators::{ActsOn, ModeOperator, Operators};
use crate::fock::SystemParams;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianVariant {
    /// `g(a†²b + a²b†) + δ a†a`.
    Lab,
    /// Lab Hamiltonian in the frame displaced by the real pump amplitude β.
    Displaced,
    /// The displaced Hamiltonian rewritten with Bogoliubov operators.
    BogoliubovForm,
    /// Rotating-wave effective Hamiltonian `−2g̃(N̂_a + ½)x_b + Δ N̂_a`.
    Effective,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub variant: HamiltonianVariant,
    pub params: SystemParams,
}

impl HamiltonianSpec {
    pub fn build(&self, ops: &Operators) -> Result<ModeOperator> {
        let p = &self.params;
        match self.variant {
            HamiltonianVariant::Lab => Ok(build_h_lab(p, ops)),
            HamiltonianVariant::Displaced => Ok(build_h_displaced(p, ops)),
            HamiltonianVariant::BogoliubovForm => {
                let form = build_h_bogoliubov_form(p, ops)?;
                Ok(ModeOperator::new(form.total(), ActsOn::Joint, "H_D (Bogoliubov form)"))
            }
            HamiltonianVariant::Effective => build_h_eff(p, ops),
        }
    }
}

fn square(m: &CsrMatrix) -> CsrMatrix {
    m.matmul(m)
}

/// `g(a†²b + a²b†)`.
pub fn build_h_nl(params: &SystemParams, ops: &Operators) -> CsrMatrix {
    let up = square(&ops.adag).matmul(&ops.b);
    up.add(&up.adjoint()).scale_real(params.g)
}

/// `δ a†a + (r/2)(a†² + a²)` with `r = 2gβ`.
pub fn build_h_q(params: &SystemParams, ops: &Operators) -> CsrMatrix {
    let n = ops.adag.matmul(&ops.a);
    let pair = square(&ops.adag);
    n.scale_real(params.delta)
        .add(&pair.add(&pair.adjoint()).scale_real(0.5 * params.r()))
}

pub fn build_h_lab(params: &SystemParams, ops: &Operators) -> ModeOperator {
    let n = ops.adag.matmul(&ops.a);
    let h = build_h_nl(params, ops).add(&n.scale_real(params.delta));
    ModeOperator::new(h, ActsOn::Joint, "H_lab")
}

pub fn build_h_displaced(params: &SystemParams, ops: &Operators) -> ModeOperator {
    let h = build_h_nl(params, ops).add(&build_h_q(params, ops));
    ModeOperator::new(h, ActsOn::Joint, "H_D")
}

/// `−2g̃(N̂_a + ½)x_b + Δ N̂_a`. Diagonal in `N̂_a`, so it commutes with
/// `N̂_a` and `x_b`.
pub fn build_h_eff(params: &SystemParams, ops: &Operators) -> Result<ModeOperator> {
    let bp = params.bogoliubov()?;
    Ok(ModeOperator::new(
        effective_from(bp.big_delta, bp.g_tilde, ops),
        ActsOn::Joint,
        "H_eff",
    ))
}

/// Effective Hamiltonian for explicit `(Δ, g̃)`.
pub fn effective_from(big_delta: f64, g_tilde: f64, ops: &Operators) -> CsrMatrix {
    let half = ops.big_n.add(&ops.identity.scale_real(0.5));
    half.matmul(&ops.x_b)
        .scale_real(-2.0 * g_tilde)
        .add(&ops.big_n.scale_real(big_delta))
}

/// Decomposition `H_D = Δ N̂_a + rwa + counter_rotating + const`.
#[derive(Clone, Debug)]
pub struct BogoliubovForm {
    /// `Δ N̂_a`, the quadratic part up to its constant.
    pub quadratic: CsrMatrix,
    /// `−2g̃(N̂_a + ½)x_b`.
    pub rwa: CsrMatrix,
    /// `g[(c²Â†² + s²Â²) b + h.c.]`, changing `N_a` by ±2.
    pub counter_rotating: CsrMatrix,
}

impl BogoliubovForm {
    /// `rwa + counter_rotating`, the nonlinear part `g(a†²b + a²b†)`.
    pub fn nonlinear(&self) -> CsrMatrix {
        self.rwa.add(&self.counter_rotating)
    }

    pub fn total(&self) -> CsrMatrix {
        self.quadratic.add(&self.nonlinear())
    }
}

pub fn build_h_bogoliubov_form(params: &SystemParams, ops: &Operators) -> Result<BogoliubovForm> {
    let bp = params.bogoliubov()?;
    let (c, s) = (bp.u.cosh(), bp.u.sinh());
    let big_adag = ops.big_a.adjoint();
    let up = square(&big_adag).scale_real(c * c).add(&square(&ops.big_a).scale_real(s * s));
    let cr = up.matmul(&ops.b);
    Ok(BogoliubovForm {
        quadratic: ops.big_n.scale_real(bp.big_delta),
        rwa: effective_from(0.0, params.g * (2.0 * bp.u).sinh(), ops),
        counter_rotating: cr.add(&cr.adjoint()).scale_real(params.g),
    })
}

/// Joint indices whose signal level lies below `n_signal − levels`, the
/// rows unaffected by truncation of products up to that order.
pub fn interior_indices(ops: &Operators, levels: usize) -> Vec<usize> {
    let space = ops.space;
    (0..space.n_signal.saturating_sub(levels))
        .flat_map(|k| (0..space.n_pump).map(move |j| space.index(k, j)))
        .collect()
}

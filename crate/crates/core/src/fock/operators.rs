use std::ops::Deref;

use serde::{Deserialize, Serialize};

use super::{ModeSpace, SignalBasis};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActsOn {
    Signal,
    Pump,
    Joint,
}

/// Matrix with the subsystem it acts on and a label for diagnostics.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    pub matrix: CsrMatrix,
    pub acts_on: ActsOn,
    pub label: String,
}

impl ModeOperator {
    pub fn new(matrix: CsrMatrix, acts_on: ActsOn, label: impl Into<String>) -> Self {
        Self {
            matrix,
            acts_on,
            label: label.into(),
        }
    }
}

impl Deref for ModeOperator {
    type Target = CsrMatrix;

    fn deref(&self) -> &CsrMatrix {
        &self.matrix
    }
}

/// Truncated lowering operator `Σ √n |n−1⟩⟨n|`.
pub fn lowering(dim: usize) -> CsrMatrix {
    CsrMatrix::from_triplets(
        dim,
        dim,
        (1..dim).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))),
    )
}

/// `diag(0, 1, …, dim−1)`.
pub fn number(dim: usize) -> CsrMatrix {
    let d: Vec<C64> = (0..dim).map(|n| C64::new(n as f64, 0.0)).collect();
    CsrMatrix::from_diagonal(&d)
}

/// `(a + a†)/2`.
pub fn x_quadrature(a: &CsrMatrix) -> CsrMatrix {
    a.add(&a.adjoint()).scale_real(0.5)
}

/// `(a − a†)/2i`.
pub fn p_quadrature(a: &CsrMatrix) -> CsrMatrix {
    a.sub(&a.adjoint()).scale(C64::new(0.0, -0.5))
}

/// Ladder operators and quadratures of one mode in its number basis.
#[derive(Clone, Debug)]
pub struct LadderOps {
    pub a: CsrMatrix,
    pub adag: CsrMatrix,
    pub x: CsrMatrix,
    pub p: CsrMatrix,
    pub n: CsrMatrix,
}

pub fn ladder_ops(dim: usize) -> Result<LadderOps> {
    if dim < 2 {
        return Err(Error::Dimension(dim));
    }
    let a = lowering(dim);
    Ok(LadderOps {
        adag: a.adjoint(),
        x: x_quadrature(&a),
        p: p_quadrature(&a),
        n: number(dim),
        a,
    })
}

/// Operators of the two-mode system. Fields named `*_s` / `*_p` act on a
/// single mode; unsuffixed fields are embedded in the joint space.
#[derive(Clone, Debug)]
pub struct Operators {
    pub space: ModeSpace,
    pub basis: SignalBasis,

    pub a_s: ModeOperator,
    pub adag_s: ModeOperator,
    pub x_a_s: ModeOperator,
    pub p_a_s: ModeOperator,
    /// `a†a`.
    pub n_s: ModeOperator,
    /// Bogoliubov lowering operator `Â = cosh u·a + sinh u·a†`.
    pub big_a_s: ModeOperator,
    /// `N̂_a = Â†Â`.
    pub big_n_s: ModeOperator,

    pub b_p: ModeOperator,
    pub bdag_p: ModeOperator,
    pub x_b_p: ModeOperator,
    pub p_b_p: ModeOperator,
    pub n_b_p: ModeOperator,

    pub a: ModeOperator,
    pub adag: ModeOperator,
    pub x_a: ModeOperator,
    pub p_a: ModeOperator,
    pub big_a: ModeOperator,
    pub big_n: ModeOperator,
    pub b: ModeOperator,
    pub bdag: ModeOperator,
    pub x_b: ModeOperator,
    pub p_b: ModeOperator,
    pub n_b: ModeOperator,
    pub identity: ModeOperator,
}

/// Operators with the signal in the bare Fock basis and `u = 0`.
pub fn make_operators(space: ModeSpace) -> Result<Operators> {
    make_operators_in(space, SignalBasis::Fock, 0.0)
}

/// Operators with the signal expanded in `basis`; `u` fixes `Â` when the
/// basis is [`SignalBasis::Fock`] and must match the basis parameter otherwise.
pub fn make_operators_in(space: ModeSpace, basis: SignalBasis, u: f64) -> Result<Operators> {
    let space = ModeSpace::new(space.n_signal, space.n_pump)?;
    let (ch, sh) = (u.cosh(), u.sinh());
    let (a, big_a) = match basis {
        SignalBasis::Fock => {
            let a = lowering(space.n_signal);
            let big_a = a.scale_real(ch).add(&a.adjoint().scale_real(sh));
            (a, big_a)
        }
        SignalBasis::Bogoliubov { u: ub } => {
            if (ub - u).abs() > 1e-15 {
                return Err(Error::InvalidParameter(format!(
                    "basis squeeze {ub} differs from operator squeeze {u}"
                )));
            }
            let big_a = lowering(space.n_signal);
            let a = big_a.scale_real(ch).sub(&big_a.adjoint().scale_real(sh));
            (a, big_a)
        }
    };
    let adag = a.adjoint();
    let n_s = match basis {
        SignalBasis::Fock => number(space.n_signal),
        SignalBasis::Bogoliubov { .. } => adag.matmul(&a),
    };
    let big_n = big_a.adjoint().matmul(&big_a);
    let pump = ladder_ops(space.n_pump)?;

    let sig = |m: CsrMatrix, label: &str| ModeOperator::new(m, ActsOn::Signal, label);
    let pmp = |m: CsrMatrix, label: &str| ModeOperator::new(m, ActsOn::Pump, label);
    let id_s = CsrMatrix::identity(space.n_signal);
    let id_p = CsrMatrix::identity(space.n_pump);
    let js = |m: &CsrMatrix, label: &str| ModeOperator::new(m.kron(&id_p), ActsOn::Joint, label);
    let jp = |m: &CsrMatrix, label: &str| ModeOperator::new(id_s.kron(m), ActsOn::Joint, label);

    let x_a = x_quadrature(&a);
    let p_a = p_quadrature(&a);
    Ok(Operators {
        space,
        basis,
        a: js(&a, "a"),
        adag: js(&adag, "a†"),
        x_a: js(&x_a, "x_a"),
        p_a: js(&p_a, "p_a"),
        big_a: js(&big_a, "Â"),
        big_n: js(&big_n, "N̂_a"),
        b: jp(&pump.a, "b"),
        bdag: jp(&pump.adag, "b†"),
        x_b: jp(&pump.x, "x_b"),
        p_b: jp(&pump.p, "p_b"),
        n_b: jp(&pump.n, "b†b"),
        identity: ModeOperator::new(CsrMatrix::identity(space.dim()), ActsOn::Joint, "1"),
        a_s: sig(a, "a"),
        adag_s: sig(adag, "a†"),
        x_a_s: sig(x_a, "x_a"),
        p_a_s: sig(p_a, "p_a"),
        n_s: sig(n_s, "a†a"),
        big_a_s: sig(big_a, "Â"),
        big_n_s: sig(big_n, "N̂_a"),
        b_p: pmp(pump.a, "b"),
        bdag_p: pmp(pump.adag, "b†"),
        x_b_p: pmp(pump.x, "x_b"),
        p_b_p: pmp(pump.p, "p_b"),
        n_b_p: pmp(pump.n, "b†b"),
    })
}

impl Operators {
    /// Embeds a signal-mode matrix as `m ⊗ 1`.
    pub fn embed_signal(&self, m: &CsrMatrix) -> CsrMatrix {
        m.kron(&CsrMatrix::identity(self.space.n_pump))
    }

    /// Embeds a pump-mode matrix as `1 ⊗ m`.
    pub fn embed_pump(&self, m: &CsrMatrix) -> CsrMatrix {
        CsrMatrix::identity(self.space.n_signal).kron(m)
    }
}

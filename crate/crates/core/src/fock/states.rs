use serde::{Deserialize, Serialize};

use super::operators::lowering;
use super::{ModeSpace, DEFAULT_TRUNCATION_TOL};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sparse::CsrMatrix;
use crate::C64;

/// State vector of a single mode or of the joint space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ket(pub Vec<C64>);

impl Ket {
    pub fn zeros(dim: usize) -> Self {
        Ket(vec![C64::new(0.0, 0.0); dim])
    }

    pub fn fock(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::InvalidParameter(format!(
                "Fock level {n} outside truncation {dim}"
            )));
        }
        let mut k = Self::zeros(dim);
        k.0[n] = C64::new(1.0, 0.0);
        Ok(k)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroProbability(format!("cannot normalise vector of norm {n}")));
        }
        self.0.iter_mut().for_each(|c| *c /= n);
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²` for normalised vectors.
    pub fn fidelity(&self, other: &Ket) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn apply(&self, op: &CsrMatrix) -> Result<Ket> {
        check_dims(op.ncols(), self.dim())?;
        Ok(Ket(op.matvec(&self.0)))
    }

    pub fn expectation(&self, op: &CsrMatrix) -> Result<C64> {
        let applied = self.apply(op)?;
        self.inner(&applied)
    }

    /// Variance of a Hermitian operator.
    pub fn variance(&self, op: &CsrMatrix) -> Result<f64> {
        let applied = self.apply(op)?;
        let mean = self.inner(&applied)?.re;
        Ok(applied.norm_sqr() - mean * mean)
    }

    /// `‖(op − λ)ψ‖` for the best-fit eigenvalue `λ = ⟨ψ|op|ψ⟩`, or for a
    /// supplied one.
    pub fn eigen_residual(&self, op: &CsrMatrix, eigenvalue: C64) -> Result<f64> {
        let applied = self.apply(op)?;
        Ok(applied
            .0
            .iter()
            .zip(&self.0)
            .map(|(a, s)| (a - s * eigenvalue).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.0 {
            for b in &other.0 {
                out.push(a * b);
            }
        }
        Ket(out)
    }

    pub fn top_population(&self) -> f64 {
        self.0.last().map_or(0.0, |c| c.norm_sqr())
    }

    /// Zero-extends to `dim` levels.
    pub fn padded(&self, dim: usize) -> Ket {
        let mut v = self.0.clone();
        v.resize(dim.max(self.dim()), C64::new(0.0, 0.0));
        Ket(v)
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Fails when the top Fock level of a single-mode vector holds more than
/// `tol` of the population.
pub fn check_truncation(ket: &Ket, tol: f64, context: &str) -> Result<()> {
    let population = ket.top_population() / ket.norm_sqr().max(f64::MIN_POSITIVE);
    if population > tol || !population.is_finite() {
        return Err(Error::Truncation {
            population,
            tolerance: tol,
            context: context.to_string(),
        });
    }
    Ok(())
}

/// Cuts a padded vector back to `dim` levels, failing when the discarded
/// population plus the new top level exceeds `tol`. The result is renormalised.
pub fn truncate_checked(ket: Ket, dim: usize, tol: f64, context: &str) -> Result<Ket> {
    let total = ket.norm_sqr();
    let discarded: f64 = ket.0[dim.min(ket.dim())..].iter().map(|c| c.norm_sqr()).sum();
    let mut v = ket.0;
    v.truncate(dim);
    let kept = Ket(v);
    let population = (discarded + kept.top_population()) / total;
    if population > tol || !population.is_finite() {
        return Err(Error::Truncation {
            population,
            tolerance: tol,
            context: context.to_string(),
        });
    }
    kept.normalized()
}

fn padding_for(dim: usize) -> usize {
    dim + 40.max(dim / 2)
}

/// Coherent state `|α⟩ = D(α)|0⟩`, `α = ⟨a⟩`.
pub fn coherent_state(dim: usize, alpha: C64) -> Result<Ket> {
    let mut v = Vec::with_capacity(dim);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    v.push(c);
    for n in 1..dim {
        c = c * alpha / (n as f64).sqrt();
        v.push(c);
    }
    let ket = Ket(v);
    let missing = (1.0 - ket.norm_sqr()).max(0.0);
    let population = missing + ket.top_population();
    if population > DEFAULT_TRUNCATION_TOL {
        return Err(Error::Truncation {
            population,
            tolerance: DEFAULT_TRUNCATION_TOL,
            context: format!("coherent state |α| = {:.4} in {dim} levels", alpha.norm()),
        });
    }
    ket.normalized()
}

/// Squeezed vacuum `S(r)|0⟩` with `S(r) = exp(r/2 (a² − a†²))`, which
/// maps `x → e^{−r} x` and `p → e^{r} p`.
pub fn squeezed_vacuum(dim: usize, r: f64) -> Result<Ket> {
    let big = padding_for(dim);
    let t = r.tanh();
    let mut v = vec![C64::new(0.0, 0.0); big];
    let mut c = 1.0 / r.cosh().sqrt();
    v[0] = C64::new(c, 0.0);
    let mut n = 1;
    while 2 * n < big {
        c *= -t * ((2 * n - 1) as f64 / (2 * n) as f64).sqrt();
        v[2 * n] = C64::new(c, 0.0);
        n += 1;
    }
    truncate_checked(
        Ket(v),
        dim,
        DEFAULT_TRUNCATION_TOL,
        &format!("squeezed vacuum r = {r:.4} in {dim} levels"),
    )
}

/// Squeezed number state `|N_a⟩ = S(u)|N⟩`, the eigenstate of `Â†Â` with
/// `Â = cosh u·a + sinh u·a†`, expanded in bare Fock states.
pub fn squeezed_number_state(dim: usize, u: f64, n: usize) -> Result<Ket> {
    if n >= dim {
        return Err(Error::InvalidParameter(format!(
            "excitation number {n} outside truncation {dim}"
        )));
    }
    let big = padding_for(dim);
    let mut ket = squeezed_vacuum(big + n + 2, u)?.padded(big + n + 2);
    let a = lowering(ket.dim());
    let raise = a.adjoint().scale_real(u.cosh()).add(&a.scale_real(u.sinh()));
    for k in 1..=n {
        ket = Ket(raise.matvec(&ket.0));
        let s = 1.0 / (k as f64).sqrt();
        ket.0.iter_mut().for_each(|c| *c *= s);
    }
    truncate_checked(
        ket,
        dim,
        DEFAULT_TRUNCATION_TOL,
        &format!("squeezed number state N = {n}, u = {u:.4} in {dim} levels"),
    )
}

/// Eigenstate of `Â` with eigenvalue `big_a`, `S(u)|α = A⟩`, in bare Fock states.
pub fn bogoliubov_coherent_state(dim: usize, u: f64, big_a: C64) -> Result<Ket> {
    let big = padding_for(dim);
    let sv = squeezed_vacuum(big, u)?;
    let shifted = displace_padded(&sv, displacement_of_bogoliubov(u, big_a), 2 * big)?;
    truncate_checked(
        shifted,
        dim,
        DEFAULT_TRUNCATION_TOL,
        &format!("Bogoliubov coherent state A = {big_a:.4}, u = {u:.4} in {dim} levels"),
    )
}

/// `S(u) D(A) = D(α) S(u)` with `α = cosh u·A − sinh u·A*`.
fn displacement_of_bogoliubov(u: f64, big_a: C64) -> C64 {
    big_a * u.cosh() - big_a.conj() * u.sinh()
}

/// Pump vacuum squeezed in `p` to standard deviation `w`.
pub fn squeezed_vacuum_pump(dim: usize, w: f64) -> Result<Ket> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidParameter(format!("pump width must be positive, got {w}")));
    }
    squeezed_vacuum(dim, (2.0 * w).ln())
}

/// Vacuum squeezed in `x` to standard deviation `kappa`.
pub fn x_squeezed_vacuum(dim: usize, kappa: f64) -> Result<Ket> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("width must be positive, got {kappa}")));
    }
    squeezed_vacuum(dim, -(2.0 * kappa).ln())
}

/// Displacement generator `α a† − α* a` on `dim` levels.
pub fn displacement_generator(dim: usize, alpha: C64) -> CsrMatrix {
    let a = lowering(dim);
    a.adjoint().scale(alpha).sub(&a.scale(alpha.conj()))
}

fn displace_padded(ket: &Ket, alpha: C64, big: usize) -> Result<Ket> {
    let padded = ket.padded(big);
    let g = displacement_generator(big, alpha);
    Ok(Ket(linalg::exp_anti_hermitian(&g, &padded.0)?))
}

/// `D(α)ψ` evaluated on a padded space and cut back to `ψ`'s truncation.
pub fn displace(ket: &Ket, alpha: C64, tol: f64) -> Result<Ket> {
    let dim = ket.dim();
    let extra = (alpha.norm() + 6.0).powi(2).ceil() as usize * 2 + 40;
    let out = displace_padded(ket, alpha, dim + extra)?;
    truncate_checked(out, dim, tol, &format!("displacement by {alpha:.4} in {dim} levels"))
}

/// Pure state on the signal ⊗ pump space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoModeState {
    pub amplitudes: Ket,
    pub space: ModeSpace,
}

impl TwoModeState {
    pub fn new(amplitudes: Ket, space: ModeSpace) -> Result<Self> {
        check_dims(space.dim(), amplitudes.dim())?;
        Ok(Self { amplitudes, space })
    }

    pub fn product(signal: &Ket, pump: &Ket) -> Result<Self> {
        let space = ModeSpace::new(signal.dim(), pump.dim())?;
        Self::new(signal.kron(pump), space)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Unnormalised pump vector `(⟨k|_signal ⊗ 1)|ψ⟩`.
    pub fn pump_block(&self, k: usize) -> Ket {
        let np = self.space.n_pump;
        Ket(self.amplitudes.0[k * np..(k + 1) * np].to_vec())
    }

    /// Population of the highest signal level and of the highest pump level.
    pub fn top_populations(&self) -> (f64, f64) {
        let (ns, np) = (self.space.n_signal, self.space.n_pump);
        let sig = self.amplitudes.0[(ns - 1) * np..].iter().map(|c| c.norm_sqr()).sum();
        let pump = (0..ns).map(|k| self.amplitudes.0[k * np + np - 1].norm_sqr()).sum();
        (sig, pump)
    }

    pub fn check_truncation(&self, tol: f64, context: &str) -> Result<()> {
        let (s, p) = self.top_populations();
        let population = s.max(p) / self.amplitudes.norm_sqr();
        if population > tol || !population.is_finite() {
            return Err(Error::Truncation {
                population,
                tolerance: tol,
                context: context.to_string(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::operators::{ladder_ops, p_quadrature, x_quadrature};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn unsqueezed_number_state_is_fock() {
        let k = squeezed_number_state(10, 0.0, 2).unwrap();
        assert_eq!(k, Ket::fock(10, 2).unwrap());
    }

    #[test]
    fn squeezed_vacuum_covariance() {
        let u = 0.5 * 1.0_f64.asinh();
        let k = squeezed_number_state(40, u, 0).unwrap();
        let ops = ladder_ops(40).unwrap();
        let vx = k.variance(&ops.x).unwrap();
        let vp = k.variance(&ops.p).unwrap();
        assert!((vx - (-2.0 * u).exp() / 4.0).abs() < 1e-10);
        assert!((vx - 0.103_553_390_593_273_8).abs() < 1e-10);
        assert!((vx * vp - 1.0 / 16.0).abs() < 1e-10);
    }

    #[test]
    fn squeeze_phase_matches_generator_exponential() {
        let r = 0.3;
        let dim = 60;
        let a = lowering(dim);
        let gen = a.matmul(&a).sub(&a.adjoint().matmul(&a.adjoint())).scale_real(0.5 * r);
        let vac = Ket::fock(dim, 0).unwrap();
        let want = Ket(linalg::exp_anti_hermitian(&gen, &vac.0).unwrap());
        let got = squeezed_vacuum(dim, r).unwrap();
        assert!((got.fidelity(&want).unwrap() - 1.0).abs() < 1e-12);
        assert!((got.inner(&want).unwrap() - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn squeezed_number_states_satisfy_eigen_relation() {
        let u: f64 = 0.4407;
        let dim = 60;
        // Operators on a padded space avoid the truncated product's boundary rows.
        let a = lowering(dim + 4);
        let big_a = a.scale_real(u.cosh()).add(&a.adjoint().scale_real(u.sinh()));
        let big_n = big_a.adjoint().matmul(&big_a);
        for n in 0..6 {
            let k = squeezed_number_state(dim, u, n).unwrap();
            assert!((k.norm() - 1.0).abs() < 1e-12);
            let res = k.padded(dim + 4).eigen_residual(&big_n, c(n as f64, 0.0)).unwrap();
            assert!(res < 1e-6, "N = {n}: {res}");
        }
    }

    #[test]
    fn bogoliubov_coherent_state_is_eigenstate_of_big_a() {
        let u: f64 = 0.4407;
        let dim = 60;
        let amp = c(3.172, 0.0);
        let k = bogoliubov_coherent_state(dim, u, amp).unwrap().padded(dim + 2);
        let a = lowering(dim + 2);
        let big_a = a.scale_real(u.cosh()).add(&a.adjoint().scale_real(u.sinh()));
        let res = k.eigen_residual(&big_a, amp).unwrap();
        assert!(res < 1e-6, "{res}");

        let plain = bogoliubov_coherent_state(30, 0.0, c(0.7, 0.0)).unwrap();
        let coh = coherent_state(30, c(0.7, 0.0)).unwrap();
        assert!((plain.fidelity(&coh).unwrap() - 1.0).abs() < 1e-12);

        let zero = bogoliubov_coherent_state(30, u, c(0.0, 0.0)).unwrap();
        let vac = squeezed_number_state(30, u, 0).unwrap();
        assert!((zero.fidelity(&vac).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pump_widths() {
        let ops = ladder_ops(50).unwrap();
        let vac = squeezed_vacuum_pump(50, 0.5).unwrap();
        assert!((vac.fidelity(&Ket::fock(50, 0).unwrap()).unwrap() - 1.0).abs() < 1e-15);
        for w in [0.25, 0.4, 0.7] {
            let k = squeezed_vacuum_pump(50, w).unwrap();
            assert!((k.variance(&ops.p).unwrap().sqrt() - w).abs() < 1e-6, "{w}");
        }
        let big = ladder_ops(300).unwrap();
        let w15 = 0.5 * 10f64.powf(-0.75);
        let k = squeezed_vacuum_pump(300, w15).unwrap();
        assert!((k.variance(&big.p).unwrap().sqrt() - w15).abs() < 1e-6);
        let kx = x_squeezed_vacuum(300, w15).unwrap();
        assert!((kx.variance(&big.x).unwrap().sqrt() - w15).abs() < 1e-6);
    }

    #[test]
    fn extreme_squeezing_fails_truncation() {
        assert!(matches!(squeezed_vacuum_pump(20, 0.01), Err(Error::Truncation { .. })));
        assert!(matches!(coherent_state(10, c(4.0, 0.0)), Err(Error::Truncation { .. })));
    }

    #[test]
    fn displacement_shifts_quadratures() {
        let dim = 60;
        let x = x_quadrature(&lowering(dim));
        let p = p_quadrature(&lowering(dim));
        let sv = squeezed_vacuum_pump(dim, 0.3).unwrap();
        let d = displace(&sv, c(0.8, -1.1), 1e-8).unwrap();
        assert!((d.expectation(&x).unwrap().re - 0.8).abs() < 1e-9);
        assert!((d.expectation(&p).unwrap().re + 1.1).abs() < 1e-9);
        let coh = displace(&Ket::fock(dim, 0).unwrap(), c(0.7, 0.2), 1e-8).unwrap();
        let want = coherent_state(dim, c(0.7, 0.2)).unwrap();
        assert!((coh.inner(&want).unwrap() - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn two_mode_product_blocks() {
        let s = Ket::fock(3, 1).unwrap();
        let p = coherent_state(20, c(0.3, 0.0)).unwrap();
        let st = TwoModeState::product(&s, &p).unwrap();
        assert!((st.norm() - 1.0).abs() < 1e-14);
        assert_eq!(st.pump_block(1), p);
        assert!(st.pump_block(0).norm() == 0.0);
        st.check_truncation(1e-8, "test").unwrap();
    }
}

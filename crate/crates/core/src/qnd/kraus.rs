use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::SqueezedNumberBasis;
use crate::error::{Error, Result};
use crate::fock::operators::{ActsOn, ModeOperator};
use crate::fock::quadrature::Grid;
use crate::fock::states::Ket;
use crate::fock::BogoliubovParams;
use crate::linalg::{dagger, trace};
use crate::sparse::CsrMatrix;
use crate::C64;

/// `C_N(p_b) = e^{−iΔt·N} ⟨p_b − d(N+½)|w⟩` for a `p`-squeezed vacuum
/// pump of width `w`:
/// `e^{−(p_b − d(N+½))²/4w²} / ((2π)^{1/4} w^{1/2})`.
pub fn kraus_amplitude(n: usize, p_b: f64, d: f64, w: f64, delta_t: f64) -> C64 {
    let shift = p_b - d * (n as f64 + 0.5);
    let mag = (-shift * shift / (4.0 * w * w)).exp()
        / ((2.0 * std::f64::consts::PI).powf(0.25) * w.sqrt());
    C64::from_polar(mag, -delta_t * n as f64)
}

/// Homodyne Kraus family `M(p_b) = Σ_{N ≤ N_max} C_N(p_b)|N_a⟩⟨N_a|`
/// sampled on an outcome grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausFamily {
    /// Conditional displacement `d = g̃t`.
    pub d: f64,
    /// Pump `p` width.
    pub w: f64,
    /// Phase rate times time, `Δt`.
    pub delta_t: f64,
    pub u: f64,
    pub n_max: usize,
    pub grid: Grid,
}

impl KrausFamily {
    /// Default grid `p ∈ [−2, d(N_max+½) + 6w]` with `δp = w/10`.
    pub fn new(d: f64, w: f64, delta_t: f64, u: f64, n_max: usize) -> Result<Self> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidParameter(format!("pump width must be positive, got {w}")));
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidParameter(format!("displacement must be positive, got {d}")));
        }
        let grid = Grid::new(-2.0, d * (n_max as f64 + 0.5) + 6.0 * w, w / 10.0)?;
        Ok(Self {
            d,
            w,
            delta_t,
            u,
            n_max,
            grid,
        })
    }

    pub fn from_params(bp: &BogoliubovParams, t: f64, w: f64, n_max: usize) -> Result<Self> {
        Self::new(bp.g_tilde * t, w, bp.big_delta * t, bp.u, n_max)
    }

    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = grid;
        self
    }

    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    /// `C_N(p_b)` for `N = 0…N_max`.
    pub fn amplitudes(&self, p_b: f64) -> Vec<C64> {
        (0..=self.n_max)
            .map(|n| kraus_amplitude(n, p_b, self.d, self.w, self.delta_t))
            .collect()
    }

    /// `table[[i, N]] = C_N(p_i)` on the grid.
    pub fn amplitude_table(&self) -> Array2<C64> {
        let mut t = Array2::zeros((self.grid.len, self.levels()));
        for i in 0..self.grid.len {
            for (n, c) in self.amplitudes(self.grid.point(i)).into_iter().enumerate() {
                t[[i, n]] = c;
            }
        }
        t
    }

    /// Operator norm of `Σ_i F(p_i) δp − I` on the `N ≤ N_max` subspace.
    /// `F` is diagonal there, so this is the largest diagonal deviation.
    pub fn completeness_error(&self) -> f64 {
        let mut sums = vec![0.0; self.levels()];
        for i in 0..self.grid.len {
            for (s, c) in sums.iter_mut().zip(self.amplitudes(self.grid.point(i))) {
                *s += c.norm_sqr() * self.grid.step;
            }
        }
        sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `Tr(F²)/Tr(F)² = Σ|C_N|⁴ / (Σ|C_N|²)²`.
    pub fn povm_purity(&self, p_b: f64) -> Result<f64> {
        let (s2, s4) = self
            .amplitudes(p_b)
            .iter()
            .map(|c| c.norm_sqr())
            .fold((0.0, 0.0), |(a, b), x| (a + x, b + x * x));
        if !(s2 > 0.0) || !(s2 * s2 > 0.0) {
            return Err(Error::Undefined(format!(
                "POVM purity at p_b = {p_b}: all amplitudes vanish"
            )));
        }
        Ok(s4 / (s2 * s2))
    }

    /// Purity at every grid point; `None` where it is undefined.
    pub fn purity_curve(&self) -> Vec<Option<f64>> {
        (0..self.grid.len)
            .into_par_iter()
            .map(|i| self.povm_purity(self.grid.point(i)).ok())
            .collect()
    }
}

fn check_basis(family: &KrausFamily, basis: &SqueezedNumberBasis) -> Result<()> {
    if basis.levels() < family.levels() {
        return Err(Error::Truncation {
            population: f64::NAN,
            tolerance: 0.0,
            context: format!(
                "basis holds {} squeezed number states, Kraus family needs {}",
                basis.levels(),
                family.levels()
            ),
        });
    }
    if (basis.u - family.u).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "basis squeezing u = {} differs from the family's u = {}",
            basis.u, family.u
        )));
    }
    Ok(())
}

fn dense_to_operator(m: &Array2<C64>, label: String) -> ModeOperator {
    ModeOperator::new(CsrMatrix::from_dense(m, 0.0), ActsOn::Signal, label)
}

/// `M(p_b)` in the representation of `basis`.
pub fn kraus_operator(p_b: f64, family: &KrausFamily, basis: &SqueezedNumberBasis) -> Result<ModeOperator> {
    check_basis(family, basis)?;
    let m = basis.diagonal_operator(&family.amplitudes(p_b))?;
    Ok(dense_to_operator(&m, format!("M({p_b})")))
}

/// `F(p_b) = M†M`.
pub fn povm_element(p_b: f64, family: &KrausFamily, basis: &SqueezedNumberBasis) -> Result<ModeOperator> {
    check_basis(family, basis)?;
    let diag: Vec<C64> = family
        .amplitudes(p_b)
        .iter()
        .map(|c| C64::new(c.norm_sqr(), 0.0))
        .collect();
    let f = basis.diagonal_operator(&diag)?;
    Ok(dense_to_operator(&f, format!("F({p_b})")))
}

/// Purity from the matrix definition `Tr(F²)/Tr(F)²`, with `F = M†M`
/// formed explicitly.
pub fn povm_purity_matrix(p_b: f64, family: &KrausFamily, basis: &SqueezedNumberBasis) -> Result<f64> {
    check_basis(family, basis)?;
    let m = basis.diagonal_operator(&family.amplitudes(p_b))?;
    let f = dagger(&m).dot(&m);
    let tr = trace(&f).re;
    if !(tr > 0.0) {
        return Err(Error::Undefined(format!("POVM element at p_b = {p_b} vanishes")));
    }
    Ok(trace(&f.dot(&f)).re / (tr * tr))
}

/// `P(p_i) = ⟨φ|F(p_i)|φ⟩` on the family's grid.
pub fn outcome_distribution(
    state: &Ket,
    family: &KrausFamily,
    basis: &SqueezedNumberBasis,
) -> Result<Vec<f64>> {
    check_basis(family, basis)?;
    let weights: Vec<f64> = basis
        .coefficients(state)?
        .iter()
        .take(family.levels())
        .map(|c| c.norm_sqr())
        .collect();
    Ok((0..family.grid.len)
        .into_par_iter()
        .map(|i| {
            family
                .amplitudes(family.grid.point(i))
                .iter()
                .zip(&weights)
                .map(|(c, w)| c.norm_sqr() * w)
                .sum()
        })
        .collect())
}

/// Result of one homodyne outcome applied to a signal state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QndOutcome {
    pub p_b: f64,
    /// Outcome density `P(p_b)`.
    pub probability_density: f64,
    /// `|C_N c_N|² / P`, summing to one.
    pub posterior: Vec<f64>,
    /// Normalised `M(p_b)|φ⟩` in the representation of the basis used.
    pub state: Ket,
    pub nearest: usize,
    /// `|⟨N_nearest|φ'⟩|²`.
    pub fidelity_nearest: f64,
}

/// Applies `M(p_b)` and normalises. Weight of the input outside the
/// family's `N ≤ N_max` subspace is discarded.
pub fn apply_measurement(
    state: &Ket,
    p_b: f64,
    family: &KrausFamily,
    basis: &SqueezedNumberBasis,
) -> Result<QndOutcome> {
    check_basis(family, basis)?;
    let coeffs = basis.coefficients(state)?;
    let post: Vec<C64> = family
        .amplitudes(p_b)
        .iter()
        .zip(&coeffs)
        .map(|(c, v)| c * v)
        .collect();
    let prob: f64 = post.iter().map(|c| c.norm_sqr()).sum();
    if !(prob > 0.0) || !prob.is_finite() {
        return Err(Error::ZeroProbability(format!("homodyne outcome p_b = {p_b}")));
    }
    let posterior: Vec<f64> = post.iter().map(|c| c.norm_sqr() / prob).collect();
    let scale = 1.0 / prob.sqrt();
    let normed: Vec<C64> = post.iter().map(|c| c * scale).collect();
    let state = basis.synthesize(&normed)?;
    let nearest = ((p_b / family.d - 0.5).round().max(0.0) as usize).min(family.n_max);
    let fidelity_nearest = state.fidelity(&basis.state(nearest))?;
    Ok(QndOutcome {
        p_b,
        probability_density: prob,
        posterior,
        state,
        nearest,
        fidelity_nearest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::states::coherent_state;
    use std::f64::consts::PI;

    fn family(w: f64, n_max: usize) -> KrausFamily {
        KrausFamily::new(1.0, w, 0.0, 0.0, n_max).unwrap()
    }

    #[test]
    fn peak_density() {
        let c = kraus_amplitude(3, 3.5, 1.0, 0.25, 0.0);
        assert!((c.norm_sqr() - 1.0 / ((2.0 * PI).sqrt() * 0.25)).abs() < 1e-12);
        assert!((c.norm_sqr() - 1.595769121605731).abs() < 1e-12);
    }

    #[test]
    fn zero_phase_is_real_positive() {
        for n in 0..5 {
            let c = kraus_amplitude(n, 0.3 * n as f64, 1.0, 0.4, 0.0);
            assert!(c.re > 0.0 && c.im == 0.0);
        }
    }

    #[test]
    fn phase_factor() {
        let c = kraus_amplitude(2, 2.5, 1.0, 0.25, 0.3);
        assert!((c.arg() + 0.6).abs() < 1e-12);
    }

    #[test]
    fn purity_at_midpoint_and_peak() {
        let f = family(0.25, 6);
        assert!((f.povm_purity(2.0).unwrap() - 0.5).abs() < 1e-6);
        // Neighbour weight e^{−8} relative to the peak.
        let e = (-8.0f64).exp();
        let want = (1.0 + 2.0 * e * e) / (1.0 + 2.0 * e).powi(2);
        assert!((f.povm_purity(2.5).unwrap() - want).abs() < 1e-9);
        assert!((want - 0.99866).abs() < 1e-5);
    }

    #[test]
    fn purity_undefined_far_away() {
        assert!(matches!(family(0.05, 2).povm_purity(-1e3), Err(Error::Undefined(_))));
    }

    #[test]
    fn measurement_on_fock_state_in_plain_basis() {
        let f = family(0.25, 5);
        let basis = SqueezedNumberBasis::fock(12, 0.0, 6).unwrap();
        let psi = Ket::fock(12, 2).unwrap();
        let out = apply_measurement(&psi, 2.5, &f, &basis).unwrap();
        assert_eq!(out.nearest, 2);
        assert!((out.fidelity_nearest - 1.0).abs() < 1e-12);
        assert!((out.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_outcome() {
        let f = family(0.05, 3);
        let basis = SqueezedNumberBasis::fock(6, 0.0, 4).unwrap();
        let psi = Ket::fock(6, 0).unwrap();
        assert!(matches!(
            apply_measurement(&psi, 80.0, &f, &basis),
            Err(Error::ZeroProbability(_))
        ));
    }

    #[test]
    fn mismatched_basis_rejected() {
        let f = KrausFamily::new(1.0, 0.25, 0.0, 0.3, 3).unwrap();
        let basis = SqueezedNumberBasis::fock(20, 0.0, 4).unwrap();
        assert!(kraus_operator(1.0, &f, &basis).is_err());
        let small = SqueezedNumberBasis::fock(20, 0.3, 2).unwrap();
        assert!(kraus_operator(1.0, &f, &small).is_err());
    }

    #[test]
    fn distribution_normalised() {
        let f = family(0.25, 8);
        let basis = SqueezedNumberBasis::fock(20, 0.0, 9).unwrap();
        let psi = coherent_state(20, C64::new(0.7, 0.0)).unwrap();
        let p = outcome_distribution(&psi, &f, &basis).unwrap();
        assert!(p.iter().all(|v| *v >= 0.0));
        assert!((p.iter().sum::<f64>() * f.grid.step - 1.0).abs() < 1e-3);
    }
}

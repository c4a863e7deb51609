//! Pump states sampled on a uniform `x` grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::quadrature::{quadrature_table, wavefunction_to_ket_with, x_to_p_wavefunction, Grid, Quadrature};
use crate::fock::states::Ket;
use crate::C64;

/// Grid bounds as they appear in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.min, self.max, self.step)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpWavefunction {
    pub grid: Grid,
    pub psi: Vec<C64>,
}

impl PumpWavefunction {
    pub fn new(grid: Grid, psi: Vec<C64>) -> Result<Self> {
        if psi.len() != grid.len {
            return Err(Error::DimensionMismatch {
                expected: grid.len,
                found: psi.len(),
            });
        }
        Ok(Self { grid, psi })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F: Fn(f64) -> C64 + Sync>(grid: Grid, f: F) -> Self {
        let psi = (0..grid.len).into_par_iter().map(|i| f(grid.point(i))).collect();
        Self { grid, psi }
    }

    /// Position representation of a Fock-basis ket.
    pub fn from_ket(ket: &Ket, grid: Grid) -> Result<Self> {
        let table = quadrature_table(ket.dim(), &grid, Quadrature::X);
        let psi = crate::fock::quadrature::ket_to_wavefunction_with(&table, ket)?;
        Self::new(grid, psi)
    }

    /// Fock coefficients on `levels` levels; fails if they miss more than
    /// `tol` of the norm.
    pub fn to_ket(&self, levels: usize, tol: f64) -> Result<Ket> {
        let table = quadrature_table(levels, &self.grid, Quadrature::X);
        let ket = wavefunction_to_ket_with(&table, &self.grid, &self.psi)?;
        let missing = (self.norm_sqr() - ket.norm_sqr()).abs();
        let population = missing.max(ket.0.last().map_or(0.0, |c| c.norm_sqr()));
        if population > tol {
            return Err(Error::Truncation {
                population,
                tolerance: tol,
                context: format!("grid wavefunction in {levels} Fock levels"),
            });
        }
        Ok(ket)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.step
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroProbability(format!("wavefunction norm² = {n:.3e}")));
        }
        let s = 1.0 / n.sqrt();
        self.psi.iter_mut().for_each(|c| *c *= s);
        Ok(self)
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|c| c.norm_sqr()).collect()
    }

    /// `∫ ψ₁* ψ₂ dx`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::Grid("wavefunctions sampled on different grids".into()));
        }
        Ok(self.psi.iter().zip(&other.psi).map(|(a, b)| a.conj() * b).sum::<C64>() * self.grid.step)
    }

    /// `|⟨ψ₁|ψ₂⟩|² / (‖ψ₁‖²‖ψ₂‖²)`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        let denom = self.norm_sqr() * other.norm_sqr();
        if !(denom > 0.0) {
            return Err(Error::ZeroProbability("fidelity with a zero vector".into()));
        }
        Ok((self.inner(other)?.norm_sqr() / denom).min(1.0))
    }

    pub fn mean_x(&self) -> f64 {
        let d = self.density();
        let n: f64 = d.iter().sum();
        d.iter().enumerate().map(|(i, v)| v * self.grid.point(i)).sum::<f64>() / n
    }

    pub fn variance_x(&self) -> f64 {
        let d = self.density();
        let n: f64 = d.iter().sum();
        let m = self.mean_x();
        d.iter()
            .enumerate()
            .map(|(i, v)| v * (self.grid.point(i) - m).powi(2))
            .sum::<f64>()
            / n
    }

    /// Fraction of the norm within `margin` of either grid edge.
    pub fn edge_population(&self, margin: f64) -> f64 {
        let (lo, hi) = (self.grid.min + margin, self.grid.max() - margin);
        let total = self.norm_sqr();
        let edge: f64 = self
            .psi
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let x = self.grid.point(*i);
                x < lo || x > hi
            })
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>()
            * self.grid.step;
        edge / total
    }

    pub fn to_p(&self, p_grid: &Grid) -> Vec<C64> {
        x_to_p_wavefunction(&self.grid, &self.psi, p_grid)
    }

    /// Multiplication by `e^{2iγx}`, the momentum kick `D(iγ)`.
    pub fn kicked(&self, gamma: f64) -> Self {
        let psi = self
            .psi
            .iter()
            .enumerate()
            .map(|(i, c)| c * C64::from_polar(1.0, 2.0 * gamma * self.grid.point(i)))
            .collect();
        Self { grid: self.grid, psi }
    }

    /// `D(s)ψ`, i.e. `ψ(x − s)`, by band-limited interpolation through the
    /// momentum representation on `p_grid`. The state must be resolved by
    /// `p_grid`, which is checked through the transformed norm.
    pub fn shifted(&self, s: f64, p_grid: &Grid) -> Result<Self> {
        let psi_p = self.to_p(p_grid);
        let np: f64 = psi_p.iter().map(|c| c.norm_sqr()).sum::<f64>() * p_grid.step;
        let nx = self.norm_sqr();
        if (np - nx).abs() > 1e-6 * nx.max(1e-300) {
            return Err(Error::Grid(format!(
                "momentum grid [{:.2}, {:.2}] holds {np:.8} of norm {nx:.8}",
                p_grid.min,
                p_grid.max()
            )));
        }
        let norm = p_grid.step / std::f64::consts::PI.sqrt();
        let psi = (0..self.grid.len)
            .into_par_iter()
            .map(|i| {
                let x = self.grid.point(i) - s;
                let rot = C64::from_polar(1.0, 2.0 * x * p_grid.step);
                let mut phase = C64::from_polar(1.0, 2.0 * x * p_grid.min);
                let mut acc = C64::new(0.0, 0.0);
                for v in &psi_p {
                    acc += v * phase;
                    phase *= rot;
                }
                acc * norm
            })
            .collect();
        Ok(Self { grid: self.grid, psi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid, center: f64, sigma: f64, kick: f64) -> PumpWavefunction {
        PumpWavefunction::from_fn(grid, |x| {
            C64::from_polar((-(x - center).powi(2) / (4.0 * sigma * sigma)).exp(), 2.0 * kick * x)
        })
    }

    #[test]
    fn shift_matches_displaced_gaussian() {
        let g = Grid::new(-10.0, 10.0, 0.01).unwrap();
        let p = Grid::new(-15.0, 15.0, 0.01).unwrap();
        let psi = gaussian(g, 0.3, 0.4, 0.0).normalized().unwrap();
        let want = gaussian(g, 1.55, 0.4, 0.0).normalized().unwrap();
        let got = psi.shifted(1.25, &p).unwrap();
        let err = got.psi.iter().zip(&want.psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn shift_rejects_unresolved_momentum() {
        let g = Grid::new(-10.0, 10.0, 0.01).unwrap();
        let p = Grid::new(-2.0, 2.0, 0.01).unwrap();
        let psi = gaussian(g, 0.0, 0.5, 6.0).normalized().unwrap();
        assert!(matches!(psi.shifted(1.0, &p), Err(Error::Grid(_))));
    }

    #[test]
    fn kick_moves_momentum() {
        let g = Grid::new(-10.0, 10.0, 0.01).unwrap();
        let p = Grid::new(-6.0, 6.0, 0.005).unwrap();
        let psi = gaussian(g, 0.0, 0.5, 0.0).normalized().unwrap().kicked(1.7);
        let dens: Vec<f64> = psi.to_p(&p).iter().map(|c| c.norm_sqr()).collect();
        let mean = dens.iter().enumerate().map(|(i, d)| d * p.point(i)).sum::<f64>() * p.step;
        assert!((mean - 1.7).abs() < 1e-9, "{mean}");
    }

    #[test]
    fn ket_round_trip() {
        let g = Grid::new(-8.0, 8.0, 0.01).unwrap();
        let ket = crate::fock::states::squeezed_vacuum_pump(40, 0.3).unwrap();
        let psi = PumpWavefunction::from_ket(&ket, g).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        assert!((psi.variance_x() - 1.0 / (16.0 * 0.09)).abs() < 1e-8);
        let back = psi.to_ket(40, 1e-8).unwrap();
        assert!(back.fidelity(&ket).unwrap() > 1.0 - 1e-10);
    }
}

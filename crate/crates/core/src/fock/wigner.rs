//! Wigner functions normalised as `∫∫ W dx dp = 1`, so the vacuum peak is
//! `W(0, 0) = 2/π`.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::Grid;
use super::states::Ket;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// `values[[i, j]] = W(xs[i], ps[j])`.
    pub values: Array2<f64>,
}

fn spacing(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
}

impl WignerGrid {
    pub fn normalization(&self) -> f64 {
        self.values.sum() * spacing(&self.xs) * spacing(&self.ps)
    }

    /// `∫ W dp` at each `x`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = spacing(&self.ps);
        self.values.outer_iter().map(|row| row.sum() * dp).collect()
    }

    /// `∫ W dx` at each `p`.
    pub fn p_marginal(&self) -> Vec<f64> {
        let dx = spacing(&self.xs);
        (0..self.ps.len())
            .map(|j| self.values.column(j).sum() * dx)
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn check_normalization(&self, tol: f64) -> Result<()> {
        let n = self.normalization();
        if (n - 1.0).abs() > tol || !n.is_finite() {
            return Err(Error::Grid(format!(
                "Wigner function integrates to {n:.6} on this grid"
            )));
        }
        Ok(())
    }
}

/// Wigner function of a single-mode density matrix given in the Fock basis.
pub fn wigner_density(rho: &Array2<C64>, xs: &[f64], ps: &[f64]) -> Result<WignerGrid> {
    if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            found: rho.ncols(),
        });
    }
    let m = rho.nrows();
    let sqrt: Vec<f64> = (0..=m).map(|k| (k as f64).sqrt()).collect();
    let values: Vec<f64> = (0..xs.len() * ps.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / ps.len(), idx % ps.len());
            let alpha = C64::new(xs[i], ps[j]);
            wigner_point(rho, alpha, &sqrt)
        })
        .collect();
    Ok(WignerGrid {
        xs: xs.to_vec(),
        ps: ps.to_vec(),
        values: Array2::from_shape_vec((xs.len(), ps.len()), values).expect("grid shape"),
    })
}

/// Laguerre-free iterative evaluation of `(2/π) Tr[ρ D(α) Π D†(α)]`.
fn wigner_point(rho: &Array2<C64>, alpha: C64, sqrt: &[f64]) -> f64 {
    let m = rho.nrows();
    let mut wl = vec![C64::new(0.0, 0.0); m];
    wl[0] = C64::new((-2.0 * alpha.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
    let mut w = (rho[[0, 0]] * wl[0]).re;
    for n in 1..m {
        wl[n] = alpha * wl[n - 1] * 2.0 / sqrt[n];
        w += 2.0 * (rho[[0, n]] * wl[n]).re;
    }
    for mm in 1..m {
        let mut temp = wl[mm];
        wl[mm] = (alpha.conj() * temp * 2.0 - wl[mm - 1] * sqrt[mm]) / sqrt[mm];
        w += (rho[[mm, mm]] * wl[mm]).re;
        for n in mm + 1..m {
            let temp2 = (alpha * wl[n - 1] * 2.0 - temp * sqrt[mm]) / sqrt[n];
            temp = wl[n];
            wl[n] = temp2;
            w += 2.0 * (rho[[mm, n]] * wl[n]).re;
        }
    }
    2.0 * w
}

/// Wigner function of a pure single-mode state.
pub fn wigner_ket(ket: &Ket, xs: &[f64], ps: &[f64]) -> Result<WignerGrid> {
    let n = ket.dim();
    let rho = Array2::from_shape_fn((n, n), |(i, j)| ket.0[i] * ket.0[j].conj());
    wigner_density(&rho, xs, ps)
}

/// `W(x, p) = (2/π) ∫ ψ*(x+y) ψ(x−y) e^{4ipy} dy` from a position-space
/// sample. Output rows are every `stride`-th grid point.
pub fn wigner_from_wavefunction(grid: &Grid, psi: &[C64], stride: usize, ps: &[f64]) -> Result<WignerGrid> {
    if psi.len() != grid.len {
        return Err(Error::DimensionMismatch {
            expected: grid.len,
            found: psi.len(),
        });
    }
    let stride = stride.max(1);
    let rows: Vec<usize> = (0..grid.len).step_by(stride).collect();
    wigner_from_wavefunction_rows(grid, psi, &rows, ps)
}

/// As [`wigner_from_wavefunction`], evaluated on the listed grid rows only.
pub fn wigner_from_wavefunction_rows(grid: &Grid, psi: &[C64], rows: &[usize], ps: &[f64]) -> Result<WignerGrid> {
    if psi.len() != grid.len {
        return Err(Error::DimensionMismatch {
            expected: grid.len,
            found: psi.len(),
        });
    }
    if let Some(&bad) = rows.iter().find(|&&i| i >= grid.len) {
        return Err(Error::Grid(format!("row {bad} outside a grid of {} points", grid.len)));
    }
    let xs: Vec<f64> = rows.iter().map(|&i| grid.point(i)).collect();
    let d = grid.step;
    let values: Vec<f64> = rows
        .par_iter()
        .flat_map_iter(|&i| {
            let kmax = i.min(grid.len - 1 - i);
            let prods: Vec<C64> = (0..=kmax).map(|k| psi[i + k].conj() * psi[i - k]).collect();
            ps.iter()
                .map(|&p| {
                    let rot = C64::from_polar(1.0, 4.0 * p * d);
                    let mut phase = rot;
                    let mut acc = prods[0].re;
                    for pr in &prods[1..] {
                        // k and −k combine into twice the real part.
                        acc += 2.0 * (pr * phase).re;
                        phase *= rot;
                    }
                    acc * d * 2.0 / std::f64::consts::PI
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(WignerGrid {
        xs,
        ps: ps.to_vec(),
        values: Array2::from_shape_vec((rows.len(), ps.len()), values).expect("grid shape"),
    })
}

//! Quadrature representations. With `x = (a + a†)/2` the position
//! eigenfunctions are Hermite functions of `√2 x`:
//! `⟨x|n⟩ = (2/π)^{1/4} (2^n n!)^{−1/2} H_n(√2 x) e^{−x²}` and
//! `⟨p|n⟩ = (−i)^n ⟨x = p|n⟩`.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::states::Ket;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
}

/// Uniform grid `min, min + step, …` with `len` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid {
    /// Grid covering `[min, max]` inclusive with spacing as close to `step`
    /// as an integer number of intervals allows.
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(max > min) || !(step > 0.0) || !min.is_finite() || !max.is_finite() {
            return Err(Error::Grid(format!("invalid grid [{min}, {max}] step {step}")));
        }
        let intervals = ((max - min) / step).round().max(1.0) as usize;
        Ok(Self {
            min,
            step: (max - min) / intervals as f64,
            len: intervals + 1,
        })
    }

    pub fn max(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + self.step * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }
}

/// `ψ_0(q) ..= ψ_nmax(q)` by the normalised Hermite-function recurrence.
pub fn hermite_functions(n_max: usize, q: f64) -> Vec<f64> {
    let y = std::f64::consts::SQRT_2 * q;
    let mut out = Vec::with_capacity(n_max + 1);
    let psi0 = (2.0 / std::f64::consts::PI).powf(0.25) * (-q * q).exp();
    out.push(psi0);
    if n_max == 0 {
        return out;
    }
    if psi0 == 0.0 {
        // Far tails underflow; a log-domain start keeps the high orders alive.
        return hermite_functions_log(n_max, q);
    }
    out.push(std::f64::consts::SQRT_2 * y * psi0);
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * y * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

fn hermite_functions_log(n_max: usize, q: f64) -> Vec<f64> {
    // Run the recurrence on rescaled values, tracking the exponent separately.
    let y = std::f64::consts::SQRT_2 * q;
    let mut log_scale = 0.25 * (2.0 / std::f64::consts::PI).ln() - q * q;
    let mut prev = 0.0;
    let mut curr = 1.0;
    let mut out = vec![0.0; n_max + 1];
    for n in 0..=n_max {
        out[n] = curr * log_scale.exp();
        if n == n_max {
            break;
        }
        let nf = n as f64;
        let next = if n == 0 {
            std::f64::consts::SQRT_2 * y * curr
        } else {
            (2.0 / (nf + 1.0)).sqrt() * y * curr - (nf / (nf + 1.0)).sqrt() * prev
        };
        prev = curr;
        curr = next;
        let m = curr.abs().max(prev.abs());
        if m > 1e100 {
            prev /= m;
            curr /= m;
            log_scale += m.ln();
        }
    }
    out
}

/// `⟨q|n⟩` for the chosen quadrature.
pub fn quadrature_wavefunction(n: usize, q: f64, quadrature: Quadrature) -> C64 {
    let v = hermite_functions(n, q)[n];
    match quadrature {
        Quadrature::X => C64::new(v, 0.0),
        Quadrature::P => minus_i_pow(n) * v,
    }
}

fn minus_i_pow(n: usize) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

/// Matrix `T[i, n] = ⟨q_i|n⟩` on the grid for `n < levels`.
pub fn quadrature_table(levels: usize, grid: &Grid, quadrature: Quadrature) -> Array2<C64> {
    let rows: Vec<Vec<f64>> = (0..grid.len)
        .into_par_iter()
        .map(|i| hermite_functions(levels.saturating_sub(1), grid.point(i)))
        .collect();
    let mut t = Array2::<C64>::zeros((grid.len, levels));
    for (i, row) in rows.iter().enumerate() {
        for (n, v) in row.iter().enumerate().take(levels) {
            t[[i, n]] = match quadrature {
                Quadrature::X => C64::new(*v, 0.0),
                Quadrature::P => minus_i_pow(n) * *v,
            };
        }
    }
    t
}

/// Wavefunction `ψ(q_i) = Σ_n ⟨q_i|n⟩ c_n` from a precomputed table.
pub fn ket_to_wavefunction_with(table: &Array2<C64>, ket: &Ket) -> Result<Vec<C64>> {
    if table.ncols() != ket.dim() {
        return Err(Error::DimensionMismatch {
            expected: table.ncols(),
            found: ket.dim(),
        });
    }
    Ok(table
        .outer_iter()
        .map(|row| row.iter().zip(&ket.0).map(|(t, c)| t * c).sum())
        .collect())
}

pub fn ket_to_wavefunction(ket: &Ket, grid: &Grid, quadrature: Quadrature) -> Vec<C64> {
    let table = quadrature_table(ket.dim(), grid, quadrature);
    ket_to_wavefunction_with(&table, ket).expect("table built for this ket")
}

/// Fock coefficients `c_n = Σ_i ⟨n|q_i⟩ ψ(q_i) δq` of a sampled wavefunction.
pub fn wavefunction_to_ket_with(table: &Array2<C64>, grid: &Grid, psi: &[C64]) -> Result<Ket> {
    if psi.len() != grid.len || table.nrows() != grid.len {
        return Err(Error::DimensionMismatch {
            expected: grid.len,
            found: psi.len(),
        });
    }
    let levels = table.ncols();
    let coeffs = (0..levels)
        .map(|n| {
            table
                .column(n)
                .iter()
                .zip(psi)
                .map(|(t, v)| t.conj() * v)
                .sum::<C64>()
                * grid.step
        })
        .collect();
    Ok(Ket(coeffs))
}

pub fn wavefunction_to_ket(psi: &[C64], grid: &Grid, quadrature: Quadrature, levels: usize) -> Result<Ket> {
    let table = quadrature_table(levels, grid, quadrature);
    wavefunction_to_ket_with(&table, grid, psi)
}

/// Quadrature probability density `|ψ(q)|²` on the grid.
pub fn marginal(ket: &Ket, grid: &Grid, quadrature: Quadrature) -> Vec<f64> {
    ket_to_wavefunction(ket, grid, quadrature)
        .iter()
        .map(|c| c.norm_sqr())
        .collect()
}

/// Riemann sum of samples on the grid.
pub fn integrate(grid: &Grid, values: &[f64]) -> f64 {
    values.iter().sum::<f64>() * grid.step
}

/// Momentum-space wavefunction `ψ̃(p) = π^{−1/2} ∫ ψ(x) e^{−2ipx} dx` of a
/// position-space sample, evaluated by direct summation.
pub fn x_to_p_wavefunction(x_grid: &Grid, psi_x: &[C64], p_grid: &Grid) -> Vec<C64> {
    let norm = x_grid.step / std::f64::consts::PI.sqrt();
    (0..p_grid.len)
        .into_par_iter()
        .map(|j| {
            let p = p_grid.point(j);
            let rot = C64::from_polar(1.0, -2.0 * p * x_grid.step);
            let mut phase = C64::from_polar(1.0, -2.0 * p * x_grid.min);
            let mut acc = C64::new(0.0, 0.0);
            for v in psi_x {
                acc += v * phase;
                phase *= rot;
            }
            acc * norm
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_gaussian_with_quarter_variance() {
        for q in [-1.3f64, 0.0, 0.4, 2.0] {
            let want = (2.0 / std::f64::consts::PI).powf(0.25) * (-q * q).exp();
            assert!((quadrature_wavefunction(0, q, Quadrature::P).re - want).abs() < 1e-15);
        }
        let g = Grid::new(-8.0, 8.0, 0.01).unwrap();
        let dens: Vec<f64> = g
            .points()
            .iter()
            .map(|&q| quadrature_wavefunction(0, q, Quadrature::X).norm_sqr() * q * q)
            .collect();
        assert!((integrate(&g, &dens) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn first_excited_state_is_odd() {
        assert_eq!(quadrature_wavefunction(1, 0.0, Quadrature::X).norm(), 0.0);
        let a = quadrature_wavefunction(1, 0.7, Quadrature::X);
        let b = quadrature_wavefunction(1, -0.7, Quadrature::X);
        assert!((a + b).norm() < 1e-15);
    }

    #[test]
    fn grid_orthonormality() {
        let g = Grid::new(-6.0, 6.0, 0.01).unwrap();
        for quad in [Quadrature::X, Quadrature::P] {
            let t = quadrature_table(11, &g, quad);
            for m in 0..11 {
                for n in 0..11 {
                    let s: C64 = t.column(m).iter().zip(t.column(n)).map(|(a, b)| a.conj() * b).sum::<C64>() * g.step;
                    let want = if m == n { 1.0 } else { 0.0 };
                    assert!((s - C64::new(want, 0.0)).norm() < 1e-6, "{m} {n}");
                }
            }
        }
    }

    #[test]
    fn high_orders_survive_in_far_tails() {
        let far = hermite_functions(400, 28.0);
        assert!(far[0] == 0.0);
        assert!(far[400].is_finite() && far[400].abs() > 0.0);
        // Both routes agree where the direct recurrence is representable.
        let direct = hermite_functions(300, 9.0);
        let logd = hermite_functions_log(300, 9.0);
        for n in [0, 50, 150, 300] {
            assert!((direct[n] - logd[n]).abs() < 1e-12 * direct[n].abs().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn x_and_p_representations_are_fourier_pairs() {
        use crate::fock::states::coherent_state;
        let ket = coherent_state(30, C64::new(0.4, -0.6)).unwrap();
        let gx = Grid::new(-7.0, 7.0, 0.01).unwrap();
        let gp = Grid::new(-3.0, 3.0, 0.05).unwrap();
        let psi_x = ket_to_wavefunction(&ket, &gx, Quadrature::X);
        let via_ft = x_to_p_wavefunction(&gx, &psi_x, &gp);
        let direct = ket_to_wavefunction(&ket, &gp, Quadrature::P);
        for (a, b) in via_ft.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn ket_round_trips_through_grid() {
        use crate::fock::states::coherent_state;
        let ket = coherent_state(25, C64::new(1.0, 0.5)).unwrap();
        let g = Grid::new(-8.0, 8.0, 0.02).unwrap();
        let psi = ket_to_wavefunction(&ket, &g, Quadrature::P);
        let back = wavefunction_to_ket(&psi, &g, Quadrature::P, 25).unwrap();
        assert!((back.inner(&ket).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn grid_snaps_to_integer_intervals() {
        let g = Grid::new(-1.0, 1.0, 0.3).unwrap();
        assert_eq!(g.len, 8);
        assert!((g.max() - 1.0).abs() < 1e-14);
        assert!(Grid::new(1.0, 1.0, 0.1).is_err());
    }
}

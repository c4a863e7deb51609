//! Propagators and dense helpers.
//!
//! Time-independent Hamiltonians here reach spectral widths of 10^4 (the
//! `Δ N̂_a` term on a 40-level signal truncation), so the propagator is a
//! Chebyshev expansion of `exp(-iHt)` acting on a vector: it needs roughly
//! `R t` sparse products for half-width `R`, against several times that for
//! substepped Taylor or Runge-Kutta schemes at the same accuracy.

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::C64;

/// Bessel functions `J_0(z) ..= J_nmax(z)` for real `z >= 0` by Miller's
/// backward recurrence, normalised with `J_0 + 2 Σ J_2k = 1`.
pub fn bessel_j_sequence(z: f64, nmax: usize) -> Vec<f64> {
    assert!(z >= 0.0 && z.is_finite(), "bessel argument must be finite and non-negative");
    let mut out = vec![0.0; nmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let mut start = nmax.max(z.ceil() as usize) + 40 + (10.0 * z.cbrt()).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-30;
    for k in (1..=start).rev() {
        let next = (2.0 * k as f64 / z) * vals[k] - vals[k + 1];
        vals[k - 1] = next;
        if next.abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    for (o, v) in out.iter_mut().zip(vals.iter()) {
        *o = v / norm;
    }
    out
}

fn check_hermitian(h: &CsrMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    let scale = h.max_abs().max(1.0);
    let res = h.hermiticity_residual();
    if res > 1e-10 * scale {
        return Err(Error::NotHermitian(res));
    }
    Ok(())
}

/// `exp(-i H t) ψ` for Hermitian sparse `H`.
pub fn propagate(h: &CsrMatrix, psi: &[C64], t: f64) -> Result<Vec<C64>> {
    check_hermitian(h)?;
    if psi.len() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.ncols(),
            found: psi.len(),
        });
    }
    if t == 0.0 || h.nnz() == 0 {
        return Ok(psi.to_vec());
    }
    let (lo, hi) = h.gershgorin_bounds();
    let centre = 0.5 * (hi + lo);
    let half_width = 0.5 * (hi - lo) * 1.01 + 1e-12;
    let z = half_width * t.abs();
    let nmax = (z + 12.0 * z.cbrt() + 40.0).ceil() as usize;
    let bessel = bessel_j_sequence(z, nmax);
    let last = bessel
        .iter()
        .rposition(|b| b.abs() > 1e-17)
        .unwrap_or(0)
        .max(1);

    let n = psi.len();
    let sign = t.signum();
    // (-i)^k for forward time, (+i)^k backwards.
    let unit = C64::new(0.0, -sign);
    let apply = |src: &[C64], dst: &mut [C64]| {
        h.matvec_into(src, dst);
        for (d, s) in dst.iter_mut().zip(src) {
            *d = (*d - s * centre) / half_width;
        }
    };

    let mut prev = psi.to_vec();
    let mut curr = vec![C64::new(0.0, 0.0); n];
    apply(&prev, &mut curr);
    let mut acc: Vec<C64> = prev.iter().map(|v| v * bessel[0]).collect();
    let mut phase = unit;
    for (a, c) in acc.iter_mut().zip(&curr) {
        *a += c * phase * (2.0 * bessel[1]);
    }
    let mut next = vec![C64::new(0.0, 0.0); n];
    for &bk in bessel.iter().take(last + 1).skip(2) {
        apply(&curr, &mut next);
        for (nx, p) in next.iter_mut().zip(&prev) {
            *nx = *nx * 2.0 - p;
        }
        phase *= unit;
        let coeff = phase * (2.0 * bk);
        for (a, c) in acc.iter_mut().zip(&next) {
            *a += c * coeff;
        }
        std::mem::swap(&mut prev, &mut curr);
        std::mem::swap(&mut curr, &mut next);
    }
    let global = C64::from_polar(1.0, -centre * t);
    acc.iter_mut().for_each(|a| *a *= global);
    if acc.iter().any(|a| !a.is_finite()) {
        return Err(Error::Numerical("non-finite amplitude in Chebyshev propagation".into()));
    }
    Ok(acc)
}

/// `exp(G) ψ` for anti-Hermitian `G` (displacement and squeeze generators).
pub fn exp_anti_hermitian(generator: &CsrMatrix, psi: &[C64]) -> Result<Vec<C64>> {
    // exp(G) = exp(-i (iG) · 1) with iG Hermitian.
    propagate(&generator.scale(C64::new(0.0, 1.0)), psi, 1.0)
}

/// Dense unitary `exp(G)` for anti-Hermitian sparse `G`, built column by column.
pub fn exp_anti_hermitian_dense(generator: &CsrMatrix) -> Result<Array2<C64>> {
    let n = generator.nrows();
    let herm = generator.scale(C64::new(0.0, 1.0));
    let mut out = Array2::<C64>::zeros((n, n));
    for j in 0..n {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[j] = C64::new(1.0, 0.0);
        let col = propagate(&herm, &e, 1.0)?;
        for (i, v) in col.into_iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    Ok(out)
}

pub fn to_nalgebra(m: &Array2<C64>) -> DMatrix<C64> {
    let (r, c) = m.dim();
    DMatrix::from_fn(r, c, |i, j| m[[i, j]])
}

pub fn from_nalgebra(m: &DMatrix<C64>) -> Array2<C64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching eigenvectors as columns.
pub fn hermitian_eigh(m: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let eig = to_nalgebra(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let n = m.nrows();
    let vecs = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

pub fn hermitian_eigvals(m: &Array2<C64>) -> Vec<f64> {
    let mut v: Vec<f64> = to_nalgebra(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Matrix square root of a positive semi-definite Hermitian matrix; negative
/// round-off eigenvalues are clipped to zero.
pub fn sqrtm_psd(m: &Array2<C64>) -> Array2<C64> {
    let (vals, vecs) = hermitian_eigh(m);
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for (j, &lam) in vals.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        scaled.column_mut(j).mapv_inplace(|v| v * s);
    }
    let adj = vecs.t().mapv(|v| v.conj());
    let out = scaled.dot(&adj);
    debug_assert_eq!(out.dim(), (n, n));
    out
}

pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|v| v.conj())
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().iter().sum()
}

/// Largest entry of `|U†U - 1|`.
pub fn unitarity_residual(u: &Array2<C64>) -> f64 {
    let prod = dagger(u).dot(u);
    prod.indexed_iter()
        .map(|((i, j), v)| {
            let target = if i == j { 1.0 } else { 0.0 };
            (v - target).norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn bessel_small_arguments_match_tabulated_values() {
        let j = bessel_j_sequence(10.0, 6);
        assert!((j[0] - (-0.245_935_764_451_348_3)).abs() < 1e-13);
        assert!((j[1] - 0.043_472_746_168_861_44).abs() < 1e-13);
        assert!((j[5] - (-0.234_061_528_186_793_6)).abs() < 1e-13);
    }

    #[test]
    fn bessel_large_argument_matches_asymptotics_and_parseval() {
        let z = 7000.0;
        let j = bessel_j_sequence(z, 7400);
        let asym = (2.0 / (std::f64::consts::PI * z)).sqrt()
            * (z - std::f64::consts::FRAC_PI_4).cos();
        // next asymptotic correction is O(z^{-3/2})
        assert!((j[0] - asym).abs() < 1e-5);
        let parseval = j[0] * j[0] + 2.0 * j.iter().skip(1).map(|v| v * v).sum::<f64>();
        assert!((parseval - 1.0).abs() < 1e-10);
    }

    fn random_hermitian(n: usize, seed: u64) -> CsrMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, c(rng.gen_range(-5.0..5.0), 0.0)));
            for j in i + 1..n {
                if rng.gen_bool(0.4) {
                    let v = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                    trip.push((i, j, v));
                    trip.push((j, i, v.conj()));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, trip)
    }

    #[test]
    fn chebyshev_agrees_with_eigendecomposition() {
        let h = random_hermitian(12, 3);
        let psi: Vec<C64> = (0..12).map(|k| c(1.0 / (k as f64 + 1.0), 0.1 * k as f64)).collect();
        let t = 3.7;
        let got = propagate(&h, &psi, t).unwrap();
        let (vals, vecs) = hermitian_eigh(&h.to_dense());
        let coeffs: Vec<C64> = (0..12)
            .map(|k| (0..12).map(|i| vecs[[i, k]].conj() * psi[i]).sum())
            .collect();
        for i in 0..12 {
            let want: C64 = (0..12)
                .map(|k| vecs[[i, k]] * coeffs[k] * C64::from_polar(1.0, -vals[k] * t))
                .sum();
            assert!((got[i] - want).norm() < 1e-11, "{i}: {} vs {}", got[i], want);
        }
    }

    #[test]
    fn backward_propagation_inverts_forward() {
        let h = random_hermitian(10, 9);
        let psi: Vec<C64> = (0..10).map(|k| c(k as f64, 1.0)).collect();
        let fwd = propagate(&h, &psi, 2.0).unwrap();
        let back = propagate(&h, &fwd, -2.0).unwrap();
        for (a, b) in back.iter().zip(&psi) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0, 0.0))]);
        assert!(matches!(propagate(&m, &[c(1.0, 0.0), c(0.0, 0.0)], 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn sqrtm_squares_back() {
        let m = Array2::from_shape_vec((2, 2), vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]).unwrap();
        let s = sqrtm_psd(&m);
        let sq = s.dot(&s);
        for (a, b) in sq.iter().zip(m.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}

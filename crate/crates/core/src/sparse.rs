//! Compressed-sparse-row complex matrices.
//!
//! Every operator in this crate (ladder operators, quadratures, Hamiltonians,
//! Lindblad operators) is banded in the number basis, so the joint-space
//! matrices carry only a handful of entries per row. Dense matrices appear
//! only for density operators and small single-mode transforms.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicate positions
    /// are summed and exact zeros dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); nrows];
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            *rows[i].entry(j).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in rows {
            for (j, v) in row {
                if v != C64::new(0.0, 0.0) {
                    indices.push(j);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn from_dense(m: &Array2<C64>, drop_below: f64) -> Self {
        let (r, c) = m.dim();
        Self::from_triplets(
            r,
            c,
            m.indexed_iter()
                .filter(|(_, v)| v.norm() > drop_below)
                .map(|((i, j), &v)| (i, j, v)),
        )
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Iterates `(col, value)` over the stored entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.data[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map(|(_, v)| v)
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = self * x`
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// Dense product `self * m`.
    pub fn mul_dense(&self, m: &Array2<C64>) -> Array2<C64> {
        assert_eq!(m.nrows(), self.ncols);
        let ncols = m.ncols();
        let mut out = Array2::<C64>::zeros((self.nrows, ncols));
        for i in 0..self.nrows {
            let mut out_row = out.row_mut(i);
            for (k, v) in self.row(i) {
                let src = m.row(k);
                out_row.zip_mut_with(&src, |o, &s| *o += v * s);
            }
        }
        out
    }

    /// Dense product `m * self`.
    pub fn dense_mul(&self, m: &Array2<C64>) -> Array2<C64> {
        assert_eq!(m.ncols(), self.nrows);
        let mut out = Array2::<C64>::zeros((m.nrows(), self.ncols));
        for (k, j, v) in self.triplets() {
            let src = m.column(k);
            let mut dst = out.column_mut(j);
            dst.zip_mut_with(&src, |o, &s| *o += s * v);
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v.conj())),
        )
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v)),
        )
    }

    /// Elementwise complex conjugate.
    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= c);
        out.prune();
        out
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    fn prune(&mut self) {
        if self.data.iter().any(|v| *v == C64::new(0.0, 0.0)) {
            *self = Self::from_triplets(self.nrows, self.ncols, self.triplets());
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets().chain(other.triplets()),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets()
                .chain(other.triplets().map(|(i, j, v)| (i, j, -v))),
        )
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut trip = Vec::new();
        for i in 0..self.nrows {
            let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    *acc.entry(j).or_insert(C64::new(0.0, 0.0)) += a * b;
                }
            }
            trip.extend(acc.into_iter().map(|(j, v)| (i, j, v)));
        }
        Self::from_triplets(self.nrows, other.ncols, trip)
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Kronecker product `self ⊗ other`; the left factor indexes the slow axis.
    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.nrows, other.ncols);
        let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
        for (i1, j1, a) in self.triplets() {
            for (i2, j2, b) in other.triplets() {
                trip.push((i1 * r2 + i2, j1 * c2 + j2, a * b));
            }
        }
        Self::from_triplets(self.nrows * r2, self.ncols * c2, trip)
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::<C64>::zeros((self.nrows, self.ncols));
        for (i, j, v) in self.triplets() {
            m[[i, j]] += v;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute entry of `self - self†`.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.sub(&self.adjoint()).max_abs()
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum of a Hermitian matrix.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.nrows {
            let mut centre = 0.0;
            let mut radius = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    centre = v.re;
                } else {
                    radius += v.norm();
                }
            }
            lo = lo.min(centre - radius);
            hi = hi.max(centre + radius);
        }
        if self.nrows == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Splits into the diagonal and the strictly off-diagonal parts.
    pub fn split_diagonal(&self) -> (Vec<C64>, Self) {
        let diag = self.diagonal();
        let off = Self::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets().filter(|&(i, j, _)| i != j),
        );
        (diag, off)
    }

    /// Keeps only rows and columns in `keep` (in that order).
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.nrows.max(self.ncols)];
        for (new, &old) in keep.iter().enumerate() {
            pos[old] = new;
        }
        Self::from_triplets(
            keep.len(),
            keep.len(),
            self.triplets().filter_map(|(i, j, v)| {
                let (ni, nj) = (pos[i], pos[j]);
                (ni != usize::MAX && nj != usize::MAX).then_some((ni, nj, v))
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (1, 0, c(0.0, 0.0))],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 0.0));
    }

    #[test]
    fn kron_matches_dense_definition() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0, 1.0)), (1, 1, c(2.0, 0.0))]);
        let b = CsrMatrix::from_triplets(2, 2, vec![(0, 0, c(3.0, 0.0)), (1, 0, c(0.0, -1.0))]);
        let k = a.kron(&b).to_dense();
        let (ad, bd) = (a.to_dense(), b.to_dense());
        for i1 in 0..2 {
            for j1 in 0..2 {
                for i2 in 0..2 {
                    for j2 in 0..2 {
                        assert_eq!(k[[i1 * 2 + i2, j1 * 2 + j2]], ad[[i1, j1]] * bd[[i2, j2]]);
                    }
                }
            }
        }
    }

    #[test]
    fn dense_products_agree_with_sparse_matmul() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 1, c(1.0, 0.5)), (2, 0, c(-1.0, 0.0)), (1, 1, c(0.0, 2.0))],
        );
        let m = Array2::from_shape_fn((3, 3), |(i, j)| c(i as f64 + 1.0, j as f64 - 0.5));
        let md = CsrMatrix::from_dense(&m, 0.0);
        assert_eq!(a.mul_dense(&m), a.matmul(&md).to_dense());
        assert_eq!(a.dense_mul(&m), md.matmul(&a).to_dense());
    }

    #[test]
    fn gershgorin_encloses_spectrum_of_pauli_x() {
        let x = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))]);
        assert_eq!(x.gershgorin_bounds(), (-1.0, 1.0));
        assert_eq!(x.hermiticity_residual(), 0.0);
    }
}

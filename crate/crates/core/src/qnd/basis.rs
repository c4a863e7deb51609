use ndarray::Array2;

use crate::error::{Error, Result};
use crate::fock::operators::lowering;
use crate::fock::states::{squeezed_number_state, Ket};
use crate::linalg::{dagger, exp_anti_hermitian_dense, unitarity_residual};
use crate::C64;

/// The first `levels` squeezed number states `|N_a⟩` written in some signal
/// basis, stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct SqueezedNumberBasis {
    pub u: f64,
    /// `vectors[[k, N]] = ⟨k|N_a⟩`.
    pub vectors: Array2<C64>,
}

impl SqueezedNumberBasis {
    /// `|N_a⟩ = S(u)|N⟩` computed in a padded Fock space and projected onto
    /// the first `dim` levels. Overlaps `⟨N_a|ψ⟩` with states supported on
    /// those levels are then exact; the projected vectors are not
    /// renormalised.
    pub fn fock(dim: usize, u: f64, levels: usize) -> Result<Self> {
        if levels > dim {
            return Err(Error::InvalidParameter(format!(
                "{levels} squeezed number states do not fit in {dim} levels"
            )));
        }
        let mut vectors = Array2::zeros((dim, levels));
        let mut big = dim + levels + 40;
        for n in 0..levels {
            let ket = loop {
                match squeezed_number_state(big, u, n) {
                    Ok(k) => break k,
                    Err(Error::Truncation { .. }) if big < 64 * (dim + levels) => big *= 2,
                    Err(e) => return Err(e),
                }
            };
            for k in 0..dim {
                vectors[[k, n]] = ket.0[k];
            }
        }
        Ok(Self { u, vectors })
    }

    /// Signal already expressed in the `|N_a⟩` basis: unit vectors.
    pub fn native(dim: usize, u: f64, levels: usize) -> Result<Self> {
        if levels > dim {
            return Err(Error::InvalidParameter(format!(
                "{levels} levels requested from a {dim}-level basis"
            )));
        }
        let vectors = Array2::from_shape_fn((dim, levels), |(k, n)| {
            if k == n {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(Self { u, vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn levels(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn state(&self, n: usize) -> Ket {
        Ket(self.vectors.column(n).to_vec())
    }

    /// `c_N = ⟨N_a|ψ⟩` for `N < levels`.
    pub fn coefficients(&self, ket: &Ket) -> Result<Vec<C64>> {
        if ket.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: ket.dim(),
            });
        }
        Ok((0..self.levels())
            .map(|n| {
                self.vectors
                    .column(n)
                    .iter()
                    .zip(&ket.0)
                    .map(|(v, c)| v.conj() * c)
                    .sum()
            })
            .collect())
    }

    /// `Σ_N c_N |N_a⟩`.
    pub fn synthesize(&self, coeffs: &[C64]) -> Result<Ket> {
        if coeffs.len() > self.levels() {
            return Err(Error::DimensionMismatch {
                expected: self.levels(),
                found: coeffs.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (n, c) in coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.vectors.column(n)) {
                *o += v * c;
            }
        }
        Ok(Ket(out))
    }

    /// Keeps the first `levels` vectors.
    pub fn truncated(&self, levels: usize) -> Result<Self> {
        if levels > self.levels() {
            return Err(Error::DimensionMismatch {
                expected: self.levels(),
                found: levels,
            });
        }
        Ok(Self {
            u: self.u,
            vectors: self.vectors.slice(ndarray::s![.., ..levels]).to_owned(),
        })
    }

    /// `Σ_N d_N |N_a⟩⟨N_a|` as a dense matrix.
    pub fn diagonal_operator(&self, diag: &[C64]) -> Result<Array2<C64>> {
        if diag.len() > self.levels() {
            return Err(Error::DimensionMismatch {
                expected: self.levels(),
                found: diag.len(),
            });
        }
        let n = self.dim();
        let mut m = Array2::zeros((n, n));
        for (k, d) in diag.iter().enumerate() {
            if d.norm_sqr() == 0.0 {
                continue;
            }
            let col = self.vectors.column(k);
            for i in 0..n {
                let vi = col[i] * d;
                if vi.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    m[[i, j]] += vi * col[j].conj();
                }
            }
        }
        Ok(m)
    }
}

/// Smallest `N_max` whose cumulative weight `Σ_{N ≤ N_max} w_N` exceeds
/// `(1 − tol)·total`, where `total` is the norm of the expanded state.
pub fn n_max_for_weights(weights: &[f64], total: f64, tol: f64) -> Result<usize> {
    let mut acc = 0.0;
    for (n, w) in weights.iter().enumerate() {
        acc += w;
        if acc > (1.0 - tol) * total && acc > 0.0 {
            return Ok(n);
        }
    }
    Err(Error::Truncation {
        population: 1.0 - acc / total.max(f64::MIN_POSITIVE),
        tolerance: tol,
        context: format!("input weight not captured by {} squeezed number states", weights.len()),
    })
}

/// Squeeze unitary `S(r) = exp(r/2 (a² − a†²))` of the truncated generator.
/// It is exactly unitary on `dim` levels and matches the ideal operator on
/// states far below the cutoff.
pub fn squeeze_unitary(dim: usize, r: f64) -> Result<Array2<C64>> {
    let a = lowering(dim);
    let a2 = a.matmul(&a);
    let gen = a2.sub(&a2.adjoint()).scale_real(0.5 * r);
    exp_anti_hermitian_dense(&gen)
}

/// A pair of opposite signal squeezings `S_a`, `S_a†` around the
/// interaction. The measured operator becomes `Â_eff = S_a† Â S_a`, whose
/// number eigenstates are `S_a†|N_a⟩`.
#[derive(Clone, Debug)]
pub struct Sandwich {
    pub unitary: Array2<C64>,
}

impl Sandwich {
    pub fn new(unitary: Array2<C64>) -> Result<Self> {
        if unitary.nrows() != unitary.ncols() {
            return Err(Error::DimensionMismatch {
                expected: unitary.nrows(),
                found: unitary.ncols(),
            });
        }
        let res = unitarity_residual(&unitary);
        if res > 1e-8 {
            return Err(Error::NotUnitary(res));
        }
        Ok(Self { unitary })
    }

    /// `S_a = S(u)`, which maps the `|N_a⟩` basis back onto Fock states.
    pub fn inverse_bogoliubov(dim: usize, u: f64) -> Result<Self> {
        Self::new(squeeze_unitary(dim, u)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            unitary: Array2::from_shape_fn((dim, dim), |(i, j)| {
                C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
            }),
        }
    }

    /// `S_a† O S_a`.
    pub fn conjugate_operator(&self, op: &Array2<C64>) -> Result<Array2<C64>> {
        if op.dim() != self.unitary.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.unitary.nrows(),
                found: op.nrows(),
            });
        }
        Ok(dagger(&self.unitary).dot(op).dot(&self.unitary))
    }

    /// `S_a† |ψ⟩`.
    pub fn map_state(&self, ket: &Ket) -> Result<Ket> {
        self.apply(ket, true)
    }

    /// `S_a |ψ⟩`.
    pub fn unmap_state(&self, ket: &Ket) -> Result<Ket> {
        self.apply(ket, false)
    }

    fn apply(&self, ket: &Ket, adjoint: bool) -> Result<Ket> {
        let n = self.unitary.nrows();
        if ket.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: ket.dim(),
            });
        }
        let out = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if adjoint {
                            self.unitary[[j, i]].conj() * ket.0[j]
                        } else {
                            self.unitary[[i, j]] * ket.0[j]
                        }
                    })
                    .sum()
            })
            .collect();
        Ok(Ket(out))
    }

    /// Basis in which the sandwiched measurement is diagonal, `S_a†|N_a⟩`.
    pub fn effective_basis(&self, basis: &SqueezedNumberBasis) -> Result<SqueezedNumberBasis> {
        if basis.dim() != self.unitary.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.unitary.nrows(),
                found: basis.dim(),
            });
        }
        Ok(SqueezedNumberBasis {
            u: basis.u,
            vectors: dagger(&self.unitary).dot(&basis.vectors),
        })
    }
}

/// Transforms a signal state or operator by the sandwich `S_a`: states map to
/// `S_a†|ψ⟩`, operators to `S_a† O S_a`.
pub enum SandwichInput<'a> {
    State(&'a Ket),
    Operator(&'a Array2<C64>),
}

pub enum SandwichOutput {
    State(Ket),
    Operator(Array2<C64>),
}

pub fn basis_transform_sandwich(input: SandwichInput<'_>, s_a: &Array2<C64>) -> Result<SandwichOutput> {
    let s = Sandwich::new(s_a.clone())?;
    Ok(match input {
        SandwichInput::State(k) => SandwichOutput::State(s.map_state(k)?),
        SandwichInput::Operator(o) => SandwichOutput::Operator(s.conjugate_operator(o)?),
    })
}

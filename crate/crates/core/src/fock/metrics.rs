use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::states::Ket;
use super::ModeSpace;
use crate::error::{Error, Result};
use crate::linalg::{dagger, hermitian_eigvals, sqrtm_psd, trace};
use crate::sparse::CsrMatrix;
use crate::C64;

/// Density matrix of one mode or of the joint space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    pub matrix: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn from_ket(ket: &Ket) -> Self {
        let n = ket.dim();
        Self {
            matrix: Array2::from_shape_fn((n, n), |(i, j)| ket.0[i] * ket.0[j].conj()),
        }
    }

    /// `Σ p_k |ψ_k⟩⟨ψ_k|`.
    pub fn mixture(weights: &[f64], kets: &[Ket]) -> Result<Self> {
        let n = kets.first().map_or(0, Ket::dim);
        let mut m = Array2::<C64>::zeros((n, n));
        for (p, k) in weights.iter().zip(kets) {
            if k.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: k.dim(),
                });
            }
            for i in 0..n {
                for j in 0..n {
                    m[[i, j]] += k.0[i] * k.0[j].conj() * *p;
                }
            }
        }
        Ok(Self { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        trace(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn expectation(&self, op: &CsrMatrix) -> Result<C64> {
        if op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.ncols(),
            });
        }
        Ok(trace(&op.mul_dense(&self.matrix)))
    }

    pub fn variance(&self, op: &CsrMatrix) -> Result<f64> {
        let mean = self.expectation(op)?.re;
        let sq = op.matmul(op);
        Ok(self.expectation(&sq)?.re - mean * mean)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                r = r.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        r
    }

    /// Checks Hermiticity (1e−10), unit trace (1e−8) and positivity (−1e−8).
    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_residual();
        if h > 1e-10 {
            return Err(Error::NotHermitian(h));
        }
        let t = self.trace();
        if (t - C64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(Error::Numerical(format!("density matrix trace {t}")));
        }
        let min = hermitian_eigvals(&self.matrix).into_iter().fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            return Err(Error::Numerical(format!("density matrix eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Reduced state of the signal, tracing out the pump.
    pub fn trace_pump(&self, space: &ModeSpace) -> Result<DensityMatrix> {
        self.check_space(space)?;
        let (ns, np) = (space.n_signal, space.n_pump);
        Ok(DensityMatrix {
            matrix: Array2::from_shape_fn((ns, ns), |(i, j)| {
                (0..np).map(|k| self.matrix[[i * np + k, j * np + k]]).sum()
            }),
        })
    }

    /// Reduced state of the pump, tracing out the signal.
    pub fn trace_signal(&self, space: &ModeSpace) -> Result<DensityMatrix> {
        self.check_space(space)?;
        let (ns, np) = (space.n_signal, space.n_pump);
        Ok(DensityMatrix {
            matrix: Array2::from_shape_fn((np, np), |(i, j)| {
                (0..ns).map(|k| self.matrix[[k * np + i, k * np + j]]).sum()
            }),
        })
    }

    fn check_space(&self, space: &ModeSpace) -> Result<()> {
        if space.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: self.dim(),
            });
        }
        Ok(())
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_to_ket(&self, ket: &Ket) -> Result<f64> {
        if ket.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: ket.dim(),
            });
        }
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                row += self.matrix[[i, j]] * ket.0[j];
            }
            acc += ket.0[i].conj() * row;
        }
        Ok(acc.re)
    }

    /// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let s = sqrtm_psd(&self.matrix);
        let inner = s.dot(&other.matrix).dot(&s);
        let t: f64 = hermitian_eigvals(&inner).into_iter().map(|v| v.max(0.0).sqrt()).sum();
        Ok(t * t)
    }

    /// `½ Σ |λ_k(ρ − σ)|`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        let herm = (&diff + &dagger(&diff)).mapv(|c| c * 0.5);
        Ok(0.5 * hermitian_eigvals(&herm).into_iter().map(f64::abs).sum::<f64>())
    }
}

/// Signal state of a joint pure vector, tracing out the pump.
pub fn reduced_signal(ket: &Ket, space: &ModeSpace) -> Result<DensityMatrix> {
    if ket.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: ket.dim(),
        });
    }
    let (ns, np) = (space.n_signal, space.n_pump);
    Ok(DensityMatrix {
        matrix: Array2::from_shape_fn((ns, ns), |(i, j)| {
            (0..np).map(|k| ket.0[i * np + k] * ket.0[j * np + k].conj()).sum()
        }),
    })
}

/// Pump state of a joint pure vector, tracing out the signal.
pub fn reduced_pump(ket: &Ket, space: &ModeSpace) -> Result<DensityMatrix> {
    if ket.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: ket.dim(),
        });
    }
    let (ns, np) = (space.n_signal, space.n_pump);
    Ok(DensityMatrix {
        matrix: Array2::from_shape_fn((np, np), |(i, j)| {
            (0..ns).map(|k| ket.0[k * np + i] * ket.0[k * np + j].conj()).sum()
        }),
    })
}

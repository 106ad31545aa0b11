use std::fmt;

use crate::error::{QautError, Result};
use crate::linalg::{Complex, ComplexMatrix};

/// A validated mixed state of a finite-level system: Hermitian, positive
/// semidefinite and of unit trace (all within the tolerance it was built
/// with).
#[derive(Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validates `matrix` as a density operator.
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let deviation = matrix.hermitian_deviation()?;
        if deviation > tol {
            return Err(QautError::NotHermitian { deviation });
        }
        let trace = matrix.trace()?.re;
        let min_eigenvalue = matrix
            .hermitian_eigenvalues(tol)?
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eigenvalue < -tol {
            return Err(QautError::NotPsd { min_eigenvalue });
        }
        if (trace - 1.0).abs() > tol {
            return Err(QautError::TraceNotOne { trace });
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a unit column vector.
    pub fn pure(vector: &ComplexMatrix, tol: f64) -> Result<Self> {
        Self::pure_with(vector, tol, false)
    }

    /// Like [`DensityOperator::pure`], optionally rescaling `vector` to unit
    /// norm first.
    pub fn pure_with(vector: &ComplexMatrix, tol: f64, normalize: bool) -> Result<Self> {
        if !vector.is_column() {
            return Err(QautError::DimensionMismatch(format!(
                "pure state needs a column vector, got {}x{}",
                vector.rows(),
                vector.cols()
            )));
        }
        let norm = vector.frobenius_norm();
        if norm == 0.0 {
            return Err(QautError::ZeroVector);
        }
        let v = if normalize {
            vector.scale_real(1.0 / norm)
        } else if (norm - 1.0).abs() > tol {
            return Err(QautError::NotNormalized { norm });
        } else {
            vector.clone()
        };
        Ok(Self {
            matrix: v.matmul(&v.adjoint())?,
        })
    }

    /// Maximally mixed state `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// `|k⟩⟨k|` in the computational basis.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = Complex::new(1.0, 0.0);
        Self { matrix: m }
    }

    /// Convex combination of states of equal dimension.
    pub fn mix(ensemble: &[(f64, DensityOperator)], tol: f64) -> Result<Self> {
        let (_, first) = ensemble
            .first()
            .ok_or_else(|| QautError::BadWeights("empty ensemble".into()))?;
        let dim = first.dim();
        let mut total = 0.0;
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (p, rho) in ensemble {
            if !p.is_finite() || *p < 0.0 {
                return Err(QautError::BadWeights(format!("weight {p} is negative")));
            }
            if rho.dim() != dim {
                return Err(QautError::DimensionMismatch(format!(
                    "ensemble mixes dimensions {dim} and {}",
                    rho.dim()
                )));
            }
            total += p;
            acc = &acc + &rho.matrix.scale_real(*p);
        }
        if (total - 1.0).abs() > tol {
            return Err(QautError::BadWeights(format!("weights sum to {total}")));
        }
        Self::new(acc, tol)
    }

    /// Wraps a matrix the caller has already established to be a state.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).expect("square").trace().expect("square").re
    }

    /// `ρ ⊗ σ`.
    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        Self {
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    pub fn max_abs_diff(&self, other: &DensityOperator) -> Result<f64> {
        self.matrix.max_abs_diff(&other.matrix)
    }

    /// Reduced state on the factors listed in `keep` (ascending or not; the
    /// result orders them as in `dims`).
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<DensityOperator> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) || total != self.dim() {
            return Err(QautError::DimensionMismatch(format!(
                "factor dimensions {dims:?} do not multiply to {}",
                self.dim()
            )));
        }
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if kept.is_empty() || kept.iter().any(|&k| k >= dims.len()) {
            return Err(QautError::DimensionMismatch(format!(
                "invalid kept factors {keep:?} for {} factors",
                dims.len()
            )));
        }
        let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
        let kept_dims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
        let out_dim: usize = kept_dims.iter().product();
        let env_dim: usize = traced_dims.iter().product();

        // Combine a kept multi-index and a traced multi-index into a full index.
        let full_index = |k: usize, e: usize| -> usize {
            let mut digits = vec![0usize; dims.len()];
            let mut rem = k;
            for (slot, &d) in kept.iter().zip(&kept_dims).rev() {
                digits[*slot] = rem % d;
                rem /= d;
            }
            let mut rem = e;
            for (slot, &d) in traced.iter().zip(&traced_dims).rev() {
                digits[*slot] = rem % d;
                rem /= d;
            }
            digits.iter().zip(dims).fold(0, |acc, (&digit, &d)| acc * d + digit)
        };

        let mut out = ComplexMatrix::zeros(out_dim, out_dim);
        for i in 0..out_dim {
            for j in 0..out_dim {
                let mut s = Complex::new(0.0, 0.0);
                for e in 0..env_dim {
                    s += self.matrix[(full_index(i, e), full_index(j, e))];
                }
                out[(i, j)] = s;
            }
        }
        Ok(Self { matrix: out })
    }
}

impl fmt::Debug for DensityOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityOperator({:?})", self.matrix)
    }
}

pub fn make_density(matrix: ComplexMatrix, tol: f64) -> Result<DensityOperator> {
    DensityOperator::new(matrix, tol)
}

pub fn pure_state(vector: &ComplexMatrix, tol: f64) -> Result<DensityOperator> {
    DensityOperator::pure(vector, tol)
}

pub fn mix(ensemble: &[(f64, DensityOperator)], tol: f64) -> Result<DensityOperator> {
    DensityOperator::mix(ensemble, tol)
}

pub fn partial_trace(rho: &DensityOperator, dims: &[usize], keep: &[usize]) -> Result<DensityOperator> {
    rho.partial_trace(dims, keep)
}

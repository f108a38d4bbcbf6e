use super::{c, is_hermitian, CMatrix, Subspace};
use crate::{Error, Result, Tolerances};
use alloc::format;
use alloc::vec::Vec;
use nalgebra::SymmetricEigen;

/// Partial density operator: positive semidefinite with trace at most one.
#[derive(Debug, Clone)]
pub struct StateDensity {
    matrix: CMatrix,
}

impl StateDensity {
    /// Validates Hermiticity, eigenvalues `≥ −tol.num` and `tr ≤ 1 + tol.num`.
    pub fn new(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}, not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !is_hermitian(&matrix, tol) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = matrix.trace().re;
        if tr > 1.0 + tol.num {
            return Err(Error::InvalidState(format!("trace {tr} exceeds 1")));
        }
        let eig = SymmetricEigen::new(matrix.clone());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -tol.num {
            return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
        }
        Ok(StateDensity { matrix })
    }

    /// Skips validation; used for channel outputs that are positive by
    /// construction.
    pub(crate) fn trusted(matrix: CMatrix) -> Self {
        StateDensity { matrix }
    }

    /// `|ψ⟩⟨ψ|` for a vector given as a single column, normalised first.
    pub fn pure(psi: &CMatrix) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 {
            return Err(Error::ZeroState);
        }
        let v = psi / c(n, 0.0);
        Ok(StateDensity {
            matrix: &v * v.adjoint(),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        StateDensity {
            matrix: CMatrix::identity(dim, dim) / c(dim as f64, 0.0),
        }
    }

    pub fn zero(dim: usize) -> Self {
        StateDensity {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    /// Convex (or sub-convex) combination `Σ pᵢ ρᵢ`.
    pub fn mixture(parts: &[(f64, StateDensity)], tol: &Tolerances) -> Result<Self> {
        let dim = parts.first().map(|(_, s)| s.dim()).ok_or(Error::ZeroState)?;
        let mut m = CMatrix::zeros(dim, dim);
        for (p, s) in parts {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            m += &s.matrix * c(*p, 0.0);
        }
        StateDensity::new(m, tol)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Kronecker product; `self` is the more significant factor.
    pub fn tensor(&self, other: &StateDensity) -> StateDensity {
        StateDensity {
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    pub fn scaled(&self, p: f64) -> StateDensity {
        StateDensity {
            matrix: &self.matrix * c(p, 0.0),
        }
    }
}

/// Span of the eigenvectors whose eigenvalue exceeds `tol.rank · λ_max`.
pub fn support(rho: &StateDensity, tol: &Tolerances) -> Subspace {
    eigen_support(rho.matrix(), tol)
}

/// [`support`] for a raw matrix, rejecting non-Hermitian input.
pub fn support_of_matrix(m: &CMatrix, tol: &Tolerances) -> Result<Subspace> {
    if !is_hermitian(m, tol) {
        return Err(Error::InvalidState("matrix is not Hermitian".into()));
    }
    Ok(eigen_support(m, tol))
}

fn eigen_support(m: &CMatrix, tol: &Tolerances) -> Subspace {
    let dim = m.nrows();
    if dim == 0 {
        return Subspace::zero(0);
    }
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let top = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if top <= 0.0 {
        return Subspace::zero(dim);
    }
    let keep: Vec<usize> = (0..dim)
        .filter(|&k| eig.eigenvalues[k] > tol.rank * top)
        .collect();
    let mut b = CMatrix::zeros(dim, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        b.set_column(j, &eig.eigenvectors.column(k));
    }
    Subspace::from_orthonormal(b)
}

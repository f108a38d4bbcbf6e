use super::{column_space, hstack, identity, CMatrix, C64};
use crate::{Error, Result, Tolerances};
use alloc::vec::Vec;

/// A closed subspace of a finite-dimensional Hilbert space, stored as an
/// orthonormal column basis (`dim × rank`). Rank 0 is the zero subspace.
#[derive(Debug, Clone)]
pub struct Subspace {
    dim: usize,
    basis: CMatrix,
}

impl Subspace {
    pub fn zero(dim: usize) -> Self {
        Subspace {
            dim,
            basis: CMatrix::zeros(dim, 0),
        }
    }

    pub fn full(dim: usize) -> Self {
        Subspace {
            dim,
            basis: identity(dim),
        }
    }

    /// Span of the columns of `vectors`.
    pub fn span(vectors: &CMatrix, tol: &Tolerances) -> Self {
        Subspace {
            dim: vectors.nrows(),
            basis: column_space(vectors, tol),
        }
    }

    /// Span of an explicit list of vectors of length `dim`.
    pub fn span_of(dim: usize, vectors: &[Vec<C64>], tol: &Tolerances) -> Result<Self> {
        let mut m = CMatrix::zeros(dim, vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            for (i, z) in v.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        Ok(Subspace::span(&m, tol))
    }

    /// The line through computational basis vector `index`.
    pub fn basis_line(dim: usize, index: usize) -> Self {
        let mut b = CMatrix::zeros(dim, 1);
        b[(index, 0)] = C64::new(1.0, 0.0);
        Subspace { dim, basis: b }
    }

    /// Trusts that `basis` already has orthonormal columns.
    pub(crate) fn from_orthonormal(basis: CMatrix) -> Self {
        Subspace {
            dim: basis.nrows(),
            basis,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.dim
    }

    /// Orthogonal projector `B·B†`.
    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    fn check(&self, other: &Subspace) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn ortho(&self, tol: &Tolerances) -> Subspace {
        if self.is_zero() {
            return Subspace::full(self.dim);
        }
        if self.is_full() {
            return Subspace::zero(self.dim);
        }
        let complement = identity(self.dim) - self.projector();
        Subspace::span(&complement, tol)
    }

    pub fn join(&self, other: &Subspace, tol: &Tolerances) -> Result<Subspace> {
        lattice_join(self.dim, &[self.clone(), other.clone()], tol)
    }

    pub fn meet(&self, other: &Subspace, tol: &Tolerances) -> Result<Subspace> {
        lattice_meet(self.dim, &[self.clone(), other.clone()], tol)
    }

    /// Sasaki implication `self⊥ ∨ (self ∧ other)`.
    pub fn sasaki_implies(&self, other: &Subspace, tol: &Tolerances) -> Result<Subspace> {
        let both = self.meet(other, tol)?;
        self.ortho(tol).join(&both, tol)
    }

    /// Residual norm of `v` after projecting onto this subspace.
    pub fn residual(&self, v: &CMatrix) -> f64 {
        let proj = &self.basis * (self.basis.adjoint() * v);
        (v - proj).norm()
    }

    /// `other ⊆ self`: every basis column of `other` lies in `self` within
    /// `tol.sub`.
    pub fn includes(&self, other: &Subspace, tol: &Tolerances) -> Result<bool> {
        self.check(other)?;
        if other.is_zero() {
            return Ok(true);
        }
        if other.rank() > self.rank() {
            return Ok(false);
        }
        let proj = &self.basis * (self.basis.adjoint() * &other.basis);
        let diff = &other.basis - proj;
        Ok(diff.column_iter().all(|col| col.norm() <= tol.sub))
    }

    /// Mutual inclusion.
    pub fn equals(&self, other: &Subspace, tol: &Tolerances) -> Result<bool> {
        Ok(self.rank() == other.rank() && self.includes(other, tol)? && other.includes(self, tol)?)
    }

    /// Whether a (not necessarily normalised) vector lies in the subspace,
    /// relative to its own norm.
    pub fn contains_vector(&self, v: &CMatrix, tol: &Tolerances) -> bool {
        let n = v.norm();
        n == 0.0 || self.residual(v) <= tol.sub * n
    }

    /// Basis column of `self` with the largest component outside `other`,
    /// when that component exceeds `tol.sub`.
    pub fn violating_vector(&self, other: &Subspace, tol: &Tolerances) -> Option<CMatrix> {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..self.rank() {
            let col = self.basis.columns(j, 1).into_owned();
            let r = other.residual(&col);
            if r > tol.sub && best.is_none_or(|(b, _)| r > b) {
                best = Some((r, j));
            }
        }
        best.map(|(_, j)| self.basis.columns(j, 1).into_owned())
    }
}

/// Join of all `xs` in a `dim`-dimensional space; the empty join is `𝟎`.
pub fn lattice_join(dim: usize, xs: &[Subspace], tol: &Tolerances) -> Result<Subspace> {
    for x in xs {
        if x.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.dim,
            });
        }
    }
    let nonzero: Vec<CMatrix> = xs
        .iter()
        .filter(|x| !x.is_zero())
        .map(|x| x.basis.clone())
        .collect();
    match nonzero.len() {
        0 => Ok(Subspace::zero(dim)),
        1 => Ok(Subspace::from_orthonormal(nonzero.into_iter().next().unwrap())),
        _ => {
            if xs.iter().any(|x| x.is_full()) {
                return Ok(Subspace::full(dim));
            }
            Ok(Subspace::span(&hstack(dim, &nonzero), tol))
        }
    }
}

/// Meet of all `xs`, computed as `(⋁ xᵢ⊥)⊥`; the empty meet is the full space.
pub fn lattice_meet(dim: usize, xs: &[Subspace], tol: &Tolerances) -> Result<Subspace> {
    for x in xs {
        if x.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.dim,
            });
        }
    }
    if xs.iter().any(|x| x.is_zero()) {
        return Ok(Subspace::zero(dim));
    }
    let proper: Vec<Subspace> = xs.iter().filter(|x| !x.is_full()).cloned().collect();
    match proper.len() {
        0 => Ok(Subspace::full(dim)),
        1 => Ok(proper.into_iter().next().unwrap()),
        _ => {
            let comps: Vec<Subspace> = proper.iter().map(|x| x.ortho(tol)).collect();
            Ok(lattice_join(dim, &comps, tol)?.ortho(tol))
        }
    }
}

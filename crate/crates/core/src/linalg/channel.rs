use super::{c, hstack, identity, is_projection, is_unitary, max_abs};
use super::{CMatrix, StateDensity, Subspace};
use crate::{Error, Result, Tolerances};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::SymmetricEigen;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Unitary,
    Projective,
    General,
}

/// Completely positive trace-nonincreasing map `ρ ↦ Σ K ρ K†`.
#[derive(Debug, Clone)]
pub struct Channel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<CMatrix>,
    kind: ChannelKind,
}

impl Channel {
    /// Validates shapes and `Σ K†K ≤ I`, and classifies the channel.
    pub fn new(kraus: Vec<CMatrix>, tol: &Tolerances) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let (out_dim, in_dim) = first.shape();
        if kraus.iter().any(|k| k.shape() != (out_dim, in_dim)) {
            return Err(Error::InvalidChannel("Kraus operators differ in shape".into()));
        }
        let gram = kraus_gram(&kraus, in_dim);
        let slack = identity(in_dim) - gram;
        let eig = SymmetricEigen::new((&slack + slack.adjoint()) * c(0.5, 0.0));
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if in_dim > 0 && min < -tol.num {
            return Err(Error::InvalidChannel(format!(
                "sum of K†K exceeds the identity by {}",
                -min
            )));
        }
        let kind = if kraus.len() == 1 && in_dim == out_dim && is_unitary(&kraus[0], tol) {
            ChannelKind::Unitary
        } else if kraus.len() == 1 && in_dim == out_dim && is_projection(&kraus[0], tol) {
            ChannelKind::Projective
        } else {
            ChannelKind::General
        };
        Ok(Channel {
            in_dim,
            out_dim,
            kraus,
            kind,
        })
    }

    pub fn unitary(u: CMatrix, tol: &Tolerances) -> Result<Self> {
        if !is_unitary(&u, tol) {
            return Err(Error::InvalidChannel("matrix is not unitary".into()));
        }
        Ok(Channel {
            in_dim: u.ncols(),
            out_dim: u.nrows(),
            kraus: vec![u],
            kind: ChannelKind::Unitary,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Channel {
            in_dim: dim,
            out_dim: dim,
            kraus: vec![identity(dim)],
            kind: ChannelKind::Unitary,
        }
    }

    /// Single-operator channel `ρ ↦ PρP` for a projection `P`.
    pub fn projector(p: CMatrix, tol: &Tolerances) -> Result<Self> {
        if !is_projection(&p, tol) {
            return Err(Error::InvalidChannel("matrix is not a projection".into()));
        }
        Ok(Channel {
            in_dim: p.ncols(),
            out_dim: p.nrows(),
            kraus: vec![p],
            kind: ChannelKind::Projective,
        })
    }

    /// Built from operators already known to form a valid channel.
    pub(crate) fn trusted(kraus: Vec<CMatrix>, kind: ChannelKind) -> Self {
        let (out_dim, in_dim) = kraus[0].shape();
        Channel {
            in_dim,
            out_dim,
            kraus,
            kind,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn is_unitary(&self) -> bool {
        self.kind == ChannelKind::Unitary
    }

    /// `Σ K†K = I` within `tol.num`.
    pub fn is_trace_preserving(&self, tol: &Tolerances) -> bool {
        max_abs(&(kraus_gram(&self.kraus, self.in_dim) - identity(self.in_dim))) <= tol.num
    }

    fn check_in(&self, dim: usize) -> Result<()> {
        if dim != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: dim,
            });
        }
        Ok(())
    }

    pub fn apply(&self, rho: &StateDensity) -> Result<StateDensity> {
        self.check_in(rho.dim())?;
        Ok(StateDensity::trusted(self.apply_matrix(rho.matrix())))
    }

    pub(crate) fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        out
    }

    /// Column space of `{K·B}` for the basis `B` of `x`.
    pub fn image(&self, x: &Subspace, tol: &Tolerances) -> Result<Subspace> {
        self.check_in(x.dim())?;
        if x.is_zero() {
            return Ok(Subspace::zero(self.out_dim));
        }
        if self.kind == ChannelKind::Unitary {
            return Ok(Subspace::from_orthonormal(&self.kraus[0] * x.basis()));
        }
        let blocks: Vec<CMatrix> = self.kraus.iter().map(|k| k * x.basis()).collect();
        Ok(Subspace::span(&hstack(self.out_dim, &blocks), tol))
    }

    /// The channel with Kraus operators `{K†}`. Not trace-nonincreasing in
    /// general, so it is only used internally for subspace images.
    pub(crate) fn adjoint(&self) -> Channel {
        Channel {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            kraus: self.kraus.iter().map(|k| k.adjoint()).collect(),
            kind: self.kind,
        }
    }

    /// Weakest liberal precondition `(image(ℰ†, x⊥))⊥`.
    pub fn wlp(&self, x: &Subspace, tol: &Tolerances) -> Result<Subspace> {
        if x.dim() != self.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                found: x.dim(),
            });
        }
        if self.kind == ChannelKind::Unitary {
            return Ok(Subspace::from_orthonormal(self.kraus[0].adjoint() * x.basis()));
        }
        Ok(self.adjoint().image(&x.ortho(tol), tol)?.ortho(tol))
    }

    /// Choi matrix `Σ_k vec(K)vec(K)†`, input index major.
    pub fn choi(&self) -> CMatrix {
        let n = self.in_dim * self.out_dim;
        let mut m = CMatrix::zeros(n, n);
        for k in &self.kraus {
            let v = choi_vector(k);
            m += &v * v.adjoint();
        }
        m
    }

    /// Largest entrywise difference of the Choi matrices.
    pub fn choi_distance(&self, other: &Channel) -> Result<f64> {
        if self.in_dim != other.in_dim || self.out_dim != other.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim * self.out_dim,
                found: other.in_dim * other.out_dim,
            });
        }
        Ok(max_abs(&(self.choi() - other.choi())))
    }

    pub fn equal(&self, other: &Channel, tol: &Tolerances) -> Result<bool> {
        Ok(self.choi_distance(other)? <= tol.num)
    }

    /// `then ∘ self`: apply `self` first.
    pub fn then(&self, then: &Channel, tol: &Tolerances) -> Result<Channel> {
        if then.in_dim != self.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                found: then.in_dim,
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * then.kraus.len());
        for b in &then.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        let kind = match (self.kind, then.kind) {
            (ChannelKind::Unitary, ChannelKind::Unitary) => ChannelKind::Unitary,
            _ => ChannelKind::General,
        };
        Ok(Channel {
            in_dim: self.in_dim,
            out_dim: then.out_dim,
            kraus,
            kind,
        }
        .compressed(tol))
    }

    /// `Σ pᵢ ℰᵢ` for sub-probability weights.
    pub fn mix(parts: &[(f64, Channel)], tol: &Tolerances) -> Result<Channel> {
        let first = &parts
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty mixture".into()))?
            .1;
        let mut kraus = Vec::new();
        for (p, ch) in parts {
            if ch.in_dim != first.in_dim || ch.out_dim != first.out_dim {
                return Err(Error::DimensionMismatch {
                    expected: first.in_dim,
                    found: ch.in_dim,
                });
            }
            let s = c(libm::sqrt(*p), 0.0);
            kraus.extend(ch.kraus.iter().map(|k| k * s));
        }
        Ok(Channel::new(kraus, tol)?.compressed(tol))
    }

    /// Kronecker product; `self` acts on the more significant factor.
    pub fn tensor(&self, other: &Channel) -> Channel {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a.kronecker(b));
            }
        }
        let kind = match (self.kind, other.kind) {
            (ChannelKind::Unitary, ChannelKind::Unitary) => ChannelKind::Unitary,
            (ChannelKind::Projective, ChannelKind::Projective) => ChannelKind::Projective,
            _ => ChannelKind::General,
        };
        Channel {
            in_dim: self.in_dim * other.in_dim,
            out_dim: self.out_dim * other.out_dim,
            kraus,
            kind,
        }
    }

    /// Replaces an over-long Kraus list by a minimal one read off the Choi
    /// eigendecomposition.
    pub(crate) fn compressed(self, tol: &Tolerances) -> Channel {
        let n = self.in_dim * self.out_dim;
        if self.kraus.len() <= n.max(1) {
            return self;
        }
        let eig = SymmetricEigen::new(self.choi());
        let top = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let mut kraus = Vec::new();
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > 1e-3 * tol.num * top.max(1.0) {
                let v = eig.eigenvectors.column(k) * c(libm::sqrt(lambda), 0.0);
                let mut op = CMatrix::zeros(self.out_dim, self.in_dim);
                for i in 0..self.in_dim {
                    for a in 0..self.out_dim {
                        op[(a, i)] = v[i * self.out_dim + a];
                    }
                }
                kraus.push(op);
            }
        }
        if kraus.is_empty() {
            kraus.push(CMatrix::zeros(self.out_dim, self.in_dim));
        }
        Channel { kraus, ..self }
    }

    /// Range of the channel's output on the full input space.
    pub fn range(&self, tol: &Tolerances) -> Subspace {
        Subspace::span(&hstack(self.out_dim, &self.kraus), tol)
    }
}

fn kraus_gram(kraus: &[CMatrix], in_dim: usize) -> CMatrix {
    let mut g = CMatrix::zeros(in_dim, in_dim);
    for k in kraus {
        g += k.adjoint() * k;
    }
    g
}

fn choi_vector(k: &CMatrix) -> CMatrix {
    let (out_dim, in_dim) = k.shape();
    let mut v = CMatrix::zeros(in_dim * out_dim, 1);
    for i in 0..in_dim {
        for a in 0..out_dim {
            v[(i * out_dim + a, 0)] = k[(a, i)];
        }
    }
    v
}

//! Random matrices, subspaces, states and channels for probes and tests.

use crate::linalg::{c, CMatrix, Channel, StateDensity, Subspace, C64};
use crate::{Result, Tolerances};
use alloc::vec::Vec;
use nalgebra::SymmetricEigen;
use rand::Rng;

/// Standard complex Gaussian entry (Box–Muller).
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let th = 2.0 * core::f64::consts::PI * u2;
    c(r * libm::cos(th), r * libm::sin(th)) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unitary via QR with phase correction.
pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let qr = gaussian_matrix(dim, dim, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let n = d.norm();
        if n > 0.0 {
            let phase = d / n;
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Uniformly oriented subspace of the given rank.
pub fn subspace<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R, tol: &Tolerances) -> Subspace {
    if rank == 0 {
        return Subspace::zero(dim);
    }
    Subspace::span(&gaussian_matrix(dim, rank.min(dim), rng), tol)
}

/// Subspace of uniformly random rank in `0..=dim`.
pub fn any_subspace<R: Rng + ?Sized>(dim: usize, rng: &mut R, tol: &Tolerances) -> Subspace {
    let rank = rng.random_range(0..=dim);
    subspace(dim, rank, rng, tol)
}

/// Random unit vector.
pub fn vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let v = gaussian_matrix(dim, 1, rng);
    let n = v.norm();
    v / c(n, 0.0)
}

/// Unit vector drawn from `x`; `x` must be nonzero.
pub fn vector_in<R: Rng + ?Sized>(x: &Subspace, rng: &mut R) -> CMatrix {
    let coeff = vector(x.rank(), rng);
    x.basis() * coeff
}

/// Normalised density operator of the given rank (Wishart-style).
pub fn state<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> StateDensity {
    let g = gaussian_matrix(dim, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    StateDensity::trusted(m / c(tr, 0.0))
}

/// Normalised state whose support is exactly `x` (generically); `x` nonzero.
pub fn state_in<R: Rng + ?Sized>(x: &Subspace, rng: &mut R) -> StateDensity {
    let g = gaussian_matrix(x.rank(), x.rank(), rng);
    let inner = &g * g.adjoint();
    let m = x.basis() * inner * x.basis().adjoint();
    let tr = m.trace().re;
    StateDensity::trusted(m / c(tr, 0.0))
}

/// Random trace-preserving channel with `n` Kraus operators, optionally
/// scaled down by `scale ∈ (0, 1]` to make it trace-decreasing.
pub fn channel<R: Rng + ?Sized>(
    in_dim: usize,
    out_dim: usize,
    n: usize,
    scale: f64,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<Channel> {
    let gs: Vec<CMatrix> = (0..n.max(1)).map(|_| gaussian_matrix(out_dim, in_dim, rng)).collect();
    let mut s = CMatrix::zeros(in_dim, in_dim);
    for g in &gs {
        s += g.adjoint() * g;
    }
    let eig = SymmetricEigen::new(s);
    let inv_sqrt = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| c(1.0 / libm::sqrt(l), 0.0)));
    let w = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    let f = c(libm::sqrt(scale), 0.0);
    Channel::new(gs.iter().map(|g| g * &w * f).collect(), tol)
}

//! Dense complex linear algebra: the subspace lattice, partial density
//! operators, Kraus channels and tensor-factor placement.

mod channel;
mod placement;
mod state;
mod subspace;

pub use channel::{Channel, ChannelKind};
pub use placement::{restrict_state, restrict_subspace, Placement};
pub use state::{support, support_of_matrix, StateDensity};
pub use subspace::{lattice_join, lattice_meet, Subspace};

use crate::Tolerances;
use nalgebra::DMatrix;
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `U†U = I` within `tol.num`.
pub fn is_unitary(m: &CMatrix, tol: &Tolerances) -> bool {
    m.is_square() && max_abs(&(m.adjoint() * m - identity(m.nrows()))) <= tol.num
}

pub fn is_hermitian(m: &CMatrix, tol: &Tolerances) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol.num * max_abs(m).max(1.0)
}

/// `M² = M = M†` within `tol.num`.
pub fn is_projection(m: &CMatrix, tol: &Tolerances) -> bool {
    is_hermitian(m, tol) && max_abs(&(m * m - m)) <= tol.num
}

/// Orthonormal basis of the column space of `m`, via column-pivoted QR.
///
/// Pivoting orders `|R_kk|` decreasingly; columns past the first
/// `|R_kk| <= tol.rank * max(|R_00|, 1)` are dropped. The floor of 1 keeps
/// round-off columns (all entries ~1e-16) from being promoted to a spurious
/// direction; every caller passes vectors of unit scale or less.
pub fn column_space(m: &CMatrix, tol: &Tolerances) -> CMatrix {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return CMatrix::zeros(rows, 0);
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let steps = r.nrows().min(r.ncols());
    let cut = tol.rank * r[(0, 0)].norm().max(1.0);
    let rank = (0..steps).take_while(|&k| r[(k, k)].norm() > cut).count();
    qr.q().columns(0, rank).into_owned()
}

/// Horizontal concatenation of blocks with equal row counts.
pub(crate) fn hstack(rows: usize, blocks: &[CMatrix]) -> CMatrix {
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

/// Real part of `tr(A·B)` without forming the product.
pub(crate) fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    eig.eigenvalues.iter().map(|v| v.abs()).sum()
}

/// Trace distance `½ tr|σ − σ′|`.
pub fn trace_distance(a: &StateDensity, b: &StateDensity) -> f64 {
    0.5 * trace_norm_hermitian(&(a.matrix() - b.matrix()))
}

use super::{hstack, CMatrix, StateDensity, Subspace};
use crate::{Error, Result, Tolerances};
use alloc::vec;
use alloc::vec::Vec;

/// Index bookkeeping for an operator acting on some tensor factors of a
/// layout and as the identity on the rest.
///
/// Factor 0 of the layout is the most significant. The global index of a
/// basis vector is `rest_bases[t] + local_offsets[l]`, where `l` runs over the
/// local factors in the order given to [`Placement::new`].
#[derive(Debug, Clone)]
pub struct Placement {
    dim: usize,
    local_offsets: Vec<usize>,
    rest_bases: Vec<usize>,
}

impl Placement {
    pub fn new(layout: &[usize], positions: &[usize]) -> Result<Self> {
        let n = layout.len();
        let mut seen = vec![false; n];
        for &p in positions {
            if p >= n || seen[p] {
                return Err(Error::LayoutMismatch {
                    layout: layout.to_vec(),
                    dim: p,
                });
            }
            seen[p] = true;
        }
        let mut strides = vec![1usize; n];
        for j in (0..n.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * layout[j + 1];
        }
        let dim = layout.iter().product();
        let local: Vec<(usize, usize)> = positions.iter().map(|&p| (layout[p], strides[p])).collect();
        let rest: Vec<(usize, usize)> = (0..n)
            .filter(|j| !seen[*j])
            .map(|j| (layout[j], strides[j]))
            .collect();
        Ok(Placement {
            dim,
            local_offsets: offsets(&local),
            rest_bases: offsets(&rest),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn local_dim(&self) -> usize {
        self.local_offsets.len()
    }

    fn check_op(&self, k: &CMatrix) -> Result<()> {
        let d = self.local_dim();
        if k.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: k.ncols(),
            });
        }
        Ok(())
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rows,
            });
        }
        Ok(())
    }

    /// `(K ⊗ I_rest) · M` without forming the full operator.
    pub fn apply_columns(&self, k: &CMatrix, m: &CMatrix) -> Result<CMatrix> {
        self.check_op(k)?;
        self.check_rows(m.nrows())?;
        let d = self.local_dim();
        let cols = m.ncols();
        let blocks = self.rest_bases.len();
        let mut gathered = CMatrix::zeros(d, blocks * cols);
        for (t, &b) in self.rest_bases.iter().enumerate() {
            for j in 0..cols {
                for (l, &off) in self.local_offsets.iter().enumerate() {
                    gathered[(l, t * cols + j)] = m[(b + off, j)];
                }
            }
        }
        let mapped = k * gathered;
        let mut out = CMatrix::zeros(self.dim, cols);
        for (t, &b) in self.rest_bases.iter().enumerate() {
            for j in 0..cols {
                for (l, &off) in self.local_offsets.iter().enumerate() {
                    out[(b + off, j)] = mapped[(l, t * cols + j)];
                }
            }
        }
        Ok(out)
    }

    /// `Σ_k (K_k ⊗ I) ρ (K_k ⊗ I)†`.
    pub fn apply_kraus(&self, kraus: &[CMatrix], rho: &CMatrix) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in kraus {
            let left = self.apply_columns(k, rho)?;
            out += self.apply_columns(k, &left.adjoint())?.adjoint();
        }
        Ok(out)
    }

    pub fn apply_state(&self, kraus: &[CMatrix], rho: &StateDensity) -> Result<StateDensity> {
        Ok(StateDensity::trusted(self.apply_kraus(kraus, rho.matrix())?))
    }

    /// `L ⊗ ℋ_rest` for a subspace `L` of the local factors.
    pub fn lift_subspace(&self, local: &Subspace) -> Result<Subspace> {
        if local.dim() != self.local_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.local_dim(),
                found: local.dim(),
            });
        }
        let r = local.rank();
        let mut basis = CMatrix::zeros(self.dim, r * self.rest_bases.len());
        for (t, &b) in self.rest_bases.iter().enumerate() {
            for j in 0..r {
                for (l, &off) in self.local_offsets.iter().enumerate() {
                    basis[(b + off, t * r + j)] = local.basis()[(l, j)];
                }
            }
        }
        Ok(Subspace::from_orthonormal(basis))
    }

    /// The full `dim × dim` matrix of `K ⊗ I_rest`.
    pub fn explicit(&self, k: &CMatrix) -> Result<CMatrix> {
        self.check_op(k)?;
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for &b in &self.rest_bases {
            for (a, &oa) in self.local_offsets.iter().enumerate() {
                for (l, &ol) in self.local_offsets.iter().enumerate() {
                    out[(b + oa, b + ol)] = k[(a, l)];
                }
            }
        }
        Ok(out)
    }

    /// Partial trace of an operator onto the local factors.
    pub fn trace_out(&self, m: &CMatrix) -> Result<CMatrix> {
        self.check_rows(m.nrows())?;
        let d = self.local_dim();
        let mut out = CMatrix::zeros(d, d);
        for &b in &self.rest_bases {
            for (r, &or) in self.local_offsets.iter().enumerate() {
                for (c, &oc) in self.local_offsets.iter().enumerate() {
                    out[(r, c)] += m[(b + or, b + oc)];
                }
            }
        }
        Ok(out)
    }

    /// Row blocks `M_t` of `B`, one per assignment of the rest factors.
    fn row_blocks(&self, b: &CMatrix) -> Vec<CMatrix> {
        let d = self.local_dim();
        self.rest_bases
            .iter()
            .map(|&base| {
                CMatrix::from_fn(d, b.ncols(), |l, j| b[(base + self.local_offsets[l], j)])
            })
            .collect()
    }

    /// Support of the partial trace of `P_X` onto the local factors.
    pub fn restrict_subspace(&self, x: &Subspace, tol: &Tolerances) -> Result<Subspace> {
        self.check_rows(x.dim())?;
        if x.is_zero() {
            return Ok(Subspace::zero(self.local_dim()));
        }
        let blocks = self.row_blocks(x.basis());
        Ok(Subspace::span(&hstack(self.local_dim(), &blocks), tol))
    }
}

/// All sums `Σ digitᵢ · strideᵢ`, first factor most significant.
fn offsets(factors: &[(usize, usize)]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &(d, stride) in factors {
        let mut next = Vec::with_capacity(out.len() * d);
        for &o in &out {
            for digit in 0..d {
                next.push(o + digit * stride);
            }
        }
        out = next;
    }
    out
}

/// Partial trace of `rho` keeping the factors at `keep` (in that order).
pub fn restrict_state(rho: &StateDensity, keep: &[usize], layout: &[usize]) -> Result<StateDensity> {
    let p = Placement::new(layout, keep)?;
    if p.dim() != rho.dim() {
        return Err(Error::LayoutMismatch {
            layout: layout.to_vec(),
            dim: rho.dim(),
        });
    }
    Ok(StateDensity::trusted(p.trace_out(rho.matrix())?))
}

/// `supp tr_rest(P_X)` for the factors at `keep`.
pub fn restrict_subspace(
    x: &Subspace,
    keep: &[usize],
    layout: &[usize],
    tol: &Tolerances,
) -> Result<Subspace> {
    let p = Placement::new(layout, keep)?;
    if p.dim() != x.dim() {
        return Err(Error::LayoutMismatch {
            layout: layout.to_vec(),
            dim: x.dim(),
        });
    }
    p.restrict_subspace(x, tol)
}

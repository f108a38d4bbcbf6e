//! Quantum terms: syntax, Schrödinger and Heisenberg semantics, inversion and
//! channel equality.

use crate::interp::Interpretation;
use crate::linalg::{
    lattice_join, lattice_meet, max_abs, trace_distance, Channel, Placement, StateDensity,
    Subspace,
};
use crate::{Error, Result};
use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Operation symbol occurring in a basic term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Named(String),
    /// `U^-1`, bound to `U†`.
    Inverse(String),
    /// `I`, the identity on any variable list.
    Identity,
    /// `0`, reset of a single variable to `|0⟩`.
    Reset,
    /// `M.m`, the Kraus operator of outcome `m` of measurement `M`.
    Outcome { meas: String, outcome: String },
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Named(n) => write!(f, "{n}"),
            Op::Inverse(n) => write!(f, "{n}^-1"),
            Op::Identity => write!(f, "I"),
            Op::Reset => write!(f, "0"),
            Op::Outcome { meas, outcome } => write!(f, "{meas}.{outcome}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Basic { op: Op, vars: Vec<String> },
    /// `τ1 τ2`: `τ1` is applied first.
    Seq(Box<Term>, Box<Term>),
    Tensor(Box<Term>, Box<Term>),
    /// `Σ pᵢ τᵢ` with `Σ pᵢ ≤ 1`.
    ProbSum(Vec<(f64, Term)>),
}

impl Term {
    pub fn basic(op: Op, vars: &[&str]) -> Term {
        Term::Basic {
            op,
            vars: vars.iter().map(|v| (*v).to_owned()).collect(),
        }
    }

    pub fn named(name: &str, vars: &[&str]) -> Term {
        Term::basic(Op::Named(name.to_owned()), vars)
    }

    pub fn identity(vars: &[&str]) -> Term {
        Term::basic(Op::Identity, vars)
    }

    pub fn identity_on(vars: Vec<String>) -> Term {
        Term::Basic {
            op: Op::Identity,
            vars,
        }
    }

    pub fn seq(a: Term, b: Term) -> Term {
        Term::Seq(Box::new(a), Box::new(b))
    }

    pub fn tensor(a: Term, b: Term) -> Term {
        Term::Tensor(Box::new(a), Box::new(b))
    }

    /// Left-nested sequence of `terms`, applied first to last.
    pub fn seq_all(terms: Vec<Term>) -> Option<Term> {
        terms.into_iter().reduce(Term::seq)
    }

    /// `var(τ)` in first-occurrence order.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Basic { vars, .. } => {
                for v in vars {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
            Term::Seq(a, b) | Term::Tensor(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Term::ProbSum(parts) => {
                for (_, t) in parts {
                    t.collect_vars(out);
                }
            }
        }
    }

    /// Whether the term is `I(q̄)` for some variable list.
    pub fn is_identity(&self) -> bool {
        matches!(self, Term::Basic { op: Op::Identity, .. })
    }

    /// Applies `f` to every variable name.
    pub fn rename_vars(&self, f: &dyn Fn(&str) -> String) -> Term {
        match self {
            Term::Basic { op, vars } => Term::Basic {
                op: op.clone(),
                vars: vars.iter().map(|v| f(v)).collect(),
            },
            Term::Seq(a, b) => Term::seq(a.rename_vars(f), b.rename_vars(f)),
            Term::Tensor(a, b) => Term::tensor(a.rename_vars(f), b.rename_vars(f)),
            Term::ProbSum(parts) => {
                Term::ProbSum(parts.iter().map(|(p, t)| (*p, t.rename_vars(f))).collect())
            }
        }
    }

    /// Operation symbols with the variables they act on, in syntax order.
    pub fn basics(&self) -> Vec<(&Op, &[String])> {
        let mut out = Vec::new();
        self.collect_basics(&mut out);
        out
    }

    fn collect_basics<'a>(&'a self, out: &mut Vec<(&'a Op, &'a [String])>) {
        match self {
            Term::Basic { op, vars } => out.push((op, vars)),
            Term::Seq(a, b) | Term::Tensor(a, b) => {
                a.collect_basics(out);
                b.collect_basics(out);
            }
            Term::ProbSum(parts) => {
                for (_, t) in parts {
                    t.collect_basics(out);
                }
            }
        }
    }
}

/// Whether two variable lists hold the same set.
pub(crate) fn same_set(a: &[String], b: &[String]) -> bool {
    a.len() == b.len() && a.iter().all(|v| b.contains(v))
}

/// Validates `t` against `i` and returns `var(τ)`.
pub fn term_wf(i: &Interpretation, t: &Term) -> Result<Vec<String>> {
    match t {
        Term::Basic { op, vars } => {
            if vars.is_empty() && *op != Op::Identity {
                return Err(Error::Other(format!("`{op}` is applied to no variables")));
            }
            i.local_channel(op, vars)?;
            Ok(vars.clone())
        }
        Term::Seq(a, b) => {
            let mut va = term_wf(i, a)?;
            for v in term_wf(i, b)? {
                if !va.contains(&v) {
                    va.push(v);
                }
            }
            Ok(va)
        }
        Term::Tensor(a, b) => {
            let mut va = term_wf(i, a)?;
            let vb = term_wf(i, b)?;
            let shared: Vec<String> = vb.iter().filter(|v| va.contains(v)).cloned().collect();
            if !shared.is_empty() {
                return Err(Error::TensorOverlap(shared));
            }
            va.extend(vb);
            Ok(va)
        }
        Term::ProbSum(parts) => {
            let first = parts
                .first()
                .ok_or_else(|| Error::BadProbSum("no summands".into()))?;
            let vars = term_wf(i, &first.1)?;
            let mut total = 0.0;
            for (p, sub) in parts {
                if !(*p > 0.0) || !p.is_finite() {
                    return Err(Error::BadProbSum(format!("weight {p} is not positive")));
                }
                total += p;
                let vs = term_wf(i, sub)?;
                if !same_set(&vs, &vars) {
                    return Err(Error::BadProbSum(format!(
                        "summands act on different variables: {:?} and {:?}",
                        vars, vs
                    )));
                }
            }
            if total > 1.0 + i.tol().num {
                return Err(Error::BadProbSum(format!("weights sum to {total}")));
            }
            Ok(vars)
        }
    }
}

/// Whether every symbol is unitary and no probabilistic choice occurs.
pub fn is_unitary_term(i: &Interpretation, t: &Term) -> Result<bool> {
    Ok(match t {
        Term::Basic { op, .. } => i.op_is_unitary(op)?,
        Term::Seq(a, b) | Term::Tensor(a, b) => is_unitary_term(i, a)? && is_unitary_term(i, b)?,
        Term::ProbSum(_) => false,
    })
}

pub(crate) fn apply_raw(i: &Interpretation, t: &Term, rho: &StateDensity) -> Result<StateDensity> {
    match t {
        Term::Basic { op: Op::Identity, .. } => Ok(rho.clone()),
        Term::Basic { op, vars } => {
            let ch = i.local_channel(op, vars)?;
            i.placement(vars)?.apply_state(ch.kraus(), rho)
        }
        Term::Seq(a, b) | Term::Tensor(a, b) => apply_raw(i, b, &apply_raw(i, a, rho)?),
        Term::ProbSum(parts) => {
            let mut acc = crate::linalg::CMatrix::zeros(rho.dim(), rho.dim());
            for (p, sub) in parts {
                acc += apply_raw(i, sub, rho)?.matrix() * crate::linalg::c(*p, 0.0);
            }
            Ok(StateDensity::trusted(acc))
        }
    }
}

fn check_global(i: &Interpretation, dim: usize) -> Result<()> {
    if dim != i.dim() {
        return Err(Error::DimensionMismatch {
            expected: i.dim(),
            found: dim,
        });
    }
    Ok(())
}

/// Schrödinger semantics `⟦τ⟧(ρ)` on the global space.
pub fn term_apply(i: &Interpretation, t: &Term, rho: &StateDensity) -> Result<StateDensity> {
    term_wf(i, t)?;
    check_global(i, rho.dim())?;
    apply_raw(i, t, rho)
}

/// Column space of `{(K† ⊗ I)·B}` over the Kraus operators of a basic term.
fn adjoint_image(ch: &Channel, p: &Placement, x: &Subspace, i: &Interpretation) -> Result<Subspace> {
    if x.is_zero() {
        return Ok(x.clone());
    }
    let blocks = ch
        .kraus()
        .iter()
        .map(|k| p.apply_columns(&k.adjoint(), x.basis()))
        .collect::<Result<Vec<_>>>()?;
    if ch.is_unitary() {
        return Ok(Subspace::from_orthonormal(blocks.into_iter().next().unwrap()));
    }
    Ok(Subspace::span(&crate::linalg::hstack(p.dim(), &blocks), i.tol()))
}

pub(crate) fn image_raw(i: &Interpretation, t: &Term, x: &Subspace) -> Result<Subspace> {
    match t {
        Term::Basic { op: Op::Identity, .. } => Ok(x.clone()),
        Term::Basic { op, vars } => {
            let ch = i.local_channel(op, vars)?;
            adjoint_image(&ch, &i.placement(vars)?, x, i)
        }
        Term::Seq(a, b) | Term::Tensor(a, b) => image_raw(i, a, &image_raw(i, b, x)?),
        Term::ProbSum(parts) => {
            let imgs = parts
                .iter()
                .map(|(_, sub)| image_raw(i, sub, x))
                .collect::<Result<Vec<_>>>()?;
            lattice_join(x.dim(), &imgs, i.tol())
        }
    }
}

/// Heisenberg semantics `⟦τ⟧*(X)`: adjoint Kraus images, composed in reverse,
/// joined over probabilistic branches.
pub fn term_image(i: &Interpretation, t: &Term, x: &Subspace) -> Result<Subspace> {
    term_wf(i, t)?;
    check_global(i, x.dim())?;
    image_raw(i, t, x)
}

/// Forward image `supp ⟦τ⟧(P_X)`, computed from `{(K ⊗ I)·B}`.
pub(crate) fn forward_raw(i: &Interpretation, t: &Term, x: &Subspace) -> Result<Subspace> {
    match t {
        Term::Basic { op: Op::Identity, .. } => Ok(x.clone()),
        Term::Basic { op, vars } => {
            if x.is_zero() {
                return Ok(x.clone());
            }
            let ch = i.local_channel(op, vars)?;
            let p = i.placement(vars)?;
            let blocks = ch
                .kraus()
                .iter()
                .map(|k| p.apply_columns(k, x.basis()))
                .collect::<Result<Vec<_>>>()?;
            if ch.is_unitary() {
                return Ok(Subspace::from_orthonormal(blocks.into_iter().next().unwrap()));
            }
            Ok(Subspace::span(&crate::linalg::hstack(p.dim(), &blocks), i.tol()))
        }
        Term::Seq(a, b) | Term::Tensor(a, b) => forward_raw(i, b, &forward_raw(i, a, x)?),
        Term::ProbSum(parts) => {
            let imgs = parts
                .iter()
                .map(|(_, sub)| forward_raw(i, sub, x))
                .collect::<Result<Vec<_>>>()?;
            lattice_join(x.dim(), &imgs, i.tol())
        }
    }
}

/// Support of `⟦τ⟧` applied to the projector onto `X`.
pub fn term_forward_image(i: &Interpretation, t: &Term, x: &Subspace) -> Result<Subspace> {
    term_wf(i, t)?;
    check_global(i, x.dim())?;
    forward_raw(i, t, x)
}

pub(crate) fn wlp_raw(i: &Interpretation, t: &Term, x: &Subspace) -> Result<Subspace> {
    match t {
        Term::Basic { op: Op::Identity, .. } => Ok(x.clone()),
        Term::Basic { op, vars } => {
            let ch = i.local_channel(op, vars)?;
            let p = i.placement(vars)?;
            if ch.is_unitary() {
                return adjoint_image(&ch, &p, x, i);
            }
            if x.is_full() {
                return Ok(x.clone());
            }
            Ok(adjoint_image(&ch, &p, &x.ortho(i.tol()), i)?.ortho(i.tol()))
        }
        Term::Seq(a, b) | Term::Tensor(a, b) => wlp_raw(i, a, &wlp_raw(i, b, x)?),
        Term::ProbSum(parts) => {
            let pre = parts
                .iter()
                .map(|(_, sub)| wlp_raw(i, sub, x))
                .collect::<Result<Vec<_>>>()?;
            lattice_meet(x.dim(), &pre, i.tol())
        }
    }
}

/// `{ρ : supp ⟦τ⟧(ρ) ⊆ X}` as a subspace.
pub fn term_wlp(i: &Interpretation, t: &Term, x: &Subspace) -> Result<Subspace> {
    term_wf(i, t)?;
    check_global(i, x.dim())?;
    wlp_raw(i, t, x)
}

/// Structural inverse of a unitary term.
pub fn term_invert(t: &Term) -> Result<Term> {
    Ok(match t {
        Term::Basic { op, vars } => {
            let inv = match op {
                Op::Named(n) => Op::Inverse(n.clone()),
                Op::Inverse(n) => Op::Named(n.clone()),
                Op::Identity => Op::Identity,
                Op::Reset | Op::Outcome { .. } => return Err(Error::NotUnitaryTerm(t.to_string())),
            };
            Term::Basic {
                op: inv,
                vars: vars.clone(),
            }
        }
        Term::Seq(a, b) => Term::seq(term_invert(b)?, term_invert(a)?),
        Term::Tensor(a, b) => Term::tensor(term_invert(a)?, term_invert(b)?),
        Term::ProbSum(_) => return Err(Error::NotUnitaryTerm(t.to_string())),
    })
}

/// [`term_invert`] after checking that every symbol is bound to a unitary.
pub fn term_invert_checked(i: &Interpretation, t: &Term) -> Result<Term> {
    term_wf(i, t)?;
    if !is_unitary_term(i, t)? {
        return Err(Error::NotUnitaryTerm(t.to_string()));
    }
    term_invert(t)
}

/// The channel `⟦τ⟧` on the local space of `vars`, which must contain `var(τ)`.
pub fn term_channel(i: &Interpretation, t: &Term, vars: &[String]) -> Result<Channel> {
    term_wf(i, t)?;
    let dims = i.dims_of(vars)?;
    i.positions(vars)?;
    channel_raw(i, t, vars, &dims)
}

fn channel_raw(i: &Interpretation, t: &Term, vars: &[String], dims: &[usize]) -> Result<Channel> {
    let tol = i.tol();
    match t {
        Term::Basic { op: Op::Identity, .. } => Ok(Channel::identity(dims.iter().product())),
        Term::Basic { op, vars: on } => {
            let ch = i.local_channel(op, on)?;
            let positions = on
                .iter()
                .map(|v| {
                    vars.iter()
                        .position(|w| w == v)
                        .ok_or_else(|| Error::UnknownVariable(v.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            let p = Placement::new(dims, &positions)?;
            let kraus = ch
                .kraus()
                .iter()
                .map(|k| p.explicit(k))
                .collect::<Result<Vec<_>>>()?;
            Ok(Channel::trusted(kraus, ch.kind()))
        }
        Term::Seq(a, b) | Term::Tensor(a, b) => {
            channel_raw(i, a, vars, dims)?.then(&channel_raw(i, b, vars, dims)?, tol)
        }
        Term::ProbSum(parts) => {
            let chans = parts
                .iter()
                .map(|(p, sub)| Ok((*p, channel_raw(i, sub, vars, dims)?)))
                .collect::<Result<Vec<_>>>()?;
            Channel::mix(&chans, tol)
        }
    }
}

/// Largest Choi-matrix entry difference of the two terms on `var(τ1) ∪ var(τ2)`.
pub fn term_distance(i: &Interpretation, t1: &Term, t2: &Term) -> Result<f64> {
    let mut vars = term_wf(i, t1)?;
    for v in term_wf(i, t2)? {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let a = term_channel(i, t1, &vars)?;
    let b = term_channel(i, t2, &vars)?;
    a.choi_distance(&b)
}

/// `⟦τ1⟧ = ⟦τ2⟧` as channels on the global space.
pub fn term_equiv(i: &Interpretation, t1: &Term, t2: &Term) -> Result<bool> {
    Ok(term_distance(i, t1, t2)? <= i.tol().num)
}

/// Every allowed basic term over `qs`: each symbol of each signature placed on
/// every injective tuple of `qs` with matching dimensions.
pub fn generators(i: &Interpretation, qs: &[String]) -> Result<Vec<Term>> {
    i.positions(qs)?;
    let dims = i.dims_of(qs)?;
    let mut out = Vec::new();
    for (sig, ops) in i.allowed() {
        let mut tuple = Vec::with_capacity(sig.len());
        injective_tuples(sig, &dims, &mut tuple, &mut |idx| {
            let vars: Vec<String> = idx.iter().map(|&k| qs[k].clone()).collect();
            for op in ops {
                out.push(Term::Basic {
                    op: op.clone(),
                    vars: vars.clone(),
                });
            }
        });
    }
    if out.is_empty() && !qs.is_empty() {
        return Err(Error::EmptyAllowedSet(qs.to_vec()));
    }
    Ok(out)
}

fn injective_tuples(
    sig: &[usize],
    dims: &[usize],
    prefix: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if prefix.len() == sig.len() {
        emit(prefix);
        return;
    }
    let want = sig[prefix.len()];
    for k in 0..dims.len() {
        if dims[k] == want && !prefix.contains(&k) {
            prefix.push(k);
            injective_tuples(sig, dims, prefix, emit);
            prefix.pop();
        }
    }
}

/// Smallest trace distance from `target` reached by applying generator words
/// of length at most `max_len` to `rho`, searched breadth first. Both states
/// live on the local space of `vars`.
pub fn expressivity_probe(
    i: &Interpretation,
    vars: &[String],
    rho: &StateDensity,
    target: &StateDensity,
    max_len: usize,
) -> Result<f64> {
    let gens = generators(i, vars)?;
    let d: usize = i.dims_of(vars)?.iter().product();
    if rho.dim() != d || target.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.dim(),
        });
    }
    if gens.is_empty() {
        return Err(Error::EmptyAllowedSet(vars.to_vec()));
    }
    let chans = gens
        .iter()
        .map(|g| term_channel(i, g, vars))
        .collect::<Result<Vec<_>>>()?;
    const FRONTIER_CAP: usize = 4096;
    let tol = i.tol();
    let mut seen: Vec<StateDensity> = vec![rho.clone()];
    let mut frontier = vec![rho.clone()];
    let mut best = trace_distance(rho, target);
    for _ in 0..max_len {
        if best <= tol.num {
            break;
        }
        let mut next = Vec::new();
        for s in &frontier {
            for ch in &chans {
                let out = ch.apply(s)?;
                if seen
                    .iter()
                    .any(|t| max_abs(&(t.matrix() - out.matrix())) <= tol.num)
                {
                    continue;
                }
                best = best.min(trace_distance(&out, target));
                seen.push(out.clone());
                next.push(out);
            }
        }
        if next.is_empty() {
            break;
        }
        next.truncate(FRONTIER_CAP);
        frontier = next;
    }
    Ok(best)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, Prec::Tensor)
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Prec {
    Tensor,
    Seq,
    Atom,
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, ctx: Prec) -> fmt::Result {
    let own = match t {
        Term::Tensor(..) => Prec::Tensor,
        Term::Seq(..) => Prec::Seq,
        _ => Prec::Atom,
    };
    let wrap = own < ctx;
    if wrap {
        write!(f, "[")?;
    }
    match t {
        Term::Basic { op, vars } => write!(f, "{op}({})", vars.join(","))?,
        Term::Seq(a, b) => {
            write_term(f, a, Prec::Seq)?;
            write!(f, " ")?;
            write_term(f, b, Prec::Atom)?;
        }
        Term::Tensor(a, b) => {
            write_term(f, a, Prec::Tensor)?;
            write!(f, " * ")?;
            write_term(f, b, Prec::Seq)?;
        }
        Term::ProbSum(parts) => {
            write!(f, "sum{{")?;
            for (k, (p, sub)) in parts.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                write!(f, " {p} : ")?;
                write_term(f, sub, Prec::Tensor)?;
            }
            write!(f, " }}")?;
        }
    }
    if wrap {
        write!(f, "]")?;
    }
    Ok(())
}

//! Formulas, their subspace semantics, satisfaction and quantifier fixpoints.

use crate::interp::{Declaration, Interpretation, PredicateDef};
use crate::linalg::{support, trace_product_re, StateDensity, Subspace, C64};
use crate::terms::{generators, image_raw, term_wf, wlp_raw, Term};
use crate::{Error, Result};
use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    /// `P(τ)`; `P(q̄)` is `P(I(q̄))`.
    Atom { pred: String, term: Term },
    /// `meas M.m(q̄)`: the range of outcome `m`.
    Meas {
        meas: String,
        outcome: String,
        vars: Vec<String>,
    },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// `¬(¬β ∧ ¬γ)`.
    Or(Box<Formula>, Box<Formula>),
    /// Sasaki implication `¬β ∨ (β ∧ γ)`.
    Implies(Box<Formula>, Box<Formula>),
    /// `τ*(β)`.
    Adjoint(Term, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
    /// `¬(∀q̄)¬β`.
    Exists(Vec<String>, Box<Formula>),
    True,
    False,
}

impl Formula {
    pub fn atom(pred: &str, term: Term) -> Formula {
        Formula::Atom {
            pred: pred.to_owned(),
            term,
        }
    }

    /// `P(q̄)` on bare variables.
    pub fn pred(pred: &str, vars: &[&str]) -> Formula {
        Formula::atom(pred, Term::identity(vars))
    }

    pub fn meas(meas: &str, outcome: &str, vars: &[String]) -> Formula {
        Formula::Meas {
            meas: meas.to_owned(),
            outcome: outcome.to_owned(),
            vars: vars.to_vec(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn adjoint(t: Term, a: Formula) -> Formula {
        Formula::Adjoint(t, Box::new(a))
    }

    pub fn forall(qs: &[&str], a: Formula) -> Formula {
        Formula::Forall(qs.iter().map(|q| (*q).to_owned()).collect(), Box::new(a))
    }

    pub fn exists(qs: &[&str], a: Formula) -> Formula {
        Formula::Exists(qs.iter().map(|q| (*q).to_owned()).collect(), Box::new(a))
    }

    /// Left-nested disjunction; `false` when empty.
    pub fn or_all(parts: Vec<Formula>) -> Formula {
        parts.into_iter().reduce(Formula::or).unwrap_or(Formula::False)
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn and_all(parts: Vec<Formula>) -> Formula {
        parts.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    /// `free(β)` in first-occurrence order.
    pub fn free(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut Vec<String>) {
        let add = |vs: Vec<String>, out: &mut Vec<String>| {
            for v in vs {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            Formula::Atom { term, .. } => add(term.vars(), out),
            Formula::Meas { vars, .. } => add(vars.clone(), out),
            Formula::Not(a) => a.collect_free(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Formula::Adjoint(t, a) => {
                add(t.vars(), out);
                a.collect_free(out);
            }
            Formula::Forall(qs, a) | Formula::Exists(qs, a) => {
                let inner: Vec<String> = a.free().into_iter().filter(|v| !qs.contains(v)).collect();
                add(inner, out);
            }
            Formula::True | Formula::False => {}
        }
    }

    /// Every variable occurring anywhere, bound or free.
    pub fn all_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_all(&mut out);
        out
    }

    fn collect_all(&self, out: &mut Vec<String>) {
        let add = |vs: &[String], out: &mut Vec<String>| {
            for v in vs {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        };
        match self {
            Formula::Atom { term, .. } => add(&term.vars(), out),
            Formula::Meas { vars, .. } => add(vars, out),
            Formula::Not(a) => a.collect_all(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_all(out);
                b.collect_all(out);
            }
            Formula::Adjoint(t, a) => {
                add(&t.vars(), out);
                a.collect_all(out);
            }
            Formula::Forall(qs, a) | Formula::Exists(qs, a) => {
                add(qs, out);
                a.collect_all(out);
            }
            Formula::True | Formula::False => {}
        }
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            Formula::Forall(..) | Formula::Exists(..) => true,
            Formula::Not(a) | Formula::Adjoint(_, a) => a.has_quantifier(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.has_quantifier() || b.has_quantifier()
            }
            _ => false,
        }
    }

    /// Renames free occurrences of variables via `f`.
    pub fn rename_free(&self, f: &dyn Fn(&str) -> String) -> Formula {
        match self {
            Formula::Atom { pred, term } => Formula::Atom {
                pred: pred.clone(),
                term: term.rename_vars(f),
            },
            Formula::Meas {
                meas,
                outcome,
                vars,
            } => Formula::Meas {
                meas: meas.clone(),
                outcome: outcome.clone(),
                vars: vars.iter().map(|v| f(v)).collect(),
            },
            Formula::Not(a) => Formula::not(a.rename_free(f)),
            Formula::And(a, b) => Formula::and(a.rename_free(f), b.rename_free(f)),
            Formula::Or(a, b) => Formula::or(a.rename_free(f), b.rename_free(f)),
            Formula::Implies(a, b) => Formula::implies(a.rename_free(f), b.rename_free(f)),
            Formula::Adjoint(t, a) => Formula::adjoint(t.rename_vars(f), a.rename_free(f)),
            Formula::Forall(qs, a) | Formula::Exists(qs, a) => {
                let g = |v: &str| if qs.iter().any(|q| q == v) { v.to_owned() } else { f(v) };
                let body = Box::new(a.rename_free(&g));
                if matches!(self, Formula::Forall(..)) {
                    Formula::Forall(qs.clone(), body)
                } else {
                    Formula::Exists(qs.clone(), body)
                }
            }
            Formula::True | Formula::False => self.clone(),
        }
    }
}

/// Validates `b` and returns `free(β)`.
pub fn formula_wf(i: &Interpretation, b: &Formula) -> Result<Vec<String>> {
    check(i, b)?;
    Ok(b.free())
}

fn check(i: &Interpretation, b: &Formula) -> Result<()> {
    match b {
        Formula::Atom { pred, term } => {
            let p = i.predicate(pred)?;
            let vars = term_wf(i, term)?;
            let dims = i.dims_of(&vars)?;
            if dims != p.signature {
                return Err(Error::SignatureMismatch {
                    symbol: pred.clone(),
                    expected: p.signature.clone(),
                    found: dims,
                });
            }
        }
        Formula::Meas {
            meas,
            outcome,
            vars,
        } => {
            let m = i.measurement(meas)?;
            if m.outcome(outcome).is_none() {
                return Err(Error::UnknownSymbol(format!("{meas}.{outcome}")));
            }
            i.positions(vars)?;
            let dims = i.dims_of(vars)?;
            if dims != m.signature {
                return Err(Error::SignatureMismatch {
                    symbol: meas.clone(),
                    expected: m.signature.clone(),
                    found: dims,
                });
            }
        }
        Formula::Not(a) => check(i, a)?,
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            check(i, a)?;
            check(i, b)?;
        }
        Formula::Adjoint(t, a) => {
            term_wf(i, t)?;
            check(i, a)?;
        }
        Formula::Forall(qs, a) | Formula::Exists(qs, a) => {
            if qs.is_empty() {
                return Err(Error::Other("quantifier binds no variables".into()));
            }
            i.positions(qs)?;
            check(i, a)?;
        }
        Formula::True | Formula::False => {}
    }
    Ok(())
}

/// Which transformer interprets term atoms, term adjoints and quantifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reading {
    /// Weakest liberal preconditions: the value agrees with satisfaction.
    #[default]
    Satisfaction,
    /// Heisenberg images of terms, as in the structural representation.
    /// Differs from [`Reading::Satisfaction`] only for non-unitary terms.
    HeisenbergImage,
}

/// `⟦β⟧`, the join of supports of all satisfying states.
pub fn eval_subspace(i: &Interpretation, b: &Formula) -> Result<Subspace> {
    eval_with(i, b, Reading::Satisfaction)
}

pub fn eval_with(i: &Interpretation, b: &Formula, reading: Reading) -> Result<Subspace> {
    check(i, b)?;
    eval_raw(i, b, reading)
}

fn transform(i: &Interpretation, t: &Term, x: &Subspace, reading: Reading) -> Result<Subspace> {
    match reading {
        Reading::Satisfaction => wlp_raw(i, t, x),
        Reading::HeisenbergImage => image_raw(i, t, x),
    }
}

fn eval_raw(i: &Interpretation, b: &Formula, reading: Reading) -> Result<Subspace> {
    let tol = i.tol();
    match b {
        Formula::Atom { pred, term } => {
            let p = i.predicate(pred)?;
            let lifted = i.lift(&p.subspace, &term.vars())?;
            transform(i, term, &lifted, reading)
        }
        Formula::Meas {
            meas,
            outcome,
            vars,
        } => {
            let m = i.measurement(meas)?;
            let proj = m.outcome(outcome).expect("checked");
            i.lift(&Subspace::span(proj, tol), vars)
        }
        Formula::Not(a) => Ok(eval_raw(i, a, reading)?.ortho(tol)),
        Formula::And(a, b) => eval_raw(i, a, reading)?.meet(&eval_raw(i, b, reading)?, tol),
        Formula::Or(a, b) => eval_raw(i, a, reading)?.join(&eval_raw(i, b, reading)?, tol),
        Formula::Implies(a, b) => {
            eval_raw(i, a, reading)?.sasaki_implies(&eval_raw(i, b, reading)?, tol)
        }
        Formula::Adjoint(t, a) => transform(i, t, &eval_raw(i, a, reading)?, reading),
        Formula::Forall(qs, a) => {
            Ok(closure(i, qs, eval_raw(i, a, reading)?, reading)?.result)
        }
        Formula::Exists(qs, a) => {
            let inner = eval_raw(i, a, reading)?.ortho(tol);
            Ok(closure(i, qs, inner, reading)?.result.ortho(tol))
        }
        Formula::True => Ok(Subspace::full(i.dim())),
        Formula::False => Ok(Subspace::zero(i.dim())),
    }
}

/// Fixpoint iteration record for a universal quantifier.
#[derive(Debug, Clone)]
pub struct ClosureTrace {
    pub result: Subspace,
    /// Rank after each iteration, starting with the rank of the input.
    pub ranks: Vec<usize>,
    pub generators: Vec<Term>,
}

impl ClosureTrace {
    /// Number of meet steps performed, including the confirming one.
    pub fn iterations(&self) -> usize {
        self.ranks.len() - 1
    }
}

/// Greatest `Y ⊆ x` with `Y ⊆ wlp_g(Y)` for every allowed generator `g` on
/// `qs`, which is the meet of `wlp_w(x)` over all generator words `w`.
pub fn forall_closure(i: &Interpretation, qs: &[String], x: &Subspace) -> Result<Subspace> {
    Ok(forall_closure_trace(i, qs, x, Reading::Satisfaction)?.result)
}

pub fn forall_closure_trace(
    i: &Interpretation,
    qs: &[String],
    x: &Subspace,
    reading: Reading,
) -> Result<ClosureTrace> {
    if x.dim() != i.dim() {
        return Err(Error::DimensionMismatch {
            expected: i.dim(),
            found: x.dim(),
        });
    }
    closure(i, qs, x.clone(), reading)
}

fn closure(i: &Interpretation, qs: &[String], x: Subspace, reading: Reading) -> Result<ClosureTrace> {
    let gens = generators(i, qs)?;
    let tol = i.tol();
    let mut y = x;
    let mut ranks = alloc::vec![y.rank()];
    loop {
        if y.is_zero() || y.is_full() {
            // Both extremes are fixed by every generator's transformer when
            // read through wlp; for images the full space may shrink.
            if y.is_zero() || reading == Reading::Satisfaction {
                ranks.push(y.rank());
                break;
            }
        }
        let mut parts = alloc::vec![y.clone()];
        for g in &gens {
            parts.push(transform(i, g, &y, reading)?);
        }
        let next = crate::linalg::lattice_meet(y.dim(), &parts, tol)?;
        ranks.push(next.rank());
        let stable = next.rank() == y.rank();
        y = next;
        if stable {
            break;
        }
    }
    Ok(ClosureTrace {
        result: y,
        ranks,
        generators: gens,
    })
}

/// `(∃q̄)` on a subspace: `(∀q̄ x⊥)⊥`.
pub fn exists_closure(i: &Interpretation, qs: &[String], x: &Subspace) -> Result<Subspace> {
    Ok(forall_closure(i, qs, &x.ortho(i.tol()))?.ortho(i.tol()))
}

/// `(𝕀, ρ) ⊨ β`.
pub fn satisfies(i: &Interpretation, rho: &StateDensity, b: &Formula) -> Result<bool> {
    if rho.dim() != i.dim() {
        return Err(Error::DimensionMismatch {
            expected: i.dim(),
            found: rho.dim(),
        });
    }
    if rho.trace() <= i.tol().num {
        return Err(Error::ZeroState);
    }
    eval_subspace(i, b)?.includes(&support(rho, i.tol()), i.tol())
}

/// Born probability `tr(P_⟦β⟧ ρ)` for a normalised state.
pub fn sat_probability(i: &Interpretation, rho: &StateDensity, b: &Formula) -> Result<f64> {
    if rho.dim() != i.dim() {
        return Err(Error::DimensionMismatch {
            expected: i.dim(),
            found: rho.dim(),
        });
    }
    if (rho.trace() - 1.0).abs() > i.tol().num {
        return Err(Error::Subnormalized(rho.trace()));
    }
    let x = eval_subspace(i, b)?;
    Ok(trace_product_re(&x.projector(), rho.matrix()).clamp(0.0, 1.0))
}

/// `⟦β⟧ ⊆ ⟦γ⟧` in this interpretation.
pub fn entails(i: &Interpretation, b: &Formula, c: &Formula) -> Result<bool> {
    eval_subspace(i, c)?.includes(&eval_subspace(i, b)?, i.tol())
}

/// α-renames the bound variable `from` to `to` throughout `b`.
pub fn rename_bound(i: &Interpretation, b: &Formula, from: &str, to: &str) -> Result<Formula> {
    if b.free().iter().any(|v| v == from) {
        return Err(Error::Rename(format!("`{from}` occurs free")));
    }
    if b.all_vars().iter().any(|v| v == to) {
        return Err(Error::Rename(format!("`{to}` already occurs")));
    }
    if i.var_dim(from)? != i.var_dim(to)? {
        return Err(Error::Rename(format!("`{from}` and `{to}` differ in dimension")));
    }
    Ok(rename_binders(b, from, to))
}

fn rename_binders(b: &Formula, from: &str, to: &str) -> Formula {
    let swap = |v: &str| if v == from { to.to_owned() } else { v.to_owned() };
    match b {
        Formula::Forall(qs, a) | Formula::Exists(qs, a) => {
            let body = if qs.iter().any(|q| q == from) {
                rename_binders(&a.rename_free(&swap), from, to)
            } else {
                rename_binders(a, from, to)
            };
            let qs: Vec<String> = qs.iter().map(|q| swap(q)).collect();
            if matches!(b, Formula::Forall(..)) {
                Formula::Forall(qs, Box::new(body))
            } else {
                Formula::Exists(qs, Box::new(body))
            }
        }
        Formula::Not(a) => Formula::not(rename_binders(a, from, to)),
        Formula::And(a, c) => Formula::and(rename_binders(a, from, to), rename_binders(c, from, to)),
        Formula::Or(a, c) => Formula::or(rename_binders(a, from, to), rename_binders(c, from, to)),
        Formula::Implies(a, c) => {
            Formula::implies(rename_binders(a, from, to), rename_binders(c, from, to))
        }
        Formula::Adjoint(t, a) => Formula::adjoint(t.clone(), rename_binders(a, from, to)),
        _ => b.clone(),
    }
}

/// Declaration of `[ψ₁,…,ψₙ]`: a predicate bound to the span of the vectors.
pub fn span_predicate(name: &str, signature: &[usize], vectors: Vec<Vec<C64>>) -> Declaration {
    Declaration::Predicate {
        name: name.to_owned(),
        signature: signature.to_vec(),
        def: PredicateDef::Span(vectors),
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Level {
    Quant,
    Imp,
    Or,
    And,
    Unary,
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, Level::Quant)
    }
}

fn write_formula(f: &mut fmt::Formatter<'_>, b: &Formula, ctx: Level) -> fmt::Result {
    let own = match b {
        Formula::Forall(..) | Formula::Exists(..) => Level::Quant,
        Formula::Implies(..) => Level::Imp,
        Formula::Or(..) => Level::Or,
        Formula::And(..) => Level::And,
        _ => Level::Unary,
    };
    let wrap = own < ctx;
    if wrap {
        write!(f, "(")?;
    }
    match b {
        Formula::Atom { pred, term } => match term {
            Term::Basic {
                op: crate::terms::Op::Identity,
                vars,
            } => write!(f, "{pred}({})", vars.join(","))?,
            _ => write!(f, "{pred}({term})")?,
        },
        Formula::Meas {
            meas,
            outcome,
            vars,
        } => write!(f, "meas {meas}.{outcome}({})", vars.join(","))?,
        Formula::Not(a) => {
            write!(f, "~")?;
            write_formula(f, a, Level::Unary)?;
        }
        Formula::And(a, c) => {
            write_formula(f, a, Level::And)?;
            write!(f, " /\\ ")?;
            write_formula(f, c, Level::Unary)?;
        }
        Formula::Or(a, c) => {
            write_formula(f, a, Level::Or)?;
            write!(f, " \\/ ")?;
            write_formula(f, c, Level::And)?;
        }
        Formula::Implies(a, c) => {
            write_formula(f, a, Level::Or)?;
            write!(f, " -> ")?;
            write_formula(f, c, Level::Imp)?;
        }
        Formula::Adjoint(t, a) => {
            write!(f, "adj<{t}>(")?;
            write_formula(f, a, Level::Quant)?;
            write!(f, ")")?;
        }
        Formula::Forall(qs, a) | Formula::Exists(qs, a) => {
            let universal = matches!(b, Formula::Forall(..));
            write!(f, "{}", if universal { "forall" } else { "exists" })?;
            if qs.len() == 1 {
                // Nested single binders of one kind print as `forall q1 q2 .`.
                write!(f, " {}", qs[0])?;
                let mut body = &**a;
                loop {
                    match (universal, body) {
                        (true, Formula::Forall(inner, rest)) | (false, Formula::Exists(inner, rest))
                            if inner.len() == 1 =>
                        {
                            write!(f, " {}", inner[0])?;
                            body = rest;
                        }
                        _ => break,
                    }
                }
                write!(f, " . ")?;
                write_formula(f, body, Level::Quant)?;
            } else {
                write!(f, " ({}) . ", qs.join(", "))?;
                write_formula(f, a, Level::Quant)?;
            }
        }
        Formula::True => write!(f, "true")?,
        Formula::False => write!(f, "false")?,
    }
    if wrap {
        write!(f, ")")?;
    }
    Ok(())
}

//! The rule registry and single-step rule application.

use super::{names, sequent_valid, HoareTriple, Judgment};
use crate::formulas::{eval_subspace, formula_wf, Formula};
use crate::interp::Interpretation;
use crate::programs::{prog_wf, representable_probe, terminates_probe, Program, Representability, Termination};
use crate::terms::{is_unitary_term, term_equiv, term_invert, term_wf, Op, Term};
use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// Propositional quantum logic, `QL1`..`QL11`.
    Ql(u8),
    /// Quantum logic with quantum variables, `QLV1`..`QLV15`.
    Qlv(u8),
    Refl,
    Sym,
    Trans,
    /// Term equations, `QT1`..`QT6`.
    Qt(u8),
    /// Semantic truth in the active interpretation.
    Th,
    AxSk,
    AxIn,
    AxUt,
    RSc,
    RIf,
    RLp,
    RCon,
    Invariance,
    Substitution,
    Conjunction,
    Disjunction,
    ExistsIntro,
    Adaptation,
}

impl Rule {
    pub fn all() -> Vec<Rule> {
        let mut out: Vec<Rule> = (1..=11).map(Rule::Ql).collect();
        out.extend((1..=15).map(Rule::Qlv));
        out.extend([Rule::Refl, Rule::Sym, Rule::Trans]);
        out.extend((1..=6).map(Rule::Qt));
        out.extend([
            Rule::Th,
            Rule::AxSk,
            Rule::AxIn,
            Rule::AxUt,
            Rule::RSc,
            Rule::RIf,
            Rule::RLp,
            Rule::RCon,
            Rule::Invariance,
            Rule::Substitution,
            Rule::Conjunction,
            Rule::Disjunction,
            Rule::ExistsIntro,
            Rule::Adaptation,
        ]);
        out
    }

    pub fn parse(name: &str) -> Option<Rule> {
        Rule::all().into_iter().find(|r| r.to_string() == name)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Ql(n) => return write!(f, "QL{n}"),
            Rule::Qlv(n) => return write!(f, "QLV{n}"),
            Rule::Qt(n) => return write!(f, "QT{n}"),
            Rule::Refl => "Refl",
            Rule::Sym => "Sym",
            Rule::Trans => "Trans",
            Rule::Th => "Th",
            Rule::AxSk => "Ax.Sk",
            Rule::AxIn => "Ax.In",
            Rule::AxUt => "Ax.UT",
            Rule::RSc => "R.SC",
            Rule::RIf => "R.IF",
            Rule::RLp => "R.LP",
            Rule::RCon => "R.Con",
            Rule::Invariance => "Invariance",
            Rule::Substitution => "Substitution",
            Rule::Conjunction => "Conjunction",
            Rule::Disjunction => "Disjunction",
            Rule::ExistsIntro => "Exists-Intro",
            Rule::Adaptation => "Adaptation",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Confidence {
    Proved,
    /// Rests on a randomized probe.
    Sampled,
}

#[derive(Debug, Clone)]
pub struct Derived {
    pub judgment: Judgment,
    pub confidence: Confidence,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleErrorKind {
    /// Wrong number or kind of premises.
    Arity,
    /// A premise or the stated judgment does not have the rule's form.
    Shape,
    /// A variable condition of the rule fails.
    SideCondition,
    /// A semantic entailment or equation is false in the interpretation.
    Entailment,
    /// A termination or representability probe did not succeed.
    Probe,
    IllFormed,
    MissingParam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleError {
    pub rule: Rule,
    pub kind: RuleErrorKind,
    pub message: String,
}

impl fmt::Display for RuleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.message)
    }
}

/// Rule-specific side data. Anything absent is read off the stated judgment
/// where the rule allows it.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// The invariant `δ` of Invariance.
    pub delta: Option<Formula>,
    /// The substituted term, or the Adaptation witness.
    pub term: Option<Term>,
    /// `q̄` of Exists-Intro, `p̄` of Adaptation.
    pub vars: Option<Vec<String>>,
    pub trials: usize,
    pub seed: u64,
    pub max_steps: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            delta: None,
            term: None,
            vars: None,
            trials: 32,
            seed: 0,
            max_steps: 10_000,
        }
    }
}

type R<T> = core::result::Result<T, RuleError>;

/// Applies `rule` to `premises`, checking every side condition, and returns
/// the conclusion. `stated` is the judgment the proof claims; rules that are
/// axiom schemes or need data the premises do not carry read it from there.
pub fn apply_rule(
    i: &Interpretation,
    rule: Rule,
    premises: &[Judgment],
    params: &Params,
    stated: Option<&Judgment>,
) -> R<Derived> {
    let cx = Cx {
        i,
        rule,
        premises,
        params,
        stated,
        notes: Vec::new(),
        confidence: Confidence::Proved,
    };
    cx.run()
}

struct Cx<'a> {
    i: &'a Interpretation,
    rule: Rule,
    premises: &'a [Judgment],
    params: &'a Params,
    stated: Option<&'a Judgment>,
    notes: Vec<String>,
    confidence: Confidence,
}

fn contains(set: &[Formula], f: &Formula) -> bool {
    set.iter().any(|g| g == f)
}

fn set_eq(a: &[Formula], b: &[Formula]) -> bool {
    a.iter().all(|f| contains(b, f)) && b.iter().all(|f| contains(a, f))
}

fn union(a: &[Formula], b: &[Formula]) -> Vec<Formula> {
    let mut out = a.to_vec();
    for f in b {
        if !contains(&out, f) {
            out.push(f.clone());
        }
    }
    out
}

fn overlap(a: &[String], b: &[String]) -> Vec<String> {
    a.iter().filter(|v| b.contains(v)).cloned().collect()
}

fn subset(a: &[String], b: &[String]) -> bool {
    a.iter().all(|v| b.contains(v))
}

fn seq(a: &Term, b: &Term) -> Term {
    Term::seq(a.clone(), b.clone())
}

fn adj(t: &Term, b: &Formula) -> Formula {
    Formula::adjoint(t.clone(), b.clone())
}

fn sequent(hyps: Vec<Formula>, concl: Formula) -> Judgment {
    Judgment::Sequent { hyps, concl }
}

fn triple(pre: Formula, prog: Program, post: Formula) -> Judgment {
    Judgment::Triple(HoareTriple::new(pre, prog, post))
}

impl<'a> Cx<'a> {
    fn err(&self, kind: RuleErrorKind, message: impl Into<String>) -> RuleError {
        RuleError {
            rule: self.rule,
            kind,
            message: message.into(),
        }
    }

    fn shape(&self, message: impl Into<String>) -> RuleError {
        self.err(RuleErrorKind::Shape, message)
    }

    fn side(&self, message: impl Into<String>) -> RuleError {
        self.err(RuleErrorKind::SideCondition, message)
    }

    fn core<T>(&self, r: crate::Result<T>) -> R<T> {
        r.map_err(|e| self.err(RuleErrorKind::IllFormed, e.to_string()))
    }

    fn done(self, judgment: Judgment) -> R<Derived> {
        Ok(Derived {
            judgment,
            confidence: self.confidence,
            notes: self.notes,
        })
    }

    fn arity(&self, n: usize) -> R<()> {
        if self.premises.len() != n {
            return Err(self.err(
                RuleErrorKind::Arity,
                format!("expects {n} premise(s), got {}", self.premises.len()),
            ));
        }
        Ok(())
    }

    fn prem_triple(&self, k: usize) -> R<&'a HoareTriple> {
        match &self.premises[k] {
            Judgment::Triple(t) => Ok(t),
            j => Err(self.err(RuleErrorKind::Arity, format!("premise {} is not a triple: {j}", k + 1))),
        }
    }

    fn prem_sequent(&self, k: usize) -> R<(&'a [Formula], &'a Formula)> {
        match &self.premises[k] {
            Judgment::Sequent { hyps, concl } => Ok((hyps, concl)),
            j => Err(self.err(RuleErrorKind::Arity, format!("premise {} is not a sequent: {j}", k + 1))),
        }
    }

    fn prem_equation(&self, k: usize) -> R<(&'a Term, &'a Term)> {
        match &self.premises[k] {
            Judgment::Equation(a, b) => Ok((a, b)),
            j => Err(self.err(RuleErrorKind::Arity, format!("premise {} is not an equation: {j}", k + 1))),
        }
    }

    fn stated(&self) -> R<&'a Judgment> {
        self.stated
            .ok_or_else(|| self.err(RuleErrorKind::MissingParam, "needs the stated judgment"))
    }

    fn stated_triple(&self) -> R<&'a HoareTriple> {
        match self.stated()? {
            Judgment::Triple(t) => Ok(t),
            j => Err(self.shape(format!("concludes a triple, not {j}"))),
        }
    }

    fn stated_sequent(&self) -> R<(&'a [Formula], &'a Formula)> {
        match self.stated()? {
            Judgment::Sequent { hyps, concl } => Ok((hyps, concl)),
            j => Err(self.shape(format!("concludes a sequent, not {j}"))),
        }
    }

    fn stated_equation(&self) -> R<(&'a Term, &'a Term)> {
        match self.stated()? {
            Judgment::Equation(a, b) => Ok((a, b)),
            j => Err(self.shape(format!("concludes an equation, not {j}"))),
        }
    }

    /// The single hypothesis and conclusion of an `a ⊢ b` statement.
    fn stated_pair(&self) -> R<(&'a Formula, &'a Formula)> {
        match self.stated_sequent()? {
            ([h], c) => Ok((h, c)),
            (hs, _) => Err(self.shape(format!("expects exactly one hypothesis, got {}", hs.len()))),
        }
    }

    /// Syntactic equality, falling back to equality of denotations.
    fn same(&mut self, a: &Formula, b: &Formula) -> R<bool> {
        if a == b {
            return Ok(true);
        }
        let x = self.core(eval_subspace(self.i, a))?;
        let y = self.core(eval_subspace(self.i, b))?;
        let eq = self.core(x.equals(&y, self.i.tol()))?;
        if eq {
            self.notes.push(format!("`{a}` and `{b}` matched modulo Th"));
        }
        Ok(eq)
    }

    /// `⟦b⟧` depends only on `vars`: syntactic for quantifier-free formulas,
    /// otherwise checked on the denotation.
    fn depends_only(&self, b: &Formula, vars: &[String]) -> R<bool> {
        if !subset(&b.free(), vars) {
            return Ok(false);
        }
        if !b.has_quantifier() {
            return Ok(true);
        }
        let x = self.core(eval_subspace(self.i, b))?;
        self.core(self.i.is_cylinder(&x, vars))
    }

    fn layout_order(&self, vs: &[String]) -> Vec<String> {
        self.i
            .global_space()
            .names
            .iter()
            .filter(|n| vs.contains(n))
            .cloned()
            .collect()
    }

    fn unitary(&self, t: &Term) -> R<()> {
        if !self.core(is_unitary_term(self.i, t))? {
            return Err(self.side(format!("`{t}` is not a unitary term")));
        }
        Ok(())
    }

    /// Every basic of `t` is an allowed generator placed inside `qs`.
    fn built_from_generators(&self, t: &Term, qs: &[String]) -> R<()> {
        self.core(term_wf(self.i, t))?;
        for (op, vars) in t.basics() {
            if !subset(vars, qs) {
                return Err(self.side(format!("`{t}` acts outside {}", names(qs))));
            }
            if matches!(op, Op::Identity) {
                continue;
            }
            let dims = self.core(self.i.dims_of(vars))?;
            let ok = self.i.allowed().get(&dims).is_some_and(|ops| ops.contains(op));
            if !ok {
                return Err(self.side(format!("`{op}` on {dims:?} is not an allowed operation")));
            }
        }
        Ok(())
    }

    fn run(mut self) -> R<Derived> {
        match self.rule {
            Rule::Ql(n) => self.ql(n),
            Rule::Qlv(n) => self.qlv(n),
            Rule::Refl | Rule::Sym | Rule::Trans | Rule::Qt(_) => self.qt(),
            Rule::Th => {
                self.arity(0)?;
                let j = self.stated()?;
                let ok = match j {
                    Judgment::Sequent { hyps, concl } => self.core(sequent_valid(self.i, hyps, concl))?,
                    Judgment::Equation(a, b) => self.core(term_equiv(self.i, a, b))?,
                    Judgment::Triple(_) => return Err(self.shape("applies to sequents and equations only")),
                };
                if !ok {
                    return Err(self.err(RuleErrorKind::Entailment, format!("`{j}` is false in the interpretation")));
                }
                self.notes.push("discharged semantically".into());
                self.done(j.clone())
            }
            _ => self.hoare(),
        }
    }

    fn accept(self, ok: bool, what: &str) -> R<Derived> {
        if ok {
            let j = self.stated()?.clone();
            self.done(j)
        } else {
            Err(self.shape(format!("no hypothesis of the form {what}")))
        }
    }

    fn ql(self, n: u8) -> R<Derived> {
        match n {
            1 => {
                self.arity(0)?;
                let (hyps, c) = self.stated_sequent()?;
                self.accept(contains(hyps, c), "β with conclusion β")
            }
            2 => {
                self.arity(2)?;
                let (s1, b) = self.prem_sequent(0)?;
                let (s2, g) = self.prem_sequent(1)?;
                if !contains(s2, b) {
                    return Err(self.shape(format!("second premise lacks hypothesis `{b}`")));
                }
                let rest: Vec<Formula> = s2.iter().filter(|f| *f != b).cloned().collect();
                let j = sequent(union(s1, &rest), g.clone());
                self.done(j)
            }
            3 => {
                self.arity(0)?;
                let (hyps, c) = self.stated_sequent()?;
                let ok = hyps
                    .iter()
                    .any(|h| matches!(h, Formula::And(a, b) if **a == *c || **b == *c));
                self.accept(ok, "β∧γ with conclusion β or γ")
            }
            4 => {
                self.arity(2)?;
                let (s1, b) = self.prem_sequent(0)?;
                let (s2, g) = self.prem_sequent(1)?;
                if !set_eq(s1, s2) {
                    return Err(self.shape("premises have different hypotheses"));
                }
                let j = sequent(s1.to_vec(), Formula::and(b.clone(), g.clone()));
                self.done(j)
            }
            5 => {
                self.arity(1)?;
                let (s0, d) = self.prem_sequent(0)?;
                let (hyps, c) = self.stated_sequent()?;
                let fits = c == d
                    && hyps.iter().any(|h| match h {
                        Formula::And(a, b) => {
                            contains(s0, a)
                                && contains(s0, b)
                                && set_eq(&union(hyps, &[(**a).clone(), (**b).clone()]), &union(s0, core::slice::from_ref(h)))
                        }
                        _ => false,
                    });
                self.accept(fits, "β∧γ merging two premise hypotheses")
            }
            6 => {
                self.arity(2)?;
                let (s1, g) = self.prem_sequent(0)?;
                let (s2, ng) = self.prem_sequent(1)?;
                let b = match (s1, s2) {
                    ([b1], [b2]) if b1 == b2 => b1,
                    _ => return Err(self.shape("premises must share a single hypothesis")),
                };
                if *ng != Formula::not(g.clone()) {
                    return Err(self.shape(format!("second premise must conclude ~({g})")));
                }
                let j = sequent(Vec::new(), Formula::not(b.clone()));
                self.done(j)
            }
            7 => {
                self.arity(0)?;
                let (hyps, c) = self.stated_sequent()?;
                let ok = matches!(c, Formula::Not(x) if matches!(&**x, Formula::Not(y) if contains(hyps, y)));
                self.accept(ok, "β with conclusion ~~β")
            }
            8 => {
                self.arity(0)?;
                let (hyps, c) = self.stated_sequent()?;
                self.accept(contains(hyps, &Formula::not(Formula::not(c.clone()))), "~~β")
            }
            9 => {
                self.arity(0)?;
                let (hyps, _) = self.stated_sequent()?;
                let ok = hyps
                    .iter()
                    .any(|h| matches!(h, Formula::And(a, b) if **b == Formula::not((**a).clone())));
                self.accept(ok, "β∧~β")
            }
            10 => {
                self.arity(1)?;
                let (s, g) = self.prem_sequent(0)?;
                let [b] = s else {
                    return Err(self.shape("premise must have a single hypothesis"));
                };
                let j = sequent(vec![Formula::not(g.clone())], Formula::not(b.clone()));
                self.done(j)
            }
            11 => {
                self.arity(0)?;
                let (hyps, c) = self.stated_sequent()?;
                let ok = hyps.iter().any(|h| match h {
                    Formula::And(b, rest) => {
                        let b = (**b).clone();
                        let inner = Formula::and(b.clone(), Formula::not(Formula::and(b.clone(), c.clone())));
                        **rest == Formula::not(inner)
                    }
                    _ => false,
                });
                self.accept(ok, "β∧~(β∧~(β∧γ))")
            }
            _ => Err(self.shape("unknown propositional rule")),
        }
    }

    /// An equivalence scheme `lhs ≡ rhs`, used in either direction.
    fn equivalence(self, fwd: impl Fn(&Self, &Formula) -> Option<R<Formula>>) -> R<Derived> {
        self.arity(0)?;
        let (a, b) = self.stated_pair()?;
        if let Some(r) = fwd(&self, a) {
            let r = r?;
            return self.done(sequent(vec![a.clone()], r));
        }
        if let Some(l) = fwd(&self, b) {
            let l = l?;
            return self.done(sequent(vec![l], b.clone()));
        }
        Err(self.shape("neither side has the rule's form"))
    }

    /// `τ1 = τ2` from an equation premise or, with no premise, semantically.
    fn terms_equal(&mut self, t1: &Term, t2: &Term) -> R<()> {
        match self.premises {
            [] => {
                if !self.core(term_equiv(self.i, t1, t2))? {
                    return Err(self.err(RuleErrorKind::Entailment, format!("`{t1}` and `{t2}` differ")));
                }
                self.notes.push(format!("`{t1} = {t2}` discharged semantically"));
                Ok(())
            }
            [_] => {
                let (a, b) = self.prem_equation(0)?;
                if (a, b) == (t1, t2) || (a, b) == (t2, t1) {
                    Ok(())
                } else {
                    Err(self.shape(format!("premise proves `{a} = {b}`, not `{t1} = {t2}`")))
                }
            }
            _ => Err(self.err(RuleErrorKind::Arity, "expects at most one equation premise")),
        }
    }

    fn qlv(mut self, n: u8) -> R<Derived> {
        match n {
            1 => {
                self.arity(1)?;
                self.prem_sequent(0)?;
                let j = self.premises[0].clone();
                self.done(j)
            }
            2 => {
                let (h, c) = self.stated_pair()?;
                let (Formula::Atom { pred: p1, term: t1 }, Formula::Atom { pred: p2, term: t2 }) = (h, c) else {
                    return Err(self.shape("expects P(τ1) |- P(τ2)"));
                };
                if p1 != p2 {
                    return Err(self.shape(format!("predicates `{p1}` and `{p2}` differ")));
                }
                if t1.vars() != t2.vars() {
                    return Err(self.side("τ1 and τ2 must have the same ordered variable list"));
                }
                self.terms_equal(t1, t2)?;
                let j = self.stated()?.clone();
                self.done(j)
            }
            3 => {
                let (h, c) = self.stated_pair()?;
                let (Formula::Adjoint(t1, b1), Formula::Adjoint(t2, b2)) = (h, c) else {
                    return Err(self.shape("expects adj<τ1>(β) |- adj<τ2>(β)"));
                };
                if b1 != b2 {
                    return Err(self.shape("the two sides adjoin different formulas"));
                }
                self.terms_equal(t1, t2)?;
                let j = self.stated()?.clone();
                self.done(j)
            }
            4 => {
                if self.premises.is_empty() {
                    return Err(self.err(RuleErrorKind::Arity, "expects one premise per summand"));
                }
                let (hyps, c) = self.stated_sequent()?;
                let Formula::Atom { pred, term: Term::ProbSum(parts) } = c else {
                    return Err(self.shape("expects a conclusion P(sum{...})"));
                };
                if parts.len() != self.premises.len() {
                    return Err(self.err(RuleErrorKind::Arity, format!("{} summands but {} premises", parts.len(), self.premises.len())));
                }
                let vars = parts[0].1.vars();
                for (k, (_, t)) in parts.iter().enumerate() {
                    let (s, f) = self.prem_sequent(k)?;
                    if !set_eq(s, hyps) {
                        return Err(self.shape(format!("premise {} has different hypotheses", k + 1)));
                    }
                    if *f != Formula::atom(pred, t.clone()) {
                        return Err(self.shape(format!("premise {} must conclude {pred}({t})", k + 1)));
                    }
                    if t.vars() != vars {
                        return Err(self.side("summands must have the same ordered variable list"));
                    }
                }
                let j = self.stated()?.clone();
                self.done(j)
            }
            5 => self.equivalence(|_, f| match f {
                Formula::Adjoint(t1, inner) => match &**inner {
                    Formula::Adjoint(t2, b) => Some(Ok(adj(&seq(t1, t2), b))),
                    _ => None,
                },
                _ => None,
            }),
            6 => {
                self.arity(1)?;
                let (s, b2) = self.prem_sequent(0)?;
                let [b1] = s else {
                    return Err(self.shape("premise must have a single hypothesis"));
                };
                let t = match self.stated {
                    Some(Judgment::Sequent { concl: Formula::Adjoint(t, _), .. }) => t.clone(),
                    _ => self
                        .params
                        .term
                        .clone()
                        .ok_or_else(|| self.err(RuleErrorKind::MissingParam, "needs the term τ"))?,
                };
                let j = sequent(vec![adj(&t, b1)], adj(&t, b2));
                self.done(j)
            }
            7 => self.equivalence(|cx, f| match f {
                Formula::Adjoint(t1, inner) => match &**inner {
                    Formula::Atom { pred, term: t2 } => {
                        let t = seq(t1, t2);
                        if t.vars() != t2.vars() {
                            return Some(Err(cx.side(format!(
                                "{pred}({t}) would place `{pred}` on {} rather than {}",
                                names(&t.vars()),
                                names(&t2.vars())
                            ))));
                        }
                        Some(Ok(Formula::atom(pred, t)))
                    }
                    _ => None,
                },
                _ => None,
            }),
            8 => self.equivalence(|cx, f| match f {
                Formula::Adjoint(t, inner) => match &**inner {
                    Formula::Not(b) => Some(cx.unitary(t).map(|_| Formula::not(adj(t, b)))),
                    _ => None,
                },
                _ => None,
            }),
            9 => self.equivalence(|_, f| match f {
                Formula::Adjoint(t, inner) => match &**inner {
                    Formula::And(a, b) => Some(Ok(Formula::and(adj(t, a), adj(t, b)))),
                    _ => None,
                },
                _ => None,
            }),
            10 => self.equivalence(|cx, f| match f {
                Formula::Adjoint(Term::Tensor(t1, t2), inner) => match &**inner {
                    Formula::And(b1, b2) => Some(cx.tensor_split(t1, t2, b1, b2)),
                    _ => None,
                },
                _ => None,
            }),
            11 => {
                self.arity(1)?;
                let (s, g) = self.prem_sequent(0)?;
                let [Formula::Adjoint(t, b)] = s else {
                    return Err(self.shape("premise must be adj<τ>(β) |- γ"));
                };
                self.unitary(t)?;
                let inv = self.core(term_invert(t))?;
                let j = sequent(vec![(**b).clone()], adj(&inv, g));
                self.done(j)
            }
            12 => {
                self.arity(1)?;
                let (s, c) = self.prem_sequent(0)?;
                let ([b], Formula::Adjoint(t, g)) = (s, c) else {
                    return Err(self.shape("premise must be β |- adj<τ>(γ)"));
                };
                self.unitary(t)?;
                let inv = self.core(term_invert(t))?;
                let j = sequent(vec![adj(&inv, b)], (**g).clone());
                self.done(j)
            }
            13 => self.equivalence(|cx, f| match f {
                Formula::Adjoint(t, inner) => match &**inner {
                    Formula::Forall(qs, b) => Some(cx.commute_forall(t, qs, b)),
                    _ => None,
                },
                _ => None,
            }),
            14 => {
                self.arity(0)?;
                let (hyps, c) = self.stated_sequent()?;
                let Formula::Adjoint(t, b) = c else {
                    return Err(self.shape("expects a conclusion adj<τ>(β)"));
                };
                let qs = hyps.iter().find_map(|h| match h {
                    Formula::Forall(qs, inner) if **inner == **b => Some(qs),
                    _ => None,
                });
                let Some(qs) = qs else {
                    return Err(self.shape(format!("no hypothesis forall q . {b}")));
                };
                self.built_from_generators(t, qs)?;
                let j = self.stated()?.clone();
                self.done(j)
            }
            15 => {
                self.arity(1)?;
                let (s, b) = self.prem_sequent(0)?;
                let (hyps, c) = self.stated_sequent()?;
                let Formula::Forall(qs, inner) = c else {
                    return Err(self.shape("expects a conclusion forall q . β"));
                };
                if **inner != *b || !set_eq(s, hyps) {
                    return Err(self.shape("conclusion must quantify the premise"));
                }
                let rest = self.i.complement(qs);
                let free_b = b.free();
                let first = overlap(qs, &free_b).is_empty() && self.depends_only(b, &rest)?;
                let second = {
                    let sigma = Formula::and_all(s.to_vec());
                    let allowed: Vec<String> = free_b.iter().filter(|v| !qs.contains(v)).cloned().collect();
                    subset(&sigma.free(), &allowed) && self.depends_only(&sigma, &rest)?
                };
                if !first && !second {
                    return Err(self.side(format!(
                        "{} occurs in `{b}` and the hypotheses are not independent of it",
                        names(qs)
                    )));
                }
                let j = sequent(s.to_vec(), c.clone());
                self.done(j)
            }
            _ => Err(self.shape("unknown rule number")),
        }
    }

    fn tensor_split(&self, t1: &Term, t2: &Term, b1: &Formula, b2: &Formula) -> R<Formula> {
        let (v1, v2) = (t1.vars(), t2.vars());
        let common = overlap(&v1, &v2);
        if !common.is_empty() {
            return Err(self.side(format!("tensor factors share {}", names(&common))));
        }
        if !self.depends_only(b1, &v1)? || !self.depends_only(b2, &v2)? {
            return Err(self.side("each conjunct must depend only on the variables of its factor"));
        }
        Ok(Formula::and(adj(t1, b1), adj(t2, b2)))
    }

    fn commute_forall(&self, t: &Term, qs: &[String], b: &Formula) -> R<Formula> {
        self.unitary(t)?;
        let allowed: Vec<String> = b.free().into_iter().filter(|v| !qs.contains(v)).collect();
        if !subset(&t.vars(), &allowed) {
            return Err(self.side(format!(
                "var({t}) must lie in free(β) minus {}",
                names(qs)
            )));
        }
        Ok(Formula::Forall(qs.to_vec(), Box::new(adj(t, b))))
    }

    fn qt(self) -> R<Derived> {
        let r = self.rule;
        match r {
            Rule::Refl => {
                self.arity(0)?;
                let (a, b) = self.stated_equation()?;
                if a != b {
                    return Err(self.shape("sides differ"));
                }
            }
            Rule::Sym => {
                self.arity(1)?;
                let (a, b) = self.prem_equation(0)?;
                return self.done(Judgment::Equation(b.clone(), a.clone()));
            }
            Rule::Trans => {
                self.arity(2)?;
                let (a, b) = self.prem_equation(0)?;
                let (b2, c) = self.prem_equation(1)?;
                if b != b2 {
                    return Err(self.shape(format!("middle terms `{b}` and `{b2}` differ")));
                }
                return self.done(Judgment::Equation(a.clone(), c.clone()));
            }
            Rule::Qt(1) => {
                self.arity(1)?;
                let (a, b) = self.prem_equation(0)?;
                let (x, y) = self.stated_equation()?;
                let ok = match (x, y) {
                    (Term::Seq(p, q), Term::Seq(p2, q2)) => {
                        (p == p2 && **q == *a && **q2 == *b) || (q == q2 && **p == *a && **p2 == *b)
                    }
                    _ => false,
                };
                if !ok {
                    return Err(self.shape(format!("expects τ({a}) = τ({b}) or ({a})τ = ({b})τ")));
                }
            }
            Rule::Qt(2) => {
                let (x, y) = self.stated_equation()?;
                let (Term::ProbSum(l), Term::ProbSum(rr)) = (x, y) else {
                    return Err(self.shape("expects sum{...} = sum{...}"));
                };
                if l.len() != rr.len() || l.len() != self.premises.len() {
                    return Err(self.err(RuleErrorKind::Arity, "one premise per summand"));
                }
                for (k, ((p, a), (q, b))) in l.iter().zip(rr).enumerate() {
                    let (pa, pb) = self.prem_equation(k)?;
                    if p != q || pa != a || pb != b {
                        return Err(self.shape(format!("summand {} does not match premise {}", k + 1, k + 1)));
                    }
                }
            }
            Rule::Qt(3) => {
                self.arity(0)?;
                let (x, y) = self.stated_equation()?;
                let (a, b) = match x {
                    Term::Tensor(a, b) | Term::Seq(a, b) => (a, b),
                    _ => return Err(self.shape("left side must be τ1 * τ2 or τ1 τ2")),
                };
                let forms = [
                    Term::Tensor(a.clone(), b.clone()),
                    Term::Tensor(b.clone(), a.clone()),
                    Term::Seq(a.clone(), b.clone()),
                    Term::Seq(b.clone(), a.clone()),
                ];
                if !forms.contains(y) {
                    return Err(self.shape("right side must rearrange the same two terms"));
                }
                let common = overlap(&a.vars(), &b.vars());
                if !common.is_empty() {
                    return Err(self.side(format!("terms share {}", names(&common))));
                }
            }
            Rule::Qt(4) => {
                self.arity(0)?;
                let (x, y) = self.stated_equation()?;
                let unit = |big: &Term, t: &Term| match big {
                    Term::Seq(p, q) => (p.is_identity() && **q == *t) || (q.is_identity() && **p == *t),
                    _ => false,
                };
                if !unit(x, y) && !unit(y, x) {
                    return Err(self.shape("expects I τ = τ or τ I = τ"));
                }
            }
            Rule::Qt(5) => {
                self.arity(0)?;
                let (x, y) = self.stated_equation()?;
                let assoc = |l: &Term, r: &Term| match (l, r) {
                    (Term::Seq(a, bc), Term::Seq(ab, c)) => match (&**bc, &**ab) {
                        (Term::Seq(b, c2), Term::Seq(a2, b2)) => a == a2 && b == b2 && c == c2,
                        _ => false,
                    },
                    _ => false,
                };
                if !assoc(x, y) && !assoc(y, x) {
                    return Err(self.shape("expects τ1(τ2τ3) = (τ1τ2)τ3"));
                }
            }
            Rule::Qt(6) => {
                self.arity(0)?;
                let (x, y) = self.stated_equation()?;
                let (pair, id) = if y.is_identity() { (x, y) } else { (y, x) };
                if !id.is_identity() {
                    return Err(self.shape("one side must be an identity"));
                }
                let Term::Seq(a, b) = pair else {
                    return Err(self.shape("expects τ τ^-1 = I"));
                };
                let inv_a = self.core(term_invert(a))?;
                let inv_b = self.core(term_invert(b))?;
                if **b != inv_a && **a != inv_b {
                    return Err(self.shape(format!("`{b}` is not the inverse of `{a}`")));
                }
                self.unitary(a)?;
            }
            _ => return Err(self.shape("unknown equation rule")),
        }
        let j = self.stated()?.clone();
        self.done(j)
    }

    fn hoare(mut self) -> R<Derived> {
        match self.rule {
            Rule::AxSk => {
                self.arity(0)?;
                let b = match (self.stated, &self.params.delta) {
                    (Some(Judgment::Triple(t)), _) => t.post.clone(),
                    (_, Some(b)) => b.clone(),
                    _ => return Err(self.err(RuleErrorKind::MissingParam, "needs β")),
                };
                self.core(formula_wf(self.i, &b))?;
                self.done(triple(b.clone(), Program::Skip, b))
            }
            Rule::AxIn => {
                self.arity(0)?;
                let t = self.stated_triple()?;
                let Program::Init(q) = &t.prog else {
                    return Err(self.shape("program must be q := |0>"));
                };
                self.core(prog_wf(self.i, &t.prog))?;
                let reset = Term::Basic {
                    op: Op::Reset,
                    vars: vec![q.clone()],
                };
                self.done(triple(adj(&reset, &t.post), t.prog.clone(), t.post.clone()))
            }
            Rule::AxUt => {
                self.arity(0)?;
                let t = self.stated_triple()?;
                let Program::Assign { term, .. } = &t.prog else {
                    return Err(self.shape("program must be q := τ"));
                };
                self.unitary(term)?;
                self.core(prog_wf(self.i, &t.prog))?;
                self.done(triple(adj(term, &t.post), t.prog.clone(), t.post.clone()))
            }
            Rule::RSc => {
                self.arity(2)?;
                let a = self.prem_triple(0)?;
                let b = self.prem_triple(1)?;
                if !self.same(&a.post, &b.pre)? {
                    return Err(self.shape(format!("middle assertions `{}` and `{}` differ", a.post, b.pre)));
                }
                self.done(triple(a.pre.clone(), Program::seq(a.prog.clone(), b.prog.clone()), b.post.clone()))
            }
            Rule::RIf => {
                let t = self.stated_triple()?;
                let Program::Case { meas, vars, branches } = &t.prog else {
                    return Err(self.shape("program must be a case statement"));
                };
                self.core(prog_wf(self.i, &t.prog))?;
                if branches.len() != self.premises.len() {
                    return Err(self.err(
                        RuleErrorKind::Arity,
                        format!("{} outcomes but {} premises", branches.len(), self.premises.len()),
                    ));
                }
                let post = &self.prem_triple(0)?.post;
                let mut parts = Vec::new();
                for (k, (label, p)) in branches.iter().enumerate() {
                    let pk = self.prem_triple(k)?;
                    if pk.prog != *p {
                        return Err(self.shape(format!("premise {} is not about branch `{label}`", k + 1)));
                    }
                    if !self.same(&pk.post, post)? {
                        return Err(self.shape(format!("premise {} has a different postcondition", k + 1)));
                    }
                    parts.push(Formula::and(Formula::meas(meas, label, vars), pk.pre.clone()));
                }
                self.done(triple(Formula::or_all(parts), t.prog.clone(), post.clone()))
            }
            Rule::RLp => {
                self.arity(1)?;
                let p = self.prem_triple(0)?;
                let shape = || self.shape("body postcondition must be (meas M.0(q) /\\ γ) \\/ (meas M.1(q) /\\ β)");
                let Formula::Or(l, r) = &p.post else { return Err(shape()) };
                let (Formula::And(m0, g), Formula::And(m1, b)) = (&**l, &**r) else {
                    return Err(shape());
                };
                let (
                    Formula::Meas { meas, outcome: o0, vars },
                    Formula::Meas { meas: meas1, outcome: o1, vars: vars1 },
                ) = (&**m0, &**m1)
                else {
                    return Err(shape());
                };
                if meas != meas1 || vars != vars1 || o0 != "0" || o1 != "1" {
                    return Err(shape());
                }
                if !self.same(b, &p.pre)? {
                    return Err(self.shape(format!("invariant `{b}` is not the body precondition `{}`", p.pre)));
                }
                let prog = Program::While {
                    meas: meas.clone(),
                    vars: vars.clone(),
                    body: Box::new(p.prog.clone()),
                };
                self.core(prog_wf(self.i, &prog))?;
                self.done(triple(p.post.clone(), prog, (**g).clone()))
            }
            Rule::RCon => self.consequence(),
            Rule::Invariance => {
                self.arity(1)?;
                let p = self.prem_triple(0)?;
                let d = match (&self.params.delta, self.stated) {
                    (Some(d), _) => d.clone(),
                    (None, Some(Judgment::Triple(HoareTriple { pre: Formula::And(_, d), .. }))) => (**d).clone(),
                    _ => return Err(self.err(RuleErrorKind::MissingParam, "needs the invariant δ")),
                };
                self.core(formula_wf(self.i, &d))?;
                let vs = p.prog.vars();
                let common = overlap(&d.free(), &vs);
                if !common.is_empty() {
                    return Err(self.side(format!("free(δ) meets var(S) in {}", names(&common))));
                }
                if !self.depends_only(&d, &self.i.complement(&vs))? {
                    return Err(self.side("δ is not independent of var(S) in this interpretation"));
                }
                self.done(triple(
                    Formula::and(p.pre.clone(), d.clone()),
                    p.prog.clone(),
                    Formula::and(p.post.clone(), d),
                ))
            }
            Rule::Substitution => {
                self.arity(1)?;
                let p = self.prem_triple(0)?;
                let t = match (&self.params.term, self.stated) {
                    (Some(t), _) => t.clone(),
                    (None, Some(Judgment::Triple(HoareTriple { pre: Formula::Adjoint(t, _), .. }))) => t.clone(),
                    _ => return Err(self.err(RuleErrorKind::MissingParam, "needs the term τ")),
                };
                let tv = self.core(term_wf(self.i, &t))?;
                let common = overlap(&tv, &p.prog.vars());
                if !common.is_empty() {
                    return Err(self.side(format!("var(τ) meets var(S) in {}", names(&common))));
                }
                self.done(triple(adj(&t, &p.pre), p.prog.clone(), adj(&t, &p.post)))
            }
            Rule::Conjunction | Rule::Disjunction => {
                self.arity(2)?;
                let a = self.prem_triple(0)?;
                let b = self.prem_triple(1)?;
                if a.prog != b.prog {
                    return Err(self.shape("premises are about different programs"));
                }
                if self.rule == Rule::Conjunction {
                    self.done(triple(
                        Formula::and(a.pre.clone(), b.pre.clone()),
                        a.prog.clone(),
                        Formula::and(a.post.clone(), b.post.clone()),
                    ))
                } else {
                    if !self.same(&a.post, &b.post)? {
                        return Err(self.shape("premises have different postconditions"));
                    }
                    self.done(triple(Formula::or(a.pre.clone(), b.pre.clone()), a.prog.clone(), a.post.clone()))
                }
            }
            Rule::ExistsIntro => self.exists_intro(),
            Rule::Adaptation => self.adaptation(),
            _ => Err(self.shape("not a program rule")),
        }
    }

    fn consequence(mut self) -> R<Derived> {
        let stated = self.stated_triple()?;
        let k = self
            .premises
            .iter()
            .position(|j| matches!(j, Judgment::Triple(_)))
            .ok_or_else(|| self.err(RuleErrorKind::Arity, "needs a triple premise"))?;
        let t = self.prem_triple(k)?;
        if t.prog != stated.prog {
            return Err(self.shape("premise is about a different program"));
        }
        let extra: Vec<usize> = (0..self.premises.len()).filter(|&j| j != k).collect();
        let mut pre_done = false;
        let mut post_done = false;
        for j in extra {
            let (hyps, c) = self.prem_sequent(j)?;
            if j < k && !pre_done && hyps == [stated.pre.clone()] && *c == t.pre {
                pre_done = true;
            } else if j > k && !post_done && hyps == [t.post.clone()] && *c == stated.post {
                post_done = true;
            } else {
                return Err(self.shape(format!("premise {} fits neither entailment", j + 1)));
            }
        }
        if !pre_done {
            self.discharge(&stated.pre, &t.pre, "precondition")?;
        }
        if !post_done {
            self.discharge(&t.post, &stated.post, "postcondition")?;
        }
        self.done(Judgment::Triple(stated.clone()))
    }

    fn discharge(&mut self, a: &Formula, b: &Formula, what: &str) -> R<()> {
        if a == b {
            return Ok(());
        }
        let x = self.core(eval_subspace(self.i, a))?;
        let y = self.core(eval_subspace(self.i, b))?;
        if !self.core(y.includes(&x, self.i.tol()))? {
            return Err(self.err(
                RuleErrorKind::Entailment,
                format!(
                    "{what}: `{a}` (rank {}) does not entail `{b}` (rank {})",
                    x.rank(),
                    y.rank()
                ),
            ));
        }
        self.notes.push(format!("{what} entailment discharged semantically"));
        Ok(())
    }

    fn exists_intro(self) -> R<Derived> {
        self.arity(1)?;
        let p = self.prem_triple(0)?;
        let qs = match (&self.params.vars, self.stated) {
            (Some(q), _) => q.clone(),
            (None, Some(Judgment::Triple(HoareTriple { pre: Formula::Exists(q, _), .. }))) => q.clone(),
            _ => return Err(self.err(RuleErrorKind::MissingParam, "needs the bound variables")),
        };
        let mut touched = p.prog.vars();
        for v in p.post.free() {
            if !touched.contains(&v) {
                touched.push(v);
            }
        }
        let common = overlap(&qs, &touched);
        if !common.is_empty() {
            return Err(self.side(format!(
                "bound variables {} occur in var(S) or free(γ)",
                names(&common)
            )));
        }
        if !self.depends_only(&p.post, &self.i.complement(&qs))? {
            return Err(self.side("γ is not independent of the bound variables in this interpretation"));
        }
        match self.core(terminates_probe(self.i, &p.prog, self.params.max_steps))? {
            Termination::Terminates { .. } => {}
            Termination::Diverges { witness } => {
                return Err(self.err(
                    RuleErrorKind::Probe,
                    format!("S does not terminate: a rank-{} subspace stays in the loop", witness.rank()),
                ))
            }
            Termination::Inconclusive { residual } => {
                return Err(self.err(
                    RuleErrorKind::Probe,
                    format!("termination not established: mass {residual:.3e} unaccounted for"),
                ))
            }
        }
        let pre = Formula::Exists(qs, Box::new(p.pre.clone()));
        self.done(triple(pre, p.prog.clone(), p.post.clone()))
    }

    fn adaptation(mut self) -> R<Derived> {
        self.arity(1)?;
        let p = self.prem_triple(0)?;
        let (ps, delta) = {
            let stated = self.stated_triple().ok();
            let ps = match (&self.params.vars, stated) {
                (Some(ps), _) => ps.clone(),
                (None, Some(t)) => adaptation_vars(&t.pre)
                    .ok_or_else(|| self.err(RuleErrorKind::MissingParam, "needs p̄"))?,
                _ => return Err(self.err(RuleErrorKind::MissingParam, "needs p̄")),
            };
            let delta = match (&self.params.delta, stated) {
                (Some(d), _) => d.clone(),
                (None, Some(t)) => t.post.clone(),
                _ => return Err(self.err(RuleErrorKind::MissingParam, "needs δ")),
            };
            (ps, delta)
        };
        let witness = self
            .params
            .term
            .clone()
            .ok_or_else(|| self.err(RuleErrorKind::MissingParam, "needs a witness term"))?;
        self.core(formula_wf(self.i, &delta))?;
        let sv = p.prog.vars();
        if !subset(&sv, &ps) {
            return Err(self.side(format!("var(S) = {} is not inside p̄ = {}", names(&sv), names(&ps))));
        }
        let mut fv = p.pre.free();
        fv.extend(p.post.free());
        let mut excluded = delta.free();
        excluded.extend(ps.iter().cloned());
        let qs: Vec<String> = self
            .layout_order(&fv)
            .into_iter()
            .filter(|v| !excluded.contains(v))
            .collect();
        if !self.depends_only(&delta, &self.i.complement(&qs))? {
            return Err(self.side("δ is not independent of q̄ in this interpretation"));
        }
        self.built_from_generators(&witness, &ps)?;
        match self.core(representable_probe(self.i, &p.prog, &witness, self.params.trials, self.params.seed))? {
            Representability::VerifiedOnSamples { checked } => {
                self.notes.push(format!("representability verified on {checked} sampled subspaces"));
                self.confidence = Confidence::Sampled;
            }
            Representability::Refuted { counterexample } => {
                return Err(self.err(
                    RuleErrorKind::Probe,
                    format!(
                        "witness `{witness}` does not represent S: fails on a rank-{} subspace",
                        counterexample.rank()
                    ),
                ))
            }
        }
        let body = Formula::and(
            p.pre.clone(),
            Formula::Forall(ps, Box::new(Formula::implies(p.post.clone(), delta.clone()))),
        );
        let pre = if qs.is_empty() { body } else { Formula::Exists(qs, Box::new(body)) };
        self.done(triple(pre, p.prog.clone(), delta))
    }
}

/// `p̄` read from `(∃q̄)[β ∧ (∀p̄)(γ → δ)]` or `β ∧ (∀p̄)(γ → δ)`.
fn adaptation_vars(pre: &Formula) -> Option<Vec<String>> {
    let body = match pre {
        Formula::Exists(_, b) => &**b,
        b => b,
    };
    match body {
        Formula::And(_, r) => match &**r {
            Formula::Forall(ps, _) => Some(ps.clone()),
            _ => None,
        },
        _ => None,
    }
}

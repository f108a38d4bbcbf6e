//! Hoare triples, semantic validity and the proof-script checker.

mod proof;
mod rules;

pub use proof::{check_proof, CheckOptions, ProofReport, ProofScript, ProofStep, StepReport, StepStatus};
pub use rules::{apply_rule, Confidence, Derived, Params, Rule, RuleError, RuleErrorKind};

use crate::formulas::{eval_subspace, formula_wf, Formula};
use crate::interp::Interpretation;
use crate::linalg::CMatrix;
use crate::programs::{prog_image_logged, prog_wf, prog_wlp, FixpointLog, Program};
use crate::terms::Term;
use crate::Result;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// `{β} S {γ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoareTriple {
    pub pre: Formula,
    pub prog: Program,
    pub post: Formula,
}

impl HoareTriple {
    pub fn new(pre: Formula, prog: Program, post: Formula) -> Self {
        HoareTriple { pre, prog, post }
    }
}

impl fmt::Display for HoareTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}} {} {{{}}}", self.pre, self.prog, self.post)
    }
}

/// What a proof step asserts.
#[derive(Debug, Clone, PartialEq)]
pub enum Judgment {
    Triple(HoareTriple),
    /// `Σ ⊢ β`.
    Sequent { hyps: Vec<Formula>, concl: Formula },
    /// `τ1 = τ2`.
    Equation(Term, Term),
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Judgment::Triple(t) => write!(f, "{t}"),
            Judgment::Sequent { hyps, concl } => {
                for (k, h) in hyps.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    // Hypotheses are comma separated, so quantifiers and
                    // implications inside them keep their own scope.
                    write!(f, "({h})")?;
                }
                if !hyps.is_empty() {
                    write!(f, " ")?;
                }
                write!(f, "|- {concl}")
            }
            Judgment::Equation(a, b) => write!(f, "{a} = {b}"),
        }
    }
}

/// Outcome of a partial-correctness check.
#[derive(Debug, Clone)]
pub struct TripleReport {
    pub valid: bool,
    pub pre_rank: usize,
    pub post_rank: usize,
    pub image_rank: usize,
    /// Input satisfying the precondition whose output violates the
    /// postcondition: the basis vector of `⟦β⟧` furthest outside the wlp.
    pub witness: Option<CMatrix>,
    /// Iteration counts of the loop fixpoints.
    pub fixpoints: Vec<usize>,
}

/// `⟦S⟧(⟦β⟧) ⊆ ⟦γ⟧`.
pub fn triple_valid(i: &Interpretation, t: &HoareTriple) -> Result<TripleReport> {
    formula_wf(i, &t.pre)?;
    formula_wf(i, &t.post)?;
    prog_wf(i, &t.prog)?;
    let pre = eval_subspace(i, &t.pre)?;
    let post = eval_subspace(i, &t.post)?;
    let mut log = FixpointLog::default();
    let image = prog_image_logged(i, &t.prog, &pre, &mut log)?;
    let valid = post.includes(&image, i.tol())?;
    Ok(TripleReport {
        valid,
        pre_rank: pre.rank(),
        post_rank: post.rank(),
        image_rank: image.rank(),
        witness: if valid {
            None
        } else {
            pre.violating_vector(&prog_wlp(i, &t.prog, &post)?, i.tol())
        },
        fixpoints: log.iterations,
    })
}

/// `⟦β⟧ ⊆ wlp(S, ⟦γ⟧)`.
pub fn triple_valid_wlp(i: &Interpretation, t: &HoareTriple) -> Result<bool> {
    formula_wf(i, &t.pre)?;
    formula_wf(i, &t.post)?;
    let pre = eval_subspace(i, &t.pre)?;
    let post = eval_subspace(i, &t.post)?;
    prog_wlp(i, &t.prog, &post)?.includes(&pre, i.tol())
}

/// `⋀Σ ⊆ ⟦β⟧` in this interpretation.
pub fn sequent_valid(i: &Interpretation, hyps: &[Formula], concl: &Formula) -> Result<bool> {
    let lhs = eval_subspace(i, &Formula::and_all(hyps.to_vec()))?;
    eval_subspace(i, concl)?.includes(&lhs, i.tol())
}

/// Semantic truth of any judgment in this interpretation.
pub fn judgment_valid(i: &Interpretation, j: &Judgment) -> Result<bool> {
    match j {
        Judgment::Triple(t) => Ok(triple_valid(i, t)?.valid),
        Judgment::Sequent { hyps, concl } => sequent_valid(i, hyps, concl),
        Judgment::Equation(a, b) => crate::terms::term_equiv(i, a, b),
    }
}

/// Names the free variables of `vs` for diagnostics.
pub(crate) fn names(vs: &[String]) -> String {
    let mut s = String::from("{");
    for (k, v) in vs.iter().enumerate() {
        if k > 0 {
            s.push_str(", ");
        }
        s.push_str(v);
    }
    s.push('}');
    s
}

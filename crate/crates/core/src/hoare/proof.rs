//! Whole proof scripts.

use super::rules::{apply_rule, Confidence, Params, Rule, RuleError, RuleErrorKind};
use super::{judgment_valid, Judgment};
use crate::formulas::eval_subspace;
use crate::interp::Interpretation;
use crate::terms::term_equiv;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct ProofStep {
    pub id: String,
    pub judgment: Judgment,
    pub rule: Rule,
    pub premises: Vec<String>,
    pub params: Params,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProofScript {
    pub steps: Vec<ProofStep>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CheckOptions {
    /// Re-check every proven judgment against the semantics.
    pub cross_check: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepStatus {
    Ok {
        confidence: Confidence,
        /// The stated judgment equals the derived one only up to semantic
        /// equivalence of its parts.
        modulo: bool,
    },
    Failed { error: RuleError },
    /// A premise reference that is unknown or not yet proven.
    Structural { message: String },
    /// Not checked because an earlier step failed.
    Skipped,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub id: String,
    pub rule: Rule,
    pub status: StepStatus,
    pub notes: Vec<String>,
    pub cross_check: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct ProofReport {
    pub steps: Vec<StepReport>,
}

impl ProofReport {
    pub fn ok(&self) -> bool {
        self.steps.iter().all(|s| {
            matches!(s.status, StepStatus::Ok { .. }) && s.cross_check != Some(false)
        })
    }

    pub fn first_failure(&self) -> Option<&StepReport> {
        self.steps
            .iter()
            .find(|s| !matches!(s.status, StepStatus::Ok { .. }) || s.cross_check == Some(false))
    }

    /// The weakest confidence among the steps.
    pub fn confidence(&self) -> Confidence {
        self.steps
            .iter()
            .filter_map(|s| match s.status {
                StepStatus::Ok { confidence, .. } => Some(confidence),
                _ => None,
            })
            .max()
            .unwrap_or(Confidence::Proved)
    }
}

/// Re-derives every step in order and stops at the first failure; the steps
/// after it are reported as skipped.
pub fn check_proof(i: &Interpretation, p: &ProofScript, opts: CheckOptions) -> ProofReport {
    let mut done: Vec<(&str, &Judgment)> = Vec::new();
    let mut steps = Vec::with_capacity(p.steps.len());
    let mut failed = false;
    for step in &p.steps {
        let mut report = StepReport {
            id: step.id.clone(),
            rule: step.rule,
            status: StepStatus::Skipped,
            notes: Vec::new(),
            cross_check: None,
        };
        if failed {
            steps.push(report);
            continue;
        }
        report.status = if done.iter().any(|(id, _)| *id == step.id) {
            StepStatus::Structural {
                message: format!("step id `{}` is used twice", step.id),
            }
        } else {
            check_step(i, step, &done, &mut report.notes)
        };
        if let StepStatus::Ok { .. } = report.status {
            if opts.cross_check {
                let ok = judgment_valid(i, &step.judgment).unwrap_or(false);
                if !ok {
                    report.notes.push("semantic cross-check failed".into());
                }
                report.cross_check = Some(ok);
                failed = !ok;
            }
        } else {
            failed = true;
        }
        done.push((&step.id, &step.judgment));
        steps.push(report);
    }
    ProofReport { steps }
}

fn check_step(i: &Interpretation, step: &ProofStep, done: &[(&str, &Judgment)], notes: &mut Vec<String>) -> StepStatus {
    let mut premises = Vec::with_capacity(step.premises.len());
    for id in &step.premises {
        match done.iter().find(|(d, _)| d == id) {
            Some((_, j)) => premises.push((*j).clone()),
            None => {
                return StepStatus::Structural {
                    message: format!("premise `{id}` is not an earlier step"),
                }
            }
        }
    }
    let derived = match apply_rule(i, step.rule, &premises, &step.params, Some(&step.judgment)) {
        Ok(d) => d,
        Err(error) => return StepStatus::Failed { error },
    };
    notes.extend(derived.notes);
    match matches_modulo(i, &derived.judgment, &step.judgment) {
        Ok(Match::Exact) => StepStatus::Ok {
            confidence: derived.confidence,
            modulo: false,
        },
        Ok(Match::Modulo) => StepStatus::Ok {
            confidence: derived.confidence,
            modulo: true,
        },
        Ok(Match::No) => StepStatus::Failed {
            error: RuleError {
                rule: step.rule,
                kind: RuleErrorKind::Shape,
                message: format!("rule derives `{}`, not the stated judgment", derived.judgment),
            },
        },
        Err(e) => StepStatus::Failed {
            error: RuleError {
                rule: step.rule,
                kind: RuleErrorKind::IllFormed,
                message: format!("{e}"),
            },
        },
    }
}

enum Match {
    Exact,
    Modulo,
    No,
}

/// Same judgment kind and program, with formulas and terms equal in the
/// interpretation.
fn matches_modulo(i: &Interpretation, derived: &Judgment, stated: &Judgment) -> crate::Result<Match> {
    if derived == stated {
        return Ok(Match::Exact);
    }
    let eq = |a: &crate::Formula, b: &crate::Formula| -> crate::Result<bool> {
        eval_subspace(i, a)?.equals(&eval_subspace(i, b)?, i.tol())
    };
    let ok = match (derived, stated) {
        (Judgment::Triple(a), Judgment::Triple(b)) => a.prog == b.prog && eq(&a.pre, &b.pre)? && eq(&a.post, &b.post)?,
        (Judgment::Sequent { hyps: h1, concl: c1 }, Judgment::Sequent { hyps: h2, concl: c2 }) => {
            let a = crate::Formula::and_all(h1.clone());
            let b = crate::Formula::and_all(h2.clone());
            eq(&a, &b)? && eq(c1, c2)?
        }
        (Judgment::Equation(a1, b1), Judgment::Equation(a2, b2)) => term_equiv(i, a1, a2)? && term_equiv(i, b1, b2)?,
        _ => false,
    };
    Ok(if ok { Match::Modulo } else { Match::No })
}

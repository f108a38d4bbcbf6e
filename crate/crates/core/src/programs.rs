//! Quantum while-programs: syntax, operational semantics and exact subspace
//! transformers.

use crate::interp::Interpretation;
use crate::linalg::{lattice_join, lattice_meet, CMatrix, StateDensity, Subspace};
use crate::sample;
use crate::terms::{apply_raw, forward_raw, image_raw, term_wf, wlp_raw, Op, Term};
use crate::{Error, Result};
use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum Program {
    Skip,
    /// `q := |0⟩`.
    Init(String),
    /// `q̄ := τ` with `var(τ) ⊆ q̄`.
    Assign { vars: Vec<String>, term: Term },
    Seq(Box<Program>, Box<Program>),
    Case {
        meas: String,
        vars: Vec<String>,
        branches: Vec<(String, Program)>,
    },
    /// `while M[q̄] = 1 do S od`.
    While {
        meas: String,
        vars: Vec<String>,
        body: Box<Program>,
    },
}

impl Program {
    pub fn assign(vars: &[&str], term: Term) -> Program {
        Program::Assign {
            vars: vars.iter().map(|v| (*v).to_owned()).collect(),
            term,
        }
    }

    /// `q̄ := τ` on exactly `var(τ)`.
    pub fn apply(term: Term) -> Program {
        Program::Assign {
            vars: term.vars(),
            term,
        }
    }

    pub fn seq(a: Program, b: Program) -> Program {
        Program::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence; `skip` when empty.
    pub fn seq_all(parts: Vec<Program>) -> Program {
        parts
            .into_iter()
            .rev()
            .reduce(|acc, p| Program::seq(p, acc))
            .unwrap_or(Program::Skip)
    }

    pub fn while_loop(meas: &str, vars: &[&str], body: Program) -> Program {
        Program::While {
            meas: meas.to_owned(),
            vars: vars.iter().map(|v| (*v).to_owned()).collect(),
            body: Box::new(body),
        }
    }

    /// `var(S)` in first-occurrence order.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        let add = |vs: &[String], out: &mut Vec<String>| {
            for v in vs {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        };
        match self {
            Program::Skip => {}
            Program::Init(q) => add(core::slice::from_ref(q), out),
            Program::Assign { vars, .. } => add(vars, out),
            Program::Seq(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Program::Case { vars, branches, .. } => {
                add(vars, out);
                for (_, p) in branches {
                    p.collect_vars(out);
                }
            }
            Program::While { vars, body, .. } => {
                add(vars, out);
                body.collect_vars(out);
            }
        }
    }

    pub fn is_loop_free(&self) -> bool {
        match self {
            Program::While { .. } => false,
            Program::Seq(a, b) => a.is_loop_free() && b.is_loop_free(),
            Program::Case { branches, .. } => branches.iter().all(|(_, p)| p.is_loop_free()),
            _ => true,
        }
    }
}

fn outcome_term(meas: &str, outcome: &str, vars: &[String]) -> Term {
    Term::Basic {
        op: Op::Outcome {
            meas: meas.to_owned(),
            outcome: outcome.to_owned(),
        },
        vars: vars.to_vec(),
    }
}

fn reset_term(q: &str) -> Term {
    Term::Basic {
        op: Op::Reset,
        vars: vec![q.to_owned()],
    }
}

/// Validates `s` and returns `var(S)`.
pub fn prog_wf(i: &Interpretation, s: &Program) -> Result<Vec<String>> {
    check(i, s)?;
    Ok(s.vars())
}

fn check_measurement(i: &Interpretation, meas: &str, vars: &[String]) -> Result<()> {
    let m = i.measurement(meas)?;
    i.positions(vars)?;
    let dims = i.dims_of(vars)?;
    if dims != m.signature {
        return Err(Error::SignatureMismatch {
            symbol: meas.to_owned(),
            expected: m.signature.clone(),
            found: dims,
        });
    }
    Ok(())
}

fn check(i: &Interpretation, s: &Program) -> Result<()> {
    match s {
        Program::Skip => {}
        Program::Init(q) => {
            i.var_dim(q)?;
        }
        Program::Assign { vars, term } => {
            if vars.is_empty() {
                return Err(Error::Program("assignment to no variables".into()));
            }
            i.positions(vars)?;
            let tv = term_wf(i, term)?;
            if let Some(v) = tv.iter().find(|v| !vars.contains(v)) {
                return Err(Error::Program(format!(
                    "`{term}` acts on `{v}`, which is not assigned"
                )));
            }
            if !cfg!(feature = "noisy-assign") && !crate::terms::is_unitary_term(i, term)? {
                return Err(Error::NotUnitaryTerm(format!("{term}")));
            }
        }
        Program::Seq(a, b) => {
            check(i, a)?;
            check(i, b)?;
        }
        Program::Case {
            meas,
            vars,
            branches,
        } => {
            check_measurement(i, meas, vars)?;
            let m = i.measurement(meas)?;
            for (k, (label, _)) in branches.iter().enumerate() {
                if m.outcome(label).is_none() {
                    return Err(Error::Program(format!("`{meas}` has no outcome `{label}`")));
                }
                if branches[..k].iter().any(|(l, _)| l == label) {
                    return Err(Error::Program(format!("outcome `{label}` has two branches")));
                }
            }
            if let Some(missing) = m.labels().find(|l| branches.iter().all(|(b, _)| b != l)) {
                return Err(Error::Program(format!("outcome `{missing}` of `{meas}` has no branch")));
            }
            for (_, p) in branches {
                check(i, p)?;
            }
        }
        Program::While { meas, vars, body } => {
            check_measurement(i, meas, vars)?;
            let m = i.measurement(meas)?;
            let mut labels: Vec<&str> = m.labels().collect();
            labels.sort_unstable();
            if labels != ["0", "1"] {
                return Err(Error::Program(format!(
                    "loop guard `{meas}` must have outcomes 0 and 1, found {labels:?}"
                )));
            }
            check(i, body)?;
        }
    }
    Ok(())
}

/// A program still to run (or `None` once terminated) with its partial state.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub program: Option<Program>,
    pub state: StateDensity,
}

#[derive(Debug, Clone)]
pub struct Successor {
    pub config: Configuration,
    /// The branch carries no probability mass.
    pub zero_trace: bool,
}

fn step_raw(i: &Interpretation, p: &Program, rho: &StateDensity) -> Result<Vec<(Option<Program>, StateDensity)>> {
    Ok(match p {
        Program::Skip => vec![(None, rho.clone())],
        Program::Init(q) => vec![(None, apply_raw(i, &reset_term(q), rho)?)],
        Program::Assign { term, .. } => vec![(None, apply_raw(i, term, rho)?)],
        Program::Seq(a, b) => step_raw(i, a, rho)?
            .into_iter()
            .map(|(next, st)| {
                let rest = match next {
                    None => (**b).clone(),
                    Some(a2) => Program::seq(a2, (**b).clone()),
                };
                (Some(rest), st)
            })
            .collect(),
        Program::Case {
            meas,
            vars,
            branches,
        } => {
            let m = i.measurement(meas)?;
            let mut out = Vec::new();
            for label in m.labels() {
                let branch = branches
                    .iter()
                    .find(|(l, _)| l == label)
                    .map(|(_, b)| b.clone())
                    .ok_or_else(|| Error::Program(format!("outcome `{label}` has no branch")))?;
                out.push((Some(branch), apply_raw(i, &outcome_term(meas, label, vars), rho)?));
            }
            out
        }
        Program::While { meas, vars, body } => vec![
            (None, apply_raw(i, &outcome_term(meas, "0", vars), rho)?),
            (
                Some(Program::seq((**body).clone(), p.clone())),
                apply_raw(i, &outcome_term(meas, "1", vars), rho)?,
            ),
        ],
    })
}

/// One transition of the operational semantics; every branch is returned.
pub fn step(i: &Interpretation, config: &Configuration) -> Result<Vec<Successor>> {
    let p = config
        .program
        .as_ref()
        .ok_or_else(|| Error::Program("configuration has already terminated".into()))?;
    check(i, p)?;
    Ok(step_raw(i, p, &config.state)?
        .into_iter()
        .map(|(program, state)| Successor {
            zero_trace: state.trace() <= i.tol().num,
            config: Configuration { program, state },
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Every branch was followed to termination.
    Exact,
    /// Mass was pruned below the threshold or left pending at the step cap.
    Truncated,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output: StateDensity,
    /// Trace mass neither terminated nor accounted for.
    pub residual: f64,
    pub status: RunStatus,
    pub steps: usize,
}

/// Breadth-first exploration of the transition tree. Branches with the same
/// remaining program are merged, which is exact by linearity.
pub fn run(
    i: &Interpretation,
    s: &Program,
    rho: &StateDensity,
    max_steps: usize,
    epsilon: f64,
) -> Result<RunOutcome> {
    check(i, s)?;
    if rho.dim() != i.dim() {
        return Err(Error::DimensionMismatch {
            expected: i.dim(),
            found: rho.dim(),
        });
    }
    let dim = i.dim();
    let mut output = CMatrix::zeros(dim, dim);
    let mut pending: Vec<(Program, StateDensity)> = vec![(s.clone(), rho.clone())];
    let mut pruned = 0.0;
    let mut lossy = false;
    let mut steps = 0;
    while !pending.is_empty() && steps < max_steps {
        steps += 1;
        let mut next: Vec<(Program, CMatrix)> = Vec::new();
        for (p, st) in &pending {
            for (np, out) in step_raw(i, p, st)? {
                match np {
                    None => output += out.matrix(),
                    Some(np) => match next.iter_mut().find(|(q, _)| *q == np) {
                        Some((_, m)) => *m += out.matrix(),
                        None => next.push((np, out.into_matrix())),
                    },
                }
            }
        }
        pending = Vec::with_capacity(next.len());
        for (p, m) in next {
            let tr = m.trace().re;
            if tr < epsilon {
                pruned += tr.max(0.0);
                lossy |= tr > f64::EPSILON;
            } else {
                pending.push((p, StateDensity::trusted(m)));
            }
        }
    }
    let left: f64 = pending.iter().map(|(_, st)| st.trace()).sum();
    let status = if pending.is_empty() && !lossy {
        RunStatus::Exact
    } else {
        RunStatus::Truncated
    };
    Ok(RunOutcome {
        output: StateDensity::trusted(output),
        residual: pruned + left,
        status,
        steps,
    })
}

/// Iteration counts of every loop fixpoint computed, in evaluation order.
#[derive(Debug, Clone, Default)]
pub struct FixpointLog {
    pub iterations: Vec<usize>,
}

/// `⟦S⟧(X)`: the support of the program's output over all inputs in `X`.
pub fn prog_image(i: &Interpretation, s: &Program, x: &Subspace) -> Result<Subspace> {
    prog_image_logged(i, s, x, &mut FixpointLog::default())
}

pub fn prog_image_logged(
    i: &Interpretation,
    s: &Program,
    x: &Subspace,
    log: &mut FixpointLog,
) -> Result<Subspace> {
    check(i, s)?;
    global(i, x)?;
    image_prog(i, s, x, log)
}

fn global(i: &Interpretation, x: &Subspace) -> Result<()> {
    if x.dim() != i.dim() {
        return Err(Error::DimensionMismatch {
            expected: i.dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

pub(crate) fn image_prog(i: &Interpretation, s: &Program, x: &Subspace, log: &mut FixpointLog) -> Result<Subspace> {
    let tol = i.tol();
    match s {
        Program::Skip => Ok(x.clone()),
        Program::Init(q) => forward_raw(i, &reset_term(q), x),
        Program::Assign { term, .. } => forward_raw(i, term, x),
        Program::Seq(a, b) => {
            let mid = image_prog(i, a, x, log)?;
            image_prog(i, b, &mid, log)
        }
        Program::Case {
            meas,
            vars,
            branches,
        } => {
            let mut parts = Vec::with_capacity(branches.len());
            for (label, p) in branches {
                let after = forward_raw(i, &outcome_term(meas, label, vars), x)?;
                parts.push(image_prog(i, p, &after, log)?);
            }
            lattice_join(x.dim(), &parts, tol)
        }
        Program::While { meas, vars, body } => {
            let stay = outcome_term(meas, "1", vars);
            let mut z = x.clone();
            let mut rounds = 0;
            loop {
                rounds += 1;
                let body_in = forward_raw(i, &stay, &z)?;
                let next = z.join(&image_prog(i, body, &body_in, log)?, tol)?;
                let stable = next.rank() == z.rank();
                z = next;
                if stable {
                    break;
                }
            }
            log.iterations.push(rounds);
            forward_raw(i, &outcome_term(meas, "0", vars), &z)
        }
    }
}

/// Weakest liberal precondition of `S` for postcondition `Y`.
pub fn prog_wlp(i: &Interpretation, s: &Program, y: &Subspace) -> Result<Subspace> {
    prog_wlp_logged(i, s, y, &mut FixpointLog::default())
}

pub fn prog_wlp_logged(
    i: &Interpretation,
    s: &Program,
    y: &Subspace,
    log: &mut FixpointLog,
) -> Result<Subspace> {
    check(i, s)?;
    global(i, y)?;
    wlp_prog(i, s, y, log)
}

pub(crate) fn wlp_prog(i: &Interpretation, s: &Program, y: &Subspace, log: &mut FixpointLog) -> Result<Subspace> {
    let tol = i.tol();
    match s {
        Program::Skip => Ok(y.clone()),
        Program::Init(q) => wlp_raw(i, &reset_term(q), y),
        Program::Assign { term, .. } => wlp_raw(i, term, y),
        Program::Seq(a, b) => {
            let mid = wlp_prog(i, b, y, log)?;
            wlp_prog(i, a, &mid, log)
        }
        Program::Case {
            meas,
            vars,
            branches,
        } => {
            let mut parts = Vec::with_capacity(branches.len());
            for (label, p) in branches {
                let inner = wlp_prog(i, p, y, log)?;
                parts.push(wlp_raw(i, &outcome_term(meas, label, vars), &inner)?);
            }
            lattice_meet(y.dim(), &parts, tol)
        }
        Program::While { meas, vars, body } => {
            let exit = wlp_raw(i, &outcome_term(meas, "0", vars), y)?;
            let stay = outcome_term(meas, "1", vars);
            let mut z = Subspace::full(y.dim());
            let mut rounds = 0;
            loop {
                rounds += 1;
                let through = wlp_raw(i, &stay, &wlp_prog(i, body, &z, log)?)?;
                let next = exit.meet(&through, tol)?;
                let stable = next.rank() == z.rank();
                z = next;
                if stable {
                    break;
                }
            }
            log.iterations.push(rounds);
            Ok(z)
        }
    }
}

#[derive(Debug, Clone)]
pub enum Termination {
    /// The maximally mixed input loses less than `tol.num` of its trace.
    Terminates { residual: f64 },
    /// A nonzero subspace that a reachable loop head never leaves.
    Diverges { witness: Subspace },
    Inconclusive { residual: f64 },
}

/// Sound but incomplete termination check: first a search for a reachable
/// loop-invariant subspace inside the guard's `1` outcome, then a run of the
/// maximally mixed state.
pub fn terminates_probe(i: &Interpretation, s: &Program, max_steps: usize) -> Result<Termination> {
    check(i, s)?;
    let full = Subspace::full(i.dim());
    if let Some(witness) = divergence(i, s, &full)? {
        return Ok(Termination::Diverges { witness });
    }
    let out = run(i, s, &StateDensity::maximally_mixed(i.dim()), max_steps, i.tol().num * 1e-3)?;
    let lost = (1.0 - out.output.trace()).max(out.residual);
    Ok(if lost < i.tol().num {
        Termination::Terminates { residual: lost }
    } else {
        Termination::Inconclusive { residual: lost }
    })
}

fn divergence(i: &Interpretation, s: &Program, reach: &Subspace) -> Result<Option<Subspace>> {
    let tol = i.tol();
    let mut log = FixpointLog::default();
    if reach.is_zero() {
        return Ok(None);
    }
    match s {
        Program::Skip | Program::Init(_) | Program::Assign { .. } => Ok(None),
        Program::Seq(a, b) => {
            if let Some(w) = divergence(i, a, reach)? {
                return Ok(Some(w));
            }
            divergence(i, b, &image_prog(i, a, reach, &mut log)?)
        }
        Program::Case {
            meas,
            vars,
            branches,
        } => {
            for (label, p) in branches {
                let after = forward_raw(i, &outcome_term(meas, label, vars), reach)?;
                if let Some(w) = divergence(i, p, &after)? {
                    return Ok(Some(w));
                }
            }
            Ok(None)
        }
        Program::While { meas, vars, body } => {
            let stay = outcome_term(meas, "1", vars);
            let guard = forward_raw(i, &stay, &Subspace::full(reach.dim()))?;
            let mut w = guard.clone();
            loop {
                let next = guard.meet(&wlp_prog(i, body, &w, &mut log)?, tol)?;
                let stable = next.rank() == w.rank();
                w = next;
                if stable || w.is_zero() {
                    break;
                }
            }
            if !w.is_zero() {
                let mut r = reach.clone();
                for _ in 0..2 * reach.dim() + 2 {
                    let hit = w.meet(&r, tol)?;
                    if !hit.is_zero() {
                        return Ok(Some(hit));
                    }
                    let next = image_prog(i, body, &forward_raw(i, &stay, &r)?, &mut log)?;
                    if next.is_zero() || next.equals(&r, tol)? {
                        break;
                    }
                    r = next;
                }
            }
            divergence(i, body, &forward_raw(i, &stay, reach)?)
        }
    }
}

#[derive(Debug, Clone)]
pub enum Representability {
    /// Every sampled subspace satisfied the equation; not a proof.
    VerifiedOnSamples { checked: usize },
    Refuted { counterexample: Subspace },
}

/// Checks `⟦S⟧(⟦τ⟧*(X)) = X` on coordinate lines, adjacent coordinate planes
/// and `trials` random subspaces of `ℋ_var(S)`, each lifted to the global
/// space.
pub fn representable_probe(
    i: &Interpretation,
    s: &Program,
    witness: &Term,
    trials: usize,
    seed: u64,
) -> Result<Representability> {
    check(i, s)?;
    let vars = s.vars();
    let wv = term_wf(i, witness)?;
    if let Some(v) = wv.iter().find(|v| !vars.contains(v)) {
        return Err(Error::Program(format!(
            "witness acts on `{v}`, which the program does not use"
        )));
    }
    let tol = i.tol();
    let d: usize = i.dims_of(&vars)?.iter().product();
    let mut tests: Vec<Subspace> = (0..d).map(|k| Subspace::basis_line(d, k)).collect();
    for k in 0..d.saturating_sub(1) {
        tests.push(Subspace::basis_line(d, k).join(&Subspace::basis_line(d, k + 1), tol)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let rank = rng.random_range(1..=d);
        tests.push(sample::subspace(d, rank, &mut rng, tol));
    }
    let mut log = FixpointLog::default();
    for local in &tests {
        let x = i.lift(local, &vars)?;
        let back = image_prog(i, s, &image_raw(i, witness, &x)?, &mut log)?;
        if !back.equals(&x, tol)? {
            return Ok(Representability::Refuted { counterexample: x });
        }
    }
    Ok(Representability::VerifiedOnSamples {
        checked: tests.len(),
    })
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prog(f, self, false)
    }
}

fn write_prog(f: &mut fmt::Formatter<'_>, s: &Program, in_left: bool) -> fmt::Result {
    match s {
        Program::Skip => write!(f, "skip"),
        Program::Init(q) => write!(f, "{q} := |0>"),
        Program::Assign { vars, term } => write!(f, "{} := {term}", vars.join(",")),
        Program::Seq(a, b) => {
            if in_left {
                write!(f, "(")?;
            }
            write_prog(f, a, true)?;
            write!(f, "; ")?;
            write_prog(f, b, false)?;
            if in_left {
                write!(f, ")")?;
            }
            Ok(())
        }
        Program::Case {
            meas,
            vars,
            branches,
        } => {
            write!(f, "if {meas}[{}] {{ ", vars.join(","))?;
            for (k, (label, p)) in branches.iter().enumerate() {
                if k > 0 {
                    write!(f, " | ")?;
                }
                write!(f, "{label} -> ")?;
                write_prog(f, p, false)?;
            }
            write!(f, " }} fi")
        }
        Program::While { meas, vars, body } => {
            write!(f, "while {meas}[{}] = 1 do ", vars.join(","))?;
            write_prog(f, body, false)?;
            write!(f, " od")
        }
    }
}

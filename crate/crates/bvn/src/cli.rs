//! The `bvn` command-line driver.
//!
//! Exit status: 0 when the checked property holds (or the command only
//! computes), 1 when it is refuted, 2 on any error.

use crate::lex::ParseError;
use crate::source::{parse, Ast, Kind, SourceUnit};
use crate::value::{self, Env};
use bvn_core::formulas::{eval_subspace, forall_closure_trace, sat_probability, satisfies, Reading};
use bvn_core::hoare::{check_proof, triple_valid, CheckOptions, StepStatus};
use bvn_core::programs::{prog_image_logged, prog_wlp_logged, run, FixpointLog, RunStatus};
use bvn_core::terms::{term_distance, term_equiv};
use bvn_core::{CMatrix, Error, Formula, Interpretation, StateDensity, Subspace, Tolerances, C64};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as J};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "bvn", version, about = "Check quantum-logic assertions, programs and proofs")]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// Also write a machine-readable report to this file.
    #[arg(long, global = true, value_name = "FILE")]
    json: Option<PathBuf>,
    /// Matrix-identity and rank tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Subspace-inclusion tolerance.
    #[arg(long, global = true)]
    tol_sub: Option<f64>,
    /// Cap on the total ambient dimension.
    #[arg(long, global = true)]
    max_dim: Option<usize>,
    /// Step cap for `run` and for termination probes.
    #[arg(long, global = true, default_value_t = 10_000)]
    max_steps: usize,
    /// Branches of `run` with less trace than this are pruned.
    #[arg(long, global = true, default_value_t = 1e-12)]
    eps: f64,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print a basis and the rank of a formula's subspace.
    Sem {
        #[arg(short, long)]
        interp: String,
        #[arg(short, long)]
        formula: String,
    },
    /// Decide whether a state satisfies a formula.
    Sat {
        #[arg(short, long)]
        interp: String,
        #[arg(short, long)]
        state: String,
        #[arg(short, long)]
        formula: String,
    },
    /// Born probability that a state satisfies a formula.
    Prob {
        #[arg(short, long)]
        interp: String,
        #[arg(short, long)]
        state: String,
        #[arg(short, long)]
        formula: String,
    },
    /// Decide whether the first formula entails the second.
    Entail {
        #[arg(short, long)]
        interp: String,
        premise: String,
        conclusion: String,
    },
    /// Decide whether two terms denote the same channel.
    TermEq {
        #[arg(short, long)]
        interp: String,
        left: String,
        right: String,
    },
    /// Image of a formula's subspace under a program.
    Image {
        #[arg(short, long)]
        interp: String,
        program: String,
        #[arg(long)]
        pre: String,
    },
    /// Weakest liberal precondition of a program.
    Wlp {
        #[arg(short, long)]
        interp: String,
        program: String,
        #[arg(long)]
        post: String,
    },
    /// Run a program on a state.
    Run {
        #[arg(short, long)]
        interp: String,
        program: String,
        #[arg(short, long)]
        state: String,
    },
    /// Decide a Hoare triple for partial correctness.
    Verify {
        #[arg(short, long)]
        interp: String,
        triple: String,
    },
    /// Check a proof script step by step.
    CheckProof {
        #[arg(short, long)]
        interp: String,
        proof: String,
        /// Also check every step's judgment against the semantics.
        #[arg(long)]
        cross_check: bool,
    },
    /// Trace the fixpoint iteration of a universal quantifier.
    Forall {
        #[arg(short, long)]
        interp: String,
        /// Bound variables, space separated.
        #[arg(long)]
        vars: String,
        #[arg(short, long)]
        formula: String,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Sem { .. } => "sem",
            Cmd::Sat { .. } => "sat",
            Cmd::Prob { .. } => "prob",
            Cmd::Entail { .. } => "entail",
            Cmd::TermEq { .. } => "term-eq",
            Cmd::Image { .. } => "image",
            Cmd::Wlp { .. } => "wlp",
            Cmd::Run { .. } => "run",
            Cmd::Verify { .. } => "verify",
            Cmd::CheckProof { .. } => "check-proof",
            Cmd::Forall { .. } => "forall",
        }
    }
}

/// Input text with a label for diagnostics: a file path, or inline text when
/// no such file exists.
struct Input {
    label: String,
    unit: SourceUnit,
    ast: Ast,
}

#[derive(Debug)]
pub struct Failure(String);

fn read_input(arg: &str, kind: Kind) -> Result<Input, Failure> {
    let path = Path::new(arg);
    let (label, text) = if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{arg}: {e}")))?;
        (arg.to_owned(), text)
    } else if kind == Kind::Interp || Kind::from_path(path).is_some() {
        return Err(Failure(format!("{arg}: no such file")));
    } else {
        ("<inline>".to_owned(), arg.to_owned())
    };
    let (unit, ast) = parse(kind, &text).map_err(|e| Failure(diag(&label, &e)))?;
    Ok(Input { label, unit, ast })
}

fn diag(label: &str, e: &ParseError) -> String {
    format!("{label}:{e}")
}

/// Attaches a source position to a semantic error when it names something
/// that occurs in one of the inputs.
fn locate(e: &Error, inputs: &[&Input]) -> String {
    let name = match e {
        Error::UnknownSymbol(n) | Error::UnknownVariable(n) | Error::NotUnitary(n) | Error::Duplicate(n) | Error::RepeatedVariable(n) => Some(n.as_str()),
        Error::SignatureMismatch { symbol, .. } => Some(symbol.as_str()),
        _ => None,
    };
    if let Some(n) = name {
        for inp in inputs {
            if let Some(sp) = inp.unit.locate(n) {
                return format!("{}:{sp}: {e}", inp.label);
            }
        }
    }
    format!("error: {e}")
}

struct Report {
    command: &'static str,
    inputs: serde_json::Map<String, J>,
    tol: Tolerances,
    opts: Opts,
    layout: Vec<(String, usize)>,
    text: String,
    result: J,
    witnesses: Vec<J>,
    parse_ms: f64,
    eval_ms: f64,
}

impl Report {
    fn header(&self) -> String {
        let lay: Vec<String> = self.layout.iter().map(|(n, d)| format!("{n}:{d}")).collect();
        let dim: usize = self.layout.iter().map(|x| x.1).product();
        format!(
            "bvn {}\n  tolerances: num={:e} rank={:e} sub={:e}\n  caps: max_dim={} max_steps={} eps={:e}\n  layout: {} (dim {dim})\n",
            self.command, self.tol.num, self.tol.rank, self.tol.sub, self.tol.max_dim, self.opts.max_steps, self.opts.eps, lay.join(" "),
        )
    }

    fn json(&self) -> J {
        json!({
            "command": self.command,
            "inputs": self.inputs,
            "tolerances": {
                "num": self.tol.num,
                "rank": self.tol.rank,
                "sub": self.tol.sub,
                "max_dim": self.tol.max_dim,
                "max_steps": self.opts.max_steps,
                "eps": self.opts.eps,
                "layout": self.layout.iter().map(|(n, d)| json!({"var": n, "dim": d})).collect::<Vec<_>>(),
            },
            "result": self.result,
            "witnesses": self.witnesses,
            "timings": { "parse_ms": self.parse_ms, "eval_ms": self.eval_ms },
        })
    }
}

fn cjson(z: C64) -> J {
    json!([z.re, z.im])
}

fn vec_json(v: &CMatrix) -> J {
    J::Array(v.iter().map(|z| cjson(*z)).collect())
}

fn matrix_json(m: &CMatrix) -> J {
    J::Array((0..m.nrows()).map(|i| J::Array((0..m.ncols()).map(|j| cjson(m[(i, j)])).collect())).collect())
}

fn basis_json(x: &Subspace) -> J {
    J::Array((0..x.rank()).map(|k| vec_json(&x.basis().columns(k, 1).into_owned())).collect())
}

fn fmt_c(z: C64) -> String {
    let r = |x: f64| if x.abs() < 5e-13 { 0.0 } else { x };
    let (re, im) = (r(z.re), r(z.im));
    if im == 0.0 {
        format!("{re:.6}")
    } else if re == 0.0 {
        format!("{im:.6}i")
    } else {
        format!("{re:.6}{}{:.6}i", if im < 0.0 { "-" } else { "+" }, im.abs())
    }
}

fn fmt_vec(v: &CMatrix) -> String {
    let parts: Vec<String> = v.iter().map(|z| fmt_c(*z)).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_basis(x: &Subspace) -> String {
    let mut s = String::new();
    for k in 0..x.rank() {
        let _ = writeln!(s, "  {}", fmt_vec(&x.basis().columns(k, 1).into_owned()));
    }
    s
}

fn fmt_matrix(m: &CMatrix) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: CMatrix = m.rows(i, 1).transpose();
        let _ = writeln!(s, "  {}", fmt_vec(&row));
    }
    s
}

fn parse_state(arg: &str, i: &Interpretation) -> Result<StateDensity, Failure> {
    let text = if Path::new(arg).is_file() { std::fs::read_to_string(arg).map_err(|e| Failure(format!("{arg}: {e}")))? } else { arg.to_owned() };
    let env = Env { dims: Some(i.global_space().dims.clone()), names: Default::default() };
    let mut c = crate::cursor::Cursor::new(&text).map_err(|e| Failure(diag("<state>", &e)))?;
    let v = value::expr(&mut c, &env).map_err(|e| Failure(diag("<state>", &e)))?;
    c.finish().map_err(|e| Failure(diag("<state>", &e)))?;
    let n = i.dim();
    match v {
        value::Value::Vector(v) if v.nrows() == n => {
            let norm = v.norm();
            if norm == 0.0 {
                return Err(Failure("state: zero vector".into()));
            }
            StateDensity::pure(&(v * C64::new(1.0 / norm, 0.0))).map_err(|e| Failure(format!("state: {e}")))
        }
        value::Value::Matrix(m) if m.nrows() == n && m.ncols() == n => StateDensity::new(m, i.tol()).map_err(|e| Failure(format!("state: {e}"))),
        _ => Err(Failure(format!("state: expected a vector of length {n} or a {n}x{n} density matrix"))),
    }
}

fn sem_err(e: Error, inputs: &[&Input]) -> Failure {
    Failure(locate(&e, inputs))
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// status.
pub fn main_with(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok((report, code)) => {
            print!("{}{}", report.header(), report.text);
            if let Some(p) = &cli.opts.json {
                let doc = serde_json::to_string_pretty(&report.json()).expect("reports serialize");
                if let Err(e) = std::fs::write(p, doc + "\n") {
                    eprintln!("{}: {e}", p.display());
                    return 2;
                }
            }
            code
        }
        Err(Failure(msg)) => {
            eprintln!("{msg}");
            2
        }
    }
}

fn formula_of(inp: &Input) -> &Formula {
    match &inp.ast {
        Ast::Formula(f) => f,
        _ => unreachable!(),
    }
}

fn execute(cli: &Cli) -> Result<(Report, i32), Failure> {
    let t0 = Instant::now();
    let interp_arg = match &cli.cmd {
        Cmd::Sem { interp, .. }
        | Cmd::Sat { interp, .. }
        | Cmd::Prob { interp, .. }
        | Cmd::Entail { interp, .. }
        | Cmd::TermEq { interp, .. }
        | Cmd::Image { interp, .. }
        | Cmd::Wlp { interp, .. }
        | Cmd::Run { interp, .. }
        | Cmd::Verify { interp, .. }
        | Cmd::CheckProof { interp, .. }
        | Cmd::Forall { interp, .. } => interp,
    };
    let mut tol = Tolerances::default();
    if let Some(t) = cli.opts.tol {
        tol.num = t;
        tol.rank = t;
    }
    if let Some(t) = cli.opts.tol_sub {
        tol.sub = t;
    }
    if let Some(d) = cli.opts.max_dim {
        tol.max_dim = d;
    }
    let ifile = read_input(interp_arg, Kind::Interp)?;
    let Ast::Interp(decls) = &ifile.ast else { unreachable!() };
    let i = Interpretation::build(decls.clone(), tol).map_err(|e| sem_err(e, &[&ifile]))?;
    let layout: Vec<(String, usize)> = i.global_space().names.iter().cloned().zip(i.global_space().dims.iter().copied()).collect();
    let mut inputs = serde_json::Map::new();
    inputs.insert("interp".into(), json!(ifile.label));
    let mut report = Report {
        command: cli.cmd.name(),
        inputs,
        tol,
        opts: cli.opts.clone(),
        layout,
        text: String::new(),
        result: J::Null,
        witnesses: Vec::new(),
        parse_ms: 0.0,
        eval_ms: 0.0,
    };
    let add_input = |r: &mut Report, key: &str, inp: &Input| {
        r.inputs.insert(key.into(), json!({"source": inp.label, "text": inp.ast.to_string()}));
    };
    let mut code = 0;
    macro_rules! parsed {
        () => {
            report.parse_ms = t0.elapsed().as_secs_f64() * 1e3;
        };
    }
    let t1;
    match &cli.cmd {
        Cmd::Sem { formula, .. } => {
            let f = read_input(formula, Kind::Formula)?;
            add_input(&mut report, "formula", &f);
            parsed!();
            t1 = Instant::now();
            let x = eval_subspace(&i, formula_of(&f)).map_err(|e| sem_err(e, &[&f, &ifile]))?;
            let _ = write!(report.text, "rank: {} of {}\nbasis:\n{}", x.rank(), x.dim(), fmt_basis(&x));
            report.result = json!({"rank": x.rank(), "dim": x.dim(), "basis": basis_json(&x)});
        }
        Cmd::Sat { state, formula, .. } | Cmd::Prob { state, formula, .. } => {
            let f = read_input(formula, Kind::Formula)?;
            add_input(&mut report, "formula", &f);
            report.inputs.insert("state".into(), json!(state));
            let rho = parse_state(state, &i)?;
            parsed!();
            t1 = Instant::now();
            let b = formula_of(&f);
            let p = sat_probability(&i, &rho, b).map_err(|e| sem_err(e, &[&f, &ifile]))?;
            if matches!(cli.cmd, Cmd::Sat { .. }) {
                let holds = satisfies(&i, &rho, b).map_err(|e| sem_err(e, &[&f, &ifile]))?;
                let _ = writeln!(report.text, "satisfied: {holds}\nprobability: {p:.12}");
                report.result = json!({"satisfied": holds, "probability": p});
                if !holds {
                    let x = eval_subspace(&i, b).map_err(|e| sem_err(e, &[&f, &ifile]))?;
                    let supp = bvn_core::linalg::support(&rho, i.tol());
                    if let Some(v) = supp.violating_vector(&x, i.tol()) {
                        let _ = write!(report.text, "witness (support vector outside the formula):\n  {}\n", fmt_vec(&v));
                        report.witnesses.push(json!({"kind": "support_vector", "vector": vec_json(&v)}));
                    }
                    code = 1;
                }
            } else {
                let _ = writeln!(report.text, "probability: {p:.12}");
                report.result = json!({"probability": p});
            }
        }
        Cmd::Entail { premise, conclusion, .. } => {
            let a = read_input(premise, Kind::Formula)?;
            let b = read_input(conclusion, Kind::Formula)?;
            add_input(&mut report, "premise", &a);
            add_input(&mut report, "conclusion", &b);
            parsed!();
            t1 = Instant::now();
            let xa = eval_subspace(&i, formula_of(&a)).map_err(|e| sem_err(e, &[&a, &ifile]))?;
            let xb = eval_subspace(&i, formula_of(&b)).map_err(|e| sem_err(e, &[&b, &ifile]))?;
            let holds = xb.includes(&xa, i.tol()).map_err(|e| sem_err(e, &[]))?;
            let _ = writeln!(report.text, "entails: {holds}\nranks: {} -> {}", xa.rank(), xb.rank());
            report.result = json!({"entails": holds, "premise_rank": xa.rank(), "conclusion_rank": xb.rank()});
            if let Some(v) = xa.violating_vector(&xb, i.tol()) {
                let _ = write!(report.text, "witness (satisfies the premise, not the conclusion):\n  {}\n", fmt_vec(&v));
                report.witnesses.push(json!({"kind": "state", "vector": vec_json(&v)}));
            }
            if !holds {
                code = 1;
            }
        }
        Cmd::TermEq { left, right, .. } => {
            let a = read_input(left, Kind::Term)?;
            let b = read_input(right, Kind::Term)?;
            add_input(&mut report, "left", &a);
            add_input(&mut report, "right", &b);
            parsed!();
            t1 = Instant::now();
            let (Ast::Term(ta), Ast::Term(tb)) = (&a.ast, &b.ast) else { unreachable!() };
            let d = term_distance(&i, ta, tb).map_err(|e| sem_err(e, &[&a, &b, &ifile]))?;
            let eq = term_equiv(&i, ta, tb).map_err(|e| sem_err(e, &[&a, &b, &ifile]))?;
            let _ = writeln!(report.text, "equal: {eq}\nchoi distance: {d:e}");
            report.result = json!({"equal": eq, "choi_distance": d});
            if !eq {
                code = 1;
            }
        }
        Cmd::Image { program, pre: cond, .. } | Cmd::Wlp { program, post: cond, .. } => {
            let p = read_input(program, Kind::Program)?;
            let f = read_input(cond, Kind::Formula)?;
            add_input(&mut report, "program", &p);
            add_input(&mut report, if matches!(cli.cmd, Cmd::Image { .. }) { "pre" } else { "post" }, &f);
            parsed!();
            t1 = Instant::now();
            let Ast::Program(s) = &p.ast else { unreachable!() };
            let x = eval_subspace(&i, formula_of(&f)).map_err(|e| sem_err(e, &[&f, &ifile]))?;
            let mut log = FixpointLog::default();
            let y = if matches!(cli.cmd, Cmd::Image { .. }) {
                prog_image_logged(&i, s, &x, &mut log)
            } else {
                prog_wlp_logged(&i, s, &x, &mut log)
            }
            .map_err(|e| sem_err(e, &[&p, &ifile]))?;
            let _ = write!(report.text, "rank: {} of {}\nfixpoint iterations: {:?}\nbasis:\n{}", y.rank(), y.dim(), log.iterations, fmt_basis(&y));
            report.result = json!({"rank": y.rank(), "dim": y.dim(), "basis": basis_json(&y), "fixpoint_iterations": log.iterations});
        }
        Cmd::Run { program, state, .. } => {
            let p = read_input(program, Kind::Program)?;
            add_input(&mut report, "program", &p);
            report.inputs.insert("state".into(), json!(state));
            let rho = parse_state(state, &i)?;
            parsed!();
            t1 = Instant::now();
            let Ast::Program(s) = &p.ast else { unreachable!() };
            let out = run(&i, s, &rho, cli.opts.max_steps, cli.opts.eps).map_err(|e| sem_err(e, &[&p, &ifile]))?;
            let status = match out.status {
                RunStatus::Exact => "exact",
                RunStatus::Truncated => "truncated",
            };
            let _ = write!(
                report.text,
                "status: {status}\nsteps: {}\ntrace: {:.12}\nresidual: {:e}\noutput:\n{}",
                out.steps,
                out.output.trace(),
                out.residual,
                fmt_matrix(out.output.matrix())
            );
            report.result = json!({"status": status, "steps": out.steps, "trace": out.output.trace(), "residual": out.residual, "output": matrix_json(out.output.matrix())});
        }
        Cmd::Verify { triple, .. } => {
            let t = read_input(triple, Kind::Triple)?;
            add_input(&mut report, "triple", &t);
            parsed!();
            t1 = Instant::now();
            let Ast::Triple(tr) = &t.ast else { unreachable!() };
            let rep = triple_valid(&i, tr).map_err(|e| sem_err(e, &[&t, &ifile]))?;
            let _ = writeln!(
                report.text,
                "valid: {}\nranks: pre {} image {} post {}\nfixpoint iterations: {:?}",
                rep.valid, rep.pre_rank, rep.image_rank, rep.post_rank, rep.fixpoints
            );
            report.result = json!({"valid": rep.valid, "pre_rank": rep.pre_rank, "image_rank": rep.image_rank, "post_rank": rep.post_rank, "fixpoint_iterations": rep.fixpoints});
            if let Some(v) = &rep.witness {
                let _ = write!(report.text, "witness state (satisfies the precondition, output violates the postcondition):\n  {}\n", fmt_vec(v));
                report.witnesses.push(json!({"kind": "input_state", "vector": vec_json(v)}));
            }
            if !rep.valid {
                code = 1;
            }
        }
        Cmd::CheckProof { proof, cross_check, .. } => {
            let p = read_input(proof, Kind::Proof)?;
            report.inputs.insert("proof".into(), json!({"source": p.label, "steps": match &p.ast { Ast::Proof(s) => s.steps.len(), _ => 0 }}));
            parsed!();
            t1 = Instant::now();
            let Ast::Proof(script) = &p.ast else { unreachable!() };
            let rep = check_proof(&i, script, CheckOptions { cross_check: *cross_check });
            let mut steps = Vec::new();
            for s in &rep.steps {
                let (status, detail) = match &s.status {
                    StepStatus::Ok { confidence, modulo } => (
                        "ok",
                        format!("{}{}", format!("{confidence:?}").to_lowercase(), if *modulo { ", modulo theory" } else { "" }),
                    ),
                    StepStatus::Failed { error } => ("failed", error.to_string()),
                    StepStatus::Structural { message } => ("structural", message.clone()),
                    StepStatus::Skipped => ("skipped", String::new()),
                };
                let cc = match s.cross_check {
                    Some(true) => " [semantics: valid]",
                    Some(false) => " [semantics: INVALID]",
                    None => "",
                };
                let _ = writeln!(report.text, "  {:<8} {:<13} {status}{}{cc}", s.id, s.rule.to_string(), if detail.is_empty() { String::new() } else { format!(" ({detail})") });
                for n in &s.notes {
                    let _ = writeln!(report.text, "           note: {n}");
                }
                steps.push(json!({"id": s.id, "rule": s.rule.to_string(), "status": status, "detail": detail, "notes": s.notes, "cross_check": s.cross_check}));
            }
            let ok = rep.ok();
            let _ = writeln!(report.text, "proof: {}", if ok { "accepted" } else { "rejected" });
            if let Some(f) = rep.first_failure() {
                report.witnesses.push(json!({"kind": "failed_step", "id": f.id}));
            }
            report.result = json!({"accepted": ok, "confidence": format!("{:?}", rep.confidence()).to_lowercase(), "steps": steps});
            if !ok {
                code = 1;
            }
        }
        Cmd::Forall { vars, formula, .. } => {
            let f = read_input(formula, Kind::Formula)?;
            add_input(&mut report, "formula", &f);
            let qs: Vec<String> = vars.split_whitespace().map(str::to_owned).collect();
            report.inputs.insert("vars".into(), json!(qs));
            parsed!();
            t1 = Instant::now();
            let x = eval_subspace(&i, formula_of(&f)).map_err(|e| sem_err(e, &[&f, &ifile]))?;
            let tr = forall_closure_trace(&i, &qs, &x, Reading::Satisfaction).map_err(|e| sem_err(e, &[&f, &ifile]))?;
            let gens: Vec<String> = tr.generators.iter().map(|g| g.to_string()).collect();
            let _ = write!(
                report.text,
                "generators: {}\nranks: {:?}\niterations: {}\nresult rank: {}\nbasis:\n{}",
                gens.join(", "),
                tr.ranks,
                tr.iterations(),
                tr.result.rank(),
                fmt_basis(&tr.result)
            );
            report.result = json!({"generators": gens, "ranks": tr.ranks, "iterations": tr.iterations(), "rank": tr.result.rank(), "basis": basis_json(&tr.result)});
        }
    }
    report.eval_ms = t1.elapsed().as_secs_f64() * 1e3;
    Ok((report, code))
}

//! End-to-end acceptance checks. Run with
//! `cargo test -p bvn --test acceptance`; each criterion prints one line.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use bvn_core::formulas::{eval_subspace, forall_closure_trace, sat_probability, satisfies, Reading};
use bvn_core::hoare::{apply_rule, check_proof, triple_valid, CheckOptions, Params, Rule};
use bvn_core::interp::{gates, PredicateDef};
use bvn_core::linalg::{c, support};
use bvn_core::programs::{prog_image, prog_wlp, run};
use bvn_core::terms::{is_unitary_term, term_apply, term_distance, term_image, term_wlp};
use bvn_core::{
    sample, CMatrix, Declaration, Formula, HoareTriple, Interpretation, Judgment, Op, Program, StateDensity, Subspace,
    Term,
};
use common::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

type Check = Result<String, String>;

macro_rules! ensure {
    ($c:expr, $($m:tt)+) => {
        if !$c {
            return Err(format!($($m)+));
        }
    };
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn bvn(args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_bvn")).args(args).output().expect("bvn runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into_owned())
}

fn eq(a: &Subspace, b: &Subspace) -> bool {
    a.equals(b, &tol()).unwrap()
}

const DIMS: [usize; 5] = [2, 3, 4, 8, 16];

fn lattice_laws() -> Check {
    let t = tol();
    let mut r = rng(1);
    let n = 1000;
    for k in 0..n {
        let d = DIMS[k % DIMS.len()];
        let a = sample::any_subspace(d, &mut r, &t);
        let b = sample::any_subspace(d, &mut r, &t);
        let c3 = sample::any_subspace(d, &mut r, &t);
        let na = a.ortho(&t);
        ensure!(a.meet(&na, &t).unwrap().is_zero(), "contradiction fails in dim {d}");
        ensure!(a.join(&na, &t).unwrap().is_full(), "excluded middle fails in dim {d}");
        ensure!(sub_eq(&a.meet(&b, &t).unwrap(), &meet_oracle(&[a.basis().clone(), b.basis().clone()])), "meet differs from the kernel oracle");
        ensure!(sub_eq(&a.join(&b, &t).unwrap(), &join_oracle(&[a.basis().clone(), b.basis().clone()])), "join differs from the span oracle");
        // a <= hi.
        let hi = a.join(&b, &t).unwrap();
        ensure!(eq(&hi, &a.join(&na.meet(&hi, &t).unwrap(), &t).unwrap()), "orthomodularity fails in dim {d}");
        let cc = a.join(&c3, &t).unwrap();
        let lhs = a.join(&b.meet(&cc, &t).unwrap(), &t).unwrap();
        let rhs = a.join(&b, &t).unwrap().meet(&cc, &t).unwrap();
        ensure!(eq(&lhs, &rhs), "modularity fails in dim {d}");
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = Subspace::span(&CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]), &t);
    let x = Subspace::span(&CMatrix::from_column_slice(2, 1, &[c(s, 0.0), c(s, 0.0)]), &t);
    let y = Subspace::span(&CMatrix::from_column_slice(2, 1, &[c(s, 0.0), c(0.0, s)]), &t);
    let lhs = z.meet(&x.join(&y, &t).unwrap(), &t).unwrap();
    let rhs = z.meet(&x, &t).unwrap().join(&z.meet(&y, &t).unwrap(), &t).unwrap();
    ensure!(eq(&lhs, &z) && rhs.is_zero(), "distributivity counterexample not detected");
    Ok(format!("{n} random triples in dims {DIMS:?}; Z/(X v Y) counterexample detected"))
}

fn random_state(r: &mut ChaCha8Rng, n: usize, inside: Option<&Subspace>) -> StateDensity {
    match inside {
        Some(x) if !x.is_zero() => sample::state_in(x, r),
        _ => {
            let rank = r.random_range(1..=n);
            sample::state(n, rank, r)
        }
    }
}

fn duality() -> Check {
    let t = tol();
    let mut r = rng(2);
    let n_inst = 500;
    let (mut yes, mut no) = (0, 0);
    for k in 0..n_inst {
        let d = DIMS[k % DIMS.len()];
        let scale = if r.random_bool(0.3) { r.random_range(0.3..1.0) } else { 1.0 };
        let nk = r.random_range(1..=3);
        let e = sample::channel(d, d, nk, scale, &mut r, &t).unwrap();
        let rank = r.random_range(0..=d);
        let y = sample::subspace(d, rank, &mut r, &t);
        let w = e.wlp(&y, &t).unwrap();
        ensure!(sub_eq(&w, &wlp_oracle(e.kraus(), y.basis())), "channel wlp differs from the oracle in dim {d}");
        let inside = r.random_bool(0.5);
        let rho = random_state(&mut r, d, if inside { Some(&w) } else { None });
        let lhs = w.includes(&support(&rho, &t), &t).unwrap();
        let out = e.apply(&rho).unwrap();
        let rhs = out.trace() < t.num || y.includes(&support(&out, &t), &t).unwrap();
        ensure!(lhs == rhs, "channel duality fails in dim {d}: wlp says {lhs}, forward says {rhs}");
        if lhs { yes += 1 } else { no += 1 }
    }
    let mut terms = 0;
    let mut unitary = 0;
    while terms < n_inst {
        let layout = LAYOUTS[r.random_range(0..LAYOUTS.len())];
        let w = World::random(&mut r, layout, vec![]);
        let n = w.total();
        for _ in 0..10 {
            let unitary_only = r.random_bool(0.4);
            let tm = w.term(&mut r, 3, unitary_only);
            let y = sample::any_subspace(n, &mut r, &t);
            let x = term_wlp(&w.i, &tm, &y).unwrap();
            ensure!(sub_eq(&x, &wlp_oracle(&w.kraus(&tm), y.basis())), "term wlp differs from the oracle for `{tm}`");
            let inside = r.random_bool(0.5);
            let rho = random_state(&mut r, n, if inside { Some(&x) } else { None });
            let lhs = x.includes(&support(&rho, &t), &t).unwrap();
            let out = term_apply(&w.i, &tm, &rho).unwrap();
            let rhs = out.trace() < t.num || y.includes(&support(&out, &t), &t).unwrap();
            ensure!(lhs == rhs, "term duality fails for `{tm}`");
            if is_unitary_term(&w.i, &tm).unwrap() {
                ensure!(eq(&term_image(&w.i, &tm, &y).unwrap(), &x), "wlp and Heisenberg image differ for unitary `{tm}`");
                unitary += 1;
            }
            terms += 1;
        }
    }
    ensure!(yes > 50 && no > 50, "degenerate sample: {yes} members, {no} non-members");
    Ok(format!("{n_inst} channel triples ({yes} in / {no} out), {terms} term triples, {unitary} unitary coincidences"))
}

fn example_one() -> Check {
    let mut lines = Vec::new();
    for f in ["beta.qlf", "beta_joint.qlf"] {
        let (code, out) = bvn(&["sat", "-i", &fixture("ex1.bvn"), "--state", "|00>", "--formula", &fixture(f)]);
        ensure!(code == 0 && out.contains("satisfied: true"), "`bvn sat` on {f} exited {code}:\n{out}");
        lines.push(f);
    }
    // Cross-check in the library against a hand evaluation of the body.
    let decls = bvn::parse_interp(&std::fs::read_to_string(fixture("ex1.bvn")).unwrap()).map_err(|e| e.to_string())?;
    let i = Interpretation::build(decls, tol()).map_err(|e| e.to_string())?;
    let body = bvn::parse_formula("(P0(q1) /\\ P(q1,q2)) -> P(Z(q1) H(q2) C(q1,q2) Y(q1) H(q2))").unwrap();
    ensure!(eval_subspace(&i, &body).unwrap().is_full(), "the quantified body is not valid");
    let nested = bvn::parse_formula(&std::fs::read_to_string(fixture("beta.qlf")).unwrap()).unwrap();
    let joint = bvn::parse_formula(&std::fs::read_to_string(fixture("beta_joint.qlf")).unwrap()).unwrap();
    ensure!(matches!(&nested, Formula::Forall(q, _) if q.len() == 1), "beta.qlf is not nested");
    ensure!(matches!(&joint, Formula::Forall(q, _) if q.len() == 2), "beta_joint.qlf is not joint");
    let zz = pure(&real_vec(&[1.0, 0.0, 0.0, 0.0]));
    ensure!(satisfies(&i, &zz, &nested).unwrap() && satisfies(&i, &zz, &joint).unwrap(), "library disagrees with the CLI");
    Ok(format!("`bvn sat` exits 0 on {}", lines.join(" and ")))
}

fn noisy_equivalence() -> Check {
    let (code, out) = bvn(&["term-eq", "-i", &fixture("noisy.bvn"), &fixture("t1.qt"), &fixture("t2.qt")]);
    ensure!(code == 0 && out.contains("equal: true"), "`bvn term-eq` exited {code}:\n{out}");
    let decls = bvn::parse_interp(&std::fs::read_to_string(fixture("noisy.bvn")).unwrap()).unwrap();
    let i = Interpretation::build(decls, tol()).unwrap();
    let t1 = bvn::parse_term(&std::fs::read_to_string(fixture("t1.qt")).unwrap()).unwrap();
    let t2 = bvn::parse_term(&std::fs::read_to_string(fixture("t2.qt")).unwrap()).unwrap();
    let d = term_distance(&i, &t1, &t2).unwrap();
    ensure!(d < 1e-9, "Choi distance {d:e}");
    // Independent Choi matrices from hand-composed Kraus operators.
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = gates::real(2, &[s, s, s, -s]);
    let (x, y, z, cx) = (gates::x(), gates::y(), gates::z(), gates::cnot());
    let id = CMatrix::identity(2, 2);
    let sc = |a: f64, m: &CMatrix| m * c(a, 0.0);
    let bf = [sc(0.7f64.sqrt(), &id), sc(0.3f64.sqrt(), &x)];
    let pf = [sc(0.8f64.sqrt(), &id), sc(0.2f64.sqrt(), &z)];
    let on1 = |m: &CMatrix| m.kronecker(&id);
    let on2 = |m: &CMatrix| id.kronecker(m);
    let mut ks = vec![CMatrix::identity(4, 4)];
    let mut then = |layer: Vec<CMatrix>| {
        ks = ks.iter().flat_map(|k| layer.iter().map(move |l| l * k)).collect();
    };
    then(vec![on1(&z)]);
    then(bf.iter().map(on1).collect());
    then(vec![on2(&h)]);
    then(vec![cx.clone()]);
    then(pf.iter().map(on2).collect());
    then(vec![on1(&y)]);
    then(vec![on2(&h)]);
    let choi = |ks: &[CMatrix]| {
        let mut m = CMatrix::zeros(16, 16);
        for k in ks {
            let v = CMatrix::from_iterator(16, 1, (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).map(|(a, b)| k[(b, a)]));
            m += &v * v.adjoint();
        }
        m
    };
    let want = choi(&ks);
    let lib = bvn_core::terms::term_channel(&i, &t2, &["q1".into(), "q2".into()]).unwrap();
    let dist = (lib.choi() - &want).norm();
    ensure!(dist < 1e-9, "library Choi matrix is {dist:e} from the hand composition");
    Ok(format!("`bvn term-eq` exits 0, Choi distance {d:.1e}, hand-composed oracle {dist:.1e}"))
}

/// Meet of the word-wise Heisenberg images of `x`, enumerating longer words
/// until the meet stops changing.
fn word_meet(gens: &[CMatrix], x: &CMatrix, cap: usize) -> (CMatrix, usize) {
    let n = x.nrows();
    let mut frontier = vec![CMatrix::identity(n, n)];
    let mut meet = x.clone();
    for len in 1..=cap {
        let mut next = Vec::new();
        let mut parts = vec![meet.clone()];
        for w in &frontier {
            for g in gens {
                let wg = g * w;
                parts.push(wg.adjoint() * x);
                next.push(wg);
            }
        }
        frontier = next;
        let m = meet_oracle(&parts);
        if m.ncols() == meet.ncols() {
            return (m, len);
        }
        meet = m;
    }
    (meet, cap)
}

fn quantifier_fixpoint() -> Check {
    let t = tol();
    let mut r = rng(5);
    let mut general = 0;
    let mut max_iter = 0;
    while general < 200 {
        let layout = LAYOUTS[r.random_range(0..LAYOUTS.len())];
        let w = World::random(&mut r, layout, vec![]);
        let n = w.total();
        let qpos: Vec<usize> = w.everything().into_iter().filter(|_| r.random_bool(0.6)).collect();
        if qpos.is_empty() {
            continue;
        }
        let qs: Vec<String> = qpos.iter().map(|&p| w.names[p].clone()).collect();
        let x = sample::any_subspace(n, &mut r, &t);
        let tr = forall_closure_trace(&w.i, &qs, &x, Reading::Satisfaction).unwrap();
        ensure!(tr.iterations() <= n + 1, "{} iterations in dim {n}", tr.iterations());
        ensure!(sub_eq(&tr.result, &w.closure_oracle(&qpos, x.basis().clone())), "closure differs from the projector oracle");
        max_iter = max_iter.max(tr.iterations());
        general += 1;
    }
    let mut unitary = 0;
    let mut nontrivial = 0;
    while unitary < 200 {
        let layout: &[usize] = [&[2][..], &[3], &[4], &[2, 2]][unitary % 4];
        let names = ["a", "b"];
        let mut decls: Vec<Declaration> = layout.iter().enumerate().map(|(k, &d)| gates::var(names[k], d)).collect();
        let d = layout[0];
        let mut us = Vec::new();
        let count = r.random_range(1..=2);
        let cyclic = r.random_bool(0.5);
        for k in 0..count {
            let u = if k == 0 && cyclic { cycle(d) } else { sample::unitary(d, &mut r) };
            decls.push(gates::unitary(&format!("G{k}"), &[d], u.clone()));
            us.push(u);
        }
        decls.push(Declaration::Allowed { signature: vec![d], symbols: (0..count).map(|k| Op::Named(format!("G{k}"))).collect() });
        let i = Interpretation::build(decls, t).unwrap();
        let all: Vec<String> = names[..layout.len()].iter().map(|s| s.to_string()).collect();
        let n: usize = layout.iter().product();
        // Every generator placed on every variable.
        let mut gens = Vec::new();
        for p in 0..layout.len() {
            for u in &us {
                gens.push(global_op(u, layout, &[p]));
            }
        }
        let mut x = sample::any_subspace(n, &mut r, &t);
        if cyclic && count == 1 {
            // A product of shift eigenvectors is an invariant line, so the
            // closure of x joined with it is nontrivial.
            let line = layout.iter().map(|&d| fourier(d, r.random_range(0..d))).reduce(|a, b| a.kronecker(&b)).unwrap();
            let extra = if r.random_bool(0.5) { sample::any_subspace(n, &mut r, &t) } else { Subspace::zero(n) };
            x = Subspace::span(&line, &t).join(&extra, &t).unwrap();
        }
        let tr = forall_closure_trace(&i, &all, &x, Reading::Satisfaction).unwrap();
        ensure!(tr.iterations() <= n + 1, "{} iterations in dim {n}", tr.iterations());
        let (want, _) = word_meet(&gens, x.basis(), n + 2);
        ensure!(sub_eq(&tr.result, &want), "unitary closure differs from the word meet (dim {n})");
        if !tr.result.is_zero() && !tr.result.is_full() {
            nontrivial += 1;
        }
        unitary += 1;
    }
    Ok(format!("{general} general instances (max {max_iter} iterations), {unitary} unitary-only instances match the word meet ({nontrivial} nontrivial)"))
}

fn cycle(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for k in 0..d {
        m[((k + 1) % d, k)] = c(1.0, 0.0);
    }
    m
}

/// Eigenvector of `cycle(d)`: the m-th Fourier column.
fn fourier(d: usize, m: usize) -> CMatrix {
    let w = std::f64::consts::TAU * m as f64 / d as f64;
    CMatrix::from_fn(d, 1, |j, _| bvn_core::C64::from_polar(1.0 / (d as f64).sqrt(), w * j as f64))
}

fn program_semantics() -> Check {
    let t = tol();
    let mut r = rng(6);
    let mut n_prog = 0;
    while n_prog < 100 {
        let w = World::random(&mut r, &[2, 2], vec![]);
        for _ in 0..5 {
            let s = w.program(&mut r, 3, false);
            let ks = w.prog_kraus(&s);
            let x = sample::any_subspace(4, &mut r, &t);
            ensure!(sub_eq(&prog_image(&w.i, &s, &x).unwrap(), &image_oracle(&ks, x.basis())), "image differs for `{s}`");
            ensure!(sub_eq(&prog_wlp(&w.i, &s, &x).unwrap(), &wlp_oracle(&ks, x.basis())), "wlp differs for `{s}`");
            n_prog += 1;
        }
    }
    let decls = bvn::parse_interp(&std::fs::read_to_string(fixture("qubit.bvn")).unwrap()).unwrap();
    let i = Interpretation::build(decls, t).unwrap();
    let xl = bvn::parse_program("while M[q] = 1 do q := X(q) od").unwrap();
    let zero = Subspace::basis_line(2, 0);
    let one = Subspace::basis_line(2, 1);
    ensure!(prog_wlp(&i, &xl, &zero).unwrap().is_full(), "wlp of the X loop on |0> is not the whole space");
    ensure!(eq(&prog_image(&i, &xl, &one).unwrap(), &zero), "image of |1> under the X loop is not |0>");
    let hl = bvn::parse_program("while M[q] = 1 do q := H(q) od").unwrap();
    let out = run(&i, &hl, &pure(&real_vec(&[0.0, 1.0])), 10_000, 1e-15).unwrap();
    ensure!(out.residual < 1e-9, "H loop residual {:e}", out.residual);
    ensure!((out.output.matrix()[(0, 0)].re - 1.0).abs() < 1e-9, "H loop does not end in |0>");
    Ok(format!("{n_prog} loop-free programs match channel composition; X loop as derived; H loop residual {:.1e}", out.residual))
}

/// A random world plus predicates naming computed subspaces of the whole
/// space, so valid premises can be stated as formulas.
struct Scene {
    w: World,
    i: Interpretation,
    named: usize,
}

impl Scene {
    fn new(r: &mut ChaCha8Rng, layouts: &[&[usize]]) -> Scene {
        let layout = layouts[r.random_range(0..layouts.len())];
        let w = World::random(r, layout, vec![]);
        let i = w.i.clone();
        Scene { w, i, named: 0 }
    }

    fn name(&mut self, x: &Subspace) -> Formula {
        let name = format!("G{}", self.named);
        self.named += 1;
        let decl = Declaration::Predicate {
            name: name.clone(),
            signature: self.w.dims.clone(),
            def: PredicateDef::Matrix(x.basis().clone()),
        };
        self.i = self.i.extended(vec![decl]).unwrap();
        let vars: Vec<&str> = self.w.names.iter().map(String::as_str).collect();
        Formula::pred(&name, &vars)
    }

    fn ev(&self, f: &Formula) -> Subspace {
        eval_subspace(&self.i, f).unwrap()
    }

    fn any(&self, r: &mut ChaCha8Rng) -> Subspace {
        sample::any_subspace(self.w.total(), r, &tol())
    }

    /// A postcondition containing the image of `pre` under `s`.
    fn post_for(&mut self, r: &mut ChaCha8Rng, pre: &Formula, s: &Program) -> Formula {
        let img = prog_image(&self.i, s, &self.ev(pre)).unwrap();
        let pad = if r.random_bool(0.5) { Subspace::zero(img.dim()) } else { self.any(r) };
        let y = img.join(&pad, &tol()).unwrap();
        self.name(&y)
    }

    /// A precondition inside the wlp of `post` under `s`.
    fn pre_for(&mut self, r: &mut ChaCha8Rng, s: &Program, post: &Formula) -> Formula {
        let w = prog_wlp(&self.i, s, &self.ev(post)).unwrap();
        let cut = if r.random_bool(0.5) { Subspace::full(w.dim()) } else { self.any(r) };
        let x = w.meet(&cut, &tol()).unwrap();
        self.name(&x)
    }

    fn triple(&mut self, r: &mut ChaCha8Rng, s: &Program) -> HoareTriple {
        let pre = self.w.formula(r, 2);
        let post = self.post_for(r, &pre, s);
        HoareTriple::new(pre, s.clone(), post)
    }

    fn valid(&self, t: &HoareTriple) -> bool {
        triple_valid(&self.i, t).unwrap().valid
    }

    /// A proper subset of the variables and its complement.
    fn split(&self, r: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
        let n = self.w.dims.len();
        let k = r.random_range(1..n);
        let mut idx = self.w.everything();
        for j in (1..n).rev() {
            idx.swap(j, r.random_range(0..=j));
        }
        let (a, b) = idx.split_at(k);
        (a.to_vec(), b.to_vec())
    }
}

const MULTI: &[&[usize]] = &[&[2, 2], &[2, 3], &[3, 2], &[4, 2], &[2, 2, 2], &[2, 2, 3], &[2, 2, 2, 2]];

fn tr(t: HoareTriple) -> Judgment {
    Judgment::Triple(t)
}

/// Builds one valid-premise instance of `rule` and returns the premises, the
/// parameters and the stated conclusion, if the rule reads one.
type Instance = (Vec<Judgment>, Params, Option<Judgment>);

fn instance(rule: Rule, sc: &mut Scene, r: &mut ChaCha8Rng) -> Instance {
    let w_names = sc.w.names.clone();
    let p = Params::default();
    match rule {
        Rule::AxSk => (vec![], Params { delta: Some(sc.w.formula(r, 3)), ..p }, None),
        Rule::AxIn => {
            let q = w_names[r.random_range(0..w_names.len())].clone();
            let post = sc.w.formula(r, 3);
            let reset = Term::Basic { op: Op::Reset, vars: vec![q.clone()] };
            let stated = HoareTriple::new(Formula::adjoint(reset, post.clone()), Program::Init(q), post);
            (vec![], p, Some(tr(stated)))
        }
        Rule::AxUt => {
            let t = sc.w.term(r, 3, true);
            let post = sc.w.formula(r, 3);
            let stated = HoareTriple::new(Formula::adjoint(t.clone(), post.clone()), Program::Assign { vars: t.vars(), term: t }, post);
            (vec![], p, Some(tr(stated)))
        }
        Rule::RSc => {
            let s1 = sc.w.program(r, 2, true);
            let s2 = sc.w.program(r, 2, true);
            let a = sc.triple(r, &s1);
            let post = sc.post_for(r, &a.post, &s2);
            let b = HoareTriple::new(a.post.clone(), s2, post);
            (vec![tr(a), tr(b)], p, None)
        }
        Rule::RIf => {
            let k = r.random_range(0..w_names.len());
            let d = sc.w.dims[k];
            let branches: Vec<(String, Program)> = (0..d).map(|o| (o.to_string(), sc.w.program(r, 2, false))).collect();
            let post = sc.w.formula(r, 2);
            let meas = format!("M{d}");
            let vars = vec![w_names[k].clone()];
            let mut prems = Vec::new();
            let mut parts = Vec::new();
            for (label, s) in &branches {
                let pre = sc.pre_for(r, s, &post);
                parts.push(Formula::and(Formula::meas(&meas, label, &vars), pre.clone()));
                prems.push(tr(HoareTriple::new(pre, s.clone(), post.clone())));
            }
            let prog = Program::Case { meas, vars, branches };
            (prems, p, Some(tr(HoareTriple::new(Formula::or_all(parts), prog, post))))
        }
        Rule::RLp => {
            let qubits: Vec<usize> = sc.w.everything().into_iter().filter(|&k| sc.w.dims[k] == 2).collect();
            let k = qubits[r.random_range(0..qubits.len())];
            let vars = vec![w_names[k].clone()];
            let body = sc.w.program(r, 2, false);
            let gamma = sc.w.formula(r, 2);
            let m0 = Formula::meas("M2", "0", &vars);
            let m1 = Formula::meas("M2", "1", &vars);
            let (p0, p1, g) = (sc.ev(&m0), sc.ev(&m1), sc.ev(&gamma));
            let t = tol();
            let exit = p0.meet(&g, &t).unwrap();
            // Greatest invariant: X = wlp(body, (M0 /\ γ) \/ (M1 /\ X)).
            let mut x = Subspace::full(sc.w.total());
            loop {
                let post = exit.join(&p1.meet(&x, &t).unwrap(), &t).unwrap();
                let next = prog_wlp(&sc.i, &body, &post).unwrap().meet(&x, &t).unwrap();
                if eq(&next, &x) {
                    break;
                }
                x = next;
            }
            let beta = sc.name(&x);
            let post = Formula::or(Formula::and(m0, gamma), Formula::and(m1, beta.clone()));
            (vec![tr(HoareTriple::new(beta, body, post))], p, None)
        }
        Rule::RCon => {
            let s = sc.w.program(r, 2, true);
            let prem = sc.triple(r, &s);
            let t = tol();
            let cut = sc.any(r);
            let stronger = sc.ev(&prem.pre).meet(&cut, &t).unwrap();
            let pre = sc.name(&stronger);
            let pad = sc.any(r);
            let weaker = sc.ev(&prem.post).join(&pad, &t).unwrap();
            let post = sc.name(&weaker);
            let stated = HoareTriple::new(pre.clone(), s, post.clone());
            let prems = if r.random_bool(0.5) {
                vec![tr(prem)]
            } else {
                let before = Judgment::Sequent { hyps: vec![pre], concl: prem.pre.clone() };
                let after = Judgment::Sequent { hyps: vec![prem.post.clone()], concl: post };
                vec![before, tr(prem), after]
            };
            (prems, p, Some(tr(stated)))
        }
        Rule::Invariance => {
            let (inside, outside) = sc.split(r);
            let s = sc.w.program_within(r, 2, true, &inside);
            let prem = sc.triple(r, &s);
            let delta = sc.w.quantifier_free_within(r, 2, &outside);
            (vec![tr(prem)], Params { delta: Some(delta), ..p }, None)
        }
        Rule::Substitution => {
            let (inside, outside) = sc.split(r);
            let s = sc.w.program_within(r, 2, true, &inside);
            let prem = sc.triple(r, &s);
            let t = sc.w.term_within(r, 2, false, &outside);
            (vec![tr(prem)], Params { term: Some(t), ..p }, None)
        }
        Rule::Conjunction => {
            let s = sc.w.program(r, 2, true);
            let a = sc.triple(r, &s);
            let b = sc.triple(r, &s);
            (vec![tr(a), tr(b)], p, None)
        }
        Rule::Disjunction => {
            let s = sc.w.program(r, 2, true);
            let post = sc.w.formula(r, 2);
            let a = sc.pre_for(r, &s, &post);
            let b = sc.pre_for(r, &s, &post);
            (vec![tr(HoareTriple::new(a, s.clone(), post.clone())), tr(HoareTriple::new(b, s, post))], p, None)
        }
        Rule::ExistsIntro => {
            let (inside, outside) = sc.split(r);
            let s = sc.w.program_within(r, 2, false, &inside);
            // Bind a nonempty part of the untouched variables; γ avoids them.
            let cut = r.random_range(1..=outside.len());
            let (bound, free) = outside.split_at(cut);
            let mut keep = inside.clone();
            keep.extend_from_slice(free);
            let post = sc.w.quantifier_free_within(r, 2, &keep);
            let pre = sc.pre_for(r, &s, &post);
            let qs: Vec<String> = bound.iter().map(|&k| w_names[k].clone()).collect();
            (vec![tr(HoareTriple::new(pre, s, post))], Params { vars: Some(qs), ..p }, None)
        }
        Rule::Adaptation => {
            loop {
                let pv: Vec<usize> = sc.w.everything().into_iter().filter(|_| r.random_bool(0.6)).collect();
                let gens = allowed_unitaries(&sc.w, &pv);
                if gens.is_empty() {
                    continue;
                }
                let len = r.random_range(1..=3);
                let parts: Vec<Term> = (0..len).map(|_| gens[r.random_range(0..gens.len())].clone()).collect();
                let witness = Term::seq_all(parts).unwrap();
                let s = Program::Assign { vars: witness.vars(), term: witness.clone() };
                let prem = sc.triple(r, &s);
                let others: Vec<usize> = sc.w.everything().into_iter().filter(|k| r.random_bool(0.5) || pv.contains(k)).collect();
                let delta = sc.w.quantifier_free_within(r, 2, &others);
                let ps: Vec<String> = pv.iter().map(|&k| w_names[k].clone()).collect();
                return (vec![tr(prem)], Params { vars: Some(ps), delta: Some(delta), term: Some(witness), trials: 8, ..p }, None);
            }
        }
        _ => unreachable!(),
    }
}

/// Allowed unitary basics placed on injective tuples inside `within`.
fn allowed_unitaries(w: &World, within: &[usize]) -> Vec<Term> {
    let mut out = Vec::new();
    for (sig, syms) in &w.allowed {
        let mut tuples: Vec<Vec<usize>> = vec![vec![]];
        for &d in sig {
            tuples = tuples
                .iter()
                .flat_map(|t| {
                    within.iter().filter(|&&q| w.dims[q] == d && !t.contains(&q)).map(move |&q| {
                        let mut t2 = t.clone();
                        t2.push(q);
                        t2
                    })
                })
                .collect();
        }
        for t in &tuples {
            for s in syms {
                if w.ops.iter().any(|o| &o.0 == s && o.3) {
                    let vars: Vec<&str> = t.iter().map(|&k| w.names[k].as_str()).collect();
                    out.push(Term::named(s, &vars));
                }
            }
        }
    }
    out
}

fn rule_soundness() -> Check {
    let construct = [Rule::AxSk, Rule::AxIn, Rule::AxUt, Rule::RSc, Rule::RIf, Rule::RLp, Rule::RCon];
    let adaptation = [Rule::Invariance, Rule::Substitution, Rule::Conjunction, Rule::Disjunction, Rule::ExistsIntro, Rule::Adaptation];
    let mut r = rng(7);
    let per_rule = 100;
    let mut summary = Vec::new();
    for rule in construct.into_iter().chain(adaptation) {
        let layouts: &[&[usize]] = match rule {
            Rule::Invariance | Rule::Substitution | Rule::ExistsIntro => MULTI,
            Rule::RLp => &LAYOUTS[2..],
            _ => LAYOUTS,
        };
        let mut done = 0;
        while done < per_rule {
            let mut sc = Scene::new(&mut r, layouts);
            if rule == Rule::Adaptation && allowed_unitaries(&sc.w, &sc.w.everything()).is_empty() {
                continue;
            }
            let (prems, params, stated) = instance(rule, &mut sc, &mut r);
            for (k, j) in prems.iter().enumerate() {
                if let Judgment::Triple(t) = j {
                    ensure!(sc.valid(t), "{rule}: generated premise {} is invalid: {t}", k + 1);
                }
            }
            let d = apply_rule(&sc.i, rule, &prems, &params, stated.as_ref())
                .map_err(|e| format!("{rule} rejected a valid-premise instance: {e}\npremises: {prems:?}"))?;
            let Judgment::Triple(concl) = &d.judgment else {
                return Err(format!("{rule} did not conclude a triple"));
            };
            ensure!(sc.valid(concl), "{rule}: counterexample conclusion {concl}");
            done += 1;
        }
        summary.push(format!("{rule}"));
    }
    Ok(format!("{per_rule} instances each for {}; zero counterexamples", summary.join(", ")))
}

fn hadamard_twice() -> Check {
    let text = std::fs::read_to_string(fixture("qubit.bvn")).unwrap();
    let i = Interpretation::build(bvn::parse_interp(&text).unwrap(), tol()).unwrap();
    let preds = ["Zero", "One", "Plus", "Y0", "Tilted"];
    for x in preds {
        let script = format!(
            "step a : {{{x}(q)}} q := H(q) {{adj<H(q)>({x}(q))}} by Ax.UT\n\
             step b : {{adj<H(q)>({x}(q))}} q := H(q) {{{x}(q)}} by Ax.UT\n\
             step c : {{{x}(q)}} q := H(q); q := H(q) {{{x}(q)}} by R.SC from a, b\n"
        );
        let proof = bvn::parse_proof(&script).map_err(|e| e.to_string())?;
        ensure!(proof.steps.len() == 3, "script for {x} has {} steps", proof.steps.len());
        let rep = check_proof(&i, &proof, CheckOptions { cross_check: true });
        ensure!(rep.ok(), "check_proof rejects the script for {x}: {:?}", rep.first_failure());
        let t = bvn::parse_triple(&format!("{{{x}(q)}} q := H(q); q := H(q) {{{x}(q)}}")).unwrap();
        ensure!(triple_valid(&i, &t).unwrap().valid, "triple_valid rejects the triple for {x}");
        let (code, out) = bvn(&["check-proof", "-i", &fixture("qubit.bvn"), &script]);
        ensure!(code == 0, "`bvn check-proof` exits {code} for {x}:\n{out}");
    }
    Ok(format!("3-step script accepted by check_proof, triple_valid and the CLI for X in {preds:?}"))
}

fn assertion_encoding() -> Check {
    let t = tol();
    let mut r = rng(9);
    let u = sample::unitary(8, &mut r);
    let sig = [2usize, 2, 2];
    let psi: Vec<Declaration> = (0..8)
        .map(|k| bvn_core::formulas::span_predicate(&format!("Psi{k}"), &sig, vec![u.column(k).iter().copied().collect()]))
        .collect();
    let w = World::random(&mut r, &sig, psi);
    let lit = |k: usize| Formula::pred(&format!("Psi{k}"), &["a", "b", "c"]);
    let neg = eval_subspace(&w.i, &Formula::not(lit(0))).unwrap();
    ensure!(sub_eq(&neg, &u.columns(1, 7).into_owned()), "~[psi0] is not span{{psi1..psi7}}");
    ensure!(eq(&neg, &eval_subspace(&w.i, &Formula::or_all((1..8).map(lit).collect())).unwrap()), "~[psi0] differs from [psi1..psi7]");
    let (mut agree_true, mut agree_false) = (0, 0);
    for n in 0..60 {
        let s = w.program(&mut r, 3, true);
        let idx: Vec<usize> = (0..8).filter(|_| r.random_bool(0.4)).collect();
        let idx = if idx.is_empty() { vec![r.random_range(0..8)] } else { idx };
        let x = Subspace::span(&CMatrix::from_columns(&idx.iter().map(|&k| u.column(k)).collect::<Vec<_>>()), &t);
        let y = if n % 2 == 0 {
            prog_image(&w.i, &s, &x).unwrap().join(&sample::any_subspace(8, &mut r, &t), &t).unwrap()
        } else {
            sample::any_subspace(8, &mut r, &t)
        };
        let i = w.i.extended(vec![Declaration::Predicate { name: "Y".into(), signature: sig.to_vec(), def: PredicateDef::Matrix(y.basis().clone()) }]).unwrap();
        let post = Formula::pred("Y", &["a", "b", "c"]);
        let each: Vec<HoareTriple> = idx.iter().map(|&k| HoareTriple::new(lit(k), s.clone(), post.clone())).collect();
        let all = each.iter().all(|h| triple_valid(&i, h).unwrap().valid);
        let joined = HoareTriple::new(Formula::or_all(idx.iter().map(|&k| lit(k)).collect()), s.clone(), post.clone());
        let whole = triple_valid(&i, &joined).unwrap().valid;
        ensure!(all == whole, "decomposition disagrees on `{s}`: parts {all}, whole {whole}");
        if all {
            let mut acc = Judgment::Triple(each[0].clone());
            for h in &each[1..] {
                acc = apply_rule(&i, Rule::Disjunction, &[acc, Judgment::Triple(h.clone())], &Params::default(), None)
                    .map_err(|e| e.to_string())?
                    .judgment;
            }
            let Judgment::Triple(d) = &acc else { unreachable!() };
            ensure!(eq(&eval_subspace(&i, &d.pre).unwrap(), &x) && triple_valid(&i, d).unwrap().valid, "derived disjunction is wrong");
            agree_true += 1;
        } else {
            agree_false += 1;
        }
    }
    ensure!(agree_true >= 10 && agree_false >= 10, "degenerate sample: {agree_true} valid, {agree_false} invalid");
    Ok(format!("~[psi0] = span{{psi1..psi7}} in dim 8; decomposition agrees on 60 programs ({agree_true} valid, {agree_false} invalid)"))
}

fn satisfaction_structure() -> Check {
    let t = tol();
    let mut r = rng(10);
    let mut inst = 0;
    let mut sat_seen = 0;
    while inst < 500 {
        let layout = LAYOUTS[r.random_range(0..LAYOUTS.len())];
        let w = World::random(&mut r, layout, vec![]);
        let n = w.total();
        for _ in 0..10 {
            let b = w.formula(&mut r, 3);
            let x = eval_subspace(&w.i, &b).unwrap();
            ensure!(sub_eq(&x, &w.eval_oracle(&b)), "formula value differs from the oracle for `{b}`");
            let proj = x.projector();
            let inside = r.random_bool(0.5);
            let rho = random_state(&mut r, n, if inside { Some(&x) } else { None });
            let p = sat_probability(&w.i, &rho, &b).unwrap();
            let born = (&proj * rho.matrix()).trace().re / rho.trace();
            ensure!((-1e-12..=1.0 + 1e-12).contains(&p), "probability {p} outside [0,1]");
            ensure!((p - born).abs() < 1e-9, "probability {p} differs from tr(P rho) = {born}");
            let s = satisfies(&w.i, &rho, &b).unwrap();
            ensure!(s == x.includes(&support(&rho, &t), &t).unwrap(), "satisfaction is not support inclusion");
            if s {
                ensure!((p - 1.0).abs() < 1e-9, "satisfying state has probability {p}");
                sat_seen += 1;
                // Monotonicity: a state supported inside supp(rho).
                let sub = sample::state_in(&support(&rho, &t), &mut r);
                ensure!(satisfies(&w.i, &sub, &b).unwrap(), "monotonicity fails for `{b}`");
            } else {
                ensure!(p < 1.0, "violating state has probability {p}");
            }
            if !x.is_zero() {
                // Convex combinations and limits of satisfying states.
                let parts: Vec<(f64, StateDensity)> = (0..3).map(|_| (r.random_range(0.1..1.0), sample::state_in(&x, &mut r))).collect();
                let total: f64 = parts.iter().map(|p| p.0).sum();
                let parts: Vec<(f64, StateDensity)> = parts.into_iter().map(|(p, s)| (p / total, s)).collect();
                let mix = StateDensity::mixture(&parts, &t).unwrap();
                ensure!(satisfies(&w.i, &mix, &b).unwrap(), "convexity fails for `{b}`");
                let a = sample::state_in(&x, &mut r);
                let z = sample::state_in(&x, &mut r);
                let mut last = a.clone();
                for k in 1..=20 {
                    let eps = 0.5f64.powi(k);
                    last = StateDensity::mixture(&[(1.0 - eps, a.clone()), (eps, z.clone())], &t).unwrap();
                    ensure!(satisfies(&w.i, &last, &b).unwrap(), "sequence member {k} fails");
                }
                let dist = bvn_core::linalg::trace_distance(&last, &a);
                ensure!(dist < 1e-5 && satisfies(&w.i, &a, &b).unwrap(), "limit state fails");
            }
            inst += 1;
        }
    }
    ensure!(sat_seen > 100, "only {sat_seen} satisfying instances");
    Ok(format!("{inst} instances ({sat_seen} satisfying); convexity, monotonicity, limits and Born probability hold"))
}

type Criterion = fn() -> Check;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("lattice laws", lattice_laws),
        ("Schrodinger-Heisenberg duality", duality),
        ("two-qubit example at |00>", example_one),
        ("noisy circuit factorizations", noisy_equivalence),
        ("quantifier fixpoint", quantifier_fixpoint),
        ("program semantics oracle", program_semantics),
        ("rule soundness", rule_soundness),
        ("HH = I proof", hadamard_twice),
        ("runtime-assertion encoding", assertion_encoding),
        ("satisfaction structure", satisfaction_structure),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = (k + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("PASS  {id:>2} {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {id:>2} {name}: {msg} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Independent oracles: dense global operators built by index arithmetic and
//! supports taken straight from an eigendecomposition.
#![allow(dead_code)]

use bvn_core::linalg::c;
use bvn_core::{CMatrix, StateDensity, Subspace, Tolerances, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tol() -> Tolerances {
    Tolerances::default()
}

fn digits(mut i: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = i % dims[k];
        i /= dims[k];
    }
    out
}

fn number(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
}

/// `K` acting on the factors `pos` (in that order) of the layout `dims`.
pub fn global_op(k: &CMatrix, dims: &[usize], pos: &[usize]) -> CMatrix {
    let n: usize = dims.iter().product();
    let local: Vec<usize> = pos.iter().map(|&p| dims[p]).collect();
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        let di = digits(i, dims);
        for j in 0..n {
            let dj = digits(j, dims);
            let rest_same = (0..dims.len()).all(|f| pos.contains(&f) || di[f] == dj[f]);
            if !rest_same {
                continue;
            }
            let li: Vec<usize> = pos.iter().map(|&p| di[p]).collect();
            let lj: Vec<usize> = pos.iter().map(|&p| dj[p]).collect();
            g[(i, j)] = k[(number(&li, &local), number(&lj, &local))];
        }
    }
    g
}

pub fn apply_kraus(ks: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let n = ks[0].nrows();
    let mut out = CMatrix::zeros(n, n);
    for k in ks {
        out += k * rho * k.adjoint();
    }
    out
}

/// Orthonormal basis of the support of a positive matrix.
pub fn support_basis(m: &CMatrix) -> CMatrix {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    let cols: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > 1e-9 * top)
        .collect();
    let mut b = CMatrix::zeros(m.nrows(), cols.len());
    for (j, &i) in cols.iter().enumerate() {
        b.set_column(j, &eig.eigenvectors.column(i));
    }
    b
}

pub fn projector_of(basis: &CMatrix) -> CMatrix {
    basis * basis.adjoint()
}

/// `‖(I - P_y) P_x‖` small, computed without the library.
pub fn contained(x: &CMatrix, y_basis: &CMatrix) -> bool {
    let p = projector_of(y_basis);
    let n = x.nrows();
    let r = (CMatrix::identity(n, n) - p) * x;
    r.iter().all(|z| z.norm() < 1e-6)
}

pub fn dim_of(basis: &CMatrix) -> usize {
    basis.ncols()
}

/// Image of `span(x)` under the Kraus family, as an explicit basis.
pub fn image_oracle(ks: &[CMatrix], x: &CMatrix) -> CMatrix {
    let p = x * x.adjoint();
    support_basis(&apply_kraus(ks, &p))
}

/// Brute-force wlp: `v ∈ wlp` iff every `K v` lies in `y`. The set of such `v`
/// is the kernel of the stacked `(I - P_y) K`.
pub fn wlp_oracle(ks: &[CMatrix], y: &CMatrix) -> CMatrix {
    let n = ks[0].ncols();
    let q = CMatrix::identity(ks[0].nrows(), ks[0].nrows()) - projector_of(y);
    let mut g = CMatrix::zeros(n, n);
    for k in ks {
        let a = &q * k;
        g += a.adjoint() * a;
    }
    let eig = ((&g + g.adjoint()) * c(0.5, 0.0)).symmetric_eigen();
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() < 1e-9).collect();
    let mut b = CMatrix::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        b.set_column(j, &eig.eigenvectors.column(i));
    }
    b
}

pub fn same_space(a: &CMatrix, b: &CMatrix) -> bool {
    a.ncols() == b.ncols() && contained(a, b) && contained(b, a)
}

pub fn sub_eq(x: &Subspace, basis: &CMatrix) -> bool {
    same_space(x.basis(), basis)
}

pub fn pure(v: &CMatrix) -> StateDensity {
    StateDensity::pure(v).unwrap()
}

pub fn real_vec(xs: &[f64]) -> CMatrix {
    let v: Vec<C64> = xs.iter().map(|&x| c(x, 0.0)).collect();
    CMatrix::from_column_slice(v.len(), 1, &v)
}

use bvn_core::interp::gates;
use bvn_core::{Declaration, Interpretation, Op, Term};
use rand::Rng;

/// A random interpretation together with the raw matrices behind every
/// symbol, so oracles never consult the library's bindings.
pub struct World {
    pub i: Interpretation,
    pub names: Vec<String>,
    pub dims: Vec<usize>,
    /// `(symbol, signature, kraus, unitary)`.
    pub ops: Vec<(String, Vec<usize>, Vec<CMatrix>, bool)>,
    /// `(predicate, signature, local basis)`.
    pub preds: Vec<(String, Vec<usize>, CMatrix)>,
    /// Allowed symbols per signature.
    pub allowed: Vec<(Vec<usize>, Vec<String>)>,
}

pub const LAYOUTS: &[&[usize]] = &[&[2], &[3], &[2, 2], &[2, 3], &[3, 2], &[4, 2], &[2, 2, 2], &[2, 2, 3], &[2, 2, 2, 2]];

impl World {
    pub fn random(r: &mut ChaCha8Rng, layout: &[usize], extra: Vec<Declaration>) -> World {
        let t = tol();
        let names: Vec<String> = (0..layout.len()).map(|k| ["a", "b", "c", "d"][k].to_string()).collect();
        let mut decls: Vec<Declaration> = names.iter().zip(layout).map(|(n, &d)| gates::var(n, d)).collect();
        let mut ops = Vec::new();
        let mut sigs: Vec<Vec<usize>> = Vec::new();
        for &d in layout {
            if !sigs.contains(&vec![d]) {
                sigs.push(vec![d]);
            }
        }
        for a in 0..layout.len() {
            for b in 0..layout.len() {
                let s = vec![layout[a], layout[b]];
                if a != b && !sigs.contains(&s) {
                    sigs.push(s);
                }
            }
        }
        for (k, sig) in sigs.iter().enumerate() {
            let n: usize = sig.iter().product();
            for j in 0..2 {
                let name = format!("U{k}_{j}");
                let u = bvn_core::sample::unitary(n, r);
                decls.push(gates::unitary(&name, sig, u.clone()));
                ops.push((name, sig.clone(), vec![u], true));
            }
            let name = format!("N{k}");
            let scale = if r.random_bool(0.3) { r.random_range(0.4..1.0) } else { 1.0 };
            let ch = bvn_core::sample::channel(n, n, r.random_range(1..=3), scale, r, &t).unwrap();
            let ks = ch.kraus().to_vec();
            decls.push(Declaration::Channel {
                name: name.clone(),
                signature: sig.clone(),
                kraus: ks.clone(),
            });
            ops.push((name, sig.clone(), ks, false));
        }
        let mut preds = Vec::new();
        let mut allowed = Vec::new();
        for (k, sig) in sigs.iter().enumerate() {
            let n: usize = sig.iter().product();
            for j in 0..2 {
                let name = format!("P{k}_{j}");
                let rank = r.random_range(0..=n);
                let b = bvn_core::sample::subspace(n, rank, r, &t).basis().clone();
                decls.push(Declaration::Predicate {
                    name: name.clone(),
                    signature: sig.clone(),
                    def: bvn_core::interp::PredicateDef::Matrix(b.clone()),
                });
                preds.push((name, sig.clone(), b));
            }
            let mut syms: Vec<String> = ops
                .iter()
                .filter(|o| &o.1 == sig && (o.3 || r.random_bool(0.3)) && r.random_bool(0.6))
                .map(|o| o.0.clone())
                .collect();
            if sig.len() == 1 && syms.is_empty() {
                syms.push(format!("U{k}_0"));
            }
            if !syms.is_empty() {
                decls.push(Declaration::Allowed {
                    signature: sig.clone(),
                    symbols: syms.iter().map(|x| Op::Named(x.clone())).collect(),
                });
                allowed.push((sig.clone(), syms));
            }
        }
        for &d in layout {
            let name = format!("M{d}");
            if !decls.iter().any(|x| matches!(x, Declaration::Measurement { name: m, .. } if *m == name)) {
                decls.push(gates::computational(&name, d));
            }
        }
        decls.extend(extra);
        let i = Interpretation::build(decls, t).unwrap();
        World { i, names, dims: layout.to_vec(), ops, preds, allowed }
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    fn tuple(&self, sig: &[usize], r: &mut ChaCha8Rng, within: &[usize]) -> Option<Vec<usize>> {
        let mut out = Vec::new();
        for &d in sig {
            let cands: Vec<usize> = within.iter().copied().filter(|&p| self.dims[p] == d && !out.contains(&p)).collect();
            if cands.is_empty() {
                return None;
            }
            out.push(cands[r.random_range(0..cands.len())]);
        }
        Some(out)
    }

    /// A random basic term on factors drawn from `within`.
    pub fn basic(&self, r: &mut ChaCha8Rng, unitary_only: bool, within: &[usize]) -> Term {
        for _ in 0..50 {
            let (name, sig, _, u) = &self.ops[r.random_range(0..self.ops.len())];
            if unitary_only && !u {
                continue;
            }
            if let Some(pos) = self.tuple(sig, r, within) {
                let vars: Vec<String> = pos.iter().map(|&p| self.names[p].clone()).collect();
                let op = if *u && r.random_bool(0.2) { Op::Inverse(name.clone()) } else { Op::Named(name.clone()) };
                return Term::Basic { op, vars };
            }
        }
        let p = within[r.random_range(0..within.len())];
        Term::identity_on(vec![self.names[p].clone()])
    }

    pub fn term(&self, r: &mut ChaCha8Rng, depth: usize, unitary_only: bool) -> Term {
        let all: Vec<usize> = (0..self.dims.len()).collect();
        self.term_within(r, depth, unitary_only, &all)
    }

    pub fn term_within(&self, r: &mut ChaCha8Rng, depth: usize, unitary_only: bool, within: &[usize]) -> Term {
        if depth == 0 {
            return self.basic(r, unitary_only, within);
        }
        match r.random_range(0..10) {
            0..=3 => self.basic(r, unitary_only, within),
            4..=6 => Term::seq(
                self.term_within(r, depth - 1, unitary_only, within),
                self.term_within(r, depth - 1, unitary_only, within),
            ),
            7 if !unitary_only => {
                let p = r.random_range(0.1..0.9);
                let q = if r.random_bool(0.3) { r.random_range(0.0..(1.0 - p)) } else { 1.0 - p };
                let a = self.term_within(r, depth - 1, unitary_only, within);
                let b = self.term_within(r, depth - 1, unitary_only, within);
                let (a, b) = (self.pad(a.clone(), &b), self.pad(b.clone(), &a));
                Term::ProbSum(vec![(p, a), (q, b)])
            }
            _ => {
                let a = self.term_within(r, depth - 1, unitary_only, within);
                let used: Vec<usize> = a.vars().iter().map(|v| self.names.iter().position(|n| n == v).unwrap()).collect();
                let rest: Vec<usize> = within.iter().copied().filter(|p| !used.contains(p)).collect();
                if rest.is_empty() {
                    a
                } else {
                    Term::tensor(a, self.term_within(r, depth - 1, unitary_only, &rest))
                }
            }
        }
    }

    /// Tensor `t` with the identity on the variables of `other` it lacks.
    pub fn pad(&self, t: Term, other: &Term) -> Term {
        let have = t.vars();
        let missing: Vec<String> = other.vars().into_iter().filter(|v| !have.contains(v)).collect();
        if missing.is_empty() {
            t
        } else {
            Term::tensor(t, Term::identity_on(missing))
        }
    }

    fn local_kraus(&self, op: &Op, vars: &[String]) -> Vec<CMatrix> {
        let n: usize = vars.iter().map(|v| self.dims[self.pos(v)]).product();
        match op {
            Op::Named(s) => self.ops.iter().find(|o| &o.0 == s).unwrap().2.clone(),
            Op::Inverse(s) => vec![self.ops.iter().find(|o| &o.0 == s).unwrap().2[0].adjoint()],
            Op::Identity => vec![CMatrix::identity(n, n)],
            Op::Reset => (0..n)
                .map(|k| {
                    let mut m = CMatrix::zeros(n, n);
                    m[(0, k)] = c(1.0, 0.0);
                    m
                })
                .collect(),
            Op::Outcome { outcome, .. } => {
                let k: usize = outcome.parse().unwrap();
                let mut m = CMatrix::zeros(n, n);
                m[(k, k)] = c(1.0, 0.0);
                vec![m]
            }
        }
    }

    pub fn pos(&self, v: &str) -> usize {
        self.names.iter().position(|n| n == v).unwrap()
    }

    /// Global Kraus family of a term, composed by hand.
    pub fn kraus(&self, t: &Term) -> Vec<CMatrix> {
        let n = self.total();
        match t {
            Term::Basic { op, vars } => {
                if vars.is_empty() {
                    return vec![CMatrix::identity(n, n)];
                }
                let pos: Vec<usize> = vars.iter().map(|v| self.pos(v)).collect();
                self.local_kraus(op, vars).iter().map(|k| global_op(k, &self.dims, &pos)).collect()
            }
            Term::Seq(a, b) | Term::Tensor(a, b) => {
                let ka = self.kraus(a);
                let kb = self.kraus(b);
                let mut out = Vec::new();
                for y in &kb {
                    for x in &ka {
                        out.push(y * x);
                    }
                }
                out
            }
            Term::ProbSum(parts) => parts
                .iter()
                .flat_map(|(p, s)| self.kraus(s).into_iter().map(move |k| k * c(p.sqrt(), 0.0)))
                .collect(),
        }
    }
}

/// Kernel of a positive matrix.
pub fn kernel_basis(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let eig = ((m + m.adjoint()) * c(0.5, 0.0)).symmetric_eigen();
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() < 1e-9).collect();
    let mut b = CMatrix::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        b.set_column(j, &eig.eigenvectors.column(i));
    }
    b
}

pub fn meet_oracle(xs: &[CMatrix]) -> CMatrix {
    let n = xs[0].nrows();
    let mut g = CMatrix::zeros(n, n);
    for x in xs {
        g += CMatrix::identity(n, n) - projector_of(x);
    }
    kernel_basis(&g)
}

pub fn join_oracle(xs: &[CMatrix]) -> CMatrix {
    let n = xs[0].nrows();
    let mut g = CMatrix::zeros(n, n);
    for x in xs {
        g += projector_of(x);
    }
    support_basis(&g)
}

pub fn ortho_oracle(x: &CMatrix) -> CMatrix {
    kernel_basis(&projector_of(x))
}

use bvn_core::Formula;

impl World {
    /// Global Kraus families of every allowed basic term on `qs`.
    pub fn gens_oracle(&self, qs: &[usize]) -> Vec<Vec<CMatrix>> {
        let mut out = Vec::new();
        for (sig, syms) in &self.allowed {
            let mut tuples: Vec<Vec<usize>> = vec![vec![]];
            for &d in sig {
                let mut next = Vec::new();
                for t in &tuples {
                    for &q in qs {
                        if self.dims[q] == d && !t.contains(&q) {
                            let mut t2 = t.clone();
                            t2.push(q);
                            next.push(t2);
                        }
                    }
                }
                tuples = next;
            }
            for t in &tuples {
                for s in syms {
                    let ks = &self.ops.iter().find(|o| &o.0 == s).unwrap().2;
                    out.push(ks.iter().map(|k| global_op(k, &self.dims, t)).collect());
                }
            }
        }
        out
    }

    /// The universal closure by direct iteration on projectors.
    pub fn closure_oracle(&self, qs: &[usize], x: CMatrix) -> CMatrix {
        let gens = self.gens_oracle(qs);
        let mut y = x;
        for _ in 0..=self.total() + 1 {
            let mut parts = vec![y.clone()];
            for g in &gens {
                parts.push(wlp_oracle(g, &y));
            }
            let next = meet_oracle(&parts);
            let stable = next.ncols() == y.ncols();
            y = next;
            if stable {
                break;
            }
        }
        y
    }

    pub fn eval_oracle(&self, f: &Formula) -> CMatrix {
        let n = self.total();
        match f {
            Formula::True => CMatrix::identity(n, n),
            Formula::False => CMatrix::zeros(n, 0),
            Formula::Atom { pred, term } => {
                let (_, _, b) = self.preds.iter().find(|p| &p.0 == pred).unwrap();
                let pos: Vec<usize> = term.vars().iter().map(|v| self.pos(v)).collect();
                let lifted = support_basis(&global_op(&projector_of(b), &self.dims, &pos));
                wlp_oracle(&self.kraus(term), &lifted)
            }
            Formula::Meas { meas, outcome, vars } => {
                let d: usize = meas[1..].parse().unwrap();
                let k: usize = outcome.parse().unwrap();
                let mut p = CMatrix::zeros(d, d);
                p[(k, k)] = c(1.0, 0.0);
                support_basis(&global_op(&p, &self.dims, &[self.pos(&vars[0])]))
            }
            Formula::Not(a) => ortho_oracle(&self.eval_oracle(a)),
            Formula::And(a, b) => meet_oracle(&[self.eval_oracle(a), self.eval_oracle(b)]),
            Formula::Or(a, b) => join_oracle(&[self.eval_oracle(a), self.eval_oracle(b)]),
            Formula::Implies(a, b) => {
                let x = self.eval_oracle(a);
                let y = self.eval_oracle(b);
                join_oracle(&[ortho_oracle(&x), meet_oracle(&[x, y])])
            }
            Formula::Adjoint(t, a) => wlp_oracle(&self.kraus(t), &self.eval_oracle(a)),
            Formula::Forall(qs, a) => {
                let pos: Vec<usize> = qs.iter().map(|v| self.pos(v)).collect();
                self.closure_oracle(&pos, self.eval_oracle(a))
            }
            Formula::Exists(qs, a) => {
                let pos: Vec<usize> = qs.iter().map(|v| self.pos(v)).collect();
                ortho_oracle(&self.closure_oracle(&pos, ortho_oracle(&self.eval_oracle(a))))
            }
        }
    }

    pub fn atom(&self, r: &mut ChaCha8Rng) -> Formula {
        let all: Vec<usize> = (0..self.dims.len()).collect();
        self.atom_within(r, &all)
    }

    pub fn atom_within(&self, r: &mut ChaCha8Rng, within: &[usize]) -> Formula {
        for _ in 0..50 {
            let (name, sig, _) = &self.preds[r.random_range(0..self.preds.len())];
            if let Some(pos) = self.tuple(sig, r, within) {
                let vars: Vec<String> = pos.iter().map(|&p| self.names[p].clone()).collect();
                let term = if r.random_bool(0.4) {
                    Term::identity_on(vars)
                } else {
                    Term::seq(Term::identity_on(vars), self.term_within(r, 2, false, &pos))
                };
                return Formula::atom(name, term);
            }
        }
        Formula::True
    }

    pub fn quantifier_free(&self, r: &mut ChaCha8Rng, depth: usize) -> Formula {
        self.formula_with(r, depth, false, &self.everything())
    }

    /// A quantifier-free formula whose free variables lie in `within`.
    pub fn quantifier_free_within(&self, r: &mut ChaCha8Rng, depth: usize, within: &[usize]) -> Formula {
        self.formula_with(r, depth, false, within)
    }

    pub fn formula(&self, r: &mut ChaCha8Rng, depth: usize) -> Formula {
        self.formula_with(r, depth, true, &self.everything())
    }

    pub fn everything(&self) -> Vec<usize> {
        (0..self.dims.len()).collect()
    }

    fn formula_with(&self, r: &mut ChaCha8Rng, depth: usize, quant: bool, within: &[usize]) -> Formula {
        if depth == 0 {
            return match r.random_range(0..10) {
                0 => Formula::True,
                1 => Formula::False,
                2 | 3 => {
                    let p = within[r.random_range(0..within.len())];
                    let d = self.dims[p];
                    Formula::meas(&format!("M{d}"), &r.random_range(0..d).to_string(), &[self.names[p].clone()])
                }
                _ => self.atom_within(r, within),
            };
        }
        let sub = |r: &mut ChaCha8Rng| self.formula_with(r, depth - 1, quant, within);
        match r.random_range(0..if quant { 9 } else { 7 }) {
            0 => Formula::not(sub(r)),
            1 => Formula::and(sub(r), sub(r)),
            2 => Formula::or(sub(r), sub(r)),
            3 => Formula::implies(sub(r), sub(r)),
            4 => {
                let t = self.term_within(r, 2, false, within);
                Formula::adjoint(t, sub(r))
            }
            5 | 6 => sub(r),
            k => {
                let mut qs: Vec<String> = self.names.iter().filter(|_| r.random_bool(0.5)).cloned().collect();
                if qs.is_empty() {
                    qs.push(self.names[0].clone());
                }
                let body = sub(r);
                if k == 7 {
                    Formula::Forall(qs, Box::new(body))
                } else {
                    Formula::Exists(qs, Box::new(body))
                }
            }
        }
    }
}

use bvn_core::Program;

impl World {
    pub fn program(&self, r: &mut ChaCha8Rng, depth: usize, loops: bool) -> Program {
        self.program_within(r, depth, loops, &self.everything())
    }

    /// A random program touching only the factors in `within`.
    pub fn program_within(&self, r: &mut ChaCha8Rng, depth: usize, loops: bool, within: &[usize]) -> Program {
        let pick = |r: &mut ChaCha8Rng| within[r.random_range(0..within.len())];
        let leaf = |r: &mut ChaCha8Rng| match r.random_range(0..6) {
            0 => Program::Skip,
            1 => Program::Init(self.names[pick(r)].clone()),
            _ => {
                let t = self.term_within(r, 2, true, within);
                let mut vars = t.vars();
                if r.random_bool(0.2) {
                    if let Some(extra) = within.iter().map(|&p| &self.names[p]).find(|v| !vars.contains(v)) {
                        vars.push(extra.clone());
                    }
                }
                Program::Assign { vars, term: t }
            }
        };
        if depth == 0 {
            return leaf(r);
        }
        let qubits: Vec<usize> = within.iter().copied().filter(|&p| self.dims[p] == 2).collect();
        match r.random_range(0..if loops && !qubits.is_empty() { 8 } else { 7 }) {
            0 | 1 => leaf(r),
            2..=4 => Program::seq(
                self.program_within(r, depth - 1, loops, within),
                self.program_within(r, depth - 1, loops, within),
            ),
            5 | 6 => {
                let p = pick(r);
                let d = self.dims[p];
                Program::Case {
                    meas: format!("M{d}"),
                    vars: vec![self.names[p].clone()],
                    branches: (0..d).map(|k| (k.to_string(), self.program_within(r, depth - 1, loops, within))).collect(),
                }
            }
            _ => {
                let p = qubits[r.random_range(0..qubits.len())];
                Program::While {
                    meas: "M2".into(),
                    vars: vec![self.names[p].clone()],
                    body: Box::new(self.program_within(r, depth - 1, false, within)),
                }
            }
        }
    }

    /// Kraus family of a loop-free program, composed by hand.
    pub fn prog_kraus(&self, s: &Program) -> Vec<CMatrix> {
        let n = self.total();
        match s {
            Program::Skip => vec![CMatrix::identity(n, n)],
            Program::Init(q) => {
                let p = self.pos(q);
                let d = self.dims[p];
                (0..d)
                    .map(|k| {
                        let mut m = CMatrix::zeros(d, d);
                        m[(0, k)] = c(1.0, 0.0);
                        global_op(&m, &self.dims, &[p])
                    })
                    .collect()
            }
            Program::Assign { term, .. } => self.kraus(term),
            Program::Seq(a, b) => {
                let ka = self.prog_kraus(a);
                let kb = self.prog_kraus(b);
                kb.iter().flat_map(|y| ka.iter().map(move |x| y * x)).collect()
            }
            Program::Case { vars, branches, .. } => {
                let p = self.pos(&vars[0]);
                let d = self.dims[p];
                let mut out = Vec::new();
                for (label, b) in branches {
                    let k: usize = label.parse().unwrap();
                    let mut m = CMatrix::zeros(d, d);
                    m[(k, k)] = c(1.0, 0.0);
                    let proj = global_op(&m, &self.dims, &[p]);
                    out.extend(self.prog_kraus(b).into_iter().map(|kb| kb * &proj));
                }
                out
            }
            Program::While { .. } => panic!("loop"),
        }
    }
}

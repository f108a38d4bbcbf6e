//! Recursive-descent parsers for terms, formulas, programs, judgments and
//! proof scripts. Everything the core crate prints parses back to the same AST.

use crate::cursor::Cursor;
use crate::lex::{ParseError, Tok};
use crate::value;
use bvn_core::hoare::{Params, ProofStep};
use bvn_core::{Formula, HoareTriple, Judgment, Op, Program, ProofScript, Rule, Term};

type R<T> = Result<T, ParseError>;

fn label(c: &mut Cursor) -> R<String> {
    match c.peek().clone() {
        Tok::Number(s) => {
            c.bump();
            Ok(s)
        }
        Tok::Ident(_) => c.ident("an outcome label"),
        _ => Err(c.err("expected an outcome label")),
    }
}

fn var_list(c: &mut Cursor, close: &Tok) -> R<Vec<String>> {
    let mut vars = Vec::new();
    if c.peek() == close {
        return Ok(vars);
    }
    loop {
        vars.push(c.ident("a variable")?);
        if !c.eat(&Tok::Comma) {
            return Ok(vars);
        }
    }
}

fn starts_term_atom(c: &Cursor) -> bool {
    match c.peek() {
        Tok::LBracket => true,
        Tok::Ident(s) if s == "sum" => *c.peek_at(1) == Tok::LBrace,
        Tok::Number(s) => s == "0" && *c.peek_at(1) == Tok::LParen,
        Tok::Ident(_) => c.is_ident() && matches!(c.peek_at(1), Tok::LParen | Tok::Caret | Tok::Dot),
        _ => false,
    }
}

pub(crate) fn term(c: &mut Cursor) -> R<Term> {
    let mut t = term_seq(c)?;
    while c.eat(&Tok::Star) {
        t = Term::tensor(t, term_seq(c)?);
    }
    Ok(t)
}

fn term_seq(c: &mut Cursor) -> R<Term> {
    let mut t = term_atom(c)?;
    while starts_term_atom(c) {
        t = Term::seq(t, term_atom(c)?);
    }
    Ok(t)
}

fn term_atom(c: &mut Cursor) -> R<Term> {
    if c.eat(&Tok::LBracket) {
        let t = term(c)?;
        c.expect(&Tok::RBracket)?;
        return Ok(t);
    }
    if c.is_kw("sum") {
        c.bump();
        c.expect(&Tok::LBrace)?;
        let mut parts = Vec::new();
        loop {
            let at = c.token().clone();
            let w = value::scalar(c)?;
            if w.im != 0.0 {
                return Err(ParseError::at(&at, "weights must be real"));
            }
            c.expect(&Tok::Colon)?;
            parts.push((w.re, term(c)?));
            if !c.eat(&Tok::Comma) {
                break;
            }
        }
        c.expect(&Tok::RBrace)?;
        return Ok(Term::ProbSum(parts));
    }
    let op = op(c)?;
    c.expect(&Tok::LParen)?;
    let vars = var_list(c, &Tok::RParen)?;
    c.expect(&Tok::RParen)?;
    Ok(Term::Basic { op, vars })
}

pub(crate) fn op(c: &mut Cursor) -> R<Op> {
    Ok(match c.peek().clone() {
        Tok::Number(s) if s == "0" => {
            c.bump();
            Op::Reset
        }
        Tok::Ident(_) => {
            let name = c.ident("an operation symbol")?;
            if name == "I" {
                Op::Identity
            } else if c.eat(&Tok::Caret) {
                c.expect(&Tok::Minus)?;
                match c.peek() {
                    Tok::Number(n) if n == "1" => {
                        c.bump();
                    }
                    _ => return Err(c.err("expected `^-1`")),
                }
                Op::Inverse(name)
            } else if c.eat(&Tok::Dot) {
                Op::Outcome { meas: name, outcome: label(c)? }
            } else {
                Op::Named(name)
            }
        }
        _ => return Err(c.err("expected an operation symbol")),
    })
}

pub(crate) fn formula(c: &mut Cursor) -> R<Formula> {
    if c.is_kw("forall") || c.is_kw("exists") {
        let universal = c.is_kw("forall");
        c.bump();
        let wrap = |qs: Vec<String>, b: Formula| {
            if universal {
                Formula::Forall(qs, Box::new(b))
            } else {
                Formula::Exists(qs, Box::new(b))
            }
        };
        if c.eat(&Tok::LParen) {
            let qs = var_list(c, &Tok::RParen)?;
            c.expect(&Tok::RParen)?;
            c.expect(&Tok::Dot)?;
            return Ok(wrap(qs, formula(c)?));
        }
        let mut qs = vec![c.ident("a bound variable")?];
        while c.is_ident() {
            qs.push(c.ident("a bound variable")?);
        }
        c.expect(&Tok::Dot)?;
        let mut body = formula(c)?;
        for q in qs.into_iter().rev() {
            body = wrap(vec![q], body);
        }
        return Ok(body);
    }
    let a = disjunction(c)?;
    if c.eat(&Tok::Arrow) {
        return Ok(Formula::implies(a, formula(c)?));
    }
    Ok(a)
}

fn disjunction(c: &mut Cursor) -> R<Formula> {
    let mut a = conjunction(c)?;
    while c.eat(&Tok::Vee) {
        a = Formula::or(a, conjunction(c)?);
    }
    Ok(a)
}

fn conjunction(c: &mut Cursor) -> R<Formula> {
    let mut a = unary(c)?;
    while c.eat(&Tok::Wedge) {
        a = Formula::and(a, unary(c)?);
    }
    Ok(a)
}

fn unary(c: &mut Cursor) -> R<Formula> {
    if c.eat(&Tok::Tilde) {
        return Ok(Formula::not(unary(c)?));
    }
    if c.is_kw("forall") || c.is_kw("exists") {
        return formula(c);
    }
    if c.eat_kw("true") {
        return Ok(Formula::True);
    }
    if c.eat_kw("false") {
        return Ok(Formula::False);
    }
    if c.eat(&Tok::LParen) {
        let f = formula(c)?;
        c.expect(&Tok::RParen)?;
        return Ok(f);
    }
    if c.eat_kw("meas") {
        let meas = c.ident("a measurement symbol")?;
        c.expect(&Tok::Dot)?;
        let outcome = label(c)?;
        c.expect(&Tok::LParen)?;
        let vars = var_list(c, &Tok::RParen)?;
        c.expect(&Tok::RParen)?;
        return Ok(Formula::Meas { meas, outcome, vars });
    }
    if c.eat_kw("adj") {
        c.expect(&Tok::LAngle)?;
        let t = term(c)?;
        c.expect(&Tok::RAngle)?;
        c.expect(&Tok::LParen)?;
        let f = formula(c)?;
        c.expect(&Tok::RParen)?;
        return Ok(Formula::adjoint(t, f));
    }
    if c.is_ident() {
        let pred = c.ident("a predicate symbol")?;
        c.expect(&Tok::LParen)?;
        // `P(q1, q2)` names variables; anything else is a term argument.
        let plain = match c.peek() {
            Tok::RParen => true,
            Tok::Ident(_) => matches!(c.peek_at(1), Tok::Comma | Tok::RParen),
            _ => false,
        };
        let t = if plain {
            Term::identity_on(var_list(c, &Tok::RParen)?)
        } else {
            term(c)?
        };
        c.expect(&Tok::RParen)?;
        return Ok(Formula::atom(&pred, t));
    }
    Err(c.err("expected a formula"))
}

pub(crate) fn program(c: &mut Cursor) -> R<Program> {
    let s = statement(c)?;
    if c.eat(&Tok::Semi) {
        return Ok(Program::seq(s, program(c)?));
    }
    Ok(s)
}

fn guard(c: &mut Cursor) -> R<(String, Vec<String>)> {
    let meas = c.ident("a measurement symbol")?;
    c.expect(&Tok::LBracket)?;
    let vars = var_list(c, &Tok::RBracket)?;
    c.expect(&Tok::RBracket)?;
    Ok((meas, vars))
}

fn statement(c: &mut Cursor) -> R<Program> {
    if c.eat_kw("skip") {
        return Ok(Program::Skip);
    }
    if c.eat(&Tok::LParen) {
        let p = program(c)?;
        c.expect(&Tok::RParen)?;
        return Ok(p);
    }
    if c.eat_kw("if") {
        let (meas, vars) = guard(c)?;
        c.expect(&Tok::LBrace)?;
        let mut branches = Vec::new();
        loop {
            let l = label(c)?;
            c.expect(&Tok::Arrow)?;
            branches.push((l, program(c)?));
            if !c.eat(&Tok::Bar) {
                break;
            }
        }
        c.expect(&Tok::RBrace)?;
        c.expect_kw("fi")?;
        return Ok(Program::Case { meas, vars, branches });
    }
    if c.eat_kw("while") {
        let (meas, vars) = guard(c)?;
        c.expect(&Tok::Eq)?;
        match c.peek() {
            Tok::Number(n) if n == "1" => {
                c.bump();
            }
            _ => return Err(c.err("loop guards test outcome 1")),
        }
        c.expect_kw("do")?;
        let body = program(c)?;
        c.expect_kw("od")?;
        return Ok(Program::While { meas, vars, body: Box::new(body) });
    }
    if c.is_ident() {
        let vars = var_list(c, &Tok::Assign)?;
        c.expect(&Tok::Assign)?;
        if let Tok::Ket(k) = c.peek().clone() {
            let at = c.bump();
            if k != "0" || vars.len() != 1 {
                return Err(ParseError::at(&at, "initialisation is `q := |0>` on one variable"));
            }
            return Ok(Program::Init(vars.into_iter().next().unwrap()));
        }
        return Ok(Program::Assign { vars, term: term(c)? });
    }
    Err(c.err("expected a statement"))
}

pub(crate) fn triple(c: &mut Cursor) -> R<HoareTriple> {
    c.expect(&Tok::LBrace)?;
    let pre = formula(c)?;
    c.expect(&Tok::RBrace)?;
    let prog = program(c)?;
    c.expect(&Tok::LBrace)?;
    let post = formula(c)?;
    c.expect(&Tok::RBrace)?;
    Ok(HoareTriple::new(pre, prog, post))
}

pub(crate) fn judgment(c: &mut Cursor) -> R<Judgment> {
    if *c.peek() == Tok::LBrace {
        return Ok(Judgment::Triple(triple(c)?));
    }
    let mark = c.mark();
    if let Ok(a) = term(c) {
        if c.eat(&Tok::Eq) {
            return Ok(Judgment::Equation(a, term(c)?));
        }
    }
    c.reset(mark);
    let mut hyps = Vec::new();
    if *c.peek() != Tok::Turnstile {
        loop {
            hyps.push(formula(c)?);
            if !c.eat(&Tok::Comma) {
                break;
            }
        }
    }
    c.expect(&Tok::Turnstile)?;
    Ok(Judgment::Sequent { hyps, concl: formula(c)? })
}

fn rule(c: &mut Cursor) -> R<Rule> {
    let at = c.token().clone();
    let mut name = c.ident("a rule name")?;
    while c.adjacent() {
        match c.peek() {
            Tok::Dot | Tok::Minus | Tok::Ident(_) | Tok::Number(_) => name.push_str(&c.bump().tok.to_string()),
            _ => break,
        }
    }
    Rule::parse(&name).ok_or_else(|| ParseError::at(&at, format!("unknown rule `{name}`")))
}

fn count(c: &mut Cursor) -> R<u64> {
    match c.peek().clone() {
        Tok::Number(s) => {
            let v = s.parse().map_err(|_| c.err("expected a whole number"))?;
            c.bump();
            Ok(v)
        }
        _ => Err(c.err("expected a whole number")),
    }
}

fn params(c: &mut Cursor) -> R<Params> {
    let mut p = Params::default();
    if !c.eat_kw("with") {
        return Ok(p);
    }
    loop {
        let at = c.token().clone();
        let key = c.ident("a parameter name")?;
        c.expect(&Tok::Eq)?;
        match key.as_str() {
            "delta" => p.delta = Some(formula(c)?),
            "term" => p.term = Some(term(c)?),
            "vars" => {
                let mut vs = Vec::new();
                while c.is_ident() && !matches!(c.peek_at(1), Tok::Eq) {
                    vs.push(c.ident("a variable")?);
                }
                p.vars = Some(vs);
            }
            "trials" => p.trials = count(c)? as usize,
            "seed" => p.seed = count(c)?,
            "max_steps" => p.max_steps = count(c)? as usize,
            _ => return Err(ParseError::at(&at, format!("unknown parameter `{key}`"))),
        }
        if !c.eat(&Tok::Comma) {
            return Ok(p);
        }
    }
}

pub(crate) fn proof(c: &mut Cursor) -> R<ProofScript> {
    let mut steps = Vec::new();
    while !c.at_end() {
        c.expect_kw("step")?;
        let id = c.ident("a step name")?;
        c.expect(&Tok::Colon)?;
        let judgment = judgment(c)?;
        c.expect_kw("by")?;
        let rule = rule(c)?;
        let mut premises = Vec::new();
        if c.eat_kw("from") {
            loop {
                premises.push(c.ident("a premise name")?);
                if !c.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let params = params(c)?;
        steps.push(ProofStep { id, judgment, rule, premises, params });
    }
    Ok(ProofScript { steps })
}

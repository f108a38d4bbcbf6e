//! The `.bvn` interpretation format.
//!
//! ```text
//! var q1, q2 : 2;
//! unitary H (2) = (1/sqrt(2)) * [[1, 1], [1, -1]];
//! unitary C (2, 2) = [[1,0,0,0],[0,1,0,0],[0,0,0,1],[0,0,1,0]];
//! channel E (2) = { sqrt(0.9) * eye(2), sqrt(0.1) * X };
//! measurement M (2) = { 0: [[1, 0], [0, 0]], 1: [[0, 0], [0, 1]] };
//! predicate P (2, 2) = span{ |00>, (|01> + |10>)/sqrt(2) };
//! allowed (2) = { H, X };
//! ```
//!
//! Matrices may refer to earlier unitaries by name. Kets take their factor
//! dimensions from the declaration's signature.

use crate::cursor::Cursor;
use crate::lex::{ParseError, Tok};
use crate::syntax;
use crate::value::{self, format_complex, Env};
use bvn_core::interp::PredicateDef;
use bvn_core::{CMatrix, Declaration, Op};
use std::fmt::Write;

type R<T> = Result<T, ParseError>;

fn signature(c: &mut Cursor) -> R<Vec<usize>> {
    c.expect(&Tok::LParen)?;
    let mut sig = Vec::new();
    if *c.peek() != Tok::RParen {
        loop {
            sig.push(dimension(c)?);
            if !c.eat(&Tok::Comma) {
                break;
            }
        }
    }
    c.expect(&Tok::RParen)?;
    Ok(sig)
}

fn dimension(c: &mut Cursor) -> R<usize> {
    match c.peek().clone() {
        Tok::Number(s) => match s.parse::<usize>() {
            Ok(d) if d >= 1 => {
                c.bump();
                Ok(d)
            }
            _ => Err(c.err("dimensions are positive integers")),
        },
        _ => Err(c.err("expected a dimension")),
    }
}

fn braced<T>(c: &mut Cursor, mut item: impl FnMut(&mut Cursor) -> R<T>) -> R<Vec<T>> {
    c.expect(&Tok::LBrace)?;
    let mut out = Vec::new();
    if *c.peek() != Tok::RBrace {
        loop {
            out.push(item(c)?);
            if !c.eat(&Tok::Comma) {
                break;
            }
        }
    }
    c.expect(&Tok::RBrace)?;
    Ok(out)
}

fn env(names: &Env, sig: &[usize]) -> Env {
    Env { dims: Some(sig.to_vec()), names: names.names.clone() }
}

pub(crate) fn declarations(c: &mut Cursor) -> R<Vec<Declaration>> {
    let mut out = Vec::new();
    let mut names = Env::default();
    while !c.at_end() {
        let kt = c.token().clone();
        let kw = c.ident("a declaration keyword")?;
        match kw.as_str() {
            "var" => {
                let mut vs = vec![c.ident("a variable name")?];
                while c.eat(&Tok::Comma) {
                    vs.push(c.ident("a variable name")?);
                }
                c.expect(&Tok::Colon)?;
                let dim = dimension(c)?;
                out.extend(vs.into_iter().map(|name| Declaration::Var { name, dim }));
            }
            "unitary" => {
                let name = c.ident("a symbol name")?;
                let sig = signature(c)?;
                c.expect(&Tok::Eq)?;
                let matrix = value::expect_matrix(c, &env(&names, &sig))?;
                let inverts = if c.eat_kw("inverts") { Some(c.ident("a symbol name")?) } else { None };
                names.names.insert(name.clone(), matrix.clone());
                out.push(Declaration::Unitary { name, signature: sig, matrix, inverts });
            }
            "channel" => {
                let name = c.ident("a symbol name")?;
                let sig = signature(c)?;
                c.expect(&Tok::Eq)?;
                let e = env(&names, &sig);
                let kraus = braced(c, |c| value::expect_matrix(c, &e))?;
                out.push(Declaration::Channel { name, signature: sig, kraus });
            }
            "measurement" => {
                let name = c.ident("a symbol name")?;
                let sig = signature(c)?;
                c.expect(&Tok::Eq)?;
                let e = env(&names, &sig);
                let outcomes = braced(c, |c| {
                    let label = match c.peek().clone() {
                        Tok::Number(s) => {
                            c.bump();
                            s
                        }
                        _ => c.ident("an outcome label")?,
                    };
                    c.expect(&Tok::Colon)?;
                    Ok((label, value::expect_matrix(c, &e)?))
                })?;
                out.push(Declaration::Measurement { name, signature: sig, outcomes });
            }
            "predicate" => {
                let name = c.ident("a symbol name")?;
                let sig = signature(c)?;
                c.expect(&Tok::Eq)?;
                let e = env(&names, &sig);
                let def = if c.eat_kw("span") {
                    let vs = braced(c, |c| value::expect_vector(c, &e))?;
                    PredicateDef::Span(vs.into_iter().map(|v| v.iter().copied().collect()).collect())
                } else if *c.peek() == Tok::LBracket && *c.peek_at(1) == Tok::RBracket {
                    // The zero subspace as a matrix with no columns.
                    c.bump();
                    c.bump();
                    PredicateDef::Matrix(CMatrix::zeros(sig.iter().product(), 0))
                } else {
                    PredicateDef::Matrix(value::expect_matrix(c, &e)?)
                };
                out.push(Declaration::Predicate { name, signature: sig, def });
            }
            "allowed" => {
                let sig = signature(c)?;
                c.expect(&Tok::Eq)?;
                let symbols = braced(c, syntax::op)?;
                out.push(Declaration::Allowed { signature: sig, symbols });
            }
            _ => return Err(ParseError::at(&kt, format!("unknown declaration `{kw}`"))),
        }
        c.expect(&Tok::Semi)?;
    }
    Ok(out)
}

fn write_matrix(s: &mut String, m: &CMatrix) {
    if m.ncols() == 0 {
        s.push_str("[]");
        return;
    }
    s.push('[');
    for i in 0..m.nrows() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push('[');
        for j in 0..m.ncols() {
            if j > 0 {
                s.push_str(", ");
            }
            s.push_str(&format_complex(m[(i, j)]));
        }
        s.push(']');
    }
    s.push(']');
}

fn sig(s: &[usize]) -> String {
    let parts: Vec<String> = s.iter().map(usize::to_string).collect();
    format!("({})", parts.join(", "))
}

/// Canonical text; parsing it yields declarations with bit-identical entries.
pub fn serialize(decls: &[Declaration]) -> String {
    let mut s = String::new();
    for d in decls {
        match d {
            Declaration::Var { name, dim } => {
                let _ = write!(s, "var {name} : {dim}");
            }
            Declaration::Unitary { name, signature, matrix, inverts } => {
                let _ = write!(s, "unitary {name} {} = ", sig(signature));
                write_matrix(&mut s, matrix);
                if let Some(g) = inverts {
                    let _ = write!(s, " inverts {g}");
                }
            }
            Declaration::Channel { name, signature, kraus } => {
                let _ = write!(s, "channel {name} {} = {{ ", sig(signature));
                for (k, m) in kraus.iter().enumerate() {
                    if k > 0 {
                        s.push_str(", ");
                    }
                    write_matrix(&mut s, m);
                }
                s.push_str(" }");
            }
            Declaration::Measurement { name, signature, outcomes } => {
                let _ = write!(s, "measurement {name} {} = {{ ", sig(signature));
                for (k, (l, m)) in outcomes.iter().enumerate() {
                    if k > 0 {
                        s.push_str(", ");
                    }
                    let _ = write!(s, "{l}: ");
                    write_matrix(&mut s, m);
                }
                s.push_str(" }");
            }
            Declaration::Predicate { name, signature, def } => {
                let _ = write!(s, "predicate {name} {} = ", sig(signature));
                match def {
                    PredicateDef::Span(vs) => {
                        s.push_str("span{ ");
                        for (k, v) in vs.iter().enumerate() {
                            if k > 0 {
                                s.push_str(", ");
                            }
                            let parts: Vec<String> = v.iter().map(|z| format_complex(*z)).collect();
                            let _ = write!(s, "[{}]", parts.join(", "));
                        }
                        s.push_str(" }");
                    }
                    PredicateDef::Matrix(m) => write_matrix(&mut s, m),
                }
            }
            Declaration::Allowed { signature, symbols } => {
                let parts: Vec<String> = symbols.iter().map(Op::to_string).collect();
                let _ = write!(s, "allowed {} = {{ {} }}", sig(signature), parts.join(", "));
            }
        }
        s.push_str(";\n");
    }
    s
}

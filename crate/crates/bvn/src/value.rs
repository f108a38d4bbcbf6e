//! Numeric expressions: complex scalars, vectors and matrices.
//!
//! `1/sqrt(2)`, `0.5-2i`, `exp(i*pi/4)`, `[[1, 0], [0, -1]]`,
//! `(|00> + |11>)/sqrt(2)`, `kron(X, I2)` once `X` is bound. Kets take their
//! factor dimensions from the surrounding signature.

use crate::cursor::Cursor;
use crate::lex::{ParseError, Tok, Token};
use bvn_core::linalg::c;
use bvn_core::{CMatrix, C64};
use std::collections::HashMap;

type R<T> = Result<T, ParseError>;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(C64),
    /// Column vector.
    Vector(CMatrix),
    Matrix(CMatrix),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "a scalar",
            Value::Vector(_) => "a vector",
            Value::Matrix(_) => "a matrix",
        }
    }
}

/// Evaluation context: factor dimensions for kets and named matrices.
#[derive(Debug, Clone, Default)]
pub struct Env {
    pub dims: Option<Vec<usize>>,
    pub names: HashMap<String, CMatrix>,
}

pub(crate) fn scalar(cur: &mut Cursor) -> R<C64> {
    let at = cur.token().clone();
    match expr(cur, &Env::default())? {
        Value::Scalar(z) => Ok(z),
        v => Err(ParseError::at(&at, format!("expected a scalar, found {}", v.kind()))),
    }
}

pub(crate) fn expect_matrix(cur: &mut Cursor, env: &Env) -> R<CMatrix> {
    let at = cur.token().clone();
    match expr(cur, env)? {
        Value::Matrix(m) => Ok(m),
        v => Err(ParseError::at(&at, format!("expected a matrix, found {}", v.kind()))),
    }
}

pub(crate) fn expect_vector(cur: &mut Cursor, env: &Env) -> R<CMatrix> {
    let at = cur.token().clone();
    match expr(cur, env)? {
        Value::Vector(v) => Ok(v),
        v => Err(ParseError::at(&at, format!("expected a vector, found {}", v.kind()))),
    }
}

pub(crate) fn expr(cur: &mut Cursor, env: &Env) -> R<Value> {
    let mut v = product(cur, env)?;
    loop {
        let at = cur.token().clone();
        let sign = match cur.peek() {
            Tok::Plus => 1.0,
            Tok::Minus => -1.0,
            _ => return Ok(v),
        };
        cur.bump();
        let w = product(cur, env)?;
        v = add(v, w, sign, &at)?;
    }
}

fn product(cur: &mut Cursor, env: &Env) -> R<Value> {
    let mut v = unary(cur, env)?;
    loop {
        let at = cur.token().clone();
        match cur.peek() {
            Tok::Star => {
                cur.bump();
                let w = unary(cur, env)?;
                v = mul(v, w, &at)?;
            }
            Tok::Slash => {
                cur.bump();
                let w = unary(cur, env)?;
                let Value::Scalar(z) = w else {
                    return Err(ParseError::at(&at, "can only divide by a scalar"));
                };
                v = mul(v, Value::Scalar(C64::new(1.0, 0.0) / z), &at)?;
            }
            _ => return Ok(v),
        }
    }
}

fn unary(cur: &mut Cursor, env: &Env) -> R<Value> {
    let at = cur.token().clone();
    if cur.eat(&Tok::Minus) {
        let v = unary(cur, env)?;
        return Ok(match v {
            Value::Scalar(z) => Value::Scalar(-z),
            Value::Vector(m) => Value::Vector(-m),
            Value::Matrix(m) => Value::Matrix(-m),
        });
    }
    if cur.eat(&Tok::Plus) {
        return unary(cur, env);
    }
    let base = primary(cur, env)?;
    if cur.eat(&Tok::Caret) {
        let e = unary(cur, env)?;
        return match (base, e) {
            (Value::Scalar(b), Value::Scalar(e)) => Ok(Value::Scalar(if e.im == 0.0 { b.powf(e.re) } else { b.powc(e) })),
            _ => Err(ParseError::at(&at, "`^` takes scalars")),
        };
    }
    Ok(base)
}

fn number(at: &Token, s: &str) -> R<f64> {
    s.parse().map_err(|_| ParseError::at(at, "malformed number"))
}

fn primary(cur: &mut Cursor, env: &Env) -> R<Value> {
    let at = cur.token().clone();
    match at.tok.clone() {
        Tok::Number(s) => {
            cur.bump();
            Ok(Value::Scalar(c(number(&at, &s)?, 0.0)))
        }
        Tok::Imag(s) => {
            cur.bump();
            Ok(Value::Scalar(c(0.0, number(&at, &s)?)))
        }
        Tok::Ket(s) => {
            cur.bump();
            ket(&at, &s, env.dims.as_deref()).map(Value::Vector)
        }
        Tok::LParen => {
            cur.bump();
            let v = expr(cur, env)?;
            cur.expect(&Tok::RParen)?;
            Ok(v)
        }
        Tok::LBracket => {
            cur.bump();
            let mut items = Vec::new();
            if *cur.peek() != Tok::RBracket {
                loop {
                    items.push((cur.token().clone(), expr(cur, env)?));
                    if !cur.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            cur.expect(&Tok::RBracket)?;
            list(&at, items)
        }
        Tok::Ident(name) => {
            cur.bump();
            if *cur.peek() == Tok::LParen {
                cur.bump();
                let mut args = Vec::new();
                if *cur.peek() != Tok::RParen {
                    loop {
                        args.push(expr(cur, env)?);
                        if !cur.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                cur.expect(&Tok::RParen)?;
                return call(&at, &name, args);
            }
            match name.as_str() {
                "i" => Ok(Value::Scalar(c(0.0, 1.0))),
                "pi" => Ok(Value::Scalar(c(std::f64::consts::PI, 0.0))),
                _ => env
                    .names
                    .get(&name)
                    .map(|m| Value::Matrix(m.clone()))
                    .ok_or_else(|| ParseError::at(&at, format!("unknown name `{name}`"))),
            }
        }
        _ => Err(ParseError::at(&at, "expected a number, vector or matrix")),
    }
}

fn list(at: &Token, items: Vec<(Token, Value)>) -> R<Value> {
    if items.is_empty() {
        return Err(ParseError::at(at, "empty list"));
    }
    if items.iter().all(|(_, v)| matches!(v, Value::Scalar(_))) {
        let zs: Vec<C64> = items.iter().map(|(_, v)| if let Value::Scalar(z) = v { *z } else { unreachable!() }).collect();
        return Ok(Value::Vector(CMatrix::from_column_slice(zs.len(), 1, &zs)));
    }
    let mut rows = Vec::new();
    for (t, v) in &items {
        match v {
            Value::Vector(r) => rows.push(r.clone()),
            _ => return Err(ParseError::at(t, "matrix rows must be lists of scalars")),
        }
    }
    let n = rows[0].nrows();
    for ((t, _), r) in items.iter().zip(&rows) {
        if r.nrows() != n {
            return Err(ParseError::at(t, "matrix rows have different lengths"));
        }
    }
    Ok(Value::Matrix(CMatrix::from_fn(rows.len(), n, |i, j| rows[i][(j, 0)])))
}

fn arity(at: &Token, name: &str, args: &[Value], n: usize) -> R<()> {
    if args.len() == n {
        Ok(())
    } else {
        Err(ParseError::at(at, format!("`{name}` takes {n} argument(s)")))
    }
}

fn real_arg(at: &Token, v: &Value) -> R<f64> {
    match v {
        Value::Scalar(z) => Ok(z.re),
        _ => Err(ParseError::at(at, "expected a scalar argument")),
    }
}

fn call(at: &Token, name: &str, args: Vec<Value>) -> R<Value> {
    let scalar_fn = |f: fn(C64) -> C64| -> R<Value> {
        arity(at, name, &args, 1)?;
        match args[0] {
            Value::Scalar(z) => Ok(Value::Scalar(f(z))),
            _ => Err(ParseError::at(at, format!("`{name}` takes a scalar"))),
        }
    };
    match name {
        "sqrt" => scalar_fn(|z| if z.im == 0.0 && z.re >= 0.0 { c(z.re.sqrt(), 0.0) } else { z.sqrt() }),
        "exp" => scalar_fn(|z| z.exp()),
        "sin" => scalar_fn(|z| z.sin()),
        "cos" => scalar_fn(|z| z.cos()),
        "conj" => scalar_fn(|z| z.conj()),
        // Exact complex literal: real parts of both arguments, unrounded.
        "c" => {
            arity(at, name, &args, 2)?;
            Ok(Value::Scalar(c(real_arg(at, &args[0])?, real_arg(at, &args[1])?)))
        }
        "eye" => {
            arity(at, name, &args, 1)?;
            let n = real_arg(at, &args[0])?;
            if n < 1.0 || n.fract() != 0.0 {
                return Err(ParseError::at(at, "`eye` takes a positive integer"));
            }
            Ok(Value::Matrix(CMatrix::identity(n as usize, n as usize)))
        }
        "dag" => {
            arity(at, name, &args, 1)?;
            match &args[0] {
                Value::Matrix(m) => Ok(Value::Matrix(m.adjoint())),
                Value::Vector(v) => Ok(Value::Matrix(v.adjoint())),
                Value::Scalar(z) => Ok(Value::Scalar(z.conj())),
            }
        }
        "kron" => {
            if args.is_empty() {
                return Err(ParseError::at(at, "`kron` needs arguments"));
            }
            let mut acc: Option<Value> = None;
            for a in args {
                acc = Some(match (acc, a) {
                    (None, a) => a,
                    (Some(Value::Matrix(x)), Value::Matrix(y)) => Value::Matrix(x.kronecker(&y)),
                    (Some(Value::Vector(x)), Value::Vector(y)) => Value::Vector(x.kronecker(&y)),
                    _ => return Err(ParseError::at(at, "`kron` takes all matrices or all vectors")),
                });
            }
            Ok(acc.unwrap())
        }
        _ => Err(ParseError::at(at, format!("unknown function `{name}`"))),
    }
}

fn ket(at: &Token, s: &str, dims: Option<&[usize]>) -> R<CMatrix> {
    let parts: Vec<String> = if s.contains(',') { s.split(',').map(str::to_owned).collect() } else { s.chars().map(String::from).collect() };
    let dims: Vec<usize> = match dims {
        Some(d) => d.to_vec(),
        None => vec![2; parts.len()],
    };
    if dims.len() != parts.len() {
        return Err(ParseError::at(at, format!("ket has {} factors, expected {}", parts.len(), dims.len())));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CMatrix::from_element(1, 1, c(1.0, 0.0));
    for (p, &d) in parts.iter().zip(&dims) {
        let mut f = CMatrix::zeros(d, 1);
        match p.as_str() {
            "+" | "-" if d == 2 => {
                f[(0, 0)] = c(h, 0.0);
                f[(1, 0)] = c(if p == "+" { h } else { -h }, 0.0);
            }
            _ => {
                let k: usize = p.parse().map_err(|_| ParseError::at(at, format!("bad ket factor `{p}`")))?;
                if k >= d {
                    return Err(ParseError::at(at, format!("ket factor {k} out of range for dimension {d}")));
                }
                f[(k, 0)] = c(1.0, 0.0);
            }
        }
        v = v.kronecker(&f);
    }
    Ok(v)
}

fn add(a: Value, b: Value, sign: f64, at: &Token) -> R<Value> {
    let s = c(sign, 0.0);
    match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Ok(Value::Scalar(if sign > 0.0 { x + y } else { x - y })),
        (Value::Vector(x), Value::Vector(y)) if x.shape() == y.shape() => Ok(Value::Vector(x + y * s)),
        (Value::Matrix(x), Value::Matrix(y)) if x.shape() == y.shape() => Ok(Value::Matrix(x + y * s)),
        (a, b) => Err(ParseError::at(at, format!("cannot add {} and {}", a.kind(), b.kind()))),
    }
}

fn mul(a: Value, b: Value, at: &Token) -> R<Value> {
    use Value::*;
    let bad = |a: &Value, b: &Value| ParseError::at(at, format!("cannot multiply {} by {}", a.kind(), b.kind()));
    Ok(match (a, b) {
        (Scalar(x), Scalar(y)) => Scalar(x * y),
        (Scalar(x), Vector(v)) | (Vector(v), Scalar(x)) => Vector(v * x),
        (Scalar(x), Matrix(m)) | (Matrix(m), Scalar(x)) => Matrix(m * x),
        (Matrix(m), Matrix(n)) if m.ncols() == n.nrows() => Matrix(m * n),
        (Matrix(m), Vector(v)) if m.ncols() == v.nrows() => Vector(m * v),
        (a, b) => return Err(bad(&a, &b)),
    })
}

/// Canonical text for a complex entry that parses back to the same bits.
pub fn format_complex(z: C64) -> String {
    // A bare literal reads as `x + 0i` and a negated one as `-x - 0i`.
    let plain = z.im == 0.0 && z.im.is_sign_negative() == z.re.is_sign_negative();
    if plain {
        format!("{:?}", z.re)
    } else {
        format!("c({:?}, {:?})", z.re, z.im)
    }
}

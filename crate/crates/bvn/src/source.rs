//! Source units: parsed text of one kind, with positions kept for
//! diagnostics that surface after parsing.

use crate::cursor::Cursor;
use crate::interp_file;
use crate::lex::{tokenize, ParseError, Span, Tok};
use crate::syntax;
use bvn_core::{Declaration, Formula, HoareTriple, Program, ProofScript, Term};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Interp,
    Term,
    Formula,
    Program,
    Triple,
    Proof,
}

impl Kind {
    pub fn extension(self) -> &'static str {
        match self {
            Kind::Interp => "bvn",
            Kind::Term => "qt",
            Kind::Formula => "qlf",
            Kind::Program => "qwp",
            Kind::Triple => "qht",
            Kind::Proof => "qpf",
        }
    }

    pub fn from_path(p: &Path) -> Option<Kind> {
        let e = p.extension()?.to_str()?;
        [Kind::Interp, Kind::Term, Kind::Formula, Kind::Program, Kind::Triple, Kind::Proof]
            .into_iter()
            .find(|k| k.extension() == e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Interp(Vec<Declaration>),
    Term(Term),
    Formula(Formula),
    Program(Program),
    Triple(HoareTriple),
    Proof(ProofScript),
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Interp(d) => f.write_str(&interp_file::serialize(d)),
            Ast::Term(t) => write!(f, "{t}"),
            Ast::Formula(b) => write!(f, "{b}"),
            Ast::Program(s) => write!(f, "{s}"),
            Ast::Triple(t) => write!(f, "{t}"),
            Ast::Proof(p) => f.write_str(&crate::print::proof(p)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub kind: Kind,
    pub text: String,
    /// Identifier tokens with their positions, for locating names that a
    /// later well-formedness check rejects.
    idents: Vec<(String, Span)>,
}

impl SourceUnit {
    /// First occurrence of identifier `name`.
    pub fn locate(&self, name: &str) -> Option<Span> {
        self.idents.iter().find(|(n, _)| n == name).map(|x| x.1)
    }
}

pub fn parse(kind: Kind, text: &str) -> Result<(SourceUnit, Ast), ParseError> {
    let mut c = Cursor::new(text)?;
    let ast = match kind {
        Kind::Interp => Ast::Interp(interp_file::declarations(&mut c)?),
        Kind::Term => Ast::Term(syntax::term(&mut c)?),
        Kind::Formula => Ast::Formula(syntax::formula(&mut c)?),
        Kind::Program => Ast::Program(syntax::program(&mut c)?),
        Kind::Triple => Ast::Triple(syntax::triple(&mut c)?),
        Kind::Proof => Ast::Proof(syntax::proof(&mut c)?),
    };
    c.finish()?;
    let idents = tokenize(text)?
        .into_iter()
        .filter_map(|t| match t.tok {
            Tok::Ident(s) => Some((s, t.span)),
            _ => None,
        })
        .collect();
    Ok((SourceUnit { kind, text: text.to_owned(), idents }, ast))
}

macro_rules! typed {
    ($name:ident, $kind:ident, $ty:ty) => {
        pub fn $name(text: &str) -> Result<$ty, ParseError> {
            match parse(Kind::$kind, text)?.1 {
                Ast::$kind(x) => Ok(x),
                _ => unreachable!(),
            }
        }
    };
}

typed!(parse_interp, Interp, Vec<Declaration>);
typed!(parse_term, Term, Term);
typed!(parse_formula, Formula, Formula);
typed!(parse_program, Program, Program);
typed!(parse_triple, Triple, HoareTriple);
typed!(parse_proof, Proof, ProofScript);

//! Surface syntax, file formats and the command-line driver for `bvn-core`.
//!
//! | extension | contents |
//! |-----------|----------|
//! | `.bvn` | interpretation: variables, symbol bindings, allowed sets |
//! | `.qt` | term |
//! | `.qlf` | formula |
//! | `.qwp` | program |
//! | `.qht` | Hoare triple |
//! | `.qpf` | proof script |

mod cursor;
pub mod cli;
pub mod interp_file;
pub mod lex;
pub mod print;
pub mod source;
mod syntax;
pub mod value;

pub use lex::{ParseError, Span};
pub use source::{parse, parse_formula, parse_interp, parse_program, parse_proof, parse_term, parse_triple, Ast, Kind, SourceUnit};

//! Tokens shared by every surface syntax.

use std::fmt;

/// 1-based line and column of a token's first character, plus its byte
/// range in the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Decimal literal, kept verbatim so numbers print back unchanged.
    Number(String),
    /// `2.5i`.
    Imag(String),
    /// `|01>`, contents without the delimiters.
    Ket(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    LAngle,
    RAngle,
    Comma,
    Dot,
    Colon,
    Semi,
    Assign,
    Eq,
    Arrow,
    Turnstile,
    Tilde,
    Wedge,
    Vee,
    Bar,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) | Tok::Number(s) => return write!(f, "{s}"),
            Tok::Imag(s) => return write!(f, "{s}i"),
            Tok::Ket(s) => return write!(f, "|{s}>"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LAngle => "<",
            Tok::RAngle => ">",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Assign => ":=",
            Tok::Eq => "=",
            Tok::Arrow => "->",
            Tok::Turnstile => "|-",
            Tok::Tilde => "~",
            Tok::Wedge => "/\\",
            Tok::Vee => "\\/",
            Tok::Bar => "|",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Caret => "^",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// A diagnostic anchored at a source position.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{span}: {message} (at `{token}`)")]
pub struct ParseError {
    pub span: Span,
    pub token: String,
    pub message: String,
}

impl ParseError {
    pub fn at(t: &Token, message: impl Into<String>) -> Self {
        ParseError {
            span: t.span,
            token: t.tok.to_string(),
            message: message.into(),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

/// Splits `src` into tokens. `#` starts a comment running to the end of the
/// line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut k = 0;
    let byte = |k: usize| chars.get(k).map_or(src.len(), |c| c.0);
    while k < chars.len() {
        let c = chars[k].1;
        if c == '\n' {
            line += 1;
            col = 1;
            k += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            k += 1;
            continue;
        }
        if c == '#' {
            while k < chars.len() && chars[k].1 != '\n' {
                k += 1;
            }
            continue;
        }
        let start = k;
        let peek = |k: usize, j: usize| chars.get(k + j).map(|c| c.1);
        let tok = if is_ident_start(c) {
            while k < chars.len() && is_ident_char(chars[k].1) {
                k += 1;
            }
            Tok::Ident(src[byte(start)..byte(k)].to_owned())
        } else if c.is_ascii_digit() {
            while k < chars.len() && chars[k].1.is_ascii_digit() {
                k += 1;
            }
            if peek(k, 0) == Some('.') && peek(k, 1).is_some_and(|d| d.is_ascii_digit()) {
                k += 1;
                while k < chars.len() && chars[k].1.is_ascii_digit() {
                    k += 1;
                }
            }
            if matches!(peek(k, 0), Some('e' | 'E')) {
                let sign = usize::from(matches!(peek(k, 1), Some('+' | '-')));
                if peek(k, 1 + sign).is_some_and(|d| d.is_ascii_digit()) {
                    k += 1 + sign;
                    while k < chars.len() && chars[k].1.is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text = src[byte(start)..byte(k)].to_owned();
            if peek(k, 0) == Some('i') && !peek(k, 1).is_some_and(is_ident_char) {
                k += 1;
                Tok::Imag(text)
            } else {
                Tok::Number(text)
            }
        } else if c == '|' && ket_end(&chars, k).is_some() {
            let end = ket_end(&chars, k).unwrap();
            let text = src[byte(k + 1)..byte(end)].to_owned();
            k = end + 1;
            Tok::Ket(text)
        } else {
            let two = |a: char, b: char| c == a && peek(k, 1) == Some(b);
            let (t, n) = if two(':', '=') {
                (Tok::Assign, 2)
            } else if two('-', '>') {
                (Tok::Arrow, 2)
            } else if two('|', '-') {
                (Tok::Turnstile, 2)
            } else if two('/', '\\') {
                (Tok::Wedge, 2)
            } else if two('\\', '/') {
                (Tok::Vee, 2)
            } else {
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '<' => Tok::LAngle,
                    '>' => Tok::RAngle,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    ':' => Tok::Colon,
                    ';' => Tok::Semi,
                    '=' => Tok::Eq,
                    '~' => Tok::Tilde,
                    '|' => Tok::Bar,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    _ => {
                        return Err(ParseError {
                            span: Span { line, col, start: byte(k), end: byte(k + 1) },
                            token: c.to_string(),
                            message: "unexpected character".into(),
                        })
                    }
                };
                (t, 1)
            };
            k += n;
            t
        };
        let span = Span { line, col, start: byte(start), end: byte(k) };
        col += k - start;
        out.push(Token { tok, span });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, col, start: src.len(), end: src.len() },
    });
    Ok(out)
}

/// Index of the closing `>` when `|` at `k` opens a ket: the contents are
/// non-empty and drawn from digits, `+`, `-` and `,`.
fn ket_end(chars: &[(usize, char)], k: usize) -> Option<usize> {
    let mut j = k + 1;
    while j < chars.len() && matches!(chars[j].1, '0'..='9' | '+' | '-' | ',') {
        j += 1;
    }
    (j > k + 1 && j < chars.len() && chars[j].1 == '>').then_some(j)
}

//! Surface syntax: lexer, parser and pretty-printer.
//!
//! ```text
//! program := decl* (term | "check" term ":" type)
//! decl    := "primitive" IDENT ":" type ";"
//! type    := "real" | "real" "[" sens "]" | "nat" "[" sens "]"
//!          | "!" "[" sens "]" type "-o" type | "forall" IDENT ":" kind "." type
//!          | type "*" type | type "&" type | IDENT ("<" arg ("," arg)* ">")?
//! arg     := type | "[" sens "]"
//! kind    := "size" | "sens"
//! sens    := NUMBER | "inf" | IDENT | sens "+" sens | sens "*" sens
//!          | "max" "(" sens "," sens ")" | "sup" "(" IDENT ":" kind ")" "." sens
//!          | "scase" sens "{" "0" "=>" sens "|" IDENT "+" "1" "=>" sens "}"
//! ```
//!
//! Terms are described in the guide. Integer literals in term position are
//! naturals; literals written with `.` or `/` (optionally negative) are reals.

mod lexer;
mod parser;
mod pretty;

use std::fmt;

use thiserror::Error;

use crate::ast::{Loc, SensExpr, Term, Type};
pub use pretty::{pretty_program, pretty_sens, pretty_term, pretty_type, Pretty};

/// A parsed source file.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceProgram {
    pub prelude: Vec<(String, Type)>,
    pub body: Term,
    /// Present in check mode.
    pub goal: Option<Type>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept `max`, `sup` and `scase` in annotations.
    pub allow_extended: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("{loc}: lexical error: {message}")]
    Lex { loc: Loc, message: String },
    #[error("{loc}: parse error: expected {}, found {found}", ExpectedList(expected))]
    Parse {
        loc: Loc,
        expected: Vec<String>,
        found: String,
    },
    #[error("{loc}: {message}")]
    Semantic { loc: Loc, message: String },
}

struct ExpectedList<'a>(&'a [String]);

impl fmt::Display for ExpectedList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            [] => f.write_str("something else"),
            [one] => f.write_str(one),
            many => write!(f, "one of {}", many.join(", ")),
        }
    }
}

impl SyntaxError {
    fn lex(loc: Loc, message: String) -> Self {
        SyntaxError::Lex { loc, message }
    }

    fn parse(loc: Loc, expected: Vec<String>, found: String) -> Self {
        SyntaxError::Parse {
            loc,
            expected,
            found,
        }
    }

    fn semantic(loc: Loc, message: String) -> Self {
        SyntaxError::Semantic { loc, message }
    }

    pub fn loc(&self) -> Loc {
        match self {
            SyntaxError::Lex { loc, .. }
            | SyntaxError::Parse { loc, .. }
            | SyntaxError::Semantic { loc, .. } => *loc,
        }
    }
}

/// Parses a program with standard annotations only.
pub fn parse_program(text: &str) -> Result<SourceProgram, SyntaxError> {
    parse_program_with(text, ParseOptions::default())
}

pub fn parse_program_with(text: &str, opts: ParseOptions) -> Result<SourceProgram, SyntaxError> {
    parser::Parser::new(text, opts)?.program()
}

/// Parses a program whose identifiers may also refer to `extra_prelude`.
pub fn parse_program_with_prelude(
    text: &str,
    opts: ParseOptions,
    extra_prelude: &[(String, Type)],
) -> Result<SourceProgram, SyntaxError> {
    let mut p = parser::Parser::new(text, opts)?;
    p.add_prims(extra_prelude.iter().map(|(n, _)| n));
    let mut prog = p.program()?;
    let mut prelude = extra_prelude.to_vec();
    prelude.append(&mut prog.prelude);
    prog.prelude = prelude;
    Ok(prog)
}

/// Parses a file of `primitive` declarations.
pub fn parse_prelude(text: &str, opts: ParseOptions) -> Result<Vec<(String, Type)>, SyntaxError> {
    let mut p = parser::Parser::new(text, opts)?;
    let decls = p.decls()?;
    p.expect_eof()?;
    Ok(decls)
}

/// Parses a sensitivity expression; extended constructs are accepted.
pub fn parse_sens(text: &str) -> Result<SensExpr, SyntaxError> {
    let mut p = parser::Parser::new(text, ParseOptions { allow_extended: true })?;
    let s = p.sens()?;
    p.expect_eof()?;
    Ok(s)
}

/// Parses a type; extended constructs are accepted.
pub fn parse_type(text: &str) -> Result<Type, SyntaxError> {
    let mut p = parser::Parser::new(text, ParseOptions { allow_extended: true })?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a term in which the given names resolve to primitives.
pub fn parse_term(text: &str, prims: &[&str]) -> Result<Term, SyntaxError> {
    let mut p = parser::Parser::new(text, ParseOptions { allow_extended: true })?;
    let names: Vec<String> = prims.iter().map(|s| s.to_string()).collect();
    p.add_prims(names.iter());
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

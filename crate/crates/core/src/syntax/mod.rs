//! Concrete syntax for formulas, patterns and values.
//!
//! ```text
//! formula := unary ('&' unary)*
//! unary   := ff | sff | and(formula, formula) | [pat] unary | [| pat |] unary
//!          | max X. formula | if bexpr then unary | X | (formula)
//! pat     := T ! T | T ? T | call T m:f(T, ..) | ret T m:f/N = T
//! ```
//!
//! Atoms are lowercase or single-quoted, variables start with an uppercase
//! letter or `_`, and `#` starts a line comment.

mod lexer;
mod parser;
mod pretty;

use std::path::Path;

use thiserror::Error;

use crate::logic::{ActionPattern, BoolExpr, ClosedAction, Formula, Term, Value, WellFormedError};

pub use pretty::pretty;
pub(crate) use parser::Parser;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("ill-formed formula: {0}")]
    WellFormed(#[from] WellFormedError),
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Syntax { path: String, source: SyntaxError },
}

/// Parses without checking well-formedness or renaming binders.
pub fn parse_unchecked(text: &str) -> Result<Formula, SyntaxError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Parses, checks well-formedness and alpha-renames.
pub fn parse(text: &str) -> Result<Formula, SyntaxError> {
    let f = parse_unchecked(text)?;
    f.check_well_formed()?;
    Ok(f.alpha_rename())
}

pub fn parse_file(path: &Path) -> Result<Formula, LoadError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: name.clone(), source })?;
    parse(&text).map_err(|source| LoadError::Syntax { path: name, source })
}

fn whole<T>(text: &str, f: impl FnOnce(&mut Parser) -> Result<T, SyntaxError>) -> Result<T, SyntaxError> {
    let mut p = Parser::new(text)?;
    let out = f(&mut p)?;
    p.finish()?;
    Ok(out)
}

pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    whole(text, Parser::term)
}

pub fn parse_value(text: &str) -> Result<Value, SyntaxError> {
    whole(text, Parser::value)
}

pub fn parse_pattern(text: &str) -> Result<ActionPattern, SyntaxError> {
    whole(text, Parser::pattern)
}

pub fn parse_bexpr(text: &str) -> Result<BoolExpr, SyntaxError> {
    whole(text, Parser::bexpr)
}

/// Parses one event in trace-file syntax.
pub fn parse_event(text: &str) -> Result<ClosedAction, SyntaxError> {
    whole(text, Parser::event)
}

impl std::fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&pretty::pretty_bexpr(self))
    }
}

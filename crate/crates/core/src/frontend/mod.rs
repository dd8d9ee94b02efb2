//! Lexing and parsing of the mini-OMP-C input language.

pub mod affine;
pub mod ast;
pub mod lexer;
mod parser;
pub mod pretty;

use thiserror::Error;

pub use affine::AffineExpr;
pub use ast::{Ast, SourceLoc};
pub use lexer::{tokenize, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("{loc}: illegal character `{ch}`")]
    IllegalCharacter { loc: SourceLoc, ch: char },
    #[error("{loc}: integer literal out of range")]
    IntegerOverflow { loc: SourceLoc },
    #[error("{loc}: expected {expected}, found {found}")]
    SyntaxError { loc: SourceLoc, expected: String, found: String },
}

impl FrontendError {
    pub fn loc(&self) -> &SourceLoc {
        match self {
            FrontendError::IllegalCharacter { loc, .. }
            | FrontendError::IntegerOverflow { loc }
            | FrontendError::SyntaxError { loc, .. } => loc,
        }
    }
}

/// A pragma the analyzer does not handle. The pragma is dropped from the
/// AST and the file is marked as not covered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnsupportedPragma {
    pub loc: SourceLoc,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub ast: Ast,
    pub unsupported: Vec<UnsupportedPragma>,
}

/// Parse a token stream produced by [`tokenize`].
pub fn parse(tokens: &[Token]) -> Result<Parsed, FrontendError> {
    parser::parse(tokens)
}

/// Tokenize and parse `source`, attributing locations to `file`.
pub fn parse_source(file: &str, source: &str) -> Result<Parsed, FrontendError> {
    parse(&tokenize(file, source)?)
}

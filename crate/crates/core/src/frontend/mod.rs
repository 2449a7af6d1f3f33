//! Source text to AST and back.

mod lexer;
mod parser;
mod pretty;

pub use lexer::{tokenize, Literal, Token, TokenKind};
pub use parser::parse;
pub use pretty::{escape_string, pretty};

use crate::ast::Exp;
use crate::diag::Diagnostic;

/// Tokenizes and parses in one step.
pub fn parse_source(source: &str) -> Result<Exp, Vec<Diagnostic>> {
    let tokens = tokenize(source)?;
    parse(&tokens)
}

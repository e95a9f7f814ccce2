//! Lexing, parsing and printing of Tydi-lang source text.

pub mod ast;
pub mod lexer;
mod parser;
pub mod printer;

pub use ast::*;
pub use parser::{parse, parse_expr, parse_range};
pub use printer::print_ast;

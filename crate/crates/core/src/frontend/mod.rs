//! MiniHack front end: lexing, parsing, structural hashing, plain-AST trees
//! and the `ast-json` emitter.

pub mod ast;
mod hash;
mod json;
mod lexer;
mod parser;
mod plain;
pub mod printer;

use std::fmt;

pub use ast::*;
pub use hash::{hash_methods, method_digest, MethodHash};
pub use json::ast_to_json;
pub use lexer::{tokenize, Tok, Token};
pub use parser::{parse, visit_exprs};
pub use plain::{ast_to_plain_tree, method_to_plain_tree};

/// A parse failure with the offending location.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub file: String,
    pub start: (u32, u32),
    pub end: (u32, u32),
    pub message: String,
}

impl SyntaxError {
    pub(crate) fn at(start: (u32, u32), end: (u32, u32), message: impl Into<String>) -> Self {
        SyntaxError {
            file: String::new(),
            start,
            end,
            message: message.into(),
        }
    }

    pub(crate) fn in_file(mut self, file: &str) -> Self {
        self.file = file.to_string();
        self
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: syntax error: {}",
            self.file, self.start.0, self.start.1, self.message
        )
    }
}

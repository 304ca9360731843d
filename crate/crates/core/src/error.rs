//! Error types shared by the pipeline stages.

use thiserror::Error;

/// A source position, 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{pos}: lex error: {msg}")]
    Lex { pos: Pos, msg: String },
    #[error("{pos}: indentation error: {msg}")]
    Indent { pos: Pos, msg: String },
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Lex { pos, .. }
            | ParseError::Indent { pos, .. }
            | ParseError::Syntax { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElabError {
    #[error("{pos}: unresolved name `{name}`")]
    Unresolved { pos: Pos, name: String },
    #[error("{pos}: ambiguous name `{name}`: candidates {candidates:?}")]
    Ambiguous {
        pos: Pos,
        name: String,
        candidates: Vec<String>,
    },
    #[error("{pos}: duplicate sibling name `{name}` under `{parent}`")]
    DuplicateSibling {
        pos: Pos,
        name: String,
        parent: String,
    },
    #[error("{pos}: `{name}` is a reserved name")]
    Reserved { pos: Pos, name: String },
    #[error("{pos}: not supported: {msg}")]
    NotSupported { pos: Pos, msg: String },
    #[error("{pos}: {msg}")]
    Other { pos: Pos, msg: String },
}

impl ElabError {
    pub fn pos(&self) -> Pos {
        match self {
            ElabError::Unresolved { pos, .. }
            | ElabError::Ambiguous { pos, .. }
            | ElabError::DuplicateSibling { pos, .. }
            | ElabError::Reserved { pos, .. }
            | ElabError::NotSupported { pos, .. }
            | ElabError::Other { pos, .. } => *pos,
        }
    }
}

/// Top-level error for the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Elab(#[from] ElabError),
    #[error("model is not well-formed:\n{0}")]
    Wellformedness(String),
}

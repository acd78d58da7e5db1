use std::io;

use thiserror::Error;

/// Errors produced by the GloVe pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid UTF-8 in input at byte offset {offset}")]
    Decode { offset: usize },

    #[error("empty vocabulary: no word occurs at least {min_count} times")]
    EmptyVocabulary { min_count: u64 },

    #[error("undefined row: word id {0} has no co-occurrences")]
    UndefinedRow(u32),

    #[error("weighting function is undefined for negative input {0}")]
    Domain(f64),

    #[error("numeric overflow at record ({target}, {context}): {what}")]
    NumericOverflow {
        target: u32,
        context: u32,
        what: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown word: {0}")]
    UnknownWord(String),

    #[error("degenerate (all-zero) vector for word: {0}")]
    DegenerateVector(String),

    #[error("no candidate words remain after exclusion")]
    NoCandidate,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

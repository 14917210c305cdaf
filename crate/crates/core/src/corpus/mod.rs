//! Documents, tokenization, sentence segmentation, corpus I/O and the
//! synthetic corpus generator.

mod document;
mod io;
mod synth;
mod tokenize;

use thiserror::Error;

pub use document::{positional_slice, Document, Gender, OutcomeRecord, PiRecord, Reference};
pub use io::{load_corpus, write_corpus};
pub use synth::{
    generate_synthetic_corpus, generate_synthetic_records, SyntheticConfig, SyntheticRecord, SyntheticSample,
    DEFAULT_FILLER,
};
pub use tokenize::{segment_sentences, segment_tokens, sentence_spans, tokenize, word_count, Token};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: missing required field \"{field}\"")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: duplicate document id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
    #[error("invalid generator settings: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

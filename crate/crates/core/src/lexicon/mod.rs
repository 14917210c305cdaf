//! Promotional lexicon, neutral-synonym table and word-rating lexicons.

mod ratings;
mod synonyms;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::corpus::{tokenize, Document};

pub use ratings::{load_rating_lexicon, Rating, RatingField, RatingLexicon};
pub use synonyms::{load_synonym_table, SynonymTable, STARTER_SYNONYMS};

/// The built-in lexicon file.
pub const DEFAULT_LEXICON: &str = include_str!("../../data/promotional_terms.txt");
pub const DEFAULT_LEXICON_VERSION: &str = "builtin-139";

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon is empty")]
    Empty,
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("synonym table: line {line}: {msg}")]
    Synonym { line: usize, msg: String },
    #[error("rating file: row {row}: {msg}")]
    Rating { row: usize, msg: String },
    #[error("rating file: {0}")]
    RatingFile(String),
}

/// A set of lowercase single-token terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    terms: BTreeSet<String>,
    version: String,
}

impl Default for Lexicon {
    fn default() -> Self {
        let (lex, _) = Lexicon::parse(DEFAULT_LEXICON, DEFAULT_LEXICON_VERSION).expect("built-in lexicon parses");
        lex
    }
}

impl Lexicon {
    /// Builds a lexicon from terms, lowercasing them. Duplicates collapse.
    pub fn new<I, S>(terms: I, version: impl Into<String>) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for (i, t) in terms.into_iter().enumerate() {
            let t = t.as_ref().trim().to_lowercase();
            check_single_token(&t).map_err(|msg| LexiconError::Line { line: i + 1, msg })?;
            set.insert(t);
        }
        if set.is_empty() {
            return Err(LexiconError::Empty);
        }
        Ok(Lexicon { terms: set, version: version.into() })
    }

    /// Parses the lexicon file format: one term per line, `#` comments.
    /// Returns the lexicon and any warnings (duplicates, case folding).
    pub fn parse(src: &str, version: impl Into<String>) -> Result<(Self, Vec<String>), LexiconError> {
        let mut set = BTreeSet::new();
        let mut warnings = Vec::new();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let term = line.to_lowercase();
            if term != line {
                warnings.push(format!("line {}: term {line:?} lowercased", i + 1));
            }
            check_single_token(&term).map_err(|msg| LexiconError::Line { line: i + 1, msg })?;
            if !set.insert(term.clone()) {
                warnings.push(format!("line {}: duplicate term {term:?} ignored", i + 1));
            }
        }
        if set.is_empty() {
            return Err(LexiconError::Empty);
        }
        Ok((Lexicon { terms: set, version: version.into() }, warnings))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.terms.contains(word)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in sorted order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// Same terms minus `drop`; errors if nothing remains.
    pub fn without<'a>(&self, drop: impl IntoIterator<Item = &'a str>, version: impl Into<String>) -> Result<Self, LexiconError> {
        let mut terms = self.terms.clone();
        for t in drop {
            terms.remove(t);
        }
        if terms.is_empty() {
            return Err(LexiconError::Empty);
        }
        Ok(Lexicon { terms, version: version.into() })
    }
}

fn check_single_token(term: &str) -> Result<(), String> {
    let toks = tokenize(term);
    if toks.len() == 1 && toks[0].surface == term {
        Ok(())
    } else {
        Err(format!("term {term:?} is not a single token"))
    }
}

/// The built-in lexicon, or exactly the terms of `override_src` when given.
pub fn load_promotional_lexicon(override_src: Option<&str>) -> Result<(Lexicon, Vec<String>), LexiconError> {
    match override_src {
        None => Ok((Lexicon::default(), Vec::new())),
        Some(src) => Lexicon::parse(src, "override"),
    }
}

/// One promotional token in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub token_index: usize,
    pub term: String,
    pub sentence_index: usize,
}

/// Every token whose lowercase form is a lexicon term, in token order.
pub fn match_promotional(doc: &Document, lexicon: &Lexicon) -> Vec<Occurrence> {
    let sentence_of = doc.sentence_index_of_tokens();
    doc.tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lexicon.contains(&t.lower))
        .map(|(i, t)| Occurrence { token_index: i, term: t.lower.clone(), sentence_index: sentence_of[i] })
        .collect()
}

/// Number of promotional tokens; cheaper than [`match_promotional`].
pub fn count_promotional(doc: &Document, lexicon: &Lexicon) -> usize {
    doc.tokens.iter().filter(|t| lexicon.contains(&t.lower)).count()
}

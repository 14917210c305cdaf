use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::tokenize::{segment_tokens, tokenize, Token};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    Other,
    #[default]
    #[serde(other)]
    Unknown,
}

impl Gender {
    pub fn as_str(&self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Other => "other",
            Gender::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PiRecord {
    pub gender: Gender,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    pub prior_publications: u64,
    pub prior_citations: u64,
    pub prior_applications: u64,
    pub prior_successes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    #[serde(rename = "journal")]
    pub journal_id: String,
    #[serde(rename = "year")]
    pub pub_year: i32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutcomeRecord {
    pub publication_count: u64,
    pub jifs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disciplines: Option<Vec<String>>,
}

impl OutcomeRecord {
    pub fn mean_jif(&self) -> Option<f64> {
        if self.jifs.is_empty() {
            None
        } else {
            Some(self.jifs.iter().sum::<f64>() / self.jifs.len() as f64)
        }
    }

    pub fn max_jif(&self) -> Option<f64> {
        self.jifs.iter().copied().reduce(f64::max)
    }
}

/// One proposal: text plus metadata. Tokens and sentences are derived from
/// `raw_text` at construction and never change afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub tokens: Vec<Token>,
    /// Token-index ranges partitioning `tokens`.
    pub sentences: Vec<Range<usize>>,
    pub year: i32,
    pub funded: Option<bool>,
    pub program: String,
    pub grant_type: String,
    pub applied_amount: Option<f64>,
    pub awarded_amount: Option<f64>,
    pub pi: PiRecord,
    pub bibliography: Option<Vec<Reference>>,
    pub outcomes: Option<OutcomeRecord>,
}

impl Document {
    /// Tokenizes and segments `text`; all metadata starts empty.
    pub fn from_text(id: impl Into<String>, text: impl Into<String>) -> Self {
        let raw_text = text.into();
        let tokens = tokenize(&raw_text);
        let sentences = segment_tokens(&raw_text, &tokens);
        Document {
            id: id.into(),
            raw_text,
            tokens,
            sentences,
            year: 0,
            funded: None,
            program: String::new(),
            grant_type: String::new(),
            applied_amount: None,
            awarded_amount: None,
            pi: PiRecord::default(),
            bibliography: None,
            outcomes: None,
        }
    }

    /// Same metadata, new text, with sentence ranges carried over from `self`.
    ///
    /// Used for substitution replicas, whose token count equals the
    /// original's. Falls back to fresh segmentation if the counts differ.
    pub fn with_replaced_text(&self, text: String) -> Self {
        let tokens = tokenize(&text);
        let sentences = if tokens.len() == self.tokens.len() {
            self.sentences.clone()
        } else {
            segment_tokens(&text, &tokens)
        };
        Document {
            raw_text: text,
            tokens,
            sentences,
            ..self.clone_metadata()
        }
    }

    fn clone_metadata(&self) -> Self {
        Document {
            id: self.id.clone(),
            raw_text: String::new(),
            tokens: Vec::new(),
            sentences: Vec::new(),
            year: self.year,
            funded: self.funded,
            program: self.program.clone(),
            grant_type: self.grant_type.clone(),
            applied_amount: self.applied_amount,
            awarded_amount: self.awarded_amount,
            pi: self.pi.clone(),
            bibliography: self.bibliography.clone(),
            outcomes: self.outcomes.clone(),
        }
    }

    pub fn word_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Sentence index for every token.
    pub fn sentence_index_of_tokens(&self) -> Vec<usize> {
        let mut out = vec![0; self.tokens.len()];
        for (si, r) in self.sentences.iter().enumerate() {
            for slot in &mut out[r.clone()] {
                *slot = si;
            }
        }
        out
    }

    /// Byte span of sentence `i`: from its first token up to the first token
    /// of the next sentence (or end of text), trailing whitespace trimmed.
    pub fn sentence_span(&self, i: usize) -> Range<usize> {
        let r = &self.sentences[i];
        let start = self.tokens[r.start].start;
        let end = match self.sentences.get(i + 1) {
            Some(next) => self.tokens[next.start].start,
            None => self.raw_text.len(),
        };
        let piece = &self.raw_text[start..end];
        start..start + piece.trim_end().len()
    }

    pub fn sentence_text(&self, i: usize) -> &str {
        &self.raw_text[self.sentence_span(i)]
    }
}

/// First and last `window` tokens. When the document has fewer than
/// `2 * window` tokens the two slices overlap; below `window` tokens both are
/// the whole document.
pub fn positional_slice(doc: &Document, window: usize) -> (&[Token], &[Token]) {
    let n = doc.tokens.len();
    let w = window.max(1).min(n);
    (&doc.tokens[..w], &doc.tokens[n - w..])
}

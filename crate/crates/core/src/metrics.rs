//! Document-level features: promotional density in several counting modes,
//! positional density, sentence incidence, readability and rating means.
//!
//! Densities are proportions (0.01 is one promotional word per hundred);
//! display code converts to percent.

use std::collections::BTreeSet;
use std::io::Write;

use thiserror::Error;

use crate::corpus::{positional_slice, Document, Token};
use crate::lexicon::{Lexicon, RatingField, RatingLexicon};

pub use crate::stats::median_mad;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("document {0:?}: zero-length document")]
    EmptyDocument(String),
    #[error("feature export: {0}")]
    Export(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    AllOccurrences,
    /// Each distinct promotional term counts once per document.
    UniqueTerms,
}

fn promo_count_in(tokens: &[Token], lexicon: &Lexicon) -> usize {
    tokens.iter().filter(|t| lexicon.contains(&t.lower)).count()
}

pub fn promo_fraction(doc: &Document, lexicon: &Lexicon, mode: CountMode) -> Result<f64, MetricsError> {
    if doc.is_empty() {
        return Err(MetricsError::EmptyDocument(doc.id.clone()));
    }
    let count = match mode {
        CountMode::AllOccurrences => promo_count_in(&doc.tokens, lexicon),
        CountMode::UniqueTerms => doc
            .tokens
            .iter()
            .filter(|t| lexicon.contains(&t.lower))
            .map(|t| t.lower.as_str())
            .collect::<BTreeSet<_>>()
            .len(),
    };
    Ok(count as f64 / doc.word_count() as f64)
}

/// Promotional fraction inside the first and last `window` tokens.
pub fn positional_density(doc: &Document, lexicon: &Lexicon, window: usize) -> Result<(f64, f64), MetricsError> {
    if doc.is_empty() {
        return Err(MetricsError::EmptyDocument(doc.id.clone()));
    }
    let (head, tail) = positional_slice(doc, window);
    let frac = |s: &[Token]| promo_count_in(s, lexicon) as f64 / s.len() as f64;
    Ok((frac(head), frac(tail)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentenceIncidence {
    pub promo_per_sentence: f64,
    pub fraction_sentences_with_promo: f64,
}

pub fn sentence_incidence(doc: &Document, lexicon: &Lexicon) -> Result<SentenceIncidence, MetricsError> {
    if doc.sentences.is_empty() {
        return Err(MetricsError::EmptyDocument(doc.id.clone()));
    }
    let mut total = 0usize;
    let mut with = 0usize;
    for r in &doc.sentences {
        let c = promo_count_in(&doc.tokens[r.clone()], lexicon);
        total += c;
        with += usize::from(c > 0);
    }
    let n = doc.sentences.len() as f64;
    Ok(SentenceIncidence { promo_per_sentence: total as f64 / n, fraction_sentences_with_promo: with as f64 / n })
}

/// A readability score over a tokenized, segmented document.
pub trait Readability: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, doc: &Document) -> f64;
}

/// Flesch reading ease:
/// `206.835 - 1.015 * words/sentences - 84.6 * syllables/words`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FleschReadingEase;

impl Readability for FleschReadingEase {
    fn name(&self) -> &str {
        "flesch-reading-ease"
    }

    fn score(&self, doc: &Document) -> f64 {
        let words = doc.word_count().max(1) as f64;
        let sentences = doc.sentences.len().max(1) as f64;
        let syllables: usize = doc.tokens.iter().map(|t| syllables(&t.lower)).sum();
        206.835 - 1.015 * (words / sentences) - 84.6 * (syllables as f64 / words)
    }
}

/// Vowel-group syllable estimate with a silent final `e`; at least 1.
pub fn syllables(word: &str) -> usize {
    let chars: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).flat_map(char::to_lowercase).collect();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut prev = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    let n = chars.len();
    if groups > 1 && n >= 2 && chars[n - 1] == 'e' && !is_vowel(chars[n - 2]) {
        let le = n >= 3 && chars[n - 2] == 'l' && !is_vowel(chars[n - 3]);
        if !le {
            groups -= 1;
        }
    }
    groups.max(1)
}

/// Mean rating over the document's rated tokens; `None` if none is rated.
pub fn lexicon_mean(doc: &Document, ratings: &RatingLexicon, field: RatingField) -> Option<f64> {
    let vals: Vec<f64> = doc.tokens.iter().filter_map(|t| ratings.get(&t.lower).and_then(|r| r.field(field))).collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub promo_count: usize,
    pub promo_fraction: f64,
    pub promo_fraction_unique: f64,
    pub head_density: f64,
    pub tail_density: f64,
    pub promo_per_sentence: f64,
    /// Fraction of sentences containing at least one promotional word.
    pub sentence_incidence: f64,
    pub word_count: usize,
    pub sentence_count: usize,
    pub readability: f64,
    pub concreteness: Option<f64>,
    pub reference_count: Option<usize>,
}

pub struct FeatureOptions<'a> {
    pub window: usize,
    pub ratings: Option<&'a RatingLexicon>,
    pub readability: &'a dyn Readability,
}

impl Default for FeatureOptions<'_> {
    fn default() -> Self {
        FeatureOptions { window: 500, ratings: None, readability: &FleschReadingEase }
    }
}

pub fn compute_features(doc: &Document, lexicon: &Lexicon, opts: &FeatureOptions<'_>) -> Result<FeatureVector, MetricsError> {
    let (head_density, tail_density) = positional_density(doc, lexicon, opts.window)?;
    let inc = sentence_incidence(doc, lexicon)?;
    Ok(FeatureVector {
        promo_count: promo_count_in(&doc.tokens, lexicon),
        promo_fraction: promo_fraction(doc, lexicon, CountMode::AllOccurrences)?,
        promo_fraction_unique: promo_fraction(doc, lexicon, CountMode::UniqueTerms)?,
        head_density,
        tail_density,
        promo_per_sentence: inc.promo_per_sentence,
        sentence_incidence: inc.fraction_sentences_with_promo,
        word_count: doc.word_count(),
        sentence_count: doc.sentences.len(),
        readability: opts.readability.score(doc),
        concreteness: opts.ratings.and_then(|r| lexicon_mean(doc, r, RatingField::Concreteness)),
        reference_count: doc.bibliography.as_ref().map(Vec::len),
    })
}

/// Column order of the feature table.
pub const FEATURE_COLUMNS: &[&str] = &[
    "id",
    "year",
    "funded",
    "program",
    "grant_type",
    "applied_amount",
    "awarded_amount",
    "pi_gender",
    "pi_age",
    "pi_prior_publications",
    "pi_prior_citations",
    "pi_prior_applications",
    "pi_prior_successes",
    "promo_count",
    "word_count",
    "sentence_count",
    "promo_fraction",
    "promo_fraction_unique",
    "head_density",
    "tail_density",
    "promo_per_sentence",
    "sentence_incidence",
    "readability",
    "concreteness",
    "reference_count",
    "publication_count",
    "mean_jif",
    "max_jif",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes one comma-separated row per document with [`FEATURE_COLUMNS`].
pub fn write_feature_table<W: Write>(sink: W, rows: &[(&Document, &FeatureVector)]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(sink);
    let err = |e: csv::Error| MetricsError::Export(e.to_string());
    w.write_record(FEATURE_COLUMNS).map_err(err)?;
    for (d, f) in rows {
        let record = [
            d.id.clone(),
            d.year.to_string(),
            opt(d.funded.map(u8::from)),
            d.program.clone(),
            d.grant_type.clone(),
            opt(d.applied_amount),
            opt(d.awarded_amount),
            d.pi.gender.as_str().to_string(),
            opt(d.pi.age),
            d.pi.prior_publications.to_string(),
            d.pi.prior_citations.to_string(),
            d.pi.prior_applications.to_string(),
            d.pi.prior_successes.to_string(),
            f.promo_count.to_string(),
            f.word_count.to_string(),
            f.sentence_count.to_string(),
            f.promo_fraction.to_string(),
            f.promo_fraction_unique.to_string(),
            f.head_density.to_string(),
            f.tail_density.to_string(),
            f.promo_per_sentence.to_string(),
            f.sentence_incidence.to_string(),
            f.readability.to_string(),
            opt(f.concreteness),
            opt(f.reference_count),
            opt(d.outcomes.as_ref().map(|o| o.publication_count)),
            opt(d.outcomes.as_ref().and_then(|o| o.mean_jif())),
            opt(d.outcomes.as_ref().and_then(|o| o.max_jif())),
        ];
        w.write_record(&record).map_err(err)?;
    }
    w.flush().map_err(|e| MetricsError::Export(e.to_string()))?;
    Ok(())
}

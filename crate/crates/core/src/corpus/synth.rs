//! Synthetic corpora with a known funding model.
//!
//! Each record draws a length, a promotional density from a Beta
//! distribution, and PI/grant covariates. The funded flag follows
//! `logit P(funded) = c + beta_promo * f + beta_pubs * ln(1 + pubs) + year_effect`
//! where `f` is the realized promotional fraction of the emitted text and the
//! intercept `c` is solved so that the expected funding rate equals
//! `base_rate` on the drawn covariates.

use rand::seq::{index, IndexedRandom};
use rand::Rng as _;
use rand_distr::{Beta, Distribution, Poisson};

use super::document::{Document, Gender, PiRecord};
use super::tokenize::tokenize;
use super::CorpusError;
use crate::lexicon::Lexicon;
use crate::seed::{Rng, SeedPath};

/// Neutral filler vocabulary; none of these is a promotional term.
pub const DEFAULT_FILLER: &[&str] = &[
    "the", "of", "and", "to", "in", "we", "will", "this", "that", "for", "with", "on", "by", "study", "data", "cells",
    "model", "analysis", "method", "results", "protein", "gene", "expression", "sample", "samples", "cohort",
    "patients", "tissue", "response", "level", "levels", "measure", "measures", "test", "tests", "group", "groups",
    "role", "effect", "effects", "mechanism", "pathway", "signal", "process", "structure", "function", "activity",
    "region", "regions", "population", "time", "rate", "change", "changes", "factor", "factors", "project", "aim",
    "aims", "approach", "design", "work", "team", "year", "years", "site", "sites", "using", "based", "between",
    "within", "during", "after", "before", "under", "over", "these", "those", "our", "their", "its", "from", "as",
    "at", "be", "is", "are", "was", "were", "has", "have", "can", "may", "also", "each", "both", "which", "where",
    "when", "how", "whether", "into", "through", "such", "other", "more", "less", "specific", "common", "current",
    "previous", "prior", "further", "standard", "typical", "additional", "different", "related", "available",
    "observed", "measured", "collected", "described", "reported", "proposed", "examine", "determine", "identify",
    "compare", "assess", "evaluate", "develop", "apply", "extend", "provide", "include", "obtain", "estimate",
    "record", "review",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_docs: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Mean sentence length in words.
    pub sentence_words: usize,
    /// Mean of the Beta distribution of target promotional density.
    pub density_mean: f64,
    /// Beta concentration `a + b`; larger is tighter around the mean.
    pub density_concentration: f64,
    /// True logit coefficient on the promotional fraction (proportion scale).
    pub beta_promo: f64,
    pub base_rate: f64,
    pub beta_log_publications: f64,
    pub mean_publications: f64,
    pub years: Vec<i32>,
    pub year_effects: Vec<f64>,
    pub programs: Vec<String>,
    pub grant_types: Vec<String>,
    pub promo_terms: Vec<String>,
    pub filler: Vec<String>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_docs: 1000,
            min_words: 300,
            max_words: 700,
            sentence_words: 26,
            density_mean: 0.01,
            density_concentration: 400.0,
            beta_promo: 37.7,
            base_rate: 0.168,
            beta_log_publications: 0.2,
            mean_publications: 20.0,
            years: vec![2016, 2017, 2018, 2019, 2020],
            year_effects: vec![0.0, 0.1, -0.1, 0.05, 0.0],
            programs: vec!["bio".into(), "med".into(), "tech".into()],
            grant_types: vec!["project".into(), "fellowship".into()],
            promo_terms: Lexicon::default().terms().map(str::to_string).collect(),
            filler: DEFAULT_FILLER.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::Config(m.to_string()));
        if self.min_words == 0 || self.min_words > self.max_words {
            return bad("need 1 <= min_words <= max_words");
        }
        if self.sentence_words == 0 {
            return bad("sentence_words must be positive");
        }
        if !(self.density_mean > 0.0 && self.density_mean < 1.0) {
            return bad("density_mean must lie in (0, 1)");
        }
        if !(self.density_concentration.is_finite() && self.density_concentration > 0.0) {
            return bad("density_concentration must be positive");
        }
        if !(self.base_rate > 0.0 && self.base_rate < 1.0) {
            return bad("base_rate must lie in (0, 1)");
        }
        if !(self.mean_publications.is_finite() && self.mean_publications > 0.0) {
            return bad("mean_publications must be positive");
        }
        if !self.beta_promo.is_finite() || !self.beta_log_publications.is_finite() {
            return bad("coefficients must be finite");
        }
        if self.years.is_empty() || self.years.len() != self.year_effects.len() {
            return bad("years and year_effects must be non-empty and of equal length");
        }
        if self.programs.is_empty() || self.grant_types.is_empty() {
            return bad("programs and grant_types must be non-empty");
        }
        if self.promo_terms.is_empty() || self.filler.is_empty() {
            return bad("promo_terms and filler must be non-empty");
        }
        for w in self.promo_terms.iter().chain(&self.filler) {
            let toks = tokenize(w);
            if toks.len() != 1 || toks[0].surface != *w {
                return bad(&format!("vocabulary entry {w:?} is not a single token"));
            }
        }
        let promo: std::collections::HashSet<String> = self.promo_terms.iter().map(|s| s.to_lowercase()).collect();
        if let Some(w) = self.filler.iter().find(|w| promo.contains(&w.to_lowercase())) {
            return bad(&format!("filler word {w:?} is also a promotional term"));
        }
        Ok(())
    }
}

/// Everything about a synthetic document except its text.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecord {
    pub id: String,
    pub year: i32,
    pub program: String,
    pub grant_type: String,
    pub gender: Gender,
    pub prior_publications: u64,
    pub word_count: usize,
    pub promo_count: usize,
    pub funded: bool,
}

impl SyntheticRecord {
    pub fn promo_fraction(&self) -> f64 {
        self.promo_count as f64 / self.word_count as f64
    }

    pub fn log_publications(&self) -> f64 {
        (self.prior_publications as f64).ln_1p()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub records: Vec<SyntheticRecord>,
    pub intercept: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn solve_intercept(linear: &[f64], target: f64) -> f64 {
    if linear.is_empty() {
        return (target / (1.0 - target)).ln();
    }
    let mean_p = |c: f64| linear.iter().map(|&e| sigmoid(c + e)).sum::<f64>() / linear.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_p(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Draws the covariates and outcomes of a synthetic corpus.
pub fn generate_synthetic_records(config: &SyntheticConfig, seed: u64) -> Result<SyntheticSample, CorpusError> {
    config.validate()?;
    let mut rng = SeedPath::new(seed).label("synthetic-records").rng();
    let a = config.density_mean * config.density_concentration;
    let b = (1.0 - config.density_mean) * config.density_concentration;
    let density = Beta::new(a, b).map_err(|e| CorpusError::Config(format!("density distribution: {e}")))?;
    let pubs =
        Poisson::new(config.mean_publications).map_err(|e| CorpusError::Config(format!("publications: {e}")))?;
    let width = (config.n_docs.max(1) as f64).log10().floor() as usize + 1;

    let mut records = Vec::with_capacity(config.n_docs);
    let mut linear = Vec::with_capacity(config.n_docs);
    for i in 0..config.n_docs {
        let word_count = rng.random_range(config.min_words..=config.max_words);
        let target: f64 = density.sample(&mut rng);
        let promo_count = ((target * word_count as f64).round() as usize).min(word_count);
        let year_idx = rng.random_range(0..config.years.len());
        let program = config.programs.choose(&mut rng).expect("non-empty").clone();
        let grant_type = config.grant_types.choose(&mut rng).expect("non-empty").clone();
        let gender = if rng.random::<f64>() < 0.5 { Gender::Female } else { Gender::Male };
        let prior_publications = pubs.sample(&mut rng) as u64;
        let rec = SyntheticRecord {
            id: format!("syn{:0width$}", i, width = width),
            year: config.years[year_idx],
            program,
            grant_type,
            gender,
            prior_publications,
            word_count,
            promo_count,
            funded: false,
        };
        linear.push(
            config.beta_promo * rec.promo_fraction()
                + config.beta_log_publications * rec.log_publications()
                + config.year_effects[year_idx],
        );
        records.push(rec);
    }
    let intercept = solve_intercept(&linear, config.base_rate);
    for (rec, eta) in records.iter_mut().zip(&linear) {
        rec.funded = rng.random::<f64>() < sigmoid(intercept + eta);
    }
    Ok(SyntheticSample { records, intercept })
}

fn capitalize(word: &str) -> String {
    let mut cs = word.chars();
    match cs.next() {
        Some(f) => f.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

fn render_text(rec: &SyntheticRecord, config: &SyntheticConfig, rng: &mut Rng) -> String {
    let n = rec.word_count;
    let mut is_promo = vec![false; n];
    for i in index::sample(rng, n, rec.promo_count) {
        is_promo[i] = true;
    }
    let words: Vec<&str> = is_promo
        .iter()
        .map(|&p| {
            let pool = if p { &config.promo_terms } else { &config.filler };
            pool.choose(rng).expect("non-empty").as_str()
        })
        .collect();
    let lo = (config.sentence_words / 2).max(1);
    let hi = (config.sentence_words * 3 / 2).max(lo);
    let mut out = String::with_capacity(n * 8);
    let mut i = 0;
    while i < n {
        let len = rng.random_range(lo..=hi).min(n - i);
        if !out.is_empty() {
            out.push(' ');
        }
        for (k, w) in words[i..i + len].iter().enumerate() {
            if k == 0 {
                out.push_str(&capitalize(w));
            } else {
                out.push(' ');
                out.push_str(w);
            }
        }
        out.push('.');
        i += len;
    }
    out
}

/// Generates a full synthetic corpus, text included. Deterministic in
/// `(config, seed)`; the records equal [`generate_synthetic_records`] for the
/// same inputs.
pub fn generate_synthetic_corpus(config: &SyntheticConfig, seed: u64) -> Result<Vec<Document>, CorpusError> {
    let sample = generate_synthetic_records(config, seed)?;
    let mut rng = SeedPath::new(seed).label("synthetic-text").rng();
    let docs = sample
        .records
        .iter()
        .map(|rec| {
            let mut doc = Document::from_text(rec.id.clone(), render_text(rec, config, &mut rng));
            doc.year = rec.year;
            doc.funded = Some(rec.funded);
            doc.program = rec.program.clone();
            doc.grant_type = rec.grant_type.clone();
            let applications = rec.prior_publications / 4 + 1;
            doc.pi = PiRecord {
                gender: rec.gender.clone(),
                age: Some(35 + (rec.prior_publications % 25) as u32),
                prior_publications: rec.prior_publications,
                prior_citations: rec.prior_publications * 12,
                prior_applications: applications,
                prior_successes: applications / 2,
            };
            doc.applied_amount = Some(100_000.0 + 1_000.0 * rec.word_count as f64);
            doc
        })
        .collect();
    Ok(docs)
}

//! Synonym-substitution sentiment experiments and measurement-error
//! robustness sweeps.
//!
//! A substitution trial replaces a share of a document's promotional words
//! with neutral synonyms, rescores the affected sentences and asks whether
//! the mean positive sentiment fell. Over `trials` draws the count of falls
//! `K` is tested against Binomial(trials, 1/2), one-sided.

use std::collections::BTreeSet;
use std::io::Write;

use rand::SeedableRng;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{CorpusError, Document};
use crate::inference::{binomial_test, InferenceError, TestSide};
use crate::lexicon::{match_promotional, Lexicon, LexiconError, SynonymTable};
use crate::metrics::MetricsError;
use crate::seed::{trial_seed, Rng};

mod perturb;
mod scorer;
mod substitute;

pub use perturb::{
    perturb_lexicon, perturb_occurrences, perturbed_count, robustness_sweep, synthetic_model_spec, write_sweep_report,
    Perturbation, PerturbedCount, SweepInput, SweepOptions, SweepReport, SweepRun, DEFAULT_OCCURRENCE_DROP_CAP,
};
pub use scorer::{
    baseline_valence_scorer, external_scorer, score_sentences, BaselineValenceScorer, ExternalProcessScorer,
    ScorerError, ScorerHandle, SentenceScorer, SentimentScore, DEFAULT_SCORER_TIMEOUT, SCORE_SUM_TOLERANCE,
};
pub use substitute::{apply_edits, plan_substitution, replacement_count, substitute_once, Edit, Replica, SubstitutionPlan};

/// One-sided significance level for the per-document binomial test.
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_TRIALS: u64 = 100;
pub const DEFAULT_LEVELS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("document {0:?}: nothing to substitute")]
    NothingToSubstitute(String),
    #[error("substitution level {0} outside (0, 1]")]
    InvalidLevel(f64),
    #[error("no applicable documents at level {0}")]
    NoApplicable(f64),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentOptions {
    pub trials: u64,
    pub seed: u64,
    pub alpha: f64,
    /// Average over every sentence instead of the promo-bearing ones.
    pub all_sentences: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions { trials: DEFAULT_TRIALS, seed: 0, alpha: DEFAULT_ALPHA, all_sentences: false }
    }
}

/// Result of the substitution trials for one document at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub doc_id: String,
    pub level: f64,
    pub trials: u64,
    /// Trials in which the original mean positive score was strictly higher.
    pub k: u64,
    pub p_value: f64,
    pub significant_drop: bool,
    pub n_promo_sentences: usize,
    pub n_occurrences: usize,
    /// False when the document has no promotional sentence.
    pub applicable: bool,
    pub baseline: f64,
    /// Mean over trials of the replica mean positive score.
    pub replica_mean: f64,
    /// Selected occurrences without a synonym entry, summed over trials.
    pub skipped_missing: u64,
    pub all_sentences: bool,
}

fn not_applicable(doc: &Document, level: f64, opts: &ExperimentOptions) -> ExperimentOutcome {
    ExperimentOutcome {
        doc_id: doc.id.clone(),
        level,
        trials: opts.trials,
        k: 0,
        p_value: 1.0,
        significant_drop: false,
        n_promo_sentences: 0,
        n_occurrences: 0,
        applicable: false,
        baseline: f64::NAN,
        replica_mean: f64::NAN,
        skipped_missing: 0,
        all_sentences: opts.all_sentences,
    }
}

fn mean_positive(scores: &[SentimentScore]) -> f64 {
    scores.iter().map(|s| s.positive).sum::<f64>() / scores.len() as f64
}

/// Runs `opts.trials` substitution trials on one document.
///
/// Only sentences that changed are sent to the scorer; unchanged sentences
/// reuse their original score, which the determinism contract makes exact.
pub fn run_substitution_experiment<S: SentenceScorer + ?Sized>(
    doc: &Document,
    lexicon: &Lexicon,
    synonyms: &SynonymTable,
    scorer: &S,
    level: f64,
    opts: &ExperimentOptions,
) -> Result<ExperimentOutcome, ExperimentError> {
    substitute::check_level(level)?;
    if opts.trials == 0 {
        return Err(ExperimentError::Invalid("at least one trial is required".into()));
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(ExperimentError::Invalid(format!("alpha {} outside (0, 1)", opts.alpha)));
    }
    let occurrences = match_promotional(doc, lexicon);
    let promo_sentences: BTreeSet<usize> = occurrences.iter().map(|o| o.sentence_index).collect();
    if promo_sentences.is_empty() {
        return Ok(not_applicable(doc, level, opts));
    }
    let scope: Vec<usize> =
        if opts.all_sentences { (0..doc.sentences.len()).collect() } else { promo_sentences.iter().copied().collect() };
    let spans: Vec<_> = scope.iter().map(|&i| doc.sentence_span(i)).collect();
    let texts: Vec<&str> = spans.iter().map(|r| &doc.raw_text[r.clone()]).collect();
    let original = score_sentences(scorer, &texts)?;
    let baseline = mean_positive(&original);

    // Per trial, per scope sentence: None for unchanged, or an index into `pending`.
    let mut slots: Vec<Vec<Option<usize>>> = Vec::with_capacity(opts.trials as usize);
    let mut pending: Vec<String> = Vec::new();
    let mut skipped = 0u64;
    for t in 0..opts.trials {
        let mut rng = Rng::seed_from_u64(trial_seed(opts.seed, &doc.id, t));
        let plan = plan_substitution(doc, &occurrences, level, synonyms, &mut rng);
        skipped += plan.skipped_missing as u64;
        let row = spans
            .iter()
            .map(|span| {
                let touched = plan.edits.iter().any(|e| e.span.start >= span.start && e.span.end <= span.end);
                touched.then(|| {
                    pending.push(apply_edits(&doc.raw_text[span.clone()], span.start, &plan.edits));
                    pending.len() - 1
                })
            })
            .collect();
        slots.push(row);
    }
    let refs: Vec<&str> = pending.iter().map(String::as_str).collect();
    let rescored = score_sentences(scorer, &refs)?;

    let mut k = 0u64;
    let mut replica_sum = 0.0;
    for row in &slots {
        let scores: Vec<SentimentScore> =
            row.iter().zip(&original).map(|(slot, orig)| slot.map_or(*orig, |j| rescored[j])).collect();
        let m = mean_positive(&scores);
        replica_sum += m;
        if baseline > m {
            k += 1;
        }
    }
    let p_value: f64 = binomial_test(k, opts.trials, 0.5, TestSide::Greater)?;
    Ok(ExperimentOutcome {
        doc_id: doc.id.clone(),
        level,
        trials: opts.trials,
        k,
        p_value,
        significant_drop: p_value < opts.alpha && 2 * k > opts.trials,
        n_promo_sentences: promo_sentences.len(),
        n_occurrences: occurrences.len(),
        applicable: true,
        baseline,
        replica_mean: replica_sum / opts.trials as f64,
        skipped_missing: skipped,
        all_sentences: opts.all_sentences,
    })
}

/// Every document at every level, documents in parallel. The result is
/// ordered level-major, then by document, regardless of scheduling.
pub fn run_corpus_experiment<S: SentenceScorer + ?Sized>(
    docs: &[Document],
    lexicon: &Lexicon,
    synonyms: &SynonymTable,
    scorer: &S,
    levels: &[f64],
    opts: &ExperimentOptions,
) -> Result<Vec<ExperimentOutcome>, ExperimentError> {
    for &l in levels {
        substitute::check_level(l)?;
    }
    let jobs: Vec<(f64, &Document)> = levels.iter().flat_map(|&l| docs.iter().map(move |d| (l, d))).collect();
    jobs.par_iter()
        .map(|&(level, doc)| run_substitution_experiment(doc, lexicon, synonyms, scorer, level, opts))
        .collect()
}

fn same_level(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

/// Share of applicable documents at `level` with a significant drop.
pub fn corpus_drop_fraction(outcomes: &[ExperimentOutcome], level: f64) -> Result<f64, ExperimentError> {
    let (n, sig) = outcomes
        .iter()
        .filter(|o| o.applicable && same_level(o.level, level))
        .fold((0usize, 0usize), |(n, s), o| (n + 1, s + usize::from(o.significant_drop)));
    if n == 0 {
        return Err(ExperimentError::NoApplicable(level));
    }
    Ok(sig as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropFractionRow {
    pub level: f64,
    pub n_documents: usize,
    pub n_applicable: usize,
    pub n_significant: usize,
    pub fraction: f64,
}

/// One row per level, in the order given.
pub fn drop_fraction_table(outcomes: &[ExperimentOutcome], levels: &[f64]) -> Result<Vec<DropFractionRow>, ExperimentError> {
    levels
        .iter()
        .map(|&level| {
            let at: Vec<&ExperimentOutcome> = outcomes.iter().filter(|o| same_level(o.level, level)).collect();
            let applicable = at.iter().filter(|o| o.applicable).count();
            let significant = at.iter().filter(|o| o.applicable && o.significant_drop).count();
            Ok(DropFractionRow {
                level,
                n_documents: at.len(),
                n_applicable: applicable,
                n_significant: significant,
                fraction: corpus_drop_fraction(outcomes, level)?,
            })
        })
        .collect()
}

fn csv_err(e: csv::Error) -> ExperimentError {
    ExperimentError::Invalid(format!("writing report: {e}"))
}

/// Per-document outcomes as comma-separated rows.
pub fn write_outcomes<W: Write>(sink: W, outcomes: &[ExperimentOutcome]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "doc_id",
        "level",
        "trials",
        "k",
        "p_value",
        "significant_drop",
        "n_promo_sentences",
        "n_occurrences",
        "applicable",
        "baseline",
        "replica_mean",
        "skipped_missing",
    ])
    .map_err(csv_err)?;
    for o in outcomes {
        let num = |v: f64| if v.is_finite() { v.to_string() } else { String::new() };
        w.write_record([
            o.doc_id.clone(),
            o.level.to_string(),
            o.trials.to_string(),
            o.k.to_string(),
            o.p_value.to_string(),
            o.significant_drop.to_string(),
            o.n_promo_sentences.to_string(),
            o.n_occurrences.to_string(),
            o.applicable.to_string(),
            num(o.baseline),
            num(o.replica_mean),
            o.skipped_missing.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| ExperimentError::Invalid(format!("writing report: {e}")))
}

/// The per-level drop table with a metadata header.
pub fn write_drop_table<W: Write>(
    mut sink: W,
    rows: &[DropFractionRow],
    opts: &ExperimentOptions,
    scorer: &str,
) -> Result<(), ExperimentError> {
    let io = |e: std::io::Error| ExperimentError::Invalid(format!("writing report: {e}"));
    writeln!(sink, "# alpha={}", opts.alpha).map_err(io)?;
    writeln!(sink, "# side=greater").map_err(io)?;
    writeln!(sink, "# trials={}", opts.trials).map_err(io)?;
    writeln!(sink, "# seed={}", opts.seed).map_err(io)?;
    writeln!(sink, "# sentences={}", if opts.all_sentences { "all" } else { "promo_bearing" }).map_err(io)?;
    writeln!(sink, "# scorer={scorer}").map_err(io)?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["level_percent", "n_documents", "n_applicable", "n_significant", "drop_fraction"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            format!("{}", (r.level * 100.0).round()),
            r.n_documents.to_string(),
            r.n_applicable.to_string(),
            r.n_significant.to_string(),
            r.fraction.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

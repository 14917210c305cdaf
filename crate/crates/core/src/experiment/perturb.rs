use std::collections::HashMap;
use std::io::Write;

use rand::seq::index;
use rayon::prelude::*;

use super::{ExperimentError, DEFAULT_ALPHA};
use crate::corpus::{generate_synthetic_corpus, generate_synthetic_records, Document, SyntheticConfig};
use crate::inference::{build_design, fit_model, DataTable, Family, ModelSpec};
use crate::lexicon::{match_promotional, Lexicon};
use crate::metrics::{promo_fraction, CountMode, MetricsError};
use crate::seed::SeedPath;

pub const DEFAULT_OCCURRENCE_DROP_CAP: f64 = 0.2;

/// A document's promotional count after dropping occurrences.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedCount {
    pub original: usize,
    /// Token indices of the dropped occurrences, ascending.
    pub dropped: Vec<usize>,
    pub promo_count: usize,
    pub promo_fraction: f64,
}

/// `m - round(frac * m)`.
pub fn perturbed_count(m: usize, frac: f64) -> usize {
    m - ((frac * m as f64).round() as usize).min(m)
}

fn check_drop(frac: f64, cap: f64) -> Result<(), ExperimentError> {
    if !(0.0..=1.0).contains(&cap) {
        return Err(ExperimentError::Invalid(format!("drop cap {cap} outside [0, 1]")));
    }
    if !(frac.is_finite() && (0.0..=cap).contains(&frac)) {
        return Err(ExperimentError::Invalid(format!("occurrence drop fraction {frac} outside [0, {cap}]")));
    }
    Ok(())
}

/// Treats `round(frac * m)` uniformly chosen promotional occurrences as
/// misclassified and recomputes the density without them.
pub fn perturb_occurrences(
    doc: &Document,
    lexicon: &Lexicon,
    frac: f64,
    cap: f64,
    seed: u64,
) -> Result<PerturbedCount, ExperimentError> {
    check_drop(frac, cap)?;
    if doc.is_empty() {
        return Err(MetricsError::EmptyDocument(doc.id.clone()).into());
    }
    let occ = match_promotional(doc, lexicon);
    let m = occ.len();
    let kept = perturbed_count(m, frac);
    let mut rng = SeedPath::new(seed).label("drop-occurrences").rng();
    let mut dropped: Vec<usize> = index::sample(&mut rng, m, m - kept).into_iter().map(|i| occ[i].token_index).collect();
    dropped.sort_unstable();
    Ok(PerturbedCount { original: m, dropped, promo_count: kept, promo_fraction: kept as f64 / doc.word_count() as f64 })
}

/// Removes `round(frac * |terms|)` uniformly chosen terms.
pub fn perturb_lexicon(lexicon: &Lexicon, frac: f64, seed: u64) -> Result<Lexicon, ExperimentError> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(ExperimentError::Invalid(format!("lexicon drop fraction {frac} outside (0, 1)")));
    }
    let terms: Vec<&str> = lexicon.terms().collect();
    let n_drop = (frac * terms.len() as f64).round() as usize;
    if n_drop >= terms.len() {
        return Err(ExperimentError::Invalid(format!("dropping {n_drop} of {} terms leaves an empty lexicon", terms.len())));
    }
    let mut rng = SeedPath::new(seed).label("drop-lexicon").rng();
    let drop: Vec<&str> = index::sample(&mut rng, terms.len(), n_drop).into_iter().map(|i| terms[i]).collect();
    let version = format!("{}-drop{}-seed{}", lexicon.version(), frac, seed);
    Ok(lexicon.without(drop, version)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    None,
    /// Drop a share of occurrences per document (at most `cap`).
    DropOccurrences { frac: f64, cap: f64 },
    /// Drop a share of lexicon terms, once per run.
    DropLexiconTerms { frac: f64 },
    /// Count each distinct term once per document.
    CountOnce,
}

impl Perturbation {
    pub fn describe(&self) -> String {
        match self {
            Perturbation::None => "none".into(),
            Perturbation::DropOccurrences { frac, cap } => format!("drop_occurrences(frac={frac}, cap={cap})"),
            Perturbation::DropLexiconTerms { frac } => format!("drop_lexicon_terms(frac={frac})"),
            Perturbation::CountOnce => "count_once".into(),
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        match *self {
            Perturbation::DropOccurrences { frac, cap } => check_drop(frac, cap),
            Perturbation::DropLexiconTerms { frac } if !(frac > 0.0 && frac < 1.0) => {
                Err(ExperimentError::Invalid(format!("lexicon drop fraction {frac} outside (0, 1)")))
            }
            _ => Ok(()),
        }
    }

    /// Only counts are needed, so generated corpora can skip rendering text.
    fn count_only(&self) -> bool {
        matches!(self, Perturbation::None | Perturbation::DropOccurrences { .. })
    }
}

/// What the sweep refits on.
#[derive(Debug, Clone, Copy)]
pub enum SweepInput<'a> {
    /// One corpus; `table` holds the model columns keyed by `id`.
    Fixed { docs: &'a [Document], table: &'a DataTable },
    /// A fresh synthetic corpus per run.
    Generated(&'a SyntheticConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub runs: u64,
    pub seed: u64,
    pub alpha: f64,
    /// Column replaced by the perturbed density and reported.
    pub focal: String,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { runs: 100, seed: 0, alpha: DEFAULT_ALPHA, focal: "promo_fraction".into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub run: u64,
    pub beta: Option<f64>,
    pub std_error: Option<f64>,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub perturbation: String,
    pub focal: String,
    pub alpha: f64,
    /// Unperturbed fit; only for a fixed corpus.
    pub baseline: Option<SweepRun>,
    pub runs: Vec<SweepRun>,
}

impl SweepReport {
    pub fn n_failed(&self) -> usize {
        self.runs.iter().filter(|r| r.error.is_some()).count()
    }

    /// Share of successful runs with `p < alpha`; `None` if every run failed.
    pub fn fraction_significant(&self) -> Option<f64> {
        let ok: Vec<f64> = self.runs.iter().filter_map(|r| r.p_value).collect();
        if ok.is_empty() {
            return None;
        }
        Some(ok.iter().filter(|&&p| p < self.alpha).count() as f64 / ok.len() as f64)
    }
}

/// The funding model fitted to synthetic corpora: funded on density and
/// log publications with year fixed effects.
pub fn synthetic_model_spec() -> ModelSpec {
    let mut spec = ModelSpec::new("funded", &["promo_fraction", "log_publications"], Family::Logit);
    spec.categorical_fe = vec!["year".into()];
    spec
}

fn fit_focal(table: &DataTable, spec: &ModelSpec, focal: &str, run: u64) -> SweepRun {
    let result = build_design::<f64>(table, spec).and_then(|data| fit_model(spec.family, &data.design, &data.y));
    let failed = |msg: String| SweepRun { run, beta: None, std_error: None, p_value: None, error: Some(msg) };
    match result {
        Err(e) => failed(e.to_string()),
        Ok(fit) if !fit.converged => failed(format!("not converged after {} iterations", fit.iterations)),
        Ok(fit) => match fit.index_of(focal) {
            None => failed(format!("focal column {focal:?} is not in the model")),
            Some(i) => SweepRun {
                run,
                beta: Some(fit.coefficients[i]),
                std_error: Some(fit.std_errors[i]),
                p_value: Some(fit.p_value(i)),
                error: None,
            },
        },
    }
}

struct SynthRow {
    id: String,
    funded: bool,
    year: i32,
    program: String,
    grant_type: String,
    log_publications: f64,
    promo_fraction: f64,
}

fn synthetic_table(rows: &[SynthRow], focal: &str) -> Result<DataTable, ExperimentError> {
    let headers = ["id", "funded", "year", "program", "grant_type", "log_publications", focal];
    let body = rows
        .iter()
        .map(|r| {
            vec![
                r.id.clone(),
                u8::from(r.funded).to_string(),
                r.year.to_string(),
                r.program.clone(),
                r.grant_type.clone(),
                r.log_publications.to_string(),
                r.promo_fraction.to_string(),
            ]
        })
        .collect();
    Ok(DataTable::new(headers.iter().map(|s| s.to_string()).collect(), body)?)
}

/// Perturbed density of every document for one run.
fn perturbed_densities(
    docs: &[&Document],
    lexicon: &Lexicon,
    perturbation: Perturbation,
    run_seed: u64,
) -> Result<Vec<f64>, ExperimentError> {
    match perturbation {
        Perturbation::None => docs
            .iter()
            .map(|d| Ok(promo_fraction(d, lexicon, CountMode::AllOccurrences)?))
            .collect(),
        Perturbation::CountOnce => docs.iter().map(|d| Ok(promo_fraction(d, lexicon, CountMode::UniqueTerms)?)).collect(),
        Perturbation::DropLexiconTerms { frac } => {
            let reduced = perturb_lexicon(lexicon, frac, run_seed)?;
            docs.iter().map(|d| Ok(promo_fraction(d, &reduced, CountMode::AllOccurrences)?)).collect()
        }
        Perturbation::DropOccurrences { frac, cap } => docs
            .iter()
            .map(|d| {
                let seed = SeedPath::new(run_seed).label(&d.id).seed();
                Ok(perturb_occurrences(d, lexicon, frac, cap, seed)?.promo_fraction)
            })
            .collect(),
    }
}

fn fixed_run(
    docs: &[&Document],
    table: &DataTable,
    lexicon: &Lexicon,
    spec: &ModelSpec,
    perturbation: Perturbation,
    focal: &str,
    run: u64,
    run_seed: u64,
) -> SweepRun {
    let result = perturbed_densities(docs, lexicon, perturbation, run_seed).and_then(|values| {
        let mut t = table.clone();
        t.set_column(focal, values.iter().map(f64::to_string).collect())?;
        Ok(t)
    });
    match result {
        Ok(t) => fit_focal(&t, spec, focal, run),
        Err(e) => SweepRun { run, beta: None, std_error: None, p_value: None, error: Some(e.to_string()) },
    }
}

fn generated_run(
    config: &SyntheticConfig,
    lexicon: &Lexicon,
    spec: &ModelSpec,
    perturbation: Perturbation,
    focal: &str,
    run: u64,
    run_seed: u64,
) -> SweepRun {
    let corpus_seed = SeedPath::new(run_seed).label("sweep-corpus").seed();
    let rows: Result<Vec<SynthRow>, ExperimentError> = if perturbation.count_only() {
        // Which occurrences are dropped does not change a count, so the
        // records suffice and the text is never rendered.
        generate_synthetic_records(config, corpus_seed).map_err(Into::into).map(|s| {
            let frac = match perturbation {
                Perturbation::DropOccurrences { frac, .. } => frac,
                _ => 0.0,
            };
            s.records
                .into_iter()
                .map(|r| SynthRow {
                    promo_fraction: perturbed_count(r.promo_count, frac) as f64 / r.word_count as f64,
                    log_publications: r.log_publications(),
                    id: r.id,
                    funded: r.funded,
                    year: r.year,
                    program: r.program,
                    grant_type: r.grant_type,
                })
                .collect()
        })
    } else {
        generate_synthetic_corpus(config, corpus_seed).map_err(Into::into).and_then(|docs| {
            let refs: Vec<&Document> = docs.iter().collect();
            let values = perturbed_densities(&refs, lexicon, perturbation, run_seed)?;
            Ok(docs
                .into_iter()
                .zip(values)
                .map(|(d, v)| SynthRow {
                    log_publications: (d.pi.prior_publications as f64).ln_1p(),
                    funded: d.funded.unwrap_or(false),
                    year: d.year,
                    promo_fraction: v,
                    id: d.id,
                    program: d.program,
                    grant_type: d.grant_type,
                })
                .collect())
        })
    };
    match rows.and_then(|rows| synthetic_table(&rows, focal)) {
        Ok(t) => fit_focal(&t, spec, focal, run),
        Err(e) => SweepRun { run, beta: None, std_error: None, p_value: None, error: Some(e.to_string()) },
    }
}

/// Refits `spec` `runs` times under a perturbation of the promotional
/// density, each run with its own derived seed, and records the focal
/// coefficient and p-value. A run whose fit fails is kept with its error.
pub fn robustness_sweep(
    input: SweepInput<'_>,
    lexicon: &Lexicon,
    spec: &ModelSpec,
    perturbation: Perturbation,
    opts: &SweepOptions,
) -> Result<SweepReport, ExperimentError> {
    perturbation.validate()?;
    spec.validate()?;
    if opts.runs == 0 {
        return Err(ExperimentError::Invalid("at least one run is required".into()));
    }
    if !spec.predictors.iter().any(|p| p == &opts.focal) {
        return Err(ExperimentError::Invalid(format!("focal column {:?} is not a predictor", opts.focal)));
    }
    let run_seed = |r: u64| SeedPath::new(opts.seed).label("robustness").index(r).seed();
    let focal = opts.focal.as_str();

    let (baseline, runs) = match input {
        SweepInput::Fixed { docs, table } => {
            let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
            let ids = table.text("id")?;
            let aligned: Vec<&Document> = ids
                .iter()
                .map(|id| {
                    by_id
                        .get(id)
                        .copied()
                        .ok_or_else(|| ExperimentError::Invalid(format!("table row {id:?} has no document")))
                })
                .collect::<Result<_, _>>()?;
            let baseline = fixed_run(&aligned, table, lexicon, spec, Perturbation::None, focal, 0, 0);
            if let Some(e) = &baseline.error {
                return Err(ExperimentError::Invalid(format!("the unperturbed model does not fit: {e}")));
            }
            let runs: Vec<SweepRun> = (0..opts.runs)
                .into_par_iter()
                .map(|r| fixed_run(&aligned, table, lexicon, spec, perturbation, focal, r, run_seed(r)))
                .collect();
            (Some(baseline), runs)
        }
        SweepInput::Generated(config) => {
            config.validate()?;
            let runs = (0..opts.runs)
                .into_par_iter()
                .map(|r| generated_run(config, lexicon, spec, perturbation, focal, r, run_seed(r)))
                .collect();
            (None, runs)
        }
    };
    for r in runs.iter().filter(|r| r.error.is_some()) {
        log::warn!("robustness run {} failed: {}", r.run, r.error.as_deref().unwrap_or(""));
    }
    Ok(SweepReport { perturbation: perturbation.describe(), focal: opts.focal.clone(), alpha: opts.alpha, baseline, runs })
}

/// Runs as comma-separated rows after a metadata header.
pub fn write_sweep_report<W: Write>(mut sink: W, report: &SweepReport) -> Result<(), ExperimentError> {
    let io = |e: std::io::Error| ExperimentError::Invalid(format!("writing report: {e}"));
    let csv_err = |e: csv::Error| ExperimentError::Invalid(format!("writing report: {e}"));
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    writeln!(sink, "# perturbation={}", report.perturbation).map_err(io)?;
    writeln!(sink, "# focal={}", report.focal).map_err(io)?;
    writeln!(sink, "# alpha={}", report.alpha).map_err(io)?;
    writeln!(sink, "# runs={}", report.runs.len()).map_err(io)?;
    writeln!(sink, "# failed={}", report.n_failed()).map_err(io)?;
    writeln!(sink, "# fraction_significant={}", opt(report.fraction_significant())).map_err(io)?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["run", "beta", "std_error", "p_value", "error"]).map_err(csv_err)?;
    let rows = report.baseline.iter().map(|b| ("baseline".to_string(), b)).chain(report.runs.iter().map(|r| (r.run.to_string(), r)));
    for (label, r) in rows {
        w.write_record([label, opt(r.beta), opt(r.std_error), opt(r.p_value), r.error.clone().unwrap_or_default()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

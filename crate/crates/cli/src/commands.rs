use std::io::BufReader;
use std::path::Path;
use std::time::Duration;

use promolex::corpus::{generate_synthetic_corpus, generate_synthetic_records, load_corpus, write_corpus, Document, SyntheticConfig};
use promolex::experiment::{
    baseline_valence_scorer, drop_fraction_table, external_scorer, robustness_sweep, run_corpus_experiment,
    synthetic_model_spec, write_drop_table, write_outcomes, write_sweep_report, ExperimentOptions, Perturbation,
    SentenceScorer, SweepInput, SweepOptions,
};
use promolex::inference::{
    build_design, fit_model, margins, two_sample_tests, write_fit_report, write_margins_report, DataTable, ModelSpec,
};
use promolex::lexicon::{load_promotional_lexicon, load_rating_lexicon, load_synonym_table, Lexicon, RatingField, RatingLexicon, SynonymTable, STARTER_SYNONYMS};
use promolex::metrics::{compute_features, write_feature_table, FeatureOptions, FeatureVector};
use promolex::novelty::{
    background_hash, citation_links, grant_innovativeness, null_model_zscores, read_stats_cache, write_stats_cache,
    CoCitationStats, NoveltyError,
};
use promolex::validation::{
    cronbach_alpha, item_total_correlations, mtmm_compare, mtmm_pairs, write_validation_report, ItemMatrix, MTMM_MIN_PAIRS,
};

use crate::args::{Opts, PerturbationKind};
use crate::chart::{band_chart, bar_chart};
use crate::output::{write_atomic, Run};
use crate::CliError;

fn data<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Data(format!("{context}: {e}"))
}

fn require<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::Usage(format!("--{flag} is required for this command")))
}

fn load_docs(run: &mut Run, path: &Path) -> Result<Vec<Document>, CliError> {
    let text = run.read(path)?;
    load_corpus(BufReader::new(text.as_bytes())).map_err(data(&path.display().to_string()))
}

fn lexicon(run: &mut Run) -> Result<Lexicon, CliError> {
    let src = match run.opts.lexicon.clone() {
        Some(p) => Some(run.read(&p)?),
        None => None,
    };
    let (lex, warnings) = load_promotional_lexicon(src.as_deref()).map_err(data("lexicon"))?;
    for w in warnings {
        log::warn!("lexicon: {w}");
    }
    Ok(lex)
}

fn ratings(run: &mut Run) -> Result<Option<RatingLexicon>, CliError> {
    let Some(path) = run.opts.ratings.clone() else { return Ok(None) };
    let text = run.read(&path)?;
    let (r, warnings) = load_rating_lexicon(text.as_bytes()).map_err(data(&path.display().to_string()))?;
    for w in warnings {
        log::warn!("ratings: {w}");
    }
    Ok(Some(r))
}

fn synonyms(run: &mut Run, lex: &Lexicon) -> Result<SynonymTable, CliError> {
    let src = match run.opts.synonyms.clone() {
        Some(p) => run.read(&p)?,
        None => STARTER_SYNONYMS.to_string(),
    };
    load_synonym_table(&src, lex).map_err(data("synonyms"))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), String>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Data(format!("writing report: {e}")))?;
    Ok(buf)
}

fn features(docs: &[Document], lex: &Lexicon, opts: &Opts, ratings: Option<&RatingLexicon>) -> Result<Vec<FeatureVector>, CliError> {
    let fo = FeatureOptions { window: opts.window, ratings, ..Default::default() };
    docs.iter().map(|d| compute_features(d, lex, &fo).map_err(data("features"))).collect()
}

/// Feature table plus `log_publications`, the covariate of the synthetic model.
fn feature_table(docs: &[Document], feats: &[FeatureVector]) -> Result<DataTable, CliError> {
    let rows: Vec<(&Document, &FeatureVector)> = docs.iter().zip(feats).collect();
    let bytes = csv_bytes(|b| write_feature_table(b, &rows).map_err(|e| e.to_string()))?;
    let mut table = DataTable::from_csv(bytes.as_slice()).map_err(data("features"))?;
    let logp = docs.iter().map(|d| (d.pi.prior_publications as f64).ln_1p().to_string()).collect();
    table.set_column("log_publications", logp).map_err(data("features"))?;
    Ok(table)
}

fn synth_config(o: &Opts) -> SyntheticConfig {
    SyntheticConfig {
        n_docs: o.n,
        min_words: o.min_words,
        max_words: o.max_words,
        density_mean: o.density,
        beta_promo: o.effect,
        base_rate: o.base_rate,
        ..Default::default()
    }
}

const PROPORTION_COLUMNS: &[&str] =
    &["promo_fraction", "promo_fraction_unique", "head_density", "tail_density", "sentence_incidence"];

pub fn synth(run: &mut Run) -> Result<(), CliError> {
    let config = synth_config(&run.opts);
    let seed = run.opts.seed;
    let docs = generate_synthetic_corpus(&config, seed).map_err(data("synth"))?;
    let intercept = generate_synthetic_records(&config, seed).map_err(data("synth"))?.intercept;
    let mut corpus = Vec::new();
    write_corpus(&mut corpus, &docs).map_err(data("synth"))?;
    run.write("corpus.jsonl", &corpus)?;
    let truth = format!(
        "parameter,value\nn_docs,{}\nseed,{}\nintercept,{}\nbeta_promo,{}\nbeta_log_publications,{}\nbase_rate,{}\ndensity_mean,{}\n",
        config.n_docs, seed, intercept, config.beta_promo, config.beta_log_publications, config.base_rate, config.density_mean
    );
    run.write_table("synthetic_truth", truth.into_bytes())
}

pub fn analyze(run: &mut Run) -> Result<(), CliError> {
    let path = require(&run.opts.corpus, "corpus")?.clone();
    let docs = load_docs(run, &path)?;
    let lex = lexicon(run)?;
    let ratings = ratings(run)?;
    let feats = features(&docs, &lex, &run.opts, ratings.as_ref())?;
    let rows: Vec<(&Document, &FeatureVector)> = docs.iter().zip(&feats).collect();
    let table = csv_bytes(|b| write_feature_table(b, &rows).map_err(|e| e.to_string()))?;
    run.write_table("features", table)?;

    let funded: Vec<f64> = rows.iter().filter(|(d, _)| d.funded == Some(true)).map(|(_, f)| f.promo_fraction).collect();
    let unfunded: Vec<f64> = rows.iter().filter(|(d, _)| d.funded == Some(false)).map(|(_, f)| f.promo_fraction).collect();
    let mut out = String::from("# variable=promo_fraction\n# groups=funded_vs_unfunded\n# note=Epps-Singleton test not implemented\n");
    out.push_str("test,statistic,df,p_value,side,n_funded,n_unfunded,method\n");
    match two_sample_tests(&funded, &unfunded) {
        Ok(r) => {
            if let Some(w) = &r.welch {
                let df = w.df.map(|d| d.to_string()).unwrap_or_default();
                out.push_str(&format!(
                    "welch_t,{},{df},{},{},{},{},{}\n",
                    w.statistic,
                    w.p_value,
                    w.side.as_str(),
                    r.n_a,
                    r.n_b,
                    w.method
                ));
            }
            let method = if r.ks.exact { "exact" } else { "asymptotic" };
            out.push_str(&format!("ks,{},,{},two-sided,{},{},{method}\n", r.ks.statistic, r.ks.p_value, r.n_a, r.n_b));
        }
        Err(e) => log::warn!("distribution tests skipped: {e}"),
    }
    run.write_table("distribution_tests", out.into_bytes())?;

    if run.opts.chart {
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let page = bar_chart(
            "Promotional density by funding outcome",
            "group",
            "mean promotional words (% of words)",
            &[
                (format!("funded (n={})", funded.len()), 100.0 * mean(&funded)),
                (format!("not funded (n={})", unfunded.len()), 100.0 * mean(&unfunded)),
            ],
            "Group means of the per-document percentage of promotional words.",
        );
        run.write("chart.html", page.as_bytes())?;
    }
    Ok(())
}

pub fn validate_lexicon(run: &mut Run) -> Result<(), CliError> {
    let path = require(&run.opts.corpus, "corpus")?.clone();
    let docs = load_docs(run, &path)?;
    let lex = lexicon(run)?;
    let matrix: ItemMatrix<f64> = ItemMatrix::from_corpus(&docs, &lex).map_err(data("item matrix"))?.drop_empty_items();
    let items = item_total_correlations(&matrix).map_err(data("item-rest correlations"))?;
    let alphas = vec![("corpus".to_string(), cronbach_alpha(&matrix))];
    let mut tests = Vec::new();
    if let Some(ratings) = ratings(run)? {
        let syn = synonyms(run, &lex)?;
        for (name, field) in [("valence", RatingField::Valence), ("arousal", RatingField::Arousal)] {
            let (_, promo, alt) = mtmm_pairs(&syn, &ratings, field);
            if promo.len() < MTMM_MIN_PAIRS {
                log::warn!("{name}: only {} rated term/synonym pairs, need {MTMM_MIN_PAIRS}; test skipped", promo.len());
                continue;
            }
            tests.push((name.to_string(), mtmm_compare(&promo, &alt, None).map_err(data(name))?));
        }
    }
    let report = csv_bytes(|b| write_validation_report(b, &items, &alphas, &tests).map_err(|e| e.to_string()))?;
    run.write_table("validation", report)
}

pub fn novelty(run: &mut Run) -> Result<(), CliError> {
    let bg_path = require(&run.opts.background, "background")?.clone();
    let grants_path = require(&run.opts.corpus, "corpus")?.clone();
    let background = load_docs(run, &bg_path)?;
    let grants = load_docs(run, &grants_path)?;
    let (links, skipped) = citation_links(&background);
    if skipped > 0 {
        log::warn!("{skipped} background document(s) without a bibliography were skipped");
    }
    let (r, seed, self_pairs) = (run.opts.randomizations, run.opts.seed, !run.opts.no_self_pairs);
    let hash = background_hash(&links);
    let cached: Option<CoCitationStats> = match &run.opts.stats_cache {
        Some(p) if p.exists() => {
            let text = std::fs::read_to_string(p).map_err(data(&p.display().to_string()))?;
            match read_stats_cache(BufReader::new(text.as_bytes())) {
                Ok(s) if s.matches(&hash, r, seed, self_pairs) => Some(s),
                Ok(_) => None,
                Err(e) => {
                    log::warn!("ignoring stats cache {}: {e}", p.display());
                    None
                }
            }
        }
        _ => None,
    };
    let stats = match cached {
        Some(s) => s,
        None => null_model_zscores(&links, r, seed, self_pairs).map_err(data("null model"))?,
    };
    let mut cache = Vec::new();
    write_stats_cache(&mut cache, &stats).map_err(data("stats cache"))?;
    if let Some(p) = &run.opts.stats_cache {
        write_atomic(p, &cache)?;
    }
    run.write("cocitation_stats.tsv", &cache)?;

    let mut out = format!("# randomizations={r}\n# seed={seed}\n# self_pairs={self_pairs}\n# background_hash={hash}\n");
    out.push_str("doc_id,score,n_pairs,n_negative,n_undefined,references_total,references_dropped,no_negative_pairs,sparse_pairs,low_confidence,error\n");
    for g in &grants {
        match grant_innovativeness(g, &stats) {
            Ok(res) => out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},\n",
                csv_field(&res.doc_id),
                res.score,
                res.zscores.len(),
                res.n_negative,
                res.n_undefined,
                res.references_total,
                res.references_dropped,
                res.no_negative_pairs,
                res.sparse_pairs,
                res.low_confidence
            )),
            Err(e @ NoveltyError::InsufficientBibliography { .. }) => {
                let total = g.bibliography.as_ref().map_or(0, Vec::len);
                out.push_str(&format!("{},,,,,{total},,,,,{}\n", csv_field(&g.id), csv_field(&e.to_string())));
            }
            Err(e) => return Err(CliError::Data(e.to_string())),
        }
    }
    run.write_table("innovativeness", out.into_bytes())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `--features` if given, else features computed from `--corpus`.
fn model_table(run: &mut Run) -> Result<(DataTable, Option<Vec<Document>>), CliError> {
    if let Some(p) = run.opts.features.clone() {
        let text = run.read(&p)?;
        let table = DataTable::from_csv(text.as_bytes()).map_err(data(&p.display().to_string()))?;
        let docs = match run.opts.corpus.clone() {
            Some(c) => Some(load_docs(run, &c)?),
            None => None,
        };
        return Ok((table, docs));
    }
    let Some(c) = run.opts.corpus.clone() else {
        return Err(CliError::Usage("--features or --corpus is required for this command".into()));
    };
    let docs = load_docs(run, &c)?;
    let lex = lexicon(run)?;
    let feats = features(&docs, &lex, &run.opts, None)?;
    Ok((feature_table(&docs, &feats)?, Some(docs)))
}

fn model_spec(run: &mut Run) -> Result<Option<ModelSpec>, CliError> {
    let Some(p) = run.opts.spec.clone() else { return Ok(None) };
    let text = run.read(&p)?;
    ModelSpec::parse(&text).map(Some).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

pub fn regress(run: &mut Run) -> Result<(), CliError> {
    if run.opts.spec.is_none() {
        return Err(CliError::Usage("--spec is required for this command".into()));
    }
    let spec = model_spec(run)?.expect("checked above");
    let (table, _) = model_table(run)?;
    let md = build_design::<f64>(&table, &spec).map_err(data("design"))?;
    if md.dropped_filter + md.dropped_missing > 0 {
        log::warn!("{} row(s) outside filters and {} with missing values were dropped", md.dropped_filter, md.dropped_missing);
    }
    let fit = fit_model(spec.family, &md.design, &md.y).map_err(data("fit"))?;
    if !fit.converged {
        log::warn!("fit did not converge; see the converged flag in the report");
    }
    let report = csv_bytes(|b| write_fit_report(b, &fit).map_err(|e| e.to_string()))?;
    run.write_table("fit", report)?;
    if let Some(m) = &spec.margins {
        let curve = margins(&fit, &md.design, &m.focal, &m.grid).map_err(data("margins"))?;
        let report = csv_bytes(|b| write_margins_report(b, &curve).map_err(|e| e.to_string()))?;
        run.write_table("margins", report)?;
        if run.opts.chart {
            // densities are stored as proportions and shown as percentages
            let (x, x_label) = if PROPORTION_COLUMNS.contains(&m.focal.as_str()) {
                (curve.grid.iter().map(|g| g * 100.0).collect(), format!("{} (% of words)", m.focal))
            } else {
                (curve.grid.clone(), m.focal.clone())
            };
            let page = band_chart(
                &format!("Predicted {} by {}", spec.outcome, m.focal),
                &x_label,
                &format!("predicted {}", spec.outcome),
                &x,
                &curve.predicted,
                &curve.ci_low,
                &curve.ci_high,
                "Shaded band: 95% delta-method confidence interval. Predictions are averaged over the observed values of the other covariates.",
            );
            run.write("chart.html", page.as_bytes())?;
        }
    }
    Ok(())
}

fn parse_levels(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |v: &str| CliError::Usage(format!("--levels: {v:?} is not a level in (0, 100]"));
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            let x: f64 = v.parse().map_err(|_| bad(v))?;
            let x = if x > 1.0 { x / 100.0 } else { x };
            if x > 0.0 && x <= 1.0 {
                Ok(x)
            } else {
                Err(bad(v))
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.is_empty() { Err(bad(s)) } else { Ok(v) })
}

pub fn experiment(run: &mut Run) -> Result<(), CliError> {
    let levels = parse_levels(&run.opts.levels)?;
    if run.opts.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let path = require(&run.opts.corpus, "corpus")?.clone();
    let docs = load_docs(run, &path)?;
    let lex = lexicon(run)?;
    let syn = synonyms(run, &lex)?;
    let scorer = match run.opts.scorer.clone() {
        Some(cmd) => {
            let t = run.opts.scorer_timeout;
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Usage("--scorer-timeout must be positive".into()));
            }
            external_scorer(&cmd, Duration::from_secs_f64(t)).map_err(data("scorer"))?
        }
        None => {
            let r = ratings(run)?
                .ok_or_else(|| CliError::Usage("--ratings (baseline scorer) or --scorer is required".into()))?;
            baseline_valence_scorer(r).map_err(data("scorer"))?
        }
    };
    let opts = ExperimentOptions {
        trials: run.opts.trials,
        seed: run.opts.seed,
        all_sentences: run.opts.all_sentences,
        ..Default::default()
    };
    let outcomes = run_corpus_experiment(&docs, &lex, &syn, &scorer, &levels, &opts).map_err(data("experiment"))?;
    let rows = drop_fraction_table(&outcomes, &levels).map_err(data("experiment"))?;
    let descriptor = scorer.descriptor();
    run.write_table("drop_fractions", csv_bytes(|b| write_drop_table(b, &rows, &opts, &descriptor).map_err(|e| e.to_string()))?)?;
    run.write_table("outcomes", csv_bytes(|b| write_outcomes(b, &outcomes).map_err(|e| e.to_string()))?)?;
    if run.opts.chart {
        let bars: Vec<(String, f64)> = rows.iter().map(|r| (format!("{}%", (r.level * 100.0).round()), r.fraction)).collect();
        let page = bar_chart(
            "Documents with a significant drop in positive sentiment",
            "share of promotional words substituted",
            "fraction of documents",
            &bars,
            &format!("One-sided binomial test over {} trials per document, alpha = {}.", opts.trials, opts.alpha),
        );
        run.write("chart.html", page.as_bytes())?;
    }
    Ok(())
}

pub fn robustness(run: &mut Run) -> Result<(), CliError> {
    let o = run.opts.clone();
    let perturbation = match o.perturbation {
        PerturbationKind::None => Perturbation::None,
        PerturbationKind::DropOccurrences => Perturbation::DropOccurrences { frac: o.frac, cap: o.cap },
        PerturbationKind::DropLexicon => Perturbation::DropLexiconTerms { frac: o.frac },
        PerturbationKind::CountOnce => Perturbation::CountOnce,
    };
    if o.runs == 0 {
        return Err(CliError::Usage("--runs must be positive".into()));
    }
    let spec = model_spec(run)?.unwrap_or_else(synthetic_model_spec);
    let lex = lexicon(run)?;
    let sweep_opts = SweepOptions { runs: o.runs, seed: o.seed, ..Default::default() };
    let report = if o.synthetic {
        let config = synth_config(&o);
        robustness_sweep(SweepInput::Generated(&config), &lex, &spec, perturbation, &sweep_opts)
    } else {
        let (table, docs) = model_table(run)?;
        let docs = docs.ok_or_else(|| CliError::Usage("--corpus is required unless --synthetic is set".into()))?;
        robustness_sweep(SweepInput::Fixed { docs: &docs, table: &table }, &lex, &spec, perturbation, &sweep_opts)
    }
    .map_err(data("robustness"))?;
    run.write_table("sweep", csv_bytes(|b| write_sweep_report(b, &report).map_err(|e| e.to_string()))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_accept_percent_and_proportion() {
        assert_eq!(parse_levels("25,50,75,100").unwrap(), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_levels("0.5, 1").unwrap(), vec![0.5, 1.0]);
        assert!(parse_levels("0").is_err());
        assert!(parse_levels("150").is_err());
        assert!(parse_levels("x").is_err());
        assert!(parse_levels("").is_err());
    }
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "promolex", version, about = "Promotional-language analytics for grant proposal corpora")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus to per-document feature table and distribution tests.
    Analyze(Opts),
    /// Dictionary psychometrics: alpha, item-rest correlations, MTMM tests.
    ValidateLexicon(Opts),
    /// Co-citation null model on a background corpus, then grant scores.
    Novelty(Opts),
    /// Fit a model spec to a feature table; fit and margins reports.
    Regress(Opts),
    /// Synonym-substitution sentiment experiment across levels.
    Experiment(Opts),
    /// Refit under measurement-error perturbations.
    Robustness(Opts),
    /// Generate a synthetic corpus with a known funding model.
    Synth(Opts),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::ValidateLexicon(_) => "validate-lexicon",
            Command::Novelty(_) => "novelty",
            Command::Regress(_) => "regress",
            Command::Experiment(_) => "experiment",
            Command::Robustness(_) => "robustness",
            Command::Synth(_) => "synth",
        }
    }

    pub fn opts(&self) -> &Opts {
        match self {
            Command::Analyze(o)
            | Command::ValidateLexicon(o)
            | Command::Novelty(o)
            | Command::Regress(o)
            | Command::Experiment(o)
            | Command::Robustness(o)
            | Command::Synth(o) => o,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    None,
    DropOccurrences,
    DropLexicon,
    CountOnce,
}

/// Options shared by every subcommand; each uses the ones it needs. Any of
/// them can also come from a `--config` file of `key = value` lines, where
/// the key is the long flag name without dashes.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Opts {
    /// Line-delimited JSON corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Promotional lexicon, one term per line (default: built-in list).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Synonym table, `term<TAB>syn,syn` (default: built-in starter table).
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// Word ratings CSV: word,valence,arousal[,concreteness][,weight].
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Background corpus with bibliographies for the co-citation model.
    #[arg(long)]
    pub background: Option<PathBuf>,
    /// Model spec file (`key = value` lines).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Feature table CSV (from `analyze`) for `regress` and `robustness`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Shell command of an external sentence scorer.
    #[arg(long)]
    pub scorer: Option<String>,
    /// Seconds allowed per scorer batch.
    #[arg(long, default_value_t = 60.0)]
    pub scorer_timeout: f64,
    /// Substitution levels, in percent or as proportions.
    #[arg(long, default_value = "25,50,75,100")]
    pub levels: String,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// Average sentiment over all sentences, not only promo-bearing ones.
    #[arg(long)]
    pub all_sentences: bool,
    #[arg(long, default_value_t = 100)]
    pub runs: u64,
    #[arg(long, default_value_t = 100)]
    pub randomizations: usize,
    /// Leave same-journal pairs out of co-citation counts.
    #[arg(long)]
    pub no_self_pairs: bool,
    /// Co-citation statistics cache; reused when it matches the inputs.
    #[arg(long)]
    pub stats_cache: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; not part of the manifest settings.
    #[arg(long, default_value = "promolex-out")]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Also write a static HTML chart page.
    #[arg(long)]
    pub chart: bool,
    /// Head/tail window in tokens for positional density.
    #[arg(long, default_value_t = 500)]
    pub window: usize,
    #[arg(long, value_enum, default_value = "drop-occurrences")]
    pub perturbation: PerturbationKind,
    /// Drop fraction for the perturbation.
    #[arg(long, default_value_t = 0.2)]
    pub frac: f64,
    /// Upper bound for the occurrence drop fraction.
    #[arg(long, default_value_t = 0.2)]
    pub cap: f64,
    /// Robustness on fresh synthetic corpora instead of --corpus.
    #[arg(long)]
    pub synthetic: bool,
    /// Synthetic corpus size.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// True density coefficient of the synthetic funding model.
    #[arg(long, default_value_t = 37.7)]
    pub effect: f64,
    #[arg(long, default_value_t = 0.168)]
    pub base_rate: f64,
    /// Mean promotional density of synthetic documents.
    #[arg(long, default_value_t = 0.01)]
    pub density: f64,
    #[arg(long, default_value_t = 300)]
    pub min_words: usize,
    #[arg(long, default_value_t = 700)]
    pub max_words: usize,
    /// Key-value configuration file; flags given on the command line win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

//! Dictionary validation and rater-agreement statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use thiserror::Error;

use crate::corpus::Document;
use crate::inference::{weighted_welch_t_test, TestResult};
use crate::lexicon::{Lexicon, RatingField, RatingLexicon, SynonymTable};
use crate::stats::dist::{normal_p, student_t_p, Side};
use crate::stats::{pearson, sample_variance};
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("degenerate matrix: {0}")]
    Degenerate(String),
    #[error("{0}")]
    Invalid(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} pairs, got {got}")]
    TooFewPairs { need: usize, got: usize },
    #[error("kappa undefined: expected agreement is 1")]
    KappaUndefined,
}

/// Documents by items, each cell a non-negative score (per-document
/// percentage frequency of a term when built from a corpus).
#[derive(Debug, Clone, PartialEq)]
pub struct ItemMatrix<T> {
    items: Vec<String>,
    /// Column-major: `cols[j][i]` is row `i`, item `j`.
    cols: Vec<Vec<T>>,
    rows: usize,
}

impl<T: Scalar> ItemMatrix<T> {
    pub fn from_columns(items: Vec<String>, cols: Vec<Vec<T>>) -> Result<Self, ValidationError> {
        if items.len() != cols.len() {
            return Err(ValidationError::LengthMismatch(items.len(), cols.len()));
        }
        let rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != rows) {
            return Err(ValidationError::Invalid("item columns differ in length".into()));
        }
        if cols.iter().flatten().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(ValidationError::Invalid("cells must be finite and non-negative".into()));
        }
        Ok(ItemMatrix { items, cols, rows })
    }

    /// Percentage frequency `100 * count / word_count` of every lexicon term
    /// in every non-empty document.
    pub fn from_corpus(docs: &[Document], lexicon: &Lexicon) -> Result<Self, ValidationError> {
        let items: Vec<String> = lexicon.terms().map(str::to_string).collect();
        let index: BTreeMap<&str, usize> = items.iter().enumerate().map(|(j, t)| (t.as_str(), j)).collect();
        let docs: Vec<&Document> = docs.iter().filter(|d| !d.is_empty()).collect();
        let mut cols = vec![vec![T::zero(); docs.len()]; items.len()];
        for (i, d) in docs.iter().enumerate() {
            let scale = T::of(100.0) / T::of_usize(d.word_count());
            for t in &d.tokens {
                if let Some(&j) = index.get(t.lower.as_str()) {
                    cols[j][i] += scale;
                }
            }
        }
        Self::from_columns(items, cols)
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.cols[j]
    }

    /// Items with at least one non-zero cell.
    pub fn drop_empty_items(&self) -> Self {
        let keep: Vec<usize> = (0..self.n_items()).filter(|&j| self.cols[j].iter().any(|&v| v > T::zero())).collect();
        ItemMatrix {
            items: keep.iter().map(|&j| self.items[j].clone()).collect(),
            cols: keep.iter().map(|&j| self.cols[j].clone()).collect(),
            rows: self.rows,
        }
    }

    fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|i| self.cols.iter().map(|c| c[i]).sum()).collect()
    }
}

/// `k/(k-1) * (1 - sum of item variances / variance of row sums)`.
pub fn cronbach_alpha<T: Scalar>(m: &ItemMatrix<T>) -> Result<T, ValidationError> {
    let k = m.n_items();
    if k < 2 || m.n_rows() < 2 {
        return Err(ValidationError::Degenerate(format!("need >= 2 items and rows, got {k} x {}", m.n_rows())));
    }
    let item_var: T = m.cols.iter().map(|c| sample_variance(c).unwrap_or(T::zero())).sum();
    let total_var = sample_variance(&m.row_sums()).unwrap_or(T::zero());
    if !(total_var > T::zero()) {
        return Err(ValidationError::Degenerate("total score has zero variance".into()));
    }
    let kk = T::of_usize(k);
    Ok(kk / (kk - T::one()) * (T::one() - item_var / total_var))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemFlag {
    /// The item never varies; r is undefined.
    ConstantItem,
    /// The sum of the other items never varies; r is undefined.
    ConstantRest,
    /// Fewer than 3 rows, so the t reference has no degrees of freedom.
    NoDegreesOfFreedom,
}

impl ItemFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            ItemFlag::ConstantItem => "constant_item",
            ItemFlag::ConstantRest => "constant_rest",
            ItemFlag::NoDegreesOfFreedom => "no_df",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemTotal<T> {
    pub item: String,
    pub r: Option<T>,
    /// Two-sided, t distribution with `n - 2` df.
    pub p: Option<T>,
    pub flag: Option<ItemFlag>,
}

/// Correlation of each item with the row sum of all other items.
pub fn item_total_correlations<T: Scalar>(m: &ItemMatrix<T>) -> Result<Vec<ItemTotal<T>>, ValidationError> {
    if m.n_items() < 2 || m.n_rows() < 2 {
        return Err(ValidationError::Degenerate(format!(
            "need >= 2 items and rows, got {} x {}",
            m.n_items(),
            m.n_rows()
        )));
    }
    let totals = m.row_sums();
    let n = m.n_rows();
    Ok((0..m.n_items())
        .map(|j| {
            let item = m.items[j].clone();
            let col = &m.cols[j];
            let rest: Vec<T> = totals.iter().zip(col).map(|(&t, &c)| t - c).collect();
            let constant = |v: &[T]| v.iter().all(|&x| x == v[0]);
            if constant(col) {
                return ItemTotal { item, r: None, p: None, flag: Some(ItemFlag::ConstantItem) };
            }
            if constant(&rest) {
                return ItemTotal { item, r: None, p: None, flag: Some(ItemFlag::ConstantRest) };
            }
            let r = pearson(col, &rest).ok().flatten();
            if n < 3 {
                return ItemTotal { item, r, p: None, flag: Some(ItemFlag::NoDegreesOfFreedom) };
            }
            let p = r.map(|r| {
                let df = (n - 2) as f64;
                let rf = r.f64();
                let t = if rf.abs() >= 1.0 { f64::INFINITY.copysign(rf) } else { rf * (df / (1.0 - rf * rf)).sqrt() };
                T::of(student_t_p(t, df, Side::TwoSided))
            });
            ItemTotal { item, r, p, flag: None }
        })
        .collect())
}

/// Items with a defined, positive and significant item-rest correlation,
/// and the number of items with a defined correlation.
pub fn share_significant<T: Scalar>(items: &[ItemTotal<T>], level: T) -> (usize, usize) {
    let defined = items.iter().filter(|i| i.p.is_some()).count();
    let sig = items.iter().filter(|i| matches!((i.r, i.p), (Some(r), Some(p)) if r > T::zero() && p < level)).count();
    (sig, defined)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedRankResult<T> {
    /// Pairs with a non-zero difference.
    pub n: usize,
    /// Sum of (mid-)ranks of positive differences.
    pub w_plus: T,
    /// `None` when every pair is tied.
    pub p_value: Option<T>,
    pub exact: bool,
    pub side: Side,
}

/// Above this many non-zero differences the normal approximation is used.
pub const SIGNED_RANK_EXACT_MAX: usize = 25;

/// Wilcoxon signed-rank test of `x - y`. Zero differences are dropped and
/// tied magnitudes get mid-ranks; the exact null distribution enumerates
/// all sign patterns of the observed ranks. The normal approximation uses
/// the tie-corrected variance and a continuity correction.
pub fn signed_rank_test<T: Scalar>(x: &[T], y: &[T], side: Side) -> Result<SignedRankResult<T>, ValidationError> {
    if x.len() != y.len() {
        return Err(ValidationError::LengthMismatch(x.len(), y.len()));
    }
    let mut d: Vec<f64> = x.iter().zip(y).map(|(&a, &b)| (a - b).f64()).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(SignedRankResult { n, w_plus: T::zero(), p_value: None, exact: true, side });
    }
    d.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    // doubled mid-ranks are integers
    let mut rank2 = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[j + 1].abs() == d[i].abs() {
            j += 1;
        }
        let r2 = (i + 1 + j + 1) as u64;
        rank2[i..=j].iter_mut().for_each(|r| *r = r2);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let w2: u64 = d.iter().zip(&rank2).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let w_plus = w2 as f64 / 2.0;
    let nf = n as f64;
    if n <= SIGNED_RANK_EXACT_MAX {
        let total: u64 = rank2.iter().sum();
        let mut dist = vec![0.0f64; total as usize + 1];
        dist[0] = 1.0;
        let mut hi = 0usize;
        for &r in &rank2 {
            let r = r as usize;
            for s in (0..=hi).rev() {
                let v = dist[s];
                if v != 0.0 {
                    dist[s + r] += v;
                }
            }
            hi += r;
        }
        let norm = 2f64.powi(n as i32);
        let upper: f64 = dist[w2 as usize..].iter().sum::<f64>() / norm;
        let lower: f64 = dist[..=w2 as usize].iter().sum::<f64>() / norm;
        let p = match side {
            Side::Greater => upper,
            Side::Less => lower,
            Side::TwoSided => (2.0 * upper.min(lower)).min(1.0),
        };
        return Ok(SignedRankResult { n, w_plus: T::of(w_plus), p_value: Some(T::of(p)), exact: true, side });
    }
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let diff = w_plus - mean;
    let z = |cc: f64| if var > 0.0 { (diff - cc) / var.sqrt() } else { 0.0 };
    let p = match side {
        Side::Greater => normal_p(z(0.5), Side::Greater),
        Side::Less => normal_p(z(-0.5), Side::Less),
        Side::TwoSided => normal_p(z(0.5 * diff.signum()), Side::TwoSided),
    };
    Ok(SignedRankResult { n, w_plus: T::of(w_plus), p_value: Some(T::of(p)), exact: false, side })
}

/// Minimum number of promotional/synonym pairs for [`mtmm_compare`].
pub const MTMM_MIN_PAIRS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct MtmmResult<T> {
    pub n_pairs: usize,
    /// `"unweighted"` or the caller-supplied description of the weights.
    pub weighting: String,
    /// One-sided (promotional greater); `None` when both samples are constant.
    pub welch: Option<TestResult<T>>,
    pub signed_rank: SignedRankResult<T>,
}

/// Tests whether promotional words rate higher than their neutral synonyms.
/// `promo[i]` and `synonym[i]` are a word's rating and the mean rating of
/// its synonyms. Optional weights `(values, description)` apply to both
/// members of a pair in the Welch comparison.
pub fn mtmm_compare<T: Scalar>(
    promo: &[T],
    synonym: &[T],
    weights: Option<(&[T], &str)>,
) -> Result<MtmmResult<T>, ValidationError> {
    if promo.len() != synonym.len() {
        return Err(ValidationError::LengthMismatch(promo.len(), synonym.len()));
    }
    if promo.len() < MTMM_MIN_PAIRS {
        return Err(ValidationError::TooFewPairs { need: MTMM_MIN_PAIRS, got: promo.len() });
    }
    let ones = vec![T::one(); promo.len()];
    let (w, weighting) = match weights {
        Some((w, desc)) => {
            if w.len() != promo.len() {
                return Err(ValidationError::LengthMismatch(w.len(), promo.len()));
            }
            if w.iter().any(|&v| !(v > T::zero())) {
                return Err(ValidationError::Invalid("weights must be positive".into()));
            }
            (w, desc.to_string())
        }
        None => (&ones[..], "unweighted".to_string()),
    };
    Ok(MtmmResult {
        n_pairs: promo.len(),
        weighting,
        welch: weighted_welch_t_test(promo, w, synonym, w, Side::Greater),
        signed_rank: signed_rank_test(promo, synonym, Side::Greater)?,
    })
}

/// Paired ratings for every lexicon term that has a rating and at least
/// one rated synonym: `(terms, promo ratings, mean synonym ratings)`.
pub fn mtmm_pairs(
    synonyms: &SynonymTable,
    ratings: &RatingLexicon,
    field: RatingField,
) -> (Vec<String>, Vec<f64>, Vec<f64>) {
    let mut terms = Vec::new();
    let mut promo = Vec::new();
    let mut syn = Vec::new();
    for (term, alts) in synonyms.iter() {
        let Some(p) = ratings.get(term).and_then(|r| r.field(field)) else { continue };
        let vals: Vec<f64> = alts.iter().filter_map(|a| ratings.get(a).and_then(|r| r.field(field))).collect();
        if vals.is_empty() {
            continue;
        }
        terms.push(term.to_string());
        promo.push(p);
        syn.push(vals.iter().sum::<f64>() / vals.len() as f64);
    }
    (terms, promo, syn)
}

/// Cohen's kappa with expected agreement from the product of marginals.
pub fn cohens_kappa<L: Ord + Clone, T: Scalar>(a: &[L], b: &[L]) -> Result<T, ValidationError> {
    if a.len() != b.len() {
        return Err(ValidationError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(ValidationError::Invalid("no ratings".into()));
    }
    let n = T::of_usize(a.len());
    let mut ma: BTreeMap<&L, usize> = BTreeMap::new();
    let mut mb: BTreeMap<&L, usize> = BTreeMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        *ma.entry(x).or_default() += 1;
        *mb.entry(y).or_default() += 1;
        agree += usize::from(x == y);
    }
    let po = T::of_usize(agree) / n;
    let pe: T = ma.iter().map(|(l, &c)| T::of_usize(c) * T::of_usize(mb.get(l).copied().unwrap_or(0))).sum::<T>() / (n * n);
    if pe >= T::one() {
        return Err(ValidationError::KappaUndefined);
    }
    Ok((po - pe) / (T::one() - pe))
}

/// The label shared by at least two of three raters.
pub fn majority_label<L: PartialEq + Clone>(l1: &L, l2: &L, l3: &L) -> Option<L> {
    if l1 == l2 || l1 == l3 {
        Some(l1.clone())
    } else if l2 == l3 {
        Some(l2.clone())
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// Unweighted mean of per-class F1.
    Macro,
    /// F1 of pooled counts (equal to accuracy for single-label data).
    Micro,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores<L, T> {
    pub label: L,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub support: usize,
}

/// Per-class precision, recall and F1 over the union of labels seen in
/// either list. Zero denominators give zero.
pub fn class_scores<L: Ord + Clone, T: Scalar>(pred: &[L], gold: &[L]) -> Result<Vec<ClassScores<L, T>>, ValidationError> {
    if pred.len() != gold.len() {
        return Err(ValidationError::LengthMismatch(pred.len(), gold.len()));
    }
    let labels: BTreeSet<&L> = pred.iter().chain(gold).collect();
    Ok(labels
        .into_iter()
        .map(|l| {
            let tp = pred.iter().zip(gold).filter(|(p, g)| *p == l && *g == l).count();
            let np = pred.iter().filter(|p| *p == l).count();
            let ng = gold.iter().filter(|g| *g == l).count();
            let ratio = |a: usize, b: usize| if b == 0 { T::zero() } else { T::of_usize(a) / T::of_usize(b) };
            let (precision, recall) = (ratio(tp, np), ratio(tp, ng));
            let f1 = if precision + recall > T::zero() {
                T::of(2.0) * precision * recall / (precision + recall)
            } else {
                T::zero()
            };
            ClassScores { label: l.clone(), precision, recall, f1, support: ng }
        })
        .collect())
}

pub fn f1_score<L: Ord + Clone, T: Scalar>(pred: &[L], gold: &[L], averaging: Averaging) -> Result<T, ValidationError> {
    let classes = class_scores::<L, T>(pred, gold)?;
    if classes.is_empty() {
        return Ok(T::zero());
    }
    Ok(match averaging {
        Averaging::Macro => classes.iter().map(|c| c.f1).sum::<T>() / T::of_usize(classes.len()),
        Averaging::Micro => {
            let tp = pred.iter().zip(gold).filter(|(p, g)| p == g).count();
            // pooled fp and fn both equal n - tp
            T::of_usize(tp) / T::of_usize(pred.len())
        }
    })
}

/// Writes item-rest correlations, alpha per corpus and the MTMM tests as
/// one CSV table with a `section` column.
pub fn write_validation_report<T: Scalar, W: Write>(
    mut w: W,
    items: &[ItemTotal<T>],
    alphas: &[(String, Result<T, ValidationError>)],
    tests: &[(String, MtmmResult<T>)],
) -> io::Result<()> {
    let opt = |v: Option<T>| v.map_or(String::new(), |x| x.to_string());
    writeln!(w, "section,name,statistic,p_value,side,flag")?;
    for it in items {
        writeln!(
            w,
            "item_rest,{},{},{},two-sided,{}",
            it.item,
            opt(it.r),
            opt(it.p),
            it.flag.map_or("", ItemFlag::as_str)
        )?;
    }
    for (name, a) in alphas {
        match a {
            Ok(a) => writeln!(w, "cronbach_alpha,{name},{a},,,")?,
            Err(e) => writeln!(w, "cronbach_alpha,{name},,,,\"{e}\"")?,
        }
    }
    for (name, t) in tests {
        match &t.welch {
            Some(r) => writeln!(
                w,
                "mtmm_welch,{name},{},{},{},{} n={}",
                r.statistic,
                r.p_value,
                r.side.as_str(),
                t.weighting,
                t.n_pairs
            )?,
            None => writeln!(w, "mtmm_welch,{name},,,greater,undefined: both samples constant")?,
        }
        let sr = &t.signed_rank;
        let method = if sr.exact { "exact" } else { "normal" };
        match sr.p_value {
            Some(p) => writeln!(w, "mtmm_signed_rank,{name},{},{p},{},{method} n={}", sr.w_plus, sr.side.as_str(), sr.n)?,
            None => writeln!(w, "mtmm_signed_rank,{name},,,{},undefined: all pairs tied", sr.side.as_str())?,
        }
    }
    Ok(())
}

//! Atypical journal combinations: co-citation counts, a citation-shuffling
//! null model and the per-grant innovativeness score.
//!
//! Pairs follow a multiset rule: within one bibliography every distinct
//! unordered pair of journals counts once, and a journal cited at least
//! twice contributes one self-pair (when self-pairs are enabled).

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};
use std::ops::Range;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Document;
use crate::seed::SeedPath;
use crate::stats::median;

#[derive(Debug, Error, PartialEq)]
pub enum NoveltyError {
    #[error("need at least 2 randomizations, got {0}")]
    TooFewRandomizations(usize),
    #[error("citation from {citing_id}: cited year {cited_year} is after citing year {citing_year}")]
    FutureCitation { citing_id: String, citing_year: i32, cited_year: i32 },
    #[error("paper {0} appears with more than one citing year")]
    InconsistentYear(String),
    #[error("insufficient bibliography: {usable} usable reference(s) in {doc_id}")]
    InsufficientBibliography { doc_id: String, usable: usize },
    #[error("stats cache line {line}: {msg}")]
    Cache { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationLink {
    pub citing_id: String,
    pub citing_year: i32,
    pub cited_journal: String,
    pub cited_year: i32,
}

/// Links from every document with a bibliography, plus the number of
/// documents skipped for lacking one.
pub fn citation_links(docs: &[Document]) -> (Vec<CitationLink>, usize) {
    let mut links = Vec::new();
    let mut skipped = 0;
    for d in docs {
        match &d.bibliography {
            Some(refs) => links.extend(refs.iter().map(|r| CitationLink {
                citing_id: d.id.clone(),
                citing_year: d.year,
                cited_journal: r.journal_id.clone(),
                cited_year: r.pub_year,
            })),
            None => skipped += 1,
        }
    }
    (links, skipped)
}

type Pair = (u32, u32);

/// Pairs of one bibliography under the multiset rule; `journals` is
/// sorted in place.
fn bibliography_pairs(journals: &mut [u32], self_pairs: bool, mut emit: impl FnMut(Pair)) {
    journals.sort_unstable();
    let mut distinct: Vec<u32> = Vec::with_capacity(journals.len());
    for (k, &j) in journals.iter().enumerate() {
        if k == 0 || journals[k - 1] != j {
            distinct.push(j);
        } else if self_pairs && (k < 2 || journals[k - 2] != j) {
            emit((j, j));
        }
    }
    for a in 0..distinct.len() {
        for b in a + 1..distinct.len() {
            emit((distinct[a], distinct[b]));
        }
    }
}

/// Observed co-citation counts keyed by journal names (lexicographic
/// order within a pair).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoCitationCounts {
    pub counts: BTreeMap<(String, String), u64>,
    pub skipped_documents: usize,
}

pub fn build_cocitation(background: &[Document], self_pairs: bool) -> CoCitationCounts {
    let mut interner = Interner::default();
    let mut counts: HashMap<Pair, u64> = HashMap::new();
    let mut skipped = 0;
    for d in background {
        let Some(refs) = &d.bibliography else {
            skipped += 1;
            continue;
        };
        let mut js: Vec<u32> = refs.iter().map(|r| interner.intern(&r.journal_id)).collect();
        bibliography_pairs(&mut js, self_pairs, |p| *counts.entry(p).or_default() += 1);
    }
    CoCitationCounts {
        counts: counts.into_iter().map(|(p, c)| (interner.pair_names(p), c)).collect(),
        skipped_documents: skipped,
    }
}

#[derive(Debug, Clone, Default)]
struct Interner {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(s.to_string());
        self.index.insert(s.to_string(), i);
        i
    }

    fn pair_names(&self, (a, b): Pair) -> (String, String) {
        ordered(&self.names[a as usize], &self.names[b as usize])
    }
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Citation network prepared for randomization. Link slots are grouped by
/// citing paper; a randomization reassigns cited journals among the slots
/// of each (citing year, cited year) stratum.
#[derive(Debug, Clone)]
pub struct NullModel {
    interner: Interner,
    papers: Vec<Range<usize>>,
    journals: Vec<u32>,
    strata: Vec<Vec<usize>>,
    self_pairs: bool,
}

impl NullModel {
    pub fn new(links: &[CitationLink], self_pairs: bool) -> Result<Self, NoveltyError> {
        let mut order: Vec<String> = Vec::new();
        let mut by_paper: HashMap<&str, (i32, Vec<&CitationLink>)> = HashMap::new();
        for l in links {
            if l.cited_year > l.citing_year {
                return Err(NoveltyError::FutureCitation {
                    citing_id: l.citing_id.clone(),
                    citing_year: l.citing_year,
                    cited_year: l.cited_year,
                });
            }
            let e = by_paper.entry(l.citing_id.as_str()).or_insert_with(|| {
                order.push(l.citing_id.clone());
                (l.citing_year, Vec::new())
            });
            if e.0 != l.citing_year {
                return Err(NoveltyError::InconsistentYear(l.citing_id.clone()));
            }
            e.1.push(l);
        }
        let mut interner = Interner::default();
        let mut papers = Vec::with_capacity(order.len());
        let mut journals = Vec::with_capacity(links.len());
        let mut strata_map: BTreeMap<(i32, i32), Vec<usize>> = BTreeMap::new();
        for id in &order {
            let (_, ls) = &by_paper[id.as_str()];
            let start = journals.len();
            for l in ls {
                strata_map.entry((l.citing_year, l.cited_year)).or_default().push(journals.len());
                journals.push(interner.intern(&l.cited_journal));
            }
            papers.push(start..journals.len());
        }
        Ok(NullModel { interner, papers, journals, strata: strata_map.into_values().collect(), self_pairs })
    }

    pub fn n_links(&self) -> usize {
        self.journals.len()
    }

    pub fn n_papers(&self) -> usize {
        self.papers.len()
    }

    /// Slot ranges of each citing paper.
    pub fn papers(&self) -> &[Range<usize>] {
        &self.papers
    }

    /// Slot indices of each stratum.
    pub fn strata(&self) -> &[Vec<usize>] {
        &self.strata
    }

    /// Observed cited journal of each slot.
    pub fn observed_journals(&self) -> &[u32] {
        &self.journals
    }

    pub fn journal_name(&self, id: u32) -> &str {
        &self.interner.names[id as usize]
    }

    /// Cited journal of each slot after randomization `r`.
    pub fn randomization(&self, r: usize, seed: u64) -> Vec<u32> {
        let mut rng = SeedPath::new(seed).label("null-model").index(r as u64).rng();
        let mut out = self.journals.clone();
        for stratum in &self.strata {
            let mut vals: Vec<u32> = stratum.iter().map(|&s| self.journals[s]).collect();
            vals.shuffle(&mut rng);
            for (&s, v) in stratum.iter().zip(vals) {
                out[s] = v;
            }
        }
        out
    }

    /// Pair counts for a slot assignment.
    pub fn pair_counts(&self, journals: &[u32]) -> HashMap<(u32, u32), u64> {
        let mut counts = HashMap::new();
        let mut buf = Vec::new();
        for p in &self.papers {
            buf.clear();
            buf.extend_from_slice(&journals[p.clone()]);
            bibliography_pairs(&mut buf, self.self_pairs, |pair| *counts.entry(pair).or_default() += 1);
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStat {
    pub observed: u64,
    pub null_mean: f64,
    /// Sample standard deviation over randomizations (`R - 1` denominator).
    pub null_sd: f64,
}

impl PairStat {
    /// `None` when the null distribution is degenerate.
    pub fn z(&self) -> Option<f64> {
        if self.null_sd > 0.0 {
            Some((self.observed as f64 - self.null_mean) / self.null_sd)
        } else {
            None
        }
    }
}

/// Null-model statistics for every pair seen in the observed network or in
/// any randomization.
#[derive(Debug, Clone, PartialEq)]
pub struct CoCitationStats {
    pub pairs: BTreeMap<(String, String), PairStat>,
    pub journals: std::collections::BTreeSet<String>,
    pub randomizations: usize,
    pub seed: u64,
    pub self_pairs: bool,
    pub background_hash: String,
}

impl CoCitationStats {
    pub fn get(&self, a: &str, b: &str) -> Option<&PairStat> {
        self.pairs.get(&ordered(a, b))
    }

    pub fn z(&self, a: &str, b: &str) -> Option<f64> {
        self.get(a, b).and_then(PairStat::z)
    }

    pub fn matches(&self, background_hash: &str, randomizations: usize, seed: u64, self_pairs: bool) -> bool {
        self.background_hash == background_hash
            && self.randomizations == randomizations
            && self.seed == seed
            && self.self_pairs == self_pairs
    }
}

/// SHA-256 over the links in order, hex encoded.
pub fn background_hash(links: &[CitationLink]) -> String {
    let mut h = Sha256::new();
    for l in links {
        h.update(format!("{}\t{}\t{}\t{}\n", l.citing_id, l.citing_year, l.cited_journal, l.cited_year).as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub const DEFAULT_RANDOMIZATIONS: usize = 100;

/// Runs `randomizations` shuffles (in parallel, reduced in a fixed order)
/// and summarizes each pair's null distribution.
pub fn null_model_zscores(
    links: &[CitationLink],
    randomizations: usize,
    seed: u64,
    self_pairs: bool,
) -> Result<CoCitationStats, NoveltyError> {
    if randomizations < 2 {
        return Err(NoveltyError::TooFewRandomizations(randomizations));
    }
    let model = NullModel::new(links, self_pairs)?;
    let observed = model.pair_counts(model.observed_journals());
    const CHUNK: usize = 8;
    let chunks: Vec<Range<usize>> =
        (0..randomizations).step_by(CHUNK).map(|s| s..(s + CHUNK).min(randomizations)).collect();
    let partials: Vec<HashMap<Pair, (u64, u64)>> = chunks
        .into_par_iter()
        .map(|range| {
            let mut acc: HashMap<Pair, (u64, u64)> = HashMap::new();
            for r in range {
                for (p, c) in model.pair_counts(&model.randomization(r, seed)) {
                    let e = acc.entry(p).or_default();
                    e.0 += c;
                    e.1 += c * c;
                }
            }
            acc
        })
        .collect();
    // integer sums make the reduction independent of chunking
    let mut sums: HashMap<Pair, (u64, u64)> = HashMap::new();
    for part in partials {
        for (p, (s, ss)) in part {
            let e = sums.entry(p).or_default();
            e.0 += s;
            e.1 += ss;
        }
    }
    for p in observed.keys() {
        sums.entry(*p).or_default();
    }
    let r = randomizations as u128;
    let pairs = sums
        .into_iter()
        .map(|(p, (s, ss))| {
            let (s, ss) = (u128::from(s), u128::from(ss));
            let var = (r * ss - s * s) as f64 / (r * (r - 1)) as f64;
            let stat = PairStat {
                observed: observed.get(&p).copied().unwrap_or(0),
                null_mean: s as f64 / r as f64,
                null_sd: var.max(0.0).sqrt(),
            };
            (model.interner.pair_names(p), stat)
        })
        .collect();
    Ok(CoCitationStats {
        pairs,
        journals: model.interner.names.iter().cloned().collect(),
        randomizations,
        seed,
        self_pairs,
        background_hash: background_hash(links),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnovativenessResult {
    pub doc_id: String,
    /// Defined z-scores of the bibliography's pairs.
    pub zscores: Vec<f64>,
    /// Reverse-coded median of the negative z-scores; 0 when there are none.
    pub score: f64,
    pub n_negative: usize,
    /// Pairs whose z is undefined (unknown pair or zero null variance).
    pub n_undefined: usize,
    pub references_total: usize,
    /// References whose journal is absent from the background.
    pub references_dropped: usize,
    pub no_negative_pairs: bool,
    pub sparse_pairs: bool,
    /// More than half of the references were dropped.
    pub low_confidence: bool,
}

/// Score from a list of defined z-scores.
pub fn score_from_zscores(zscores: &[f64]) -> (f64, usize) {
    let neg: Vec<f64> = zscores.iter().copied().filter(|z| *z < 0.0).collect();
    if neg.is_empty() {
        return (0.0, 0);
    }
    let m = median(&neg).unwrap_or(0.0);
    (-m, neg.len())
}

pub fn grant_innovativeness(doc: &Document, stats: &CoCitationStats) -> Result<InnovativenessResult, NoveltyError> {
    let refs = doc.bibliography.as_deref().unwrap_or(&[]);
    let usable: Vec<&str> =
        refs.iter().map(|r| r.journal_id.as_str()).filter(|j| stats.journals.contains(*j)).collect();
    if usable.len() < 2 {
        return Err(NoveltyError::InsufficientBibliography { doc_id: doc.id.clone(), usable: usable.len() });
    }
    let mut interner = Interner::default();
    let mut ids: Vec<u32> = usable.iter().map(|j| interner.intern(j)).collect();
    let mut zscores = Vec::new();
    let mut n_undefined = 0;
    let mut pairs = Vec::new();
    bibliography_pairs(&mut ids, stats.self_pairs, |p| pairs.push(p));
    for p in pairs {
        let (a, b) = interner.pair_names(p);
        match stats.z(&a, &b) {
            Some(z) => zscores.push(z),
            None => n_undefined += 1,
        }
    }
    let (score, n_negative) = score_from_zscores(&zscores);
    let dropped = refs.len() - usable.len();
    Ok(InnovativenessResult {
        doc_id: doc.id.clone(),
        zscores,
        score,
        n_negative,
        n_undefined,
        references_total: refs.len(),
        references_dropped: dropped,
        no_negative_pairs: n_negative == 0,
        sparse_pairs: n_undefined > 0,
        low_confidence: 2 * dropped > refs.len(),
    })
}

const CACHE_MAGIC: &str = "# promolex cocitation-stats v1";

/// Tab-separated cache with versioned `# key=value` header lines.
pub fn write_stats_cache<W: Write>(mut w: W, stats: &CoCitationStats) -> io::Result<()> {
    writeln!(w, "{CACHE_MAGIC}")?;
    writeln!(w, "# background_hash={}", stats.background_hash)?;
    writeln!(w, "# randomizations={}", stats.randomizations)?;
    writeln!(w, "# seed={}", stats.seed)?;
    writeln!(w, "# self_pairs={}", stats.self_pairs)?;
    writeln!(w, "# journals={}", stats.journals.iter().cloned().collect::<Vec<_>>().join("\t"))?;
    writeln!(w, "journal_a\tjournal_b\tobserved\tnull_mean\tnull_sd")?;
    for ((a, b), s) in &stats.pairs {
        writeln!(w, "{a}\t{b}\t{}\t{:?}\t{:?}", s.observed, s.null_mean, s.null_sd)?;
    }
    Ok(())
}

pub fn read_stats_cache<R: BufRead>(r: R) -> Result<CoCitationStats, NoveltyError> {
    let err = |line: usize, msg: &str| NoveltyError::Cache { line, msg: msg.to_string() };
    let mut meta: HashMap<String, String> = HashMap::new();
    let mut pairs = BTreeMap::new();
    let mut saw_header = false;
    for (i, line) in r.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| err(n, &e.to_string()))?;
        if n == 1 {
            if line != CACHE_MAGIC {
                return Err(err(1, "not a cocitation stats cache (or unsupported version)"));
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest.split_once('=').ok_or_else(|| err(n, "bad header line"))?;
            meta.insert(k.to_string(), v.to_string());
            continue;
        }
        if !saw_header {
            saw_header = true;
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(err(n, "expected 5 tab-separated fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(n, "bad number"));
        let stat = PairStat {
            observed: f[2].parse().map_err(|_| err(n, "bad count"))?,
            null_mean: num(f[3])?,
            null_sd: num(f[4])?,
        };
        pairs.insert((f[0].to_string(), f[1].to_string()), stat);
    }
    let get = |k: &str| meta.get(k).ok_or_else(|| err(0, &format!("missing header {k}")));
    Ok(CoCitationStats {
        pairs,
        journals: get("journals")?.split('\t').filter(|s| !s.is_empty()).map(str::to_string).collect(),
        randomizations: get("randomizations")?.parse().map_err(|_| err(0, "bad randomizations"))?,
        seed: get("seed")?.parse().map_err(|_| err(0, "bad seed"))?,
        self_pairs: get("self_pairs")?.parse().map_err(|_| err(0, "bad self_pairs"))?,
        background_hash: get("background_hash")?.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Reference;

    fn doc(id: &str, year: i32, journals: &[&str]) -> Document {
        let mut d = Document::from_text(id, "Text.");
        d.year = year;
        d.bibliography = Some(journals.iter().map(|j| Reference { journal_id: j.to_string(), pub_year: year - 1 }).collect());
        d
    }

    #[test]
    fn multiset_pair_rule() {
        let c = build_cocitation(&[doc("p", 2010, &["A", "B"])], true);
        assert_eq!(c.counts.len(), 1);
        assert_eq!(c.counts[&("A".into(), "B".into())], 1);
        let c = build_cocitation(&[doc("p", 2010, &["A", "A", "B", "A"])], true);
        assert_eq!(c.counts[&("A".into(), "A".into())], 1);
        assert_eq!(c.counts[&("A".into(), "B".into())], 1);
        let c = build_cocitation(&[doc("p", 2010, &["A", "A", "B"])], false);
        assert_eq!(c.counts.len(), 1);
        let mut nobib = Document::from_text("q", "x");
        nobib.bibliography = None;
        let c = build_cocitation(&[nobib], true);
        assert!(c.counts.is_empty());
        assert_eq!(c.skipped_documents, 1);
    }

    #[test]
    fn score_arithmetic() {
        assert_eq!(score_from_zscores(&[-2.0, -5.0, -8.0]), (5.0, 3));
        assert_eq!(score_from_zscores(&[-4.0, -1.0, 2.0]), (2.5, 2));
        assert_eq!(score_from_zscores(&[3.0, 3.0]), (0.0, 0));
    }
}

use std::ops::Range;

use rand::seq::{index, IndexedRandom};
use rand::SeedableRng;

use super::ExperimentError;
use crate::corpus::Document;
use crate::lexicon::{match_promotional, Lexicon, Occurrence, SynonymTable};
use crate::seed::Rng;

/// One byte-range replacement in a document's text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edit {
    pub span: Range<usize>,
    pub replacement: String,
}

/// The edits of one substitution draw, sorted by position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubstitutionPlan {
    pub edits: Vec<Edit>,
    /// Token indices that received a synonym.
    pub replaced: Vec<usize>,
    /// Selected occurrences whose term has no synonym entry.
    pub skipped_missing: usize,
    pub selected: usize,
}

/// A substituted copy of a document.
#[derive(Debug, Clone, PartialEq)]
pub struct Replica {
    pub doc: Document,
    pub replaced: Vec<usize>,
    pub skipped_missing: usize,
    pub selected: usize,
}

/// `round(level * m)`, at least 1 and at most `m`.
pub fn replacement_count(level: f64, m: usize) -> usize {
    if m == 0 {
        return 0;
    }
    ((level * m as f64).round() as usize).clamp(1, m)
}

pub(crate) fn check_level(level: f64) -> Result<(), ExperimentError> {
    if level.is_finite() && level > 0.0 && level <= 1.0 {
        Ok(())
    } else {
        Err(ExperimentError::InvalidLevel(level))
    }
}

fn starts_with_vowel(word: &str) -> bool {
    word.chars().next().is_some_and(|c| matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u'))
}

fn capitalize_first(word: &str) -> String {
    let mut cs = word.chars();
    match cs.next() {
        Some(f) => f.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

fn match_case(original: &str, replacement: &str) -> String {
    if original.chars().next().is_some_and(char::is_uppercase) {
        capitalize_first(replacement)
    } else {
        replacement.to_string()
    }
}

/// "a"/"an" chosen for `next`, in the letter case of `article`.
fn adjusted_article(article: &str, next: &str) -> String {
    let base = if starts_with_vowel(next) { "an" } else { "a" };
    let all_caps = article.chars().count() > 1 && article.chars().all(char::is_uppercase);
    if all_caps {
        base.to_uppercase()
    } else {
        match_case(article, base)
    }
}

/// Draws which occurrences to replace and with what.
pub fn plan_substitution(
    doc: &Document,
    occurrences: &[Occurrence],
    level: f64,
    synonyms: &SynonymTable,
    rng: &mut Rng,
) -> SubstitutionPlan {
    let m = occurrences.len();
    let k = replacement_count(level, m);
    let mut chosen = index::sample(rng, m, k).into_vec();
    chosen.sort_unstable();

    let mut plan = SubstitutionPlan { selected: k, ..Default::default() };
    for oi in chosen {
        let occ = &occurrences[oi];
        let Some(syn) = synonyms.get(&occ.term).and_then(|s| s.choose(rng)) else {
            plan.skipped_missing += 1;
            continue;
        };
        let tok = &doc.tokens[occ.token_index];
        let replacement = match_case(&tok.surface, syn);
        if occ.token_index > 0 {
            let prev = &doc.tokens[occ.token_index - 1];
            let gap = &doc.raw_text[prev.end..tok.start];
            let is_article = prev.lower == "a" || prev.lower == "an";
            if is_article && !gap.is_empty() && gap.chars().all(char::is_whitespace) {
                let article = adjusted_article(&prev.surface, &replacement);
                if article != prev.surface {
                    plan.edits.push(Edit { span: prev.span(), replacement: article });
                }
            }
        }
        plan.edits.push(Edit { span: tok.span(), replacement });
        plan.replaced.push(occ.token_index);
    }
    plan
}

/// Applies the edits falling inside `base..base + text.len()` to `text`,
/// which is that slice of the document. Edits must be sorted and disjoint.
pub fn apply_edits(text: &str, base: usize, edits: &[Edit]) -> String {
    let end = base + text.len();
    let mut out = String::with_capacity(text.len() + 16);
    let mut cursor = base;
    for e in edits.iter().filter(|e| e.span.start >= base && e.span.end <= end) {
        out.push_str(&text[cursor - base..e.span.start - base]);
        out.push_str(&e.replacement);
        cursor = e.span.end;
    }
    out.push_str(&text[cursor - base..]);
    out
}

/// Replaces `round(level * m)` (at least one) uniformly chosen promotional
/// occurrences by uniformly chosen synonyms.
///
/// The replacement takes the original's first-letter case, and an
/// indefinite article directly before a replaced word is switched between
/// "a" and "an" to suit the new word. Everything else is byte-identical.
pub fn substitute_once(
    doc: &Document,
    lexicon: &Lexicon,
    level: f64,
    synonyms: &SynonymTable,
    seed: u64,
) -> Result<Replica, ExperimentError> {
    check_level(level)?;
    let occurrences = match_promotional(doc, lexicon);
    if occurrences.is_empty() {
        return Err(ExperimentError::NothingToSubstitute(doc.id.clone()));
    }
    let mut rng = Rng::seed_from_u64(seed);
    let plan = plan_substitution(doc, &occurrences, level, synonyms, &mut rng);
    let text = apply_edits(&doc.raw_text, 0, &plan.edits);
    Ok(Replica {
        doc: doc.with_replaced_text(text),
        replaced: plan.replaced,
        skipped_missing: plan.skipped_missing,
        selected: plan.selected,
    })
}

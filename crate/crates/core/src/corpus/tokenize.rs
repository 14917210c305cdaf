use std::ops::Range;

/// One word token. `start..end` is the byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn span(&self) -> Range<usize> {
        self.start..self.end
    }
}

#[inline]
fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

#[inline]
fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '\u{2019}' | '\u{2010}' | '\u{2011}')
}

/// Splits text into word tokens.
///
/// A token is a maximal run of letters and digits, where a hyphen or
/// apostrophe is kept when it sits between two word characters
/// ("user-friendly", "PI's"). No stemming or normalization beyond lowercase.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_word_char(chars[i].1) {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i + 1;
        loop {
            if j < chars.len() && is_word_char(chars[j].1) {
                j += 1;
            } else if j + 1 < chars.len() && is_joiner(chars[j].1) && is_word_char(chars[j + 1].1) {
                j += 2;
            } else {
                break;
            }
        }
        let end = if j < chars.len() { chars[j].0 } else { text.len() };
        let surface = &text[start..end];
        tokens.push(Token {
            surface: surface.to_string(),
            lower: surface.to_lowercase(),
            start,
            end,
        });
        i = j;
    }
    tokens
}

/// Word count used for every density: the token count under [`tokenize`].
pub fn word_count(text: &str) -> usize {
    tokenize(text).len()
}

const ABBREVIATIONS: &[&str] = &[
    "e.g", "i.e", "et al", "al", "fig", "figs", "dr", "vs", "cf", "etc", "mr", "mrs", "ms", "prof", "approx", "eq",
    "eqs", "ref", "refs", "vol", "pp", "jr", "sr", "inc", "ltd", "dept", "univ", "ca",
];

fn ends_with_abbreviation(text: &str, dot: usize) -> bool {
    // `dot` indexes the terminating '.'; look at the word run right before it.
    let before = &text[..dot];
    let word_start = before
        .char_indices()
        .rev()
        .find(|&(_, c)| !(c.is_alphanumeric() || c == '.'))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    let word = before[word_start..].to_lowercase();
    if word.is_empty() {
        return false;
    }
    if ABBREVIATIONS.contains(&word.as_str()) {
        return true;
    }
    // "et al." spans a space.
    if word == "al" {
        return true;
    }
    // single initials like "J. Smith"
    word.chars().count() == 1 && word.chars().all(|c| c.is_alphabetic())
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201C}' | '\u{2018}')
}

/// Byte ranges of sentences in `text`.
///
/// A boundary is a run of `.`, `!` or `?` (optionally followed by closing
/// quotes or brackets) that is followed by whitespace and then an uppercase
/// letter, possibly behind an opening quote or bracket. A period ending a
/// known abbreviation or a single initial does not split. Text after the last
/// boundary forms a final sentence. Whitespace-only pieces are dropped.
pub fn sentence_spans(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut sent_start = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut j = i;
        while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
            j += 1;
        }
        let n_terminators = j - run_start;
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let end_of_terminator = if j < chars.len() { chars[j].0 } else { text.len() };
        let mut k = j;
        let mut saw_space = false;
        while k < chars.len() && chars[k].1.is_whitespace() {
            saw_space = true;
            k += 1;
        }
        while k < chars.len() && is_opener(chars[k].1) {
            k += 1;
        }
        let next_upper = k < chars.len() && chars[k].1.is_uppercase();
        let abbreviated = c == '.' && n_terminators == 1 && ends_with_abbreviation(text, pos);
        if saw_space && next_upper && !abbreviated {
            push_span(text, &mut spans, sent_start..end_of_terminator);
            sent_start = end_of_terminator;
        }
        i = j.max(i + 1);
    }
    push_span(text, &mut spans, sent_start..text.len());
    spans
}

fn push_span(text: &str, spans: &mut Vec<Range<usize>>, r: Range<usize>) {
    let piece = &text[r.clone()];
    let lead = piece.len() - piece.trim_start().len();
    let trail = piece.len() - piece.trim_end().len();
    if lead + trail < piece.len() {
        spans.push(r.start + lead..r.end - trail);
    }
}

/// Sentence boundaries as token-index ranges over `tokens`.
///
/// Sentences that contain no tokens are dropped, so the result partitions
/// `0..tokens.len()`.
pub fn segment_tokens(text: &str, tokens: &[Token]) -> Vec<Range<usize>> {
    let spans = sentence_spans(text);
    let mut out = Vec::with_capacity(spans.len());
    let mut t = 0;
    for (si, span) in spans.iter().enumerate() {
        let first = t;
        let is_last = si + 1 == spans.len();
        while t < tokens.len() && (is_last || tokens[t].start < span.end) {
            t += 1;
        }
        if t > first {
            out.push(first..t);
        }
    }
    // tokens past the final span cannot occur, but keep the partition total
    if t < tokens.len() {
        match out.last_mut() {
            Some(last) => last.end = tokens.len(),
            None => out.push(0..tokens.len()),
        }
    }
    out
}

/// Convenience wrapper: token-index sentence ranges for raw text.
pub fn segment_sentences(text: &str) -> Vec<Range<usize>> {
    segment_tokens(text, &tokenize(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tokenize("").is_empty());
        assert!(segment_sentences("").is_empty());
    }

    #[test]
    fn hyphenated_terms_stay_whole() {
        assert_eq!(surfaces("user-friendly tools"), vec!["user-friendly", "tools"]);
        assert_eq!(surfaces("a -dash- here--there"), vec!["a", "dash", "here", "there"]);
        assert_eq!(surfaces("the PI's grant"), vec!["the", "PI's", "grant"]);
    }

    #[test]
    fn table_sentence_has_fourteen_tokens() {
        let s = "These innovative and novel studies will provide essential new information about the regulation of...";
        assert_eq!(tokenize(s).len(), 14);
    }

    #[test]
    fn lowercase_form_and_spans() {
        let text = "Novel, NOVEL novel";
        let toks = tokenize(text);
        assert_eq!(toks.len(), 3);
        assert!(toks.iter().all(|t| t.lower == "novel"));
        for t in &toks {
            assert_eq!(&text[t.span()], t.surface);
        }
    }

    #[test]
    fn simple_sentences() {
        assert_eq!(segment_sentences("A cat. A dog."), vec![0..2, 2..4]);
        assert_eq!(segment_sentences("One clause only"), vec![0..3]);
    }

    #[test]
    fn abbreviations_do_not_split() {
        let text = "We follow Smith et al. (2020). We extend it.";
        assert_eq!(sentence_spans(text).len(), 2);
        assert_eq!(segment_sentences("See Fig. 2 and Dr. Jones. Then stop."), vec![0..6, 6..8]);
        assert_eq!(segment_sentences("Use tools, e.g. Rust. Fine."), vec![0..5, 5..6]);
    }

    #[test]
    fn lowercase_after_period_does_not_split() {
        assert_eq!(segment_sentences("The value was 3.5 units. and more."), vec![0..8]);
    }

    #[test]
    fn ellipsis_splits_only_before_uppercase() {
        assert_eq!(segment_sentences("It was... quiet. Then... Loud."), vec![0..3, 3..4, 4..5]);
    }

    #[test]
    fn question_and_exclamation() {
        assert_eq!(segment_sentences("Why? Because! \"Quoted\" text."), vec![0..1, 1..2, 2..4]);
    }
}

use promolex::corpus::{tokenize, Document};
use promolex::experiment::{BaselineValenceScorer, SentenceScorer};
use promolex::lexicon::{load_promotional_lexicon, load_synonym_table, Rating, RatingLexicon, STARTER_SYNONYMS};
use promolex::metrics::{compute_features, FeatureOptions};
use proptest::prelude::*;

const PIECES: &[&str] = &[
    "novel", "Novel", "unique", "the", "cell", "We", "rate", "e.g.", "Dr.", "J.", "user-friendly", "PI's", "data.",
    "results!", "why?", "It", "\"Quoted.\"", "2019", "--", "(", ")", ",", "remarkable", "Critical.", "a", "an", "...",
    "état", "  ", "\n\n", "x-", "-y",
];

fn text_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(PIECES), 0..80).prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn token_spans_increase_and_match_source(text in text_strategy()) {
        let toks = tokenize(&text);
        for w in toks.windows(2) {
            prop_assert!(w[0].end <= w[1].start);
        }
        for t in &toks {
            prop_assert!(t.start < t.end);
            prop_assert_eq!(&text[t.span()], t.surface.as_str());
            prop_assert_eq!(t.surface.to_lowercase(), t.lower.clone());
        }
    }

    #[test]
    fn sentences_partition_tokens(text in text_strategy()) {
        let doc = Document::from_text("d", text);
        let mut next = 0;
        for r in &doc.sentences {
            prop_assert_eq!(r.start, next);
            prop_assert!(r.end > r.start);
            next = r.end;
        }
        prop_assert_eq!(next, doc.tokens.len());
        let owner = doc.sentence_index_of_tokens();
        prop_assert_eq!(owner.len(), doc.tokens.len());
        for (i, s) in owner.iter().enumerate() {
            prop_assert!(doc.sentences[*s].contains(&i));
        }
    }

    #[test]
    fn feature_proportions_stay_in_unit_interval(text in text_strategy(), window in 1usize..40) {
        let (lex, _) = load_promotional_lexicon(None).unwrap();
        let doc = Document::from_text("d", text);
        let opts = FeatureOptions { window, ..FeatureOptions::default() };
        let Ok(f) = compute_features(&doc, &lex, &opts) else {
            prop_assert!(doc.tokens.is_empty());
            return Ok(());
        };
        for p in [f.promo_fraction, f.promo_fraction_unique, f.head_density, f.tail_density, f.sentence_incidence] {
            prop_assert!((0.0..=1.0).contains(&p), "{p}");
        }
        prop_assert!(f.promo_fraction_unique <= f.promo_fraction + 1e-15);
        prop_assert_eq!(f.word_count, doc.tokens.len());
        prop_assert!(f.word_count > 0);
        let brute = doc.tokens.iter().filter(|t| lex.contains(&t.lower)).count();
        prop_assert_eq!(f.promo_count, brute);
    }

    #[test]
    fn baseline_scores_are_distributions(vals in prop::collection::vec(1.0f64..9.0, 1..6), text in text_strategy()) {
        let mut r = RatingLexicon::default();
        for (w, v) in ["novel", "unique", "cell", "rate", "remarkable", "data"].iter().zip(&vals) {
            r.insert(w, Rating { valence: *v, arousal: 5.0, concreteness: None, frequency_weight: None });
        }
        let scorer = BaselineValenceScorer::new(r).unwrap();
        let s = scorer.score_batch(&[text.as_str()]).unwrap()[0];
        let sum = s.positive + s.neutral + s.negative;
        prop_assert!((sum - 1.0).abs() < 1e-12, "{sum}");
        for p in [s.positive, s.neutral, s.negative] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}

#[test]
fn starter_synonyms_respect_the_lexicon() {
    let (lex, _) = load_promotional_lexicon(None).unwrap();
    let table = load_synonym_table(STARTER_SYNONYMS, &lex).unwrap();
    let mut keys = 0;
    for (term, list) in table.iter() {
        keys += 1;
        assert!(lex.contains(term), "{term}");
        assert!(!list.is_empty(), "{term}");
        for s in list {
            assert!(!lex.contains(s), "{term} -> {s}");
            assert_eq!(s, &s.to_lowercase());
        }
    }
    assert!(keys > 0);
}

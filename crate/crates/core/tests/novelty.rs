use promolex::corpus::{Document, Reference};
use promolex::novelty::{
    build_cocitation, citation_links, grant_innovativeness, null_model_zscores, read_stats_cache, score_from_zscores,
    write_stats_cache, NoveltyError, NullModel,
};
use proptest::prelude::*;

mod common;
use common::*;

#[test]
fn monte_carlo_z_matches_exhaustive_oracle() {
    let links = toy_links();
    let stats = null_model_zscores(&links, 4000, 42, true).unwrap();
    let exact = exhaustive_oracle(&links);
    let observed = pair_counts(&links, true);
    let mut compared = 0;
    for (pair, (m, sd)) in &exact {
        let st = stats.get(&pair.0, &pair.1).unwrap();
        let obs = observed.get(pair).copied().unwrap_or(0.0);
        assert_eq!(st.observed as f64, obs);
        if *sd > 0.0 {
            let z = (obs - m) / sd;
            assert!((st.z().unwrap() - z).abs() < 0.1, "{pair:?}: {:?} vs {z}", st.z());
            compared += 1;
        } else {
            assert!(st.z().is_none());
        }
    }
    assert!(compared >= 2);
}

#[test]
fn randomizations_conserve_strata_and_bibliography_sizes() {
    let links = toy_links();
    let model = NullModel::new(&links, true).unwrap();
    let obs = model.observed_journals().to_vec();
    let sizes: Vec<usize> = model.papers().iter().map(|r| r.len()).collect();
    assert_eq!(sizes, vec![3, 3, 3]);
    for r in 0..200 {
        let shuffled = model.randomization(r, 9);
        for stratum in model.strata() {
            let mut a: Vec<u32> = stratum.iter().map(|&s| obs[s]).collect();
            let mut b: Vec<u32> = stratum.iter().map(|&s| shuffled[s]).collect();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
        }
        assert_eq!(shuffled.len(), obs.len());
    }
}

#[test]
fn identity_strata_give_undefined_z() {
    let links = vec![link("P1", 2010, "A", 2001), link("P1", 2010, "B", 2002), link("P2", 2011, "A", 2003)];
    let stats = null_model_zscores(&links, 10, 1, true).unwrap();
    assert!(stats.pairs.values().all(|s| s.z().is_none()));
}

#[test]
fn too_few_randomizations_and_future_citations() {
    assert_eq!(null_model_zscores(&toy_links(), 1, 0, true), Err(NoveltyError::TooFewRandomizations(1)));
    let bad = vec![link("P1", 2010, "A", 2012)];
    assert!(matches!(null_model_zscores(&bad, 10, 0, true), Err(NoveltyError::FutureCitation { .. })));
}

#[test]
fn same_seed_is_deterministic_and_doubling_r_converges() {
    let links = toy_links();
    let a = null_model_zscores(&links, 1000, 5, true).unwrap();
    let b = null_model_zscores(&links, 1000, 5, true).unwrap();
    assert_eq!(a, b);
    let c = null_model_zscores(&links, 2000, 5, true).unwrap();
    for (p, s) in &a.pairs {
        if let (Some(z1), Some(z2)) = (s.z(), c.pairs[p].z()) {
            assert!((z1 - z2).abs() < 0.2, "{p:?}: {z1} vs {z2}");
        }
    }
}

fn grant(journals: &[&str]) -> Document {
    let mut d = Document::from_text("G", "Grant text.");
    d.year = 2012;
    d.bibliography = Some(journals.iter().map(|j| Reference { journal_id: j.to_string(), pub_year: 2010 }).collect());
    d
}

#[test]
fn grant_scores_and_flags() {
    let stats = null_model_zscores(&toy_links(), 500, 3, true).unwrap();
    let r = grant_innovativeness(&grant(&["A", "B", "A"]), &stats).unwrap();
    assert!(r.score >= 0.0);
    assert_eq!(r.references_dropped, 0);
    assert_eq!(r.zscores.len() + r.n_undefined, 2);

    let r = grant_innovativeness(&grant(&["A", "B", "X", "Y", "Z"]), &stats).unwrap();
    assert_eq!(r.references_dropped, 3);
    assert!(r.low_confidence);

    let e = grant_innovativeness(&grant(&["A", "X"]), &stats).unwrap_err();
    assert!(matches!(e, NoveltyError::InsufficientBibliography { usable: 1, .. }));
    let mut nobib = grant(&[]);
    nobib.bibliography = None;
    assert!(grant_innovativeness(&nobib, &stats).is_err());
}

#[test]
fn cache_round_trip_is_exact() {
    let stats = null_model_zscores(&toy_links(), 300, 8, true).unwrap();
    let mut buf = Vec::new();
    write_stats_cache(&mut buf, &stats).unwrap();
    let back = read_stats_cache(&buf[..]).unwrap();
    assert_eq!(back, stats);
    assert!(back.matches(&stats.background_hash, 300, 8, true));
    assert!(!back.matches(&stats.background_hash, 300, 9, true));
    assert!(read_stats_cache("garbage\n".as_bytes()).is_err());
}

#[test]
fn links_from_documents() {
    let mut d = grant(&["A", "B"]);
    d.id = "X".into();
    let mut nobib = grant(&[]);
    nobib.bibliography = None;
    let (links, skipped) = citation_links(&[d.clone(), nobib]);
    assert_eq!(links.len(), 2);
    assert_eq!(skipped, 1);
    let counts = build_cocitation(&[d], true);
    assert_eq!(counts.counts.len(), 1);
}

proptest! {
    #[test]
    fn score_is_nonnegative_and_monotone(z in proptest::collection::vec(-10.0f64..10.0, 0..30), k in 0usize..30, delta in 0.0f64..20.0) {
        let (s, n) = score_from_zscores(&z);
        prop_assert!(s >= 0.0);
        if !z.is_empty() {
            let mut z2 = z.clone();
            let i = k % z.len();
            z2[i] -= delta;
            let (_, n2) = score_from_zscores(&z2);
            prop_assert!(n2 >= n);
        }
    }
}

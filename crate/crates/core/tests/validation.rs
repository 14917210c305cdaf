use promolex::corpus::Document;
use promolex::lexicon::Lexicon;
use promolex::seed::SeedPath;
use promolex::stats::dist::Side;
use promolex::validation::{
    cohens_kappa, cronbach_alpha, item_total_correlations, mtmm_compare, signed_rank_test, ItemFlag, ItemMatrix,
};
use proptest::prelude::*;
use rand::Rng;

mod common;
use common::*;

fn matrix(cols: Vec<Vec<f64>>) -> ItemMatrix<f64> {
    let items = (0..cols.len()).map(|j| format!("t{j}")).collect();
    ItemMatrix::from_columns(items, cols).unwrap()
}

#[test]
fn alpha_matches_covariance_oracle_on_random_matrices() {
    let mut rng = SeedPath::new(2024).label("alpha-oracle").rng();
    for _ in 0..1000 {
        let k = rng.random_range(2..8);
        let n = rng.random_range(3..30);
        let base: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let cols: Vec<Vec<f64>> =
            (0..k).map(|_| base.iter().map(|b| b * rng.random::<f64>() + rng.random::<f64>()).collect()).collect();
        let got = cronbach_alpha(&matrix(cols.clone())).unwrap();
        let want = alpha_covariance_oracle(&cols);
        assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn alpha_five_by_three_fixture() {
    let cols = vec![
        vec![0.2, 0.5, 0.1, 0.9, 0.4],
        vec![0.3, 0.6, 0.0, 0.7, 0.2],
        vec![0.1, 0.9, 0.3, 0.8, 0.5],
    ];
    let got = cronbach_alpha(&matrix(cols.clone())).unwrap();
    assert!((got - alpha_covariance_oracle(&cols)).abs() < 1e-12);
}

#[test]
fn item_rest_correlation_cases() {
    // t0 equals the sum of the other two items
    let t1 = vec![0.1, 0.4, 0.2, 0.9, 0.3];
    let t2 = vec![0.0, 0.3, 0.5, 0.1, 0.2];
    let t0: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| a + b).collect();
    let res = item_total_correlations(&matrix(vec![t0, t1, t2])).unwrap();
    assert!((res[0].r.unwrap() - 1.0).abs() < 1e-12);

    // orthogonal fixture: t0 has zero covariance with t1 + t2
    let t0 = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
    let t1 = vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
    let t2 = vec![0.5, 0.5, 0.5, 0.5, 1.5, 1.5, 1.5, 1.5];
    let res = item_total_correlations(&matrix(vec![t0, t1, t2])).unwrap();
    assert!(res[0].r.unwrap().abs() < 0.1);
    assert!(res[0].p.unwrap() > 0.05);

    let res = item_total_correlations(&matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]])).unwrap();
    assert_eq!(res[0].flag, Some(ItemFlag::NoDegreesOfFreedom));
    assert!(res[0].p.is_none());

    let res = item_total_correlations(&matrix(vec![vec![0.5; 4], vec![1.0, 0.0, 2.0, 1.0]])).unwrap();
    assert_eq!(res[0].flag, Some(ItemFlag::ConstantItem));
    assert_eq!(res[0].r, None);
    assert_eq!(res[1].flag, Some(ItemFlag::ConstantRest));
}

#[test]
fn item_matrix_from_corpus_uses_percentages() {
    let lex = Lexicon::new(["novel", "critical"], "t").unwrap();
    let docs = vec![
        Document::from_text("a", "A novel and critical idea here."),
        Document::from_text("b", "Nothing special at all."),
    ];
    let m: ItemMatrix<f64> = ItemMatrix::from_corpus(&docs, &lex).unwrap();
    assert_eq!(m.items(), ["critical", "novel"]);
    assert!((m.column(1)[0] - 100.0 / 6.0).abs() < 1e-12);
    assert_eq!(m.column(1)[1], 0.0);
}

/// Brute force over all 2^n sign assignments of the observed mid-ranks.
fn signed_rank_oracle(d: &[f64]) -> f64 {
    let nz: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let n = nz.len();
    let ranks: Vec<f64> = nz
        .iter()
        .map(|v| {
            let less = nz.iter().filter(|w| w.abs() < v.abs()).count() as f64;
            let eq = nz.iter().filter(|w| w.abs() == v.abs()).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = nz.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let mut hits = 0u64;
    for mask in 0u32..(1 << n) {
        let w: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
        if w >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn signed_rank_exact_equals_enumeration(d in proptest::collection::vec(-4i32..5, 1..13)) {
        let x: Vec<f64> = d.iter().map(|&v| f64::from(v)).collect();
        let y = vec![0.0; x.len()];
        let r = signed_rank_test(&x, &y, Side::Greater).unwrap();
        if x.iter().all(|v| *v == 0.0) {
            prop_assert!(r.p_value.is_none());
        } else {
            let p = r.p_value.unwrap();
            prop_assert!((p - signed_rank_oracle(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_invariances(seed in 0u64..10_000, shift in -5.0f64..5.0, scale in 0.01f64..100.0, col in 0usize..4) {
        let mut rng = SeedPath::new(seed).label("alpha-inv").rng();
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..12).map(|_| rng.random::<f64>()).collect()).collect();
        let Ok(a) = cronbach_alpha(&matrix(cols.clone())) else { return Ok(()) };
        let mut shifted = cols.clone();
        shifted[col].iter_mut().for_each(|v| *v += shift.abs());
        let b = cronbach_alpha(&matrix(shifted)).unwrap();
        let scaled: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().map(|v| v * scale).collect()).collect();
        let c = cronbach_alpha(&matrix(scaled)).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        prop_assert!((a - c).abs() < 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn kappa_symmetric_and_reflexive(a in proptest::collection::vec(0u8..3, 2..60), b in proptest::collection::vec(0u8..3, 2..60)) {
        let n = a.len().min(b.len());
        let (a, b) = (&a[..n], &b[..n]);
        let ab: Result<f64, _> = cohens_kappa(a, b);
        let ba: Result<f64, _> = cohens_kappa(b, a);
        match (ab, ba) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "asymmetric definedness"),
        }
        if a.iter().any(|v| *v != a[0]) {
            let s: f64 = cohens_kappa(a, a).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn kappa_of_independent_raters_tends_to_zero() {
    let mut rng = SeedPath::new(77).label("kappa-mc").rng();
    let n = 200_000;
    let a: Vec<u8> = (0..n).map(|_| rng.random_range(0..3)).collect();
    let b: Vec<u8> = (0..n).map(|_| rng.random_range(0..3)).collect();
    let k: f64 = cohens_kappa(&a, &b).unwrap();
    assert!(k.abs() < 0.01, "{k}");
}

#[test]
fn mtmm_directional_cases() {
    let syn = [4.1, 5.3, 3.8, 6.0, 4.7, 5.5];
    let promo: Vec<f64> = syn.iter().map(|v| v + 1.0).collect();
    let r = mtmm_compare(&promo, &syn, None).unwrap();
    assert!(r.signed_rank.p_value.unwrap() < 0.05);
    assert!((r.signed_rank.p_value.unwrap() - 1.0 / 64.0).abs() < 1e-15);
    assert!(r.welch.as_ref().unwrap().p_value < 0.05);
    assert_eq!(r.weighting, "unweighted");

    let same = mtmm_compare(&syn, &syn, None).unwrap();
    assert!(same.signed_rank.p_value.is_none());
    assert!((same.welch.unwrap().p_value - 0.5).abs() < 1e-12);

    let w = [1.0, 2.0, 1.0, 3.0, 1.0, 1.0];
    let r = mtmm_compare(&promo, &syn, Some((&w, "corpus frequency"))).unwrap();
    assert_eq!(r.weighting, "corpus frequency");
    assert!(mtmm_compare(&promo[..5], &syn[..5], None).is_err());
}

#[test]
fn large_signed_rank_uses_normal_approximation() {
    let x: Vec<f64> = (0..40).map(|i| f64::from(i % 7) + 0.5).collect();
    let y = vec![0.0; 40];
    let r = signed_rank_test(&x, &y, Side::Greater).unwrap();
    assert!(!r.exact);
    assert!(r.p_value.unwrap() < 1e-6);
}

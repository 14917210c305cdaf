//! Oracles and fixtures shared by the integration test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;

use promolex::inference::Design;
use promolex::novelty::CitationLink;
use promolex::seed::SeedPath;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

pub fn link(p: &str, py: i32, j: &str, jy: i32) -> CitationLink {
    CitationLink { citing_id: p.into(), citing_year: py, cited_journal: j.into(), cited_year: jy }
}

pub fn toy_links() -> Vec<CitationLink> {
    vec![
        link("P1", 2010, "A", 2008),
        link("P1", 2010, "B", 2008),
        link("P1", 2010, "A", 2009),
        link("P2", 2010, "A", 2008),
        link("P2", 2010, "A", 2008),
        link("P2", 2010, "B", 2009),
        link("P3", 2011, "B", 2010),
        link("P3", 2011, "A", 2010),
        link("P3", 2011, "B", 2009),
    ]
}

pub fn permutations(v: &[String]) -> Vec<Vec<String>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

pub fn pair_counts(links: &[CitationLink], self_pairs: bool) -> BTreeMap<(String, String), f64> {
    let mut by_paper: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for l in links {
        by_paper.entry(&l.citing_id).or_default().push(&l.cited_journal);
    }
    let mut counts = BTreeMap::new();
    for js in by_paper.values() {
        let mut mult: BTreeMap<&str, usize> = BTreeMap::new();
        for j in js {
            *mult.entry(j).or_default() += 1;
        }
        let keys: Vec<&str> = mult.keys().copied().collect();
        for (a, &ja) in keys.iter().enumerate() {
            if self_pairs && mult[ja] >= 2 {
                *counts.entry((ja.to_string(), ja.to_string())).or_insert(0.0) += 1.0;
            }
            for &jb in &keys[a + 1..] {
                *counts.entry((ja.to_string(), jb.to_string())).or_insert(0.0) += 1.0;
            }
        }
    }
    counts
}

/// Exact mean and population sd of every pair count over all
/// within-stratum permutations.
pub fn exhaustive_oracle(links: &[CitationLink]) -> BTreeMap<(String, String), (f64, f64)> {
    let mut strata: BTreeMap<(i32, i32), Vec<usize>> = BTreeMap::new();
    for (i, l) in links.iter().enumerate() {
        strata.entry((l.citing_year, l.cited_year)).or_default().push(i);
    }
    let strata: Vec<Vec<usize>> = strata.into_values().collect();
    let options: Vec<Vec<Vec<String>>> = strata
        .iter()
        .map(|s| permutations(&s.iter().map(|&i| links[i].cited_journal.clone()).collect::<Vec<_>>()))
        .collect();
    let mut sums: BTreeMap<(String, String), (f64, f64)> = BTreeMap::new();
    let mut total = 0.0;
    let mut idx = vec![0usize; strata.len()];
    loop {
        let mut cur = links.to_vec();
        for (s, slots) in strata.iter().enumerate() {
            for (k, &slot) in slots.iter().enumerate() {
                cur[slot].cited_journal = options[s][idx[s]][k].clone();
            }
        }
        let c = pair_counts(&cur, true);
        for (p, v) in &c {
            let e = sums.entry(p.clone()).or_insert((0.0, 0.0));
            e.0 += v;
            e.1 += v * v;
        }
        total += 1.0;
        // odometer
        let mut s = 0;
        loop {
            if s == strata.len() {
                return sums
                    .into_iter()
                    .map(|(p, (a, b))| {
                        let m = a / total;
                        (p, (m, (b / total - m * m).max(0.0).sqrt()))
                    })
                    .collect();
            }
            idx[s] += 1;
            if idx[s] < options[s].len() {
                break;
            }
            idx[s] = 0;
            s += 1;
        }
    }
}

pub fn logit_data(n: usize, seed: u64) -> (Design<f64>, Vec<f64>) {
    let mut rng = SeedPath::new(seed).label("logit-data").rng();
    let x1: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 0.04).collect();
    let x2: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let y = (0..n)
        .map(|i| {
            let eta = -1.5 + 30.0 * x1[i] + 0.8 * x2[i];
            f64::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()))
        })
        .collect();
    (Design::with_intercept(n, &[("x1", x1), ("x2", x2)]), y)
}

pub fn count_data(n: usize, alpha: f64, seed: u64) -> (Design<f64>, Vec<f64>) {
    let mut rng = SeedPath::new(seed).label("counts").rng();
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let y = x
        .iter()
        .map(|&v| {
            let mu = (1.0 + 0.6 * v).exp();
            let lam = if alpha > 0.0 { Gamma::new(1.0 / alpha, alpha * mu).unwrap().sample(&mut rng) } else { mu };
            Poisson::new(lam.max(1e-12)).unwrap().sample(&mut rng)
        })
        .collect();
    (Design::with_intercept(n, &[("x", x)]), y)
}

/// Enumerates every split of the pooled sample into groups of the
/// original sizes and returns the fraction with D at least as large.
pub fn ks_permutation_oracle(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (n, total) = (a.len(), pooled.len());
    let stat = |mask: u32| -> f64 {
        let xs: Vec<f64> = (0..total).filter(|k| mask >> k & 1 == 1).map(|k| pooled[k]).collect();
        let ys: Vec<f64> = (0..total).filter(|k| mask >> k & 1 == 0).map(|k| pooled[k]).collect();
        pooled
            .iter()
            .map(|&t| {
                let fx = xs.iter().filter(|&&v| v <= t).count() as f64 / xs.len() as f64;
                let fy = ys.iter().filter(|&&v| v <= t).count() as f64 / ys.len() as f64;
                (fx - fy).abs()
            })
            .fold(0.0, f64::max)
    };
    let observed = stat((1u32 << n) - 1);
    let (mut hits, mut count) = (0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize == n {
            count += 1;
            if stat(mask) >= observed - 1e-12 {
                hits += 1;
            }
        }
    }
    (observed, hits as f64 / count as f64)
}

/// Alpha from the full covariance matrix: k/(k-1) * (1 - trace / sum of all entries).
pub fn alpha_covariance_oracle(cols: &[Vec<f64>]) -> f64 {
    let k = cols.len();
    let n = cols[0].len();
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let cov = |a: usize, b: usize| -> f64 {
        (0..n).map(|i| (cols[a][i] - means[a]) * (cols[b][i] - means[b])).sum::<f64>() / (n as f64 - 1.0)
    };
    let trace: f64 = (0..k).map(|j| cov(j, j)).sum();
    let total: f64 = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).map(|(a, b)| cov(a, b)).sum();
    k as f64 / (k as f64 - 1.0) * (1.0 - trace / total)
}

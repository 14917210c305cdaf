use promolex::inference::{
    binomial_test, bic, build_design, fit_logit, fit_negbin, fit_ols, ks_two_sample, logit_loglik, logit_score, margins,
    negbin_loglik, negbin_score, odds_ratio, vif, welch_t_test, DataTable, Design, Family, InferenceError, ModelSpec,
    TestSide, NEGBIN_ALPHA_FLOOR,
};
use promolex::seed::SeedPath;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::Distribution;

mod common;
use common::*;

/// Plain Newton-Raphson on the raw design with dense Gaussian elimination.
fn newton_logit_oracle(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut b = vec![0.0; p];
    for _ in 0..100 {
        let mut g = vec![0.0; p];
        let mut h = vec![vec![0.0; p]; p];
        for (xi, &yi) in x.iter().zip(y) {
            let eta: f64 = xi.iter().zip(&b).map(|(a, c)| a * c).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            for a in 0..p {
                g[a] += xi[a] * (yi - mu);
                for c in 0..p {
                    h[a][c] += xi[a] * xi[c] * mu * (1.0 - mu);
                }
            }
        }
        let step = gauss_solve(h, g);
        b.iter_mut().zip(&step).for_each(|(bi, s)| *bi += s);
        if step.iter().all(|s| s.abs() < 1e-13) {
            break;
        }
    }
    b
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (b[i] - (i + 1..n).map(|j| a[i][j] * x[j]).sum::<f64>()) / a[i][i];
    }
    x
}

fn rows(d: &Design<f64>) -> Vec<Vec<f64>> {
    (0..d.n()).map(|i| d.x.row(i).to_vec()).collect()
}

#[test]
fn logit_matches_newton_oracle_and_zero_gradient() {
    let (d, y) = logit_data(3000, 7);
    let fit = fit_logit(&d, &y).unwrap();
    assert!(fit.converged);
    let oracle = newton_logit_oracle(&rows(&d), &y);
    for (a, b) in fit.coefficients.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
    }
    let g = logit_score(&d.x, &y, &fit.coefficients);
    assert!(g.iter().all(|v| v.abs() < 1e-6), "{g:?}");
    assert!((logit_loglik(&d.x, &y, &fit.coefficients) - fit.loglik).abs() < 1e-8);
    assert!((bic(&fit) - (3.0 * 3000f64.ln() - 2.0 * fit.loglik)).abs() < 1e-9);
}

#[test]
fn logit_score_matches_finite_differences() {
    let (d, y) = logit_data(200, 3);
    let beta = [-1.0, 20.0, 0.3];
    let g = logit_score(&d.x, &y, &beta);
    for j in 0..3 {
        let h = 1e-6 * (1.0 + beta[j].abs());
        let mut up = beta;
        let mut dn = beta;
        up[j] += h;
        dn[j] -= h;
        let fd = (logit_loglik(&d.x, &y, &up) - logit_loglik(&d.x, &y, &dn)) / (2.0 * h);
        assert!((fd - g[j]).abs() < 1e-5 * (1.0 + g[j].abs()), "{j}: {fd} vs {}", g[j]);
    }
}

#[test]
fn logit_covariance_is_inverse_information() {
    let (d, y) = logit_data(1500, 11);
    let fit = fit_logit(&d, &y).unwrap();
    // information at the optimum computed directly from the raw design
    let x = rows(&d);
    let mut info = vec![vec![0.0; 3]; 3];
    for xi in &x {
        let eta: f64 = xi.iter().zip(&fit.coefficients).map(|(a, b)| a * b).sum();
        let mu = 1.0 / (1.0 + (-eta).exp());
        for a in 0..3 {
            for b in 0..3 {
                info[a][b] += xi[a] * xi[b] * mu * (1.0 - mu);
            }
        }
    }
    for a in 0..3 {
        let e: Vec<f64> = (0..3).map(|k| f64::from(k == a)).collect();
        let col = gauss_solve(info.clone(), e);
        for b in 0..3 {
            assert!((col[b] - fit.covariance[(b, a)]).abs() < 1e-6 * (1.0 + col[b].abs()));
        }
    }
}

#[test]
fn separation_is_reported() {
    let x: Vec<f64> = (0..20).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|&v| f64::from(v >= 10.0)).collect();
    let d = Design::with_intercept(20, &[("x", x)]);
    assert!(matches!(fit_logit(&d, &y), Err(InferenceError::Separation { .. })));
}

#[test]
fn collinear_columns_are_named() {
    let x: Vec<f64> = (0..10).map(|i| f64::from(i) * 0.37).collect();
    let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let y: Vec<f64> = (0..10).map(|i| f64::from(i % 2)).collect();
    let d = Design::with_intercept(10, &[("x", x), ("x_twice", x2)]);
    match fit_logit(&d, &y) {
        Err(InferenceError::RankDeficient { columns }) => {
            assert_eq!(columns.len(), 1);
            assert!(columns[0] == "x" || columns[0] == "x_twice");
        }
        other => panic!("expected rank deficiency, got {other:?}"),
    }
    assert!(matches!(fit_ols(&d, &y), Err(InferenceError::RankDeficient { .. })));
}

#[test]
fn ols_exact_line_and_classical_errors() {
    let x: Vec<f64> = (0..8).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v).collect();
    let fit = fit_ols(&Design::with_intercept(8, &[("x", x.clone())]), &y).unwrap();
    assert!((fit.coefficients[0] - 1.0).abs() < 1e-10);
    assert!((fit.coefficients[1] - 2.0).abs() < 1e-10);
    assert_eq!(fit.k, 2);

    // noisy line against the textbook closed form
    let mut rng = SeedPath::new(5).label("ols").rng();
    let n = 50;
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v + rng.random::<f64>() - 0.5).collect();
    let fit = fit_ols(&Design::with_intercept(n, &[("x", x.clone())]), &y).unwrap();
    let (mx, my) = (x.iter().sum::<f64>() / n as f64, y.iter().sum::<f64>() / n as f64);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b1 = sxy / sxx;
    let b0 = my - b1 * mx;
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - b0 - b1 * a).powi(2)).sum();
    let s2 = rss / (n as f64 - 2.0);
    assert!((fit.coefficients[1] - b1).abs() < 1e-10);
    assert!((fit.coefficients[0] - b0).abs() < 1e-10);
    assert!((fit.std_errors[1] - (s2 / sxx).sqrt()).abs() < 1e-10);
    assert!((fit.std_errors[0] - (s2 * (1.0 / n as f64 + mx * mx / sxx)).sqrt()).abs() < 1e-10);
}

fn poisson_oracle(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut b = vec![0.0; p];
    b[0] = (y.iter().sum::<f64>() / y.len() as f64).ln();
    for _ in 0..200 {
        let mut g = vec![0.0; p];
        let mut h = vec![vec![0.0; p]; p];
        for (xi, &yi) in x.iter().zip(y) {
            let mu: f64 = xi.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>().exp();
            for a in 0..p {
                g[a] += xi[a] * (yi - mu);
                for c in 0..p {
                    h[a][c] += xi[a] * xi[c] * mu;
                }
            }
        }
        let step = gauss_solve(h, g);
        b.iter_mut().zip(&step).for_each(|(bi, s)| *bi += s);
        if step.iter().all(|s| s.abs() < 1e-13) {
            break;
        }
    }
    b
}

#[test]
fn negbin_on_equidispersed_counts_reaches_poisson_limit() {
    // this seed yields a sample that is not overdispersed, so the
    // dispersion MLE sits on its floor
    let (d, y) = (0..50u64)
        .map(|s| count_data(2000, 0.0, s))
        .find(|(d, y)| {
            let b = poisson_oracle(&rows(d), y);
            let resid: f64 = rows(d)
                .iter()
                .zip(y)
                .map(|(xi, &yi)| {
                    let mu = (b[0] + b[1] * xi[1]).exp();
                    (yi - mu).powi(2) - yi
                })
                .sum();
            resid < 0.0
        })
        .expect("an underdispersed draw");
    let fit = fit_negbin(&d, &y).unwrap();
    assert!(fit.poisson_limit);
    assert!((fit.dispersion.unwrap() - NEGBIN_ALPHA_FLOOR).abs() < 1e-12);
    let oracle = poisson_oracle(&rows(&d), &y);
    for (a, b) in fit.coefficients.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
    assert_eq!(fit.k, 3);
}

#[test]
fn negbin_recovers_overdispersion() {
    let (d, y) = count_data(5000, 0.5, 21);
    let fit = fit_negbin(&d, &y).unwrap();
    assert!(!fit.poisson_limit);
    let a = fit.dispersion.unwrap();
    assert!((a - 0.5).abs() < 0.1, "alpha {a}");
    assert!((fit.coefficients[1] - 0.6).abs() < 0.1);
    let (gb, ga) = negbin_score(&d.x, &y, &fit.coefficients, a);
    assert!(gb.iter().all(|v| v.abs() < 1e-4), "{gb:?}");
    assert!(ga.abs() < 1e-3, "{ga}");
}

#[test]
fn negbin_score_matches_finite_differences() {
    let (d, y) = count_data(300, 0.8, 4);
    let beta = [0.9, 0.4];
    for &alpha in &[0.01, 0.3, 2.5] {
        let (gb, ga) = negbin_score(&d.x, &y, &beta, alpha);
        for j in 0..2 {
            let h = 1e-6;
            let mut up = beta;
            let mut dn = beta;
            up[j] += h;
            dn[j] -= h;
            let fd = (negbin_loglik(&d.x, &y, &up, alpha) - negbin_loglik(&d.x, &y, &dn, alpha)) / (2.0 * h);
            assert!((fd - gb[j]).abs() < 1e-4 * (1.0 + gb[j].abs()));
        }
        let h = 1e-6 * alpha;
        let fd = (negbin_loglik(&d.x, &y, &beta, alpha + h) - negbin_loglik(&d.x, &y, &beta, alpha - h)) / (2.0 * h);
        assert!((fd - ga).abs() < 1e-4 * (1.0 + ga.abs()), "alpha {alpha}: {fd} vs {ga}");
    }
}

#[test]
fn count_outcome_validation() {
    let d = Design::with_intercept(4, &[("x", vec![0.0, 1.0, 2.0, 3.0])]);
    assert!(matches!(fit_negbin(&d, &[1.0, 2.5, 0.0, 1.0]), Err(InferenceError::NonIntegerCounts { row: 1 })));
    assert!(matches!(fit_negbin(&d, &[0.0; 4]), Err(InferenceError::AllZeroCounts)));
    assert!(matches!(fit_logit(&d, &[0.0, 2.0, 1.0, 0.0]), Err(InferenceError::NonBinaryOutcome { row: 1 })));
}

#[test]
fn margins_delta_method_matches_numeric_gradient() {
    let (d, y) = logit_data(800, 13);
    let fit = fit_logit(&d, &y).unwrap();
    let grid = [0.01, 0.02, 0.06];
    let m = margins(&fit, &d, "x1", &grid).unwrap();
    assert_eq!(m.outside_support, vec![false, false, true]);
    let aap = |b: &[f64], g: f64| -> f64 {
        (0..d.n())
            .map(|i| {
                let eta = b[0] + b[1] * g + b[2] * d.x[(i, 2)];
                1.0 / (1.0 + (-eta).exp())
            })
            .sum::<f64>()
            / d.n() as f64
    };
    for (k, &g) in grid.iter().enumerate() {
        assert!((m.predicted[k] - aap(&fit.coefficients, g)).abs() < 1e-12);
        let grad: Vec<f64> = (0..3)
            .map(|j| {
                let h = 1e-6;
                let mut up = fit.coefficients.clone();
                let mut dn = fit.coefficients.clone();
                up[j] += h;
                dn[j] -= h;
                (aap(&up, g) - aap(&dn, g)) / (2.0 * h)
            })
            .collect();
        let var: f64 = (0..3).map(|a| (0..3).map(|b| grad[a] * fit.covariance[(a, b)] * grad[b]).sum::<f64>()).sum();
        assert!((m.std_errors[k] - var.sqrt()).abs() < 1e-6 * var.sqrt());
        assert!((m.ci_high[k] - m.predicted[k] - 1.959963984540054 * m.std_errors[k]).abs() < 1e-9);
    }
}

#[test]
fn odds_ratio_and_vif() {
    assert!((odds_ratio(37.7f64, 0.01) - 0.377f64.exp()).abs() < 1e-15);
    let x: Vec<f64> = (0..30).map(|i| f64::from(i).sin()).collect();
    let v = vif(&Design::with_intercept(30, &[("x", x.clone())])).unwrap();
    assert!((v[0].1 - 1.0).abs() < 1e-12);
    let z: Vec<f64> = x.iter().enumerate().map(|(i, a)| a + 0.5 * (i as f64 * 1.7).cos()).collect();
    let n = 30.0;
    let (mx, mz) = (x.iter().sum::<f64>() / n, z.iter().sum::<f64>() / n);
    let sxz: f64 = x.iter().zip(&z).map(|(a, b)| (a - mx) * (b - mz)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let szz: f64 = z.iter().map(|b| (b - mz).powi(2)).sum();
    let r2 = sxz * sxz / (sxx * szz);
    let v = vif(&Design::with_intercept(30, &[("x", x), ("z", z)])).unwrap();
    for (_, val) in v {
        assert!((val - 1.0 / (1.0 - r2)).abs() < 1e-9);
    }
}

#[test]
fn welch_matches_hand_computation() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0];
    let r = welch_t_test(&a, &b, TestSide::TwoSided).unwrap();
    // var a = 2.5, var b = 14; se^2 = 0.5 + 14/6
    let se2: f64 = 0.5 + 14.0 / 6.0;
    let t = (3.0 - 7.0) / se2.sqrt();
    let df = se2 * se2 / (0.25 / 4.0 + (14.0f64 / 6.0).powi(2) / 5.0);
    assert!((r.statistic - t).abs() < 1e-12);
    assert!((r.df.unwrap() - df).abs() < 1e-10);
    let one = welch_t_test(&a, &b, TestSide::Less).unwrap();
    assert!((one.p_value - r.p_value / 2.0).abs() < 1e-12);
}

#[test]
fn ks_exact_matches_permutation_enumeration() {
    let cases: Vec<(Vec<f64>, Vec<f64>)> = vec![
        (vec![1.0, 2.0, 3.0, 4.0], vec![2.5, 5.0, 6.0, 7.0, 8.0]),
        (vec![1.0, 1.0, 2.0, 3.0, 3.0], vec![1.0, 2.0, 2.0, 4.0, 5.0, 5.0]),
        (vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 1.0, 1.0, 2.0]),
        (vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0], vec![6.0, 5.0, 3.0, 5.0, 8.0]),
    ];
    for (a, b) in cases {
        let r = ks_two_sample(&a, &b).unwrap();
        let (d, p) = ks_permutation_oracle(&a, &b);
        assert!(r.exact);
        assert!((r.statistic - d).abs() < 1e-12, "{a:?} {b:?}");
        assert!((r.p_value - p).abs() < 1e-12, "{a:?} {b:?}: {} vs {p}", r.p_value);
    }
}

#[test]
fn ks_large_samples_use_asymptotics() {
    let a: Vec<f64> = (0..200).map(|i| f64::from(i) / 200.0).collect();
    let b: Vec<f64> = (0..100).map(|i| f64::from(i) / 100.0 + 0.5).collect();
    let r = ks_two_sample(&a, &b).unwrap();
    assert!(!r.exact);
    assert!(r.p_value < 1e-6);
}

#[test]
fn binomial_two_sided_matches_enumeration() {
    for &(k, n, p) in &[(3u64, 12u64, 0.4f64), (9, 10, 0.5), (0, 7, 0.2), (15, 40, 0.3)] {
        let pmf = |i: u64| -> f64 {
            let c: f64 = (0..i).map(|j| (n - j) as f64 / (j + 1) as f64).product();
            c * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32)
        };
        let pk = pmf(k);
        let oracle: f64 = (0..=n).map(pmf).filter(|&v| v <= pk * (1.0 + 1e-7)).sum();
        let got = binomial_test(k, n, p, TestSide::TwoSided).unwrap();
        assert!((got - oracle).abs() < 1e-13, "{k} {n} {p}");
        let greater: f64 = (k..=n).map(pmf).sum();
        assert!((binomial_test(k, n, p, TestSide::Greater).unwrap() - greater).abs() < 1e-13);
    }
}

#[test]
fn logit_runs_in_single_precision() {
    let (d, y) = logit_data(2000, 17);
    let fit64 = fit_logit(&d, &y).unwrap();
    let x32: Vec<f32> = (0..d.n() * 3).map(|k| d.x[(k / 3, k % 3)] as f32).collect();
    let d32 = Design::new(promolex::stats::linalg::Matrix::from_row_major(d.n(), 3, x32), d.names.clone());
    let y32: Vec<f32> = y.iter().map(|&v| v as f32).collect();
    let fit32 = fit_logit(&d32, &y32).unwrap();
    for (a, b) in fit32.coefficients.iter().zip(&fit64.coefficients) {
        assert!((f64::from(*a) - b).abs() < 1e-2 * (1.0 + b.abs()), "{a} vs {b}");
    }
}

fn fe_table(seed: u64) -> DataTable {
    let mut rng = SeedPath::new(seed).label("fe").rng();
    let mut rows = Vec::new();
    for i in 0..120 {
        let year = 2016 + i % 4;
        let x = rng.random::<f64>();
        let y = f64::from(rng.random::<f64>() < 0.3 + 0.3 * x);
        rows.push(vec![format!("r{i}"), y.to_string(), x.to_string(), year.to_string()]);
    }
    DataTable::new(vec!["id".into(), "y".into(), "x".into(), "year".into()], rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reference_level_does_not_change_the_fit(seed in 0u64..1000, r in 0usize..4) {
        let table = fe_table(seed);
        let mut spec = ModelSpec::new("y", &["x"], Family::Logit);
        spec.categorical_fe.push("year".into());
        let base = build_design::<f64>(&table, &spec).unwrap();
        spec.reference_levels.insert("year".into(), (2016 + r).to_string());
        let alt = build_design::<f64>(&table, &spec).unwrap();
        let f0 = fit_logit(&base.design, &base.y).unwrap();
        let f1 = fit_logit(&alt.design, &alt.y).unwrap();
        prop_assert!((f0.loglik - f1.loglik).abs() < 1e-10);
        prop_assert!((f0.coefficients[1] - f1.coefficients[1]).abs() < 1e-6);
        let e0 = base.design.x.mul_vec(&f0.coefficients);
        let e1 = alt.design.x.mul_vec(&f1.coefficients);
        for (a, b) in e0.iter().zip(&e1) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn ols_residuals_are_orthogonal(seed in 0u64..1000) {
        let mut rng = SeedPath::new(seed).label("orth").rng();
        let n = 25;
        let x1: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 5.0).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let d = Design::with_intercept(n, &[("a", x1), ("b", x2)]);
        let fit = fit_ols(&d, &y).unwrap();
        let fitted = d.x.mul_vec(&fit.coefficients);
        let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        for g in d.x.weighted_tmul(None, &resid) {
            prop_assert!(g.abs() < 1e-10);
        }
    }
}

#[test]
fn degenerate_small_fits() {
    let d = Design::with_intercept(2, &[]);
    let fit = fit_logit(&d, &[0.0f64, 1.0]).unwrap();
    assert!(fit.coefficients[0].abs() < 1e-12);
    let d = Design::with_intercept(6, &[]);
    let fit = fit_negbin(&d, &[4.0f64; 6]).unwrap();
    assert!((fit.coefficients[0].exp() - 4.0).abs() < 1e-8);
    assert!(fit.poisson_limit);
}

#[test]
fn ols_shift_and_margins_linearity() {
    let x = vec![0.0f64, 1.0, 3.0, 4.0];
    let y = vec![1.0f64, 2.0, 2.0, 5.0];
    // hand-solved normal equations: sum x = 8, sum x^2 = 26, sum y = 10, sum xy = 28
    // [4 8; 8 26] b = [10; 28] -> b1 = (4*28 - 8*10) / (4*26 - 64) = 0.8, b0 = (10 - 6.4) / 4 = 0.9
    let d = Design::with_intercept(4, &[("x", x)]);
    let fit = fit_ols(&d, &y).unwrap();
    assert!((fit.coefficients[0] - 0.9).abs() < 1e-12 && (fit.coefficients[1] - 0.8).abs() < 1e-12);
    let shifted: Vec<f64> = y.iter().map(|v| v + 10.0).collect();
    let fit2 = fit_ols(&d, &shifted).unwrap();
    assert!((fit2.coefficients[0] - 10.9).abs() < 1e-12 && (fit2.coefficients[1] - 0.8).abs() < 1e-12);
    let m = margins(&fit, &d, "x", &[0.0, 1.0, 2.5, 7.0]).unwrap();
    for (g, p) in m.grid.iter().zip(&m.predicted) {
        assert!((p - (0.9 + 0.8 * g)).abs() < 1e-12);
    }
    for k in 0..4 {
        assert!(m.ci_low[k] <= m.predicted[k] && m.predicted[k] <= m.ci_high[k]);
    }
    assert!(m.outside_support[3]);
}

#[test]
fn zero_focal_coefficient_gives_flat_margins() {
    let (d, y) = logit_data(500, 2);
    let mut fit = fit_logit(&d, &y).unwrap();
    fit.coefficients[1] = 0.0;
    let m = margins(&fit, &d, "x1", &[0.0, 0.01, 0.03]).unwrap();
    assert!((m.predicted[0] - m.predicted[2]).abs() < 1e-15);
}

#[test]
fn bic_penalty_and_noise_column() {
    let (d, y) = logit_data(1000, 31);
    let base = fit_logit(&d, &y).unwrap();
    let mut rng = SeedPath::new(31).label("noise").rng();
    let noise: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
    let d2 = Design::with_intercept(1000, &[("x1", d.x.column(1)), ("x2", d.x.column(2)), ("noise", noise)]);
    let bigger = fit_logit(&d2, &y).unwrap();
    assert!(bigger.loglik >= base.loglik - 1e-9);
    let pen = bic(&bigger) - bic(&base);
    assert!(pen > 1000f64.ln() - 2.0 * (bigger.loglik - base.loglik) - 1e-9);
    let mut same = base.clone();
    same.k += 1;
    assert!((bic(&same) - bic(&base) - 1000f64.ln()).abs() < 1e-9);
}

#[test]
fn odds_ratio_anchors() {
    assert!((odds_ratio(37.7f64, 0.01) - 1.458).abs() < 0.005);
    assert!((odds_ratio(29.5f64, 0.01) - 1.343).abs() < 0.0005);
    assert_eq!(odds_ratio(37.7f64, 0.0), 1.0);
}

#[test]
fn gradients_match_finite_differences_at_random_points() {
    let (d, y) = logit_data(150, 8);
    let (dc, yc) = count_data(150, 0.4, 8);
    let mut rng = SeedPath::new(99).label("grad-points").rng();
    for _ in 0..20 {
        let b: Vec<f64> = vec![rng.random_range(-2.0..2.0), rng.random_range(-40.0..40.0), rng.random_range(-2.0..2.0)];
        let g = logit_score(&d.x, &y, &b);
        for j in 0..3 {
            let (mut up, mut dn) = (b.clone(), b.clone());
            up[j] += 1e-5;
            dn[j] -= 1e-5;
            let fd = (logit_loglik(&d.x, &y, &up) - logit_loglik(&d.x, &y, &dn)) / 2e-5;
            assert!((fd - g[j]).abs() <= 1e-4 * g[j].abs().max(1.0));
        }
        let bc = [rng.random_range(0.0..1.5), rng.random_range(-1.0..1.0)];
        let a: f64 = rng.random_range(0.05..3.0);
        let (gb, ga) = negbin_score(&dc.x, &yc, &bc, a);
        for j in 0..2 {
            let (mut up, mut dn) = (bc, bc);
            up[j] += 1e-5;
            dn[j] -= 1e-5;
            let fd = (negbin_loglik(&dc.x, &yc, &up, a) - negbin_loglik(&dc.x, &yc, &dn, a)) / 2e-5;
            assert!((fd - gb[j]).abs() <= 1e-4 * gb[j].abs().max(1.0));
        }
        let fd = (negbin_loglik(&dc.x, &yc, &bc, a + 1e-5) - negbin_loglik(&dc.x, &yc, &bc, a - 1e-5)) / 2e-5;
        assert!((fd - ga).abs() <= 1e-4 * ga.abs().max(1.0), "{fd} vs {ga}");
    }
}

#[test]
fn two_sample_sanity() {
    let a: Vec<f64> = (0..30).map(|i| f64::from(i).sqrt()).collect();
    let r = promolex::inference::two_sample_tests(&a, &a).unwrap();
    assert_eq!(r.ks.statistic, 0.0);
    assert!((r.ks.p_value - 1.0).abs() < 1e-12);
    assert_eq!(r.welch.unwrap().statistic, 0.0);

    let mut rng = SeedPath::new(12).label("shift").rng();
    let normal = rand_distr::StandardNormal;
    let x: Vec<f64> = (0..1000).map(|_| normal.sample(&mut rng)).collect();
    let y: Vec<f64> = (0..1000).map(|_| 1.0 + Distribution::<f64>::sample(&normal, &mut rng)).collect();
    let r = promolex::inference::two_sample_tests(&x, &y).unwrap();
    assert!(r.welch.unwrap().p_value < 1e-10);
    assert!(r.ks.p_value < 1e-10);
    assert!(!r.ks.exact);
}

#[test]
fn kfold_report_sums_folds() {
    let (d, y) = logit_data(600, 41);
    let r = promolex::inference::kfold_loglik(Family::Logit, &d, &y, 5, 1).unwrap();
    assert_eq!(r.fold_loglik.len(), 5);
    assert!((r.fold_loglik.iter().sum::<f64>() - r.total_loglik).abs() < 1e-9);
    let full = fit_logit(&d, &y).unwrap();
    assert!(r.total_loglik < full.loglik);
}

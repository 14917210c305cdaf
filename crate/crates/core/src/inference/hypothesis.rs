use std::cmp::Ordering;

use super::InferenceError;
use crate::stats::weighted_mean_var;
use crate::stats::dist::{kolmogorov_sf, ln_choose, student_t_p, Side};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult<T> {
    pub method: &'static str,
    pub statistic: T,
    pub df: Option<T>,
    pub p_value: T,
    pub side: Side,
}

/// Welch's unequal-variance t-test of `mean(a) - mean(b)`. `None` when
/// both samples have zero variance (the statistic is undefined).
pub fn welch_t_test<T: Scalar>(a: &[T], b: &[T], side: Side) -> Option<TestResult<T>> {
    let wa = vec![T::one(); a.len()];
    let wb = vec![T::one(); b.len()];
    weighted_welch_t_test(a, &wa, b, &wb, side)
}

/// Welch test with observation weights; the effective sample size
/// `(sum w)^2 / sum w^2` stands in for `n`.
pub fn weighted_welch_t_test<T: Scalar>(a: &[T], wa: &[T], b: &[T], wb: &[T], side: Side) -> Option<TestResult<T>> {
    let (ma, va, na) = weighted_mean_var(a, wa)?;
    let (mb, vb, nb) = weighted_mean_var(b, wb)?;
    let (sa, sb) = (va.f64() / na.f64(), vb.f64() / nb.f64());
    let se2 = sa + sb;
    if se2 <= 0.0 {
        return None;
    }
    let t = (ma - mb).f64() / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na.f64() - 1.0) + sb * sb / (nb.f64() - 1.0));
    Some(TestResult {
        method: "welch",
        statistic: T::of(t),
        df: Some(T::of(df)),
        p_value: T::of(student_t_p(t, df, side)),
        side,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsResult<T> {
    pub statistic: T,
    pub p_value: T,
    /// Exact permutation distribution (ties respected) rather than the
    /// asymptotic Kolmogorov tail.
    pub exact: bool,
}

/// Products `n * m` up to this size use the exact distribution.
pub const KS_EXACT_LIMIT: usize = 10_000;

/// Two-sample Kolmogorov-Smirnov test, two-sided.
pub fn ks_two_sample<T: Scalar>(a: &[T], b: &[T]) -> Result<KsResult<T>, InferenceError> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(InferenceError::Empty);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(InferenceError::Invalid("non-finite value in KS sample".into()));
    }
    let mut pooled: Vec<(T, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));
    // block_end[k]: position k closes a run of tied values
    let block_end: Vec<bool> = (0..pooled.len()).map(|k| k + 1 == pooled.len() || pooled[k + 1].0 != pooled[k].0).collect();
    let (mi, ni) = (m as i64, n as i64);
    let (mut i, mut j, mut d) = (0i64, 0i64, 0i64);
    for (k, &(_, from_a)) in pooled.iter().enumerate() {
        if from_a {
            i += 1;
        } else {
            j += 1;
        }
        if block_end[k] {
            d = d.max((i * mi - j * ni).abs());
        }
    }
    let statistic = T::of(d as f64 / (n as f64 * m as f64));
    if n * m <= KS_EXACT_LIMIT {
        let p = ks_exact_tail(n, m, &block_end, d);
        return Ok(KsResult { statistic, p_value: T::of(p), exact: true });
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * statistic.f64();
    Ok(KsResult { statistic, p_value: T::of(kolmogorov_sf(lambda)), exact: false })
}

/// Probability under random relabelling that the lattice path reaches
/// `|i m - j n| >= d` at some tie-block boundary.
fn ks_exact_tail(n: usize, m: usize, block_end: &[bool], d: i64) -> f64 {
    let w = m + 1;
    let mut free = vec![0.0f64; (n + 1) * w];
    let mut hit = vec![0.0f64; (n + 1) * w];
    free[0] = 1.0;
    for i in 0..=n {
        for j in 0..=m {
            if i + j == 0 {
                continue;
            }
            let idx = i * w + j;
            let (mut f, mut h) = (0.0, 0.0);
            if i > 0 {
                f += free[idx - w];
                h += hit[idx - w];
            }
            if j > 0 {
                f += free[idx - 1];
                h += hit[idx - 1];
            }
            if block_end[i + j - 1] && (i as i64 * m as i64 - j as i64 * n as i64).abs() >= d {
                h += f;
                f = 0.0;
            }
            free[idx] = f;
            hit[idx] = h;
        }
    }
    let last = n * w + m;
    (hit[last] / (hit[last] + free[last])).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSampleReport<T> {
    pub n_a: usize,
    pub n_b: usize,
    /// `None` when both samples are constant.
    pub welch: Option<TestResult<T>>,
    pub ks: KsResult<T>,
}

/// Welch t and Kolmogorov-Smirnov comparisons of two samples.
pub fn two_sample_tests<T: Scalar>(a: &[T], b: &[T]) -> Result<TwoSampleReport<T>, InferenceError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(InferenceError::Invalid(format!(
            "two-sample tests need at least 2 values per group (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    Ok(TwoSampleReport { n_a: a.len(), n_b: b.len(), welch: welch_t_test(a, b, Side::TwoSided), ks: ks_two_sample(a, b)? })
}

fn binomial_pmfs(n: u64, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    if n <= 1000 && p > 0.0 && q > 0.0 {
        // coefficients built up to n/2 and mirrored, exact while below 2^53
        let mut coef = vec![1.0f64; n as usize + 1];
        for k in 1..=(n / 2) {
            coef[k as usize] = coef[k as usize - 1] * (n - k + 1) as f64 / k as f64;
            coef[(n - k) as usize] = coef[k as usize];
        }
        (0..=n).map(|k| coef[k as usize] * p.powi(k as i32) * q.powi((n - k) as i32)).collect()
    } else {
        (0..=n)
            .map(|k| {
                if p == 0.0 {
                    return if k == 0 { 1.0 } else { 0.0 };
                }
                if q == 0.0 {
                    return if k == n { 1.0 } else { 0.0 };
                }
                (ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * q.ln()).exp()
            })
            .collect()
    }
}

/// Exact binomial test of `k` successes in `n` trials against `p0`.
///
/// The two-sided p-value sums every outcome no more likely than `k`
/// (relative tolerance `1e-7`).
pub fn binomial_test<T: Scalar>(k: u64, n: u64, p0: T, side: Side) -> Result<T, InferenceError> {
    let p = p0.f64();
    if !(0.0..=1.0).contains(&p) {
        return Err(InferenceError::Invalid(format!("binomial p0 must lie in [0, 1], got {p}")));
    }
    if k > n {
        return Err(InferenceError::Invalid(format!("{k} successes in {n} trials")));
    }
    let pmf = binomial_pmfs(n, p);
    let k = k as usize;
    let v = match side {
        Side::Greater => pmf[k..].iter().sum::<f64>(),
        Side::Less => pmf[..=k].iter().sum::<f64>(),
        Side::TwoSided => {
            let cut = pmf[k] * (1.0 + 1e-7);
            pmf.iter().filter(|&&x| x <= cut).sum::<f64>()
        }
    };
    Ok(T::of(v.min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_reference_values() {
        assert_eq!(binomial_test(8, 10, 0.5f64, Side::Greater).unwrap(), 0.0546875);
        assert_eq!(binomial_test(100, 100, 0.5f64, Side::Greater).unwrap(), 0.5f64.powi(100));
        assert_eq!(binomial_test(5, 10, 0.5f64, Side::TwoSided).unwrap(), 1.0);
        assert!(binomial_test(11, 10, 0.5f64, Side::Greater).is_err());
    }

    #[test]
    fn welch_undefined_on_constant_samples() {
        assert!(welch_t_test(&[1.0f64, 1.0], &[2.0, 2.0], Side::TwoSided).is_none());
    }

    #[test]
    fn ks_complete_separation() {
        let r = ks_two_sample(&[1.0f64, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.exact);
        assert!((r.p_value - 0.1).abs() < 1e-15);
    }
}

use std::cmp::Ordering;

use super::StatsError;
use crate::Scalar;

pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().copied().sum::<T>() / T::of_usize(xs.len()))
    }
}

/// Sample variance with the `n - 1` denominator; `None` for fewer than 2 values.
pub fn sample_variance<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Some(ss / T::of_usize(xs.len() - 1))
}

/// Weighted mean, weighted variance and effective sample size
/// `(sum w)^2 / sum w^2`. The variance uses the reliability-weight
/// correction so that unit weights reproduce [`sample_variance`].
pub fn weighted_mean_var<T: Scalar>(xs: &[T], ws: &[T]) -> Option<(T, T, T)> {
    if xs.len() != ws.len() || xs.len() < 2 {
        return None;
    }
    let sw: T = ws.iter().copied().sum();
    let sw2: T = ws.iter().map(|&w| w * w).sum();
    if sw <= T::zero() {
        return None;
    }
    let m = xs.iter().zip(ws).map(|(&x, &w)| w * x).sum::<T>() / sw;
    let ss: T = xs.iter().zip(ws).map(|(&x, &w)| w * (x - m) * (x - m)).sum();
    let denom = sw - sw2 / sw;
    if denom <= T::zero() {
        return None;
    }
    Some((m, ss / denom, sw * sw / sw2))
}

fn sorted<T: Scalar>(xs: &[T]) -> Result<Vec<T>, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(v)
}

fn median_of_sorted<T: Scalar>(v: &[T]) -> T {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::of(2.0)
    }
}

/// Median; the mean of the middle two values for even lengths.
pub fn median<T: Scalar>(xs: &[T]) -> Result<T, StatsError> {
    Ok(median_of_sorted(&sorted(xs)?))
}

/// Median and unscaled median absolute deviation from the median.
pub fn median_mad<T: Scalar>(xs: &[T]) -> Result<(T, T), StatsError> {
    let v = sorted(xs)?;
    let med = median_of_sorted(&v);
    let dev: Vec<T> = v.iter().map(|&x| (x - med).abs()).collect();
    let mad = median_of_sorted(&sorted(&dev)?);
    Ok((med, mad))
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Result<Option<T>, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let (Some(mx), Some(my)) = (mean(xs), mean(ys)) else {
        return Err(StatsError::Empty);
    };
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return Ok(None);
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(Some(r.max(-T::one()).min(T::one())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_mad_examples() {
        assert_eq!(median_mad(&[1.0, 1.0, 1.0]).unwrap(), (1.0, 0.0));
        assert_eq!(median_mad(&[1.0, 2.0, 4.0, 7.0]).unwrap(), (3.0, 1.5));
        assert_eq!(median_mad(&[5.0f32]).unwrap(), (5.0, 0.0));
        assert_eq!(median_mad::<f64>(&[]), Err(StatsError::Empty));
        assert_eq!(median_mad(&[1.0, f64::NAN]), Err(StatsError::NonFinite));
    }

    #[test]
    fn variance_and_weights() {
        let xs = [1.0f64, 2.0, 4.0];
        let v = sample_variance(&xs).unwrap();
        assert!((v - 7.0 / 3.0).abs() < 1e-15);
        let (m, wv, neff) = weighted_mean_var(&xs, &[1.0, 1.0, 1.0]).unwrap();
        assert!((m - 7.0 / 3.0).abs() < 1e-15);
        assert!((wv - v).abs() < 1e-14);
        assert!((neff - 3.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_degenerate() {
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), None);
        let r: f64 = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    // brute-force oracle: MAD as the smallest d such that at least half of
    // the values lie within d of the median, checked against every candidate.
    fn brute_median(v: &[f64]) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = s.len();
        if n % 2 == 1 {
            s[n / 2]
        } else {
            (s[n / 2 - 1] + s[n / 2]) / 2.0
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn median_mad_matches_sort_oracle(v in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
            let (m, mad) = median_mad(&v).unwrap();
            let bm = brute_median(&v);
            let devs: Vec<f64> = v.iter().map(|x| (x - bm).abs()).collect();
            prop_assert_eq!(m, bm);
            prop_assert_eq!(mad, brute_median(&devs));
            // at least half the values lie within mad of the median
            let within = v.iter().filter(|x| (*x - m).abs() <= mad).count();
            prop_assert!(2 * within >= v.len());
        }
    }
}

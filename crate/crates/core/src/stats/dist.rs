//! Distribution tails used by the hypothesis tests. All computations run in
//! `f64`; callers convert from their scalar type.

use statrs::function::{beta::beta_reg, erf::erfc, gamma::ln_gamma};

/// Which tail(s) a p-value covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    TwoSided,
    /// Alternative: the statistic is larger than under the null.
    Greater,
    /// Alternative: the statistic is smaller than under the null.
    Less,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::TwoSided => "two-sided",
            Side::Greater => "greater",
            Side::Less => "less",
        }
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `P(Z > x)` without cancellation for large `x`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

pub fn normal_p(z: f64, side: Side) -> f64 {
    match side {
        Side::TwoSided => (2.0 * normal_sf(z.abs())).min(1.0),
        Side::Greater => normal_sf(z),
        Side::Less => normal_cdf(z),
    }
}

/// Upper tail of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t.is_nan() || df.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let x = df / (df + t * t);
    let tail = 0.5 * beta_reg(0.5 * df, 0.5, x);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

pub fn student_t_p(t: f64, df: f64, side: Side) -> f64 {
    match side {
        Side::TwoSided => (2.0 * student_t_sf(t.abs(), df)).min(1.0),
        Side::Greater => student_t_sf(t, df),
        Side::Less => student_t_sf(-t, df),
    }
}

/// Normal quantile by bisection on [`normal_cdf`]; used only for fixed
/// confidence levels.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level must lie in (0, 1)");
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Kolmogorov limiting survival function `Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // series converges slowly here and the value is 1 to double precision
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-300 || term < 1e-17 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

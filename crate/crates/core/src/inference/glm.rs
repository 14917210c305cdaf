//! Logit and NB2 maximum likelihood.

use std::collections::VecDeque;

use statrs::function::gamma::ln_gamma;

use super::{sigmoid, Design, Family, InferenceError, RegressionFit};
use crate::stats::linalg::{column_rank, rank_tolerance, Matrix, PivotedCholesky};
use crate::Scalar;

/// Dispersion floor; reaching it flags the Poisson limit.
pub const NEGBIN_ALPHA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmOptions<T> {
    /// Convergence when every coefficient moves less than
    /// `tolerance * (1 + |beta|)` in one iteration.
    pub tolerance: T,
    pub max_iter: usize,
    /// Largest admissible coefficient on the standardized design.
    pub separation_threshold: T,
}

impl<T: Scalar> GlmOptions<T> {
    pub fn logit() -> Self {
        GlmOptions { tolerance: default_tolerance(), max_iter: 100, separation_threshold: T::of(20.0) }
    }

    pub fn negbin() -> Self {
        GlmOptions { tolerance: default_tolerance(), max_iter: 500, separation_threshold: T::of(20.0) }
    }
}

impl<T: Scalar> Default for GlmOptions<T> {
    fn default() -> Self {
        Self::logit()
    }
}

fn default_tolerance<T: Scalar>() -> T {
    T::of(1e-8).max(T::epsilon() * T::of(64.0))
}

/// Design with non-intercept columns centered and scaled.
pub(crate) struct Standardized<T> {
    pub z: Matrix<T>,
    center: Vec<T>,
    scale: Vec<T>,
    intercept: Option<usize>,
}

impl<T: Scalar> Standardized<T> {
    pub fn new(d: &Design<T>) -> Self {
        let (n, p) = (d.n(), d.p());
        let intercept = d.intercept_index();
        let nn = T::of_usize(n);
        let mut center = vec![T::zero(); p];
        let mut scale = vec![T::one(); p];
        for j in 0..p {
            if Some(j) == intercept {
                continue;
            }
            let col = d.x.column(j);
            let s = if intercept.is_some() {
                let m = col.iter().copied().sum::<T>() / nn;
                center[j] = m;
                (col.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / nn).sqrt()
            } else {
                (col.iter().map(|&v| v * v).sum::<T>() / nn).sqrt()
            };
            if s > T::zero() {
                scale[j] = s;
            }
        }
        let mut z = d.x.clone();
        for i in 0..n {
            for j in 0..p {
                z[(i, j)] = (z[(i, j)] - center[j]) / scale[j];
            }
        }
        Standardized { z, center, scale, intercept }
    }

    fn transform(&self) -> Matrix<T> {
        let p = self.scale.len();
        let mut a = Matrix::zeros(p, p);
        for j in 0..p {
            a[(j, j)] = T::one() / self.scale[j];
            if let Some(ic) = self.intercept {
                if j != ic {
                    a[(ic, j)] = -self.center[j] / self.scale[j];
                }
            }
        }
        a
    }

    pub fn coefficients(&self, beta_s: &[T]) -> Vec<T> {
        self.transform().mul_vec(beta_s)
    }

    pub fn covariance(&self, cov_s: &Matrix<T>) -> Matrix<T> {
        let a = self.transform();
        let p = a.rows();
        let mut tmp: Matrix<T> = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                tmp[(i, j)] = (0..p).map(|k| a[(i, k)] * cov_s[(k, j)]).sum::<T>();
            }
        }
        let mut out = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                out[(i, j)] = (0..p).map(|k| tmp[(i, k)] * a[(j, k)]).sum();
            }
        }
        out
    }
}

pub(crate) fn check_rank<T: Scalar>(d: &Design<T>) -> Result<(), InferenceError> {
    let ch = column_rank(&d.x);
    if ch.is_full_rank() {
        Ok(())
    } else {
        Err(InferenceError::RankDeficient {
            columns: ch.dependent_columns().into_iter().map(|j| d.names[j].clone()).collect(),
        })
    }
}

fn check_shape<T: Scalar>(d: &Design<T>, y: &[T]) -> Result<(), InferenceError> {
    if d.n() != y.len() {
        return Err(InferenceError::LengthMismatch { rows: d.n(), outcome: y.len() });
    }
    if d.n() == 0 {
        return Err(InferenceError::Empty);
    }
    if d.n() <= d.p() {
        return Err(InferenceError::TooFewObservations { n: d.n(), k: d.p() });
    }
    Ok(())
}

fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn logit_loglik<T: Scalar>(x: &Matrix<T>, y: &[T], beta: &[T]) -> T {
    x.mul_vec(beta).iter().zip(y).map(|(&eta, &yi)| yi * eta - softplus(eta)).sum()
}

/// Gradient of [`logit_loglik`] with respect to `beta`.
pub fn logit_score<T: Scalar>(x: &Matrix<T>, y: &[T], beta: &[T]) -> Vec<T> {
    let r: Vec<T> = x.mul_vec(beta).iter().zip(y).map(|(&eta, &yi)| yi - sigmoid(eta)).collect();
    x.weighted_tmul(None, &r)
}

pub fn fit_logit<T: Scalar>(design: &Design<T>, y: &[T]) -> Result<RegressionFit<T>, InferenceError> {
    fit_logit_with(design, y, &GlmOptions::logit())
}

pub fn fit_logit_with<T: Scalar>(
    design: &Design<T>,
    y: &[T],
    opts: &GlmOptions<T>,
) -> Result<RegressionFit<T>, InferenceError> {
    check_shape(design, y)?;
    if let Some(row) = y.iter().position(|&v| v != T::zero() && v != T::one()) {
        return Err(InferenceError::NonBinaryOutcome { row });
    }
    check_rank(design)?;
    let st = Standardized::new(design);
    let (n, p) = (design.n(), design.p());
    let mut beta = vec![T::zero(); p];
    if let Some(ic) = st.intercept {
        let ybar = y.iter().copied().sum::<T>() / T::of_usize(n);
        if ybar == T::zero() || ybar == T::one() {
            return Err(InferenceError::Separation { column: design.names[ic].clone() });
        }
        beta[ic] = (ybar / (T::one() - ybar)).ln();
    }
    let tiny = T::epsilon() * T::epsilon();
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=opts.max_iter {
        iterations = iter;
        let mu: Vec<T> = st.z.mul_vec(&beta).into_iter().map(sigmoid).collect();
        let w: Vec<T> = mu.iter().map(|&m| (m * (T::one() - m)).max(tiny)).collect();
        let r: Vec<T> = y.iter().zip(&mu).map(|(&a, &b)| a - b).collect();
        let grad = st.z.weighted_tmul(None, &r);
        let h = st.z.weighted_gram(Some(&w));
        let ch = PivotedCholesky::factor(&h, rank_tolerance());
        if !ch.is_full_rank() {
            let j = ch.dependent_columns()[0];
            return Err(InferenceError::Separation { column: design.names[j].clone() });
        }
        let step = ch.solve(&grad);
        let mut small = true;
        for j in 0..p {
            beta[j] += step[j];
            if step[j].abs() > opts.tolerance * (T::one() + beta[j].abs()) {
                small = false;
            }
        }
        if let Some(j) = (0..p).find(|&j| !(beta[j].abs() <= opts.separation_threshold)) {
            return Err(InferenceError::Separation { column: design.names[j].clone() });
        }
        if small {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("logit fit did not converge in {} iterations", opts.max_iter);
    }
    let mu: Vec<T> = st.z.mul_vec(&beta).into_iter().map(sigmoid).collect();
    let w: Vec<T> = mu.iter().map(|&m| (m * (T::one() - m)).max(tiny)).collect();
    let cov_s = PivotedCholesky::factor(&st.z.weighted_gram(Some(&w)), rank_tolerance()).inverse();
    let loglik = logit_loglik(&st.z, y, &beta);
    Ok(finish(design, Family::Logit, &st, &beta, &cov_s, loglik, p, converged, iterations, opts.tolerance))
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    design: &Design<T>,
    family: Family,
    st: &Standardized<T>,
    beta_s: &[T],
    cov_s: &Matrix<T>,
    loglik: T,
    k: usize,
    converged: bool,
    iterations: usize,
    tolerance: T,
) -> RegressionFit<T> {
    let covariance = st.covariance(cov_s);
    let std_errors = (0..covariance.rows()).map(|i| covariance[(i, i)].max(T::zero()).sqrt()).collect();
    RegressionFit {
        family,
        names: design.names.clone(),
        coefficients: st.coefficients(beta_s),
        std_errors,
        covariance,
        loglik,
        n: design.n(),
        k,
        dispersion: None,
        dispersion_se: None,
        poisson_limit: false,
        sigma2: None,
        converged,
        iterations,
        tolerance,
    }
}

fn check_counts<T: Scalar>(y: &[T]) -> Result<(), InferenceError> {
    match y.iter().position(|&v| !(v >= T::zero()) || v.fract() != T::zero() || !v.is_finite()) {
        Some(row) => Err(InferenceError::NonIntegerCounts { row }),
        None => Ok(()),
    }
}

fn ln_factorial<T: Scalar>(y: T) -> T {
    T::of(ln_gamma(y.f64() + 1.0))
}

/// Poisson log-link MLE on a standardized design; used to start NB2.
fn poisson_irls<T: Scalar>(st: &Standardized<T>, y: &[T], opts: &GlmOptions<T>) -> Vec<T> {
    let (n, p) = (st.z.rows(), st.z.cols());
    let mut beta = vec![T::zero(); p];
    if let Some(ic) = st.intercept {
        beta[ic] = (y.iter().copied().sum::<T>() / T::of_usize(n)).ln();
    }
    for _ in 0..opts.max_iter {
        let mu: Vec<T> = st.z.mul_vec(&beta).into_iter().map(T::exp).collect();
        let r: Vec<T> = y.iter().zip(&mu).map(|(&a, &b)| a - b).collect();
        let ch = PivotedCholesky::factor(&st.z.weighted_gram(Some(&mu)), rank_tolerance());
        if !ch.is_full_rank() {
            break;
        }
        let step = ch.solve(&st.z.weighted_tmul(None, &r));
        let mut small = true;
        for j in 0..p {
            let s = step[j].max(T::of(-5.0)).min(T::of(5.0));
            beta[j] += s;
            small &= s.abs() <= opts.tolerance * (T::one() + beta[j].abs());
        }
        if small {
            break;
        }
    }
    beta
}

/// `ln(1+x)/a^2 - mu/(a(1+x))` with `x = a*mu`, stable for small `x`.
fn g_term<T: Scalar>(a: T, mu: T) -> T {
    let x = a * mu;
    if x < T::of(1e-3) {
        // sum_{k>=2} (-1)^k (k-1)/k x^(k-2)
        let mut s = T::zero();
        let mut xp = T::one();
        for k in 2..=9 {
            let c = T::of(((k - 1) as f64) / (k as f64));
            s += if k % 2 == 0 { c * xp } else { -c * xp };
            xp *= x;
        }
        mu * mu * s
    } else {
        x.ln_1p() / (a * a) - mu / (a * (T::one() + x))
    }
}

/// `-2 ln(1+x)/a^3 + 2 mu/(a^2 (1+x)) + mu^2/(a (1+x)^2)`, stable for small `x`.
fn h_term<T: Scalar>(a: T, mu: T) -> T {
    let x = a * mu;
    if x < T::of(1e-3) {
        // sum_{k>=3} (-1)^k (k-1)(k-2)/k x^(k-3)
        let mut s = T::zero();
        let mut xp = T::one();
        for k in 3..=10 {
            let c = T::of(((k - 1) * (k - 2)) as f64 / k as f64);
            s += if k % 2 == 0 { c * xp } else { -c * xp };
            xp *= x;
        }
        mu * mu * mu * s
    } else {
        let one = T::one();
        -T::of(2.0) * x.ln_1p() / (a * a * a) + T::of(2.0) * mu / (a * a * (one + x)) + mu * mu / (a * (one + x) * (one + x))
    }
}

/// NB2 log-likelihood for integer counts, `alpha > 0`.
pub fn negbin_loglik<T: Scalar>(x: &Matrix<T>, y: &[T], beta: &[T], alpha: T) -> T {
    let one = T::one();
    x.mul_vec(beta)
        .iter()
        .zip(y)
        .map(|(&eta, &yi)| {
            let mu = eta.exp();
            let yc = yi.to_usize().unwrap_or(0);
            let mut s = T::zero();
            for j in 1..yc {
                s += (alpha * T::of_usize(j)).ln_1p();
            }
            // (y + 1/a) ln(1 + a mu) = y ln(1 + a mu) + mu * [ln(1 + a mu) / (a mu)]
            let x = alpha * mu;
            let lr = if x < T::of(1e-8) { one - x / T::of(2.0) } else { x.ln_1p() / x };
            s + yi * eta - yi * x.ln_1p() - mu * lr - ln_factorial(yi)
        })
        .sum()
}

/// Gradient of [`negbin_loglik`]: `(d/d beta, d/d alpha)`.
pub fn negbin_score<T: Scalar>(x: &Matrix<T>, y: &[T], beta: &[T], alpha: T) -> (Vec<T>, T) {
    let (d1, _) = alpha_derivatives(x, y, beta, alpha);
    let r: Vec<T> = x
        .mul_vec(beta)
        .iter()
        .zip(y)
        .map(|(&eta, &yi)| {
            let mu = eta.exp();
            (yi - mu) / (T::one() + alpha * mu)
        })
        .collect();
    (x.weighted_tmul(None, &r), d1)
}

fn alpha_derivatives<T: Scalar>(x: &Matrix<T>, y: &[T], beta: &[T], a: T) -> (T, T) {
    let one = T::one();
    let mut d1 = T::zero();
    let mut d2 = T::zero();
    for (eta, &yi) in x.mul_vec(beta).into_iter().zip(y) {
        let mu = eta.exp();
        let yc = yi.to_usize().unwrap_or(0);
        for j in 1..yc {
            let jj = T::of_usize(j);
            let q = one + a * jj;
            d1 += jj / q;
            d2 -= jj * jj / (q * q);
        }
        let q = one + a * mu;
        d1 += g_term(a, mu) - yi * mu / q;
        d2 += h_term(a, mu) + yi * mu * mu / (q * q);
    }
    (d1, d2)
}

pub fn fit_negbin<T: Scalar>(design: &Design<T>, y: &[T]) -> Result<RegressionFit<T>, InferenceError> {
    fit_negbin_with(design, y, &GlmOptions::negbin())
}

/// NB2 fit alternating a Fisher-scoring step for `beta` with a Newton step
/// for `ln alpha`, each safeguarded by step halving.
pub fn fit_negbin_with<T: Scalar>(
    design: &Design<T>,
    y: &[T],
    opts: &GlmOptions<T>,
) -> Result<RegressionFit<T>, InferenceError> {
    check_shape(design, y)?;
    check_counts(y)?;
    if y.iter().all(|&v| v == T::zero()) {
        return Err(InferenceError::AllZeroCounts);
    }
    check_rank(design)?;
    let st = Standardized::new(design);
    let p = design.p();
    let one = T::one();
    let floor = T::of(NEGBIN_ALPHA_FLOOR);
    let t_floor = floor.ln();

    let mut beta = poisson_irls(&st, y, opts);
    let mu: Vec<T> = st.z.mul_vec(&beta).into_iter().map(T::exp).collect();
    let num: T = y.iter().zip(&mu).map(|(&yi, &m)| (yi - m) * (yi - m) - yi).sum();
    let den: T = mu.iter().map(|&m| m * m).sum();
    let mut t = (num / den).max(floor).ln();
    let mut ll = negbin_loglik(&st.z, y, &beta, t.exp());

    let mut trace: VecDeque<String> = VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=opts.max_iter {
        iterations = iter;
        let alpha = t.exp();
        // beta: Fisher scoring
        let eta = st.z.mul_vec(&beta);
        let mu: Vec<T> = eta.iter().map(|&e| e.exp()).collect();
        let w: Vec<T> = mu.iter().map(|&m| m / (one + alpha * m)).collect();
        let r: Vec<T> = y.iter().zip(&mu).map(|(&yi, &m)| (yi - m) / (one + alpha * m)).collect();
        let ch = PivotedCholesky::factor(&st.z.weighted_gram(Some(&w)), rank_tolerance());
        if !ch.is_full_rank() {
            let j = ch.dependent_columns()[0];
            return Err(InferenceError::Separation { column: design.names[j].clone() });
        }
        let full = ch.solve(&st.z.weighted_tmul(None, &r));
        let mut lambda = one;
        let mut next = beta.clone();
        let mut next_ll = ll;
        for _ in 0..40 {
            next = beta.iter().zip(&full).map(|(&b, &s)| b + lambda * s).collect();
            next_ll = negbin_loglik(&st.z, y, &next, alpha);
            if next_ll >= ll - T::of(1e-10) * (one + ll.abs()) {
                break;
            }
            lambda *= T::of(0.5);
        }
        let mut small = true;
        let mut max_db = T::zero();
        for j in 0..p {
            let d = next[j] - beta[j];
            max_db = max_db.max(d.abs());
            small &= d.abs() <= opts.tolerance * (one + next[j].abs());
        }
        beta = next;
        ll = next_ll;
        if let Some(j) = (0..p).find(|&j| !(beta[j].abs() <= opts.separation_threshold)) {
            return Err(InferenceError::Separation { column: design.names[j].clone() });
        }

        // ln alpha: Newton
        let (d1, d2) = alpha_derivatives(&st.z, y, &beta, alpha);
        let gt = alpha * d1;
        let ht = alpha * alpha * d2 + alpha * d1;
        let mut step = if ht < T::zero() { -gt / ht } else { gt.signum() };
        step = step.max(T::of(-2.0)).min(T::of(2.0));
        if t <= t_floor && step < T::zero() {
            step = T::zero();
        }
        let mut dt = T::zero();
        if step != T::zero() {
            let mut s = step;
            for _ in 0..40 {
                let cand = (t + s).max(t_floor);
                let cand_ll = negbin_loglik(&st.z, y, &beta, cand.exp());
                if cand_ll >= ll - T::of(1e-10) * (one + ll.abs()) {
                    dt = cand - t;
                    t = cand;
                    ll = cand_ll;
                    break;
                }
                s *= T::of(0.5);
            }
        }
        trace.push_back(format!("iter {iter}: max|dbeta|={:.3e} dln(alpha)={:.3e} loglik={ll}", max_db.f64(), dt.f64()));
        if trace.len() > 5 {
            trace.pop_front();
        }
        if small && dt.abs() <= opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(InferenceError::NotConverged { iterations, trace: trace.into_iter().collect() });
    }
    let alpha = t.exp();
    let mu: Vec<T> = st.z.mul_vec(&beta).into_iter().map(T::exp).collect();
    let w: Vec<T> = mu.iter().map(|&m| m / (one + alpha * m)).collect();
    let cov_s = PivotedCholesky::factor(&st.z.weighted_gram(Some(&w)), rank_tolerance()).inverse();
    let mut fit = finish(design, Family::NegBin, &st, &beta, &cov_s, ll, p + 1, true, iterations, opts.tolerance);
    let (_, d2) = alpha_derivatives(&st.z, y, &beta, alpha);
    fit.dispersion = Some(alpha);
    fit.dispersion_se = if d2 < T::zero() { Some((-one / d2).sqrt()) } else { None };
    fit.poisson_limit = t <= t_floor + T::of(1e-9);
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_terms_match_closed_forms() {
        for &(a, mu) in &[(1e-4f64, 5.0), (2e-4, 3.0), (1e-3, 0.5)] {
            let x: f64 = a * mu;
            let g_closed = x.ln_1p() / (a * a) - mu / (a * (1.0 + x));
            let h_closed =
                -2.0 * x.ln_1p() / (a * a * a) + 2.0 * mu / (a * a * (1.0 + x)) + mu * mu / (a * (1.0 + x) * (1.0 + x));
            assert!((g_term(a, mu) - g_closed).abs() < 1e-6 * g_closed.abs(), "g {a} {mu}");
            assert!((h_term(a, mu) - h_closed).abs() < 1e-3 * h_closed.abs(), "h {a} {mu}");
        }
    }

    #[test]
    fn negbin_loglik_matches_gamma_form() {
        let x: Matrix<f64> = Matrix::from_rows(&[vec![1.0, 0.3], vec![1.0, -1.0], vec![1.0, 2.0]]);
        let y = [4.0f64, 0.0, 11.0];
        let beta = [0.5f64, 0.7];
        let a = 0.6f64;
        let r = 1.0 / a;
        let oracle: f64 = x
            .mul_vec(&beta)
            .iter()
            .zip(&y)
            .map(|(&eta, &yi)| {
                let mu = eta.exp();
                ln_gamma(yi + r) - ln_gamma(r) - ln_gamma(yi + 1.0) + r * (r / (r + mu)).ln() + yi * (mu / (r + mu)).ln()
            })
            .sum();
        assert!((negbin_loglik(&x, &y, &beta, a) - oracle).abs() < 1e-10);
    }
}

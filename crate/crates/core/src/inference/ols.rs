use super::glm::{check_rank, Standardized};
use super::{Design, Family, InferenceError, RegressionFit};
use crate::stats::linalg::{rank_tolerance, PivotedCholesky};
use crate::Scalar;

/// Least squares with classical standard errors `sigma^2 (X'X)^-1`,
/// `sigma^2 = RSS / (n - p)`. The reported log-likelihood is the Gaussian
/// one at the ML variance `RSS / n`; `k` counts coefficients only.
pub fn fit_ols<T: Scalar>(design: &Design<T>, y: &[T]) -> Result<RegressionFit<T>, InferenceError> {
    let (n, p) = (design.n(), design.p());
    if n != y.len() {
        return Err(InferenceError::LengthMismatch { rows: n, outcome: y.len() });
    }
    if n == 0 {
        return Err(InferenceError::Empty);
    }
    if n <= p {
        return Err(InferenceError::TooFewObservations { n, k: p });
    }
    check_rank(design)?;
    let st = Standardized::new(design);
    let ch = PivotedCholesky::factor(&st.z.weighted_gram(None), rank_tolerance());
    if !ch.is_full_rank() {
        return Err(InferenceError::RankDeficient {
            columns: ch.dependent_columns().into_iter().map(|j| design.names[j].clone()).collect(),
        });
    }
    let beta_s = ch.solve(&st.z.weighted_tmul(None, y));
    let fitted = st.z.mul_vec(&beta_s);
    let rss: T = y.iter().zip(&fitted).map(|(&a, &b)| (a - b) * (a - b)).sum();
    let sigma2 = rss / T::of_usize(n - p);
    let mut cov_s = ch.inverse();
    for i in 0..p {
        for j in 0..p {
            cov_s[(i, j)] *= sigma2;
        }
    }
    let covariance = st.covariance(&cov_s);
    let nn = T::of_usize(n);
    let loglik = -nn / T::of(2.0) * ((T::of(2.0 * std::f64::consts::PI) * rss / nn).ln() + T::one());
    Ok(RegressionFit {
        family: Family::Ols,
        names: design.names.clone(),
        coefficients: st.coefficients(&beta_s),
        std_errors: (0..p).map(|i| covariance[(i, i)].max(T::zero()).sqrt()).collect(),
        covariance,
        loglik,
        n,
        k: p,
        dispersion: None,
        dispersion_se: None,
        poisson_limit: false,
        sigma2: Some(sigma2),
        converged: true,
        iterations: 1,
        tolerance: T::zero(),
    })
}

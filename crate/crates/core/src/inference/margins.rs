use super::{Design, Family, InferenceError, RegressionFit};
use crate::stats::dist::normal_quantile;
use crate::Scalar;

pub const MARGINS_FLAVOR: &str = "average adjusted predictions";

/// Predicted outcome over a grid of the focal regressor, averaged over the
/// observed values of every other regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginsCurve<T> {
    pub focal: String,
    pub family: Family,
    pub level: f64,
    pub grid: Vec<T>,
    pub predicted: Vec<T>,
    /// Delta-method standard errors.
    pub std_errors: Vec<T>,
    pub ci_low: Vec<T>,
    pub ci_high: Vec<T>,
    /// Observed range of the focal regressor.
    pub support: (T, T),
    pub outside_support: Vec<bool>,
}

pub fn margins<T: Scalar>(
    fit: &RegressionFit<T>,
    design: &Design<T>,
    focal: &str,
    grid: &[T],
) -> Result<MarginsCurve<T>, InferenceError> {
    if fit.names != design.names {
        return Err(InferenceError::Invalid("design columns differ from the fitted model".into()));
    }
    let f = design.index_of(focal).ok_or_else(|| InferenceError::UnknownColumn(focal.to_string()))?;
    let (n, p) = (design.n(), design.p());
    if n == 0 {
        return Err(InferenceError::Empty);
    }
    let level = 0.95;
    let q = T::of(normal_quantile(0.5 + level / 2.0));
    let eta = design.x.mul_vec(&fit.coefficients);
    let col = design.x.column(f);
    let lo = col.iter().copied().fold(T::infinity(), T::min);
    let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
    let nn = T::of_usize(n);
    let bf = fit.coefficients[f];
    let mut out = MarginsCurve {
        focal: focal.to_string(),
        family: fit.family,
        level,
        grid: grid.to_vec(),
        predicted: Vec::with_capacity(grid.len()),
        std_errors: Vec::with_capacity(grid.len()),
        ci_low: Vec::with_capacity(grid.len()),
        ci_high: Vec::with_capacity(grid.len()),
        support: (lo, hi),
        outside_support: grid.iter().map(|&g| g < lo || g > hi).collect(),
    };
    for &g in grid {
        let mut pred = T::zero();
        let mut grad = vec![T::zero(); p];
        for i in 0..n {
            let e = eta[i] + bf * (g - col[i]);
            pred += fit.family.inverse_link(e);
            let d = fit.family.inverse_link_derivative(e);
            for (j, gj) in grad.iter_mut().enumerate() {
                let xij = if j == f { g } else { design.x[(i, j)] };
                *gj += d * xij;
            }
        }
        pred /= nn;
        grad.iter_mut().for_each(|v| *v /= nn);
        let se = fit.covariance.quad_form(&grad).max(T::zero()).sqrt();
        out.predicted.push(pred);
        out.std_errors.push(se);
        out.ci_low.push(pred - q * se);
        out.ci_high.push(pred + q * se);
    }
    Ok(out)
}

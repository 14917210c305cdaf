//! Regression and hypothesis-testing engine.
//!
//! Logit and negative binomial (NB2, log link) models are fit by
//! iteratively reweighted least squares on an internally standardized
//! design; OLS solves the normal equations with a pivoted Cholesky
//! factorization. Standard errors are classical (Wald / model-based).

mod diagnostics;
mod glm;
mod hypothesis;
mod margins;
mod ols;
mod report;
mod table;

use thiserror::Error;

use crate::stats::dist::{normal_p, normal_quantile, student_t_p, Side};
use crate::stats::linalg::Matrix;
use crate::Scalar;

pub use diagnostics::{bic, kfold_loglik, odds_ratio, vif, KFoldReport};
pub use glm::{
    fit_logit, fit_logit_with, fit_negbin, fit_negbin_with, logit_loglik, logit_score, negbin_loglik,
    negbin_score, GlmOptions, NEGBIN_ALPHA_FLOOR,
};
pub use hypothesis::{
    binomial_test, ks_two_sample, two_sample_tests, weighted_welch_t_test, welch_t_test, KsResult, TestResult,
    TwoSampleReport,
};
pub use margins::{margins, MarginsCurve, MARGINS_FLAVOR};
pub use ols::fit_ols;
pub use report::{write_fit_report, write_margins_report};
pub use table::{build_design, parse_grid, DataTable, MarginsSpec, ModelData, ModelSpec, RangeFilter};

pub use crate::stats::dist::Side as TestSide;

#[derive(Debug, Error, PartialEq)]
pub enum InferenceError {
    #[error("length mismatch: design has {rows} rows, outcome has {outcome}")]
    LengthMismatch { rows: usize, outcome: usize },
    #[error("no observations")]
    Empty,
    #[error("design is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("complete or quasi-complete separation: coefficient on {column} diverges")]
    Separation { column: String },
    #[error("logit outcome must be 0 or 1 (row {row})")]
    NonBinaryOutcome { row: usize },
    #[error("count outcome must be a non-negative integer (row {row})")]
    NonIntegerCounts { row: usize },
    #[error("all counts are zero; the log-link intercept diverges")]
    AllZeroCounts,
    #[error("no convergence after {iterations} iterations; last steps: {}", trace.join("; "))]
    NotConverged { iterations: usize, trace: Vec<String> },
    #[error("need more observations ({n}) than parameters ({k})")]
    TooFewObservations { n: usize, k: usize },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("column {column:?} row {row}: {msg}")]
    BadValue { column: String, row: usize, msg: String },
    #[error("model spec line {line}: {msg}")]
    Spec { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Undefined(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Logit,
    Ols,
    NegBin,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logit => "logit",
            Family::Ols => "ols",
            Family::NegBin => "negbin",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logit" | "logistic" => Some(Family::Logit),
            "ols" | "linear" => Some(Family::Ols),
            "negbin" | "nb" | "nb2" | "negative_binomial" => Some(Family::NegBin),
            _ => None,
        }
    }

    /// Response-scale prediction for a linear predictor.
    pub fn inverse_link<T: Scalar>(self, eta: T) -> T {
        match self {
            Family::Logit => sigmoid(eta),
            Family::Ols => eta,
            Family::NegBin => eta.exp(),
        }
    }

    /// Derivative of [`Family::inverse_link`] with respect to `eta`.
    pub fn inverse_link_derivative<T: Scalar>(self, eta: T) -> T {
        match self {
            Family::Logit => {
                let p = sigmoid(eta);
                p * (T::one() - p)
            }
            Family::Ols => T::one(),
            Family::NegBin => eta.exp(),
        }
    }
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Regressors with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Design<T> {
    pub x: Matrix<T>,
    pub names: Vec<String>,
}

pub const INTERCEPT: &str = "(intercept)";

impl<T: Scalar> Design<T> {
    pub fn new(x: Matrix<T>, names: Vec<String>) -> Self {
        assert_eq!(x.cols(), names.len(), "one name per column");
        Design { x, names }
    }

    /// Intercept column followed by the given named columns.
    pub fn with_intercept(n: usize, columns: &[(&str, Vec<T>)]) -> Self {
        let p = columns.len() + 1;
        let mut x = Matrix::zeros(n, p);
        for i in 0..n {
            x[(i, 0)] = T::one();
            for (j, (_, col)) in columns.iter().enumerate() {
                x[(i, j + 1)] = col[i];
            }
        }
        let mut names = vec![INTERCEPT.to_string()];
        names.extend(columns.iter().map(|(n, _)| n.to_string()));
        Design { x, names }
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Index of a column of ones, if any.
    pub fn intercept_index(&self) -> Option<usize> {
        (0..self.p()).find(|&j| (0..self.n()).all(|i| self.x[(i, j)] == T::one()))
    }
}

/// A fitted model. Coefficients and standard errors follow `names`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit<T> {
    pub family: Family,
    pub names: Vec<String>,
    pub coefficients: Vec<T>,
    pub std_errors: Vec<T>,
    pub covariance: Matrix<T>,
    pub loglik: T,
    pub n: usize,
    /// Estimated parameters: coefficients plus the dispersion for negbin.
    pub k: usize,
    /// NB2 dispersion `alpha` (variance `mu + alpha * mu^2`).
    pub dispersion: Option<T>,
    pub dispersion_se: Option<T>,
    /// Dispersion sits on its floor: the fit is numerically Poisson.
    pub poisson_limit: bool,
    /// OLS residual variance.
    pub sigma2: Option<T>,
    pub converged: bool,
    pub iterations: usize,
    pub tolerance: T,
}

impl<T: Scalar> RegressionFit<T> {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<T> {
        self.index_of(name).map(|i| self.coefficients[i])
    }

    /// Residual degrees of freedom for OLS; `None` for likelihood models.
    pub fn residual_df(&self) -> Option<usize> {
        match self.family {
            Family::Ols => Some(self.n.saturating_sub(self.coefficients.len())),
            _ => None,
        }
    }

    /// Wald statistic `beta / se` (t for OLS, z otherwise).
    pub fn statistic(&self, i: usize) -> T {
        self.coefficients[i] / self.std_errors[i]
    }

    /// Two-sided p-value for coefficient `i`.
    pub fn p_value(&self, i: usize) -> T {
        let s = self.statistic(i).f64();
        let p = match self.residual_df() {
            Some(df) if df > 0 => student_t_p(s, df as f64, Side::TwoSided),
            _ => normal_p(s, Side::TwoSided),
        };
        T::of(p)
    }

    /// Wald confidence interval at `level` (e.g. 0.95).
    pub fn confint(&self, i: usize, level: f64) -> (T, T) {
        let q = match self.residual_df() {
            Some(df) if df > 0 => t_quantile((1.0 + level) / 2.0, df as f64),
            _ => normal_quantile((1.0 + level) / 2.0),
        };
        let h = T::of(q) * self.std_errors[i];
        (self.coefficients[i] - h, self.coefficients[i] + h)
    }
}

fn t_quantile(p: f64, df: f64) -> f64 {
    let (mut lo, mut hi) = (-1e3f64, 1e3f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - crate::stats::dist::student_t_sf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Dispatches to the fitter for `family`.
pub fn fit_model<T: Scalar>(family: Family, design: &Design<T>, y: &[T]) -> Result<RegressionFit<T>, InferenceError> {
    match family {
        Family::Logit => fit_logit(design, y),
        Family::Ols => fit_ols(design, y),
        Family::NegBin => fit_negbin(design, y),
    }
}

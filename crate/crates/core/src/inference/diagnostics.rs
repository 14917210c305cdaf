use rand::seq::SliceRandom;

use super::{
    fit_model, fit_ols, logit_loglik, negbin_loglik, Design, Family, InferenceError, RegressionFit, INTERCEPT,
    NEGBIN_ALPHA_FLOOR,
};
use crate::seed::SeedPath;
use crate::stats::linalg::Matrix;
use crate::Scalar;

/// `k ln n - 2 ln L`.
pub fn bic<T: Scalar>(fit: &RegressionFit<T>) -> T {
    T::of_usize(fit.k) * T::of_usize(fit.n).ln() - T::of(2.0) * fit.loglik
}

/// Odds ratio for a change of `delta` in a regressor with logit coefficient `beta`.
pub fn odds_ratio<T: Scalar>(beta: T, delta: T) -> T {
    (beta * delta).exp()
}

/// Variance inflation factor `1 / (1 - R^2)` of each non-intercept column
/// regressed on the others plus an intercept.
pub fn vif<T: Scalar>(design: &Design<T>) -> Result<Vec<(String, T)>, InferenceError> {
    let ic = design.intercept_index();
    let cols: Vec<usize> = (0..design.p()).filter(|&j| Some(j) != ic).collect();
    let n = design.n();
    let mut out = Vec::with_capacity(cols.len());
    for &j in &cols {
        let others: Vec<usize> = cols.iter().copied().filter(|&c| c != j).collect();
        let mut x = Matrix::zeros(n, others.len() + 1);
        let mut names = vec![INTERCEPT.to_string()];
        for i in 0..n {
            x[(i, 0)] = T::one();
            for (k, &c) in others.iter().enumerate() {
                x[(i, k + 1)] = design.x[(i, c)];
            }
        }
        names.extend(others.iter().map(|&c| design.names[c].clone()));
        let y = design.x.column(j);
        let m = y.iter().copied().sum::<T>() / T::of_usize(n);
        let tss: T = y.iter().map(|&v| (v - m) * (v - m)).sum();
        if tss <= T::zero() {
            return Err(InferenceError::RankDeficient { columns: vec![design.names[j].clone()] });
        }
        let fit = fit_ols(&Design::new(x.clone(), names), &y).map_err(|e| match e {
            InferenceError::RankDeficient { mut columns } => {
                columns.push(design.names[j].clone());
                InferenceError::RankDeficient { columns }
            }
            other => other,
        })?;
        let fitted = x.mul_vec(&fit.coefficients);
        let rss: T = y.iter().zip(&fitted).map(|(&a, &b)| (a - b) * (a - b)).sum();
        let r2 = T::one() - rss / tss;
        out.push((design.names[j].clone(), T::one() / (T::one() - r2)));
    }
    Ok(out)
}

/// Out-of-fold log-likelihood from a `folds`-fold split.
#[derive(Debug, Clone, PartialEq)]
pub struct KFoldReport<T> {
    pub folds: usize,
    /// Held-out log-likelihood of each fold.
    pub fold_loglik: Vec<T>,
    pub total_loglik: T,
}

/// Fits the model on each training split and evaluates the held-out
/// log-likelihood. Rows are shuffled into folds by `seed`.
pub fn kfold_loglik<T: Scalar>(
    family: Family,
    design: &Design<T>,
    y: &[T],
    folds: usize,
    seed: u64,
) -> Result<KFoldReport<T>, InferenceError> {
    let n = design.n();
    if folds < 2 || folds > n {
        return Err(InferenceError::Invalid(format!("need 2 <= folds <= n, got {folds} for n = {n}")));
    }
    if y.len() != n {
        return Err(InferenceError::LengthMismatch { rows: n, outcome: y.len() });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SeedPath::new(seed).label("kfold").rng());
    let mut fold_loglik = Vec::with_capacity(folds);
    for f in 0..folds {
        let (test, train): (Vec<(usize, usize)>, Vec<(usize, usize)>) =
            order.iter().copied().enumerate().partition(|&(k, _)| k % folds == f);
        let test: Vec<usize> = test.into_iter().map(|(_, i)| i).collect();
        let train: Vec<usize> = train.into_iter().map(|(_, i)| i).collect();
        let sub = |rows: &[usize]| {
            let mut x = Matrix::zeros(rows.len(), design.p());
            for (r, &i) in rows.iter().enumerate() {
                x.row_mut(r).copy_from_slice(design.x.row(i));
            }
            (Design::new(x, design.names.clone()), rows.iter().map(|&i| y[i]).collect::<Vec<T>>())
        };
        let (dtr, ytr) = sub(&train);
        let (dte, yte) = sub(&test);
        let fit = fit_model(family, &dtr, &ytr)?;
        let ll = match family {
            Family::Logit => logit_loglik(&dte.x, &yte, &fit.coefficients),
            Family::NegBin => negbin_loglik(&dte.x, &yte, &fit.coefficients, fit.dispersion.unwrap_or(T::of(NEGBIN_ALPHA_FLOOR))),
            Family::Ols => {
                // Gaussian density at the training ML variance
                let s2 = fit.sigma2.unwrap_or(T::one()) * T::of_usize(fit.n - fit.k) / T::of_usize(fit.n);
                let two_pi = T::of(2.0 * std::f64::consts::PI);
                dte.x
                    .mul_vec(&fit.coefficients)
                    .iter()
                    .zip(&yte)
                    .map(|(&m, &v)| -((two_pi * s2).ln() + (v - m) * (v - m) / s2) / T::of(2.0))
                    .sum()
            }
        };
        fold_loglik.push(ll);
    }
    let total_loglik = fold_loglik.iter().copied().sum();
    Ok(KFoldReport { folds, fold_loglik, total_loglik })
}


use std::io::{self, Write};

use super::{bic, MarginsCurve, RegressionFit, MARGINS_FLAVOR};
use crate::Scalar;

/// Coefficient table as CSV preceded by `# key=value` metadata lines.
pub fn write_fit_report<T: Scalar, W: Write>(mut w: W, fit: &RegressionFit<T>) -> io::Result<()> {
    writeln!(w, "# family={}", fit.family.as_str())?;
    writeln!(w, "# n={}", fit.n)?;
    writeln!(w, "# k={}", fit.k)?;
    writeln!(w, "# loglik={}", fit.loglik)?;
    writeln!(w, "# bic={}", bic(fit))?;
    writeln!(w, "# converged={}", fit.converged)?;
    writeln!(w, "# iterations={}", fit.iterations)?;
    writeln!(w, "# tolerance={:e}", fit.tolerance.f64())?;
    writeln!(w, "# std_errors=classical")?;
    if let Some(a) = fit.dispersion {
        writeln!(w, "# dispersion_alpha={a}")?;
        if let Some(se) = fit.dispersion_se {
            writeln!(w, "# dispersion_se={se}")?;
        }
        writeln!(w, "# poisson_limit={}", fit.poisson_limit)?;
    }
    if let Some(s2) = fit.sigma2 {
        writeln!(w, "# sigma2={s2}")?;
    }
    writeln!(w, "term,estimate,std_error,statistic,p_value,ci_low,ci_high")?;
    for i in 0..fit.names.len() {
        let (lo, hi) = fit.confint(i, 0.95);
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            csv_field(&fit.names[i]),
            fit.coefficients[i],
            fit.std_errors[i],
            fit.statistic(i),
            fit.p_value(i),
            lo,
            hi
        )?;
    }
    Ok(())
}

pub fn write_margins_report<T: Scalar, W: Write>(mut w: W, m: &MarginsCurve<T>) -> io::Result<()> {
    writeln!(w, "# margins={MARGINS_FLAVOR}")?;
    writeln!(w, "# focal={}", m.focal)?;
    writeln!(w, "# family={}", m.family.as_str())?;
    writeln!(w, "# level={}", m.level)?;
    writeln!(w, "# support={}..{}", m.support.0, m.support.1)?;
    writeln!(w, "{},predicted,std_error,ci_low,ci_high,outside_support", csv_field(&m.focal))?;
    for i in 0..m.grid.len() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            m.grid[i], m.predicted[i], m.std_errors[i], m.ci_low[i], m.ci_high[i], m.outside_support[i]
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

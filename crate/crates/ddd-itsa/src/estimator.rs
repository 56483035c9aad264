//! Ordinary least squares with heteroskedasticity- and
//! autocorrelation-consistent (HAC) covariance.
//!
//! Coefficients are computed through a QR decomposition (never the normal
//! equations, which square the condition number). The covariance follows
//! Newey and West (1987): a Bartlett-kernel weighted sum of residual
//! autocovariance terms sandwiched between (X'X)^-1 factors, with the
//! small-sample scaling n/(n-k) applied by default. Lagged cross products
//! are confined to rows of the same series block — observations from
//! different units are never treated as temporally adjacent just because
//! they are stacked next to each other.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::{build_design, DesignMatrix, DesignSpec};
use crate::error::{Error, Result};
use crate::panel::PanelSeries;

/// Least squares via QR: solves `min ||y - X b||` for full-column-rank X.
pub fn ols_qr(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() < x.ncols() {
        return Err(Error::Design(format!(
            "{} rows cannot identify {} coefficients",
            x.nrows(),
            x.ncols()
        )));
    }
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * y;
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numeric("QR solve failed: R factor is singular".into()))?;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Numeric("QR solve produced non-finite coefficients".into()));
    }
    Ok(beta)
}

/// (X'X)^-1 computed from the R factor of the QR decomposition.
fn xtx_inverse(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = x.ncols();
    let r = x.clone().qr().r();
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Numeric("X'X is singular".into()))?;
    Ok(&rinv * rinv.transpose())
}

/// Newey-West covariance of the OLS coefficients.
///
/// `blocks` lists `[start, end)` row ranges of the independent series;
/// the Bartlett-weighted lag-j terms pair a row only with rows of its own
/// block. `lag = 0` reduces to the White/HC0 estimator (when
/// `dof_adjust` is off) or HC1 (when on).
pub fn newey_west_cov(
    x: &DMatrix<f64>,
    residuals: &[f64],
    blocks: &[(usize, usize)],
    lag: usize,
    dof_adjust: bool,
) -> Result<DMatrix<f64>> {
    let (n, k) = (x.nrows(), x.ncols());
    if residuals.len() != n {
        return Err(Error::Numeric(format!(
            "residual length {} does not match {} design rows",
            residuals.len(),
            n
        )));
    }
    let covered: usize = blocks.iter().map(|(s, e)| e - s).sum();
    if covered != n {
        return Err(Error::Numeric("series blocks do not partition the design rows".into()));
    }
    for &(s, e) in blocks {
        if lag >= e - s {
            return Err(Error::Spec(format!(
                "kernel lag {} is not smaller than a series block of length {}",
                lag,
                e - s
            )));
        }
    }

    let mut meat = DMatrix::zeros(k, k);
    for &(start, end) in blocks {
        for (offset, &e_t) in residuals[start..end].iter().enumerate() {
            let xt = x.row(start + offset).transpose();
            meat.ger(e_t * e_t, &xt, &xt, 1.0);
        }
        for j in 1..=lag {
            let w = 1.0 - j as f64 / (lag as f64 + 1.0);
            for t in (start + j)..end {
                let xt = x.row(t).transpose();
                let xs = x.row(t - j).transpose();
                let a = w * residuals[t] * residuals[t - j];
                meat.ger(a, &xt, &xs, 1.0);
                meat.ger(a, &xs, &xt, 1.0);
            }
        }
    }

    let bread = xtx_inverse(x)?;
    let mut cov = &bread * meat * &bread;
    if dof_adjust {
        if n <= k {
            return Err(Error::Numeric(format!(
                "cannot apply the n/(n-k) adjustment with n = {n} and k = {k}"
            )));
        }
        cov *= n as f64 / (n - k) as f64;
    }

    // The formula is symmetric; enforce it exactly against rounding and
    // guard the diagonal.
    let cov_t = cov.transpose();
    let mut cov = 0.5 * (cov + cov_t);
    let scale = cov.diagonal().amax().max(f64::MIN_POSITIVE);
    for i in 0..k {
        let d = cov[(i, i)];
        if d < 0.0 {
            if d > -1e-12 * scale {
                cov[(i, i)] = 0.0;
            } else {
                return Err(Error::Numeric(format!(
                    "robust covariance produced a negative variance for coefficient {i}"
                )));
            }
        }
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("robust covariance has non-finite entries".into()));
    }
    Ok(cov)
}

/// A fitted segmented regression: coefficients, robust covariance, and
/// enough context to run every downstream computation without refitting.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Residuals in design row order (grouped by series block).
    pub residuals: Vec<f64>,
    /// Fitted values in design row order.
    pub fitted: Vec<f64>,
    pub n: usize,
    pub k: usize,
    pub hac_lag: usize,
    /// The specification that produced this fit.
    pub spec: DesignSpec,
    /// The assembled design, kept for diagnostics, reporting, and export.
    pub design: DesignMatrix,
}

impl FitResult {
    /// Standard error of coefficient `j`.
    pub fn se(&self, j: usize) -> f64 {
        self.cov[(j, j)].sqrt()
    }

    /// Serializable snapshot carrying everything linear-combination
    /// inference needs (used by the stored-fit workflow).
    pub fn to_stored(&self) -> StoredFit {
        StoredFit {
            coefficients: (0..self.k).map(|j| format!("b{j}")).collect(),
            terms: self.design.column_names.iter().map(|s| s.to_string()).collect(),
            estimates: self.beta.iter().cloned().collect(),
            covariance: (0..self.k)
                .map(|i| (0..self.k).map(|j| self.cov[(i, j)]).collect())
                .collect(),
            n: self.n,
            k: self.k,
            hac_lag: self.hac_lag,
            spec: self.spec.clone(),
        }
    }
}

/// JSON-friendly snapshot of a fit. Estimates and covariance round-trip
/// exactly (shortest-representation float encoding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredFit {
    pub coefficients: Vec<String>,
    pub terms: Vec<String>,
    pub estimates: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub n: usize,
    pub k: usize,
    pub hac_lag: usize,
    pub spec: DesignSpec,
}

impl StoredFit {
    pub fn validate(&self) -> Result<()> {
        let k = self.k;
        if self.coefficients.len() != k
            || self.estimates.len() != k
            || self.covariance.len() != k
            || self.covariance.iter().any(|row| row.len() != k)
        {
            return Err(Error::Spec("stored fit has inconsistent dimensions".into()));
        }
        Ok(())
    }
}

/// Fits an already-built design.
pub fn fit_design(design: DesignMatrix, spec: &DesignSpec) -> Result<FitResult> {
    let beta = ols_qr(&design.x, &design.y)?;
    let fitted_vec = &design.x * &beta;
    let resid_vec = &design.y - &fitted_vec;

    // Hard invariant of least squares: residuals are orthogonal to the
    // columns of X. A violation means the solve silently went wrong.
    let xte = design.x.transpose() * &resid_vec;
    let scale = (design.x.transpose() * &design.y).amax().max(1.0);
    if xte.amax() > 1e-8 * scale {
        return Err(Error::Numeric(format!(
            "residuals are not orthogonal to the design (max |X'e| = {:.3e})",
            xte.amax()
        )));
    }

    let residuals: Vec<f64> = resid_vec.iter().cloned().collect();
    let blocks: Vec<(usize, usize)> = design.blocks.iter().map(|b| (b.start, b.end)).collect();
    let cov = newey_west_cov(&design.x, &residuals, &blocks, spec.hac_lag, spec.dof_adjust)?;

    Ok(FitResult {
        beta,
        cov,
        residuals,
        fitted: fitted_vec.iter().cloned().collect(),
        n: design.n(),
        k: design.k(),
        hac_lag: spec.hac_lag,
        spec: spec.clone(),
        design,
    })
}

/// End-to-end fit: validate the spec, aggregate groups, build the design,
/// estimate, and attach robust covariance.
pub fn fit(panel: &PanelSeries, spec: &DesignSpec) -> Result<FitResult> {
    let design = build_design(panel, spec)?;
    fit_design(design, spec)
}

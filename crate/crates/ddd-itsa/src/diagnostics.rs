//! Residual autocorrelation diagnostics.
//!
//! Two complementary views of serial correlation in the fit residuals:
//!
//! * sample autocorrelation and partial autocorrelation functions,
//!   computed independently within each series block (residuals of
//!   different units are never mixed) and then averaged across blocks;
//! * the Breusch-Godfrey Lagrange multiplier test, an auxiliary
//!   regression of the residuals on the original design plus lagged
//!   residuals, with the lagged values zeroed at block starts so no term
//!   reaches across units. The statistic is n R-squared against a
//!   chi-squared reference with one degree of freedom per tested order.
//!
//! The ACF uses the biased (length-n) denominator conventional for
//! correlograms; the PACF comes from the Durbin-Levinson recursion.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::estimator::{ols_qr, FitResult};

/// Autocorrelation summary for one series block of residuals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesAutocorr {
    pub label: String,
    /// Sample autocorrelations at lags 1..=max_lag.
    pub acf: Vec<f64>,
    /// Partial autocorrelations at lags 1..=max_lag.
    pub pacf: Vec<f64>,
    /// True when the block residuals have no variance.
    pub degenerate: bool,
}

/// One Breusch-Godfrey test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmTestResult {
    pub order: usize,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Set when the residuals carry no variance (the test is vacuous).
    pub degenerate: bool,
}

/// Combined diagnostics output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub per_series: Vec<SeriesAutocorr>,
    /// ACF averaged across non-degenerate blocks.
    pub mean_acf: Vec<f64>,
    /// PACF averaged across non-degenerate blocks.
    pub mean_pacf: Vec<f64>,
    /// Approximate two-sided 5% significance band for the averaged ACF.
    pub band: f64,
    pub lm_tests: Vec<LmTestResult>,
    /// Number of leading averaged-ACF lags outside the band. A starting
    /// point for choosing the kernel lag — a suggestion, not a decision.
    pub suggested_lag: usize,
}

/// `scale` is the sum of squares of the block's outcomes; residual
/// variation below float-noise level relative to it counts as degenerate.
fn block_acf(residuals: &[f64], max_lag: usize, scale: f64) -> Option<Vec<f64>> {
    let n = residuals.len();
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = residuals.iter().map(|e| e - mean).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    if denom <= 1e-20 * scale.max(f64::MIN_POSITIVE) {
        return None;
    }
    let mut acf = Vec::with_capacity(max_lag);
    for j in 1..=max_lag {
        let num: f64 = (j..n).map(|t| centered[t] * centered[t - j]).sum();
        acf.push(num / denom);
    }
    Some(acf)
}

/// Durbin-Levinson recursion from autocorrelations r_1..r_m to partial
/// autocorrelations. Returns NaN from the first order whose innovation
/// variance collapses.
fn pacf_from_acf(acf: &[f64]) -> Vec<f64> {
    let m = acf.len();
    let mut pacf = vec![f64::NAN; m];
    if m == 0 {
        return pacf;
    }
    let mut phi = vec![0.0; m + 1];
    let mut prev = vec![0.0; m + 1];
    pacf[0] = acf[0];
    phi[1] = acf[0];
    let mut denom = 1.0 - acf[0] * acf[0];
    for j in 2..=m {
        if denom.abs() <= 1e-12 {
            break;
        }
        prev[..=j - 1].copy_from_slice(&phi[..=j - 1]);
        let mut num = acf[j - 1];
        for i in 1..j {
            num -= prev[i] * acf[j - 1 - i];
        }
        let next = num / denom;
        pacf[j - 1] = next;
        phi[j] = next;
        for i in 1..j {
            phi[i] = prev[i] - next * prev[j - i];
        }
        denom *= 1.0 - next * next;
    }
    pacf
}

/// Per-block residual ACF/PACF up to `max_lag`.
pub fn residual_autocorr(fit: &FitResult, max_lag: usize) -> Result<Vec<SeriesAutocorr>> {
    let shortest = fit
        .design
        .blocks
        .iter()
        .map(|b| b.end - b.start)
        .min()
        .unwrap_or(0);
    if max_lag == 0 {
        return Err(Error::Spec("autocorrelation lag must be at least 1".into()));
    }
    if max_lag >= shortest {
        return Err(Error::Spec(format!(
            "autocorrelation lag {max_lag} must be smaller than the shortest series block ({shortest} rows)"
        )));
    }
    let mut out = Vec::with_capacity(fit.design.blocks.len());
    for block in &fit.design.blocks {
        let resid = &fit.residuals[block.start..block.end];
        let scale: f64 = fit.design.y.rows(block.start, block.end - block.start).norm_squared();
        match block_acf(resid, max_lag, scale) {
            Some(acf) => {
                let pacf = pacf_from_acf(&acf);
                out.push(SeriesAutocorr { label: block.label.clone(), acf, pacf, degenerate: false });
            }
            None => out.push(SeriesAutocorr {
                label: block.label.clone(),
                acf: vec![0.0; max_lag],
                pacf: vec![0.0; max_lag],
                degenerate: true,
            }),
        }
    }
    Ok(out)
}

/// Auxiliary design for the Breusch-Godfrey test: the original regressors
/// plus `order` lagged-residual columns, zero where the lag would cross a
/// block start.
fn lagged_residual_columns(
    residuals: &[f64],
    blocks: &[(usize, usize)],
    order: usize,
) -> DMatrix<f64> {
    let n = residuals.len();
    let mut cols = DMatrix::zeros(n, order);
    for &(start, end) in blocks {
        for j in 1..=order {
            for t in (start + j)..end {
                cols[(t, j - 1)] = residuals[t - j];
            }
        }
    }
    cols
}

/// Breusch-Godfrey LM tests of residual serial correlation for every
/// order 1..=max_order.
pub fn breusch_godfrey(fit: &FitResult, max_order: usize) -> Result<Vec<LmTestResult>> {
    let shortest = fit
        .design
        .blocks
        .iter()
        .map(|b| b.end - b.start)
        .min()
        .unwrap_or(0);
    if max_order == 0 {
        return Err(Error::Spec("test order must be at least 1".into()));
    }
    if max_order >= shortest {
        return Err(Error::Spec(format!(
            "test order {max_order} must be smaller than the shortest series block ({shortest} rows)"
        )));
    }

    let n = fit.n;
    let e = DVector::from_vec(fit.residuals.clone());
    let mean = e.sum() / n as f64;
    let sst: f64 = e.iter().map(|v| (v - mean) * (v - mean)).sum();
    // A noiseless fit leaves float-level residuals, so judge "no variance"
    // relative to the outcome scale rather than against exact zero.
    let degenerate = sst <= 1e-20 * fit.design.y.norm_squared().max(f64::MIN_POSITIVE);
    let blocks: Vec<(usize, usize)> = fit.design.blocks.iter().map(|b| (b.start, b.end)).collect();

    let mut out = Vec::with_capacity(max_order);
    for order in 1..=max_order {
        if degenerate {
            // No residual variance: nothing to test.
            out.push(LmTestResult { order, statistic: 0.0, df: order, p_value: 1.0, degenerate: true });
            continue;
        }
        let lags = lagged_residual_columns(&fit.residuals, &blocks, order);
        let mut aux = DMatrix::zeros(n, fit.k + order);
        aux.view_mut((0, 0), (n, fit.k)).copy_from(&fit.design.x);
        aux.view_mut((0, fit.k), (n, order)).copy_from(&lags);
        let gamma = ols_qr(&aux, &e).map_err(|_| {
            Error::Numeric(format!(
                "Breusch-Godfrey auxiliary regression is singular at order {order}"
            ))
        })?;
        let ssr = (&e - aux * gamma).norm_squared();
        let r2 = (1.0 - ssr / sst).max(0.0);
        let statistic = n as f64 * r2;
        let chi = ChiSquared::new(order as f64).map_err(|err| Error::Numeric(err.to_string()))?;
        let p_value = 1.0 - chi.cdf(statistic);
        out.push(LmTestResult { order, statistic, df: order, p_value, degenerate: false });
    }
    Ok(out)
}

/// Runs the full diagnostics battery on a fit.
pub fn diagnose(fit: &FitResult, max_lag: usize) -> Result<DiagnosticsReport> {
    let per_series = residual_autocorr(fit, max_lag)?;
    let live: Vec<&SeriesAutocorr> = per_series.iter().filter(|s| !s.degenerate).collect();
    let mut mean_acf = vec![0.0; max_lag];
    let mut mean_pacf = vec![0.0; max_lag];
    if !live.is_empty() {
        for j in 0..max_lag {
            let mut acf_sum = 0.0;
            let mut pacf_sum = 0.0;
            let mut pacf_count = 0usize;
            for s in &live {
                acf_sum += s.acf[j];
                if s.pacf[j].is_finite() {
                    pacf_sum += s.pacf[j];
                    pacf_count += 1;
                }
            }
            mean_acf[j] = acf_sum / live.len() as f64;
            mean_pacf[j] = if pacf_count > 0 { pacf_sum / pacf_count as f64 } else { f64::NAN };
        }
    }
    let band = 1.96 / (fit.n as f64).sqrt();
    let suggested_lag = mean_acf.iter().take_while(|a| a.abs() > band).count();
    let lm_tests = breusch_godfrey(fit, max_lag)?;
    Ok(DiagnosticsReport { per_series, mean_acf, mean_pacf, band, lm_tests, suggested_lag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignSpec;
    use crate::estimator::fit;
    use crate::panel::{Observation, PanelSeries};

    #[test]
    fn acf_matches_hand_computation() {
        // Series 1,2,3,4: centered (-1.5,-0.5,0.5,1.5), denominator 5.
        // r1 = (0.75 - 0.25 + 0.75)/5 = 0.25, r2 = (-0.75 - 0.75)/5 = -0.3.
        let acf = block_acf(&[1.0, 2.0, 3.0, 4.0], 2, 1.0).unwrap();
        assert!((acf[0] - 0.25).abs() < 1e-12);
        assert!((acf[1] - -0.3).abs() < 1e-12);
    }

    #[test]
    fn constant_block_is_degenerate() {
        assert!(block_acf(&[2.0, 2.0, 2.0, 2.0], 2, 16.0).is_none());
    }

    #[test]
    fn pacf_of_exact_ar1_autocorrelations_cuts_off_after_lag_one() {
        let rho: f64 = 0.6;
        let acf = vec![rho, rho.powi(2), rho.powi(3), rho.powi(4)];
        let pacf = pacf_from_acf(&acf);
        assert!((pacf[0] - rho).abs() < 1e-12);
        for &p in &pacf[1..] {
            assert!(p.abs() < 1e-12, "pacf {p}");
        }
    }

    #[test]
    fn pacf_lag_one_equals_acf_lag_one() {
        let acf = vec![0.42, -0.1, 0.05];
        let pacf = pacf_from_acf(&acf);
        assert_eq!(pacf[0], 0.42);
    }

    #[test]
    fn lagged_columns_are_zero_at_block_starts() {
        let e = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let cols = lagged_residual_columns(&e, &[(0, 3), (3, 6)], 2);
        // Lag 1: zero at rows 0 and 3 (block starts).
        assert_eq!(cols[(0, 0)], 0.0);
        assert_eq!(cols[(1, 0)], 1.0);
        assert_eq!(cols[(2, 0)], 2.0);
        assert_eq!(cols[(3, 0)], 0.0);
        assert_eq!(cols[(4, 0)], 4.0);
        // Lag 2: zero at the first two rows of each block.
        assert_eq!(cols[(1, 1)], 0.0);
        assert_eq!(cols[(2, 1)], 1.0);
        assert_eq!(cols[(4, 1)], 0.0);
        assert_eq!(cols[(5, 1)], 4.0);
    }

    fn fit_with_noise(noise: impl Fn(usize, i64) -> f64) -> FitResult {
        let mut rows = Vec::new();
        for (u, (unit, base)) in [("c", 10.0), ("t", 14.0)].iter().enumerate() {
            for t in 0..20i64 {
                let post = if t >= 10 { 1.0 } else { 0.0 };
                rows.push(Observation {
                    unit: (*unit).into(),
                    time: 1980 + t,
                    outcome: base + 0.3 * t as f64 - 2.0 * post + noise(u, t),
                });
            }
        }
        let panel = PanelSeries::from_observations(rows).unwrap();
        let spec = DesignSpec::new("t", &["c"], &[], 1990);
        fit(&panel, &spec).unwrap()
    }

    #[test]
    fn strong_serial_correlation_is_detected() {
        // Slowly oscillating noise leaves heavily autocorrelated residuals.
        let f = fit_with_noise(|_, t| 3.0 * (t as f64 * 0.35).sin());
        let lm = breusch_godfrey(&f, 2).unwrap();
        assert!(lm[0].p_value < 0.01, "p = {}", lm[0].p_value);
        assert!(!lm[0].degenerate);

        let report = diagnose(&f, 3).unwrap();
        assert!(report.mean_acf[0] > report.band);
        assert!(report.suggested_lag >= 1);
        assert_eq!(report.per_series.len(), 2);
    }

    #[test]
    fn noiseless_fit_degenerates_gracefully() {
        let f = fit_with_noise(|_, _| 0.0);
        let lm = breusch_godfrey(&f, 2).unwrap();
        for t in &lm {
            assert!(t.degenerate);
            assert_eq!(t.statistic, 0.0);
            assert_eq!(t.p_value, 1.0);
        }
        let report = diagnose(&f, 2).unwrap();
        assert!(report.per_series.iter().all(|s| s.degenerate));
        assert_eq!(report.suggested_lag, 0);
    }

    #[test]
    fn statistic_is_n_times_r_squared_of_the_auxiliary_regression() {
        let f = fit_with_noise(|u, t| ((t * 13 + u as i64 * 7) % 11) as f64 * 0.4 - 2.0);
        let lm = breusch_godfrey(&f, 1).unwrap();

        // Independent computation through the normal equations.
        let n = f.n;
        let e = DVector::from_vec(f.residuals.clone());
        let blocks: Vec<(usize, usize)> = f.design.blocks.iter().map(|b| (b.start, b.end)).collect();
        let lags = lagged_residual_columns(&f.residuals, &blocks, 1);
        let mut aux = DMatrix::zeros(n, f.k + 1);
        aux.view_mut((0, 0), (n, f.k)).copy_from(&f.design.x);
        aux.view_mut((0, f.k), (n, 1)).copy_from(&lags);
        let gamma = (aux.transpose() * &aux).try_inverse().unwrap() * aux.transpose() * &e;
        let ssr = (&e - &aux * gamma).norm_squared();
        let mean = e.sum() / n as f64;
        let sst: f64 = e.iter().map(|v| (v - mean) * (v - mean)).sum();
        let expect = n as f64 * (1.0 - ssr / sst);
        assert!((lm[0].statistic - expect).abs() <= 1e-8 * expect.abs().max(1.0));
    }

    #[test]
    fn rejects_lags_longer_than_a_block() {
        let f = fit_with_noise(|_, t| (t % 3) as f64);
        assert!(matches!(residual_autocorr(&f, 20), Err(Error::Spec(_))));
        assert!(matches!(breusch_godfrey(&f, 25), Err(Error::Spec(_))));
        assert!(matches!(residual_autocorr(&f, 0), Err(Error::Spec(_))));
    }
}

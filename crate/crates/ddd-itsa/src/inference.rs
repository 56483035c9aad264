//! Inference on linear combinations of fitted coefficients.
//!
//! Every quantity this crate reports — single coefficients, trend and
//! level summaries per group, difference-in-differences contrasts, the
//! triple-difference estimands, and the pre-period balance checks — is a
//! linear combination `w'b` with variance `w'Vw` taken from the robust
//! covariance. The default reference distribution is standard normal
//! (matching the large-sample theory behind the HAC covariance); a
//! Student-t reference with n-k degrees of freedom is available as an
//! option.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::estimator::{FitResult, StoredFit};

/// Reference distribution for p-values and confidence limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// Standard normal (the default).
    Normal,
    /// Student's t with n - k degrees of freedom.
    StudentT,
}

/// A named weight vector over the fitted coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCombination {
    pub label: String,
    pub weights: Vec<f64>,
}

impl LinearCombination {
    pub fn new(label: &str, weights: Vec<f64>) -> Self {
        LinearCombination { label: label.into(), weights }
    }

    /// Builds a k-length weight vector from sparse (index, weight) terms.
    pub fn from_terms(label: &str, k: usize, terms: &[(usize, f64)]) -> Self {
        let mut weights = vec![0.0; k];
        for &(idx, w) in terms {
            weights[idx] += w;
        }
        LinearCombination { label: label.into(), weights }
    }
}

/// Point estimate, uncertainty, and test for one linear combination.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EstimandResult {
    pub label: String,
    pub estimate: f64,
    pub std_err: f64,
    /// The test statistic (z by default, t under [`Reference::StudentT`]).
    pub statistic: f64,
    pub p_value: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// Confidence level of the interval, e.g. 0.95.
    pub level: f64,
}

fn lincom_core(
    beta: &DVector<f64>,
    cov: &DMatrix<f64>,
    n: usize,
    k: usize,
    lc: &LinearCombination,
    level: f64,
    reference: Reference,
) -> Result<EstimandResult> {
    if lc.weights.len() != k {
        return Err(Error::Spec(format!(
            "combination '{}' has {} weights for a {}-coefficient fit",
            lc.label,
            lc.weights.len(),
            k
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Spec(format!("confidence level {level} must be inside (0, 1)")));
    }
    if lc.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Spec(format!("combination '{}' has non-finite weights", lc.label)));
    }
    if lc.weights.iter().all(|&w| w == 0.0) {
        return Err(Error::Spec(format!("combination '{}' is identically zero", lc.label)));
    }

    // Plain accumulation keeps single-coefficient combinations
    // bit-identical to the fit's own estimate/standard-error columns.
    let mut estimate = 0.0;
    for (j, &w) in lc.weights.iter().enumerate() {
        if w != 0.0 {
            estimate += w * beta[j];
        }
    }
    let mut variance = 0.0;
    for (i, &wi) in lc.weights.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        for (j, &wj) in lc.weights.iter().enumerate() {
            if wj != 0.0 {
                variance += wi * wj * cov[(i, j)];
            }
        }
    }
    if variance < 0.0 {
        let scale = cov.diagonal().amax().max(f64::MIN_POSITIVE);
        if variance > -1e-12 * scale {
            variance = 0.0;
        } else {
            return Err(Error::Numeric(format!(
                "combination '{}' has negative variance {variance:.3e}",
                lc.label
            )));
        }
    }
    let std_err = variance.sqrt();

    let (statistic, p_value, crit) = if std_err == 0.0 {
        // Degenerate fit (for example noiseless data): the estimate is
        // exact. Report a zero-width interval rather than NaNs.
        let stat = if estimate == 0.0 {
            0.0
        } else {
            f64::INFINITY * estimate.signum()
        };
        (stat, if estimate == 0.0 { 1.0 } else { 0.0 }, 0.0)
    } else {
        let stat = estimate / std_err;
        let tail = 0.5 + level / 2.0;
        let (p, crit) = match reference {
            Reference::Normal => {
                let z = Normal::new(0.0, 1.0).expect("standard normal");
                (2.0 * (1.0 - z.cdf(stat.abs())), z.inverse_cdf(tail))
            }
            Reference::StudentT => {
                if n <= k {
                    return Err(Error::Spec(format!(
                        "t reference needs n > k (n = {n}, k = {k})"
                    )));
                }
                let t = StudentsT::new(0.0, 1.0, (n - k) as f64)
                    .map_err(|e| Error::Numeric(e.to_string()))?;
                (2.0 * (1.0 - t.cdf(stat.abs())), t.inverse_cdf(tail))
            }
        };
        (stat, p, crit)
    };

    Ok(EstimandResult {
        label: lc.label.clone(),
        estimate,
        std_err,
        statistic,
        p_value,
        ci_lower: estimate - crit * std_err,
        ci_upper: estimate + crit * std_err,
        level,
    })
}

/// Tests `w'b = 0` against the normal reference.
pub fn lincom(fit: &FitResult, lc: &LinearCombination, level: f64) -> Result<EstimandResult> {
    lincom_with(fit, lc, level, Reference::Normal)
}

/// Tests `w'b = 0` with an explicit reference distribution.
pub fn lincom_with(
    fit: &FitResult,
    lc: &LinearCombination,
    level: f64,
    reference: Reference,
) -> Result<EstimandResult> {
    lincom_core(&fit.beta, &fit.cov, fit.n, fit.k, lc, level, reference)
}

/// Linear-combination inference on a previously saved fit.
pub fn lincom_stored(stored: &StoredFit, lc: &LinearCombination, level: f64) -> Result<EstimandResult> {
    stored.validate()?;
    let beta = DVector::from_vec(stored.estimates.clone());
    let cov = DMatrix::from_fn(stored.k, stored.k, |i, j| stored.covariance[i][j]);
    lincom_core(&beta, &cov, stored.n, stored.k, lc, level, Reference::Normal)
}

fn terms(label: &str, k: usize, idx: &[(usize, f64)]) -> LinearCombination {
    LinearCombination::from_terms(label, k, idx)
}

/// The named linear combinations behind the standard estimand catalog for
/// a fit of width `k` (4, 8, or 12 coefficients).
pub fn catalog_combinations(k: usize) -> Vec<LinearCombination> {
    let mut out = Vec::new();
    match k {
        4 => {
            out.push(terms("pre trend: treatment", k, &[(1, 1.0)]));
            out.push(terms("post trend: treatment", k, &[(1, 1.0), (3, 1.0)]));
            out.push(terms("trend change: treatment", k, &[(3, 1.0)]));
            out.push(terms("pre level: treatment", k, &[(0, 1.0)]));
            out.push(terms("post level: treatment", k, &[(0, 1.0), (2, 1.0)]));
            out.push(terms("level change: treatment", k, &[(2, 1.0)]));
        }
        8 | 12 => {
            out.push(terms("pre trend: control 1", k, &[(1, 1.0)]));
            out.push(terms("pre trend: treatment", k, &[(1, 1.0), (5, 1.0)]));
            if k == 12 {
                out.push(terms("pre trend: control 2", k, &[(1, 1.0), (9, 1.0)]));
            }
            out.push(terms("post trend: control 1", k, &[(1, 1.0), (3, 1.0)]));
            out.push(terms(
                "post trend: treatment",
                k,
                &[(1, 1.0), (3, 1.0), (5, 1.0), (7, 1.0)],
            ));
            if k == 12 {
                out.push(terms(
                    "post trend: control 2",
                    k,
                    &[(1, 1.0), (3, 1.0), (9, 1.0), (11, 1.0)],
                ));
            }
            out.push(terms("trend change: control 1", k, &[(3, 1.0)]));
            out.push(terms("trend change: treatment", k, &[(3, 1.0), (7, 1.0)]));
            if k == 12 {
                out.push(terms("trend change: control 2", k, &[(3, 1.0), (11, 1.0)]));
            }
            out.push(terms("trend DiD: treatment vs control 1", k, &[(7, 1.0)]));
            if k == 12 {
                out.push(terms("trend DiD: control 2 vs control 1", k, &[(11, 1.0)]));
                out.push(terms("trend DDD", k, &[(7, 1.0), (11, -1.0)]));
            }
            out.push(terms("pre level: control 1", k, &[(0, 1.0)]));
            out.push(terms("pre level: treatment", k, &[(0, 1.0), (4, 1.0)]));
            if k == 12 {
                out.push(terms("pre level: control 2", k, &[(0, 1.0), (8, 1.0)]));
            }
            out.push(terms("post level: control 1", k, &[(0, 1.0), (2, 1.0)]));
            out.push(terms(
                "post level: treatment",
                k,
                &[(0, 1.0), (2, 1.0), (4, 1.0), (6, 1.0)],
            ));
            if k == 12 {
                out.push(terms(
                    "post level: control 2",
                    k,
                    &[(0, 1.0), (2, 1.0), (8, 1.0), (10, 1.0)],
                ));
            }
            out.push(terms("level change: control 1", k, &[(2, 1.0)]));
            out.push(terms("level change: treatment", k, &[(2, 1.0), (6, 1.0)]));
            if k == 12 {
                out.push(terms("level change: control 2", k, &[(2, 1.0), (10, 1.0)]));
            }
            out.push(terms("level DiD: treatment vs control 1", k, &[(6, 1.0)]));
            if k == 12 {
                out.push(terms("level DiD: control 2 vs control 1", k, &[(10, 1.0)]));
                out.push(terms("level DDD", k, &[(6, 1.0), (10, -1.0)]));
            }
        }
        _ => {}
    }
    out
}

/// Evaluates the full estimand catalog: per-group pre/post trends and
/// levels, their changes at the intervention, the pairwise
/// difference-in-differences contrasts, and (for triple-difference fits)
/// the two DDD estimands. Labels are a stable output contract.
pub fn catalog(fit: &FitResult, level: f64) -> Result<Vec<EstimandResult>> {
    catalog_combinations(fit.k)
        .iter()
        .map(|lc| lincom(fit, lc, level))
        .collect()
}

/// One pre-period balance contrast with its verdict at level alpha.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BalanceRow {
    pub result: EstimandResult,
    /// True when the contrast is compatible with balance (p > alpha).
    pub pass: bool,
}

/// The pre-period comparability checks between the comparison arms.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BalanceReport {
    pub alpha: f64,
    pub rows: Vec<BalanceRow>,
}

impl BalanceReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Tests whether the groups were comparable before the intervention:
/// pre-period level and trend differences for each pair of arms. A
/// contrast "passes" when its p-value exceeds alpha, i.e. the data do not
/// reject balance.
pub fn balance(fit: &FitResult, alpha: f64) -> Result<BalanceReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Spec(format!("alpha {alpha} must be inside (0, 1)")));
    }
    if fit.k < 8 {
        return Err(Error::Spec(
            "balance checks need at least one control group".into(),
        ));
    }
    let k = fit.k;
    let mut combos = vec![
        terms("pre level difference: treatment vs control 1", k, &[(4, 1.0)]),
        terms("pre trend difference: treatment vs control 1", k, &[(5, 1.0)]),
    ];
    if k == 12 {
        combos.push(terms("pre level difference: control 2 vs control 1", k, &[(8, 1.0)]));
        combos.push(terms("pre trend difference: control 2 vs control 1", k, &[(9, 1.0)]));
        combos.push(terms(
            "pre level difference: treatment vs control 2",
            k,
            &[(4, 1.0), (8, -1.0)],
        ));
        combos.push(terms(
            "pre trend difference: treatment vs control 2",
            k,
            &[(5, 1.0), (9, -1.0)],
        ));
    }
    let rows = combos
        .iter()
        .map(|lc| {
            lincom(fit, lc, 0.95).map(|result| {
                let pass = result.p_value > alpha;
                BalanceRow { result, pass }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BalanceReport { alpha, rows })
}

/// Parses a coefficient expression like `b7 - b11` or `2*b3 + 0.5*b6`
/// into a weight vector for a k-coefficient fit.
///
/// Grammar: signed terms joined by `+` or `-`; each term is `bJ` with an
/// optional leading `factor*`. Whitespace is free.
pub fn parse_combination(expr: &str, k: usize) -> Result<LinearCombination> {
    #[derive(Debug)]
    struct Term {
        sign: f64,
        factor: f64,
        index: usize,
    }

    let bad = |msg: String| Error::Expr(format!("'{expr}': {msg}"));
    let mut terms_out: Vec<Term> = Vec::new();
    let mut rest = expr.trim();
    if rest.is_empty() {
        return Err(bad("empty expression".into()));
    }
    let mut first = true;
    while !rest.is_empty() {
        let mut sign = 1.0;
        if let Some(r) = rest.strip_prefix('+') {
            if first {
                return Err(bad("expression cannot start with '+'".into()));
            }
            rest = r.trim_start();
        } else if let Some(r) = rest.strip_prefix('-') {
            sign = -1.0;
            rest = r.trim_start();
        } else if !first {
            return Err(bad(format!("expected '+' or '-' before '{rest}'")));
        }

        // Optional numeric factor followed by '*'.
        let mut factor = 1.0;
        if rest.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
            let end = rest
                .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E'))
                .unwrap_or(rest.len());
            let num = &rest[..end];
            factor = num
                .parse::<f64>()
                .map_err(|_| bad(format!("'{num}' is not a number")))?;
            rest = rest[end..].trim_start();
            rest = rest
                .strip_prefix('*')
                .ok_or_else(|| bad(format!("expected '*' after factor '{num}'")))?
                .trim_start();
        }

        let r = rest
            .strip_prefix('b')
            .ok_or_else(|| bad(format!("expected a coefficient like 'b7' at '{rest}'")))?;
        let end = r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len());
        if end == 0 {
            return Err(bad(format!("expected a coefficient index after 'b' at 'b{r}'")));
        }
        let index: usize = r[..end].parse().map_err(|_| bad("bad coefficient index".into()))?;
        if index >= k {
            return Err(bad(format!(
                "coefficient b{index} is out of range for a {k}-coefficient fit"
            )));
        }
        rest = r[end..].trim_start();
        terms_out.push(Term { sign, factor, index });
        first = false;
    }

    let mut weights = vec![0.0; k];
    for t in &terms_out {
        weights[t.index] += t.sign * t.factor;
    }
    // Canonical label, reconstructed from the parsed terms.
    let mut label = String::new();
    for (i, t) in terms_out.iter().enumerate() {
        if i == 0 {
            if t.sign < 0.0 {
                label.push('-');
            }
        } else {
            label.push_str(if t.sign < 0.0 { " - " } else { " + " });
        }
        if t.factor != 1.0 {
            label.push_str(&format!("{}*", t.factor));
        }
        label.push_str(&format!("b{}", t.index));
    }
    Ok(LinearCombination { label, weights })
}

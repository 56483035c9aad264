//! Human-readable tables and plot output.
//!
//! Tables are fixed-width text with the columns Coefficient/Estimand,
//! Estimate, Std Err, Z, P, and the confidence limits. Estimates,
//! standard errors, test statistics, and limits are printed with two
//! decimals, p-values with three, all rounded half away from zero.
//! P-values smaller than 0.0005 print as `0.000*` with a footnote rather
//! than pretending to be exactly zero.
//!
//! The plot side never re-runs the regression: observed points, the
//! fitted pre- and post-intervention lines, and the pre-trend
//! counterfactual are all laid out from the already-estimated
//! coefficients, per comparison arm, and can be emitted as a JSON
//! document or a self-contained SVG.

use serde::Serialize;

use crate::design::GroupRole;
use crate::error::{Error, Result};
use crate::estimator::FitResult;
use crate::inference::{lincom, BalanceReport, EstimandResult, LinearCombination};

/// Rounds half away from zero at `dp` decimals (the convention used for
/// all printed numbers; `f64::round` ties away from zero).
fn round_half_away(x: f64, dp: i32) -> f64 {
    let m = 10f64.powi(dp);
    // Adding 0.0 normalizes -0.0 so small negatives never print "-0.00".
    (x * m).round() / m + 0.0
}

fn fmt_fixed(x: f64, dp: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{:.*}", dp, round_half_away(x, dp as i32))
}

/// Formats a p-value; the flag reports whether the footnote marker was
/// attached (p below 0.0005).
fn fmt_p(p: f64) -> (String, bool) {
    if p.is_finite() && p < 0.0005 {
        ("0.000*".into(), true)
    } else {
        (fmt_fixed(p, 3), false)
    }
}

const P_FOOTNOTE: &str = "* p < 0.0005";

enum Align {
    Left,
    Right,
}

struct TextTable {
    headers: Vec<String>,
    aligns: Vec<Align>,
    rows: Vec<Vec<String>>,
}

impl TextTable {
    fn new(headers: &[&str]) -> Self {
        let aligns = headers
            .iter()
            .enumerate()
            .map(|(i, _)| if i == 0 { Align::Left } else { Align::Right })
            .collect();
        TextTable {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            aligns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let cols = self.headers.len();
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for c in 0..cols {
                widths[c] = widths[c].max(row[c].len());
            }
        }
        let mut out = String::new();
        let fmt_row = |cells: &[String], widths: &[usize], aligns: &[Align]| -> String {
            let mut line = String::new();
            for (c, cell) in cells.iter().enumerate() {
                if c > 0 {
                    line.push_str("  ");
                }
                match aligns[c] {
                    Align::Left => line.push_str(&format!("{:<width$}", cell, width = widths[c])),
                    Align::Right => line.push_str(&format!("{:>width$}", cell, width = widths[c])),
                }
            }
            while line.ends_with(' ') {
                line.pop();
            }
            line
        };
        out.push_str(&fmt_row(&self.headers, &widths, &self.aligns));
        out.push('\n');
        let total: usize = widths.iter().sum::<usize>() + 2 * (cols - 1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&fmt_row(row, &widths, &self.aligns));
            out.push('\n');
        }
        out
    }
}

fn result_cells(r: &EstimandResult, footnote: &mut bool) -> Vec<String> {
    let (p, marked) = fmt_p(r.p_value);
    *footnote |= marked;
    vec![
        r.label.clone(),
        fmt_fixed(r.estimate, 2),
        fmt_fixed(r.std_err, 2),
        fmt_fixed(r.statistic, 2),
        p,
        fmt_fixed(r.ci_lower, 2),
        fmt_fixed(r.ci_upper, 2),
    ]
}

fn ci_headers(level: f64) -> (String, String) {
    let pct = fmt_fixed(level * 100.0, 0);
    (format!("{pct}% LCL"), format!("{pct}% UCL"))
}

/// The coefficient table for a fit, one row per regression coefficient.
pub fn render_fit_table(fit: &FitResult, level: f64) -> Result<String> {
    let (lcl, ucl) = ci_headers(level);
    let mut table = TextTable::new(&["Coefficient", "Estimate", "Std Err", "Z", "P", &lcl, &ucl]);
    let mut footnote = false;
    for j in 0..fit.k {
        let lc = LinearCombination::from_terms(
            &format!("b{j} ({})", fit.design.column_names[j]),
            fit.k,
            &[(j, 1.0)],
        );
        let r = lincom(fit, &lc, level)?;
        table.push(result_cells(&r, &mut footnote));
    }
    let mut out = format!(
        "Segmented regression: {} observations, {} coefficients\n\
         Newey-West (Bartlett) covariance, lag {}{}\n\n",
        fit.n,
        fit.k,
        fit.hac_lag,
        if fit.spec.dof_adjust { ", small-sample adjusted" } else { "" },
    );
    out.push_str(&table.render());
    if footnote {
        out.push_str(P_FOOTNOTE);
        out.push('\n');
    }
    Ok(out)
}

/// A titled table of estimand rows.
pub fn render_estimands(title: &str, rows: &[EstimandResult]) -> String {
    if rows.is_empty() {
        return String::new();
    }
    let (lcl, ucl) = ci_headers(rows[0].level);
    let mut table = TextTable::new(&["Estimand", "Estimate", "Std Err", "Z", "P", &lcl, &ucl]);
    let mut footnote = false;
    for r in rows {
        table.push(result_cells(r, &mut footnote));
    }
    let mut out = format!("{title}\n\n");
    out.push_str(&table.render());
    if footnote {
        out.push_str(P_FOOTNOTE);
        out.push('\n');
    }
    out
}

/// The balance table with a pass/fail verdict per contrast.
pub fn render_balance(report: &BalanceReport) -> String {
    let (lcl, ucl) = match report.rows.first() {
        Some(row) => ci_headers(row.result.level),
        None => return String::new(),
    };
    let mut table =
        TextTable::new(&["Contrast", "Estimate", "Std Err", "Z", "P", &lcl, &ucl, "Verdict"]);
    let mut footnote = false;
    for row in &report.rows {
        let mut cells = result_cells(&row.result, &mut footnote);
        cells.push(if row.pass { "pass".into() } else { "fail".into() });
        table.push(cells);
    }
    let mut out = format!(
        "Pre-period balance (alpha = {}; pass means balance is not rejected)\n\n",
        report.alpha
    );
    out.push_str(&table.render());
    if footnote {
        out.push_str(P_FOOTNOTE);
        out.push('\n');
    }
    out
}

/// Composes the full report: coefficients, then optional estimand and
/// balance sections.
pub fn render_table(
    fit: &FitResult,
    catalog: Option<&[EstimandResult]>,
    balance: Option<&BalanceReport>,
    level: f64,
) -> Result<String> {
    let mut out = render_fit_table(fit, level)?;
    if let Some(rows) = catalog {
        if !rows.is_empty() {
            out.push('\n');
            out.push_str(&render_estimands("Estimand catalog", rows));
        }
    }
    if let Some(report) = balance {
        out.push('\n');
        out.push_str(&render_balance(report));
    }
    Ok(out)
}

/// Text rendering of the residual diagnostics battery.
pub fn render_diagnostics(report: &crate::diagnostics::DiagnosticsReport) -> String {
    let max_lag = report.mean_acf.len();
    let lag_headers: Vec<String> = (1..=max_lag).map(|j| format!("lag {j}")).collect();

    let mut out = String::from("Residual autocorrelation within series blocks\n\n");
    for (title, pick_acf) in [("ACF", true), ("PACF", false)] {
        let mut headers: Vec<&str> = vec!["Series"];
        headers.extend(lag_headers.iter().map(|s| s.as_str()));
        let mut table = TextTable::new(&headers);
        for s in &report.per_series {
            let mut cells = vec![if s.degenerate {
                format!("{} (no variance)", s.label)
            } else {
                s.label.clone()
            }];
            let values = if pick_acf { &s.acf } else { &s.pacf };
            cells.extend(values.iter().map(|v| fmt_fixed(*v, 3)));
            table.push(cells);
        }
        let mut cells = vec!["average".to_string()];
        let mean = if pick_acf { &report.mean_acf } else { &report.mean_pacf };
        cells.extend(mean.iter().map(|v| fmt_fixed(*v, 3)));
        table.push(cells);
        out.push_str(&format!("{title}\n"));
        out.push_str(&table.render());
        out.push('\n');
    }

    out.push_str("Breusch-Godfrey LM tests (orders 1..max)\n");
    let mut table = TextTable::new(&["Order", "Statistic", "df", "P"]);
    for t in &report.lm_tests {
        table.push(vec![
            if t.degenerate {
                format!("{} (no variance)", t.order)
            } else {
                t.order.to_string()
            },
            fmt_fixed(t.statistic, 3),
            t.df.to_string(),
            fmt_fixed(t.p_value, 3),
        ]);
    }
    out.push_str(&table.render());
    out.push('\n');
    out.push_str(&format!(
        "Approximate 5% band for the averaged ACF: +/-{}\n",
        fmt_fixed(report.band, 3)
    ));
    out.push_str(&format!(
        "Suggested kernel lag: {} (a suggestion from the averaged ACF, not a decision)\n",
        report.suggested_lag
    ));
    out
}

/// A point on the plot, in calendar time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlotPoint {
    pub time: i64,
    pub value: f64,
}

/// A straight-line piece of the fit: its closed time range, the value at
/// the range start, the per-period slope, and the line sampled at each
/// period for convenience.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSegment {
    pub start_time: i64,
    pub end_time: i64,
    /// Fitted value at `start_time`.
    pub intercept: f64,
    /// Change per period (per grid step, not per calendar unit).
    pub slope: f64,
    pub points: Vec<PlotPoint>,
}

/// One comparison arm: observed data (group mean for pooled groups), the
/// fitted pre and post lines, and the counterfactual continuation of the
/// pre-period line across the post period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSeries {
    pub label: String,
    pub units: Vec<String>,
    pub observed: Vec<PlotPoint>,
    pub fitted_pre: PlotSegment,
    pub fitted_post: PlotSegment,
    pub counterfactual: PlotSegment,
}

/// Everything a plotting front end needs, derived purely from the fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotDocument {
    /// Calendar time of the first post-intervention period.
    pub intervention_time: i64,
    pub series: Vec<PlotSeries>,
}

fn segment(times: &[i64], from: usize, to: usize, value_at: impl Fn(usize) -> f64) -> PlotSegment {
    let points: Vec<PlotPoint> = (from..to)
        .map(|t| PlotPoint { time: times[t], value: value_at(t) })
        .collect();
    PlotSegment {
        start_time: times[from],
        end_time: times[to - 1],
        intercept: value_at(from),
        slope: if to - from > 1 { value_at(from + 1) - value_at(from) } else { 0.0 },
        points,
    }
}

/// Lays out the plot for a fit.
pub fn plot_document(fit: &FitResult) -> Result<PlotDocument> {
    let design = &fit.design;
    let n = design.n_periods;
    let t0 = design.first_post;
    let origin = fit.spec.interaction_origin as f64;
    // Calendar times of one series block (all blocks share the grid).
    let times: Vec<i64> = design.row_times[..n].to_vec();

    let mut series = Vec::new();
    for role in [GroupRole::Control1, GroupRole::Treatment, GroupRole::Control2] {
        let blocks: Vec<_> = design.blocks.iter().filter(|b| b.role == role).collect();
        if blocks.is_empty() {
            continue;
        }
        // Observed display series: mean across the arm's blocks.
        let mut observed = vec![0.0; n];
        for block in &blocks {
            for (t, o) in observed.iter_mut().enumerate() {
                *o += design.y[block.start + t];
            }
        }
        let m = blocks.len() as f64;
        let observed: Vec<PlotPoint> = observed
            .iter()
            .zip(&times)
            .map(|(&v, &t)| PlotPoint { time: t, value: v / m })
            .collect();

        // Arm-level line parameters straight from the coefficients.
        let b = &fit.beta;
        let (z1, z2) = match role {
            GroupRole::Control1 => (0.0, 0.0),
            GroupRole::Treatment => if fit.k == 4 { (0.0, 0.0) } else { (1.0, 0.0) },
            GroupRole::Control2 => (0.0, 1.0),
        };
        let pick = |base: usize| -> f64 {
            let mut v = b[base];
            if fit.k >= 8 {
                v += z1 * b[base + 4];
            }
            if fit.k == 12 {
                v += z2 * b[base + 8];
            }
            v
        };
        let (level, slope, dlevel, dslope) = (pick(0), pick(1), pick(2), pick(3));

        let pre_line = move |t: usize| level + slope * t as f64;
        let post_line = move |t: usize| {
            level + slope * t as f64 + dlevel + dslope * (t as f64 - t0 as f64 + origin)
        };

        series.push(PlotSeries {
            label: role.label().to_string(),
            units: blocks.iter().map(|b| b.label.clone()).collect(),
            observed,
            fitted_pre: segment(&times, 0, t0, pre_line),
            fitted_post: segment(&times, t0, n, post_line),
            counterfactual: segment(&times, t0, n, pre_line),
        });
    }
    if series.is_empty() {
        return Err(Error::Numeric("fit has no series blocks to plot".into()));
    }
    Ok(PlotDocument { intervention_time: times[t0], series })
}

/// Serializes the plot document as pretty-printed JSON.
pub fn plot_json(doc: &PlotDocument) -> String {
    let mut json = serde_json::to_string_pretty(doc).expect("plot document serializes");
    json.push('\n');
    json
}

const SVG_WIDTH: f64 = 840.0;
const SVG_HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 44.0;

fn series_color(label: &str) -> &'static str {
    match label {
        "treatment" => "#c0392b",
        "control 1" => "#5d6d7e",
        _ => "#2471a3",
    }
}

/// Renders the plot document as a self-contained SVG string: observed
/// points as markers, fitted lines solid, the counterfactual dashed, and
/// a vertical rule at the intervention.
pub fn render_svg(doc: &PlotDocument) -> String {
    let mut tmin = f64::INFINITY;
    let mut tmax = f64::NEG_INFINITY;
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for s in &doc.series {
        for p in s.observed.iter().chain(s.fitted_pre.points.iter()) {
            tmin = tmin.min(p.time as f64);
            tmax = tmax.max(p.time as f64);
            vmin = vmin.min(p.value);
            vmax = vmax.max(p.value);
        }
        for p in s.fitted_post.points.iter().chain(s.counterfactual.points.iter()) {
            tmin = tmin.min(p.time as f64);
            tmax = tmax.max(p.time as f64);
            vmin = vmin.min(p.value);
            vmax = vmax.max(p.value);
        }
    }
    if tmax <= tmin {
        tmax = tmin + 1.0;
    }
    if vmax <= vmin {
        vmax = vmin + 1.0;
    }
    let pad = 0.05 * (vmax - vmin);
    vmin -= pad;
    vmax += pad;

    let sx = move |t: f64| MARGIN_L + (t - tmin) / (tmax - tmin) * (SVG_WIDTH - MARGIN_L - MARGIN_R);
    let sy =
        move |v: f64| SVG_HEIGHT - MARGIN_B - (v - vmin) / (vmax - vmin) * (SVG_HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" \
         viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Axes.
    let x0 = sx(tmin);
    let x1 = sx(tmax);
    let y0 = sy(vmin);
    let y1 = sy(vmax);
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"#333\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"#333\"/>\n"
    ));
    for i in 0..=4 {
        let v = vmin + (vmax - vmin) * i as f64 / 4.0;
        let y = sy(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{x0}\" y2=\"{y}\" stroke=\"#333\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            x0 - 4.0,
            x0 - 8.0,
            y + 4.0,
            fmt_fixed(v, 1)
        ));
    }
    let t_ticks = 6usize;
    for i in 0..=t_ticks {
        let t = tmin + (tmax - tmin) * i as f64 / t_ticks as f64;
        let x = sx(t);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{}\" stroke=\"#333\"/>\n\
             <text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 4.0,
            y0 + 18.0,
            fmt_fixed(t, 0)
        ));
    }

    // Intervention rule.
    let xi = sx(doc.intervention_time as f64);
    svg.push_str(&format!(
        "<line x1=\"{xi}\" y1=\"{y0}\" x2=\"{xi}\" y2=\"{y1}\" stroke=\"#888\" \
         stroke-dasharray=\"2,3\"/>\n\
         <text x=\"{}\" y=\"{}\" fill=\"#555\">intervention</text>\n",
        xi + 4.0,
        y1 + 12.0
    ));

    let polyline = |points: &[PlotPoint]| -> String {
        points
            .iter()
            .map(|p| format!("{},{}", sx(p.time as f64), sy(p.value)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    for s in &doc.series {
        let color = series_color(&s.label);
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            polyline(&s.fitted_pre.points)
        ));
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            polyline(&s.fitted_post.points)
        ));
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.4\" \
             stroke-dasharray=\"6,4\" opacity=\"0.85\"/>\n",
            polyline(&s.counterfactual.points)
        ));
        for p in &s.observed {
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"2.6\" fill=\"{color}\" opacity=\"0.75\"/>\n",
                sx(p.time as f64),
                sy(p.value)
            ));
        }
    }

    // Legend.
    let mut ly = MARGIN_T + 6.0;
    for s in &doc.series {
        let color = series_color(&s.label);
        let lx = SVG_WIDTH - MARGIN_R - 150.0;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n\
             <text x=\"{}\" y=\"{}\">{}</text>\n",
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            s.label
        ));
        ly += 18.0;
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignSpec;
    use crate::estimator::fit;
    use crate::inference::{balance, catalog};
    use crate::panel::{Observation, PanelSeries};

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(fmt_fixed(0.125, 2), "0.13");
        assert_eq!(fmt_fixed(-0.125, 2), "-0.13");
        assert_eq!(fmt_fixed(2.5, 0), "3");
        assert_eq!(fmt_fixed(-2.5, 0), "-3");
        assert_eq!(fmt_fixed(-11.4283, 2), "-11.43");
        assert_eq!(fmt_fixed(1.0, 2), "1.00");
    }

    #[test]
    fn tiny_negatives_do_not_print_negative_zero() {
        assert_eq!(fmt_fixed(-0.0001, 2), "0.00");
        assert_eq!(fmt_fixed(-0.0, 2), "0.00");
    }

    #[test]
    fn small_p_values_get_the_footnote_marker() {
        assert_eq!(fmt_p(0.0004), ("0.000*".to_string(), true));
        assert_eq!(fmt_p(0.0005), ("0.001".to_string(), false));
        assert_eq!(fmt_p(0.0104), ("0.010".to_string(), false));
        assert_eq!(fmt_p(0.9996), ("1.000".to_string(), false));
    }

    fn demo_fit() -> FitResult {
        let mut rows = Vec::new();
        for (unit, base, trend, shift) in [
            ("c1", 30.0, 0.5, -1.0),
            ("t", 35.0, 0.8, -6.0),
            ("c2", 32.0, 0.4, -2.0),
        ] {
            for t in 0..16i64 {
                let post = if t >= 8 { 1.0 } else { 0.0 };
                let wiggle = ((t * 3 + unit.len() as i64) % 5) as f64 * 0.15;
                rows.push(Observation {
                    unit: unit.into(),
                    time: 1980 + t,
                    outcome: base + trend * t as f64 + shift * post + wiggle,
                });
            }
        }
        let panel = PanelSeries::from_observations(rows).unwrap();
        let spec = DesignSpec::new("t", &["c1"], &["c2"], 1988).with_lag(1);
        fit(&panel, &spec).unwrap()
    }

    #[test]
    fn fit_table_lists_every_coefficient_with_aligned_columns() {
        let f = demo_fit();
        let text = render_fit_table(&f, 0.95).unwrap();
        assert!(text.contains("Coefficient"), "{text}");
        assert!(text.contains("95% LCL") && text.contains("95% UCL"));
        for j in 0..12 {
            assert!(text.contains(&format!("b{j} ")), "missing b{j} in\n{text}");
        }
        // Every data line shares the header line's width envelope.
        let lines: Vec<&str> = text.lines().collect();
        let header_idx = lines.iter().position(|l| l.starts_with("Coefficient")).unwrap();
        let rule = lines[header_idx + 1];
        assert!(rule.chars().all(|c| c == '-'));
        assert!(lines[header_idx + 2].len() <= rule.len());
    }

    #[test]
    fn composed_report_appends_sections_with_titles() {
        let f = demo_fit();
        let cat = catalog(&f, 0.95).unwrap();
        let bal = balance(&f, 0.05).unwrap();
        let text = render_table(&f, Some(&cat), Some(&bal), 0.95).unwrap();
        assert!(text.contains("Estimand catalog"));
        assert!(text.contains("trend DDD"));
        assert!(text.contains("Pre-period balance"));
        assert!(text.contains("Verdict"));
        let only_coefs = render_table(&f, None, None, 0.95).unwrap();
        assert!(!only_coefs.contains("Estimand catalog"));
    }

    #[test]
    fn diagnostics_rendering_lists_series_and_tests() {
        let f = demo_fit();
        let report = crate::diagnostics::diagnose(&f, 3).unwrap();
        let text = render_diagnostics(&report);
        assert!(text.contains("ACF"));
        assert!(text.contains("PACF"));
        assert!(text.contains("lag 3"));
        assert!(text.contains("average"));
        assert!(text.contains("Breusch-Godfrey"));
        assert!(text.contains("Suggested kernel lag"));
        assert!(text.contains("not a decision"));
    }

    #[test]
    fn plot_lines_come_from_the_coefficients() {
        let f = demo_fit();
        let doc = plot_document(&f).unwrap();
        assert_eq!(doc.series.len(), 3);
        assert_eq!(doc.intervention_time, 1988);

        // The fitted points must reproduce the regression prediction.
        for s in &doc.series {
            let role_blocks: Vec<_> = f
                .design
                .blocks
                .iter()
                .filter(|b| b.label == s.units[0])
                .collect();
            let block = role_blocks[0];
            for (i, p) in s.fitted_pre.points.iter().chain(s.fitted_post.points.iter()).enumerate() {
                let row = block.start + i;
                let mut pred = 0.0;
                for j in 0..f.k {
                    pred += f.design.x[(row, j)] * f.beta[j];
                }
                assert!(
                    (p.value - pred).abs() <= 1e-10,
                    "{} at {}: {} vs {}",
                    s.label,
                    p.time,
                    p.value,
                    pred
                );
            }
            // Counterfactual continues the pre slope.
            assert!((s.counterfactual.slope - s.fitted_pre.slope).abs() <= 1e-12);
            assert_eq!(s.counterfactual.start_time, 1988);
            assert_eq!(s.fitted_pre.end_time, 1987);
        }
    }

    #[test]
    fn plot_json_is_valid_and_svg_is_self_contained() {
        let f = demo_fit();
        let doc = plot_document(&f).unwrap();
        let json = plot_json(&doc);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["series"].as_array().unwrap().len(), 3);

        let svg = render_svg(&doc);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("stroke-dasharray"), "counterfactual must be dashed");
        assert!(svg.contains("intervention"));
        assert_eq!(svg.matches("http").count(), 1, "no external references beyond the xmlns");
        assert!(svg.contains("xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(!svg.contains("href"), "no linked resources");
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn pooled_groups_plot_their_mean_series() {
        let mut rows = Vec::new();
        for (unit, base) in [("a", 10.0), ("b", 20.0), ("t", 16.0)] {
            for t in 0..10i64 {
                let post = if t >= 5 { 1.0 } else { 0.0 };
                rows.push(Observation {
                    unit: unit.into(),
                    time: 2000 + t,
                    outcome: base + 0.2 * t as f64 - post + ((t * 7) % 3) as f64 * 0.1,
                });
            }
        }
        let panel = PanelSeries::from_observations(rows).unwrap();
        let spec = DesignSpec::new("t", &["a", "b"], &[], 2005);
        let f = fit(&panel, &spec).unwrap();
        let doc = plot_document(&f).unwrap();
        let c1 = doc.series.iter().find(|s| s.label == "control 1").unwrap();
        assert_eq!(c1.units, vec!["a".to_string(), "b".to_string()]);
        let a = panel.series("a").unwrap();
        let b = panel.series("b").unwrap();
        assert!((c1.observed[3].value - 0.5 * (a[3] + b[3])).abs() <= 1e-12);
    }
}

//! Analysis specification and segmented-regression design matrix.
//!
//! The model is the (up to) twelve-term segmented regression
//!
//! ```text
//! Y = b0 + b1*T + b2*X + b3*XT
//!       + b4*Z1 + b5*Z1T + b6*Z1X + b7*Z1XT
//!       + b8*Z2 + b9*Z2T + b10*Z2X + b11*Z2XT + e
//! ```
//!
//! where `T` is elapsed time (0, 1, 2, ... within each unit), `X` switches
//! to 1 from the first post-intervention period onward, `XT` counts time
//! since the intervention (`X * (T - T0 + origin)` with `T0` the first
//! post period), `Z1` marks the treatment group and `Z2` the second
//! control group. The first control group is the omitted category, so the
//! `Z1*` terms are treatment-vs-control-1 differences and the `Z2*` terms
//! are control-2-vs-control-1 differences.
//!
//! Three designs fall out of one builder:
//! * single group (treated series only, 4 columns),
//! * multiple group (treated + control 1, 8 columns),
//! * triple difference (treated + two control groups, 12 columns).
//!
//! Rows are stacked control 1 first, then treatment, then control 2, each
//! group in unit id order and each unit in time order. Multi-unit groups
//! are pooled: every member unit contributes its own block of rows, all
//! sharing the group's indicator columns. A group-mean collapse is
//! available as an alternative aggregation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{compare_units, PanelSeries};

/// Number of columns in the full triple-difference design.
pub const COEF_COUNT: usize = 12;

/// Short column names, in design order.
pub const COLUMN_NAMES: [&str; COEF_COUNT] = [
    "const", "T", "X", "XT", "Z1", "Z1T", "Z1X", "Z1XT", "Z2", "Z2T", "Z2X", "Z2XT",
];

/// How a multi-unit group enters the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregation {
    /// Each member unit contributes its own rows (pooled panel). The
    /// default: group size then counts toward the sample size and the
    /// autocorrelation structure of every member is visible to the
    /// covariance estimator.
    Pool,
    /// Collapse the group to its per-period mean series first.
    Mean,
}

/// Which arm of the comparison a row block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupRole {
    Control1,
    Treatment,
    Control2,
}

impl GroupRole {
    pub fn label(self) -> &'static str {
        match self {
            GroupRole::Control1 => "control 1",
            GroupRole::Treatment => "treatment",
            GroupRole::Control2 => "control 2",
        }
    }
}

/// Complete description of one estimation problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    /// Treated unit id(s). Usually a single unit; several are pooled.
    pub treat_units: Vec<String>,
    /// First (primary) control group. Empty only for single-group designs.
    pub control1_units: Vec<String>,
    /// Second control group. Empty for single- and multiple-group designs.
    pub control2_units: Vec<String>,
    /// Calendar time of the first post-intervention period.
    pub intervention_time: i64,
    /// Bartlett kernel truncation lag for the covariance estimator.
    /// 0 means heteroskedasticity-robust only.
    pub hac_lag: usize,
    /// Origin of the post-intervention clock: the first post period has
    /// `XT = origin`. The default 0 starts counting at zero.
    pub interaction_origin: i64,
    /// Apply the small-sample scaling n/(n-k) to the robust covariance.
    pub dof_adjust: bool,
    /// Multi-unit group handling.
    pub aggregation: Aggregation,
}

impl DesignSpec {
    /// Spec with the default knobs: no kernel lag, origin 0, small-sample
    /// adjustment on, pooled aggregation.
    pub fn new(
        treat_unit: &str,
        control1_units: &[&str],
        control2_units: &[&str],
        intervention_time: i64,
    ) -> Self {
        DesignSpec {
            treat_units: vec![treat_unit.to_string()],
            control1_units: control1_units.iter().map(|s| s.to_string()).collect(),
            control2_units: control2_units.iter().map(|s| s.to_string()).collect(),
            intervention_time,
            hac_lag: 0,
            interaction_origin: 0,
            dof_adjust: true,
            aggregation: Aggregation::Pool,
        }
    }

    pub fn with_lag(mut self, lag: usize) -> Self {
        self.hac_lag = lag;
        self
    }

    pub fn with_origin(mut self, origin: i64) -> Self {
        self.interaction_origin = origin;
        self
    }

    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    /// Number of regression columns this spec produces: 4, 8, or 12.
    pub fn coef_count(&self) -> usize {
        if self.control1_units.is_empty() {
            4
        } else if self.control2_units.is_empty() {
            8
        } else {
            COEF_COUNT
        }
    }

    /// Checks the spec against a panel: units must exist and be disjoint,
    /// the intervention must leave at least two periods on each side, and
    /// the kernel lag must be shorter than the series.
    pub fn validate(&self, panel: &PanelSeries) -> Result<()> {
        if self.treat_units.is_empty() {
            return Err(Error::Spec("no treated unit given".into()));
        }
        if self.control1_units.is_empty() && !self.control2_units.is_empty() {
            return Err(Error::Spec(
                "a second control group requires a first control group".into(),
            ));
        }
        let mut seen: Vec<&String> = Vec::new();
        for (role, units) in [
            ("treated", &self.treat_units),
            ("control 1", &self.control1_units),
            ("control 2", &self.control2_units),
        ] {
            for unit in units {
                if panel.series(unit).is_none() {
                    return Err(Error::Spec(format!(
                        "{role} unit {unit} is not present in the panel"
                    )));
                }
                if seen.contains(&unit) {
                    return Err(Error::Spec(format!(
                        "unit {unit} appears in more than one group"
                    )));
                }
                seen.push(unit);
            }
        }
        let t0 = panel.time_index(self.intervention_time).ok_or_else(|| {
            Error::Spec(format!(
                "intervention time {} is not on the panel's time grid ({}..{})",
                self.intervention_time,
                panel.times().first().unwrap(),
                panel.times().last().unwrap()
            ))
        })?;
        let n = panel.n_periods();
        if t0 < 2 || n - t0 < 2 {
            return Err(Error::Spec(format!(
                "intervention at {} leaves {} pre and {} post periods; need at least 2 of each",
                self.intervention_time,
                t0,
                n - t0
            )));
        }
        if self.hac_lag >= n {
            return Err(Error::Spec(format!(
                "kernel lag {} must be smaller than the {} periods per series",
                self.hac_lag, n
            )));
        }
        Ok(())
    }
}

/// One comparison arm after aggregation: the series that will enter the
/// regression (several for a pooled group, one for a mean-collapsed or
/// single-unit group) plus bookkeeping about where they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSeries {
    pub role: GroupRole,
    /// One label per series: the unit id, or "mean(a,b,...)".
    pub labels: Vec<String>,
    /// One outcome vector per series, each `n_periods` long.
    pub series: Vec<Vec<f64>>,
    /// The member units, in id order.
    pub member_units: Vec<String>,
}

/// Builds the comparison arms from the panel. The returned vector holds
/// control 1 (when present), treatment, control 2 (when present), in the
/// order their rows will be stacked.
pub fn aggregate_groups(panel: &PanelSeries, spec: &DesignSpec) -> Result<Vec<GroupedSeries>> {
    spec.validate(panel)?;
    let mut out = Vec::new();
    let arms = [
        (GroupRole::Control1, &spec.control1_units),
        (GroupRole::Treatment, &spec.treat_units),
        (GroupRole::Control2, &spec.control2_units),
    ];
    for (role, units) in arms {
        if units.is_empty() {
            continue;
        }
        let mut members: Vec<String> = units.clone();
        members.sort_by(|a, b| compare_units(a, b));
        let picked: Vec<&[f64]> = members
            .iter()
            .map(|u| panel.series(u).expect("validated above"))
            .collect();
        let grouped = match spec.aggregation {
            Aggregation::Pool => GroupedSeries {
                role,
                labels: members.clone(),
                series: picked.iter().map(|s| s.to_vec()).collect(),
                member_units: members,
            },
            Aggregation::Mean => {
                let n = panel.n_periods();
                let mut mean = vec![0.0; n];
                for s in &picked {
                    for (m, v) in mean.iter_mut().zip(s.iter()) {
                        *m += v;
                    }
                }
                for m in &mut mean {
                    *m /= picked.len() as f64;
                }
                let label = if members.len() == 1 {
                    members[0].clone()
                } else {
                    format!("mean({})", members.join(","))
                };
                GroupedSeries { role, labels: vec![label], series: vec![mean], member_units: members }
            }
        };
        out.push(grouped);
    }
    Ok(out)
}

/// A contiguous run of design rows belonging to one series.
#[derive(Debug, Clone, PartialEq)]
pub struct RowBlock {
    pub label: String,
    pub role: GroupRole,
    /// Row range `[start, end)` in the stacked design.
    pub start: usize,
    pub end: usize,
}

/// The assembled regression problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub column_names: Vec<&'static str>,
    /// Per-series row blocks; kernel weighting and residual diagnostics
    /// never cross a block boundary.
    pub blocks: Vec<RowBlock>,
    /// Calendar time of each row.
    pub row_times: Vec<i64>,
    /// Index of the first post-intervention period on the time grid.
    pub first_post: usize,
    pub n_periods: usize,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    /// Writes the design as CSV: block label, time, outcome, then one
    /// column per regressor.
    pub fn to_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["series".to_string(), "time".to_string(), "y".to_string()];
        header.extend(self.column_names.iter().map(|s| s.to_string()));
        wtr.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for block in &self.blocks {
            for row in block.start..block.end {
                let mut record = vec![
                    block.label.clone(),
                    self.row_times[row].to_string(),
                    self.y[row].to_string(),
                ];
                for col in 0..self.x.ncols() {
                    record.push(self.x[(row, col)].to_string());
                }
                wtr.write_record(&record).map_err(|e| Error::Io(e.to_string()))?;
            }
        }
        wtr.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}

/// Builds the stacked design matrix for a spec. Fails when the spec is
/// invalid or the result is numerically rank deficient.
pub fn build_design(panel: &PanelSeries, spec: &DesignSpec) -> Result<DesignMatrix> {
    let groups = aggregate_groups(panel, spec)?;
    let k = spec.coef_count();
    let t0 = panel.time_index(spec.intervention_time).expect("validated");
    let n_periods = panel.n_periods();
    let n_series: usize = groups.iter().map(|g| g.series.len()).sum();
    let n = n_series * n_periods;

    let mut x = DMatrix::zeros(n, k);
    let mut y = DVector::zeros(n);
    let mut blocks = Vec::with_capacity(n_series);
    let mut row_times = Vec::with_capacity(n);

    let mut row = 0;
    for group in &groups {
        let (z1, z2) = match group.role {
            GroupRole::Control1 => (0.0, 0.0),
            GroupRole::Treatment => if k == 4 { (0.0, 0.0) } else { (1.0, 0.0) },
            GroupRole::Control2 => (0.0, 1.0),
        };
        for (label, series) in group.labels.iter().zip(&group.series) {
            let start = row;
            for (t_idx, (&value, &time)) in series.iter().zip(panel.times()).enumerate() {
                let t = t_idx as f64;
                let post = t_idx >= t0;
                let xi = if post { 1.0 } else { 0.0 };
                let xt = if post {
                    (t_idx as i64 - t0 as i64 + spec.interaction_origin) as f64
                } else {
                    0.0
                };
                let base = [1.0, t, xi, xt];
                for (j, &b) in base.iter().enumerate() {
                    x[(row, j)] = b;
                    if k >= 8 {
                        x[(row, 4 + j)] = z1 * b;
                    }
                    if k == 12 {
                        x[(row, 8 + j)] = z2 * b;
                    }
                }
                y[row] = value;
                row_times.push(time);
                row += 1;
            }
            blocks.push(RowBlock { label: label.clone(), role: group.role, start, end: row });
        }
    }

    let design = DesignMatrix {
        x,
        y,
        column_names: COLUMN_NAMES[..k].to_vec(),
        blocks,
        row_times,
        first_post: t0,
        n_periods,
    };
    check_rank(&design)?;
    Ok(design)
}

/// Scales each column to unit length and checks the singular value ratio.
/// A ratio below 1e-8 is treated as rank deficiency, and the columns
/// loading on the offending null direction are named.
fn check_rank(design: &DesignMatrix) -> Result<()> {
    let (n, k) = (design.x.nrows(), design.x.ncols());
    if n < k {
        return Err(Error::Design(format!(
            "{n} rows cannot identify {k} coefficients"
        )));
    }
    let mut scaled = design.x.clone();
    for mut col in scaled.column_iter_mut() {
        let norm = col.norm();
        if norm == 0.0 {
            // A zero column is named directly below via the SVD path;
            // leave it as-is so the ratio test catches it.
            continue;
        }
        col /= norm;
    }
    let svd = scaled.svd(false, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv[sv.len() - 1].min(sv.min());
    if !smax.is_normal() || smin / smax <= 1e-8 {
        let v_t = svd.v_t.expect("requested");
        let null_dir = v_t.row(v_t.nrows() - 1);
        let peak = null_dir.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let culprits: Vec<&str> = (0..k)
            .filter(|&j| null_dir[j].abs() > 0.1 * peak)
            .map(|j| design.column_names[j])
            .collect();
        return Err(Error::Design(format!(
            "design matrix is rank deficient; dependent columns: {}",
            culprits.join(", ")
        )));
    }
    Ok(())
}

/// Human-readable meaning of each coefficient for a given design width.
/// Returned as (short name, description) pairs in coefficient order.
pub fn coefficient_names(k: usize) -> Vec<(String, String)> {
    let single = [
        "pre-period level (intercept)",
        "pre-period trend (slope per period)",
        "level change at the intervention",
        "trend change after the intervention",
    ];
    let verses = [
        ("Z1", "treatment vs control 1"),
        ("Z2", "control 2 vs control 1"),
    ];
    let contrasts = [
        "pre-period level difference",
        "pre-period trend difference",
        "level-change difference",
        "trend-change difference",
    ];
    let mut out = Vec::with_capacity(k);
    for (j, name) in single.iter().enumerate().take(k.min(4)) {
        let desc = if k == 4 {
            name.to_string()
        } else {
            format!("control 1 {name}")
        };
        out.push((format!("b{j}"), desc));
    }
    for (set, (_, vs)) in verses.iter().enumerate() {
        let base = 4 + 4 * set;
        if k < base + 4 {
            break;
        }
        for (j, c) in contrasts.iter().enumerate() {
            out.push((format!("b{}", base + j), format!("{vs}, {c}")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::Observation;

    fn panel_with_units(units: &[(&str, f64)], n: usize) -> PanelSeries {
        let mut rows = Vec::new();
        for &(unit, base) in units {
            for t in 0..n {
                rows.push(Observation {
                    unit: unit.into(),
                    time: 2000 + t as i64,
                    outcome: base + 0.5 * t as f64 + ((t * 7 + unit.len() * 13) % 5) as f64 * 0.1,
                });
            }
        }
        PanelSeries::from_observations(rows).unwrap()
    }

    #[test]
    fn coef_count_follows_groups() {
        let sg = DesignSpec::new("a", &[], &[], 2005);
        let mg = DesignSpec::new("a", &["b"], &[], 2005);
        let ddd = DesignSpec::new("a", &["b"], &["c"], 2005);
        assert_eq!(sg.coef_count(), 4);
        assert_eq!(mg.coef_count(), 8);
        assert_eq!(ddd.coef_count(), 12);
    }

    #[test]
    fn full_design_has_documented_layout() {
        let panel = panel_with_units(&[("trt", 10.0), ("c1", 5.0), ("c2", 7.0)], 10);
        let spec = DesignSpec::new("trt", &["c1"], &["c2"], 2004);
        let d = build_design(&panel, &spec).unwrap();

        assert_eq!(d.k(), 12);
        assert_eq!(d.n(), 30);
        assert_eq!(d.column_names, COLUMN_NAMES.to_vec());
        // Row order: control 1 block, treatment block, control 2 block.
        assert_eq!(d.blocks[0].label, "c1");
        assert_eq!(d.blocks[0].role, GroupRole::Control1);
        assert_eq!(d.blocks[1].label, "trt");
        assert_eq!(d.blocks[2].label, "c2");

        // Control-1 rows carry no indicator columns.
        for row in 0..10 {
            for col in 4..12 {
                assert_eq!(d.x[(row, col)], 0.0);
            }
        }
        // Treatment rows: Z1 block mirrors the base block.
        let trt_first = 10;
        assert_eq!(d.x[(trt_first, 4)], 1.0);
        for row in trt_first..20 {
            for col in 0..4 {
                assert_eq!(d.x[(row, col + 4)], d.x[(row, col)]);
                assert_eq!(d.x[(row, col + 8)], 0.0);
            }
        }

        // Elapsed time is zero-based; X flips at the intervention; the
        // post-intervention clock starts at the origin (default 0).
        assert_eq!(d.first_post, 4);
        assert_eq!(d.x[(0, 1)], 0.0);
        assert_eq!(d.x[(3, 2)], 0.0);
        assert_eq!(d.x[(4, 2)], 1.0);
        assert_eq!(d.x[(4, 3)], 0.0);
        assert_eq!(d.x[(9, 3)], 5.0);
    }

    #[test]
    fn origin_shifts_only_the_interaction_clock() {
        let panel = panel_with_units(&[("trt", 10.0), ("c1", 5.0)], 8);
        let spec = DesignSpec::new("trt", &["c1"], &[], 2004).with_origin(1);
        let d = build_design(&panel, &spec).unwrap();
        assert_eq!(d.x[(4, 3)], 1.0);
        assert_eq!(d.x[(7, 3)], 4.0);
        assert_eq!(d.x[(3, 3)], 0.0);
    }

    #[test]
    fn pooled_group_stacks_unit_blocks_in_id_order() {
        let panel = panel_with_units(&[("9", 1.0), ("10", 2.0), ("2", 3.0), ("t", 4.0)], 6);
        let spec = DesignSpec::new("t", &["10", "9", "2"], &[], 2002);
        let d = build_design(&panel, &spec).unwrap();
        let labels: Vec<&str> = d.blocks.iter().map(|b| b.label.as_str()).collect();
        assert_eq!(labels, vec!["2", "9", "10", "t"]);
        assert_eq!(d.n(), 24);
    }

    #[test]
    fn mean_aggregation_collapses_to_one_block() {
        let panel = panel_with_units(&[("a", 0.0), ("b", 10.0), ("t", 4.0)], 6);
        let spec = DesignSpec::new("t", &["a", "b"], &[], 2002)
            .with_aggregation(Aggregation::Mean);
        let d = build_design(&panel, &spec).unwrap();
        assert_eq!(d.blocks.len(), 2);
        assert_eq!(d.blocks[0].label, "mean(a,b)");
        let a = panel.series("a").unwrap();
        let b = panel.series("b").unwrap();
        for t in 0..6 {
            assert_eq!(d.y[t], 0.5 * (a[t] + b[t]));
        }
    }

    #[test]
    fn validates_unknown_units_and_overlap() {
        let panel = panel_with_units(&[("a", 0.0), ("b", 1.0)], 6);
        let unknown = DesignSpec::new("zz", &["a"], &[], 2002);
        assert!(matches!(unknown.validate(&panel), Err(Error::Spec(_))));
        let overlap = DesignSpec::new("a", &["a"], &[], 2002);
        let err = overlap.validate(&panel).unwrap_err();
        assert_eq!(err, Error::Spec("unit a appears in more than one group".into()));
    }

    #[test]
    fn validates_intervention_window() {
        let panel = panel_with_units(&[("a", 0.0), ("b", 1.0)], 6);
        // First post period at index 1 leaves a single pre period.
        let spec = DesignSpec::new("a", &["b"], &[], 2001);
        assert!(matches!(spec.validate(&panel), Err(Error::Spec(_))));
        // Off-grid intervention time.
        let spec = DesignSpec::new("a", &["b"], &[], 2050);
        assert!(matches!(spec.validate(&panel), Err(Error::Spec(_))));
    }

    #[test]
    fn rank_check_names_collinear_columns() {
        // Intervention at the second-to-last grid point leaves two post
        // periods, making X and XT collinear once origin shifts XT to
        // start at 1... actually use a constant outcome trick instead:
        // duplicate the treated unit as its own control makes Z1 columns
        // collinear with the base block. Simpler: two periods post with
        // origin 1 gives XT = X exactly on a 2-point post window? No —
        // XT would be 1 then 2. Force collinearity directly with a
        // single-unit panel where the intervention removes all pre
        // variation: not reachable through the validated spec. So test
        // the check through a hand-built matrix instead.
        let x = DMatrix::from_row_slice(4, 3, &[
            1.0, 2.0, 3.0,
            1.0, 3.0, 4.0,
            1.0, 4.0, 5.0,
            1.0, 5.0, 6.0,
        ]);
        let y = DVector::zeros(4);
        let design = DesignMatrix {
            x,
            y,
            column_names: vec!["const", "T", "X"],
            blocks: vec![RowBlock { label: "a".into(), role: GroupRole::Treatment, start: 0, end: 4 }],
            row_times: vec![0, 1, 2, 3],
            first_post: 2,
            n_periods: 4,
        };
        let err = check_rank(&design).unwrap_err();
        match err {
            Error::Design(msg) => {
                assert!(msg.contains("rank deficient"), "{msg}");
                assert!(msg.contains("const") && msg.contains('T') && msg.contains('X'), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn coefficient_names_cover_all_widths() {
        let sg = coefficient_names(4);
        assert_eq!(sg.len(), 4);
        assert_eq!(sg[0].0, "b0");
        assert!(sg[0].1.contains("level"));
        let ddd = coefficient_names(12);
        assert_eq!(ddd.len(), 12);
        assert_eq!(ddd[7].1, "treatment vs control 1, trend-change difference");
        assert_eq!(ddd[11].1, "control 2 vs control 1, trend-change difference");
    }

    #[test]
    fn design_csv_export_round_trips_values() {
        let panel = panel_with_units(&[("trt", 10.0), ("c1", 5.0)], 8);
        let spec = DesignSpec::new("trt", &["c1"], &[], 2004);
        let d = build_design(&panel, &spec).unwrap();
        let mut buf = Vec::new();
        d.to_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "series,time,y,const,T,X,XT,Z1,Z1T,Z1X,Z1XT");
        assert_eq!(text.lines().count(), 17);
        let first = lines.next().unwrap();
        assert!(first.starts_with("c1,2000,"), "{first}");
    }
}

//! Interrupted time series estimation with one or two control groups.
//!
//! This crate fits the segmented regression behind single-group,
//! multiple-group, and triple-difference (DDD) interrupted time series
//! designs: per-arm levels and trends before an intervention, their
//! changes after it, and the difference-in-differences / triple-difference
//! contrasts between arms. Inference uses Newey-West
//! heteroskedasticity- and autocorrelation-consistent standard errors.
//!
//! The pieces:
//!
//! * [`panel`] — balanced-panel container and long-format CSV ingestion;
//! * [`design`] — the analysis specification and design-matrix builder;
//! * [`estimator`] — QR-based least squares and the HAC covariance;
//! * [`inference`] — linear combinations, the estimand catalog, and
//!   pre-period balance checks;
//! * [`diagnostics`] — residual ACF/PACF and Breusch-Godfrey tests;
//! * [`simulate`] — a seeded AR(1) Monte Carlo generator and power
//!   analysis;
//! * [`report`] — fixed-width tables and JSON/SVG plot output;
//! * [`cli`] — the `ddd-itsa` command line front end.
//!
//! A classic worked example ships with the crate: annual per-capita
//! cigarette sales around California's 1989 Proposition 99 tobacco
//! program, with Idaho and Montana as the primary control group and
//! Colorado as the second one (see `data/cigsales.csv` and the
//! `examples/` directory).
//!
//! ```
//! use ddd_itsa::{fit, DesignSpec, PanelSeries, CsvSchema};
//!
//! let csv = include_str!("../data/cigsales.csv");
//! let panel = PanelSeries::load_csv(csv.as_bytes(), &CsvSchema::default())?;
//! let spec = DesignSpec::new("3", &["8", "19"], &["4"], 1989).with_lag(1);
//! let result = fit(&panel, &spec)?;
//! assert_eq!(result.k, 12);
//! # Ok::<(), ddd_itsa::Error>(())
//! ```

pub mod cli;
pub mod design;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod panel;
pub mod report;
pub mod simulate;

pub use design::{
    aggregate_groups, build_design, coefficient_names, Aggregation, DesignMatrix, DesignSpec,
    GroupRole, GroupedSeries, COEF_COUNT,
};
pub use error::{Error, Result};
pub use estimator::{fit, newey_west_cov, ols_qr, FitResult, StoredFit};
pub use inference::{
    balance, catalog, lincom, lincom_stored, lincom_with, parse_combination, BalanceReport,
    EstimandResult, LinearCombination, Reference,
};
pub use panel::{CsvSchema, Observation, PanelSeries};
pub use simulate::{power_analysis, simulate_panel, PowerResult, SimulationSpec};

//! Command line front end.
//!
//! Six subcommands mirror the interactive workflow: `fit` prints the
//! coefficient table (optionally with the post-period trends appended and
//! plot/fit artifacts written), `balance` the pre-period contrasts,
//! `posttrend` the post-period trend estimands, `lincom` inference on an
//! arbitrary coefficient expression (from fresh data or a stored fit),
//! `diag` the residual autocorrelation battery, and `simulate` a seeded
//! Monte Carlo power analysis.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, malformed
//! specifications or expressions), 1 for data or numeric errors. Errors
//! print as one-line messages, never stack traces, and a rerun of the
//! same invocation on the same inputs produces byte-identical output.

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::design::{Aggregation, DesignSpec};
use crate::diagnostics::diagnose;
use crate::error::{Error, Result};
use crate::estimator::{fit, FitResult, StoredFit};
use crate::inference::{balance, catalog, lincom, lincom_stored, parse_combination};
use crate::panel::{CsvSchema, PanelSeries};
use crate::report::{
    plot_document, plot_json, render_balance, render_diagnostics, render_estimands,
    render_fit_table, render_svg,
};
use crate::simulate::{power_analysis, SimulationSpec};

/// Environment variable naming the default data directory. A bare
/// `--data` filename is also resolved against it.
pub const DATA_DIR_ENV: &str = "DDD_ITSA_DATA";
const DEFAULT_DATA_FILE: &str = "cigsales.csv";

#[derive(Parser)]
#[command(
    name = "ddd-itsa",
    version,
    about = "Interrupted time series estimation with one or two control groups",
    after_help = "Data files are long-format CSV. When --data is omitted, \
                  $DDD_ITSA_DATA/cigsales.csv is read; a relative --data path \
                  that does not exist locally is also tried under $DDD_ITSA_DATA."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the segmented regression and print the coefficient table
    Fit(FitCmd),
    /// Test pre-period balance between the comparison arms
    Balance(BalanceCmd),
    /// Print the post-period trend of each arm
    Posttrend(PosttrendCmd),
    /// Estimate a linear combination of coefficients, e.g. "b7 - b11"
    Lincom(LincomCmd),
    /// Residual autocorrelation diagnostics for a fitted model
    Diag(DiagCmd),
    /// Simulate panels and estimate rejection rates for an estimand
    Simulate(SimulateCmd),
}

#[derive(Args)]
struct DataArgs {
    /// Long-format CSV file with unit, time, and outcome columns
    #[arg(long)]
    data: Option<PathBuf>,
    /// Column holding the unit id
    #[arg(long, default_value = "state")]
    unit_col: String,
    /// Column holding the (integer) time
    #[arg(long, default_value = "year")]
    time_col: String,
    /// Column holding the outcome
    #[arg(long, default_value = "cigsale")]
    outcome_col: String,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AggregationArg {
    /// Pool member units as separate series (default)
    Pool,
    /// Collapse each group to its per-period mean
    Mean,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Pool => Aggregation::Pool,
            AggregationArg::Mean => Aggregation::Mean,
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Treated unit id
    #[arg(long)]
    treatid: String,
    /// Primary control unit id(s)
    #[arg(long, num_args = 1..)]
    contid: Vec<String>,
    /// Second control unit id(s) (enables the triple difference)
    #[arg(long, num_args = 1..)]
    contid2: Vec<String>,
    /// First post-intervention period (calendar time)
    #[arg(long)]
    trperiod: i64,
    /// Newey-West kernel truncation lag
    #[arg(long, default_value_t = 0)]
    lag: usize,
    /// Value of the post-intervention clock in its first period
    #[arg(long, default_value_t = 0)]
    origin: i64,
    /// Confidence level for intervals
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// How multi-unit groups enter the regression
    #[arg(long, value_enum, default_value_t = AggregationArg::Pool)]
    aggregate: AggregationArg,
}

impl ModelArgs {
    fn spec(&self) -> DesignSpec {
        DesignSpec {
            treat_units: vec![self.treatid.clone()],
            control1_units: self.contid.clone(),
            control2_units: self.contid2.clone(),
            intervention_time: self.trperiod,
            hac_lag: self.lag,
            interaction_origin: self.origin,
            dof_adjust: true,
            aggregation: self.aggregate.into(),
        }
    }
}

#[derive(Args)]
struct FitCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Also print the post-period trend estimands
    #[arg(long)]
    posttrend: bool,
    /// Write the figure (JSON + SVG) with default file names
    #[arg(long)]
    figure: bool,
    /// Write the plot document to this JSON file
    #[arg(long)]
    plot_json: Option<PathBuf>,
    /// Write the plot to this SVG file
    #[arg(long)]
    plot_svg: Option<PathBuf>,
    /// Save the fitted coefficients and covariance as JSON
    #[arg(long)]
    save_fit: Option<PathBuf>,
    /// Export the assembled design matrix as CSV
    #[arg(long)]
    save_design: Option<PathBuf>,
}

#[derive(Args)]
struct BalanceCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Significance level for the balance verdicts
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Args)]
struct PosttrendCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct LincomCmd {
    /// Expression over coefficients, e.g. "b7 - b11" or "2*b3 + b6"
    #[arg(long)]
    expr: String,
    /// Stored fit JSON from `fit --save-fit` (skips refitting)
    #[arg(long, conflicts_with_all = ["data", "treatid", "trperiod"])]
    fit: Option<PathBuf>,
    /// Confidence level
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[command(flatten)]
    data: DataArgs,
    /// Treated unit id (when fitting from data)
    #[arg(long)]
    treatid: Option<String>,
    /// Primary control unit id(s)
    #[arg(long, num_args = 1..)]
    contid: Vec<String>,
    /// Second control unit id(s)
    #[arg(long, num_args = 1..)]
    contid2: Vec<String>,
    /// First post-intervention period
    #[arg(long)]
    trperiod: Option<i64>,
    /// Newey-West kernel truncation lag
    #[arg(long, default_value_t = 0)]
    lag: usize,
    /// Value of the post-intervention clock in its first period
    #[arg(long, default_value_t = 0)]
    origin: i64,
    /// How multi-unit groups enter the regression
    #[arg(long, value_enum, default_value_t = AggregationArg::Pool)]
    aggregate: AggregationArg,
}

#[derive(Args)]
struct DiagCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Largest autocorrelation lag / test order to report
    #[arg(long, default_value_t = 4)]
    max_lag: usize,
}

#[derive(Args)]
struct SimulateCmd {
    /// Master seed; every draw derives from it
    #[arg(long)]
    seed: u64,
    /// Monte Carlo replications
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    /// True coefficients: 12 comma-separated values (default all zero)
    #[arg(long)]
    beta: Option<String>,
    /// AR(1) coefficient of the error process
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Innovation standard deviation
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Periods per unit
    #[arg(long, default_value_t = 31)]
    periods: usize,
    /// Zero-based index of the first post-intervention period
    #[arg(long, default_value_t = 19)]
    intervention: usize,
    /// Units per group as "control1,treatment,control2"
    #[arg(long, default_value = "1,1,1")]
    units: String,
    /// Standard deviation of the per-unit level offset
    #[arg(long, default_value_t = 0.0)]
    unit_noise_sd: f64,
    /// Catalog estimand to test
    #[arg(long, default_value = "trend DDD")]
    target: String,
    /// Rejection threshold
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Kernel lag used when fitting each replication
    #[arg(long, default_value_t = 0)]
    fit_lag: usize,
    /// Also write the result as JSON to this file
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Parses arguments and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve_data(given: &Option<PathBuf>) -> Result<PathBuf> {
    let env_dir = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
    match given {
        Some(path) => {
            if path.exists() {
                return Ok(path.clone());
            }
            if path.is_relative() {
                if let Some(dir) = &env_dir {
                    let candidate = dir.join(path);
                    if candidate.exists() {
                        return Ok(candidate);
                    }
                }
            }
            Err(Error::Io(format!("data file '{}' not found", path.display())))
        }
        None => match env_dir {
            Some(dir) => {
                let candidate = dir.join(DEFAULT_DATA_FILE);
                if candidate.exists() {
                    Ok(candidate)
                } else {
                    Err(Error::Io(format!(
                        "default data file '{}' not found",
                        candidate.display()
                    )))
                }
            }
            None => Err(Error::Spec(format!(
                "no --data given and {DATA_DIR_ENV} is not set"
            ))),
        },
    }
}

fn load_panel(args: &DataArgs) -> Result<PanelSeries> {
    let path = resolve_data(&args.data)?;
    let file = fs::File::open(&path)
        .map_err(|e| Error::Io(format!("cannot open '{}': {e}", path.display())))?;
    let schema = CsvSchema::new(&args.unit_col, &args.time_col, &args.outcome_col);
    PanelSeries::load_csv(file, &schema)
}

fn fit_from(data: &DataArgs, spec: &DesignSpec) -> Result<FitResult> {
    let panel = load_panel(data)?;
    fit(&panel, spec)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(|e| Error::Io(format!("cannot write '{}': {e}", path.display())))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Fit(cmd) => {
            let fitted = fit_from(&cmd.data, &cmd.model.spec())?;
            print!("{}", render_fit_table(&fitted, cmd.model.level)?);
            if cmd.posttrend {
                let rows: Vec<_> = catalog(&fitted, cmd.model.level)?
                    .into_iter()
                    .filter(|r| r.label.starts_with("post trend:"))
                    .collect();
                println!();
                print!("{}", render_estimands("Post-period trends", &rows));
            }
            if let Some(path) = &cmd.save_fit {
                let mut json = serde_json::to_string_pretty(&fitted.to_stored())
                    .expect("stored fit serializes");
                json.push('\n');
                write_text(path, &json)?;
                println!("saved fit: {}", path.display());
            }
            if let Some(path) = &cmd.save_design {
                let mut buf = Vec::new();
                fitted.design.to_csv(&mut buf)?;
                write_text(path, &String::from_utf8(buf).expect("csv is utf-8"))?;
                println!("saved design: {}", path.display());
            }
            let json_path = cmd
                .plot_json
                .clone()
                .or_else(|| cmd.figure.then(|| PathBuf::from("ddd-itsa-plot.json")));
            let svg_path = cmd
                .plot_svg
                .clone()
                .or_else(|| cmd.figure.then(|| PathBuf::from("ddd-itsa-plot.svg")));
            if json_path.is_some() || svg_path.is_some() {
                let doc = plot_document(&fitted)?;
                if let Some(path) = json_path {
                    write_text(&path, &plot_json(&doc))?;
                    println!("saved plot: {}", path.display());
                }
                if let Some(path) = svg_path {
                    write_text(&path, &render_svg(&doc))?;
                    println!("saved plot: {}", path.display());
                }
            }
            Ok(())
        }
        Command::Balance(cmd) => {
            let fitted = fit_from(&cmd.data, &cmd.model.spec())?;
            let report = balance(&fitted, cmd.alpha)?;
            print!("{}", render_balance(&report));
            Ok(())
        }
        Command::Posttrend(cmd) => {
            let fitted = fit_from(&cmd.data, &cmd.model.spec())?;
            let rows: Vec<_> = catalog(&fitted, cmd.model.level)?
                .into_iter()
                .filter(|r| r.label.starts_with("post trend:"))
                .collect();
            print!("{}", render_estimands("Post-period trends", &rows));
            Ok(())
        }
        Command::Lincom(cmd) => {
            let result = if let Some(path) = &cmd.fit {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("cannot read '{}': {e}", path.display())))?;
                let stored: StoredFit = serde_json::from_str(&text)
                    .map_err(|e| Error::Io(format!("'{}' is not a stored fit: {e}", path.display())))?;
                let lc = parse_combination(&cmd.expr, stored.k)?;
                lincom_stored(&stored, &lc, cmd.level)?
            } else {
                let treatid = cmd.treatid.as_ref().ok_or_else(|| {
                    Error::Spec("lincom needs either --fit or --treatid/--trperiod".into())
                })?;
                let trperiod = cmd.trperiod.ok_or_else(|| {
                    Error::Spec("lincom needs either --fit or --treatid/--trperiod".into())
                })?;
                let spec = DesignSpec {
                    treat_units: vec![treatid.clone()],
                    control1_units: cmd.contid.clone(),
                    control2_units: cmd.contid2.clone(),
                    intervention_time: trperiod,
                    hac_lag: cmd.lag,
                    interaction_origin: cmd.origin,
                    dof_adjust: true,
                    aggregation: cmd.aggregate.into(),
                };
                let fitted = fit_from(&cmd.data, &spec)?;
                let lc = parse_combination(&cmd.expr, fitted.k)?;
                lincom(&fitted, &lc, cmd.level)?
            };
            print!("{}", render_estimands("Linear combination", &[result]));
            Ok(())
        }
        Command::Diag(cmd) => {
            let fitted = fit_from(&cmd.data, &cmd.model.spec())?;
            let report = diagnose(&fitted, cmd.max_lag)?;
            print!("{}", render_diagnostics(&report));
            Ok(())
        }
        Command::Simulate(cmd) => {
            let beta_true = match &cmd.beta {
                None => [0.0; 12],
                Some(text) => {
                    let vals: Vec<f64> = text
                        .split(',')
                        .map(|v| {
                            v.trim().parse::<f64>().map_err(|_| {
                                Error::Spec(format!("'{}' in --beta is not a number", v.trim()))
                            })
                        })
                        .collect::<Result<_>>()?;
                    let arr: [f64; 12] = vals.try_into().map_err(|v: Vec<f64>| {
                        Error::Spec(format!("--beta needs 12 values, got {}", v.len()))
                    })?;
                    arr
                }
            };
            let units: Vec<usize> = cmd
                .units
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Spec(format!("'{}' in --units is not a count", v.trim())))
                })
                .collect::<Result<_>>()?;
            let units: [usize; 3] = units.try_into().map_err(|v: Vec<usize>| {
                Error::Spec(format!("--units needs 3 values, got {}", v.len()))
            })?;
            let spec = SimulationSpec {
                beta_true,
                rho: cmd.rho,
                sigma: cmd.sigma,
                n_periods: cmd.periods,
                intervention_index: cmd.intervention,
                units_per_group: units,
                unit_noise_sd: cmd.unit_noise_sd,
                replications: cmd.reps,
                seed: cmd.seed,
            };
            let result = power_analysis(&spec, &cmd.target, cmd.alpha, cmd.fit_lag)?;
            println!("Power analysis: {}", result.target);
            println!(
                "replications {} (completed {}, failed {}), seed {}",
                result.replications, result.completed, result.failed, result.seed
            );
            println!("alpha {:.3}, kernel lag {}", result.alpha, result.hac_lag);
            println!("rejection rate {:.4}", result.rejection_rate);
            println!(
                "mean estimate {:.4}, mean std err {:.4}",
                result.mean_estimate, result.mean_std_err
            );
            if let Some(path) = &cmd.json {
                let mut json =
                    serde_json::to_string_pretty(&result).expect("power result serializes");
                json.push('\n');
                write_text(path, &json)?;
                println!("saved result: {}", path.display());
            }
            Ok(())
        }
    }
}

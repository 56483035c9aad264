//! Monte Carlo data generator and power analysis.
//!
//! Panels are drawn from the same segmented-regression mean structure the
//! estimator fits, plus a per-unit level offset and an AR(1) error
//! process: `e_t = rho * e_{t-1} + sigma * w_t` with the first value
//! drawn from the stationary distribution `N(0, sigma^2 / (1 - rho^2))`.
//!
//! Reproducibility contract: replication `r`, unit `u` always consumes
//! its own ChaCha substream derived from the master seed, independent of
//! how work is scheduled. Running the power analysis serially, in
//! parallel, or replaying a single replication in isolation produces
//! bit-identical data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{Aggregation, DesignSpec, COEF_COUNT};
use crate::error::{Error, Result};
use crate::estimator::fit;
use crate::inference::{catalog_combinations, lincom, LinearCombination};
use crate::panel::{Observation, PanelSeries};

/// Streams reserved per replication; caps the simulated panel at 4096
/// units but lets every (replication, unit) pair own a disjoint stream.
const STREAMS_PER_REP: u64 = 4096;

/// Everything that defines a simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    /// True coefficients of the twelve-term mean structure, in design
    /// order (const, T, X, XT, Z1, Z1T, Z1X, Z1XT, Z2, Z2T, Z2X, Z2XT).
    pub beta_true: [f64; COEF_COUNT],
    /// AR(1) coefficient of the error process, |rho| < 1.
    pub rho: f64,
    /// Innovation standard deviation, >= 0.
    pub sigma: f64,
    /// Periods per unit, >= 4.
    pub n_periods: usize,
    /// Zero-based index of the first post-intervention period; at least
    /// 2 periods must remain on each side.
    pub intervention_index: usize,
    /// Units in (control 1, treatment, control 2).
    pub units_per_group: [usize; 3],
    /// Standard deviation of the per-unit level offset.
    pub unit_noise_sd: f64,
    /// Monte Carlo replications.
    pub replications: usize,
    /// Master seed; all randomness derives from it.
    pub seed: u64,
}

impl SimulationSpec {
    /// A null design: three single-unit groups, 31 periods with the
    /// intervention at index 19, unit noise off, white noise errors.
    pub fn baseline() -> Self {
        SimulationSpec {
            beta_true: [0.0; COEF_COUNT],
            rho: 0.0,
            sigma: 1.0,
            n_periods: 31,
            intervention_index: 19,
            units_per_group: [1, 1, 1],
            unit_noise_sd: 0.0,
            replications: 1000,
            seed: 20260818,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.is_nan() || self.rho.abs() >= 1.0 {
            return Err(Error::Spec(format!("AR(1) coefficient {} must satisfy |rho| < 1", self.rho)));
        }
        if self.sigma.is_nan() || self.sigma < 0.0 || self.unit_noise_sd.is_nan() || self.unit_noise_sd < 0.0 {
            return Err(Error::Spec("noise standard deviations must be non-negative".into()));
        }
        if self.n_periods < 4 {
            return Err(Error::Spec(format!("{} periods cannot hold 2 pre and 2 post", self.n_periods)));
        }
        if self.intervention_index < 2 || self.intervention_index + 2 > self.n_periods {
            return Err(Error::Spec(format!(
                "intervention index {} leaves fewer than 2 pre or post periods in {} total",
                self.intervention_index, self.n_periods
            )));
        }
        if self.units_per_group.contains(&0) {
            return Err(Error::Spec("every group needs at least one unit".into()));
        }
        let total: usize = self.units_per_group.iter().sum();
        if total as u64 > STREAMS_PER_REP {
            return Err(Error::Spec(format!(
                "{} units exceed the {} substreams reserved per replication",
                total, STREAMS_PER_REP
            )));
        }
        if self.replications == 0 {
            return Err(Error::Spec("need at least one replication".into()));
        }
        Ok(())
    }

    /// Unit ids in simulation order: control 1, treatment, control 2.
    fn unit_ids(&self) -> (Vec<String>, Vec<String>, Vec<String>) {
        let name = |prefix: &str, count: usize| {
            (1..=count).map(|i| format!("{prefix}-{i:04}")).collect::<Vec<_>>()
        };
        (
            name("c1", self.units_per_group[0]),
            name("tr", self.units_per_group[1]),
            name("c2", self.units_per_group[2]),
        )
    }

    /// The estimation spec matching this data-generating process.
    pub fn design_spec(&self, hac_lag: usize) -> DesignSpec {
        let (c1, tr, c2) = self.unit_ids();
        DesignSpec {
            treat_units: tr,
            control1_units: c1,
            control2_units: c2,
            intervention_time: self.intervention_index as i64,
            hac_lag,
            interaction_origin: 0,
            dof_adjust: true,
            aggregation: Aggregation::Pool,
        }
    }
}

/// Mean outcome for a unit of group (z1, z2) at period index `t`.
fn mean_at(beta: &[f64; COEF_COUNT], t: usize, first_post: usize, z1: f64, z2: f64) -> f64 {
    let post = t >= first_post;
    let base = [
        1.0,
        t as f64,
        if post { 1.0 } else { 0.0 },
        if post { (t - first_post) as f64 } else { 0.0 },
    ];
    let mut y = 0.0;
    for (j, &b) in base.iter().enumerate() {
        y += beta[j] * b + beta[4 + j] * z1 * b + beta[8 + j] * z2 * b;
    }
    y
}

/// Draws one unit's outcome series on its own substream. The draw order
/// (offset, then the AR chain) is part of the reproducibility contract.
fn simulate_unit(spec: &SimulationSpec, rep: usize, unit_index: u64, z1: f64, z2: f64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    rng.set_stream(rep as u64 * STREAMS_PER_REP + unit_index);

    // One offset draw, then one innovation per period — always consumed
    // in this order, so the same (seed, rep, unit) triple yields the same
    // series no matter which noise scales are zero.
    let offset = spec.unit_noise_sd * rng.sample::<f64, _>(StandardNormal);

    let mut series = Vec::with_capacity(spec.n_periods);
    let mut e = 0.0;
    for t in 0..spec.n_periods {
        let w: f64 = rng.sample(StandardNormal);
        e = if t == 0 {
            spec.sigma / (1.0 - spec.rho * spec.rho).sqrt() * w
        } else {
            spec.rho * e + spec.sigma * w
        };
        series.push(mean_at(&spec.beta_true, t, spec.intervention_index, z1, z2) + offset + e);
    }
    series
}

/// Generates the panel for one replication. Unit ids are `c1-0001`,
/// `tr-0001`, `c2-0001`, ...; the time grid is 0..n_periods.
pub fn simulate_panel(spec: &SimulationSpec, rep: usize) -> Result<PanelSeries> {
    spec.validate()?;
    let (c1, tr, c2) = spec.unit_ids();
    let mut rows = Vec::with_capacity((c1.len() + tr.len() + c2.len()) * spec.n_periods);
    let mut unit_index: u64 = 0;
    for (units, z1, z2) in [(&c1, 0.0, 0.0), (&tr, 1.0, 0.0), (&c2, 0.0, 1.0)] {
        for unit in units {
            let series = simulate_unit(spec, rep, unit_index, z1, z2);
            for (t, &outcome) in series.iter().enumerate() {
                rows.push(Observation { unit: unit.clone(), time: t as i64, outcome });
            }
            unit_index += 1;
        }
    }
    PanelSeries::from_observations(rows)
}

/// Outcome of a power study for one target estimand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    /// Catalog label of the tested estimand.
    pub target: String,
    pub alpha: f64,
    /// Kernel lag used when fitting each replication.
    pub hac_lag: usize,
    pub replications: usize,
    /// Replications that produced a fit.
    pub completed: usize,
    /// Replications whose fit failed (excluded from the rates below).
    pub failed: usize,
    /// Share of completed replications with p < alpha.
    pub rejection_rate: f64,
    pub mean_estimate: f64,
    pub mean_std_err: f64,
    pub seed: u64,
}

/// Estimates rejection rates for one catalog estimand by simulating,
/// fitting, and testing `replications` independent panels.
///
/// Replications run in parallel; results are aggregated in replication
/// order, so the outcome is identical to a serial run. Failed
/// replications are excluded and counted, and more than 1% failures
/// aborts the study with an error.
pub fn power_analysis(
    spec: &SimulationSpec,
    target: &str,
    alpha: f64,
    hac_lag: usize,
) -> Result<PowerResult> {
    spec.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Spec(format!("alpha {alpha} must be inside (0, 1)")));
    }
    let combination: LinearCombination = catalog_combinations(COEF_COUNT)
        .into_iter()
        .find(|lc| lc.label == target)
        .ok_or_else(|| {
            let labels: Vec<String> = catalog_combinations(COEF_COUNT)
                .iter()
                .map(|lc| lc.label.clone())
                .collect();
            Error::Spec(format!(
                "unknown estimand '{target}'; available: {}",
                labels.join("; ")
            ))
        })?;
    let design = spec.design_spec(hac_lag);
    design.validate(&simulate_panel(spec, 0)?)?;

    let outcomes: Vec<Result<(f64, f64, f64)>> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let panel = simulate_panel(spec, rep)?;
            let fitted = fit(&panel, &design)?;
            let r = lincom(&fitted, &combination, 0.95)?;
            Ok((r.estimate, r.std_err, r.p_value))
        })
        .collect();

    let mut completed = 0usize;
    let mut failed = 0usize;
    let mut first_error: Option<Error> = None;
    let mut rejections = 0usize;
    let mut sum_est = 0.0;
    let mut sum_se = 0.0;
    for outcome in outcomes {
        match outcome {
            Ok((est, se, p)) => {
                completed += 1;
                sum_est += est;
                sum_se += se;
                if p < alpha {
                    rejections += 1;
                }
            }
            Err(e) => {
                failed += 1;
                first_error.get_or_insert(e);
            }
        }
    }
    if failed * 100 > spec.replications {
        return Err(Error::Numeric(format!(
            "{failed} of {} replications failed (more than 1%); first failure: {}",
            spec.replications,
            first_error.map(|e| e.to_string()).unwrap_or_default()
        )));
    }
    if completed == 0 {
        return Err(Error::Numeric("no replication completed".into()));
    }
    Ok(PowerResult {
        target: target.to_string(),
        alpha,
        hac_lag,
        replications: spec.replications,
        completed,
        failed,
        rejection_rate: rejections as f64 / completed as f64,
        mean_estimate: sum_est / completed as f64,
        mean_std_err: sum_se / completed as f64,
        seed: spec.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_specs() {
        let mut s = SimulationSpec::baseline();
        s.rho = 1.0;
        assert!(matches!(s.validate(), Err(Error::Spec(_))));
        let mut s = SimulationSpec::baseline();
        s.intervention_index = 30;
        assert!(matches!(s.validate(), Err(Error::Spec(_))));
        let mut s = SimulationSpec::baseline();
        s.units_per_group = [1, 0, 1];
        assert!(matches!(s.validate(), Err(Error::Spec(_))));
        let mut s = SimulationSpec::baseline();
        s.sigma = -1.0;
        assert!(matches!(s.validate(), Err(Error::Spec(_))));
    }

    #[test]
    fn same_replication_reproduces_bit_identical_data() {
        let mut spec = SimulationSpec::baseline();
        spec.rho = 0.5;
        spec.unit_noise_sd = 2.0;
        spec.units_per_group = [2, 1, 2];
        let a = simulate_panel(&spec, 7).unwrap();
        let b = simulate_panel(&spec, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_panel(&spec, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn units_get_independent_streams() {
        let spec = SimulationSpec::baseline();
        let panel = simulate_panel(&spec, 0).unwrap();
        let c1 = panel.series("c1-0001").unwrap();
        let tr = panel.series("tr-0001").unwrap();
        assert_ne!(c1, tr);
    }

    #[test]
    fn noiseless_simulation_recovers_the_truth_exactly() {
        let mut spec = SimulationSpec::baseline();
        spec.sigma = 0.0;
        spec.beta_true = [
            100.0, -1.5, -10.0, 0.7, 5.0, -0.4, -8.0, -2.0, 12.0, -0.1, -6.0, -0.3,
        ];
        let panel = simulate_panel(&spec, 3).unwrap();
        let fitted = fit(&panel, &spec.design_spec(1)).unwrap();
        for j in 0..COEF_COUNT {
            assert!(
                (fitted.beta[j] - spec.beta_true[j]).abs() <= 1e-10,
                "b{j}: {} vs {}",
                fitted.beta[j],
                spec.beta_true[j]
            );
        }
    }

    #[test]
    fn ar1_noise_has_the_requested_persistence() {
        let mut spec = SimulationSpec::baseline();
        spec.rho = 0.8;
        spec.n_periods = 4000;
        spec.intervention_index = 2000;
        let panel = simulate_panel(&spec, 0).unwrap();
        // beta_true is zero, so the treated series is the raw AR(1) chain.
        let e = panel.series("tr-0001").unwrap();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        let denom: f64 = e.iter().map(|v| (v - mean) * (v - mean)).sum();
        let num: f64 = (1..e.len()).map(|t| (e[t] - mean) * (e[t - 1] - mean)).sum();
        let r1 = num / denom;
        assert!((r1 - 0.8).abs() < 0.05, "lag-1 autocorrelation {r1}");
        let var = denom / e.len() as f64;
        let stationary = 1.0 / (1.0 - 0.8f64 * 0.8);
        assert!((var / stationary - 1.0).abs() < 0.2, "variance ratio {}", var / stationary);
    }

    #[test]
    fn power_analysis_is_deterministic_and_accounts_for_every_rep() {
        let mut spec = SimulationSpec::baseline();
        spec.replications = 40;
        spec.n_periods = 21;
        spec.intervention_index = 12;
        let a = power_analysis(&spec, "trend DDD", 0.05, 0).unwrap();
        let b = power_analysis(&spec, "trend DDD", 0.05, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.completed + a.failed, a.replications);
        assert_eq!(a.failed, 0);
        assert!(a.rejection_rate <= 0.35, "null rejection {}", a.rejection_rate);
    }

    #[test]
    fn a_large_effect_is_reliably_detected() {
        let mut spec = SimulationSpec::baseline();
        spec.replications = 40;
        spec.n_periods = 21;
        spec.intervention_index = 12;
        spec.beta_true[7] = 3.0; // strong treatment trend break
        let r = power_analysis(&spec, "trend DDD", 0.05, 0).unwrap();
        assert!(r.rejection_rate >= 0.9, "power {}", r.rejection_rate);
        assert!((r.mean_estimate - 3.0).abs() < 0.5, "mean estimate {}", r.mean_estimate);
    }

    #[test]
    fn unknown_target_is_a_usage_error_listing_the_catalog() {
        let spec = SimulationSpec::baseline();
        let err = power_analysis(&spec, "nonsense", 0.05, 0).unwrap_err();
        match err {
            Error::Spec(msg) => assert!(msg.contains("trend DDD"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }
}

//! Balanced panel container and CSV ingestion.
//!
//! A [`PanelSeries`] holds one outcome observed for several units over a
//! common, equally spaced time grid. Construction validates the panel
//! shape eagerly — duplicate cells, gaps, unbalanced units, and uneven
//! spacing are reported with the offending unit and time named — so the
//! modelling layers can assume a clean rectangle and never re-check.
//!
//! The expected long-format CSV layout is one row per (unit, time) pair.
//! Column names are configurable through [`CsvSchema`]; any remaining
//! column whose values all parse as numbers is carried along as an
//! "extra" series (real-valued pass-through), and non-numeric columns
//! (labels, notes) are ignored.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// One panel cell: a single unit observed at a single time.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Unit identifier, kept as an opaque token ("3", "CA", ...).
    pub unit: String,
    /// Calendar time (for example a year). Must form an equally spaced
    /// grid across the panel.
    pub time: i64,
    /// Outcome value.
    pub outcome: f64,
}

/// Column names used when reading or writing long-format CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub unit: String,
    pub time: String,
    pub outcome: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            unit: "state".into(),
            time: "year".into(),
            outcome: "cigsale".into(),
        }
    }
}

impl CsvSchema {
    pub fn new(unit: &str, time: &str, outcome: &str) -> Self {
        CsvSchema { unit: unit.into(), time: time.into(), outcome: outcome.into() }
    }
}

/// A validated balanced panel: every unit observed at every time, times
/// equally spaced. Storage is unit-major (all periods of the first unit,
/// then all periods of the second, ...), units in id order.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSeries {
    units: Vec<String>,
    times: Vec<i64>,
    outcomes: Vec<f64>,
    extra_names: Vec<String>,
    extras: Vec<Vec<f64>>,
}

/// Ordering used for unit identifiers: numeric when both sides parse as
/// integers (so "9" sorts before "19"), lexicographic otherwise, with a
/// lexicographic tie-break to keep the order total.
pub(crate) fn compare_units(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

impl PanelSeries {
    /// Builds a panel from unordered observations, validating balance.
    pub fn from_observations(observations: Vec<Observation>) -> Result<PanelSeries> {
        let rows: Vec<(Observation, Vec<f64>)> =
            observations.into_iter().map(|o| (o, Vec::new())).collect();
        Self::from_rows(rows, Vec::new())
    }

    fn from_rows(rows: Vec<(Observation, Vec<f64>)>, extra_names: Vec<String>) -> Result<PanelSeries> {
        if rows.is_empty() {
            return Err(Error::Panel("no observations".into()));
        }

        // unit -> time -> row index, catching duplicates as we go
        let mut by_unit: BTreeMap<String, BTreeMap<i64, usize>> = BTreeMap::new();
        for (idx, (obs, _)) in rows.iter().enumerate() {
            if !obs.outcome.is_finite() {
                return Err(Error::Panel(format!(
                    "non-finite outcome for unit {} at time {}",
                    obs.unit, obs.time
                )));
            }
            let times = by_unit.entry(obs.unit.clone()).or_default();
            if times.insert(obs.time, idx).is_some() {
                return Err(Error::Panel(format!(
                    "duplicate observation for unit {} at time {}",
                    obs.unit, obs.time
                )));
            }
        }

        let mut units: Vec<String> = by_unit.keys().cloned().collect();
        units.sort_by(|a, b| compare_units(a, b));

        // Global time grid: the union of all observed times. Every unit
        // must then cover it exactly; uneven global spacing is a gap.
        let mut times: Vec<i64> = Vec::new();
        for unit_times in by_unit.values() {
            for &t in unit_times.keys() {
                if let Err(pos) = times.binary_search(&t) {
                    times.insert(pos, t);
                }
            }
        }
        if times.len() < 2 {
            return Err(Error::Panel("panel needs at least two time periods".into()));
        }
        let step = times[1] - times[0];
        if step <= 0 {
            return Err(Error::Panel("time grid is degenerate".into()));
        }
        for w in times.windows(2) {
            if w[1] - w[0] != step {
                return Err(Error::Panel(format!(
                    "time points are unevenly spaced: step from {} to {} is {}, expected {}",
                    w[0],
                    w[1],
                    w[1] - w[0],
                    step
                )));
            }
        }
        for unit in &units {
            let unit_times = &by_unit[unit];
            for &t in &times {
                if !unit_times.contains_key(&t) {
                    return Err(Error::Panel(format!(
                        "unit {unit} is missing an observation at time {t}"
                    )));
                }
            }
        }

        // Reassemble unit-major, time-minor.
        let n_cells = units.len() * times.len();
        let mut outcomes = Vec::with_capacity(n_cells);
        let mut extras: Vec<Vec<f64>> = vec![Vec::with_capacity(n_cells); extra_names.len()];
        for unit in &units {
            for &t in &times {
                let idx = by_unit[unit][&t];
                outcomes.push(rows[idx].0.outcome);
                for (col, sink) in extras.iter_mut().enumerate() {
                    sink.push(rows[idx].1[col]);
                }
            }
        }

        Ok(PanelSeries { units, times, outcomes, extra_names, extras })
    }

    /// Reads a long-format CSV. `schema` names the unit, time, and outcome
    /// columns; every other column whose values all parse as numbers is
    /// retained as an extra series, and the rest are dropped.
    pub fn load_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<PanelSeries> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = rdr
            .headers()
            .map_err(|e| Error::Csv { line: Some(1), message: e.to_string() })?
            .clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let unit_col = find(&schema.unit).ok_or_else(|| Error::Csv {
            line: Some(1),
            message: format!(
                "missing required column '{}' (header has: {})",
                schema.unit,
                headers.iter().collect::<Vec<_>>().join(", ")
            ),
        })?;
        let time_col = find(&schema.time).ok_or_else(|| Error::Csv {
            line: Some(1),
            message: format!("missing required column '{}'", schema.time),
        })?;
        let outcome_col = find(&schema.outcome).ok_or_else(|| Error::Csv {
            line: Some(1),
            message: format!("missing required column '{}'", schema.outcome),
        })?;

        let candidate_cols: Vec<usize> = (0..headers.len())
            .filter(|&i| i != unit_col && i != time_col && i != outcome_col)
            .collect();
        let mut candidate_numeric = vec![true; candidate_cols.len()];

        let mut rows: Vec<(Observation, Vec<String>)> = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Csv {
                line: e.position().map(|p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line());
            let field = |i: usize| -> Result<&str> {
                record.get(i).ok_or_else(|| Error::Csv {
                    line,
                    message: format!("row has {} fields, expected {}", record.len(), headers.len()),
                })
            };
            let unit = field(unit_col)?.to_string();
            if unit.is_empty() {
                return Err(Error::Csv { line, message: "empty unit id".into() });
            }
            let time_raw = field(time_col)?;
            let time: i64 = time_raw.parse().map_err(|_| Error::Csv {
                line,
                message: format!("time field '{time_raw}' is not an integer"),
            })?;
            let outcome_raw = field(outcome_col)?;
            let outcome: f64 = outcome_raw.parse().map_err(|_| Error::Csv {
                line,
                message: format!("outcome field '{outcome_raw}' is not numeric"),
            })?;
            let mut extras_raw = Vec::with_capacity(candidate_cols.len());
            for (slot, &col) in candidate_cols.iter().enumerate() {
                let raw = field(col)?;
                if raw.parse::<f64>().is_err() {
                    candidate_numeric[slot] = false;
                }
                extras_raw.push(raw.to_string());
            }
            rows.push((Observation { unit, time, outcome }, extras_raw));
        }

        let kept: Vec<usize> = (0..candidate_cols.len()).filter(|&i| candidate_numeric[i]).collect();
        let extra_names: Vec<String> =
            kept.iter().map(|&i| headers[candidate_cols[i]].to_string()).collect();
        let rows: Vec<(Observation, Vec<f64>)> = rows
            .into_iter()
            .map(|(obs, raw)| {
                let vals = kept.iter().map(|&i| raw[i].parse::<f64>().unwrap()).collect();
                (obs, vals)
            })
            .collect();

        Self::from_rows(rows, extra_names)
    }

    /// Writes the panel back out in long format. Loading the output with
    /// the same schema reproduces this panel exactly.
    pub fn to_csv<W: Write>(&self, writer: W, schema: &CsvSchema) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec![schema.unit.clone(), schema.time.clone(), schema.outcome.clone()];
        header.extend(self.extra_names.iter().cloned());
        wtr.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for (u, unit) in self.units.iter().enumerate() {
            for (p, &t) in self.times.iter().enumerate() {
                let cell = u * self.times.len() + p;
                let mut record = vec![unit.clone(), t.to_string(), self.outcomes[cell].to_string()];
                for extra in &self.extras {
                    record.push(extra[cell].to_string());
                }
                wtr.write_record(&record).map_err(|e| Error::Io(e.to_string()))?;
            }
        }
        wtr.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }

    /// Unit identifiers in panel order.
    pub fn units(&self) -> &[String] {
        &self.units
    }

    /// The common time grid, ascending.
    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn n_periods(&self) -> usize {
        self.times.len()
    }

    /// Outcome series for one unit, in time order.
    pub fn series(&self, unit: &str) -> Option<&[f64]> {
        let u = self.units.iter().position(|x| x == unit)?;
        let n = self.times.len();
        Some(&self.outcomes[u * n..(u + 1) * n])
    }

    /// Position of a calendar time on the grid.
    pub fn time_index(&self, time: i64) -> Option<usize> {
        self.times.binary_search(&time).ok()
    }

    /// Names of retained numeric pass-through columns.
    pub fn extra_names(&self) -> &[String] {
        &self.extra_names
    }

    /// Extra series for one unit, in time order.
    pub fn extra(&self, name: &str, unit: &str) -> Option<&[f64]> {
        let col = self.extra_names.iter().position(|x| x == name)?;
        let u = self.units.iter().position(|x| x == unit)?;
        let n = self.times.len();
        Some(&self.extras[col][u * n..(u + 1) * n])
    }
}

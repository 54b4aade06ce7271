//! Scenario files, sweep definitions, the built-in figure presets, and CSV
//! output of sweep results.
//!
//! Scenario file (JSON, one scenario per file, indices in the file are
//! implicit by position):
//!
//! ```json
//! {
//!   "K": 1, "N": 2, "T": 2,
//!   "budgets": [5, 7],
//!   "min_energy": [0, 0],
//!   "zeta": [1, 1],
//!   "gamma": [1, 1],
//!   "capacities": [[4, 2]],
//!   "price_bounds": [[[0.1, 10], [0.1, 2]]]
//! }
//! ```
//!
//! `min_energy`, `zeta`, `gamma` and `price_bounds` are optional and default
//! to 0, 1, 1 and "unbounded". `capacities` is `K` rows of `T` values and
//! `price_bounds`, when given, is `K` rows of `T` `[min, max]` pairs.
//!
//! Sweep file:
//!
//! ```json
//! {
//!   "base": { ...scenario... },
//!   "axis": {"user_budget": {"user": 1}},
//!   "values": [2, 3, 4],
//!   "capacity_profile": [0.25, 0.4, 0.25, 0.1]
//! }
//! ```
//!
//! `axis` is one of `{"user_budget": {"user": n}}`, `"num_periods"` or
//! `{"capacity": {"company": k, "period": t}}`, all 1-based. A
//! `num_periods` sweep with a `capacity_profile` may only request the
//! profile's own length; without one, capacity is split evenly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::format_float;
use crate::leader::{self, EquilibriumSolution};
use crate::model::{PriceBound, Scenario};

/// Largest period count a `num_periods` sweep may request.
pub const MAX_SWEEP_PERIODS: usize = 10_000;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(rename = "K")]
    num_companies: usize,
    #[serde(rename = "N")]
    num_users: usize,
    #[serde(rename = "T")]
    num_periods: usize,
    budgets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min_energy: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    zeta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<Vec<f64>>,
    #[serde(default)]
    capacities: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price_bounds: Option<Vec<Vec<[f64; 2]>>>,
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let capacities = self.capacities.ok_or(Error::MissingCapacities)?;
        // defaults are sized from `budgets`, not from the declared N
        let users = self.budgets.len();
        Ok(Scenario {
            num_companies: self.num_companies,
            num_users: self.num_users,
            num_periods: self.num_periods,
            min_energy: self.min_energy.unwrap_or_else(|| vec![0.0; users]),
            zeta: self.zeta.unwrap_or_else(|| vec![1.0; users]),
            gamma: self.gamma.unwrap_or_else(|| vec![1.0; users]),
            budgets: self.budgets,
            capacities,
            price_bounds: self.price_bounds.map(|rows| {
                rows.into_iter()
                    .map(|r| {
                        r.into_iter()
                            .map(|[lo, hi]| PriceBound::new(lo, hi))
                            .collect()
                    })
                    .collect()
            }),
        })
    }

    fn from_scenario(s: &Scenario) -> Self {
        Self {
            num_companies: s.num_companies,
            num_users: s.num_users,
            num_periods: s.num_periods,
            budgets: s.budgets.clone(),
            min_energy: Some(s.min_energy.clone()),
            zeta: Some(s.zeta.clone()),
            gamma: Some(s.gamma.clone()),
            capacities: Some(s.capacities.clone()),
            price_bounds: s.price_bounds.as_ref().map(|rows| {
                rows.iter()
                    .map(|r| r.iter().map(|b| [b.min, b.max]).collect())
                    .collect()
            }),
        }
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates a scenario from JSON text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(parse_error)?;
    let s = file.into_scenario()?;
    s.ensure_valid()?;
    Ok(s)
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    parse_scenario(&fs::read_to_string(path)?)
}

/// Serializes a scenario in the file grammar accepted by [`parse_scenario`].
pub fn scenario_to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from_scenario(s)).expect("scenario serializes")
}

/// The quantity a sweep varies. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepAxis {
    UserBudget { user: usize },
    NumPeriods,
    Capacity { company: usize, period: usize },
}

impl SweepAxis {
    pub fn label(&self) -> String {
        match self {
            SweepAxis::UserBudget { user } => format!("budget_u{}", user + 1),
            SweepAxis::NumPeriods => "num_periods".to_string(),
            SweepAxis::Capacity { company, period } => {
                format!("capacity_c{}_t{}", company + 1, period + 1)
            }
        }
    }
}

/// A one-parameter family of scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Scenario,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Per-period capacity fractions applied when the period count changes.
    pub capacity_profile: Option<Vec<f64>>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSweep(m));
        if self.values.is_empty() {
            return bad("values must be nonempty".into());
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return bad("values must be finite".into());
        }
        let increasing = self.values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return bad("values must be strictly monotone".into());
        }
        if let Some(profile) = &self.capacity_profile {
            if profile.is_empty() || profile.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
                return bad("capacity_profile fractions must be positive".into());
            }
            let sum: f64 = profile.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return bad(format!("capacity_profile sums to {sum}, expected 1"));
            }
        }
        match self.axis {
            SweepAxis::UserBudget { user } => {
                if user >= self.base.num_users || user >= self.base.budgets.len() {
                    return bad(format!("user {} out of range", user + 1));
                }
            }
            SweepAxis::NumPeriods => {
                for &v in &self.values {
                    if v.fract() != 0.0 || v < 1.0 || v > MAX_SWEEP_PERIODS as f64 {
                        return bad(format!(
                            "num_periods values must be integers in 1..={MAX_SWEEP_PERIODS}, got {v}"
                        ));
                    }
                    if let Some(profile) = &self.capacity_profile {
                        if profile.len() as f64 != v {
                            return bad(format!(
                                "capacity_profile has {} fractions but {v} periods requested",
                                profile.len()
                            ));
                        }
                    }
                }
            }
            SweepAxis::Capacity { company, period } => {
                let ok = self
                    .base
                    .capacities
                    .get(company)
                    .is_some_and(|row| period < row.len());
                if !ok {
                    return bad(format!(
                        "capacity slot ({}, {}) out of range",
                        company + 1,
                        period + 1
                    ));
                }
            }
        }
        Ok(())
    }

    /// The scenario at one sweep value (not validated).
    pub fn materialize(&self, value: f64) -> Result<Scenario> {
        let mut s = self.base.clone();
        match self.axis {
            SweepAxis::UserBudget { user } => s.budgets[user] = value,
            SweepAxis::Capacity { company, period } => s.capacities[company][period] = value,
            SweepAxis::NumPeriods => {
                let periods = value as usize;
                s = redistribute_periods(&s, periods, self.capacity_profile.as_deref())?;
            }
        }
        Ok(s)
    }
}

/// Re-slices every company's total capacity over `periods` periods, either by
/// `profile` fractions (whose length must equal `periods`) or evenly.
///
/// Price bounds, when present, take each company's first-period interval.
pub fn redistribute_periods(
    s: &Scenario,
    periods: usize,
    profile: Option<&[f64]>,
) -> Result<Scenario> {
    if let Some(p) = profile {
        if p.len() != periods {
            return Err(Error::InvalidSweep(format!(
                "capacity_profile has {} fractions but {periods} periods requested",
                p.len()
            )));
        }
    }
    let mut out = s.clone();
    out.num_periods = periods;
    out.capacities = s
        .capacities
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            match profile {
                Some(p) => p.iter().map(|f| total * f).collect(),
                None => vec![total / periods as f64; periods],
            }
        })
        .collect();
    out.price_bounds = s.price_bounds.as_ref().map(|rows| {
        rows.iter()
            .map(|r| r.first().map(|b| vec![*b; periods]).unwrap_or_default())
            .collect()
    });
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum AxisFile {
    UserBudget { user: usize },
    NumPeriods,
    Capacity { company: usize, period: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    base: ScenarioFile,
    axis: AxisFile,
    values: Vec<f64>,
    #[serde(default)]
    capacity_profile: Option<Vec<f64>>,
}

fn one_based(i: usize, what: &str) -> Result<usize> {
    i.checked_sub(1)
        .ok_or_else(|| Error::InvalidSweep(format!("{what} index is 1-based, got 0")))
}

/// Parses and validates a sweep definition from JSON text.
pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec> {
    let file: SweepFile = serde_json::from_str(text).map_err(parse_error)?;
    let axis = match file.axis {
        AxisFile::UserBudget { user } => SweepAxis::UserBudget {
            user: one_based(user, "user")?,
        },
        AxisFile::NumPeriods => SweepAxis::NumPeriods,
        AxisFile::Capacity { company, period } => SweepAxis::Capacity {
            company: one_based(company, "company")?,
            period: one_based(period, "period")?,
        },
    };
    let spec = SweepSpec {
        base: file.base.into_scenario()?,
        axis,
        values: file.values,
        capacity_profile: file.capacity_profile,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_sweep_spec(path: impl AsRef<Path>) -> Result<SweepSpec> {
    parse_sweep_spec(&fs::read_to_string(path)?)
}

/// Budgets of the five-user figure scenarios, user 1 first.
const FIG1_BUDGETS: [f64; 5] = [10.0, 10.0, 15.0, 20.0, 25.0];
const FIG1_CAPACITIES: [f64; 3] = [10.0, 15.0, 20.0];
/// Morning, afternoon, evening, late night.
pub const FIG2_PROFILE: [f64; 4] = [0.25, 0.40, 0.25, 0.10];

fn fig1_base() -> Scenario {
    Scenario::new(
        FIG1_BUDGETS.to_vec(),
        FIG1_CAPACITIES.iter().map(|&g| vec![g]).collect(),
    )
}

fn fig3_base() -> Scenario {
    let budgets = [5.0, 10.0, 15.0, 20.0, 25.0]
        .iter()
        .flat_map(|&b| std::iter::repeat_n(b, 10))
        .collect();
    Scenario::new(budgets, vec![vec![300.0]])
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 3] = ["fig1", "fig2", "fig3"];

/// The three built-in experiments.
///
/// * `fig1`: three companies, five users, one period, user 1's budget swept
///   over 2..=42.
/// * `fig2`: as `fig1` with four periods and each company's capacity split
///   25/40/25/10.
/// * `fig3`: one company, fifty users in five budget groups, 1..=50 periods
///   with 300 units of capacity spread evenly.
pub fn preset(name: &str) -> Result<SweepSpec> {
    let budget_axis = || (2..=42).map(f64::from).collect::<Vec<_>>();
    match name {
        "fig1" => Ok(SweepSpec {
            base: fig1_base(),
            axis: SweepAxis::UserBudget { user: 0 },
            values: budget_axis(),
            capacity_profile: None,
        }),
        "fig2" => Ok(SweepSpec {
            base: redistribute_periods(&fig1_base(), 4, Some(&FIG2_PROFILE))?,
            axis: SweepAxis::UserBudget { user: 0 },
            values: budget_axis(),
            capacity_profile: Some(FIG2_PROFILE.to_vec()),
        }),
        "fig3" => Ok(SweepSpec {
            base: fig3_base(),
            axis: SweepAxis::NumPeriods,
            values: (1..=50).map(f64::from).collect(),
            capacity_profile: None,
        }),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Per-row numbers extracted from a solved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RowData {
    pub num_periods: usize,
    /// Slot-ordered prices.
    pub prices: Vec<f64>,
    pub utilities: Vec<f64>,
    pub spends: Vec<f64>,
    pub total_demands: Vec<f64>,
    pub verdicts: Vec<String>,
    pub revenues: Vec<f64>,
    /// 1-based `(company, period)`.
    pub clamped: Vec<(usize, usize)>,
}

impl RowData {
    pub fn from_solution(s: &Scenario, sol: &EquilibriumSolution) -> Self {
        Self {
            num_periods: s.num_periods,
            prices: sol.prices.as_slice().to_vec(),
            utilities: sol.utilities.clone(),
            spends: sol.spends.clone(),
            total_demands: (0..s.num_users)
                .map(|n| sol.demands.user_grid(n).iter().sum())
                .collect(),
            verdicts: sol
                .feasibility
                .verdicts
                .iter()
                .map(|v| v.to_string())
                .collect(),
            revenues: sol.revenues.clone(),
            clamped: sol
                .clamped_slots
                .iter()
                .map(|&(k, t)| (k + 1, t + 1))
                .collect(),
        }
    }

    pub fn is_all_feasible(&self) -> bool {
        self.verdicts.iter().all(|v| v == "feasible")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// Solver output, or the error message when this row failed.
    pub outcome: std::result::Result<RowData, String>,
}

/// One row per sweep value, with a column schema fixed for the whole sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub axis_label: String,
    pub num_companies: usize,
    /// Widest period count over all rows; narrower rows leave trailing
    /// price cells empty.
    pub max_periods: usize,
    pub num_users: usize,
    pub rows: Vec<SweepRow>,
}

impl ResultTable {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec![self.axis_label.clone()];
        for k in 1..=self.num_companies {
            for t in 1..=self.max_periods {
                h.push(format!("p_c{k}_t{t}"));
            }
        }
        for n in 1..=self.num_users {
            h.push(format!("utility_u{n}"));
            h.push(format!("spend_u{n}"));
            h.push(format!("demand_u{n}"));
            h.push(format!("verdict_u{n}"));
        }
        for k in 1..=self.num_companies {
            h.push(format!("revenue_c{k}"));
        }
        h.push("clamped".to_string());
        h.push("error".to_string());
        h
    }

    pub fn record(&self, row: &SweepRow) -> Vec<String> {
        let width = self.header().len();
        let mut r = Vec::with_capacity(width);
        r.push(format_float(row.value));
        match &row.outcome {
            Ok(d) => {
                for k in 0..self.num_companies {
                    for t in 0..self.max_periods {
                        r.push(if t < d.num_periods {
                            format_float(d.prices[k * d.num_periods + t])
                        } else {
                            String::new()
                        });
                    }
                }
                for n in 0..self.num_users {
                    r.push(format_float(d.utilities[n]));
                    r.push(format_float(d.spends[n]));
                    r.push(format_float(d.total_demands[n]));
                    r.push(d.verdicts[n].clone());
                }
                for rev in &d.revenues {
                    r.push(format_float(*rev));
                }
                let clamped: Vec<String> =
                    d.clamped.iter().map(|(k, t)| format!("{k}:{t}")).collect();
                r.push(clamped.join(";"));
                r.push(String::new());
            }
            Err(msg) => {
                r.resize(width - 1, String::new());
                r.push(msg.clone());
            }
        }
        r
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Sweep values of rows where some user fails the budget test.
    pub fn infeasible_values(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| matches!(&r.outcome, Ok(d) if !d.is_all_feasible()))
            .map(|r| r.value)
            .collect()
    }
}

/// Solves every scenario of the sweep in value order. A failing row records
/// its error and the sweep continues.
pub fn run_sweep(spec: &SweepSpec) -> Result<ResultTable> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.values.len());
    let mut max_periods = 0;
    for &value in &spec.values {
        let outcome = spec
            .materialize(value)
            .and_then(|s| {
                let sol = leader::solve_stackelberg(&s)?;
                Ok(RowData::from_solution(&s, &sol))
            })
            .map_err(|e| e.to_string());
        if let Ok(d) = &outcome {
            max_periods = max_periods.max(d.num_periods);
        }
        rows.push(SweepRow { value, outcome });
    }
    if max_periods == 0 {
        max_periods = spec.base.num_periods;
    }
    Ok(ResultTable {
        axis_label: spec.axis.label(),
        num_companies: spec.base.num_companies,
        max_periods,
        num_users: spec.base.num_users,
        rows,
    })
}

/// Writes the table as CSV: header row, then one record per sweep value.
pub fn write_csv<W: Write>(table: &ResultTable, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(table.header())?;
    for row in &table.rows {
        w.write_record(table.record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(table: &ResultTable, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    write_csv(table, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"K": 1, "N": 1, "T": 1, "budgets": [1], "capacities": [[1]]}"#;

    #[test]
    fn minimal_text_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.zeta, vec![1.0]);
        assert_eq!(s.gamma, vec![1.0]);
        assert_eq!(s.min_energy, vec![0.0]);
        assert!(s.price_bounds.is_none());
    }

    #[test]
    fn missing_capacities_is_named() {
        let err = parse_scenario(r#"{"K": 1, "N": 1, "T": 1, "budgets": [1]}"#).unwrap_err();
        assert_eq!(err.to_string(), "capacities required");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_scenario("{\n  \"K\": 1,\n  \"N\": oops\n}").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_runs_on_load() {
        let err =
            parse_scenario(r#"{"K": 1, "N": 1, "T": 1, "budgets": [1], "capacities": [[0]]}"#)
                .unwrap_err();
        assert!(err.to_string().contains("all capacities zero"));
        let err =
            parse_scenario(r#"{"K": 1, "N": 3, "T": 1, "budgets": [1], "capacities": [[1]]}"#)
                .unwrap_err();
        assert!(matches!(err, Error::InvalidScenario(_)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"K": 1, "N": 1, "T": 1, "budgets": [1], "capacities": [[1]], "extra": 1}"#;
        assert!(matches!(parse_scenario(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn price_bounds_parse() {
        let text = r#"{"K": 1, "N": 1, "T": 2, "budgets": [1], "capacities": [[1, 2]],
                       "price_bounds": [[[0.1, 10], [0.1, 2]]]}"#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.price_bound(0, 1), Some(PriceBound::new(0.1, 2.0)));
    }

    #[test]
    fn preset_axes() {
        let fig1 = preset("fig1").unwrap();
        assert_eq!(fig1.axis, SweepAxis::UserBudget { user: 0 });
        assert_eq!(fig1.values.first(), Some(&2.0));
        assert_eq!(fig1.values.last(), Some(&42.0));
        assert_eq!(fig1.values.len(), 41);

        let fig2 = preset("fig2").unwrap();
        assert_eq!(fig2.capacity_profile, Some(vec![0.25, 0.40, 0.25, 0.10]));
        assert_eq!(fig2.base.capacities[0], vec![2.5, 4.0, 2.5, 1.0]);
        assert_eq!(fig2.base.num_periods, 4);

        let fig3 = preset("fig3").unwrap();
        let s = fig3.materialize(50.0).unwrap();
        assert_eq!(s.capacities, vec![vec![6.0; 50]]);
        assert_eq!(s.num_users, 50);
        assert_eq!(s.budgets[9], 5.0);
        assert_eq!(s.budgets[10], 10.0);
        assert_eq!(s.budgets[49], 25.0);

        assert!(matches!(preset("nosuch"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn sweep_spec_validation() {
        let mut spec = preset("fig1").unwrap();
        spec.values = vec![];
        assert!(spec.validate().is_err());
        spec.values = vec![1.0, 3.0, 2.0];
        assert!(spec.validate().is_err());
        spec.values = vec![3.0, 2.0, 1.0];
        assert!(spec.validate().is_ok());
        spec.capacity_profile = Some(vec![0.5, 0.4]);
        assert!(spec.validate().is_err());

        let mut spec = preset("fig3").unwrap();
        spec.values = vec![1.0, 2.5];
        assert!(spec.validate().is_err());
        spec.values = vec![1.0, 1e9];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn num_periods_profile_length_must_match() {
        let mut spec = preset("fig3").unwrap();
        spec.capacity_profile = Some(vec![0.5, 0.5]);
        spec.values = vec![2.0, 3.0];
        assert!(spec.materialize(2.0).is_ok());
        assert!(spec.materialize(3.0).is_err());
        assert!(matches!(run_sweep(&spec), Err(Error::InvalidSweep(_))));
        spec.values = vec![2.0];
        assert!(run_sweep(&spec).unwrap().rows[0].outcome.is_ok());
    }

    #[test]
    fn sweep_file_round_trip_of_axis() {
        let text = format!(
            r#"{{"base": {MINIMAL}, "axis": {{"capacity": {{"company": 1, "period": 1}}}}, "values": [1, 2]}}"#
        );
        let spec = parse_sweep_spec(&text).unwrap();
        assert_eq!(
            spec.axis,
            SweepAxis::Capacity {
                company: 0,
                period: 0
            }
        );
        let text = format!(r#"{{"base": {MINIMAL}, "axis": "num_periods", "values": [1, 2]}}"#);
        assert_eq!(parse_sweep_spec(&text).unwrap().axis, SweepAxis::NumPeriods);
        let text = format!(
            r#"{{"base": {MINIMAL}, "axis": {{"user_budget": {{"user": 0}}}}, "values": [1]}}"#
        );
        assert!(parse_sweep_spec(&text).is_err());
    }

    #[test]
    fn failing_rows_are_recorded() {
        let spec = SweepSpec {
            base: Scenario::new(vec![0.0], vec![vec![1.0]]),
            axis: SweepAxis::UserBudget { user: 0 },
            values: vec![0.0, 1.0],
            capacity_profile: None,
        };
        let table = run_sweep(&spec).unwrap();
        assert_eq!(table.failed_rows(), 1);
        let rec = table.record(&table.rows[0]);
        assert_eq!(rec.len(), table.header().len());
        assert!(rec.last().unwrap().contains("all budgets zero"));
    }

    #[test]
    fn empty_table_is_header_only() {
        let table = ResultTable {
            axis_label: "x".into(),
            num_companies: 1,
            max_periods: 1,
            num_users: 1,
            rows: vec![],
        };
        let mut buf = Vec::new();
        write_csv(&table, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.ends_with('\n'));
    }
}

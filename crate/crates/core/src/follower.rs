//! User-side best response and the minimum-budget participation test.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{DemandSchedule, PriceSchedule, Scenario};

/// Absolute slack on threshold comparisons.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    NonnegativityViolated,
    MinEnergyViolated,
    BothViolated,
}

impl Verdict {
    pub fn is_feasible(self) -> bool {
        self == Verdict::Feasible
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Feasible => "feasible",
            Verdict::NonnegativityViolated => "nonnegativity_violated",
            Verdict::MinEnergyViolated => "min_energy_violated",
            Verdict::BothViolated => "both_violated",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-user budget thresholds and verdicts at one price schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Smallest budget that keeps every demand nonnegative.
    pub f1: Vec<f64>,
    /// Smallest budget that meets the minimum-energy requirement.
    pub f2: Vec<f64>,
    pub verdicts: Vec<Verdict>,
}

impl FeasibilityReport {
    pub fn all_feasible(&self) -> bool {
        self.verdicts.iter().all(|v| v.is_feasible())
    }

    /// 0-based indices of users that fail the test.
    pub fn infeasible_users(&self) -> Vec<usize> {
        self.verdicts
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_feasible())
            .map(|(n, _)| n)
            .collect()
    }
}

fn check_prices(s: &Scenario, p: &PriceSchedule) -> Result<()> {
    // positivity is enforced when the schedule is built
    p.check_shape(s)
}

/// Closed-form demand of user `n` at prices `p`, in slot order:
///
/// `d_{n,k}(t) = (B_n + ζ_n Σ p) / (K·T·p_k(t)) − ζ_n`
///
/// Values are not clamped. Consult [`check_feasibility`] before treating the
/// result as a valid demand.
pub fn best_response(s: &Scenario, n: usize, p: &PriceSchedule) -> Result<Vec<f64>> {
    s.check_user(n)?;
    check_prices(s, p)?;
    Ok(response_grid(
        s.budgets[n],
        s.zeta[n],
        s.num_slots(),
        p.as_slice(),
        p.total(),
    ))
}

pub(crate) fn response_grid(
    budget: f64,
    zeta: f64,
    slots: usize,
    prices: &[f64],
    price_sum: f64,
) -> Vec<f64> {
    let numerator = budget + zeta * price_sum;
    let kt = slots as f64;
    prices
        .iter()
        .map(|&p| numerator / (kt * p) - zeta)
        .collect()
}

/// Demands of every user at prices `p`.
pub fn demand_schedule(s: &Scenario, p: &PriceSchedule) -> Result<DemandSchedule> {
    check_prices(s, p)?;
    let total = p.total();
    let grids = (0..s.num_users)
        .map(|n| response_grid(s.budgets[n], s.zeta[n], s.num_slots(), p.as_slice(), total))
        .collect();
    DemandSchedule::from_user_grids(s.num_companies, s.num_periods, grids)
}

/// `(f_{n,1}, f_{n,2})` for a user with shift `zeta` and energy floor
/// `min_energy` facing slot-ordered `prices`.
pub fn thresholds(zeta: f64, min_energy: f64, prices: &[f64]) -> (f64, f64) {
    let kt = prices.len() as f64;
    let sum: f64 = prices.iter().sum();
    let max = prices.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inv_sum: f64 = prices.iter().map(|&p| 1.0 / (kt * p)).sum();
    let f1 = zeta * (kt * max - sum);
    let f2 = (min_energy + zeta * kt) / inv_sum - zeta * sum;
    (f1, f2)
}

/// Budget thresholds and per-user verdicts at prices `p`.
pub fn check_feasibility(s: &Scenario, p: &PriceSchedule) -> Result<FeasibilityReport> {
    check_prices(s, p)?;
    let mut report = FeasibilityReport {
        f1: Vec::with_capacity(s.num_users),
        f2: Vec::with_capacity(s.num_users),
        verdicts: Vec::with_capacity(s.num_users),
    };
    for n in 0..s.num_users {
        let (f1, f2) = thresholds(s.zeta[n], s.min_energy[n], p.as_slice());
        let b = s.budgets[n];
        let nonneg = b >= f1 - FEASIBILITY_TOL;
        let energy = b >= f2 - FEASIBILITY_TOL;
        let verdict = match (nonneg, energy) {
            (true, true) => Verdict::Feasible,
            (false, true) => Verdict::NonnegativityViolated,
            (true, false) => Verdict::MinEnergyViolated,
            (false, false) => Verdict::BothViolated,
        };
        report.f1.push(f1);
        report.f2.push(f2);
        report.verdicts.push(verdict);
    }
    Ok(report)
}

/// Sum of every entry of a demand grid.
pub fn total_demand(grid: &[f64]) -> f64 {
    grid.iter().sum()
}

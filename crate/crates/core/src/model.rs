//! Game instance types and the elementary evaluations shared by the solver.
//!
//! All grids are stored flat in slot order: company-major, period-minor, so
//! slot `(k, t)` lives at `k * T + t`. Indices are 0-based in the API and
//! 1-based in every message and file.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Regulatory interval a company's price must stay within for one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBound {
    pub min: f64,
    pub max: f64,
}

impl PriceBound {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.min && p <= self.max
    }
}

/// A full game instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub num_companies: usize,
    pub num_users: usize,
    pub num_periods: usize,
    /// Per-user budget `B_n`.
    pub budgets: Vec<f64>,
    /// Per-user minimum total energy `E_n^min`.
    pub min_energy: Vec<f64>,
    /// Per-user utility scale `γ_n`.
    pub gamma: Vec<f64>,
    /// Per-user utility shift `ζ_n`.
    pub zeta: Vec<f64>,
    /// `capacities[k][t]` is the power company `k` can sell in period `t`.
    pub capacities: Vec<Vec<f64>>,
    /// Optional `[k][t]` price intervals.
    pub price_bounds: Option<Vec<Vec<PriceBound>>>,
}

impl Scenario {
    /// Builds a scenario with `ζ_n = γ_n = 1`, `E_n^min = 0` and no price
    /// bounds. The counts are taken from the shapes of the arguments.
    pub fn new(budgets: Vec<f64>, capacities: Vec<Vec<f64>>) -> Self {
        let num_users = budgets.len();
        let num_companies = capacities.len();
        let num_periods = capacities.first().map_or(0, Vec::len);
        Self {
            num_companies,
            num_users,
            num_periods,
            min_energy: vec![0.0; num_users],
            gamma: vec![1.0; num_users],
            zeta: vec![1.0; num_users],
            budgets,
            capacities,
            price_bounds: None,
        }
    }

    pub fn with_zeta(mut self, zeta: Vec<f64>) -> Self {
        self.zeta = zeta;
        self
    }

    pub fn with_gamma(mut self, gamma: Vec<f64>) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_min_energy(mut self, min_energy: Vec<f64>) -> Self {
        self.min_energy = min_energy;
        self
    }

    pub fn with_price_bounds(mut self, bounds: Vec<Vec<PriceBound>>) -> Self {
        self.price_bounds = Some(bounds);
        self
    }

    /// Number of (company, period) slots, `K·T`.
    pub fn num_slots(&self) -> usize {
        self.num_companies * self.num_periods
    }

    pub fn slot_index(&self, company: usize, period: usize) -> usize {
        company * self.num_periods + period
    }

    /// Inverse of [`Scenario::slot_index`].
    pub fn slot_of(&self, index: usize) -> (usize, usize) {
        (index / self.num_periods, index % self.num_periods)
    }

    pub fn capacity(&self, company: usize, period: usize) -> f64 {
        self.capacities[company][period]
    }

    /// Capacities flattened in slot order.
    pub fn capacity_vector(&self) -> Vec<f64> {
        self.capacities.iter().flatten().copied().collect()
    }

    pub fn price_bound(&self, company: usize, period: usize) -> Option<PriceBound> {
        self.price_bounds.as_ref().map(|b| b[company][period])
    }

    pub fn aggregates(&self) -> Aggregates {
        Aggregates::of(self)
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        validate_scenario(self)
    }

    /// Validates and converts the violation list into an [`Error`].
    pub fn ensure_valid(&self) -> Result<()> {
        self.validate().map_err(Error::InvalidScenario)
    }

    pub(crate) fn check_user(&self, n: usize) -> Result<()> {
        check_index("user", n, self.num_users)
    }

    pub(crate) fn check_company(&self, k: usize) -> Result<()> {
        check_index("company", k, self.num_companies)
    }

    pub(crate) fn check_period(&self, t: usize) -> Result<()> {
        check_index("period", t, self.num_periods)
    }
}

fn check_index(kind: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            kind,
            index: index + 1,
            len,
        })
    }
}

/// Population aggregates `Z = Σ ζ_n` and `B = Σ B_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregates {
    pub zeta_sum: f64,
    pub budget_sum: f64,
}

impl Aggregates {
    pub fn of(s: &Scenario) -> Self {
        Self {
            zeta_sum: s.zeta.iter().sum(),
            budget_sum: s.budgets.iter().sum(),
        }
    }
}

/// Returns every violated scenario invariant, or `Ok(())`.
pub fn validate_scenario(s: &Scenario) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    for (count, name) in [
        (s.num_companies, "num_companies"),
        (s.num_users, "num_users"),
        (s.num_periods, "num_periods"),
    ] {
        if count == 0 {
            v.push(Violation::ZeroCount(name));
        }
    }

    let per_user: [(&'static str, &Vec<f64>); 4] = [
        ("budgets", &s.budgets),
        ("min_energy", &s.min_energy),
        ("gamma", &s.gamma),
        ("zeta", &s.zeta),
    ];
    let mut shapes_ok = true;
    for (field, values) in per_user {
        if values.len() != s.num_users {
            shapes_ok = false;
            v.push(Violation::LengthMismatch {
                field,
                expected: s.num_users,
                found: values.len(),
            });
        } else if values.iter().any(|x| !x.is_finite()) {
            v.push(Violation::NonFinite { field });
        }
    }
    if s.capacities.len() != s.num_companies {
        shapes_ok = false;
        v.push(Violation::LengthMismatch {
            field: "capacities",
            expected: s.num_companies,
            found: s.capacities.len(),
        });
    }
    for row in &s.capacities {
        if row.len() != s.num_periods {
            shapes_ok = false;
            v.push(Violation::LengthMismatch {
                field: "capacities row",
                expected: s.num_periods,
                found: row.len(),
            });
        }
    }
    if let Some(bounds) = &s.price_bounds {
        if bounds.len() != s.num_companies || bounds.iter().any(|r| r.len() != s.num_periods) {
            shapes_ok = false;
            v.push(Violation::LengthMismatch {
                field: "price_bounds",
                expected: s.num_slots(),
                found: bounds.iter().map(Vec::len).sum(),
            });
        }
    }
    if !shapes_ok {
        return Err(v);
    }

    for n in 0..s.num_users {
        let user = n + 1;
        if s.budgets[n] < 0.0 {
            v.push(Violation::NegativeBudget { user });
        }
        if s.min_energy[n] < 0.0 {
            v.push(Violation::NegativeMinEnergy { user });
        }
        if s.gamma[n] <= 0.0 {
            v.push(Violation::NonPositiveGamma { user });
        }
        if s.zeta[n] <= 0.0 {
            v.push(Violation::NonPositiveZeta { user });
        }
    }

    let mut any_positive = false;
    for (k, row) in s.capacities.iter().enumerate() {
        for (t, &g) in row.iter().enumerate() {
            if !g.is_finite() {
                v.push(Violation::NonFinite {
                    field: "capacities",
                });
            } else if g < 0.0 {
                v.push(Violation::NegativeCapacity {
                    company: k + 1,
                    period: t + 1,
                });
            } else if g > 0.0 {
                any_positive = true;
            }
        }
    }
    if s.num_slots() > 0 && !any_positive {
        v.push(Violation::AllCapacitiesZero);
    }

    if let Some(bounds) = &s.price_bounds {
        for (k, row) in bounds.iter().enumerate() {
            for (t, b) in row.iter().enumerate() {
                let ok = b.min.is_finite() && b.max.is_finite() && b.min > 0.0 && b.min <= b.max;
                if !ok {
                    v.push(Violation::InvalidPriceBound {
                        company: k + 1,
                        period: t + 1,
                    });
                }
            }
        }
    }

    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Prices `p_k(t)` announced by every company for every period.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSchedule {
    num_companies: usize,
    num_periods: usize,
    values: Vec<f64>,
}

impl PriceSchedule {
    /// Builds a schedule from slot-ordered values; every price must be
    /// finite and strictly positive.
    pub fn new(num_companies: usize, num_periods: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_companies * num_periods {
            return Err(Error::Shape(format!(
                "price schedule has {} values, expected {}",
                values.len(),
                num_companies * num_periods
            )));
        }
        if let Some(i) = values.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::NonPositivePrice {
                company: i / num_periods + 1,
                period: i % num_periods + 1,
                price: values[i],
            });
        }
        Ok(Self {
            num_companies,
            num_periods,
            values,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != t) {
            return Err(Error::Shape("ragged price rows".into()));
        }
        Self::new(k, t, rows.into_iter().flatten().collect())
    }

    /// A schedule with every slot at the same price.
    pub fn uniform(num_companies: usize, num_periods: usize, price: f64) -> Result<Self> {
        Self::new(
            num_companies,
            num_periods,
            vec![price; num_companies * num_periods],
        )
    }

    pub fn num_companies(&self) -> usize {
        self.num_companies
    }

    pub fn num_periods(&self) -> usize {
        self.num_periods
    }

    pub fn get(&self, company: usize, period: usize) -> f64 {
        self.values[company * self.num_periods + period]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// `Σ_{k,t} p_k(t)`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Same schedule with slot `(company, period)` replaced.
    pub fn with_price(&self, company: usize, period: usize, price: f64) -> Result<Self> {
        let mut values = self.values.clone();
        values[company * self.num_periods + period] = price;
        Self::new(self.num_companies, self.num_periods, values)
    }

    pub(crate) fn check_shape(&self, s: &Scenario) -> Result<()> {
        if self.num_companies != s.num_companies || self.num_periods != s.num_periods {
            return Err(Error::Shape(format!(
                "price schedule is {}x{}, scenario expects {}x{}",
                self.num_companies, self.num_periods, s.num_companies, s.num_periods
            )));
        }
        Ok(())
    }
}

/// Demands `d_{n,k}(t)` of every user from every company in every period.
///
/// Entries are nonnegative whenever every user passes the budget feasibility
/// test; the schedule itself does not clamp, so an infeasible user shows up
/// as negative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSchedule {
    num_users: usize,
    num_companies: usize,
    num_periods: usize,
    values: Vec<f64>,
}

impl DemandSchedule {
    pub fn new(
        num_users: usize,
        num_companies: usize,
        num_periods: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != num_users * num_companies * num_periods {
            return Err(Error::Shape(format!(
                "demand schedule has {} values, expected {}",
                values.len(),
                num_users * num_companies * num_periods
            )));
        }
        Ok(Self {
            num_users,
            num_companies,
            num_periods,
            values,
        })
    }

    pub fn zeros(num_users: usize, num_companies: usize, num_periods: usize) -> Self {
        Self {
            num_users,
            num_companies,
            num_periods,
            values: vec![0.0; num_users * num_companies * num_periods],
        }
    }

    /// Stacks per-user slot grids.
    pub fn from_user_grids(
        num_companies: usize,
        num_periods: usize,
        grids: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = grids.len();
        let slots = num_companies * num_periods;
        if grids.iter().any(|g| g.len() != slots) {
            return Err(Error::Shape(format!(
                "every user grid must have {slots} slots"
            )));
        }
        Self::new(n, num_companies, num_periods, grids.concat())
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn get(&self, user: usize, company: usize, period: usize) -> f64 {
        let slots = self.num_companies * self.num_periods;
        self.values[user * slots + company * self.num_periods + period]
    }

    pub fn set(&mut self, user: usize, company: usize, period: usize, value: f64) {
        let slots = self.num_companies * self.num_periods;
        self.values[user * slots + company * self.num_periods + period] = value;
    }

    /// The slot-ordered demand grid of one user.
    pub fn user_grid(&self, user: usize) -> &[f64] {
        let slots = self.num_companies * self.num_periods;
        &self.values[user * slots..(user + 1) * slots]
    }

    /// `Σ_n d_{n,k}(t)`.
    pub fn slot_total(&self, company: usize, period: usize) -> f64 {
        (0..self.num_users)
            .map(|n| self.get(n, company, period))
            .sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&d| d >= 0.0)
    }

    pub(crate) fn check_shape(&self, s: &Scenario) -> Result<()> {
        if self.num_users != s.num_users
            || self.num_companies != s.num_companies
            || self.num_periods != s.num_periods
        {
            return Err(Error::Shape(format!(
                "demand schedule is {}x{}x{}, scenario expects {}x{}x{}",
                self.num_users,
                self.num_companies,
                self.num_periods,
                s.num_users,
                s.num_companies,
                s.num_periods
            )));
        }
        Ok(())
    }
}

/// `γ Σ ln(ζ + d)` over a slot grid; errors when any `ζ + d ≤ 0`.
pub(crate) fn grid_utility(gamma: f64, zeta: f64, grid: &[f64], user: usize) -> Result<f64> {
    let mut acc = 0.0;
    for &d in grid {
        let arg = zeta + d;
        if arg <= 0.0 {
            return Err(Error::UtilityUndefined { user: user + 1 });
        }
        acc += arg.ln();
    }
    Ok(gamma * acc)
}

/// Log utility of user `n`: `γ_n Σ_k Σ_t ln(ζ_n + d_{n,k}(t))`.
pub fn user_utility(s: &Scenario, n: usize, d: &DemandSchedule) -> Result<f64> {
    s.check_user(n)?;
    d.check_shape(s)?;
    grid_utility(s.gamma[n], s.zeta[n], d.user_grid(n), n)
}

/// Revenue of company `k`: `Σ_t p_k(t) Σ_n d_{n,k}(t)`.
pub fn company_revenue(
    s: &Scenario,
    k: usize,
    p: &PriceSchedule,
    d: &DemandSchedule,
) -> Result<f64> {
    s.check_company(k)?;
    p.check_shape(s)?;
    d.check_shape(s)?;
    Ok((0..s.num_periods)
        .map(|t| p.get(k, t) * d.slot_total(k, t))
        .sum())
}

/// Money user `n` spends: `Σ_k Σ_t p_k(t) d_{n,k}(t)`.
pub fn user_spend(s: &Scenario, n: usize, p: &PriceSchedule, d: &DemandSchedule) -> Result<f64> {
    s.check_user(n)?;
    p.check_shape(s)?;
    d.check_shape(s)?;
    Ok(grid_spend(p.as_slice(), d.user_grid(n)))
}

pub(crate) fn grid_spend(prices: &[f64], grid: &[f64]) -> f64 {
    prices.iter().zip(grid).map(|(p, d)| p * d).sum()
}

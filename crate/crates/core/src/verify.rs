//! Cross-checks the closed-form solution against the oracles on given
//! scenarios plus seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::follower;
use crate::leader::{self, EquilibriumSolution};
use crate::model::{self, Scenario};
use crate::oracle;

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 20_240_917;

pub const TOL_KKT_AGREEMENT: f64 = 1e-6;
pub const TOL_KKT_CERTIFICATE: f64 = 1e-8;
pub const TOL_PRICE_AGREEMENT: f64 = 1e-9;
pub const TOL_CAPACITY_BALANCE: f64 = 1e-9;
pub const TOL_BUDGET_EXHAUSTION: f64 = 1e-10;
pub const TOL_REVENUE_IDENTITY: f64 = 1e-9;
pub const TOL_PROPORTIONALITY: f64 = 1e-12;
pub const TOL_GAP_LAW: f64 = 1e-9;
pub const TOL_GRID_GAIN: f64 = 1e-9;

/// Relative price steps used for the deviation checks.
pub const GAP_STEPS: [f64; 3] = [1e-3, 1e-2, 1e-1];

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random instances checked in addition to the given scenarios.
    pub trials: usize,
    /// Test hook: multiplies the first equilibrium price by this factor
    /// before the solution-level checks run.
    pub corrupt_price: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            trials: 0,
            corrupt_price: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    /// Number of individual comparisons folded into `max_residual`.
    pub samples: usize,
}

impl CheckResult {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            max_residual: 0.0,
            tolerance,
            samples: 0,
        }
    }

    fn record(&mut self, residual: f64) {
        self.samples += 1;
        // NaN must fail the check
        if residual.is_nan() {
            self.max_residual = f64::NAN;
        } else if !self.max_residual.is_nan() {
            self.max_residual = self.max_residual.max(residual);
        }
    }

    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }

    pub fn skipped(&self) -> bool {
        self.samples == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub scenarios: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Checks {
    kkt_agreement: CheckResult,
    kkt_certificate: CheckResult,
    dense_agreement: CheckResult,
    sherman_morrison: CheckResult,
    linear_residual: CheckResult,
    positivity: CheckResult,
    capacity_balance: CheckResult,
    budget_exhaustion: CheckResult,
    revenue_identity: CheckResult,
    proportionality: CheckResult,
    gap_law: CheckResult,
    grid_best_response: CheckResult,
}

impl Checks {
    fn new() -> Self {
        Self {
            kkt_agreement: CheckResult::new("kkt agreement", TOL_KKT_AGREEMENT),
            kkt_certificate: CheckResult::new("kkt certificate", TOL_KKT_CERTIFICATE),
            dense_agreement: CheckResult::new("dense solve agreement", TOL_PRICE_AGREEMENT),
            sherman_morrison: CheckResult::new("sherman-morrison agreement", TOL_PRICE_AGREEMENT),
            linear_residual: CheckResult::new("linear system residual", TOL_PRICE_AGREEMENT),
            positivity: CheckResult::new("positivity", 0.0),
            capacity_balance: CheckResult::new("capacity balance", TOL_CAPACITY_BALANCE),
            budget_exhaustion: CheckResult::new("budget exhaustion", TOL_BUDGET_EXHAUSTION),
            revenue_identity: CheckResult::new("revenue identity", TOL_REVENUE_IDENTITY),
            proportionality: CheckResult::new("inverse proportionality", TOL_PROPORTIONALITY),
            gap_law: CheckResult::new("gap law", TOL_GAP_LAW),
            grid_best_response: CheckResult::new("grid best response", TOL_GRID_GAIN),
        }
    }

    fn into_vec(self) -> Vec<CheckResult> {
        vec![
            self.kkt_agreement,
            self.kkt_certificate,
            self.dense_agreement,
            self.sherman_morrison,
            self.linear_residual,
            self.positivity,
            self.capacity_balance,
            self.budget_exhaustion,
            self.revenue_identity,
            self.proportionality,
            self.gap_law,
            self.grid_best_response,
        ]
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Deviation between a measured best-response gap and the predicted law.
///
/// Relative to the predicted value; a single-slot game predicts zero, so
/// there the scale is `Z·|ε|`.
pub fn gap_law_residual(s: &Scenario, eps: f64, measured: f64) -> f64 {
    let expected = leader::gap_law(s, eps);
    let scale = if s.num_slots() > 1 {
        expected.abs()
    } else {
        s.aggregates().zeta_sum * eps.abs()
    };
    (measured - expected).abs() / scale.max(f64::MIN_POSITIVE)
}

/// Runs every check on `scenarios` followed by `opts.trials` random ones.
pub fn verify(scenarios: &[Scenario], opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Checks::new();
    for s in scenarios {
        check_scenario(s, opts.corrupt_price, &mut checks)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.trials {
        let s = random_feasible_scenario(&mut rng, 3, 4, 10);
        check_scenario(&s, opts.corrupt_price, &mut checks)?;
    }
    Ok(VerifyReport {
        scenarios: scenarios.len() + opts.trials,
        checks: checks.into_vec(),
    })
}

fn check_scenario(s: &Scenario, corrupt: Option<f64>, c: &mut Checks) -> Result<()> {
    let unbounded = leader::equilibrium_prices(s)?;

    // price-system routes
    let system = leader::build_price_system(s)?;
    let dense = oracle::dense_solve_prices(&system)?;
    let inverse = oracle::sherman_morrison_inverse(&system)?;
    let via_inverse = inverse.mul_vec(&system.rhs);
    let closed = unbounded.as_slice();
    let lhs = system.apply(closed);
    for i in 0..system.dim {
        c.dense_agreement.record(relative(dense[i], closed[i]));
        c.sherman_morrison
            .record(relative(via_inverse[i], closed[i]));
        c.linear_residual.record(relative(lhs[i], system.rhs[i]));
    }
    let agg = s.aggregates();
    let caps = s.capacity_vector();
    let reference = closed[0] * (caps[0] + agg.zeta_sum);
    for (p, g) in closed.iter().zip(&caps) {
        c.proportionality
            .record(relative(p * (g + agg.zeta_sum), reference));
    }

    let mut sol = leader::solve_stackelberg(s)?;
    if let Some(factor) = corrupt {
        let mut prices = sol.prices.as_slice().to_vec();
        prices[0] *= factor;
        let prices = model::PriceSchedule::new(s.num_companies, s.num_periods, prices)?;
        sol = leader::evaluate_at(s, prices, sol.clamped_slots.clone())?;
    }
    check_solution(s, &sol, c)
}

fn check_solution(s: &Scenario, sol: &EquilibriumSolution, c: &mut Checks) -> Result<()> {
    let p = &sol.prices;
    for &price in p.as_slice() {
        c.positivity.record(if price > 0.0 && price.is_finite() {
            0.0
        } else {
            1.0
        });
    }
    c.capacity_balance.record(sol.max_balance_residual(s));

    for n in 0..s.num_users {
        if !sol.feasibility.verdicts[n].is_feasible() {
            continue;
        }
        let b = s.budgets[n];
        let residual = if b > 0.0 {
            relative(sol.spends[n], b)
        } else {
            sol.spends[n].abs()
        };
        c.budget_exhaustion.record(residual);

        if sol.feasibility.f1[n] <= b && b > 0.0 {
            let closed = follower::best_response(s, n, p)?;
            let (numeric, cert) = oracle::solve_user_kkt(s, n, p)?;
            let diff = closed
                .iter()
                .zip(&numeric)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            c.kkt_agreement.record(diff);
            c.kkt_certificate.record(
                cert.stationarity_residual
                    .max(cert.complementarity_residual),
            );
        }
    }

    for k in 0..s.num_companies {
        let by_identity = leader::revenue_identity(s, p, k)?;
        // the identity is a difference of terms of size B/K and Z*sum(p)/K
        let agg = s.aggregates();
        let kf = s.num_companies as f64;
        let scale = sol.revenues[k]
            .abs()
            .max(by_identity.abs())
            .max(agg.budget_sum / kf)
            .max(agg.zeta_sum * p.total() / kf);
        c.revenue_identity
            .record((sol.revenues[k] - by_identity).abs() / scale.max(f64::MIN_POSITIVE));
    }

    // deviation checks only make sense at the unclamped equilibrium
    if !sol.clamped_slots.is_empty() {
        return Ok(());
    }
    for k in 0..s.num_companies {
        for t in 0..s.num_periods {
            let price = p.get(k, t);
            for step in GAP_STEPS {
                let eps = step * price;
                let up = leader::best_response_gap(s, p, k, t, eps)?;
                c.gap_law.record(gap_law_residual(s, eps, up));
                let down = leader::best_response_gap(s, p, k, t, -eps)?;
                let scale = agg_scale(s, eps);
                c.gap_law.record((down / scale).max(0.0));
            }
        }
        let gain = oracle::grid_best_response_check(s, p, k, &oracle::default_grid())?;
        c.grid_best_response.record(gain.max(0.0));
    }
    Ok(())
}

fn agg_scale(s: &Scenario, eps: f64) -> f64 {
    (s.aggregates().zeta_sum * eps.abs()).max(f64::MIN_POSITIVE)
}

/// A random scenario with `1..=max_k` companies, `1..=max_t` periods and
/// `1..=max_n` users. Roughly one slot in ten has zero capacity.
pub fn random_scenario(rng: &mut impl Rng, max_k: usize, max_t: usize, max_n: usize) -> Scenario {
    let k = rng.gen_range(1..=max_k);
    let t = rng.gen_range(1..=max_t);
    let n = rng.gen_range(1..=max_n);
    let mut capacities: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            (0..t)
                .map(|_| {
                    if rng.gen_bool(0.1) {
                        0.0
                    } else {
                        rng.gen_range(0.5..30.0)
                    }
                })
                .collect()
        })
        .collect();
    if capacities.iter().flatten().all(|&g| g == 0.0) {
        capacities[0][0] = rng.gen_range(0.5..30.0);
    }
    let budgets = (0..n).map(|_| rng.gen_range(1.0..50.0)).collect();
    let zeta = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let gamma = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
    Scenario::new(budgets, capacities)
        .with_zeta(zeta)
        .with_gamma(gamma)
}

/// Like [`random_scenario`], resampled until every user passes the budget
/// test at the equilibrium prices. Each user's energy floor is then set to a
/// random fraction of the total demand it receives.
pub fn random_feasible_scenario(
    rng: &mut impl Rng,
    max_k: usize,
    max_t: usize,
    max_n: usize,
) -> Scenario {
    loop {
        let mut s = random_scenario(rng, max_k, max_t, max_n);
        let Ok(p) = leader::equilibrium_prices(&s) else {
            continue;
        };
        let Ok(report) = follower::check_feasibility(&s, &p) else {
            continue;
        };
        if !report.all_feasible() {
            continue;
        }
        for n in 0..s.num_users {
            let grid = follower::best_response(&s, n, &p).expect("shape matches");
            s.min_energy[n] = rng.gen_range(0.0..1.0) * follower::total_demand(&grid);
        }
        return s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_scenario_passes() {
        let s = Scenario::new(vec![5.0, 7.0], vec![vec![4.0, 2.0]]);
        let report = verify(&[s], &VerifyOptions::default()).unwrap();
        assert!(report.passed(), "{:?}", report.failures());
        assert!(report.checks.iter().all(|c| !c.skipped()));
    }

    #[test]
    fn corrupted_price_fails_capacity_balance() {
        let s = Scenario::new(vec![5.0, 7.0], vec![vec![4.0, 2.0]]);
        let opts = VerifyOptions {
            corrupt_price: Some(1.05),
            ..VerifyOptions::default()
        };
        let report = verify(&[s], &opts).unwrap();
        assert!(!report.passed());
        assert!(!report.check("capacity balance").unwrap().passed());
    }

    #[test]
    fn nan_residual_fails() {
        let mut c = CheckResult::new("x", 1.0);
        c.record(0.5);
        c.record(f64::NAN);
        c.record(0.1);
        assert!(!c.passed());
    }

    #[test]
    fn random_instances_are_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            assert_eq!(
                random_feasible_scenario(&mut a, 3, 4, 10),
                random_feasible_scenario(&mut b, 3, 4, 10)
            );
        }
    }

    #[test]
    fn random_feasible_instances_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let s = random_feasible_scenario(&mut rng, 3, 4, 10);
            assert!(s.validate().is_ok());
            let sol = leader::solve_stackelberg(&s).unwrap();
            assert!(sol.feasibility.all_feasible());
        }
    }
}

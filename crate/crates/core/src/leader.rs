//! Company-side equilibrium: the price system, its closed-form solution,
//! regulatory clamping, and the composed leader/follower solve.

use crate::error::{Error, Result};
use crate::follower::{self, FeasibilityReport};
use crate::model::{self, DemandSchedule, PriceSchedule, Scenario};

/// The linear system `A P = Y` whose solution is the equilibrium price
/// vector, with rows in slot order.
///
/// `A` is `Â + u vᵀ` where `Â` is diagonal with entries `K·T·(G_k(t) + Z)`,
/// `u` is the constant `−Z` vector and `v` the all-ones vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSystem {
    pub dim: usize,
    /// Row-major `dim × dim`.
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Diagonal of `Â`.
    pub hat_diagonal: Vec<f64>,
    /// `Z`; every entry of `u` is `-zeta_sum`.
    pub zeta_sum: f64,
    pub num_periods: usize,
}

impl PriceSystem {
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    /// Row index of slot `(company, period)`.
    pub fn row_of(&self, company: usize, period: usize) -> usize {
        company * self.num_periods + period
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn build_price_system(s: &Scenario) -> Result<PriceSystem> {
    s.ensure_valid()?;
    let agg = s.aggregates();
    let z = agg.zeta_sum;
    let dim = s.num_slots();
    let kt = dim as f64;
    let hat_diagonal: Vec<f64> = s.capacity_vector().iter().map(|g| kt * (g + z)).collect();
    let mut matrix = vec![-z; dim * dim];
    for (i, d) in hat_diagonal.iter().enumerate() {
        matrix[i * dim + i] = d - z;
    }
    Ok(PriceSystem {
        dim,
        matrix,
        rhs: vec![agg.budget_sum; dim],
        hat_diagonal,
        zeta_sum: z,
        num_periods: s.num_periods,
    })
}

/// Unique Nash-equilibrium prices, ignoring price bounds:
///
/// `p_k(t) = B / (G_k(t) + Z) · 1 / (K·T − Σ Z / (G_k(t) + Z))`
pub fn equilibrium_prices(s: &Scenario) -> Result<PriceSchedule> {
    s.ensure_valid()?;
    let agg = s.aggregates();
    if agg.budget_sum <= 0.0 {
        return Err(Error::AllBudgetsZero);
    }
    let z = agg.zeta_sum;
    let caps = s.capacity_vector();
    let kt = caps.len() as f64;
    let denominator = kt - caps.iter().map(|g| z / (g + z)).sum::<f64>();
    if denominator <= 0.0 {
        return Err(Error::SingularPriceSystem { denominator });
    }
    let prices = caps
        .iter()
        .map(|g| (agg.budget_sum / (g + z)) * (1.0 / denominator))
        .collect();
    PriceSchedule::new(s.num_companies, s.num_periods, prices)
}

/// Projects `p` onto the scenario's price bounds.
///
/// Out-of-range slots are pinned at the bound they violate and the remaining
/// free slots are re-solved from the capacity-balance equations with the
/// pinned prices held fixed. This repeats until no free slot violates its
/// bound; the pinned set only grows, so it terminates within `K·T` rounds.
/// Returns the final schedule and the pinned slots in slot order.
pub fn apply_price_bounds(
    s: &Scenario,
    p: &PriceSchedule,
) -> Result<(PriceSchedule, Vec<(usize, usize)>)> {
    s.ensure_valid()?;
    p.check_shape(s)?;
    let bounds: Vec<_> = s
        .price_bounds
        .as_ref()
        .ok_or(Error::NoPriceBounds)?
        .iter()
        .flatten()
        .copied()
        .collect();
    let agg = s.aggregates();
    let z = agg.zeta_sum;
    let caps = s.capacity_vector();
    let kt = caps.len() as f64;

    let mut prices = p.as_slice().to_vec();
    let mut pinned = vec![false; prices.len()];
    loop {
        let mut changed = false;
        for i in 0..prices.len() {
            if pinned[i] {
                continue;
            }
            let b = bounds[i];
            if prices[i] < b.min {
                prices[i] = b.min;
            } else if prices[i] > b.max {
                prices[i] = b.max;
            } else {
                continue;
            }
            pinned[i] = true;
            changed = true;
        }
        if !changed || pinned.iter().all(|&c| c) {
            break;
        }

        let fixed_sum: f64 = (0..prices.len())
            .filter(|&i| pinned[i])
            .map(|i| prices[i])
            .sum();
        let rhs = agg.budget_sum + z * fixed_sum;
        let free_share: f64 = (0..prices.len())
            .filter(|&i| !pinned[i])
            .map(|i| z / (caps[i] + z))
            .sum();
        let denominator = kt - free_share;
        if denominator <= 0.0 || rhs <= 0.0 {
            return Err(Error::SingularReducedSystem { denominator });
        }
        for i in 0..prices.len() {
            if !pinned[i] {
                prices[i] = rhs / ((caps[i] + z) * denominator);
            }
        }
    }

    let clamped = (0..prices.len())
        .filter(|&i| pinned[i])
        .map(|i| s.slot_of(i))
        .collect();
    Ok((
        PriceSchedule::new(s.num_companies, s.num_periods, prices)?,
        clamped,
    ))
}

/// Revenue of company `k` rewritten in terms of prices only:
/// `B/K + Z (Σ_{k',t} p_{k'}(t) − K Σ_t p_k(t)) / K`.
pub fn revenue_identity(s: &Scenario, p: &PriceSchedule, k: usize) -> Result<f64> {
    s.check_company(k)?;
    p.check_shape(s)?;
    let agg = s.aggregates();
    let kf = s.num_companies as f64;
    let own: f64 = (0..s.num_periods).map(|t| p.get(k, t)).sum();
    Ok(agg.budget_sum / kf + agg.zeta_sum * (p.total() - kf * own) / kf)
}

/// Revenue of company `k` when it can sell at most `G_k(t)` in each period.
pub fn capped_revenue(s: &Scenario, p: &PriceSchedule, k: usize) -> Result<f64> {
    let d = follower::demand_schedule(s, p)?;
    Ok((0..s.num_periods)
        .map(|t| p.get(k, t) * d.slot_total(k, t).min(s.capacity(k, t)))
        .sum())
}

/// Change in company `k`'s revenue when it moves its period-`t` price by
/// `eps` while every other price stays put.
///
/// Users re-optimize at the perturbed prices and sales in every period of
/// company `k` are capped at capacity. At the unclamped equilibrium the gap
/// is `−Z·eps·(K·T − 1)/(K·T)` for `eps > 0` and nonpositive for `eps < 0`.
pub fn best_response_gap(
    s: &Scenario,
    p: &PriceSchedule,
    k: usize,
    t: usize,
    eps: f64,
) -> Result<f64> {
    s.check_company(k)?;
    s.check_period(t)?;
    p.check_shape(s)?;
    let perturbed = p.with_price(k, t, p.get(k, t) + eps)?;
    let before = follower::demand_schedule(s, p)?;
    let after = follower::demand_schedule(s, &perturbed)?;
    Ok((0..s.num_periods)
        .map(|tau| {
            let g = s.capacity(k, tau);
            let new = perturbed.get(k, tau) * after.slot_total(k, tau).min(g);
            let old = p.get(k, tau) * before.slot_total(k, tau).min(g);
            new - old
        })
        .sum())
}

/// Expected value of [`best_response_gap`] for `eps > 0`.
pub fn gap_law(s: &Scenario, eps: f64) -> f64 {
    let kt = s.num_slots() as f64;
    -s.aggregates().zeta_sum * eps * (kt - 1.0) / kt
}

/// Everything known about one solved game instance.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    pub prices: PriceSchedule,
    pub demands: DemandSchedule,
    pub revenues: Vec<f64>,
    /// Per-user utility; NaN when some `ζ_n + d` is nonpositive.
    pub utilities: Vec<f64>,
    pub spends: Vec<f64>,
    pub feasibility: FeasibilityReport,
    /// Slots pinned at a price bound, 0-based `(company, period)`.
    pub clamped_slots: Vec<(usize, usize)>,
    /// `Σ_n d_{n,k}(t) − G_k(t)` in slot order.
    pub capacity_residuals: Vec<f64>,
}

impl EquilibriumSolution {
    pub fn is_clamped(&self, company: usize, period: usize) -> bool {
        self.clamped_slots.contains(&(company, period))
    }

    /// Users whose budget fails the participation test at these prices.
    pub fn flagged_users(&self) -> Vec<usize> {
        self.feasibility.infeasible_users()
    }

    /// Largest relative capacity-balance residual over unclamped slots.
    pub fn max_balance_residual(&self, s: &Scenario) -> f64 {
        let zeta_sum = s.aggregates().zeta_sum;
        let mut worst: f64 = 0.0;
        for k in 0..s.num_companies {
            for t in 0..s.num_periods {
                if self.is_clamped(k, t) {
                    continue;
                }
                let i = s.slot_index(k, t);
                // each demand is a shifted quotient minus zeta_n, so the
                // rounding in the slot total is of order Z
                let scale = (0..s.num_users)
                    .map(|n| self.demands.get(n, k, t).abs())
                    .sum::<f64>()
                    .max(s.capacity(k, t))
                    .max(zeta_sum)
                    .max(f64::MIN_POSITIVE);
                worst = worst.max(self.capacity_residuals[i].abs() / scale);
            }
        }
        worst
    }
}

/// Assembles the full solution from a price schedule.
pub fn evaluate_at(
    s: &Scenario,
    prices: PriceSchedule,
    clamped_slots: Vec<(usize, usize)>,
) -> Result<EquilibriumSolution> {
    let demands = follower::demand_schedule(s, &prices)?;
    let revenues = (0..s.num_companies)
        .map(|k| model::company_revenue(s, k, &prices, &demands))
        .collect::<Result<Vec<_>>>()?;
    let utilities = (0..s.num_users)
        .map(|n| model::user_utility(s, n, &demands).unwrap_or(f64::NAN))
        .collect();
    let spends = (0..s.num_users)
        .map(|n| model::user_spend(s, n, &prices, &demands))
        .collect::<Result<Vec<_>>>()?;
    let feasibility = follower::check_feasibility(s, &prices)?;
    let capacity_residuals = (0..s.num_slots())
        .map(|i| {
            let (k, t) = s.slot_of(i);
            demands.slot_total(k, t) - s.capacity(k, t)
        })
        .collect();
    Ok(EquilibriumSolution {
        prices,
        demands,
        revenues,
        utilities,
        spends,
        feasibility,
        clamped_slots,
        capacity_residuals,
    })
}

/// Solves the game: equilibrium prices, clamped to bounds when the scenario
/// has them, and every user's best response to those prices.
///
/// Users failing the budget test are flagged in the feasibility report, not
/// treated as errors.
pub fn solve_stackelberg(s: &Scenario) -> Result<EquilibriumSolution> {
    let unbounded = equilibrium_prices(s)?;
    let (prices, clamped) = if s.price_bounds.is_some() {
        apply_price_bounds(s, &unbounded)?
    } else {
        (unbounded, Vec::new())
    };
    evaluate_at(s, prices, clamped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PriceBound;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    /// K=1, T=2, G=(4,2), two users with ζ=1 and budgets summing to 12.
    fn two_period() -> Scenario {
        Scenario::new(vec![5.0, 7.0], vec![vec![4.0, 2.0]])
    }

    fn fig1(b1: f64) -> Scenario {
        Scenario::new(
            vec![b1, 10.0, 15.0, 20.0, 25.0],
            vec![vec![10.0], vec![15.0], vec![20.0]],
        )
    }

    #[test]
    fn one_by_one_system() {
        let s = Scenario::new(vec![5.0, 7.0], vec![vec![4.0]]);
        let ps = build_price_system(&s).unwrap();
        assert_eq!(ps.matrix, vec![4.0]);
        assert_eq!(ps.rhs, vec![12.0]);
    }

    #[test]
    fn two_period_system() {
        let ps = build_price_system(&two_period()).unwrap();
        assert_eq!(ps.matrix, vec![10.0, -2.0, -2.0, 6.0]);
        assert_eq!(ps.rhs, vec![12.0, 12.0]);
        assert_eq!(ps.hat_diagonal, vec![12.0, 8.0]);
    }

    #[test]
    fn row_sums_equal_kt_times_capacity() {
        let s = Scenario::new(
            vec![1.0, 2.0, 3.0],
            vec![vec![1.0, 0.0, 4.5], vec![2.0, 7.0, 0.25]],
        );
        let ps = build_price_system(&s).unwrap();
        for i in 0..ps.dim {
            let row: f64 = (0..ps.dim).map(|j| ps.entry(i, j)).sum();
            let (k, t) = s.slot_of(i);
            assert!((row - 6.0 * s.capacity(k, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_slot_price_is_budget_over_capacity() {
        let s = Scenario::new(vec![3.0, 9.0], vec![vec![4.0]]);
        let p = equilibrium_prices(&s).unwrap();
        assert!(rel(p.get(0, 0), 3.0) < 1e-15);
    }

    #[test]
    fn two_period_prices() {
        let p = equilibrium_prices(&two_period()).unwrap();
        assert!(rel(p.get(0, 0), 12.0 / 7.0) < 1e-15);
        assert!(rel(p.get(0, 1), 18.0 / 7.0) < 1e-15);
    }

    #[test]
    fn fig1_prices() {
        let p = equilibrium_prices(&fig1(10.0)).unwrap();
        let d = 3.0 - (5.0 / 15.0 + 5.0 / 20.0 + 5.0 / 25.0);
        assert!(rel(d, 2.216_666_666_666_667) < 1e-15);
        for (k, g) in [10.0, 15.0, 20.0].iter().enumerate() {
            assert!(rel(p.get(k, 0), 80.0 / (g + 5.0) / d) < 1e-14);
        }
        assert!((p.get(0, 0) - 2.4060).abs() < 5e-5);
        assert!((p.get(1, 0) - 1.8045).abs() < 5e-5);
        assert!((p.get(2, 0) - 1.4436).abs() < 5e-5);
    }

    #[test]
    fn zero_budget_is_an_error() {
        let s = Scenario::new(vec![0.0, 0.0], vec![vec![4.0]]);
        assert!(matches!(equilibrium_prices(&s), Err(Error::AllBudgetsZero)));
        assert!(matches!(solve_stackelberg(&s), Err(Error::AllBudgetsZero)));
    }

    #[test]
    fn zero_capacity_slot_gives_finite_price() {
        let s = Scenario::new(vec![4.0], vec![vec![0.0, 3.0]]);
        let sol = solve_stackelberg(&s).unwrap();
        assert!(sol
            .prices
            .as_slice()
            .iter()
            .all(|p| p.is_finite() && *p > 0.0));
        assert!(sol.max_balance_residual(&s) < 1e-12);
    }

    #[test]
    fn bounds_not_violated_is_fixed_point() {
        let s = two_period().with_price_bounds(vec![vec![
            PriceBound::new(0.1, 10.0),
            PriceBound::new(0.1, 10.0),
        ]]);
        let p = equilibrium_prices(&s).unwrap();
        let (q, clamped) = apply_price_bounds(&s, &p).unwrap();
        assert_eq!(q, p);
        assert!(clamped.is_empty());
    }

    #[test]
    fn single_slot_upper_clamp() {
        let s = Scenario::new(vec![12.0], vec![vec![4.0]])
            .with_price_bounds(vec![vec![PriceBound::new(0.5, 2.0)]]);
        let p = equilibrium_prices(&s).unwrap();
        let (q, clamped) = apply_price_bounds(&s, &p).unwrap();
        assert_eq!(q.as_slice(), &[2.0]);
        assert_eq!(clamped, vec![(0, 0)]);
    }

    #[test]
    fn two_period_clamp_resolves_free_slot() {
        let s = two_period().with_price_bounds(vec![vec![
            PriceBound::new(0.1, 10.0),
            PriceBound::new(0.1, 2.0),
        ]]);
        let sol = solve_stackelberg(&s).unwrap();
        assert_eq!(sol.clamped_slots, vec![(0, 1)]);
        assert_eq!(sol.prices.get(0, 1), 2.0);
        assert!(rel(sol.prices.get(0, 0), 1.6) < 1e-15);
        // the free slot still sells exactly its capacity
        assert!(sol.capacity_residuals[0].abs() < 1e-12);
        assert!(sol.max_balance_residual(&s) < 1e-12);
    }

    #[test]
    fn clamping_every_slot_skips_the_reduced_solve() {
        let s = two_period().with_price_bounds(vec![vec![
            PriceBound::new(5.0, 6.0),
            PriceBound::new(5.0, 6.0),
        ]]);
        let p = equilibrium_prices(&s).unwrap();
        let (q, clamped) = apply_price_bounds(&s, &p).unwrap();
        assert_eq!(q.as_slice(), &[5.0, 5.0]);
        assert_eq!(clamped.len(), 2);
    }

    #[test]
    fn clamping_without_bounds_is_an_error() {
        let s = two_period();
        let p = equilibrium_prices(&s).unwrap();
        assert!(matches!(
            apply_price_bounds(&s, &p),
            Err(Error::NoPriceBounds)
        ));
    }

    #[test]
    fn revenue_identity_examples() {
        let s = two_period();
        let p = PriceSchedule::new(1, 2, vec![1.3, 2.9]).unwrap();
        assert!(rel(revenue_identity(&s, &p, 0).unwrap(), 12.0) < 1e-15);

        let sym = Scenario::new(vec![3.0, 4.0], vec![vec![5.0, 1.0], vec![5.0, 1.0]]);
        let p = equilibrium_prices(&sym).unwrap();
        for k in 0..2 {
            assert!(rel(revenue_identity(&sym, &p, k).unwrap(), 3.5) < 1e-14);
        }
    }

    #[test]
    fn gap_examples() {
        let s = two_period();
        let p = equilibrium_prices(&s).unwrap();
        assert_eq!(best_response_gap(&s, &p, 0, 0, 0.0).unwrap(), 0.0);
        let gap = best_response_gap(&s, &p, 0, 0, 0.01).unwrap();
        assert!(rel(gap, -0.01) < 1e-9, "{gap}");
        assert!(rel(gap_law(&s, 0.01), -0.01) < 1e-15);

        let mono = Scenario::new(vec![3.0, 9.0], vec![vec![4.0]]);
        let p = equilibrium_prices(&mono).unwrap();
        let gap = best_response_gap(&mono, &p, 0, 0, 0.5).unwrap();
        assert!(gap.abs() < 1e-12, "{gap}");
    }

    #[test]
    fn gap_rejects_nonpositive_perturbation() {
        let s = two_period();
        let p = equilibrium_prices(&s).unwrap();
        assert!(matches!(
            best_response_gap(&s, &p, 0, 0, -5.0),
            Err(Error::NonPositivePrice { .. })
        ));
    }

    #[test]
    fn fig3_single_period() {
        let mut budgets = Vec::new();
        for b in [5.0, 10.0, 15.0, 20.0, 25.0] {
            budgets.extend(std::iter::repeat_n(b, 10));
        }
        let s = Scenario::new(budgets.clone(), vec![vec![300.0]]);
        let sol = solve_stackelberg(&s).unwrap();
        assert!(rel(sol.prices.get(0, 0), 2.5) < 1e-15);
        assert!(rel(sol.demands.slot_total(0, 0), 300.0) < 1e-12);
        for (n, b) in budgets.iter().enumerate() {
            assert!(rel(sol.spends[n], *b) < 1e-12);
        }
        assert!(sol.flagged_users().is_empty());
    }

    #[test]
    fn solve_is_bit_identical() {
        let s = fig1(17.0);
        let a = solve_stackelberg(&s).unwrap();
        let b = solve_stackelberg(&s.clone()).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

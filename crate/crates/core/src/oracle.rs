//! Independent numerical verifiers.
//!
//! Nothing here is used on the primary solve path. Each routine reaches its
//! answer by a different route than the closed forms in [`crate::follower`]
//! and [`crate::leader`], so agreement between the two is meaningful.

use crate::error::{Error, Result};
use crate::leader::PriceSystem;
use crate::model::{DemandSchedule, PriceSchedule, Scenario};

const BISECTION_MAX_ITERS: usize = 200;
const BRACKET_MAX_STEPS: usize = 200;
const PIVOT_TOL: f64 = 1e-14;

/// Multipliers and residuals backing a numerically solved user problem.
#[derive(Debug, Clone, PartialEq)]
pub struct KktCertificate {
    /// Budget multiplier `λ_{n,1}`.
    pub lambda1: f64,
    /// Nonnegativity multipliers `λ_{n,2}(k,t)`, slot order.
    pub lambda2: Vec<f64>,
    pub stationarity_residual: f64,
    pub complementarity_residual: f64,
}

fn demand_at(gamma: f64, zeta: f64, lambda: f64, prices: &[f64]) -> Vec<f64> {
    prices
        .iter()
        .map(|&p| (gamma / (lambda * p) - zeta).max(0.0))
        .collect()
}

fn spend_of(prices: &[f64], demand: &[f64]) -> f64 {
    prices.iter().zip(demand).map(|(p, d)| p * d).sum()
}

/// Solves user `n`'s problem (ignoring the energy floor) by bisection on
/// the budget multiplier.
///
/// For a trial `λ` each demand is `max(0, γ/(λ p) − ζ)`; the resulting spend
/// decreases in `λ`, and the root where it equals `B_n` is the optimum.
pub fn solve_user_kkt(
    s: &Scenario,
    n: usize,
    p: &PriceSchedule,
) -> Result<(Vec<f64>, KktCertificate)> {
    s.check_user(n)?;
    p.check_shape(s)?;
    let (gamma, zeta, budget) = (s.gamma[n], s.zeta[n], s.budgets[n]);
    let prices = p.as_slice();
    let spend = |lambda: f64| spend_of(prices, &demand_at(gamma, zeta, lambda, prices));

    if budget.is_nan() || budget <= 0.0 {
        return Err(Error::BracketFailure {
            low: 0.0,
            high: f64::INFINITY,
        });
    }

    let mut high = gamma * prices.len() as f64 / budget;
    let mut steps = 0;
    while spend(high) >= budget {
        high *= 2.0;
        steps += 1;
        if steps > BRACKET_MAX_STEPS || !high.is_finite() {
            return Err(Error::BracketFailure { low: 0.0, high });
        }
    }
    let mut low = high;
    steps = 0;
    while spend(low) <= budget {
        low *= 0.5;
        steps += 1;
        if steps > BRACKET_MAX_STEPS || low == 0.0 {
            return Err(Error::BracketFailure { low, high });
        }
    }

    for _ in 0..BISECTION_MAX_ITERS {
        let mid = 0.5 * (low + high);
        if mid <= low || mid >= high {
            break;
        }
        if spend(mid) > budget {
            low = mid;
        } else {
            high = mid;
        }
    }

    // pick whichever endpoint lands closer to the budget
    let lambda = if (spend(low) - budget).abs() <= (spend(high) - budget).abs() {
        low
    } else {
        high
    };
    let demand = demand_at(gamma, zeta, lambda, prices);
    let total_spend = spend_of(prices, &demand);
    if (total_spend - budget).abs() > 1e-10 * budget {
        return Err(Error::BracketFailure { low, high });
    }

    let lambda2: Vec<f64> = prices
        .iter()
        .zip(&demand)
        .map(|(&p, &d)| {
            if d > 0.0 {
                0.0
            } else {
                (lambda * p - gamma / zeta).max(0.0)
            }
        })
        .collect();
    let certificate = certify(gamma, zeta, budget, prices, &demand, lambda, lambda2);
    Ok((demand, certificate))
}

fn certify(
    gamma: f64,
    zeta: f64,
    budget: f64,
    prices: &[f64],
    demand: &[f64],
    lambda1: f64,
    lambda2: Vec<f64>,
) -> KktCertificate {
    let stationarity_residual = lagrangian_gradient(gamma, zeta, prices, demand, lambda1, &lambda2)
        .iter()
        .fold(0.0f64, |m, g| m.max(g.abs()));
    let mut complementarity_residual = (lambda1 * (spend_of(prices, demand) - budget)).abs();
    for (l2, d) in lambda2.iter().zip(demand) {
        complementarity_residual = complementarity_residual
            .max((l2 * d).abs())
            .max((-l2).max(0.0))
            .max((-d).max(0.0));
    }
    complementarity_residual = complementarity_residual.max((-lambda1).max(0.0));
    KktCertificate {
        lambda1,
        lambda2,
        stationarity_residual,
        complementarity_residual,
    }
}

/// The user Lagrangian
/// `γ Σ ln(ζ + d) − λ₁ (Σ p d − B) + Σ λ₂ d`.
pub fn lagrangian(
    gamma: f64,
    zeta: f64,
    budget: f64,
    prices: &[f64],
    demand: &[f64],
    lambda1: f64,
    lambda2: &[f64],
) -> f64 {
    let utility: f64 = demand.iter().map(|d| (zeta + d).ln()).sum::<f64>() * gamma;
    let budget_term = lambda1 * (spend_of(prices, demand) - budget);
    let sign_term: f64 = lambda2.iter().zip(demand).map(|(l, d)| l * d).sum();
    utility - budget_term + sign_term
}

/// Analytic gradient of [`lagrangian`] with respect to the demands:
/// `γ/(ζ + d) − λ₁ p + λ₂`.
pub fn lagrangian_gradient(
    gamma: f64,
    zeta: f64,
    prices: &[f64],
    demand: &[f64],
    lambda1: f64,
    lambda2: &[f64],
) -> Vec<f64> {
    prices
        .iter()
        .zip(demand)
        .zip(lambda2)
        .map(|((p, d), l2)| gamma / (zeta + d) - lambda1 * p + l2)
        .collect()
}

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.dim;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        DenseMatrix { dim: n, data }
    }
}

/// Solves `A P = Y` by Gaussian elimination with partial pivoting.
pub fn dense_solve_prices(ps: &PriceSystem) -> Result<Vec<f64>> {
    dense_solve(ps.dim, ps.matrix.clone(), ps.rhs.clone())
}

pub(crate) fn dense_solve(n: usize, mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let mut scales: Vec<f64> = (0..n)
        .map(|i| {
            a[i * n..(i + 1) * n]
                .iter()
                .fold(0.0f64, |m, x| m.max(x.abs()))
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap_or(col);
        let pivot = a[pivot_row * n + col];
        if pivot.abs() <= PIVOT_TOL * scales[pivot_row].max(f64::MIN_POSITIVE) {
            return Err(Error::SingularMatrix {
                column: col + 1,
                pivot,
            });
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
            scales.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[row * n + j] -= factor * a[col * n + j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|j| a[row * n + j] * x[j]).sum();
        x[row] = (b[row] - tail) / a[row * n + row];
    }
    Ok(x)
}

/// `A⁻¹` via the rank-one update formula
/// `Â⁻¹ − Â⁻¹ u vᵀ Â⁻¹ / (1 + vᵀ Â⁻¹ u)`.
pub fn sherman_morrison_inverse(ps: &PriceSystem) -> Result<DenseMatrix> {
    let n = ps.dim;
    let hat_inv: Vec<f64> = ps.hat_diagonal.iter().map(|d| 1.0 / d).collect();
    let u = -ps.zeta_sum;
    // vᵀ Â⁻¹ u with v = 1
    let denominator = 1.0 + hat_inv.iter().map(|h| h * u).sum::<f64>();
    if denominator.abs() < PIVOT_TOL {
        return Err(Error::SingularPriceSystem { denominator });
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            // (Â⁻¹ u)_i (vᵀ Â⁻¹)_j
            let rank_one = hat_inv[i] * u * hat_inv[j];
            let diag = if i == j { hat_inv[i] } else { 0.0 };
            data[i * n + j] = diag - rank_one / denominator;
        }
    }
    Ok(DenseMatrix { dim: n, data })
}

/// Deviation multipliers `0.50, 0.51, …, 1.50`.
pub fn default_grid() -> Vec<f64> {
    (50..=150).map(|i| i as f64 / 100.0).collect()
}

/// Revenue of company `k` at slot-ordered `prices`, with each user's demand
/// re-derived per slot and sales capped at capacity.
fn capped_revenue_direct(s: &Scenario, prices: &[f64], k: usize) -> f64 {
    let kt = prices.len() as f64;
    let total: f64 = prices.iter().sum();
    let mut revenue = 0.0;
    for t in 0..s.num_periods {
        let price = prices[s.slot_index(k, t)];
        let mut sold = 0.0;
        for n in 0..s.num_users {
            sold += (s.budgets[n] + s.zeta[n] * total) / (kt * price) - s.zeta[n];
        }
        revenue += price * sold.min(s.capacity(k, t));
    }
    revenue
}

/// Largest revenue gain company `k` can find by unilaterally scaling its
/// prices by a multiplier from `grid`: one period at a time, and all of its
/// periods together.
pub fn grid_best_response_check(
    s: &Scenario,
    p: &PriceSchedule,
    k: usize,
    grid: &[f64],
) -> Result<f64> {
    s.check_company(k)?;
    p.check_shape(s)?;
    let base = p.as_slice().to_vec();
    let reference = capped_revenue_direct(s, &base, k);
    let mut best = f64::NEG_INFINITY;
    let mut scratch = base.clone();
    for &m in grid {
        if m.is_nan() || m <= 0.0 {
            continue;
        }
        for t in 0..s.num_periods {
            let i = s.slot_index(k, t);
            scratch[i] = base[i] * m;
            best = best.max(capped_revenue_direct(s, &scratch, k) - reference);
            scratch[i] = base[i];
        }
        if s.num_periods > 1 {
            for t in 0..s.num_periods {
                let i = s.slot_index(k, t);
                scratch[i] = base[i] * m;
            }
            best = best.max(capped_revenue_direct(s, &scratch, k) - reference);
            scratch.copy_from_slice(&base);
        }
    }
    Ok(if best.is_finite() { best } else { 0.0 })
}

/// Utility evaluated by a separate loop over `(k, t)` indices.
pub fn reference_utility(s: &Scenario, n: usize, d: &DemandSchedule) -> f64 {
    let mut acc = 0.0;
    for k in 0..s.num_companies {
        for t in 0..s.num_periods {
            acc += s.gamma[n] * (s.zeta[n] + d.get(n, k, t)).ln();
        }
    }
    acc
}

/// Company revenue accumulated user by user.
pub fn reference_revenue(s: &Scenario, k: usize, p: &PriceSchedule, d: &DemandSchedule) -> f64 {
    let mut acc = 0.0;
    for n in 0..s.num_users {
        for t in 0..s.num_periods {
            acc += d.get(n, k, t) * p.get(k, t);
        }
    }
    acc
}

/// User spend accumulated period-major.
pub fn reference_spend(s: &Scenario, n: usize, p: &PriceSchedule, d: &DemandSchedule) -> f64 {
    let mut acc = 0.0;
    for t in 0..s.num_periods {
        for k in 0..s.num_companies {
            acc += d.get(n, k, t) * p.get(k, t);
        }
    }
    acc
}

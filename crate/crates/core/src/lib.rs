//! Equilibrium solver for a multi-period demand-response market in which
//! several utility companies compete on price (a Nash game among leaders)
//! and budget-limited users respond with log-utility-maximizing demand
//! schedules (followers).
//!
//! The primary path is closed form throughout:
//!
//! * [`follower::best_response`] gives each user's demand at announced prices,
//!   and [`follower::check_feasibility`] the minimum budgets for which that
//!   demand is valid.
//! * [`leader::equilibrium_prices`] gives the unique equilibrium prices, and
//!   [`leader::solve_stackelberg`] composes both levels, optionally clamping
//!   prices to regulatory bounds.
//!
//! [`oracle`] holds independent numerical routes (KKT bisection, dense and
//! rank-one-update linear solves, deviation scans) used by [`verify`] and the
//! test suites to confirm the closed forms.

pub mod error;
pub mod follower;
pub mod format;
pub mod leader;
pub mod model;
pub mod oracle;
pub mod scenario_io;
pub mod verify;

pub use error::{Error, Result, Violation};
pub use follower::{FeasibilityReport, Verdict};
pub use leader::{EquilibriumSolution, PriceSystem};
pub use model::{Aggregates, DemandSchedule, PriceBound, PriceSchedule, Scenario};
pub use scenario_io::{ResultTable, SweepAxis, SweepSpec};

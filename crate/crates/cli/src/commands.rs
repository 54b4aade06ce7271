use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use drm_stackelberg::format::format_float as f;
use drm_stackelberg::scenario_io::{self, PRESET_NAMES};
use drm_stackelberg::verify::{self, VerifyOptions};
use drm_stackelberg::{leader, EquilibriumSolution, Error, Scenario, SweepSpec};

pub const EXIT_SOLVER: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

/// Random trials `verify` runs when given no scenario or preset.
pub const DEFAULT_TRIALS: usize = 200;

#[derive(Debug, Default)]
pub struct CommandOutcome {
    pub code: u8,
    /// Text for standard output.
    pub summary: String,
    /// Message for standard error.
    pub error: Option<String>,
    pub artifacts: Vec<PathBuf>,
}

impl CommandOutcome {
    fn ok(summary: String) -> Self {
        Self {
            code: 0,
            summary,
            ..Self::default()
        }
    }

    fn fail(code: u8, error: impl ToString) -> Self {
        Self {
            code,
            error: Some(error.to_string()),
            ..Self::default()
        }
    }
}

/// Input problems (unreadable or malformed files, bad presets) are usage
/// errors; everything else comes from the solver.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Io(_)
        | Error::Parse { .. }
        | Error::MissingCapacities
        | Error::InvalidScenario(_)
        | Error::InvalidSweep(_)
        | Error::UnknownPreset(_) => EXIT_USAGE,
        _ => EXIT_SOLVER,
    }
}

fn load_input(scenario: Option<&Path>, preset: Option<&str>) -> Result<Scenario, Error> {
    match (scenario, preset) {
        (_, Some(name)) => Ok(scenario_io::preset(name)?.base),
        (Some(path), None) => scenario_io::load_scenario(path),
        (None, None) => Err(Error::InvalidSweep("no scenario given".into())),
    }
}

pub fn solve(
    scenario: Option<&Path>,
    preset: Option<&str>,
    output: Option<&Path>,
) -> CommandOutcome {
    let s = match load_input(scenario, preset) {
        Ok(s) => s,
        Err(e) => return CommandOutcome::fail(exit_code_for(&e), e),
    };
    let sol = match leader::solve_stackelberg(&s) {
        Ok(sol) => sol,
        Err(e) => return CommandOutcome::fail(exit_code_for(&e), e),
    };
    let mut out = CommandOutcome::ok(render_solution(&s, &sol));
    if let Some(path) = output {
        if let Err(e) = write_demand_csv(&s, &sol, path) {
            return CommandOutcome::fail(EXIT_SOLVER, e);
        }
        out.artifacts.push(path.to_path_buf());
    }
    out
}

fn render_solution(s: &Scenario, sol: &EquilibriumSolution) -> String {
    let mut o = String::new();
    let _ = writeln!(
        o,
        "scenario: K={} N={} T={}",
        s.num_companies, s.num_users, s.num_periods
    );
    let _ = writeln!(o, "prices:");
    for k in 0..s.num_companies {
        let row: Vec<String> = (0..s.num_periods)
            .map(|t| f(sol.prices.get(k, t)))
            .collect();
        let _ = writeln!(o, "  company {}: {}", k + 1, row.join(" "));
    }
    let _ = writeln!(o, "revenues:");
    for (k, r) in sol.revenues.iter().enumerate() {
        let _ = writeln!(o, "  company {}: {}", k + 1, f(*r));
    }
    let _ = writeln!(o, "users:");
    for n in 0..s.num_users {
        let grid = sol.demands.user_grid(n);
        let _ = writeln!(
            o,
            "  user {}: utility {} spend {} total demand {} verdict {} (f1 {}, f2 {})",
            n + 1,
            f(sol.utilities[n]),
            f(sol.spends[n]),
            f(grid.iter().sum()),
            sol.feasibility.verdicts[n],
            f(sol.feasibility.f1[n]),
            f(sol.feasibility.f2[n]),
        );
        let demands: Vec<String> = grid.iter().map(|d| f(*d)).collect();
        let _ = writeln!(o, "    demands: {}", demands.join(" "));
    }
    let clamped: Vec<String> = sol
        .clamped_slots
        .iter()
        .map(|(k, t)| format!("{}:{}", k + 1, t + 1))
        .collect();
    let _ = writeln!(
        o,
        "clamped: {}",
        if clamped.is_empty() {
            "none".to_string()
        } else {
            clamped.join(" ")
        }
    );
    let flagged = sol.flagged_users();
    if !flagged.is_empty() {
        let names: Vec<String> = flagged.iter().map(|n| (n + 1).to_string()).collect();
        let _ = writeln!(
            o,
            "warning: users below the budget threshold: {}",
            names.join(" ")
        );
    }
    o
}

fn write_demand_csv(s: &Scenario, sol: &EquilibriumSolution, path: &Path) -> std::io::Result<()> {
    let mut text = String::from("user,company,period,price,demand\n");
    for n in 0..s.num_users {
        for k in 0..s.num_companies {
            for t in 0..s.num_periods {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    n + 1,
                    k + 1,
                    t + 1,
                    f(sol.prices.get(k, t)),
                    f(sol.demands.get(n, k, t))
                );
            }
        }
    }
    fs::write(path, text)
}

/// Resolves `sweep` arguments into a source (preset or file) and a CSV path.
pub fn sweep_targets(
    args: Vec<String>,
    preset: Option<String>,
    output: Option<PathBuf>,
) -> Result<(String, PathBuf), CommandOutcome> {
    let mut args = args.into_iter();
    let source = match preset {
        Some(p) => p,
        None => args
            .next()
            .ok_or_else(|| CommandOutcome::fail(EXIT_USAGE, "sweep needs a preset or spec file"))?,
    };
    let dest = match output {
        Some(o) => o,
        None => args
            .next()
            .map(PathBuf::from)
            .ok_or_else(|| CommandOutcome::fail(EXIT_USAGE, "sweep needs an output path"))?,
    };
    if let Some(extra) = args.next() {
        return Err(CommandOutcome::fail(
            EXIT_USAGE,
            format!("unexpected argument `{extra}`"),
        ));
    }
    Ok((source, dest))
}

fn load_sweep(source: &str) -> Result<SweepSpec, Error> {
    if PRESET_NAMES.contains(&source) {
        return scenario_io::preset(source);
    }
    let path = Path::new(source);
    if path.is_file() {
        scenario_io::load_sweep_spec(path)
    } else {
        Err(Error::UnknownPreset(source.to_string()))
    }
}

pub fn sweep(source: &str, dest: &Path) -> CommandOutcome {
    let spec = match load_sweep(source) {
        Ok(s) => s,
        Err(e) => return CommandOutcome::fail(exit_code_for(&e), e),
    };
    let table = match scenario_io::run_sweep(&spec) {
        Ok(t) => t,
        Err(e) => return CommandOutcome::fail(exit_code_for(&e), e),
    };
    if let Err(e) = scenario_io::emit_csv(&table, dest) {
        return CommandOutcome::fail(EXIT_SOLVER, e);
    }
    let mut summary = format!(
        "{} rows ({} failed) over {}\n",
        table.rows.len(),
        table.failed_rows(),
        table.axis_label
    );
    let infeasible = table.infeasible_values();
    if !infeasible.is_empty() {
        let vals: Vec<String> = infeasible.iter().map(|v| f(*v)).collect();
        let _ = writeln!(
            summary,
            "infeasible users at {} = {}",
            table.axis_label,
            vals.join(" ")
        );
    }
    for row in &table.rows {
        if let Err(msg) = &row.outcome {
            let _ = writeln!(summary, "row {} failed: {msg}", f(row.value));
        }
    }
    let mut out = CommandOutcome::ok(summary);
    out.artifacts.push(dest.to_path_buf());
    if table.failed_rows() == table.rows.len() {
        out.code = EXIT_SOLVER;
        out.error = Some("every sweep row failed".into());
    }
    out
}

pub fn verify(
    scenario: Option<&Path>,
    preset: Option<&str>,
    seed: u64,
    trials: Option<usize>,
    corrupt_price: Option<f64>,
) -> CommandOutcome {
    let scenarios = match (scenario, preset) {
        (None, None) => Vec::new(),
        (Some(path), None) => match scenario_io::load_scenario(path) {
            Ok(s) => vec![s],
            Err(e) => return CommandOutcome::fail(exit_code_for(&e), e),
        },
        (_, Some(name)) => {
            let spec = match scenario_io::preset(name) {
                Ok(s) => s,
                Err(e) => return CommandOutcome::fail(EXIT_USAGE, e),
            };
            match spec
                .values
                .iter()
                .map(|&v| spec.materialize(v))
                .collect::<Result<Vec<_>, _>>()
            {
                Ok(v) => v,
                Err(e) => return CommandOutcome::fail(EXIT_SOLVER, e),
            }
        }
    };
    let trials = trials.unwrap_or(if scenarios.is_empty() {
        DEFAULT_TRIALS
    } else {
        0
    });
    let opts = VerifyOptions {
        seed,
        trials,
        corrupt_price,
    };
    let report = match verify::verify(&scenarios, &opts) {
        Ok(r) => r,
        Err(e) => return CommandOutcome::fail(exit_code_for(&e), e),
    };
    let mut summary = format!(
        "verified {} scenarios ({} random, seed {})\n",
        report.scenarios, trials, seed
    );
    for c in &report.checks {
        let status = if c.skipped() {
            "SKIP"
        } else if c.passed() {
            "PASS"
        } else {
            "FAIL"
        };
        let _ = writeln!(
            summary,
            "{status} {:<28} max residual {:<22} tol {}",
            c.name,
            f(c.max_residual),
            f(c.tolerance)
        );
    }
    let mut out = CommandOutcome::ok(summary);
    let failures = report.failures();
    if !failures.is_empty() {
        let names: Vec<&str> = failures.iter().map(|c| c.name).collect();
        out.code = EXIT_VERIFY;
        out.error = Some(format!("verification failed: {}", names.join(", ")));
    }
    out
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

use commands::CommandOutcome;

/// Solve, sweep and verify multi-period demand-response pricing games.
#[derive(Debug, Parser)]
#[command(name = "drm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one scenario and print prices, demands, revenues and verdicts.
    Solve {
        /// Scenario file (JSON).
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        scenario: Option<PathBuf>,
        /// Solve the base scenario of a preset instead of a file.
        #[arg(long)]
        preset: Option<String>,
        /// Also write per-slot demands as CSV.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run a preset (fig1, fig2, fig3) or a sweep file and write CSV.
    Sweep {
        /// `SOURCE [DESTINATION]`: preset name (fig1, fig2, fig3) or sweep
        /// file, then the CSV path. Either may be given by flag instead.
        #[arg(num_args = 0..=2)]
        args: Vec<String>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check the closed forms against the numerical oracles.
    Verify {
        /// Scenario file; omit to run random trials only.
        scenario: Option<PathBuf>,
        /// Verify every scenario of a preset sweep.
        #[arg(long, conflicts_with = "scenario")]
        preset: Option<String>,
        #[arg(long, default_value_t = drm_stackelberg::verify::DEFAULT_SEED)]
        seed: u64,
        /// Random instances to check in addition to the inputs.
        /// Defaults to 200 when no scenario or preset is given, else 0.
        #[arg(long)]
        trials: Option<usize>,
        /// Scale the first equilibrium price before checking (negative control).
        #[arg(long, hide = true)]
        corrupt_price: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve {
            scenario,
            preset,
            output,
        } => commands::solve(scenario.as_deref(), preset.as_deref(), output.as_deref()),
        Command::Sweep {
            args,
            preset,
            output,
        } => match commands::sweep_targets(args, preset, output) {
            Ok((source, dest)) => commands::sweep(&source, &dest),
            Err(outcome) => outcome,
        },
        Command::Verify {
            scenario,
            preset,
            seed,
            trials,
            corrupt_price,
        } => commands::verify(
            scenario.as_deref(),
            preset.as_deref(),
            seed,
            trials,
            corrupt_price,
        ),
    };
    report(outcome)
}

fn report(outcome: CommandOutcome) -> ExitCode {
    print!("{}", outcome.summary);
    for path in &outcome.artifacts {
        println!("wrote {}", path.display());
    }
    if let Some(err) = &outcome.error {
        eprintln!("error: {err}");
    }
    ExitCode::from(outcome.code)
}

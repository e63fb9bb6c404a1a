use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cv_rsp::error::Error;
use cv_rsp::scenario::{run, Command, Overrides, Scenario};

#[derive(Parser)]
#[command(version, about = "Remote squeezed-state preparation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output table path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Fail on low statistics and require an explicit seed for simulate.
    #[arg(long, global = true)]
    strict: bool,

    /// Half-width of the square Wigner grid.
    #[arg(long, global = true)]
    grid_bounds: Option<f64>,

    /// Points per grid axis.
    #[arg(long, global = true)]
    grid_points: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Condition the source and report the prepared state.
    Prepare,
    /// Repeat prepare over a parameter range.
    Sweep,
    /// Remote displacement against the projected value.
    DisplaceCurve,
    /// Report every unmeasured station of a GHZ-like source.
    Ghz,
    /// Monte Carlo post-selection against the analytic prediction.
    Simulate,
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let overrides = Overrides {
        out: cli.out.as_ref().map(|p| p.display().to_string()),
        seed: cli.seed,
        grid_bounds: cli.grid_bounds,
        grid_points: cli.grid_points,
    };
    let scenario = Scenario::from_toml_str(&text, &overrides, cli.strict)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let command = match cli.command {
        Cmd::Prepare => Command::Prepare,
        Cmd::Sweep => Command::Sweep,
        Cmd::DisplaceCurve => Command::DisplaceCurve,
        Cmd::Ghz => Command::Ghz,
        Cmd::Simulate => Command::Simulate,
    };
    let output = run(command, &scenario)?;
    for w in &output.table.warnings {
        eprintln!("warning: {w}");
    }
    let out = scenario.config().output.table.as_ref().map(PathBuf::from);
    output.write(out.as_deref())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

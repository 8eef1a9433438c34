use std::path::PathBuf;
use std::process::ExitCode;

use advgd_cli::{cmd_check, cmd_plot, cmd_run, cmd_sweep, presets, CliError, Overrides};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "advgd", version, about = "Distributed gradient descent with perturbing adversaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct OverrideArgs {
    /// Replace the config's base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Resolve relative output paths against this directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Replace the config's replication count.
    #[arg(long)]
    replications: Option<usize>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            seed: a.seed,
            replications: a.replications,
            out_dir: a.out_dir,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every replication and write the CSV, summary and plot.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Repeat the experiment for several adversary counts.
    Sweep {
        config: PathBuf,
        /// Comma-separated adversary counts, e.g. 2,5,9.
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<usize>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Report step-size admissibility and the initial-condition test.
    Check {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Render a run CSV as an SVG line chart.
    Plot { csv: PathBuf, out: PathBuf },
    /// Print a bundled preset (fig1..fig6) as JSON.
    Preset { name: String },
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => match cmd_run(&config, &overrides.into()) {
            Ok(out) => {
                println!("wrote {}", out.csv.display());
                println!("wrote {}", out.summary_path.display());
                if let Some(plot) = &out.plot {
                    println!("wrote {}", plot.display());
                }
                if !out.summary.admissible {
                    println!("warning: step size is not admissible; bound columns left empty");
                }
                eprintln!("wall time {:.3}s", out.summary.wall_time_s);
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Sweep {
            config,
            counts,
            overrides,
        } => match cmd_sweep(&config, &counts, &overrides.into()) {
            Ok(out) => {
                for p in &out.summary.points {
                    println!("m={:<3} mean steady-state error {:.6e}", p.m, p.mean_steady_state_error);
                }
                println!("strictly increasing in m: {}", out.summary.strictly_increasing);
                println!("wrote {}", out.csv.display());
                println!("wrote {}", out.summary_path.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Check { config, overrides } => match cmd_check(&config, &overrides.into()) {
            Ok(out) => {
                print!("{}", out.render());
                if out.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(e),
        },
        Command::Plot { csv, out } => match cmd_plot(&csv, &out) {
            Ok(()) => {
                println!("wrote {}", out.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Preset { name } => match presets::preset(&name) {
            Some(cfg) => {
                println!("{}", cfg.to_json());
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: unknown preset '{name}' (expected one of {})", presets::NAMES.join(", "));
                ExitCode::from(2)
            }
        },
    }
}

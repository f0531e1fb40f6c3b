use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crossdiff::bounds::BoundsReport;
use crossdiff_cli::commands::*;
use crossdiff_cli::output::write_bounds;
use crossdiff_cli::presets::ExampleOptions;
use crossdiff_cli::{parse_config, CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "crossdiff",
    version,
    about = "Porous-medium systems with small cross-diffusion"
)]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        config: PathBuf,
        /// Overrides the configured output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute the energy minimiser only.
    Steady {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the configuration for several coupling strengths in parallel.
    Sweep {
        config: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        delta: Vec<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Admissibility constants and the largest admissible coupling.
    Bounds {
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long = "c-l")]
        c_l: f64,
        #[arg(long, default_value_t = 2.0)]
        omega: f64,
        /// Defaults to (omega/π)².
        #[arg(long = "c-p")]
        c_p: Option<f64>,
        #[arg(long = "c-f")]
        c_f: Option<f64>,
        /// Also write the report as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Simulate the particle system and compare it with the continuum model.
    Particles {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Reproduce one of the reference experiments.
    Example {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        n: u8,
        /// Defaults to `example<n>`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Replace the preset list of coupling strengths.
        #[arg(long, value_delimiter = ',')]
        delta: Option<Vec<f64>>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Use adaptive steps with this safety factor.
        #[arg(long)]
        adaptive: Option<f64>,
        #[arg(long = "dt-max")]
        dt_max: Option<f64>,
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long = "record-count")]
        record_count: Option<usize>,
    },
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

fn output_dir(config: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| PathBuf::from(&config.output.directory))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, output } => {
            let c = load(&config)?;
            run_command(&c, &output_dir(&c, output))?;
        }
        Command::Steady { config, output } => {
            let c = load(&config)?;
            steady_command(&c, &output_dir(&c, output))?;
        }
        Command::Sweep {
            config,
            delta,
            output,
        } => {
            let c = load(&config)?;
            sweep_command(&c, &delta, &output_dir(&c, output))?;
        }
        Command::Bounds {
            t_final,
            c_l,
            omega,
            c_p,
            c_f,
            csv,
        } => {
            let report = BoundsReport::new(t_final, c_l, omega, c_p, c_f)?;
            print!("{}", bounds_text(&report));
            if let Some(path) = csv {
                write_bounds(&path, &[report])?;
            }
        }
        Command::Particles { config, output } => {
            let c = load(&config)?;
            let out = particles_command(&c, &output_dir(&c, output))?;
            for (i, d) in out.comparison.l1_distance.iter().enumerate() {
                println!("species {i}: l1 distance {d:.6}");
            }
        }
        Command::Example {
            n,
            output,
            delta,
            t_end,
            dt,
            adaptive,
            dt_max,
            cells,
            record_count,
        } => {
            let opts = ExampleOptions {
                deltas: delta,
                t_end,
                dt,
                adaptive_safety: adaptive,
                dt_max,
                cells,
                record_count,
            };
            let dir = output.unwrap_or_else(|| PathBuf::from(format!("example{n}")));
            example_command(n, &opts, &dir)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

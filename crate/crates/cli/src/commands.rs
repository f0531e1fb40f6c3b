//! Subcommand implementations. Each writes its CSV files below an output
//! directory and returns what it wrote in memory for callers and tests.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crossdiff::bounds::BoundsReport;
use crossdiff::diagnostics::{integrated_norms, SweepRecord};
use crossdiff::energy::{steady_state, SteadyState};
use crossdiff::fv::{run, Trajectory};
use crossdiff::particles::{
    compare_to_pde_observed, empirical_density, CompareOptions, Comparison,
};
use crossdiff::Problem;

use crate::config::{render_config, RunConfig};
use crate::error::CliError;
use crate::output::*;
use crate::presets::{
    example_c_l, example_config, example_deltas, strong_sweep_config, ExampleOptions,
};

fn file(dir: &Path, config: &RunConfig, name: &str) -> PathBuf {
    dir.join(format!("{}{name}", config.output.prefix))
}

/// Directory for one value of δ inside a sweep.
pub fn delta_dir(dir: &Path, delta: f64) -> PathBuf {
    dir.join(format!("delta_{delta}"))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub problem: Problem,
    pub trajectory: Trajectory,
    pub summary: SweepRecord,
}

/// Integrate the configured system without writing anything.
pub fn simulate(config: &RunConfig) -> Result<RunOutput, CliError> {
    let problem = config.problem()?;
    let mut trajectory = Trajectory::default();
    run(
        &problem,
        config.time.t_end,
        config.time.mode(),
        &config.time.record_times(),
        &mut trajectory,
    )?;
    let summary = integrated_norms(config.system.delta, &trajectory.records);
    Ok(RunOutput {
        problem,
        trajectory,
        summary,
    })
}

/// `densities.csv` and `norms.csv` at the record times.
pub fn run_command(config: &RunConfig, dir: &Path) -> Result<RunOutput, CliError> {
    let out = simulate(config)?;
    write_densities(
        &file(dir, config, "densities.csv"),
        out.problem.grid(),
        &out.trajectory.snapshots,
    )?;
    write_norms(&file(dir, config, "norms.csv"), &out.trajectory.records)?;
    Ok(out)
}

/// `steady.csv` with the minimiser and its multipliers.
pub fn steady_command(config: &RunConfig, dir: &Path) -> Result<SteadyState, CliError> {
    let problem = config.problem()?;
    let steady = steady_state(&problem, config.steady_options())?;
    if !steady.converged {
        log::warn!(
            "steady state not converged after {} iterations (residual {:e})",
            steady.iterations,
            steady.residual
        );
    }
    write_steady(&file(dir, config, "steady.csv"), problem.grid(), &steady)?;
    Ok(steady)
}

/// One run per δ in its own subdirectory, in parallel, plus `sweep.csv`.
pub fn sweep_command(
    config: &RunConfig,
    deltas: &[f64],
    dir: &Path,
) -> Result<Vec<SweepRecord>, CliError> {
    if deltas.is_empty() {
        return Err(CliError::Config("sweep needs at least one delta".into()));
    }
    let records = deltas
        .par_iter()
        .map(|&d| run_command(&config.with_delta(d), &delta_dir(dir, d)).map(|o| o.summary))
        .collect::<Result<Vec<_>, _>>()?;
    write_sweep(&file(dir, config, "sweep.csv"), &records)?;
    Ok(records)
}

/// Aligned text report of the admissibility constants.
pub fn bounds_text(r: &BoundsReport) -> String {
    let rows = [
        ("T", r.t_final),
        ("C_L", r.c_l),
        ("|Omega|", r.omega_len),
        ("C_P", r.c_p),
        ("C_F", r.c_f),
        ("C_Omega", r.c_omega),
        ("delta_max", r.delta_max),
    ];
    let mut text: String = rows
        .iter()
        .map(|(k, v)| format!("{k:<10} {v:.6}\n"))
        .collect();
    text.push_str("note: smoothing-operator constant alpha taken as 1\n");
    text
}

#[derive(Debug, Clone)]
pub struct ParticleOutput {
    pub comparison: Comparison,
    /// `(t, species, histogram)` at the record times.
    pub histograms: Vec<(f64, usize, Vec<f64>)>,
}

/// Particle run matched to the configured continuum problem: `particles.csv`
/// histograms and `positions.csv` at the record times, and `comparison.csv`.
pub fn particles_command(config: &RunConfig, dir: &Path) -> Result<ParticleOutput, CliError> {
    let problem = config.problem()?;
    let spec = config.particle_spec(&problem)?;
    let section = config.particles.as_ref().expect("checked by particle_spec");
    let opts = CompareOptions {
        particle_dt: section.dt,
        pde_mode: config.time.mode(),
    };
    let times = config.time.record_times();
    let slack = 1e-12 * config.time.t_end.max(1.0);
    let mut next = 0;
    let mut positions = Vec::new();
    let comparison = compare_to_pde_observed(&spec, &problem, config.time.t_end, opts, |s| {
        while next < times.len() && times[next] <= s.t + slack {
            positions.push((s.t, s.positions.clone()));
            next += 1;
        }
    })?;
    let grid = problem.grid();
    let mut histograms = Vec::new();
    for (t, species) in &positions {
        let state = crossdiff::particles::ParticleState {
            t: *t,
            positions: species.clone(),
        };
        for i in 0..species.len() {
            histograms.push((*t, i, empirical_density(&state, grid, i)?));
        }
    }
    write_histograms(&file(dir, config, "particles.csv"), grid, &histograms)?;
    write_positions(&file(dir, config, "positions.csv"), &positions)?;
    write_comparison(
        &file(dir, config, "comparison.csv"),
        config.time.t_end,
        &spec.counts,
        section.eps,
        &comparison.l1_distance,
    )?;
    Ok(ParticleOutput {
        comparison,
        histograms,
    })
}

#[derive(Debug, Clone)]
pub struct ExampleOutput {
    pub runs: Vec<(RunConfig, RunOutput, SteadyState)>,
    pub sweep: Vec<SweepRecord>,
    /// Companion runs with stronger potentials (fourth example only).
    pub strong_runs: Vec<RunOutput>,
    pub strong_sweep: Vec<SweepRecord>,
}

fn example_run(
    config: &RunConfig,
    dir: &Path,
) -> Result<(RunConfig, RunOutput, SteadyState), CliError> {
    write_text(&file(dir, config, "config.toml"), &render_config(config))?;
    let out = run_command(config, dir)?;
    let steady = steady_command(config, dir)?;
    Ok((config.clone(), out, steady))
}

/// Every δ of example `n`, each in `delta_<δ>/` with its config, densities,
/// norms and steady state; `bounds.csv` for the step size and final time;
/// `sweep.csv` (and `sweep_strong.csv`) for the fourth example.
pub fn example_command(
    n: u8,
    opts: &ExampleOptions,
    dir: &Path,
) -> Result<ExampleOutput, CliError> {
    let deltas = opts.deltas.clone().unwrap_or(example_deltas(n)?);
    let configs = deltas
        .iter()
        .map(|&d| example_config(n, d).map(|c| opts.apply(c)))
        .collect::<Result<Vec<_>, _>>()?;
    let runs = configs
        .par_iter()
        .map(|c| example_run(c, &delta_dir(dir, c.system.delta)))
        .collect::<Result<Vec<_>, _>>()?;

    let base = configs
        .first()
        .ok_or_else(|| CliError::Config("no delta values given".into()))?;
    let c_l = example_c_l(n)?;
    let omega = base.grid.x_max - base.grid.x_min;
    let reports = [base.time.dt, base.time.t_end]
        .iter()
        .map(|&t| BoundsReport::new(t, c_l, omega, None, None))
        .collect::<Result<Vec<_>, _>>()?;
    write_bounds(&dir.join("bounds.csv"), &reports)?;

    let mut sweep = Vec::new();
    let mut strong_runs = Vec::new();
    let mut strong_sweep = Vec::new();
    if n == 4 {
        sweep = runs.iter().map(|r| r.1.summary).collect();
        write_sweep(&dir.join("sweep.csv"), &sweep)?;
        let strong_dir = dir.join("strong");
        strong_runs = deltas
            .par_iter()
            .map(|&d| {
                run_command(
                    &opts.apply(strong_sweep_config(d)),
                    &delta_dir(&strong_dir, d),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        strong_sweep = strong_runs.iter().map(|r| r.summary).collect();
        write_sweep(&dir.join("sweep_strong.csv"), &strong_sweep)?;
    }
    Ok(ExampleOutput {
        runs,
        strong_runs,
        sweep,
        strong_sweep,
    })
}

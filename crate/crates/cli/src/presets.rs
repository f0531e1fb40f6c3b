//! Configurations for the four reference experiments.

use crossdiff::{InitialCondition, PotentialSpec};

use crate::config::{ModeName, RunConfig, SpeciesSection};
use crate::error::CliError;

/// Overrides for cheaper variants of an example.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExampleOptions {
    pub deltas: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    /// Switch to adaptive stepping with this safety factor.
    pub adaptive_safety: Option<f64>,
    pub dt_max: Option<f64>,
    pub cells: Option<usize>,
    pub record_count: Option<usize>,
}

fn check(n: u8) -> Result<(), CliError> {
    if (1..=4).contains(&n) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "unknown example {n}; choose 1, 2, 3 or 4"
        )))
    }
}

/// Coupling strengths of example `n`.
pub fn example_deltas(n: u8) -> Result<Vec<f64>, CliError> {
    check(n)?;
    Ok(match n {
        4 => vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
        _ => vec![0.4, 0.6, 0.8, 0.99],
    })
}

/// Drift constant used for the admissibility bound of example `n`.
pub fn example_c_l(n: u8) -> Result<f64, CliError> {
    check(n)?;
    Ok(if n == 3 { 100.0 } else { 6.0 })
}

fn pair(v1: PotentialSpec, v2: PotentialSpec, ic: InitialCondition) -> Vec<SpeciesSection> {
    vec![
        SpeciesSection::new(v1, ic.clone()),
        SpeciesSection::new(v2, ic.mirrored()),
    ]
}

/// Example `n` at coupling `delta` with the reference parameters.
pub fn example_config(n: u8, delta: f64) -> Result<RunConfig, CliError> {
    check(n)?;
    let weak = (PotentialSpec::Zero, PotentialSpec::Quadratic { a: 2.0 });
    let strong = (
        PotentialSpec::Quadratic { a: 0.5 },
        PotentialSpec::Quadratic { a: 50.0 },
    );
    let (potentials, ic) = match n {
        1 => (weak, InitialCondition::LeftBump),
        2 | 4 => (weak, InitialCondition::Uniform),
        _ => (strong, InitialCondition::LeftBump),
    };
    let mut c = RunConfig {
        grid: Default::default(),
        time: Default::default(),
        system: Default::default(),
        species: pair(potentials.0, potentials.1, ic),
        output: Default::default(),
        steady: Default::default(),
        particles: None,
    };
    c.system.m = Some(2);
    c.system.delta = delta;
    c.time.t_end = if n == 4 { 5.0 } else { 3.0 };
    c.output.directory = format!("example{n}");
    Ok(c)
}

/// The fourth example's companion sweep with the stronger potentials.
pub fn strong_sweep_config(delta: f64) -> RunConfig {
    let mut c = example_config(4, delta).expect("example 4 exists");
    c.species = pair(
        PotentialSpec::Quadratic { a: 0.5 },
        PotentialSpec::Quadratic { a: 50.0 },
        InitialCondition::Uniform,
    );
    c
}

impl ExampleOptions {
    pub fn apply(&self, mut c: RunConfig) -> RunConfig {
        if let Some(t) = self.t_end {
            c.time.t_end = t;
        }
        if let Some(dt) = self.dt {
            c.time.dt = dt;
        }
        if let Some(s) = self.adaptive_safety {
            c.time.mode = ModeName::Adaptive;
            c.time.safety = s;
        }
        if let Some(d) = self.dt_max {
            c.time.dt_max = d;
        }
        if let Some(j) = self.cells {
            c.grid.cells = j;
        }
        if let Some(r) = self.record_count {
            c.time.record_count = r;
        }
        c
    }
}

//! Run configuration: a TOML document with `[grid]`, `[time]`, `[system]`,
//! `[[species]]`, `[output]` and optional `[steady]` and `[particles]` sections.

use serde::{Deserialize, Serialize};

use crossdiff::energy::SteadyOptions;
use crossdiff::fv::{equispaced_times, TimeMode};
use crossdiff::particles::{CompareOptions, ParticleSpec, RadialKernel};
use crossdiff::{
    make_grid, InitialCondition, KernelSpec, PotentialSpec, Problem, SpeciesSpec, SystemSpec,
};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub system: SystemSection,
    pub species: Vec<SpeciesSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub steady: SteadySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<ParticlesSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
}

fn default_x_min() -> f64 {
    -1.0
}
fn default_x_max() -> f64 {
    1.0
}
fn default_cells() -> usize {
    64
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            x_min: default_x_min(),
            x_max: default_x_max(),
            cells: default_cells(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_record_count")]
    pub record_count: usize,
}

fn default_mode() -> ModeName {
    ModeName::Fixed
}
fn default_dt() -> f64 {
    1e-6
}
fn default_safety() -> f64 {
    0.5
}
fn default_dt_max() -> f64 {
    1e-4
}
fn default_t_end() -> f64 {
    3.0
}
fn default_record_count() -> usize {
    10
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            dt: default_dt(),
            safety: default_safety(),
            dt_max: default_dt_max(),
            t_end: default_t_end(),
            record_count: default_record_count(),
        }
    }
}

impl TimeSection {
    pub fn mode(&self) -> TimeMode {
        match self.mode {
            ModeName::Fixed => TimeMode::Fixed { dt: self.dt },
            ModeName::Adaptive => TimeMode::Adaptive {
                safety: self.safety,
                dt_max: self.dt_max,
            },
        }
    }

    /// `record_count` equally spaced times after `t = 0`, plus `t = 0`.
    pub fn record_times(&self) -> Vec<f64> {
        equispaced_times(self.t_end, self.record_count)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// Number of species; when given it must match the `[[species]]` count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialName {
    Zero,
    Quadratic,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    None,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcName {
    Uniform,
    Leftbump,
    Rightbump,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSection {
    pub potential: PotentialName,
    /// Coefficient of `a·x²` for quadratic potentials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Values at the cell centres for tabulated potentials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential_values: Option<Vec<f64>>,
    #[serde(default = "default_kernel")]
    pub kernel: KernelName,
    /// `2J − 1` values on the difference lattice, offset `k` at index `k + J − 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_values: Option<Vec<f64>>,
    #[serde(default = "default_mass")]
    pub mass: f64,
    pub ic: IcName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ic_values: Option<Vec<f64>>,
}

fn default_kernel() -> KernelName {
    KernelName::None
}
fn default_mass() -> f64 {
    1.0
}

impl SpeciesSection {
    pub fn new(potential: PotentialSpec, ic: InitialCondition) -> Self {
        let mut s = Self {
            potential: PotentialName::Zero,
            a: None,
            potential_values: None,
            kernel: KernelName::None,
            kernel_values: None,
            mass: 1.0,
            ic: IcName::Uniform,
            ic_values: None,
        };
        match potential {
            PotentialSpec::Zero => {}
            PotentialSpec::Quadratic { a } => {
                s.potential = PotentialName::Quadratic;
                s.a = Some(a);
            }
            PotentialSpec::Tabulated(v) => {
                s.potential = PotentialName::Tabulated;
                s.potential_values = Some(v);
            }
        }
        s.ic = match ic {
            InitialCondition::Uniform => IcName::Uniform,
            InitialCondition::LeftBump => IcName::Leftbump,
            InitialCondition::RightBump => IcName::Rightbump,
            InitialCondition::Tabulated(v) => {
                s.ic_values = Some(v);
                IcName::Tabulated
            }
        };
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: String,
    /// Prepended to every file name.
    #[serde(default)]
    pub prefix: String,
}

fn default_directory() -> String {
    "out".to_string()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            prefix: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadySection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
}

fn default_tol() -> f64 {
    SteadyOptions::default().tol
}
fn default_max_iter() -> usize {
    SteadyOptions::default().max_iter
}
fn default_damping() -> f64 {
    SteadyOptions::default().damping
}

impl Default for SteadySection {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            damping: default_damping(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticleKernelName {
    Bump,
    BumpAutocorrelation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesSection {
    /// Particles per species.
    pub count: usize,
    /// Interaction range, shared by all species pairs.
    pub eps: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_particle_dt")]
    pub dt: f64,
    #[serde(default = "default_particle_kernel")]
    pub kernel: ParticleKernelName,
}

fn default_particle_dt() -> f64 {
    CompareOptions::default().particle_dt
}
fn default_particle_kernel() -> ParticleKernelName {
    ParticleKernelName::BumpAutocorrelation
}

/// Parse and check a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        let msg = e.message().trim().to_string();
        CliError::Config(match line {
            Some(l) => format!("line {l}: {msg}"),
            None => msg,
        })
    })?;
    config.check().map_err(|(key, msg)| {
        CliError::Config(match locate(text, &key) {
            Some(l) => format!("line {l}: {key}: {msg}"),
            None => format!("{key}: {msg}"),
        })
    })?;
    Ok(config)
}

/// Serialise a configuration back to TOML.
pub fn render_config(config: &RunConfig) -> String {
    toml::to_string(config).expect("configuration is always representable")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `section.key` or `species[k].key`, found by scanning section
/// headers and `key =` lines.
fn locate(text: &str, path: &str) -> Option<usize> {
    let (section, key) = path.split_once('.')?;
    let (name, index) = match section.split_once('[') {
        Some((n, rest)) => (n, rest.trim_end_matches(']').parse::<usize>().ok()?),
        None => (section, 0),
    };
    let mut counts = std::collections::HashMap::<String, usize>::new();
    let mut inside = false;
    let mut header_line = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let header = match line.strip_prefix("[[").and_then(|l| l.strip_suffix("]]")) {
            Some(h) => {
                let k = counts.entry(h.trim().to_string()).or_default();
                *k += 1;
                Some((h.trim(), *k - 1))
            }
            None => line
                .strip_prefix('[')
                .and_then(|l| l.strip_suffix(']'))
                .map(|h| (h.trim(), 0)),
        };
        if let Some((h, k)) = header {
            inside = h == name && k == index;
            if inside {
                header_line = Some(n + 1);
            }
        } else if inside && line.split('=').next().map(str::trim) == Some(key) {
            return Some(n + 1);
        }
    }
    header_line
}

type Check = Result<(), (String, String)>;

fn fail(key: impl Into<String>, msg: impl Into<String>) -> Check {
    Err((key.into(), msg.into()))
}

impl RunConfig {
    fn check(&self) -> Check {
        if self.species.is_empty() {
            return fail(
                "species.potential",
                "at least one [[species]] section is required",
            );
        }
        if let Some(m) = self.system.m {
            if m != self.species.len() {
                return fail(
                    "system.m",
                    format!(
                        "{m} species declared, {} [[species]] sections given",
                        self.species.len()
                    ),
                );
            }
        }
        if self.grid.cells < 2 {
            return fail("grid.cells", "need at least 2 cells");
        }
        if !(self.grid.x_max > self.grid.x_min) {
            return fail("grid.x_max", "must exceed x_min");
        }
        if !(self.time.t_end >= 0.0 && self.time.t_end.is_finite()) {
            return fail("time.t_end", "must be non-negative");
        }
        match self.time.mode {
            ModeName::Fixed if !(self.time.dt > 0.0) => return fail("time.dt", "must be positive"),
            ModeName::Adaptive if !(self.time.safety > 0.0 && self.time.safety <= 1.0) => {
                return fail("time.safety", "must lie in (0, 1]")
            }
            ModeName::Adaptive if !(self.time.dt_max > 0.0) => {
                return fail("time.dt_max", "must be positive")
            }
            _ => {}
        }
        if self.system.epsilon < 0.0 {
            return fail("system.epsilon", "must be non-negative");
        }
        let cells = self.grid.cells;
        for (k, s) in self.species.iter().enumerate() {
            let key = |f: &str| format!("species[{k}].{f}");
            match s.potential {
                PotentialName::Quadratic if s.a.is_none() => {
                    return fail(key("a"), "required for a quadratic potential")
                }
                PotentialName::Tabulated => match &s.potential_values {
                    None => {
                        return fail(
                            key("potential_values"),
                            "required for a tabulated potential",
                        )
                    }
                    Some(v) if v.len() != cells => {
                        return fail(
                            key("potential_values"),
                            format!("expected {cells} values, got {}", v.len()),
                        )
                    }
                    _ => {}
                },
                _ => {}
            }
            if s.a.is_some() && s.potential != PotentialName::Quadratic {
                return fail(key("a"), "only used by quadratic potentials");
            }
            if s.potential_values.is_some() && s.potential != PotentialName::Tabulated {
                return fail(key("potential_values"), "only used by tabulated potentials");
            }
            match (s.kernel, &s.kernel_values) {
                (KernelName::Tabulated, None) => {
                    return fail(key("kernel_values"), "required for a tabulated kernel")
                }
                (KernelName::None, Some(_)) => {
                    return fail(key("kernel_values"), "only used by tabulated kernels")
                }
                _ => {}
            }
            match (s.ic, &s.ic_values) {
                (IcName::Tabulated, None) => {
                    return fail(
                        key("ic_values"),
                        "required for a tabulated initial condition",
                    )
                }
                (IcName::Tabulated, _) => {}
                (_, Some(_)) => {
                    return fail(
                        key("ic_values"),
                        "only used by tabulated initial conditions",
                    )
                }
                _ => {}
            }
            if !(s.mass > 0.0) {
                return fail(key("mass"), "must be positive");
            }
        }
        if let Some(p) = &self.particles {
            if p.count == 0 {
                return fail("particles.count", "must be positive");
            }
            if !(p.eps > 0.0) {
                return fail("particles.eps", "must be positive");
            }
            if !(p.dt > 0.0) {
                return fail("particles.dt", "must be positive");
            }
        }
        Ok(())
    }

    pub fn system_spec(&self) -> SystemSpec {
        let species = self
            .species
            .iter()
            .map(|s| {
                let potential = match s.potential {
                    PotentialName::Zero => PotentialSpec::Zero,
                    PotentialName::Quadratic => PotentialSpec::Quadratic {
                        a: s.a.unwrap_or(0.0),
                    },
                    PotentialName::Tabulated => {
                        PotentialSpec::Tabulated(s.potential_values.clone().unwrap_or_default())
                    }
                };
                let ic = match s.ic {
                    IcName::Uniform => InitialCondition::Uniform,
                    IcName::Leftbump => InitialCondition::LeftBump,
                    IcName::Rightbump => InitialCondition::RightBump,
                    IcName::Tabulated => {
                        InitialCondition::Tabulated(s.ic_values.clone().unwrap_or_default())
                    }
                };
                let kernel = match s.kernel {
                    KernelName::None => KernelSpec::None,
                    KernelName::Tabulated => {
                        KernelSpec::Tabulated(s.kernel_values.clone().unwrap_or_default())
                    }
                };
                SpeciesSpec::new(potential, ic)
                    .with_kernel(kernel)
                    .with_mass(s.mass)
            })
            .collect();
        SystemSpec::new(self.system.delta, species).with_epsilon(self.system.epsilon)
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        let grid = make_grid(self.grid.x_min, self.grid.x_max, self.grid.cells)?;
        Ok(Problem::new(self.system_spec(), grid)?)
    }

    pub fn steady_options(&self) -> SteadyOptions {
        SteadyOptions {
            tol: self.steady.tol,
            max_iter: self.steady.max_iter,
            damping: self.steady.damping,
        }
    }

    pub fn particle_spec(&self, problem: &Problem) -> Result<ParticleSpec, CliError> {
        let p = self
            .particles
            .as_ref()
            .ok_or_else(|| CliError::Config("a [particles] section is required".into()))?;
        let mut spec = ParticleSpec::uniform(
            problem.grid().clone(),
            self.system.delta,
            problem
                .spec()
                .species
                .iter()
                .map(|s| s.potential.clone())
                .collect(),
            p.count,
            p.eps,
            p.seed,
        );
        spec.kernel = match p.kernel {
            ParticleKernelName::Bump => RadialKernel::bump(),
            ParticleKernelName::BumpAutocorrelation => RadialKernel::bump_autocorrelation(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        let mut c = self.clone();
        c.system.delta = delta;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[[species]]\npotential = \"zero\"\nic = \"uniform\"\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.cells, 64);
        assert_eq!(c.time.t_end, 3.0);
        assert_eq!(c.time.dt, 1e-6);
        assert_eq!(c.time.mode, ModeName::Fixed);
        assert_eq!(c.species[0].mass, 1.0);
        assert_eq!(c.time.record_times().len(), 11);
        assert!(c.particles.is_none());
    }

    #[test]
    fn large_delta_is_accepted() {
        let text = format!("[system]\ndelta = 1.5\n\n{MINIMAL}");
        assert_eq!(parse_config(&text).unwrap().system.delta, 1.5);
    }

    #[test]
    fn misspelled_key_reports_line() {
        let text = format!("[grid]\ncells = 32\n\n[system]\ndetla = 0.4\n\n{MINIMAL}");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("line 5"), "{err}");
        assert!(err.contains("detla"), "{err}");
    }

    #[test]
    fn type_mismatch_and_missing_species() {
        let err = parse_config(&format!("[grid]\ncells = \"many\"\n{MINIMAL}"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(parse_config("[grid]\ncells = 32\n").is_err());
    }

    #[test]
    fn semantic_errors_name_key_and_line() {
        let text = "[[species]]\npotential = \"zero\"\nic = \"uniform\"\n\n[[species]]\npotential = \"quadratic\"\nic = \"uniform\"\n";
        let err = parse_config(text).unwrap_err().to_string();
        assert!(err.contains("species[1].a"), "{err}");
        assert!(err.contains("line 5"), "{err}");

        let text = "[system]\nm = 3\n\n[[species]]\npotential = \"zero\"\nic = \"uniform\"\n";
        let err = parse_config(text).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("system.m"), "{err}");
    }

    #[test]
    fn round_trip_with_optional_sections() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.particles = Some(ParticlesSection {
            count: 100,
            eps: 0.05,
            seed: 4,
            dt: 1e-3,
            kernel: ParticleKernelName::Bump,
        });
        c.species.push(SpeciesSection::new(
            PotentialSpec::Tabulated(vec![0.1; 64]),
            InitialCondition::Tabulated(vec![1.0 / 3.0; 64]),
        ));
        c.system.m = Some(2);
        let text = render_config(&c);
        assert_eq!(parse_config(&text).unwrap(), c);
    }
}

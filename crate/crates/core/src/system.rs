//! Species and system descriptors, and the validated [`Problem`] that the
//! solvers consume.

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// External confinement potential `V_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// `V(x) = a·x²`
    Quadratic {
        a: f64,
    },
    /// Samples at the cell centres; length must equal the cell count.
    Tabulated(Vec<f64>),
}

impl PotentialSpec {
    pub fn sample(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        match self {
            PotentialSpec::Zero => Ok(vec![0.0; grid.cells()]),
            PotentialSpec::Quadratic { a } => {
                Ok(grid.centers().iter().map(|x| a * x * x).collect())
            }
            PotentialSpec::Tabulated(values) => {
                if values.len() != grid.cells() {
                    return Err(Error::config(format!(
                        "tabulated potential has {} samples, grid has {} cells",
                        values.len(),
                        grid.cells()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config(
                        "tabulated potential contains non-finite values",
                    ));
                }
                Ok(values.clone())
            }
        }
    }

    /// `V′(x)` at an arbitrary point of the domain. Tabulated potentials use
    /// the slope of their piecewise-linear interpolant through the cell centres.
    pub fn gradient_at(&self, x: f64, grid: &Grid1D) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Quadratic { a } => 2.0 * a * x,
            PotentialSpec::Tabulated(values) => {
                let dx = grid.dx();
                let s = ((x - grid.centers()[0]) / dx).floor();
                let k = (s.max(0.0) as usize).min(values.len() - 2);
                (values[k + 1] - values[k]) / dx
            }
        }
    }
}

/// Self-interaction kernel `W_i`, stored on the difference lattice
/// `{k·dx : −(J−1) ≤ k ≤ J−1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    None,
    /// `2J − 1` samples; entry `k + J − 1` holds `W(k·dx)`.
    Tabulated(Vec<f64>),
}

impl KernelSpec {
    /// Tabulate `w` on the difference lattice of `grid`.
    pub fn from_fn(grid: &Grid1D, w: impl Fn(f64) -> f64) -> Self {
        let j = grid.cells() as i64;
        let dx = grid.dx();
        KernelSpec::Tabulated((-(j - 1)..j).map(|k| w(k as f64 * dx)).collect())
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        let KernelSpec::Tabulated(w) = self else {
            return Ok(());
        };
        let expected = 2 * grid.cells() - 1;
        if w.len() != expected {
            return Err(Error::config(format!(
                "kernel lattice has {} samples, grid needs {expected}",
                w.len()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("kernel contains non-finite values"));
        }
        let scale = w.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        let n = w.len();
        for k in 0..n / 2 {
            if (w[k] - w[n - 1 - k]).abs() > 1e-12 * scale {
                return Err(Error::config("kernel is not even: W(-r) != W(r)"));
            }
        }
        Ok(())
    }
}

/// Initial profile, rescaled to the configured mass after sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Uniform,
    /// `[(x+0.5)(−0.9−x)]₊`, supported on `(−0.9, −0.5)`.
    LeftBump,
    /// `[(x−0.5)(0.9−x)]₊`, supported on `(0.5, 0.9)`.
    RightBump,
    Tabulated(Vec<f64>),
}

impl InitialCondition {
    /// Unnormalised profile at the cell centres.
    pub fn profile(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        let xs = grid.centers();
        match self {
            InitialCondition::Uniform => Ok(vec![1.0; xs.len()]),
            InitialCondition::LeftBump => Ok(xs
                .iter()
                .map(|x| ((x + 0.5) * (-0.9 - x)).max(0.0))
                .collect()),
            InitialCondition::RightBump => Ok(xs
                .iter()
                .map(|x| ((x - 0.5) * (0.9 - x)).max(0.0))
                .collect()),
            InitialCondition::Tabulated(values) => {
                if values.len() != xs.len() {
                    return Err(Error::config(format!(
                        "tabulated initial condition has {} samples, grid has {} cells",
                        values.len(),
                        xs.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::config(
                        "tabulated initial condition must be finite and non-negative",
                    ));
                }
                Ok(values.clone())
            }
        }
    }

    /// The profile reflected about `x = 0`.
    pub fn mirrored(&self) -> Self {
        match self {
            InitialCondition::Uniform => InitialCondition::Uniform,
            InitialCondition::LeftBump => InitialCondition::RightBump,
            InitialCondition::RightBump => InitialCondition::LeftBump,
            InitialCondition::Tabulated(v) => {
                InitialCondition::Tabulated(v.iter().rev().copied().collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSpec {
    pub potential: PotentialSpec,
    pub kernel: KernelSpec,
    pub mass: f64,
    pub ic: InitialCondition,
}

impl SpeciesSpec {
    /// Unit-mass species with no kernel.
    pub fn new(potential: PotentialSpec, ic: InitialCondition) -> Self {
        Self {
            potential,
            kernel: KernelSpec::None,
            mass: 1.0,
            ic,
        }
    }

    pub fn with_kernel(mut self, kernel: KernelSpec) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = mass;
        self
    }
}

/// `M` species coupled by cross-diffusion of strength `delta`, with optional
/// linear diffusivity `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub delta: f64,
    pub epsilon: f64,
    pub species: Vec<SpeciesSpec>,
}

impl SystemSpec {
    pub fn new(delta: f64, species: Vec<SpeciesSpec>) -> Self {
        Self {
            delta,
            epsilon: 0.0,
            species,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.species.is_empty() {
            return Err(Error::config("system needs at least one species"));
        }
        if !self.delta.is_finite() {
            return Err(Error::config("delta must be finite"));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::config(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        for (i, s) in self.species.iter().enumerate() {
            if !(s.mass.is_finite() && s.mass > 0.0) {
                return Err(Error::config(format!(
                    "species {i}: mass must be positive, got {}",
                    s.mass
                )));
            }
        }
        if self.delta.abs() >= 1.0 {
            log::warn!(
                "|delta| = {} >= 1: the energy is no longer strictly convex",
                self.delta.abs()
            );
        }
        Ok(())
    }
}

/// A system paired with its grid, with the potentials sampled once.
#[derive(Debug, Clone)]
pub struct Problem {
    spec: SystemSpec,
    grid: Grid1D,
    potentials: Vec<Vec<f64>>,
}

impl Problem {
    pub fn new(spec: SystemSpec, grid: Grid1D) -> Result<Self> {
        spec.validate()?;
        let potentials = spec
            .species
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.kernel
                    .validate(&grid)
                    .map_err(|e| Error::config(format!("species {i}: {e}")))?;
                s.potential
                    .sample(&grid)
                    .map_err(|e| Error::config(format!("species {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec,
            grid,
            potentials,
        })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn species_count(&self) -> usize {
        self.spec.species.len()
    }

    pub fn delta(&self) -> f64 {
        self.spec.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.spec.epsilon
    }

    /// `V_i` at the cell centres.
    pub fn potential(&self, i: usize) -> &[f64] {
        &self.potentials[i]
    }

    pub fn kernel(&self, i: usize) -> &KernelSpec {
        &self.spec.species[i].kernel
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.spec.species[i].mass
    }

    /// Largest discrete slope `|V_{j+1} − V_j| / dx` over all species.
    pub fn potential_lipschitz(&self) -> f64 {
        let dx = self.grid.dx();
        self.potentials
            .iter()
            .flat_map(|v| v.windows(2).map(move |w| (w[1] - w[0]).abs() / dx))
            .fold(0.0, f64::max)
    }
}

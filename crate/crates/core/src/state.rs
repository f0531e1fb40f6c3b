use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::system::SystemSpec;

/// Cell-average densities of every species at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    /// One row of `J` cell values per species.
    pub u: Vec<Vec<f64>>,
}

impl State {
    pub fn zeros(species: usize, cells: usize) -> Self {
        Self {
            t: 0.0,
            u: vec![vec![0.0; cells]; species],
        }
    }

    pub fn species_count(&self) -> usize {
        self.u.len()
    }

    pub fn mass(&self, i: usize, grid: &Grid1D) -> f64 {
        grid.integrate(&self.u[i])
    }

    pub fn masses(&self, grid: &Grid1D) -> Vec<f64> {
        self.u.iter().map(|row| grid.integrate(row)).collect()
    }

    pub fn min_density(&self) -> f64 {
        self.u
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_density(&self) -> f64 {
        self.u.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// Sample each species' initial profile at the cell centres and rescale it
/// to the configured mass.
pub fn build_initial_state(spec: &SystemSpec, grid: &Grid1D) -> Result<State> {
    let u = spec
        .species
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let profile =
                s.ic.profile(grid)
                    .map_err(|e| Error::config(format!("species {i}: {e}")))?;
            let raw = grid.integrate(&profile);
            if !(raw > 0.0) {
                return Err(Error::config(format!(
                    "species {i}: initial condition vanishes on the grid, cannot normalise"
                )));
            }
            let scale = s.mass / raw;
            Ok(profile.into_iter().map(|v| v * scale).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(State { t: 0.0, u })
}

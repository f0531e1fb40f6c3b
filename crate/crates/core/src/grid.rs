use crate::error::{Error, Result};

/// Uniform cell-centred partition of `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    dx: f64,
    centers: Vec<f64>,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::config("grid bounds must be finite"));
        }
        if x_max <= x_min {
            return Err(Error::config(format!(
                "grid interval is empty or inverted: [{x_min}, {x_max}]"
            )));
        }
        if cells < 2 {
            return Err(Error::config(format!(
                "grid needs at least 2 cells, got {cells}"
            )));
        }
        let dx = (x_max - x_min) / cells as f64;
        let centers = (0..cells).map(|j| x_min + (j as f64 + 0.5) * dx).collect();
        Ok(Self {
            x_min,
            x_max,
            dx,
            centers,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Number of cells `J`.
    pub fn cells(&self) -> usize {
        self.centers.len()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// `|Ω|`
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Index of the cell containing `x`; points on the right edge belong to the last cell.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !(self.x_min..=self.x_max).contains(&x) {
            return None;
        }
        let j = ((x - self.x_min) / self.dx).floor() as usize;
        Some(j.min(self.cells() - 1))
    }

    /// Midpoint-rule integral of a cell-average row.
    pub fn integrate(&self, row: &[f64]) -> f64 {
        self.dx * row.iter().sum::<f64>()
    }
}

/// Uniform grid with `cells` cells on `[x_min, x_max]`.
pub fn make_grid(x_min: f64, x_max: f64, cells: usize) -> Result<Grid1D> {
    Grid1D::new(x_min, x_max, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid() {
        let g = make_grid(-1.0, 1.0, 64).unwrap();
        assert_eq!(g.dx(), 0.03125);
        assert_eq!(g.centers()[0], -0.984375);
        assert_eq!(g.length(), 2.0);
    }

    #[test]
    fn small_grids() {
        assert_eq!(make_grid(-1.0, 1.0, 2).unwrap().centers(), &[-0.5, 0.5]);
        assert_eq!(
            make_grid(0.0, 1.0, 4).unwrap().centers(),
            &[0.125, 0.375, 0.625, 0.875]
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(make_grid(1.0, -1.0, 8), Err(Error::Config(_))));
        assert!(matches!(make_grid(0.0, 0.0, 8), Err(Error::Config(_))));
        assert!(matches!(make_grid(0.0, 1.0, 0), Err(Error::Config(_))));
        assert!(matches!(make_grid(0.0, 1.0, 1), Err(Error::Config(_))));
    }

    #[test]
    fn cell_lookup() {
        let g = make_grid(0.0, 1.0, 4).unwrap();
        assert_eq!(g.cell_of(0.0), Some(0));
        assert_eq!(g.cell_of(0.3), Some(1));
        assert_eq!(g.cell_of(1.0), Some(3));
        assert_eq!(g.cell_of(1.01), None);
    }
}

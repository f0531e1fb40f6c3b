//! Numerical laboratory for systems of porous-medium equations with small
//! cross-diffusion, external potentials and nonlocal self-interaction:
//!
//! ```text
//! ∂t u_i = ∂x[ u_i ∂x(u_i + V_i + W_i*u_i + δ Σ_{j≠i} u_j) + ε ∂x u_i ]
//! ```
//!
//! on an interval with no-flux boundaries.

// `!(x > 0.0)` style checks deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod fv;
pub mod grid;
pub mod particles;
pub mod state;
pub mod system;

pub use error::{Error, Result};
pub use grid::{make_grid, Grid1D};
pub use state::{build_initial_state, State};
pub use system::{InitialCondition, KernelSpec, PotentialSpec, Problem, SpeciesSpec, SystemSpec};

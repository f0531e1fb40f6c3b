//! Positivity-preserving upwind finite-volume scheme for
//!
//! ```text
//! ∂t u_i = ∂x[ u_i ∂x(u_i + V_i + W_i*u_i + δ Σ_{j≠i} u_j) + ε ∂x u_i ]
//! ```
//!
//! with no-flux boundaries, advanced by forward Euler.

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::state::State;
use crate::system::{KernelSpec, Problem};

/// Velocities at the `J + 1` cell faces of one species. Boundary faces are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceVelocities {
    pub v: Vec<f64>,
}

impl FaceVelocities {
    pub fn max_abs(&self) -> f64 {
        self.v.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt_used: f64,
    pub max_velocity: f64,
    pub min_density_after: f64,
}

/// Midpoint-rule convolution `(W*u)(x_j) = dx Σ_k W((j−k)dx) u_k`.
pub fn convolve(kernel: &KernelSpec, u_row: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    let n = grid.cells();
    if u_row.len() != n {
        return Err(Error::config(format!(
            "density row has {} cells, grid has {n}",
            u_row.len()
        )));
    }
    kernel.validate(grid)?;
    let mut out = vec![0.0; n];
    convolve_into(kernel, u_row, grid.dx(), &mut out);
    Ok(out)
}

fn convolve_into(kernel: &KernelSpec, u: &[f64], dx: f64, out: &mut [f64]) {
    match kernel {
        KernelSpec::None => out.iter_mut().for_each(|o| *o = 0.0),
        KernelSpec::Tabulated(w) => {
            let n = u.len();
            for (j, o) in out.iter_mut().enumerate() {
                // W((j−k)dx) lives at index j − k + n − 1
                let acc: f64 = u
                    .iter()
                    .enumerate()
                    .map(|(k, uk)| w[j + n - 1 - k] * uk)
                    .sum();
                *o = dx * acc;
            }
        }
    }
}

/// `ξ_i = u_i + V_i + W_i*u_i + δ Σ_{j≠i} u_j` at the cell centres; the
/// species drifts with velocity `−∂x ξ_i`.
pub fn potential_xi(state: &State, problem: &Problem, i: usize) -> Vec<f64> {
    let n = problem.grid().cells();
    let (mut conv, mut cross, mut xi) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    xi_into(state, problem, i, &mut conv, &mut cross, &mut xi);
    xi
}

fn xi_into(
    state: &State,
    problem: &Problem,
    i: usize,
    conv: &mut [f64],
    cross: &mut [f64],
    xi: &mut [f64],
) {
    let delta = problem.delta();
    let v = problem.potential(i);
    let u = &state.u[i];
    cross.iter_mut().for_each(|c| *c = 0.0);
    for (k, row) in state.u.iter().enumerate() {
        if k != i {
            cross.iter_mut().zip(row).for_each(|(c, r)| *c += r);
        }
    }
    match problem.kernel(i) {
        KernelSpec::None => {
            for j in 0..xi.len() {
                xi[j] = u[j] + v[j] + delta * cross[j];
            }
        }
        kernel => {
            convolve_into(kernel, u, problem.grid().dx(), conv);
            for j in 0..xi.len() {
                xi[j] = u[j] + v[j] + conv[j] + delta * cross[j];
            }
        }
    }
}

/// `v_{j+½} = −(ξ_{j+1} − ξ_j)/dx` on interior faces, zero on the boundary.
pub fn face_velocities(xi: &[f64], grid: &Grid1D) -> FaceVelocities {
    let mut v = vec![0.0; xi.len() + 1];
    velocities_into(xi, grid.dx(), &mut v);
    FaceVelocities { v }
}

fn velocities_into(xi: &[f64], dx: f64, v: &mut [f64]) {
    let n = xi.len();
    v[0] = 0.0;
    v[n] = 0.0;
    for j in 1..n {
        v[j] = -(xi[j] - xi[j - 1]) / dx;
    }
}

/// Donor-cell flux through a face with velocity `v_face`.
#[inline]
pub fn upwind_flux(v_face: f64, u_left: f64, u_right: f64) -> f64 {
    u_left * v_face.max(0.0) + u_right * v_face.min(0.0)
}

/// Largest stable explicit step for the current state, scaled by `safety`.
///
/// The advective limit keeps the upwind update a convex combination (each
/// cell can lose mass through both faces plus the `ε` stencil); the diffusive
/// limit treats `u_max (1 + |δ|(M−1))` as the effective diffusivity of the
/// degenerate term. Returns `dt_max` when neither limit binds.
pub fn cfl_dt(state: &State, problem: &Problem, safety: f64, dt_max: f64) -> f64 {
    let grid = problem.grid();
    let dx = grid.dx();
    let eps = problem.epsilon();
    let m = problem.species_count() as f64;

    let mut v_max: f64 = 0.0;
    let n = grid.cells();
    let (mut conv, mut cross, mut xi) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..problem.species_count() {
        xi_into(state, problem, i, &mut conv, &mut cross, &mut xi);
        for w in xi.windows(2) {
            v_max = v_max.max((w[1] - w[0]).abs() / dx);
        }
    }
    let u_max = state.max_density();

    let rate = 2.0 * v_max / dx + 2.0 * eps / (dx * dx);
    let advective = if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    };
    let diff_coeff = eps
        + u_max * (1.0 + problem.delta().abs() * (m - 1.0))
        + problem.potential_lipschitz() * dx;
    let diffusive = if diff_coeff > 0.0 {
        dx * dx / (2.0 * diff_coeff)
    } else {
        f64::INFINITY
    };

    let dt = safety * advective.min(diffusive);
    if dt.is_finite() {
        dt.min(dt_max)
    } else {
        dt_max
    }
}

/// Reusable scratch buffers for repeated steps on one problem.
#[derive(Debug, Clone)]
pub struct Stepper {
    conv: Vec<f64>,
    cross: Vec<f64>,
    xi: Vec<f64>,
    v: Vec<f64>,
    flux: Vec<Vec<f64>>,
}

impl Stepper {
    pub fn new(problem: &Problem) -> Self {
        let n = problem.grid().cells();
        Self {
            conv: vec![0.0; n],
            cross: vec![0.0; n],
            xi: vec![0.0; n],
            v: vec![0.0; n + 1],
            flux: vec![vec![0.0; n + 1]; problem.species_count()],
        }
    }

    /// Advance `state` by `dt` in place.
    pub fn advance(&mut self, state: &mut State, problem: &Problem, dt: f64) -> Result<StepReport> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Solver(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let dx = problem.grid().dx();
        let eps = problem.epsilon();
        let n = problem.grid().cells();
        let mut max_velocity: f64 = 0.0;

        // all fluxes come from the old state
        for i in 0..problem.species_count() {
            xi_into(
                state,
                problem,
                i,
                &mut self.conv,
                &mut self.cross,
                &mut self.xi,
            );
            velocities_into(&self.xi, dx, &mut self.v);
            let u = &state.u[i][..n];
            let v = &self.v[..=n];
            let f = &mut self.flux[i][..=n];
            f[0] = 0.0;
            f[n] = 0.0;
            if eps > 0.0 {
                for j in 1..n {
                    max_velocity = max_velocity.max(v[j].abs());
                    f[j] = upwind_flux(v[j], u[j - 1], u[j]) - eps * (u[j] - u[j - 1]) / dx;
                }
            } else {
                for j in 1..n {
                    max_velocity = max_velocity.max(v[j].abs());
                    f[j] = upwind_flux(v[j], u[j - 1], u[j]);
                }
            }
        }

        let ratio = dt / dx;
        let t_new = state.t + dt;
        let mut min_density = f64::INFINITY;
        for (i, row) in state.u.iter_mut().enumerate() {
            let f = &self.flux[i];
            for (j, u) in row.iter_mut().enumerate() {
                let next = *u - ratio * (f[j + 1] - f[j]);
                if !next.is_finite() {
                    return Err(Error::Blowup {
                        t: t_new,
                        species: i,
                        cell: j,
                    });
                }
                // subnormal densities are flushed; their arithmetic is very slow
                let next = if next.abs() < f64::MIN_POSITIVE {
                    0.0
                } else {
                    next
                };
                *u = next;
                min_density = min_density.min(next);
            }
        }
        state.t = t_new;
        Ok(StepReport {
            dt_used: dt,
            max_velocity,
            min_density_after: min_density,
        })
    }
}

/// One forward-Euler step of size `dt`.
pub fn step(state: &State, problem: &Problem, dt: f64) -> Result<(State, StepReport)> {
    let mut next = state.clone();
    let report = Stepper::new(problem).advance(&mut next, problem, dt)?;
    Ok((next, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeMode {
    Fixed {
        dt: f64,
    },
    /// `dt = cfl_dt(.., safety, dt_max)` recomputed every step.
    Adaptive {
        safety: f64,
        dt_max: f64,
    },
}

/// Receives a diagnostics record and the matching density snapshot at each
/// record time.
pub trait Sink {
    fn record(&mut self, record: &DiagnosticsRecord, state: &State);
}

impl<F: FnMut(&DiagnosticsRecord, &State)> Sink for F {
    fn record(&mut self, record: &DiagnosticsRecord, state: &State) {
        self(record, state)
    }
}

/// Keeps every record and snapshot in memory.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<State>,
}

impl Sink for Trajectory {
    fn record(&mut self, record: &DiagnosticsRecord, state: &State) {
        self.records.push(record.clone());
        self.snapshots.push(state.clone());
    }
}

/// `count + 1` equally spaced times `k·t_end/count`, `k = 0..=count`.
pub fn equispaced_times(t_end: f64, count: usize) -> Vec<f64> {
    if count == 0 {
        return vec![0.0];
    }
    (0..=count)
        .map(|k| t_end * k as f64 / count as f64)
        .collect()
}

/// Integrate from the initial state to `t_end`, calling `sink` at the first
/// step reaching each of `record_times`.
pub fn run(
    problem: &Problem,
    t_end: f64,
    mode: TimeMode,
    record_times: &[f64],
    sink: &mut impl Sink,
) -> Result<State> {
    let initial = crate::state::build_initial_state(problem.spec(), problem.grid())?;
    run_from(initial, problem, t_end, mode, record_times, sink)
}

/// As [`run`], starting from an explicit state at `t = 0`.
pub fn run_from(
    mut state: State,
    problem: &Problem,
    t_end: f64,
    mode: TimeMode,
    record_times: &[f64],
    sink: &mut impl Sink,
) -> Result<State> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::config(format!(
            "final time must be non-negative, got {t_end}"
        )));
    }
    if record_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::config("record times must be sorted"));
    }
    if record_times.iter().any(|&r| !(0.0..=t_end).contains(&r)) {
        return Err(Error::config(format!(
            "record times must lie in [0, {t_end}]"
        )));
    }
    match mode {
        TimeMode::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
            return Err(Error::config(format!(
                "fixed dt must be positive, got {dt}"
            )));
        }
        TimeMode::Adaptive { safety, dt_max }
            if !(safety > 0.0 && safety <= 1.0 && dt_max > 0.0) =>
        {
            return Err(Error::config(format!(
                "adaptive mode needs 0 < safety <= 1 and dt_max > 0, got {safety}, {dt_max}"
            )));
        }
        _ => {}
    }

    state.t = 0.0;
    let slack = 1e-12 * t_end.max(1.0);
    let mut next_record = 0;
    let mut emit = |state: &State, next_record: &mut usize| {
        while *next_record < record_times.len() && record_times[*next_record] <= state.t + slack {
            let rec = DiagnosticsRecord::from_state(state, problem);
            sink.record(&rec, state);
            *next_record += 1;
        }
    };
    emit(&state, &mut next_record);

    let mut stepper = Stepper::new(problem);
    match mode {
        TimeMode::Fixed { dt } => {
            let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as u64;
            for k in 1..=steps {
                let target = if k == steps { t_end } else { k as f64 * dt };
                let h = target - state.t;
                stepper.advance(&mut state, problem, h)?;
                state.t = target;
                emit(&state, &mut next_record);
            }
        }
        TimeMode::Adaptive { safety, dt_max } => {
            while t_end - state.t > slack {
                let h = cfl_dt(&state, problem, safety, dt_max).min(t_end - state.t);
                if !(h > 1e-300) {
                    return Err(Error::Blowup {
                        t: state.t,
                        species: 0,
                        cell: 0,
                    });
                }
                stepper.advance(&mut state, problem, h)?;
                if t_end - state.t <= slack {
                    state.t = t_end;
                }
                emit(&state, &mut next_record);
            }
            state.t = t_end;
        }
    }
    emit(&state, &mut next_record);
    Ok(state)
}

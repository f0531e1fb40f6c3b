//! The energy functional
//!
//! ```text
//! E[u] = ∫ Σ_i (½u_i² + V_i u_i + ½u_i (W_i*u_i)) + δ Σ_{i<k} u_i u_k
//! ```
//!
//! its mass-constrained minimisers, and energy-dissipation series.

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::fv::convolve;
use crate::state::State;
use crate::system::{KernelSpec, Problem};

/// Midpoint-rule value of the energy.
pub fn energy(state: &State, problem: &Problem) -> f64 {
    let grid = problem.grid();
    let delta = problem.delta();
    let n = grid.cells();
    let mut total = 0.0;
    for (i, row) in state.u.iter().enumerate() {
        let v = problem.potential(i);
        let conv = match problem.kernel(i) {
            KernelSpec::None => None,
            k => Some(convolve(k, row, grid).expect("kernel validated by Problem")),
        };
        for j in 0..n {
            let u = row[j];
            let mut e = 0.5 * u * u + v[j] * u;
            if let Some(c) = &conv {
                e += 0.5 * u * c[j];
            }
            total += e;
        }
    }
    for i in 0..state.u.len() {
        for k in i + 1..state.u.len() {
            let cross: f64 = state.u[i].iter().zip(&state.u[k]).map(|(a, b)| a * b).sum();
            total += delta * cross;
        }
    }
    grid.dx() * total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    /// Stop once a full undamped sweep moves the densities by at most this (L∞).
    pub tol: f64,
    pub max_iter: usize,
    /// Weight of the new iterate in the damped update.
    pub damping: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200_000,
            damping: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub u_inf: Vec<Vec<f64>>,
    /// Mass multipliers `c_i`.
    pub lagrange_c: Vec<f64>,
    pub iterations: usize,
    /// L∞ size of the last undamped sweep.
    pub residual: f64,
    pub converged: bool,
}

impl SteadyState {
    pub fn as_state(&self) -> State {
        State {
            t: f64::INFINITY,
            u: self.u_inf.clone(),
        }
    }
}

/// Mass-constrained minimiser of the energy by damped fixed-point iteration on
///
/// ```text
/// u_i = (c_i − V_i − W_i*u_i − δ Σ_{k≠i} u_k)₊,   ∫u_i = m_i
/// ```
///
/// Each sweep solves for every `c_i` by bisection with the other species
/// frozen (Jacobi), then relaxes towards the result with weight `damping`.
/// Hitting `max_iter` is reported through `converged`, not as an error.
pub fn steady_state(problem: &Problem, opts: SteadyOptions) -> Result<SteadyState> {
    if problem.delta().abs() >= 1.0 {
        return Err(Error::Solver(format!(
            "steady state needs |delta| < 1 for a strictly convex energy, got {}",
            problem.delta()
        )));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::config(format!(
            "damping must lie in (0, 1], got {}",
            opts.damping
        )));
    }
    let grid = problem.grid();
    let m = problem.species_count();
    let n = grid.cells();

    let mut u: Vec<Vec<f64>> = (0..m)
        .map(|i| vec![problem.mass(i) / grid.length(); n])
        .collect();
    let mut c = vec![0.0; m];
    let mut mapped = u.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    while iterations < opts.max_iter {
        iterations += 1;
        residual = sweep(problem, &u, &mut mapped, &mut c)?;
        if residual <= opts.tol {
            return Ok(SteadyState {
                u_inf: mapped,
                lagrange_c: c,
                iterations,
                residual,
                converged: true,
            });
        }
        for (row, new) in u.iter_mut().zip(&mapped) {
            for (a, b) in row.iter_mut().zip(new) {
                *a = (1.0 - opts.damping) * *a + opts.damping * b;
            }
        }
    }
    log::warn!("steady state not converged after {iterations} sweeps, residual {residual:e}");
    Ok(SteadyState {
        u_inf: mapped,
        lagrange_c: c,
        iterations,
        residual,
        converged: false,
    })
}

/// One Jacobi sweep `u → T(u)`; returns `‖T(u) − u‖∞`.
fn sweep(problem: &Problem, u: &[Vec<f64>], out: &mut [Vec<f64>], c: &mut [f64]) -> Result<f64> {
    let grid = problem.grid();
    let delta = problem.delta();
    let n = grid.cells();
    let mut g = vec![0.0; n];
    let mut residual: f64 = 0.0;
    for i in 0..u.len() {
        let conv = convolve(problem.kernel(i), &u[i], grid)?;
        let v = problem.potential(i);
        for j in 0..n {
            let cross: f64 = u
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, r)| r[j])
                .sum();
            g[j] = v[j] + conv[j] + delta * cross;
        }
        c[i] = solve_multiplier(&g, problem.mass(i), grid.dx())?;
        for j in 0..n {
            let next = (c[i] - g[j]).max(0.0);
            residual = residual.max((next - u[i][j]).abs());
            out[i][j] = next;
        }
    }
    Ok(residual)
}

/// Find `c` with `dx Σ_j (c − g_j)₊ = mass`.
fn solve_multiplier(g: &[f64], mass: f64, dx: f64) -> Result<f64> {
    let mass_at = |c: f64| dx * g.iter().map(|gj| (c - gj).max(0.0)).sum::<f64>();
    let lo0 = g.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lo = lo0;
    let mut width = mass * g.len() as f64;
    let mut hi = lo + width;
    let mut widenings = 0;
    while mass_at(hi) < mass {
        width *= 2.0;
        hi = lo0 + width;
        widenings += 1;
        if widenings > 200 || !hi.is_finite() {
            return Err(Error::Solver(format!(
                "could not bracket the mass multiplier for mass {mass}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass_at(mid) < mass {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // exact solve on the active set found by bisection
    let mut c = hi;
    for _ in 0..4 {
        let active: Vec<f64> = g.iter().copied().filter(|gj| *gj < c).collect();
        if active.is_empty() {
            break;
        }
        let exact = (mass / dx + active.iter().sum::<f64>()) / active.len() as f64;
        let still = g.iter().filter(|gj| **gj < exact).count();
        c = exact;
        if still == active.len() {
            break;
        }
    }
    Ok(c)
}

/// One entry of an energy-dissipation series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationStep {
    pub t: f64,
    pub energy: f64,
    /// `E(t_k) − E(t_{k−1})`
    pub delta_e: f64,
    /// Set when the energy rose by more than the tolerance.
    pub flagged: bool,
}

/// Energy differences between consecutive records. Increases above
/// `tol · (1 + |E|)` are flagged.
pub fn dissipation_series(records: &[DiagnosticsRecord], tol: f64) -> Vec<DissipationStep> {
    records
        .windows(2)
        .map(|w| {
            let delta_e = w[1].energy - w[0].energy;
            DissipationStep {
                t: w[1].t,
                energy: w[1].energy,
                delta_e,
                flagged: delta_e > tol * (1.0 + w[1].energy.abs()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::state::build_initial_state;
    use crate::system::{InitialCondition, PotentialSpec, SpeciesSpec, SystemSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(delta: f64, cells: usize) -> Problem {
        let spec = SystemSpec::new(
            delta,
            vec![
                SpeciesSpec::new(PotentialSpec::Zero, InitialCondition::Uniform),
                SpeciesSpec::new(
                    PotentialSpec::Quadratic { a: 2.0 },
                    InitialCondition::Uniform,
                ),
            ],
        );
        Problem::new(spec, make_grid(-1.0, 1.0, cells).unwrap()).unwrap()
    }

    fn single(v: PotentialSpec, kernel: KernelSpec, cells: usize) -> Problem {
        let g = make_grid(-1.0, 1.0, cells).unwrap();
        let spec = SystemSpec::new(
            0.0,
            vec![SpeciesSpec::new(v, InitialCondition::Uniform).with_kernel(kernel)],
        );
        Problem::new(spec, g).unwrap()
    }

    #[test]
    fn zero_state_energy() {
        let p = pair(0.4, 16);
        assert_eq!(energy(&State::zeros(2, 16), &p), 0.0);
    }

    #[test]
    fn uniform_pair_energy() {
        for delta in [0.0, 0.4, 0.9] {
            let p = pair(delta, 256);
            let s = build_initial_state(p.spec(), p.grid()).unwrap();
            let exact = 7.0 / 6.0 + delta / 2.0;
            // midpoint rule on x²: error dx²/6 scaled by a = 2 and u = 1/2
            assert!((energy(&s, &p) - exact).abs() < 2.0 * p.grid().dx().powi(2));
        }
    }

    #[test]
    fn constant_kernel_energy() {
        let g = make_grid(-1.0, 1.0, 32).unwrap();
        let p = single(PotentialSpec::Zero, KernelSpec::from_fn(&g, |_| 1.0), 32);
        let s = build_initial_state(p.spec(), p.grid()).unwrap();
        // ∫½u² = 1/4 and ∫½u(W*u) = ½·½·1·|Ω| = 1/2
        assert!((energy(&s, &p) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn energy_quadratic_scaling() {
        let p = single(PotentialSpec::Zero, KernelSpec::None, 32);
        let mut s = build_initial_state(p.spec(), p.grid()).unwrap();
        s.u[0] = p.grid().centers().iter().map(|x| 1.0 + x.sin()).collect();
        let doubled = State {
            t: 0.0,
            u: vec![s.u[0].iter().map(|u| 2.0 * u).collect()],
        };
        assert!((energy(&doubled, &p) - 4.0 * energy(&s, &p)).abs() < 1e-13);
    }

    #[test]
    fn flat_minimiser() {
        let p = single(PotentialSpec::Zero, KernelSpec::None, 64);
        let ss = steady_state(&p, SteadyOptions::default()).unwrap();
        assert!(ss.converged);
        assert!(ss.u_inf[0].iter().all(|u| (u - 0.5).abs() < 1e-14));
        assert!((ss.lagrange_c[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn harmonic_minimiser_matches_closed_form() {
        let p = single(PotentialSpec::Quadratic { a: 2.0 }, KernelSpec::None, 64);
        let ss = steady_state(&p, SteadyOptions::default()).unwrap();
        // (8/3) a³ = 1 for u = (c − 2x²)₊ with c = 2a²
        let a = (3.0f64 / 8.0).cbrt();
        let c = 2.0 * a * a;
        assert!((a - 0.72112).abs() < 1e-5);
        assert!((c - 1.04004).abs() < 1e-5);
        for (x, u) in p.grid().centers().iter().zip(&ss.u_inf[0]) {
            assert!((u - (c - 2.0 * x * x).max(0.0)).abs() < 1e-2);
        }
        assert!((p.grid().integrate(&ss.u_inf[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decoupled_pair_matches_single_solves() {
        let p = pair(0.0, 64);
        let both = steady_state(&p, SteadyOptions::default()).unwrap();
        let a = steady_state(
            &single(PotentialSpec::Zero, KernelSpec::None, 64),
            SteadyOptions::default(),
        )
        .unwrap();
        let b = steady_state(
            &single(PotentialSpec::Quadratic { a: 2.0 }, KernelSpec::None, 64),
            SteadyOptions::default(),
        )
        .unwrap();
        assert_eq!(both.u_inf[0], a.u_inf[0]);
        assert_eq!(both.u_inf[1], b.u_inf[0]);
    }

    #[test]
    fn rejects_nonconvex_coupling() {
        assert!(matches!(
            steady_state(&pair(1.0, 16), SteadyOptions::default()),
            Err(Error::Solver(_))
        ));
    }

    #[test]
    fn nonconvergence_is_flagged() {
        let opts = SteadyOptions {
            max_iter: 3,
            ..Default::default()
        };
        let ss = steady_state(&pair(0.8, 64), opts).unwrap();
        assert!(!ss.converged);
        assert_eq!(ss.iterations, 3);
        assert!(ss.residual > opts.tol);
    }

    fn kkt_and_fixed_point(p: &Problem, ss: &SteadyState, tol: f64) {
        let n = p.grid().cells();
        for i in 0..p.species_count() {
            assert!((p.grid().integrate(&ss.u_inf[i]) - p.mass(i)).abs() < 1e-12);
            for j in 0..n {
                let cross: f64 = (0..p.species_count())
                    .filter(|k| *k != i)
                    .map(|k| ss.u_inf[k][j])
                    .sum();
                let g = p.potential(i)[j] + p.delta() * cross;
                let u = ss.u_inf[i][j];
                assert!(u >= 0.0);
                if u > 0.0 {
                    assert!((u + g - ss.lagrange_c[i]).abs() <= ss.residual.max(tol) * 1.01);
                } else {
                    assert!(ss.lagrange_c[i] - g <= ss.residual.max(tol) * 1.01);
                }
            }
        }
        let mut again = ss.u_inf.clone();
        let mut c = ss.lagrange_c.clone();
        let r = sweep(p, &ss.u_inf, &mut again, &mut c).unwrap();
        assert!(r <= tol, "extra sweep moved by {r:e}");
    }

    #[test]
    fn kkt_conditions_hold() {
        for delta in [0.0, 0.4, 0.8, 0.99] {
            let p = pair(delta, 64);
            let ss = steady_state(&p, SteadyOptions::default()).unwrap();
            assert!(ss.converged, "delta {delta}");
            kkt_and_fixed_point(&p, &ss, 1e-11);
        }
    }

    #[test]
    fn minimiser_beats_random_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for delta in [0.0, 0.4, 0.8] {
            let p = pair(delta, 64);
            let ss = steady_state(&p, SteadyOptions::default()).unwrap();
            let e0 = energy(&ss.as_state(), &p);
            for _ in 0..100 {
                let lambda: f64 = rng.gen_range(1e-4..0.2);
                let u = ss
                    .u_inf
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        let w: Vec<f64> = (0..row.len()).map(|_| rng.gen::<f64>()).collect();
                        let scale = p.mass(i) / p.grid().integrate(&w);
                        row.iter()
                            .zip(&w)
                            .map(|(a, b)| (1.0 - lambda) * a + lambda * scale * b)
                            .collect()
                    })
                    .collect();
                let e = energy(&State { t: 0.0, u }, &p);
                assert!(e >= e0 - 1e-13, "delta {delta}: {e} < {e0}");
            }
        }
    }

    #[test]
    fn steady_state_with_kernel() {
        let g = make_grid(-1.0, 1.0, 32).unwrap();
        let p = single(
            PotentialSpec::Quadratic { a: 1.0 },
            KernelSpec::from_fn(&g, |r| 0.3 * (-4.0 * r * r).exp()),
            32,
        );
        let ss = steady_state(&p, SteadyOptions::default()).unwrap();
        assert!(ss.converged);
        let conv = convolve(p.kernel(0), &ss.u_inf[0], &g).unwrap();
        for ((&u, v), c) in ss.u_inf[0].iter().zip(p.potential(0)).zip(&conv) {
            let g_j = v + c;
            if u > 0.0 {
                assert!((u + g_j - ss.lagrange_c[0]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dissipation_examples() {
        let rec = |t: f64, e: f64| DiagnosticsRecord {
            t,
            species: vec![],
            energy: e,
        };
        assert!(dissipation_series(&[rec(0.0, 1.0)], 1e-10).is_empty());
        let held = dissipation_series(&[rec(0.0, 2.0), rec(1.0, 2.0), rec(2.0, 2.0)], 1e-10);
        assert!(held.iter().all(|d| d.delta_e == 0.0 && !d.flagged));
        let up = dissipation_series(&[rec(0.0, 2.0), rec(1.0, 2.5)], 1e-10);
        assert!(up[0].flagged);
        assert_eq!(up[0].delta_e, 0.5);
    }
}

//! Deterministic interacting-particle system whose empirical densities
//! approximate the continuum model when `N_i → ∞` and `ε_ij → 0`:
//!
//! ```text
//! dX_k^i/dt = −V_i′(X_k^i) − Σ_{(ℓ,j)≠(k,i)} K_ij′(X_k^i − X_ℓ^j),
//! K_ij(x) = χ_ij K_0(|x| / ε_ij),
//! χ_ii = 1 / ((N_i − 1) ε_ii^d),   χ_ij = δ / (N_j ε_ij^d).
//! ```
//!
//! Particles leaving the domain are folded back across the boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fv::{run_from, TimeMode};
use crate::grid::Grid1D;
use crate::state::{build_initial_state, State};
use crate::system::{PotentialSpec, Problem};

/// Radial interaction profile `K_0` on `|r| < 1` with unit integral over the
/// line, stored as tables of `K_0` and `K_0′` on `[0, 1]` and interpolated
/// linearly. `K_0′` is odd by construction, so pair forces are exactly
/// antisymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialKernel {
    name: &'static str,
    value: Arc<Vec<f64>>,
    slope: Arc<Vec<f64>>,
}

const TABLE_CELLS: usize = 4096;

/// Shared `(K_0, K_0′)` tables.
type Tables = (Arc<Vec<f64>>, Arc<Vec<f64>>);

/// `exp(−1/(1−r²))` and its derivative on `|r| < 1`.
fn raw_bump(r: f64) -> (f64, f64) {
    let q = 1.0 - r * r;
    if q <= 0.0 {
        return (0.0, 0.0);
    }
    let b = (-1.0 / q).exp();
    (b, -2.0 * r / (q * q) * b)
}

/// Composite Simpson over `[a, b]` with `n` (even) panels.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

impl RadialKernel {
    /// The plain mollifier bump `c·exp(−1/(1−r²))`.
    ///
    /// Its Fourier transform changes sign, so a deterministic particle system
    /// driven by it is unstable at wavelengths near `ε` and forms clusters.
    pub fn bump() -> Self {
        static TABLES: OnceLock<Tables> = OnceLock::new();
        let (value, slope) = TABLES.get_or_init(|| {
            let mass = simpson(-1.0, 1.0, 20_000, |r| raw_bump(r).0);
            let nodes = (0..=TABLE_CELLS).map(|m| m as f64 / TABLE_CELLS as f64);
            let (v, d): (Vec<f64>, Vec<f64>) = nodes
                .map(|r| {
                    let (b, db) = raw_bump(r);
                    (b / mass, db / mass)
                })
                .unzip();
            (Arc::new(v), Arc::new(d))
        });
        Self {
            name: "bump",
            value: value.clone(),
            slope: slope.clone(),
        }
    }

    /// `K_0(r) = 2 (ζ*ζ)(2r)` with `ζ` the unit-mass bump: compact support on
    /// `|r| < 1`, unit mass and a non-negative Fourier transform.
    pub fn bump_autocorrelation() -> Self {
        static TABLES: OnceLock<Tables> = OnceLock::new();
        let (value, slope) = TABLES.get_or_init(|| {
            let mass = simpson(-1.0, 1.0, 20_000, |r| raw_bump(r).0);
            let (v, d): (Vec<f64>, Vec<f64>) = (0..=TABLE_CELLS)
                .map(|m| {
                    let s = 2.0 * m as f64 / TABLE_CELLS as f64;
                    if s >= 2.0 {
                        return (0.0, 0.0);
                    }
                    let odd = if m == 0 { 0.0 } else { 1.0 };
                    // (ζ*ζ)(s) and (ζ*ζ′)(s) over the overlap [s − 1, 1]
                    let conv = simpson(s - 1.0, 1.0, 2_000, |y| raw_bump(y).0 * raw_bump(s - y).0);
                    let dconv = simpson(s - 1.0, 1.0, 2_000, |y| raw_bump(y).0 * raw_bump(s - y).1);
                    let norm = mass * mass;
                    (2.0 * conv / norm, odd * 4.0 * dconv / norm)
                })
                .unzip();
            (Arc::new(v), Arc::new(d))
        });
        Self {
            name: "bump_autocorrelation",
            value: value.clone(),
            slope: slope.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Support radius in units of the interaction range.
    pub fn support(&self) -> f64 {
        1.0
    }

    fn lookup(table: &[f64], r: f64) -> f64 {
        let a = r.abs();
        if a >= 1.0 {
            return 0.0;
        }
        let pos = a * TABLE_CELLS as f64;
        let m = (pos as usize).min(TABLE_CELLS - 1);
        let frac = pos - m as f64;
        table[m] + frac * (table[m + 1] - table[m])
    }

    pub fn value(&self, r: f64) -> f64 {
        Self::lookup(&self.value, r)
    }

    /// `dK_0/dr`, odd in `r`.
    pub fn derivative(&self, r: f64) -> f64 {
        let d = Self::lookup(&self.slope, r);
        if r < 0.0 {
            -d
        } else {
            d
        }
    }
}

impl Default for RadialKernel {
    fn default() -> Self {
        Self::bump_autocorrelation()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSpec {
    /// Domain; also used for tabulated potentials and histograms.
    pub domain: Grid1D,
    pub delta: f64,
    pub counts: Vec<usize>,
    /// Interaction ranges `ε_ij`.
    pub ranges: Vec<Vec<f64>>,
    pub potentials: Vec<PotentialSpec>,
    pub kernel: RadialKernel,
    pub seed: u64,
}

impl ParticleSpec {
    /// Same count and interaction range for every species pair.
    pub fn uniform(
        domain: Grid1D,
        delta: f64,
        potentials: Vec<PotentialSpec>,
        count: usize,
        range: f64,
        seed: u64,
    ) -> Self {
        let m = potentials.len();
        Self {
            domain,
            delta,
            counts: vec![count; m],
            ranges: vec![vec![range; m]; m],
            potentials,
            kernel: RadialKernel::default(),
            seed,
        }
    }

    pub fn species_count(&self) -> usize {
        self.counts.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.counts.len();
        if m == 0 {
            return Err(Error::config("particle system needs at least one species"));
        }
        if self.potentials.len() != m {
            return Err(Error::config("one potential per particle species required"));
        }
        if self.ranges.len() != m || self.ranges.iter().any(|r| r.len() != m) {
            return Err(Error::config("interaction ranges must form an M×M matrix"));
        }
        if let Some(i) = self.counts.iter().position(|&n| n == 0) {
            return Err(Error::config(format!("species {i} has no particles")));
        }
        if self
            .ranges
            .iter()
            .flatten()
            .any(|e| !(*e > 0.0 && e.is_finite()))
        {
            return Err(Error::config("interaction ranges must be positive"));
        }
        for p in &self.potentials {
            p.sample(&self.domain)?;
        }
        Ok(())
    }
}

/// Interaction strengths `χ_ij` in dimension `d`. A species with a single
/// particle has no self-interaction partners and gets `χ_ii = 0`.
pub fn chi_scaling(spec: &ParticleSpec, d: i32) -> Vec<Vec<f64>> {
    let m = spec.species_count();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let reach = spec.ranges[i][j].powi(d);
                    if i == j {
                        if spec.counts[i] > 1 {
                            1.0 / ((spec.counts[i] - 1) as f64 * reach)
                        } else {
                            0.0
                        }
                    } else {
                        spec.delta / (spec.counts[j] as f64 * reach)
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub t: f64,
    pub positions: Vec<Vec<f64>>,
}

/// Total force on every particle by the direct `O(N²)` double sum, self-term
/// excluded.
pub fn pairwise_force_direct(state: &ParticleState, spec: &ParticleSpec) -> Vec<Vec<f64>> {
    let chi = chi_scaling(spec, 1);
    let kernel = &spec.kernel;
    state
        .positions
        .iter()
        .enumerate()
        .map(|(i, targets)| {
            targets
                .iter()
                .enumerate()
                .map(|(k, &x)| {
                    let mut force = -spec.potentials[i].gradient_at(x, &spec.domain);
                    for (j, sources) in state.positions.iter().enumerate() {
                        if chi[i][j] == 0.0 {
                            continue;
                        }
                        let eps = spec.ranges[i][j];
                        let mut acc = 0.0;
                        for (l, &y) in sources.iter().enumerate() {
                            if i == j && l == k {
                                continue;
                            }
                            acc += kernel.derivative((x - y) / eps);
                        }
                        force -= chi[i][j] * acc / eps;
                    }
                    force
                })
                .collect()
        })
        .collect()
}

/// Total force on every particle. Sums the same pairs as
/// [`pairwise_force_direct`], but visits only sources inside the kernel
/// support, found by binary search in sorted copies of the positions.
/// Terms are added in sorted order, so results are deterministic but may
/// differ from the direct sum in the last bits.
pub fn pairwise_force(state: &ParticleState, spec: &ParticleSpec) -> Vec<Vec<f64>> {
    let chi = chi_scaling(spec, 1);
    let kernel = &spec.kernel;
    let sorted: Vec<Vec<(f64, usize)>> = state
        .positions
        .iter()
        .map(|xs| {
            let mut v: Vec<(f64, usize)> = xs.iter().copied().zip(0..).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            v
        })
        .collect();
    state
        .positions
        .iter()
        .enumerate()
        .map(|(i, targets)| {
            targets
                .iter()
                .enumerate()
                .map(|(k, &x)| {
                    let mut force = -spec.potentials[i].gradient_at(x, &spec.domain);
                    for (j, sources) in sorted.iter().enumerate() {
                        if chi[i][j] == 0.0 {
                            continue;
                        }
                        let eps = spec.ranges[i][j];
                        let cutoff = kernel.support() * eps;
                        let lo = sources.partition_point(|p| p.0 <= x - cutoff);
                        let hi = sources.partition_point(|p| p.0 < x + cutoff);
                        let mut acc = 0.0;
                        for &(y, l) in &sources[lo..hi] {
                            if i == j && l == k {
                                continue;
                            }
                            acc += kernel.derivative((x - y) / eps);
                        }
                        force -= chi[i][j] * acc / eps;
                    }
                    force
                })
                .collect()
        })
        .collect()
}

/// Fold `x` back into `[lo, hi]` by repeated reflection.
fn reflect(mut x: f64, lo: f64, hi: f64) -> f64 {
    loop {
        if x > hi {
            x = 2.0 * hi - x;
        } else if x < lo {
            x = 2.0 * lo - x;
        } else {
            return x;
        }
    }
}

/// Forward-Euler step followed by reflection at the boundary.
pub fn step_particles(
    state: &ParticleState,
    spec: &ParticleSpec,
    dt: f64,
) -> Result<ParticleState> {
    let forces = pairwise_force(state, spec);
    let (lo, hi) = (spec.domain.x_min(), spec.domain.x_max());
    let t = state.t + dt;
    let positions = state
        .positions
        .iter()
        .zip(&forces)
        .enumerate()
        .map(|(i, (xs, fs))| {
            xs.iter()
                .zip(fs)
                .enumerate()
                .map(|(k, (x, f))| {
                    let moved = x + dt * f;
                    if !moved.is_finite() {
                        return Err(Error::Blowup {
                            t,
                            species: i,
                            cell: k,
                        });
                    }
                    Ok(reflect(moved, lo, hi))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParticleState { t, positions })
}

/// Histogram density of species `i`: particles per cell over `N_i dx`.
pub fn empirical_density(state: &ParticleState, grid: &Grid1D, i: usize) -> Result<Vec<f64>> {
    let xs = state
        .positions
        .get(i)
        .ok_or_else(|| Error::config(format!("no particle species {i}")))?;
    if xs.is_empty() {
        return Err(Error::config(format!("particle species {i} is empty")));
    }
    let mut counts = vec![0usize; grid.cells()];
    for &x in xs {
        let j = grid
            .cell_of(x)
            .ok_or_else(|| Error::config(format!("particle at {x} lies outside the grid")))?;
        counts[j] += 1;
    }
    let norm = 1.0 / (xs.len() as f64 * grid.dx());
    Ok(counts.into_iter().map(|c| c as f64 * norm).collect())
}

/// Draw `n` positions from the piecewise-constant density `row` by inverse CDF.
pub fn sample_positions(
    row: &[f64],
    grid: &Grid1D,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let mut cumulative = Vec::with_capacity(row.len() + 1);
    cumulative.push(0.0);
    for &u in row {
        if !(u >= 0.0) {
            return Err(Error::config("sampling density must be non-negative"));
        }
        cumulative.push(cumulative.last().unwrap() + u);
    }
    let total = *cumulative.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::config("sampling density has no mass"));
    }
    let dx = grid.dx();
    Ok((0..n)
        .map(|_| {
            let target = rng.gen::<f64>() * total;
            // last cell whose cumulative start is ≤ target and which carries mass
            let mut j = cumulative
                .partition_point(|&c| c <= target)
                .saturating_sub(1)
                .min(row.len() - 1);
            while row[j] == 0.0 && j > 0 {
                j -= 1;
            }
            let frac = ((target - cumulative[j]) / row[j]).clamp(0.0, 1.0);
            grid.x_min() + (j as f64 + frac) * dx
        })
        .collect())
}

/// Initial particle positions drawn from the normalised initial profile of
/// `problem`, from a single stream seeded with `spec.seed` and consumed
/// species by species, so removing later species leaves earlier ones intact.
pub fn initial_particles(spec: &ParticleSpec, problem: &Problem) -> Result<ParticleState> {
    spec.validate()?;
    if problem.species_count() != spec.species_count() {
        return Err(Error::config(
            "particle and continuum species counts differ",
        ));
    }
    let init = build_initial_state(problem.spec(), problem.grid())?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let positions = init
        .u
        .iter()
        .zip(&spec.counts)
        .map(|(row, &n)| sample_positions(row, problem.grid(), n, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(ParticleState { t: 0.0, positions })
}

/// Integrate the particle system to `t_end` with steps of at most `dt`,
/// calling `observe` on the initial state and after every step.
pub fn run_particles(
    mut state: ParticleState,
    spec: &ParticleSpec,
    t_end: f64,
    dt: f64,
    mut observe: impl FnMut(&ParticleState),
) -> Result<ParticleState> {
    if !(dt > 0.0) {
        return Err(Error::config(format!(
            "particle dt must be positive, got {dt}"
        )));
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as u64;
    observe(&state);
    for k in 1..=steps {
        let target = if k == steps { t_end } else { k as f64 * dt };
        state = step_particles(&state, spec, target - state.t)?;
        state.t = target;
        observe(&state);
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub particle_dt: f64,
    pub pde_mode: TimeMode,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            particle_dt: 5e-4,
            pde_mode: TimeMode::Adaptive {
                safety: 0.5,
                dt_max: 1e-4,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// `‖histogram_i − u_i(T)‖_{L¹}` per species.
    pub l1_distance: Vec<f64>,
    pub particles: ParticleState,
    pub continuum: State,
}

/// Run both models from matched initial data to `t_end` and compare the
/// particle histograms with the continuum densities on the problem grid.
pub fn compare_to_pde(
    spec: &ParticleSpec,
    problem: &Problem,
    t_end: f64,
    opts: CompareOptions,
) -> Result<Comparison> {
    compare_to_pde_observed(spec, problem, t_end, opts, |_| {})
}

/// As [`compare_to_pde`], passing every particle state to `observe`.
pub fn compare_to_pde_observed(
    spec: &ParticleSpec,
    problem: &Problem,
    t_end: f64,
    opts: CompareOptions,
    observe: impl FnMut(&ParticleState),
) -> Result<Comparison> {
    let start = initial_particles(spec, problem)?;
    let particles = run_particles(start, spec, t_end, opts.particle_dt, observe)?;
    let init = build_initial_state(problem.spec(), problem.grid())?;
    let continuum = run_from(
        init,
        problem,
        t_end,
        opts.pde_mode,
        &[],
        &mut |_: &_, _: &_| {},
    )?;
    let grid = problem.grid();
    let l1_distance = (0..spec.species_count())
        .map(|i| {
            let h = empirical_density(&particles, grid, i)?;
            Ok(grid.dx()
                * h.iter()
                    .zip(&continuum.u[i])
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        l1_distance,
        particles,
        continuum,
    })
}

use crossdiff::diagnostics::{energy_estimate_check, h1_seminorm};
use crossdiff::energy::dissipation_series;
use crossdiff::fv::{cfl_dt, equispaced_times, run, run_from, Stepper, TimeMode, Trajectory};
use crossdiff::*;

fn example(delta: f64, ic: InitialCondition, cells: usize) -> Problem {
    let spec = SystemSpec::new(
        delta,
        vec![
            SpeciesSpec::new(PotentialSpec::Zero, ic.clone()),
            SpeciesSpec::new(PotentialSpec::Quadratic { a: 2.0 }, ic.mirrored()),
        ],
    );
    Problem::new(spec, make_grid(-1.0, 1.0, cells).unwrap()).unwrap()
}

fn single(potential: PotentialSpec, ic: InitialCondition) -> Problem {
    Problem::new(
        SystemSpec::new(0.0, vec![SpeciesSpec::new(potential, ic)]),
        make_grid(-1.0, 1.0, 64).unwrap(),
    )
    .unwrap()
}

#[test]
fn mass_is_conserved_over_many_steps() {
    for problem in [
        example(0.8, InitialCondition::LeftBump, 64),
        example(0.4, InitialCondition::Uniform, 64),
    ] {
        let mut state = build_initial_state(problem.spec(), problem.grid()).unwrap();
        let m0 = state.masses(problem.grid());
        let mut stepper = Stepper::new(&problem);
        for _ in 0..10_000 {
            stepper.advance(&mut state, &problem, 1e-6).unwrap();
        }
        for (a, b) in state.masses(problem.grid()).iter().zip(&m0) {
            assert!(((a - b) / b).abs() < 1e-12);
        }
    }
}

#[test]
fn cfl_steps_keep_densities_non_negative() {
    let problem = example(0.99, InitialCondition::LeftBump, 64);
    let mut state = build_initial_state(problem.spec(), problem.grid()).unwrap();
    let mut stepper = Stepper::new(&problem);
    for _ in 0..5_000 {
        let dt = cfl_dt(&state, &problem, 1.0, 1e-2);
        stepper.advance(&mut state, &problem, dt).unwrap();
        assert!(state.min_density() >= 0.0);
    }
}

#[test]
fn zero_coupling_decouples_bitwise() {
    let pair = example(0.0, InitialCondition::LeftBump, 64);
    let mode = TimeMode::Fixed { dt: 1e-5 };
    let none = &mut |_: &_, _: &_| {};
    let both = run(&pair, 0.05, mode, &[], none).unwrap();
    for (i, s) in pair.spec().species.iter().enumerate() {
        let alone =
            Problem::new(SystemSpec::new(0.0, vec![s.clone()]), pair.grid().clone()).unwrap();
        let solo = run(&alone, 0.05, mode, &[], none).unwrap();
        assert_eq!(solo.u[0], both.u[i]);
    }
}

#[test]
fn mirrored_problem_mirrors_solution() {
    let left = example(0.6, InitialCondition::LeftBump, 64);
    let spec = SystemSpec::new(
        0.6,
        left.spec()
            .species
            .iter()
            .map(|s| SpeciesSpec::new(s.potential.clone(), s.ic.mirrored()))
            .collect(),
    );
    let right = Problem::new(spec, left.grid().clone()).unwrap();
    let mut a = build_initial_state(left.spec(), left.grid()).unwrap();
    let mut b = build_initial_state(right.spec(), right.grid()).unwrap();
    let (mut sa, mut sb) = (Stepper::new(&left), Stepper::new(&right));
    for _ in 0..2_000 {
        sa.advance(&mut a, &left, 1e-5).unwrap();
        sb.advance(&mut b, &right, 1e-5).unwrap();
        for (ra, rb) in a.u.iter().zip(&b.u) {
            for (x, y) in ra.iter().zip(rb.iter().rev()) {
                assert!((x - y).abs() <= 1e-13 * (1.0 + x.abs()));
            }
        }
    }
}

fn block_average(fine: &[f64], cells: usize) -> Vec<f64> {
    let r = fine.len() / cells;
    fine.chunks(r)
        .map(|c| c.iter().sum::<f64>() / r as f64)
        .collect()
}

#[test]
fn first_order_self_convergence() {
    let t_end = 0.1;
    let mode = TimeMode::Fixed { dt: 1e-6 };
    let solve = |cells| {
        run(
            &example(0.4, InitialCondition::Uniform, cells),
            t_end,
            mode,
            &[],
            &mut |_: &_, _: &_| {},
        )
        .unwrap()
    };
    let reference = solve(512);
    let levels = [32usize, 64, 128];
    let errors: Vec<f64> = levels
        .iter()
        .map(|&cells| {
            let coarse = solve(cells);
            let dx = 2.0 / cells as f64;
            coarse
                .u
                .iter()
                .zip(&reference.u)
                .map(|(c, f)| {
                    dx * c
                        .iter()
                        .zip(block_average(f, cells))
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>()
                })
                .sum()
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 0.8, "errors {errors:?}, order {order}");
    }
}

#[test]
fn diffusivity_smooths_final_state() {
    let h1 = |eps: f64| {
        let base = example(0.8, InitialCondition::LeftBump, 64);
        let problem =
            Problem::new(base.spec().clone().with_epsilon(eps), base.grid().clone()).unwrap();
        let end = run(
            &problem,
            0.2,
            TimeMode::Adaptive {
                safety: 0.5,
                dt_max: 1e-4,
            },
            &[],
            &mut |_: &_, _: &_| {},
        )
        .unwrap();
        end.u
            .iter()
            .map(|row| h1_seminorm(row, problem.grid()))
            .sum::<f64>()
    };
    let values: Vec<f64> = [0.0, 1e-3, 1e-2].into_iter().map(h1).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
}

#[test]
fn entropy_estimate_holds_on_examples() {
    for delta in [0.0, 0.4] {
        for ic in [InitialCondition::LeftBump, InitialCondition::Uniform] {
            let problem = example(delta, ic, 64);
            let mut traj = Trajectory::default();
            let times = equispaced_times(0.5, 500);
            run(
                &problem,
                0.5,
                TimeMode::Adaptive {
                    safety: 0.5,
                    dt_max: 1e-4,
                },
                &times,
                &mut traj,
            )
            .unwrap();
            for check in energy_estimate_check(&traj.snapshots, &problem, 6.0) {
                assert!(check.holds, "δ = {delta}: {check:?}");
            }
        }
    }
}

#[test]
fn energy_decreases_along_uniform_example() {
    let problem = example(0.4, InitialCondition::Uniform, 64);
    let mut traj = Trajectory::default();
    let times = equispaced_times(1.0, 10);
    run(
        &problem,
        1.0,
        TimeMode::Adaptive {
            safety: 0.5,
            dt_max: 1e-4,
        },
        &times,
        &mut traj,
    )
    .unwrap();
    assert_eq!(traj.records.len(), 11);
    let series = dissipation_series(&traj.records, 1e-10);
    assert!(
        series.iter().all(|s| !s.flagged && s.delta_e <= 0.0),
        "{series:?}"
    );
}

#[test]
fn uniform_state_without_potentials_is_stationary() {
    let problem = single(PotentialSpec::Zero, InitialCondition::Uniform);
    let start = build_initial_state(problem.spec(), problem.grid()).unwrap();
    let end = run_from(
        start.clone(),
        &problem,
        0.01,
        TimeMode::Fixed { dt: 1e-4 },
        &[],
        &mut |_: &_, _: &_| {},
    )
    .unwrap();
    assert_eq!(end.u, start.u);
}

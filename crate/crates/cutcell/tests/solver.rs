use std::sync::Arc;

use cutcell::assembly::{initial_state, InterfaceModel, ProblemSpec};
use cutcell::bench::cases::{CaseId, CaseParams};
use cutcell::conditions::*;
use cutcell::geometry::*;
use cutcell::solver::*;

fn circle(n: usize) -> MomentSet {
    let grid = CartesianGrid::uniform(&[0.0, 0.0], &[8.0, 8.0], &[n, n]).unwrap();
    compute_moments(&grid, &Ball::new([4.0, 4.0, 0.0], 2.0, Phase::Plus), &MomentOptions::default()).unwrap()
}

fn insulated_two_phase(k: [f64; 2], initial: [ScalarFn; 2], controls: TimeControls) -> ProblemSpec {
    ProblemSpec {
        capacity: [1.0, 2.0],
        diffusivity: k,
        source: [constant(0.0), constant(0.0)],
        bc: OuterBC::uniform(BoundaryCondition::insulated()),
        interface: InterfaceModel::TwoPhase(InterfaceLaw::continuity()),
        initial,
        time: Some(controls),
    }
}

fn bump() -> ScalarFn {
    Arc::new(|x, _| (-((x[0] - 3.0).powi(2) + (x[1] - 4.5).powi(2))).exp())
}

#[test]
fn equilibrium_is_a_fixed_point() {
    let m = circle(16);
    let spec = insulated_two_phase([1.0, 4.0], [constant(0.7), constant(0.7)], TimeControls::fixed(0.5, 0.05, 0.5));
    let state = initial_state(&m, &spec, 0.0);
    let next = step_theta(&state, &spec, &m, 0.05, 0.5, &SolverOptions::default()).unwrap();
    for p in Phase::BOTH {
        for c in m.active_cells(p) {
            assert!((next.omega[p.index()][c] - 0.7).abs() < 1e-14);
        }
        for c in m.mixed_cells() {
            assert!((next.gamma[p.index()][c] - 0.7).abs() < 1e-14);
        }
    }
}

#[test]
fn explicit_step_conserves_content() {
    let m = circle(16);
    let spec = insulated_two_phase([1.0, 2.0], [bump(), bump()], TimeControls::fixed(0.0, 1e-3, 1e-3));
    let state = initial_state(&m, &spec, 0.0);
    let before = total_content(&m, &spec, &state);
    let after = total_content(&m, &spec, &step_theta(&state, &spec, &m, 1e-3, 0.0, &SolverOptions::default()).unwrap());
    assert!(((after - before) / before).abs() < 1e-14, "drift {}", (after - before) / before);
}

#[test]
fn implicit_conservation_over_a_run() {
    let m = circle(16);
    let controls = TimeControls::standard(0.5, 0.2);
    let spec = insulated_two_phase([1.0, 0.25], [bump(), constant(1.0)], controls);
    let mut contents = Vec::new();
    run_unsteady(&spec, &m, &controls, &SolverOptions::default(), &mut |_, _, s| contents.push(total_content(&m, &spec, s))).unwrap();
    let i0 = contents[0];
    for c in &contents {
        assert!(((c - i0) / i0).abs() < 5e-15);
    }
}

#[test]
fn backward_euler_with_large_steps_stays_bounded() {
    let params = CaseParams { dt: Some(DtRule::Quadratic(100.0)), theta: Some(1.0), ..Default::default() };
    for n in [16, 64] {
        let problem = CaseId::Jump1d.build_level(n, &params).unwrap();
        let controls = problem.spec.time.unwrap();
        let m = &problem.moments;
        let mut worst = (f64::INFINITY, f64::NEG_INFINITY);
        run_unsteady(&problem.spec, m, &controls, &SolverOptions::default(), &mut |_, _, s| {
            for p in Phase::BOTH {
                for c in m.active_cells(p) {
                    let v = s.omega[p.index()][c];
                    worst = (worst.0.min(v), worst.1.max(v));
                }
            }
        })
        .unwrap();
        assert!(worst.0 >= -1e-12 && worst.1 <= 1.0 + 1e-12, "range {worst:?}");
    }
}

#[test]
fn factorization_reuse_is_bit_identical() {
    let m = circle(16);
    let controls = TimeControls::fixed(0.5, 0.01, 0.1);
    let spec = insulated_two_phase([1.0, 3.0], [bump(), constant(0.0)], controls);
    let run = |refactor| {
        let opts = SolverOptions { refactor_each_step: refactor, keep_history: true, ..Default::default() };
        run_unsteady(&spec, &m, &controls, &opts, &mut |_, _, _| {}).unwrap()
    };
    let (a, b) = (run(false), run(true));
    assert_eq!(a.history.len(), 11);
    assert_eq!(a.history, b.history);
}

#[test]
fn iterative_solver_matches_direct() {
    let m = circle(32);
    let controls = TimeControls::fixed(1.0, 0.01, 0.05);
    let spec = insulated_two_phase([1.0, 3.0], [bump(), constant(1.0)], controls);
    let direct = run_unsteady(&spec, &m, &controls, &SolverOptions::default(), &mut |_, _, _| {}).unwrap();
    let opts = SolverOptions { linear: LinearSolver::Iterative { max_iter: 500 }, ..Default::default() };
    let iter = run_unsteady(&spec, &m, &controls, &opts, &mut |_, _, _| {}).unwrap();
    for p in 0..2 {
        for c in 0..m.cells.len() {
            assert!((direct.final_state.omega[p][c] - iter.final_state.omega[p][c]).abs() < 1e-8);
        }
    }
    assert!(iter.report.residuals.iter().all(|&r| r <= 1e-10));
    assert!(iter.report.iterations.iter().all(|&i| i > 1));
}

#[test]
fn vanishing_diffusivity_freezes_the_field() {
    let m = circle(16);
    let controls = TimeControls::fixed(0.5, 0.1, 1.0);
    let spec = insulated_two_phase([1e-14, 1e-14], [bump(), bump()], controls);
    let traj = run_unsteady(&spec, &m, &controls, &SolverOptions::default(), &mut |_, _, _| {}).unwrap();
    let start = initial_state(&m, &spec, 0.0);
    for p in 0..2 {
        for c in 0..m.cells.len() {
            assert!((traj.final_state.omega[p][c] - start.omega[p][c]).abs() < 1e-10);
        }
    }
}

#[test]
fn robin_disk_center_approaches_seven_quarters() {
    let mut last = f64::INFINITY;
    for n in [32, 64, 128] {
        let p = CaseId::RobinDisk.build_level(n, &CaseParams::default()).unwrap();
        let (state, report) = solve_steady(&p.spec, &p.moments, &SolverOptions::default()).unwrap();
        assert!(report.residuals[0] <= 1e-10);
        // Cell whose lower corner is the disk center.
        let c = p.moments.grid.cell_index([n / 2, n / 2, 0]);
        let err = (state.omega[0][c] - 1.75).abs();
        assert!(err < last);
        last = err;
    }
    assert!(last < 1e-3);
}

#[test]
fn time_controls_land_on_the_final_time() {
    let tc = TimeControls::standard(0.5, 0.1);
    let (dt, n) = tc.resolve(0.125);
    assert!((dt * n as f64 - 0.1).abs() < 1e-15);
    assert!(dt <= 0.25 * 0.125 * 0.125);
    assert_eq!(TimeControls { dt: DtRule::Linear(0.25), ..tc }.resolve(0.5), (0.1, 1));
    assert!(TimeControls { theta: 1.5, ..tc }.validate().is_err());
    assert!(TimeControls::fixed(0.5, -1.0, 1.0).validate().is_err());
}

#[test]
fn field_dump_lists_bulk_and_interface_rows() {
    let m = circle(8);
    let spec = insulated_two_phase([1.0, 1.0], [constant(0.5), constant(0.5)], TimeControls::standard(1.0, 1.0));
    let state = initial_state(&m, &spec, 0.0);
    let mut out = Vec::new();
    write_field_csv(&m, &spec, &state, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("cell,phase,value,kind"));
    let rows: Vec<&str> = lines.collect();
    let bulk = m.active_cells(Phase::Minus).len() + m.active_cells(Phase::Plus).len();
    assert_eq!(rows.len(), bulk + 2 * m.mixed_cells().len());
    assert!(rows.iter().all(|r| r.split(',').count() == 4));
}

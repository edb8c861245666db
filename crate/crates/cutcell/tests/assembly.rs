use cutcell::assembly::*;
use cutcell::conditions::*;
use cutcell::geometry::*;
use cutcell::linalg::DirectSolver;
use cutcell::operators::FieldState;
use cutcell::solver::{solve_steady, SolverOptions, TimeControls};
use proptest::prelude::*;

fn setup(x_gamma: f64, k: [f64; 2], c: [f64; 2], dt: f64) -> ThreeCellSetup {
    ThreeCellSetup { dx: 1.0, x_gamma, k, c, dt, a: 0.3, b: -0.2, phi_n: [1.0, 0.7, 0.4, -0.1] }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn centroid_three_cell_matches_general_assembly() {
    let s = setup(1.37, [2.0, 0.3], [1.5, 0.8], 0.05);
    let hand = assemble_three_cell(&s, Distances::Centroid).unwrap().solve().unwrap();
    let general = solve_three_cell_general(&s).unwrap();
    assert!(rel_diff(&general, &hand) < 1e-12, "{general:?} vs {hand:?}");
}

#[test]
fn full_segment_distances_coincide_only_in_the_uniform_limit() {
    let mut s = setup(1.5, [1.0, 1.0], [1.0, 1.0], 0.1);
    let full = assemble_three_cell(&s, Distances::FullSegment).unwrap();
    let centroid = assemble_three_cell(&s, Distances::Centroid).unwrap();
    // With ℓ = Δx/2 and equal k the interface conductances differ by a factor 2.
    assert!((full.matrix[4][3] - 2.0).abs() < 1e-14);
    assert!((centroid.matrix[4][3] - 4.0).abs() < 1e-14);
    s.x_gamma = 1.3;
    let p = assemble_three_cell(&s, Distances::FullSegment).unwrap().solve().unwrap();
    let c = assemble_three_cell(&s, Distances::Centroid).unwrap().solve().unwrap();
    assert!(rel_diff(&p, &c) > 1e-6);
}

#[test]
fn three_cell_rhs_layout() {
    let s = setup(1.4, [1.0, 2.0], [3.0, 4.0], 0.5);
    let sys = assemble_three_cell(&s, Distances::FullSegment).unwrap();
    let (lm, lp) = (0.4, 0.6);
    let expect = [3.0 * 1.0 + 0.5 * 0.3, 3.0 * lm * 0.7, 4.0 * lp * 0.4, 0.0, 0.0, 4.0 * -0.1 + 0.5 * -0.2];
    for i in 0..6 {
        assert!((sys.rhs[i] - expect[i]).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn centroid_equivalence_random(xg in 1.02f64..1.98, km in 0.1f64..10.0, kp in 0.1f64..10.0,
                                   cm in 0.1f64..10.0, cp in 0.1f64..10.0, dt in 1e-3f64..1.0) {
        let s = setup(xg, [km, kp], [cm, cp], dt);
        let hand = assemble_three_cell(&s, Distances::Centroid).unwrap().solve().unwrap();
        let general = solve_three_cell_general(&s).unwrap();
        prop_assert!(rel_diff(&general, &hand) < 1e-12);
    }
}

fn circle_moments(n: usize) -> MomentSet {
    let grid = CartesianGrid::uniform(&[0.0, 0.0], &[8.0, 8.0], &[n, n]).unwrap();
    compute_moments(&grid, &Ball::new([4.0, 4.0, 0.0], 2.0, Phase::Plus), &MomentOptions::default()).unwrap()
}

fn two_phase_spec(k: [f64; 2], lambda: f64, bc: BoundaryCondition) -> ProblemSpec {
    ProblemSpec {
        capacity: [1.0, 1.0],
        diffusivity: k,
        source: [constant(0.0), constant(0.0)],
        bc: OuterBC::uniform(bc),
        interface: InterfaceModel::TwoPhase(InterfaceLaw::new(lambda, constant(0.0)).unwrap()),
        initial: [constant(0.0), constant(0.0)],
        time: Some(TimeControls::standard(1.0, 1.0)),
    }
}

#[test]
fn blocks_are_symmetric_and_adjoint() {
    let m = circle_moments(16);
    let spec = two_phase_spec([1.0, 3.0], 2.0, BoundaryCondition::dirichlet(constant(1.0)));
    let sys = build_block_system(&m, &spec, Some(0.01), 0.5).unwrap();
    let d = interface_diagnostics(&sys, 2.0);
    for p in 0..2 {
        assert!(d.ww_asymmetry[p] < 1e-13);
        assert!(d.adjointness[p] < 1e-13);
        assert!(d.ww_min_eig[p].unwrap() > 0.0);
    }
    let i = d.interface.unwrap();
    assert!(i.coupled_min_eig > 0.0);
    assert!(i.lambda_max.is_finite() && i.lambda_max > 0.0);
    assert_eq!(i.d_eff_positive_definite, 2.0 > i.lambda_max);
}

#[test]
fn block_layout_has_empty_off_diagonal_blocks() {
    let m = circle_moments(12);
    let spec = two_phase_spec([1.0, 1.0], 1.0, BoundaryCondition::insulated());
    let sys = build_block_system(&m, &spec, Some(0.1), 1.0).unwrap();
    let o = sys.dofs.offsets;
    for (i, j, _) in sys.matrix.triplets() {
        let bi = (0..4).rev().find(|&b| i >= o[b]).unwrap();
        let bj = (0..4).rev().find(|&b| j >= o[b]).unwrap();
        let allowed = match bi {
            0 => bj == 0 || bj == 2,
            1 => bj == 1 || bj == 3,
            2 => true,
            _ => bj == 2 || bj == 3,
        };
        assert!(allowed, "entry ({i}, {j}) in block ({bi}, {bj})");
    }
    let n_mixed = m.mixed_cells().len();
    for k in 0..n_mixed {
        let (r, a, b) = (o[3] + k, o[2] + k, o[3] + k);
        assert_eq!(sys.matrix.get(r, a), -1.0);
        assert_eq!(sys.matrix.get(r, b), 1.0);
    }
}

#[test]
fn explicit_theta_keeps_interface_coupling() {
    let m = circle_moments(12);
    let spec = two_phase_spec([1.0, 1.0], 1.0, BoundaryCondition::insulated());
    let sys = build_block_system(&m, &spec, Some(0.01), 0.0).unwrap();
    for p in 0..2 {
        for &c in &sys.dofs.omega_cells[p] {
            let r = sys.dofs.omega(Phase::BOTH[p], c).unwrap();
            for (j, v) in sys.matrix.row(r) {
                if j < sys.dofs.offsets[2] {
                    assert_eq!(j, r);
                    assert_eq!(v, sys.mass[p][c]);
                }
            }
        }
    }
    assert!(sys.matrix.triplets().iter().any(|&(i, j, _)| i < sys.dofs.offsets[2] && j >= sys.dofs.offsets[2]));
}

#[test]
fn pure_domain_gives_five_point_laplacian() {
    let grid = CartesianGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[6, 6]).unwrap();
    let m = compute_moments(&grid, &Uniform(-1.0), &MomentOptions::default()).unwrap();
    let spec = ProblemSpec {
        capacity: [1.0, 1.0],
        diffusivity: [2.0, 1.0],
        source: [constant(0.0), constant(0.0)],
        bc: OuterBC::uniform(BoundaryCondition::insulated()),
        interface: InterfaceModel::SinglePhase(SinglePhaseClosure::Dirichlet(constant(0.0))),
        initial: [constant(0.0), constant(0.0)],
        time: None,
    };
    let b = build_l_blocks(&m, &spec).unwrap();
    assert_eq!(b.wg[0].nnz() + b.gw[0].nnz() + b.gg[0].nnz(), 0);
    let c = grid.cell_index([2, 3, 0]);
    assert!((b.ww[0].get(c, c) - 8.0).abs() < 1e-12);
    assert!((b.ww[0].get(c, grid.cell_index([1, 3, 0])) + 2.0).abs() < 1e-12);
    assert!((b.ww[0].get(c, grid.cell_index([2, 4, 0])) + 2.0).abs() < 1e-12);
    assert_eq!(b.ww[0].row(c).count(), 5);
}

#[test]
fn constant_dirichlet_gives_constant_field() {
    let grid = CartesianGrid::uniform(&[-1.0, -1.0], &[1.0, 1.0], &[10, 10]).unwrap();
    let ls = Ball::new([0.1, -0.05, 0.0], 0.6, Phase::Minus);
    let m = compute_moments(&grid, &ls, &MomentOptions::default()).unwrap();
    let spec = ProblemSpec {
        capacity: [1.0, 1.0],
        diffusivity: [1.0, 1.0],
        source: [constant(0.0), constant(0.0)],
        bc: OuterBC::uniform(BoundaryCondition::dirichlet(constant(3.0))),
        interface: InterfaceModel::SinglePhase(SinglePhaseClosure::Dirichlet(constant(3.0))),
        initial: [constant(0.0), constant(0.0)],
        time: None,
    };
    let (s, _) = solve_steady(&spec, &m, &SolverOptions::default()).unwrap();
    for c in m.active_cells(Phase::Minus) {
        assert!((s.omega[0][c] - 3.0).abs() < 1e-12);
    }
}

#[test]
fn zero_state_rhs_is_boundary_only() {
    let m = circle_moments(10);
    let spec = two_phase_spec([1.0, 1.0], 1.0, BoundaryCondition::dirichlet(constant(2.0)));
    let sys = build_block_system(&m, &spec, Some(0.1), 0.5).unwrap();
    let rhs = build_rhs(&sys, &m, &spec, &FieldState::zeros(m.cells.len(), 0.0)).unwrap();
    for c in 0..m.cells.len() {
        let touches_outer = (0..2).any(|a| (0..2).any(|e| m.grid.is_boundary_face(a, m.grid.cell_face(c, a, e))));
        if let Some(r) = sys.dofs.omega(Phase::Minus, c) {
            assert_eq!(rhs[r] != 0.0, touches_outer);
        }
    }
    assert!(rhs[sys.dofs.offsets[2]..].iter().all(|&v| v == 0.0));
}

#[test]
fn flux_balance_rows_match_assembled_rows() {
    let m = circle_moments(14);
    let spec = two_phase_spec([0.7, 2.0], 1.0, BoundaryCondition::robin(0.5, constant(1.0)).unwrap());
    let sys = build_block_system(&m, &spec, None, 1.0).unwrap();
    let rhs = build_rhs(&sys, &m, &spec, &FieldState::zeros(m.cells.len(), 0.0)).unwrap();
    for c in m.mixed_cells() {
        let row = flux_balance_row(&m, spec.diffusivity, &spec.bc, c, 0.0).unwrap();
        let r = sys.dofs.gamma(Phase::Minus, c).unwrap();
        for &(v, coef) in &row.terms {
            let j = match v {
                Var::Omega(p, cc) => sys.dofs.omega(p, cc).unwrap(),
                Var::Gamma(p, cc) => sys.dofs.gamma(p, cc).unwrap(),
            };
            assert!((sys.matrix.get(r, j) - coef).abs() <= 1e-12 * coef.abs().max(1.0));
        }
        assert_eq!(sys.matrix.row(r).filter(|e| e.1 != 0.0).count(), row.terms.len());
        assert!((rhs[r] - row.rhs).abs() < 1e-12);
    }
}

#[test]
fn solver_reports_singular_all_neumann_steady() {
    let m = circle_moments(8);
    let mut spec = two_phase_spec([1.0, 1.0], 1.0, BoundaryCondition::insulated());
    spec.time = None;
    let sys = build_block_system(&m, &spec, None, 1.0).unwrap();
    let lu = DirectSolver::new(&sys.matrix);
    let solved = solve_steady(&spec, &m, &SolverOptions::default());
    assert!(lu.is_err() || solved.is_err());
}

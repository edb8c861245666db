use std::path::PathBuf;
use std::time::Instant;

use cutcell::bench::cases::{CaseId, CaseParams};
use cutcell::bench::*;
use cutcell::conditions::{constant, BoundaryCondition, InterfaceLaw, Side};
use cutcell::geometry::*;
use cutcell::operators::FieldState;
use cutcell::solver::LinearSolver;
use proptest::prelude::*;

fn disk(n: usize) -> MomentSet {
    let grid = CartesianGrid::uniform(&[0.0, 0.0], &[4.0, 4.0], &[n, n]).unwrap();
    compute_moments(&grid, &Ball::new([2.0, 2.0, 0.0], 1.0, Phase::Minus), &MomentOptions::default()).unwrap()
}

fn perturbed(m: &MomentSet, exact: &dyn Fn(Phase, [f64; 3], f64) -> f64, amp: f64) -> FieldState {
    let mut s = FieldState::zeros(m.cells.len(), 0.0);
    for p in Phase::BOTH {
        for c in m.active_cells(p) {
            let x = m.cells[c].centroid[p.index()];
            s.omega[p.index()][c] = exact(p, x, 0.0) + amp * (x[0] * 3.1 + x[1]).sin();
        }
    }
    s
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cutcell-bench-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn exact_state_has_zero_error() {
    let m = disk(16);
    let exact = |_: Phase, x: [f64; 3], _: f64| x[0] * x[1];
    let s = perturbed(&m, &exact, 0.0);
    for norm in [Normalization::Absolute, Normalization::Volume, Normalization::Relative] {
        assert_eq!(l2_errors(&s, &exact, &m, &[Phase::Minus], Subset::All, norm), Some(0.0));
    }
}

#[test]
fn subsets_are_additive_and_normalizations_relate() {
    let m = disk(32);
    let exact = |_: Phase, x: [f64; 3], _: f64| 1.0 + x[0] - 0.5 * x[1];
    let s = perturbed(&m, &exact, 1e-3);
    let ph = [Phase::Minus];
    for norm in [Normalization::Absolute, Normalization::Relative] {
        let [all, reg, cut] = Subset::ALL.map(|sub| l2_errors(&s, &exact, &m, &ph, sub, norm).unwrap());
        assert!((all * all - reg * reg - cut * cut).abs() <= 1e-14 * all * all);
    }
    let abs = l2_errors(&s, &exact, &m, &ph, Subset::All, Normalization::Absolute).unwrap();
    let vol = l2_errors(&s, &exact, &m, &ph, Subset::All, Normalization::Volume).unwrap();
    let area = m.total_volume(Phase::Minus);
    assert!((vol - abs / area.sqrt()).abs() <= 1e-14 * vol);
}

#[test]
fn relative_norm_ignores_scaling() {
    let m = disk(16);
    let exact = |_: Phase, x: [f64; 3], _: f64| 2.0 + x[0];
    let s = perturbed(&m, &exact, 1e-2);
    let base = l2_errors(&s, &exact, &m, &[Phase::Minus], Subset::All, Normalization::Relative).unwrap();
    let mut scaled = s.clone();
    scaled.omega[0].iter_mut().for_each(|v| *v *= 8.0);
    let exact8 = |p: Phase, x: [f64; 3], t: f64| 8.0 * exact(p, x, t);
    let r = l2_errors(&scaled, &exact8, &m, &[Phase::Minus], Subset::All, Normalization::Relative).unwrap();
    assert!((r - base).abs() <= 1e-14 * base);
}

#[test]
fn orders_of_a_power_law() {
    let hs = [0.4, 0.2, 0.1, 0.05];
    let errs: Vec<Option<f64>> = hs.iter().map(|h| Some(3.0 * h * h)).collect();
    let o = convergence_orders(&errs, &hs);
    assert!(o.pairwise.iter().all(|p| (p.unwrap() - 2.0).abs() < 1e-12));
    assert!((o.fit.unwrap() - 2.0).abs() < 1e-12);
    let gaps = convergence_orders(&[Some(1.0), None, Some(0.25)], &[1.0, 0.5, 0.25]);
    assert_eq!(gaps.pairwise, vec![None, None]);
    assert!((gaps.fit.unwrap() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn error_is_invariant_under_phase_relabeling(amp in 1e-4f64..1e-1, shift in -2.0f64..2.0) {
        // The same disk seen as the plus phase of the complementary level set.
        let grid = CartesianGrid::uniform(&[0.0, 0.0], &[4.0, 4.0], &[16, 16]).unwrap();
        let a = compute_moments(&grid, &Ball::new([2.0, 2.0, 0.0], 1.0, Phase::Minus), &MomentOptions::default()).unwrap();
        let b = compute_moments(&grid, &Ball::new([2.0, 2.0, 0.0], 1.0, Phase::Plus), &MomentOptions::default()).unwrap();
        let exact = move |_: Phase, x: [f64; 3], _: f64| shift + x[0] * x[0];
        let sa = perturbed(&a, &exact, amp);
        let sb = perturbed(&b, &exact, amp);
        for sub in Subset::ALL {
            let ea = l2_errors(&sa, &exact, &a, &[Phase::Minus], sub, Normalization::Absolute).unwrap();
            let eb = l2_errors(&sb, &exact, &b, &[Phase::Plus], sub, Normalization::Absolute).unwrap();
            prop_assert!((ea - eb).abs() <= 1e-15 * ea.max(1e-300) * 10.0);
        }
    }
}

#[test]
fn robin_disk_three_levels_converge_quickly() {
    let start = Instant::now();
    let report = run_benchmark(CaseId::RobinDisk, &BenchConfig { levels: Some(3), ..Default::default() }).unwrap();
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert_eq!(report.levels.len(), 3);
    assert!(report.orders[0].fit.unwrap() >= 1.5);
    let h1 = report.h1_orders.as_ref().unwrap()[0].fit.unwrap();
    // Coarse levels sit above the asymptotic first order.
    assert!(h1 > 0.8 && h1 < 1.5, "H1 order {h1}");
    assert!(report.failure.is_none());
    let table = report.table();
    assert!(table.contains("robin_disk") && table.contains("fit"));
}

#[test]
fn flower_levels_from_8_are_bounded() {
    let report = run_benchmark(CaseId::Jc2Flower, &BenchConfig::default()).unwrap();
    assert_eq!(report.levels.len(), 6);
    for l in &report.levels[1..] {
        assert_eq!(l.bounds.outside, 0, "N = {}", l.cells_per_axis);
        assert!(l.bounds.min >= 0.0 && l.bounds.max <= 1.0);
    }
    // The 4 x 4 grid undershoots in the four corner slivers around the hole.
    let coarse = &report.levels[0];
    assert_eq!(coarse.cells_per_axis, 4);
    assert_eq!(coarse.bounds.outside, 8);
}

#[test]
fn jump_relation_holds_after_the_solve() {
    let report = run_benchmark(CaseId::Jump1d, &BenchConfig { levels: Some(4), ..Default::default() }).unwrap();
    for l in &report.levels {
        assert!(l.jump_residual.unwrap() < 1e-12);
        assert!(l.steps > 0);
    }
}

#[test]
fn csv_artifacts_are_reproducible() {
    let cfg = |dir: PathBuf| BenchConfig { levels: Some(2), out_dir: Some(dir), write_fields: true, ..Default::default() };
    let (a, b) = (scratch_dir("a"), scratch_dir("b"));
    run_benchmark(CaseId::Circle2Phase, &cfg(a.clone())).unwrap();
    run_benchmark(CaseId::Circle2Phase, &cfg(b.clone())).unwrap();
    for name in ["errors.csv", "bounds.csv", "flux.csv", "flux_final.csv", "conservation.csv", "field_4.csv", "field_8.csv"] {
        let x = std::fs::read(a.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let errors = std::fs::read_to_string(a.join("errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 4);
    assert!(errors.lines().last().unwrap().starts_with("fit,"));
    let _ = std::fs::remove_dir_all(a);
    let _ = std::fs::remove_dir_all(b);
}

#[test]
fn failing_solver_reports_an_error() {
    let cfg = BenchConfig {
        levels: Some(2),
        parallel: false,
        solver: Some(LinearSolver::Iterative { max_iter: 1 }),
        ..Default::default()
    };
    assert!(run_benchmark(CaseId::RobinDisk, &cfg).is_err());
}

#[test]
fn bad_requests_are_rejected() {
    assert!(CaseId::from_name("no_such_case").is_none());
    for c in CaseId::ALL {
        assert_eq!(CaseId::from_name(c.name()), Some(c));
    }
    for levels in [0, 99] {
        let err = run_benchmark(CaseId::Jump1d, &BenchConfig { levels: Some(levels), ..Default::default() });
        assert!(matches!(err, Err(BenchError::Config(_))));
    }
    let law = SpecOverrides { interface: Some(InterfaceLaw::continuity()), ..Default::default() };
    let err = run_benchmark(CaseId::RobinDisk, &BenchConfig { levels: Some(1), overrides: law, ..Default::default() });
    assert!(matches!(err, Err(BenchError::Config(_))));
}

#[test]
fn boundary_override_changes_the_solution() {
    let base = run_benchmark(CaseId::Jc2Flower, &BenchConfig { levels: Some(2), ..Default::default() }).unwrap();
    let hot = SpecOverrides { bc: vec![(Side::West, BoundaryCondition::dirichlet(constant(1.0)))], interface: None };
    let over = run_benchmark(CaseId::Jc2Flower, &BenchConfig { levels: Some(2), overrides: hot, ..Default::default() }).unwrap();
    assert!(over.levels[1].bounds.max > base.levels[1].bounds.max);
    assert!(over.levels[1].bounds.outside == 0);
}

#[test]
fn level_problems_report_their_sizes() {
    let p = CaseId::Jc1Star.build_level(64, &CaseParams::default()).unwrap();
    assert_eq!(p.cells_per_axis, 64);
    assert!((p.h - 1.0 / 64.0).abs() < 1e-15);
    let r = solve_level(&p, None).unwrap();
    assert_eq!(r.cells_per_diameter, p.cells_per_diameter());
    assert!(r.cut > 0 && r.active > r.cut);
    assert!(r.l2[0].unwrap() < 1e-3);
}

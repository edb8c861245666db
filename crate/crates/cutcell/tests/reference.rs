use std::f64::consts::PI;

use cutcell::geometry::Phase;
use cutcell::reference::*;

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn robin_eigenvalues_match_known_roots() {
    // μ cot μ = −1 has its first root at 2.0287578381104345.
    let mu = robin_sphere_eigs(2.0, 3).unwrap();
    assert!((mu[0] - 2.028_757_838_110_434_5).abs() < 1e-10);
    for (n, m) in robin_sphere_eigs(1.0, 4).unwrap().iter().enumerate() {
        assert!((m - (n as f64 + 0.5) * PI).abs() < 1e-10);
    }
    assert_eq!(robin_sphere_eigs(0.0, 2).unwrap()[0], 0.0);
    assert!(robin_sphere_eigs(-1.0, 2).is_err());
}

#[test]
fn robin_series_limits() {
    let s = RobinSphereSeries::new(1.0, 1.0, 1.0, 1.0).prepared(1e-4).unwrap();
    // Interior points keep the initial value at short times.
    assert!((s.value(0.3, 1e-4) - 1.0).abs() < 1e-6);
    // Late times decay with the slowest mode only.
    let mu1 = s.eigenvalues()[0];
    let ratio = s.value(0.0, 3.0) / s.value(0.0, 2.0);
    assert!((ratio - (-mu1 * mu1).exp()).abs() < 1e-10);
    let insulated = RobinSphereSeries::new(1.0, 0.0, 1.0, 0.7).prepared(0.1).unwrap();
    assert_eq!(insulated.value(0.5, 1.0), 0.7);
}

#[test]
fn robin_series_satisfies_the_surface_condition() {
    let s = RobinSphereSeries::new(1.0, 2.0, 1.0, 1.0).prepared(0.05).unwrap();
    let h = 1e-4;
    let slope = (s.value(1.0 + h, 0.1) - s.value(1.0 - h, 0.1)) / (2.0 * h);
    assert!((slope + 2.0 * s.value(1.0, 0.1)).abs() < 1e-6);
}

#[test]
fn closed_forms_at_sample_points() {
    assert!((jc1_exact(0.5, 0.0) - 0.0625).abs() < 1e-15);
    assert!(jc1_exact(0.7, PI / 6.0).abs() < 1e-15);
    assert_eq!(robin_disk_exact(0.0), 1.75);
    assert_eq!(robin_disk_exact(1.0), 1.5);
    let (v, p) = erfc_jump_1d(4.01, 0.5, 100.0, 1.0, 4.01);
    assert_eq!(p, Phase::Minus);
    assert!((v - (1.0 - 100.0 / 101.0)).abs() < 1e-14);
}

#[test]
fn uniform_kernels_conserve_content() {
    let t = 0.3;
    let disk = simpson(|r| 2.0 * PI * r * uniform_disk_heat(r, t, 1.0, 2.0, 1.0).unwrap(), 0.0, 10.0, 800);
    assert!((disk - 4.0 * PI).abs() < 1e-8 * 4.0 * PI);
    let ball = simpson(|r| 4.0 * PI * r * r * uniform_sphere_heat(r, t, 1.5, 1.0, 2.0), 0.0, 10.0, 800);
    let target = 4.0 / 3.0 * PI * 2.0;
    assert!((ball - target).abs() < 1e-8 * target);
}

#[test]
fn disk_flux_is_the_radial_derivative() {
    let t = 0.4;
    let h = 1e-4;
    let slope = (uniform_disk_heat(2.0 + h, t, 1.0, 2.0, 1.0).unwrap() - uniform_disk_heat(2.0 - h, t, 1.0, 2.0, 1.0).unwrap()) / (2.0 * h);
    let flux = -2.0 * PI * 2.0 * slope;
    assert!((flux - uniform_disk_flux_r2(t)).abs() < 1e-6 * flux);
}

#[test]
fn circle_solution_conserves_content_and_matches_its_flux() {
    let c = CircleBessel { k_plus: 1.0, k_minus: 2.0, r0: 2.0, phi0: 1.0 };
    let inner = |t: f64| simpson(|r| 2.0 * PI * r * c.value(Phase::Plus, r, t).unwrap(), 0.0, 2.0, 200);
    let outer = |t: f64| simpson(|r| 2.0 * PI * r * c.value(Phase::Minus, r, t).unwrap(), 2.0, 14.0, 600);
    let t = 0.5;
    let total = inner(t) + outer(t);
    assert!((total - 4.0 * PI).abs() < 1e-5 * 4.0 * PI, "content {total}");
    let dt = 1e-3;
    let rate = (inner(t + dt) - inner(t - dt)) / (2.0 * dt);
    let q = c.interface_flux(t).unwrap();
    assert!((rate + q).abs() < 1e-4 * q, "rate {rate} flux {q}");
}

#[test]
fn brown_solution_conserves_content() {
    let b = BrownParams::new(1.0, 2.0, 1.0, 1.0).calibrate(1e-4).unwrap();
    let t = 0.2;
    let core = simpson(|r| 4.0 * PI * r * r * b.value(r, t).unwrap(), 0.0, 1.0, 200);
    let shell = simpson(|r| 4.0 * PI * r * r * b.value(r, t).unwrap(), 1.0, 9.0, 800);
    let target = 4.0 / 3.0 * PI;
    assert!((core + shell - target).abs() < 1e-5 * target, "content {}", core + shell);
    // Continuity across the interface.
    assert!((b.core_value(1.0, t).unwrap() - b.shell_value(1.0, t).unwrap()).abs() < 1e-9);
}

#[test]
fn brown_reduces_to_the_uniform_ball() {
    let b = BrownParams::new(1.0, 1.0, 1.0, 1.0).calibrate(1e-4).unwrap();
    for r in [0.0, 0.5, 1.5] {
        let v = b.value(r, 0.1).unwrap();
        assert!((v - uniform_sphere_heat(r, 0.1, 1.0, 1.0, 1.0)).abs() < 1e-7);
    }
}

#[test]
fn negative_times_are_rejected() {
    let c = CircleBessel { k_plus: 1.0, k_minus: 1.0, r0: 2.0, phi0: 1.0 };
    assert!(c.value(Phase::Plus, 1.0, 0.0).is_err());
    assert!(BrownParams::new(1.0, 2.0, 1.0, 1.0).value(0.5, -1.0).is_err());
}

#[test]
fn every_self_check_passes() {
    let results = checks::run_all();
    assert!(results.len() > 20);
    for r in &results {
        assert!(r.passed(), "{}: {:.3e} > {:.0e}", r.name, r.residual, r.tol);
    }
}

//! Pointwise verification of the analytical solutions: PDE residuals by
//! fourth-order finite differences, interface conditions and uniform-medium limits.

use std::f64::consts::PI;

use super::special::*;
use super::*;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tol
    }
}

pub const PDE_TOL: f64 = 1e-5;
pub const INTERFACE_TOL: f64 = 1e-7;
pub const ORACLE_TOL: f64 = 1e-6;

/// Deterministic low-discrepancy points in `[0, 1)`.
fn halton(i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = i + 1;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Fourth-order central second derivative.
pub fn d2(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
}

/// Fourth-order central first derivative.
pub fn d1(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Cartesian Laplacian of a radial function of `dim` variables at radius `r`, evaluated
/// off-axis so the stencil samples genuinely multi-dimensional points.
fn radial_laplacian(g: &dyn Fn(f64) -> f64, r: f64, dim: usize, h: f64) -> f64 {
    let c = r / (dim as f64).sqrt();
    let x = [c; 3];
    let at = |p: [f64; 3]| g((0..dim).map(|a| p[a] * p[a]).sum::<f64>().sqrt());
    (0..dim)
        .map(|a| {
            let line = |s: f64| {
                let mut p = x;
                p[a] = s;
                at(p)
            };
            d2(&line, x[a], h)
        })
        .sum()
}

fn worst<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

fn check(name: &str, residual: f64, tol: f64) -> CheckResult {
    CheckResult { name: name.to_string(), residual, tol }
}

pub fn check_special_functions() -> Vec<CheckResult> {
    let w = worst((1..200).map(|i| {
        let x = 0.05 * i as f64;
        (bessel_j1(x) * bessel_y0(x) - bessel_j0(x) * bessel_y1(x)) - 2.0 / (PI * x)
    }));
    let ends = worst([bessel_j0(0.0) - 1.0, bessel_j1(0.0), erfc(0.0) - 1.0]);
    vec![check("bessel wronskian", w, 1e-10), check("special values at zero", ends, 0.0)]
}

pub fn check_star_poisson() -> Vec<CheckResult> {
    let h = 1e-3;
    let res = worst((0..20).map(|i| {
        let r = 0.05 + 0.4 * halton(i, 2);
        let th = 2.0 * PI * halton(i, 3);
        let (x, y) = (r * th.cos(), r * th.sin());
        let f = |x: f64, y: f64| jc1_exact(x.hypot(y), y.atan2(x));
        let lap = d2(&|s| f(s, y), x, h) + d2(&|s| f(x, s), y, h);
        lap - jc1_source(r, th)
    }));
    let grad = worst((0..20).map(|i| {
        let (x, y) = (0.4 * halton(i, 2) - 0.2, 0.4 * halton(i, 3) - 0.2);
        let f = |x: f64, y: f64| jc1_exact(x.hypot(y), y.atan2(x));
        let g = jc1_gradient(x, y);
        (d1(&|s| f(s, y), x, 1e-4) - g[0]).abs().max((d1(&|s| f(x, s), y, 1e-4) - g[1]).abs())
    }));
    vec![check("star poisson residual", res, PDE_TOL), check("star gradient", grad, PDE_TOL)]
}

pub fn check_robin_disk() -> Vec<CheckResult> {
    let res = worst((0..10).map(|i| {
        let r = 0.95 * halton(i, 2);
        radial_laplacian(&robin_disk_exact, r, 2, 1e-3) + 1.0
    }));
    let slope = d1(&robin_disk_exact, 1.0, 1e-4);
    let bc = slope + robin_disk_exact(1.0) - 1.0;
    vec![check("robin disk residual", res, PDE_TOL), check("robin disk boundary", bc.abs(), INTERFACE_TOL)]
}

pub fn check_robin_sphere() -> Vec<CheckResult> {
    let (rad, k, a) = (1.0, 1.0, 1.0);
    let s = RobinSphereSeries::new(rad, k, a, 1.0).prepared(1e-3).unwrap();
    let res = worst((0..20).map(|i| {
        let r = 0.05 + 0.9 * halton(i, 2);
        let t = 0.01 + 0.09 * halton(i, 3);
        let dt = d1(&|tt| s.value(r, tt), t, 1e-4);
        dt - a * radial_laplacian(&|rr| s.value(rr, t), r, 3, 1e-3)
    }));
    let bc = worst((0..5).map(|i| {
        let t = 0.01 + 0.02 * i as f64;
        d1(&|rr| s.value(rr, t), rad, 1e-4) + k * s.value(rad, t)
    }));
    let eig = worst(robin_sphere_eigs(2.0, 20).unwrap().into_iter().map(|mu| mu / mu.tan() + 1.0));
    let insulated = RobinSphereSeries::new(1.0, 0.0, 1.0, 2.0).prepared(1e-3).unwrap();
    let flat = (insulated.value(0.3, 0.05) - 2.0).abs();
    let early = (s.value(0.4, 1e-6) - 1.0).abs();
    vec![
        check("robin sphere residual", res, PDE_TOL),
        check("robin sphere boundary", bc, INTERFACE_TOL),
        check("robin sphere eigenvalues", eig, 1e-12),
        check("robin sphere insulated limit", flat, 1e-14),
        check("robin sphere initial limit", early, 1e-3),
    ]
}

pub fn check_erfc_jump() -> Vec<CheckResult> {
    let mut out = Vec::new();
    for &lambda in &[0.1, 1.0, 100.0] {
        let s = ErfcJump { lambda, k: 0.7, x_int: 4.01 };
        let res = worst((0..20).map(|i| {
            let x = 8.0 * halton(i, 2);
            let t = 0.2 + halton(i, 3);
            let p = s.phase_of(x);
            d1(&|tt| s.value(p, x, tt), t, 1e-4) - s.k * d2(&|xx| s.value(p, xx, t), x, 1e-3)
        }));
        let t = 0.5;
        let jump = s.value(Phase::Plus, s.x_int, t) - lambda * s.value(Phase::Minus, s.x_int, t);
        let fm = d1(&|x| s.value(Phase::Minus, x, t), s.x_int, 1e-4);
        let fp = d1(&|x| s.value(Phase::Plus, x, t), s.x_int, 1e-4);
        out.push(check(&format!("erfc jump residual (lambda {lambda})"), res, PDE_TOL));
        out.push(check(&format!("erfc jump relation (lambda {lambda})"), jump.abs(), INTERFACE_TOL));
        out.push(check(&format!("erfc jump flux (lambda {lambda})"), (s.k * (fm - fp)).abs(), INTERFACE_TOL));
    }
    out
}

/// Interface and PDE checks of the two-phase disk solution with diffusivities `k_plus`, `k_minus`.
pub fn check_circle(k_plus: f64, k_minus: f64) -> Vec<CheckResult> {
    let s = CircleBessel { k_plus, k_minus, r0: 2.0, phi0: 1.0 };
    let label = format!("(K+ {k_plus}, K- {k_minus})");
    let v = |p: Phase, r: f64, t: f64| s.value(p, r, t).unwrap_or(f64::NAN);
    let res = worst((0..20).map(|i| {
        let r = 0.2 + 4.5 * halton(i, 2);
        if (r - s.r0).abs() < 0.1 {
            return 0.0;
        }
        let t = 0.2 + 0.8 * halton(i, 3);
        let p = if r < s.r0 { Phase::Plus } else { Phase::Minus };
        let k = if p == Phase::Plus { k_plus } else { k_minus };
        d1(&|tt| v(p, r, tt), t, 1e-3) - k * radial_laplacian(&|rr| v(p, rr, t), r, 2, 1e-2)
    }));
    let mut cont = 0.0f64;
    let mut flux = 0.0f64;
    for &t in &[0.25, 0.5, 1.0] {
        cont = cont.max((v(Phase::Plus, s.r0, t) - v(Phase::Minus, s.r0, t)).abs());
        let gp = d1(&|r| v(Phase::Plus, r, t), s.r0, 1e-3);
        let gm = d1(&|r| v(Phase::Minus, r, t), s.r0, 1e-3);
        flux = flux.max((k_plus * gp - k_minus * gm).abs());
        let analytic = s.radial_slope_plus(s.r0, t).unwrap_or(f64::NAN);
        flux = flux.max((analytic - gp).abs());
    }
    vec![
        check(&format!("circle residual {label}"), res, PDE_TOL),
        check(&format!("circle continuity {label}"), cont, INTERFACE_TOL),
        check(&format!("circle flux {label}"), flux, INTERFACE_TOL),
    ]
}

pub fn check_circle_uniform_limit() -> Vec<CheckResult> {
    let s = CircleBessel { k_plus: 1.0, k_minus: 1.0, r0: 2.0, phi0: 1.0 };
    let mut diff = 0.0f64;
    for i in 0..10 {
        let r = 0.1 + 4.0 * halton(i, 2);
        let t = 0.1 + 0.9 * halton(i, 3);
        let p = if r < 2.0 { Phase::Plus } else { Phase::Minus };
        let a = s.value(p, r, t).unwrap_or(f64::NAN);
        let b = uniform_disk_heat(r, t, 1.0, 2.0, 1.0).unwrap_or(f64::NAN);
        diff = diff.max((a - b).abs());
    }
    let mut fl = 0.0f64;
    for &t in &[0.2, 0.5, 1.0] {
        let q = s.interface_flux(t).unwrap_or(f64::NAN);
        fl = fl.max((q - uniform_disk_flux_r2(t)).abs() / uniform_disk_flux_r2(t));
    }
    vec![check("circle uniform-medium oracle", diff, ORACLE_TOL), check("circle uniform-medium flux", fl, ORACLE_TOL)]
}

/// Checks of the composite-sphere solution with diffusivities `d_minus` (core) and `d_plus` (shell).
pub fn check_brown(d_minus: f64, d_plus: f64) -> Vec<CheckResult> {
    let label = format!("(D- {d_minus}, D+ {d_plus})");
    let p = match BrownParams::new(d_minus, d_plus, 1.0, 1.0).calibrate(1e-4) {
        Ok(p) => p,
        Err(_) => return vec![check(&format!("brown calibration {label}"), f64::NAN, 0.0)],
    };
    let v = |r: f64, t: f64| p.value(r, t).unwrap_or(f64::NAN);
    let res = worst((0..20).map(|i| {
        let r = 0.1 + 2.5 * halton(i, 2);
        if (r - p.r0).abs() < 0.05 {
            return 0.0;
        }
        let t = 0.05 + 0.45 * halton(i, 3);
        let d = if r < p.r0 { d_minus } else { d_plus };
        d1(&|tt| v(r, tt), t, 1e-3) - d * radial_laplacian(&|rr| v(rr, t), r, 3, 1e-2)
    }));
    let mut cont = 0.0f64;
    let mut flux = 0.0f64;
    for &t in &[0.05, 0.1, 0.3] {
        let inner = |r: f64| p.core_value(r, t).unwrap_or(f64::NAN);
        let outer = |r: f64| p.shell_value(r, t).unwrap_or(f64::NAN);
        cont = cont.max((inner(p.r0) - outer(p.r0)).abs());
        flux = flux.max((d_minus * d1(&inner, p.r0, 1e-3) - d_plus * d1(&outer, p.r0, 1e-3)).abs());
    }
    vec![
        check(&format!("brown residual {label}"), res, PDE_TOL),
        check(&format!("brown continuity {label}"), cont, INTERFACE_TOL),
        check(&format!("brown flux {label}"), flux, INTERFACE_TOL),
        check(&format!("brown initial limit {label}"), (v(0.3, 1e-4) - 1.0).abs(), 1e-6),
    ]
}

pub fn check_brown_uniform_limit() -> Vec<CheckResult> {
    let p = BrownParams::new(1.0, 1.0, 1.0, 1.0).calibrate(1e-4).unwrap();
    let diff = worst((0..10).map(|i| {
        let r = 0.05 + 2.5 * halton(i, 2);
        let t = 0.05 + 0.5 * halton(i, 3);
        p.value(r, t).unwrap_or(f64::NAN) - uniform_sphere_heat(r, t, 1.0, 1.0, 1.0)
    }));
    vec![check("brown uniform-medium oracle", diff, ORACLE_TOL), check("brown calibrated prefactor", (p.alpha - 1.0).abs(), 1e-6)]
}

/// Every self-check.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = check_special_functions();
    out.extend(check_star_poisson());
    out.extend(check_robin_disk());
    out.extend(check_robin_sphere());
    out.extend(check_erfc_jump());
    out.extend(check_circle(1.0, 1.0));
    out.extend(check_circle(2.0, 0.5));
    out.extend(check_circle_uniform_limit());
    out.extend(check_brown(1.0, 1.0));
    out.extend(check_brown(1.0, 2.0));
    out.extend(check_brown_uniform_limit());
    out
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_self_checks_pass() {
        let results = super::run_all();
        for r in &results {
            println!("{:<48} {:.3e} (tol {:.0e})", r.name, r.residual, r.tol);
        }
        assert!(results.iter().all(|r| r.passed()));
    }
}

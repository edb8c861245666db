//! Analytical solutions of the benchmark problems.

pub mod checks;
pub mod quadrature;
pub mod special;

use std::f64::consts::PI;
use std::fmt;

use crate::geometry::Phase;
use quadrature::{bisect, integrate_panels, QuadratureError};
use special::*;

/// Exponent beyond which `e^{-x}` is negligible against unit-size terms.
const CUTOFF_EXPONENT: f64 = 37.0;
const QUAD_TOL: f64 = 1e-12;

/// `r⁴ cos 3θ`.
pub fn jc1_exact(r: f64, theta: f64) -> f64 {
    r.powi(4) * (3.0 * theta).cos()
}

/// Laplacian of [`jc1_exact`], `7 r² cos 3θ`.
pub fn jc1_source(r: f64, theta: f64) -> f64 {
    7.0 * r * r * (3.0 * theta).cos()
}

/// Cartesian gradient of [`jc1_exact`] at `(x, y)`.
pub fn jc1_gradient(x: f64, y: f64) -> [f64; 2] {
    // r⁴cos3θ = r·(x³ − 3xy²)
    let r = x.hypot(y);
    let p = x * x * x - 3.0 * x * y * y;
    if r == 0.0 {
        return [0.0, 0.0];
    }
    [(3.0 * x * x - 3.0 * y * y) * r + p * x / r, -6.0 * x * y * r + p * y / r]
}

/// `7/4 − r²/4`, the Robin disk solution with `r` measured from the disk center.
pub fn robin_disk_exact(r: f64) -> f64 {
    1.75 - 0.25 * r * r
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceError {
    Bracket { n: usize },
    Quadrature(QuadratureError),
    InvalidParameter(String),
}

impl fmt::Display for ReferenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceError::Bracket { n } => write!(f, "no sign change bracketing eigenvalue {n}"),
            ReferenceError::Quadrature(e) => write!(f, "{e}"),
            ReferenceError::InvalidParameter(s) => write!(f, "{s}"),
        }
    }
}

impl std::error::Error for ReferenceError {}

impl From<QuadratureError> for ReferenceError {
    fn from(e: QuadratureError) -> Self {
        ReferenceError::Quadrature(e)
    }
}

/// First `n_max` positive roots of `μ cot μ + kR − 1 = 0`, the n-th in `((n−1)π, nπ)`.
pub fn robin_sphere_eigs(k_r: f64, n_max: usize) -> Result<Vec<f64>, ReferenceError> {
    if !(k_r >= 0.0) {
        return Err(ReferenceError::InvalidParameter(format!("kR must be non-negative, got {k_r}")));
    }
    let f = |mu: f64| mu * mu.cos() + (k_r - 1.0) * mu.sin();
    (1..=n_max)
        .map(|n| {
            let lo = if n == 1 { 1e-9 } else { (n - 1) as f64 * PI };
            let hi = n as f64 * PI;
            if n == 1 && k_r == 0.0 {
                // Neumann limit: the lowest root collapses onto μ = 0.
                return Ok(0.0);
            }
            bisect(&f, lo, hi).ok_or(ReferenceError::Bracket { n })
        })
        .collect()
}

/// Radial series for a uniformly initialized ball cooled through a Robin surface,
/// `∂φ/∂r + kφ = 0`, with diffusivity `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinSphereSeries {
    pub radius: f64,
    pub k: f64,
    pub a: f64,
    pub phi0: f64,
    mus: Vec<f64>,
    coeffs: Vec<f64>,
}

impl RobinSphereSeries {
    pub fn new(radius: f64, k: f64, a: f64, phi0: f64) -> Self {
        Self { radius, k, a, phi0, mus: Vec::new(), coeffs: Vec::new() }
    }

    /// Precomputes enough eigenpairs for all times `t ≥ t_min`.
    pub fn prepared(mut self, t_min: f64) -> Result<Self, ReferenceError> {
        let n = self.terms_needed(t_min);
        let kr = self.k * self.radius;
        self.mus = robin_sphere_eigs(kr, n)?;
        self.coeffs = self
            .mus
            .iter()
            .map(|&mu| {
                if mu == 0.0 {
                    return 0.0;
                }
                2.0 * kr * self.radius * self.phi0 / (mu * mu) * (mu * mu + (kr - 1.0).powi(2)) / (mu * mu + kr * (kr - 1.0))
                    * mu.sin()
            })
            .collect();
        Ok(self)
    }

    fn terms_needed(&self, t: f64) -> usize {
        let mu = (CUTOFF_EXPONENT * self.radius * self.radius / (self.a * t.max(1e-300))).sqrt();
        ((mu / PI).ceil() as usize + 2).min(200_000)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.mus
    }

    pub fn value(&self, r: f64, t: f64) -> f64 {
        if self.k == 0.0 {
            return self.phi0;
        }
        let r2 = self.radius * self.radius;
        let mut sum = 0.0;
        for (&mu, &c) in self.mus.iter().zip(&self.coeffs) {
            let decay = (-self.a * mu * mu * t / r2).exp();
            let bound = decay * c.abs() * mu / self.radius;
            let shape = if r > 1e-12 * self.radius { (mu * r / self.radius).sin() / r } else { mu / self.radius };
            sum += c * shape * decay;
            if bound < 1e-16 * self.phi0.abs() {
                break;
            }
        }
        sum
    }
}

/// Self-similar 1D two-phase solution with homothetic jump `φ⁺ = λφ⁻` at `x_int`.
///
/// Phase `+` occupies `x < x_int` with profile `A(erfc η − 2)`, phase `−` the
/// right side with `A erfc η + 1`, where `A = −λ/(1+λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErfcJump {
    pub lambda: f64,
    pub k: f64,
    pub x_int: f64,
}

impl ErfcJump {
    pub fn prefactor(&self) -> f64 {
        -self.lambda / (1.0 + self.lambda)
    }

    fn eta(&self, x: f64, t: f64) -> f64 {
        (x - self.x_int) / (2.0 * (self.k * t).sqrt())
    }

    /// Profile of the side `x < x_int`.
    pub fn left(&self, x: f64, t: f64) -> f64 {
        self.prefactor() * (erfc(self.eta(x, t)) - 2.0)
    }

    /// Profile of the side `x > x_int`.
    pub fn right(&self, x: f64, t: f64) -> f64 {
        self.prefactor() * erfc(self.eta(x, t)) + 1.0
    }

    pub fn value(&self, p: Phase, x: f64, t: f64) -> f64 {
        match p {
            Phase::Plus => self.left(x, t),
            Phase::Minus => self.right(x, t),
        }
    }

    /// `∂φ/∂x`, identical on both sides.
    pub fn slope(&self, x: f64, t: f64) -> f64 {
        let eta = self.eta(x, t);
        -self.prefactor() * 2.0 / PI.sqrt() * (-eta * eta).exp() / (2.0 * (self.k * t).sqrt())
    }

    pub fn phase_of(&self, x: f64) -> Phase {
        if x < self.x_int {
            Phase::Plus
        } else {
            Phase::Minus
        }
    }
}

/// Value and phase at `x`.
pub fn erfc_jump_1d(x: f64, t: f64, lambda: f64, k: f64, x_int: f64) -> (f64, Phase) {
    let s = ErfcJump { lambda, k, x_int };
    let p = s.phase_of(x);
    (s.value(p, x, t), p)
}

/// Disk of initial value `φ₀` (inner phase `+`) in an unbounded medium (outer phase `−`),
/// continuous value and flux across `r = R₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleBessel {
    pub k_plus: f64,
    pub k_minus: f64,
    pub r0: f64,
    pub phi0: f64,
}

impl CircleBessel {
    fn ratio(&self) -> f64 {
        (self.k_plus / self.k_minus).sqrt()
    }

    fn aux(&self, u: f64) -> (f64, f64) {
        let kk = self.ratio();
        let (kp, km) = (self.k_plus, self.k_minus);
        let x = self.r0 * u;
        let (j0, j1) = (bessel_j0(x), bessel_j1(x));
        let y = kk * x;
        let a = kp * km.sqrt();
        let b = km * kp.sqrt();
        let phi = a * j1 * bessel_y0(y) - b * j0 * bessel_y1(y);
        let psi = a * j1 * bessel_j0(y) - b * j0 * bessel_j1(y);
        (phi, psi)
    }

    fn u_max(&self, t: f64) -> f64 {
        (CUTOFF_EXPONENT / (self.k_plus * t)).sqrt()
    }

    fn panel(&self, r: f64) -> f64 {
        let omega = (r.max(self.r0)) * self.ratio().max(1.0) + self.r0;
        0.5 * PI / omega
    }

    fn integral(&self, r: f64, t: f64, f: &dyn Fn(f64) -> f64) -> Result<f64, ReferenceError> {
        if !(t > 0.0) {
            return Err(ReferenceError::InvalidParameter(format!("time must be positive, got {t}")));
        }
        Ok(integrate_panels(f, 0.0, self.u_max(t), self.panel(r), QUAD_TOL)?.value)
    }

    pub fn value(&self, p: Phase, r: f64, t: f64) -> Result<f64, ReferenceError> {
        let (kp, km, r0) = (self.k_plus, self.k_minus, self.r0);
        let kk = self.ratio();
        match p {
            Phase::Plus => {
                let c = 4.0 * self.phi0 * kp * km * km / (PI * PI * r0);
                let f = |u: f64| {
                    let (phi, psi) = self.aux(u);
                    (-kp * u * u * t).exp() * bessel_j0(u * r) * bessel_j1(u * r0) / (u * u * (phi * phi + psi * psi))
                };
                Ok(c * self.integral(r, t, &f)?)
            }
            Phase::Minus => {
                let c = 2.0 * self.phi0 * kp * km.sqrt() / PI;
                let f = |u: f64| {
                    let (phi, psi) = self.aux(u);
                    let y = kk * u * r;
                    (-kp * u * u * t).exp() * bessel_j1(u * r0) * (bessel_j0(y) * phi - bessel_y0(y) * psi)
                        / (u * (phi * phi + psi * psi))
                };
                Ok(c * self.integral(r, t, &f)?)
            }
        }
    }

    /// `∂φ⁺/∂r`.
    pub fn radial_slope_plus(&self, r: f64, t: f64) -> Result<f64, ReferenceError> {
        let (kp, km, r0) = (self.k_plus, self.k_minus, self.r0);
        let c = 4.0 * self.phi0 * kp * km * km / (PI * PI * r0);
        let f = |u: f64| {
            let (phi, psi) = self.aux(u);
            -(-kp * u * u * t).exp() * bessel_j1(u * r) * bessel_j1(u * r0) / (u * (phi * phi + psi * psi))
        };
        Ok(c * self.integral(r, t, &f)?)
    }

    /// Outflow of the inner phase through the circle, `−∮ K⁺ ∂φ⁺/∂r ds`.
    pub fn interface_flux(&self, t: f64) -> Result<f64, ReferenceError> {
        Ok(-2.0 * PI * self.r0 * self.k_plus * self.radial_slope_plus(self.r0, t)?)
    }
}

/// Inner phase of `+` value `φ₀` diffusing in one uniform medium (oracle for equal diffusivities).
pub fn uniform_disk_heat(r: f64, t: f64, k: f64, r0: f64, phi0: f64) -> Result<f64, ReferenceError> {
    let s4 = 4.0 * k * t;
    // e^{-(r²+s²)/4kt} I0(r s / 2kt) = e^{-(r−s)²/4kt} · e^{-x} I0(x)
    let f = |s: f64| {
        let x = r * s / (2.0 * k * t);
        (-(r - s) * (r - s) / s4).exp() * bessel_i0_scaled(x) * s
    };
    let width = (k * t).sqrt().min(r0) * 0.5;
    Ok(phi0 / (2.0 * k * t) * integrate_panels(&f, 0.0, r0, width, 1e-14)?.value)
}

/// Flux out of a disk of radius 2 (unit diffusivity, unit initial value) in a uniform medium:
/// `(4π/t) e^{-2/t} I₁(2/t)`.
pub fn uniform_disk_flux_r2(t: f64) -> f64 {
    let x = 2.0 / t;
    4.0 * PI / t * bessel_i1_scaled(x)
}

/// Ball of radius `r0` and value `φ₀` diffusing in one uniform medium.
pub fn uniform_sphere_heat(r: f64, t: f64, d: f64, r0: f64, phi0: f64) -> f64 {
    let s = 2.0 * (d * t).sqrt();
    if r < 1e-8 * r0 {
        let z = r0 / s;
        return phi0 * (erf(z) - 2.0 * z / PI.sqrt() * (-z * z).exp());
    }
    let g = ((d * t) / PI).sqrt() / r;
    phi0 * (0.5 * (erf((r0 - r) / s) + erf((r0 + r) / s)) - g * ((-(r0 - r).powi(2) / (s * s)).exp() - (-(r0 + r).powi(2) / (s * s)).exp()))
}

/// Composite sphere: inner phase `−` (`r < R₀`) initially at `φ₀`, outer phase `+` initially empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownParams {
    pub d_minus: f64,
    pub d_plus: f64,
    pub r0: f64,
    pub phi0: f64,
    /// Prefactor of both integrals, fixed by [`BrownParams::calibrate`].
    pub alpha: f64,
}

impl BrownParams {
    pub fn new(d_minus: f64, d_plus: f64, r0: f64, phi0: f64) -> Self {
        Self { d_minus, d_plus, r0, phi0, alpha: 1.0 }
    }

    pub fn sigma(&self) -> f64 {
        (self.d_plus / self.d_minus).sqrt()
    }

    /// Coupling coefficient of the shell modes. Flux continuity with unit capacities
    /// forces it to equal `σ`; `(D⁺/D⁻)σ` leaves a flux jump at the interface.
    pub fn q(&self) -> f64 {
        self.sigma()
    }

    pub fn l(&self) -> f64 {
        (self.d_plus - self.d_minus) / self.d_minus
    }

    pub fn denominator(&self, u: f64) -> f64 {
        let (s, c) = u.sin_cos();
        (u * c + self.l() * s).powi(2) + (self.q() * u * s).powi(2)
    }

    fn u_max(&self, t: f64) -> f64 {
        self.r0 * (CUTOFF_EXPONENT / (self.d_minus * t)).sqrt()
    }

    fn integral(&self, r: f64, t: f64, f: &dyn Fn(f64) -> f64) -> Result<f64, ReferenceError> {
        if !(t > 0.0) {
            return Err(ReferenceError::InvalidParameter(format!("time must be positive, got {t}")));
        }
        let omega = 1.0 + r / self.r0 + (r - self.r0).abs() / (self.sigma() * self.r0);
        Ok(integrate_panels(f, 0.0, self.u_max(t), 0.5 * PI / omega, QUAD_TOL)?.value)
    }

    fn core_integrand(&self, r: f64, t: f64) -> impl Fn(f64) -> f64 + '_ {
        let small = r < 1e-10 * self.r0;
        move |u: f64| {
            let (s, c) = u.sin_cos();
            let shape = if small { u / self.r0 } else { (u * r / self.r0).sin() / r };
            (s - u * c) * shape / self.denominator(u) * (-self.d_minus * u * u * t / (self.r0 * self.r0)).exp()
        }
    }

    /// Core formula, valid for `r ≤ R₀`.
    pub fn core_value(&self, r: f64, t: f64) -> Result<f64, ReferenceError> {
        let f = self.core_integrand(r, t);
        Ok(2.0 * self.q() * self.alpha * self.phi0 / PI * self.integral(r, t, &f)?)
    }

    /// Shell formula, valid for `r ≥ R₀`.
    pub fn shell_value(&self, r: f64, t: f64) -> Result<f64, ReferenceError> {
        let (q, l, sig, r0) = (self.q(), self.l(), self.sigma(), self.r0);
        let f = |u: f64| {
            let (s, c) = u.sin_cos();
            let arg = u * (r - r0) / (sig * r0);
            let big_f = (u * c + l * s) * arg.sin() + q * u * s * arg.cos();
            (s - u * c) * big_f / (u * self.denominator(u)) * (-self.d_minus * u * u * t / (r0 * r0)).exp()
        };
        Ok(2.0 * self.alpha * self.phi0 / (PI * r) * self.integral(r, t, &f)?)
    }

    pub fn value(&self, r: f64, t: f64) -> Result<f64, ReferenceError> {
        if r < self.r0 {
            self.core_value(r, t)
        } else {
            self.shell_value(r, t)
        }
    }

    /// Chooses `α` so the center value tends to `φ₀` as `t → 0⁺` (evaluated at `t_small`).
    pub fn calibrate(mut self, t_small: f64) -> Result<Self, ReferenceError> {
        self.alpha = 1.0;
        let unit = self.core_value(0.0, t_small)?;
        self.alpha = self.phi0 / unit;
        Ok(self)
    }

    pub fn phase_of(&self, r: f64) -> Phase {
        if r < self.r0 {
            Phase::Minus
        } else {
            Phase::Plus
        }
    }
}

/// Brown solution value at `r` (phase chosen by position).
pub fn brown_sphere_solution(r: f64, t: f64, params: &BrownParams) -> Result<f64, ReferenceError> {
    params.value(r, t)
}

/// Circle solution value at `r` for phase `p`.
pub fn circle_bessel_solution(p: Phase, r: f64, t: f64, params: &CircleBessel) -> Result<f64, ReferenceError> {
    params.value(p, r, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigs_unit_kr() {
        let mu = robin_sphere_eigs(1.0, 3).unwrap();
        assert!((mu[0] - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn erfc_jump_interface_values() {
        let s = ErfcJump { lambda: 1.0, k: 1.0, x_int: 0.0 };
        assert!((s.value(Phase::Minus, 0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((s.value(Phase::Plus, 0.0, 1.0) - 0.5).abs() < 1e-15);
        let s = ErfcJump { lambda: 100.0, k: 0.3, x_int: 4.01 };
        let ratio = s.value(Phase::Plus, 4.01, 0.7) / s.value(Phase::Minus, 4.01, 0.7);
        assert!((ratio - 100.0).abs() < 1e-12);
    }
}

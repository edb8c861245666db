//! Error function and Bessel functions.

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

pub fn bessel_j1(x: f64) -> f64 {
    libm::j1(x)
}

pub fn bessel_y0(x: f64) -> f64 {
    libm::y0(x)
}

pub fn bessel_y1(x: f64) -> f64 {
    libm::y1(x)
}

const SERIES_LIMIT: f64 = 50.0;

fn series_scaled(nu: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if nu == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * (k + nu as f64));
        sum += term;
        k += 1.0;
    }
    sum * (-x).exp()
}

fn asymptotic_scaled(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// `e^{-x} I_ν(x)` for `ν ∈ {0, 1}` and `x ≥ 0`.
fn scaled_i(nu: u32, x: f64) -> f64 {
    assert!(x >= 0.0, "modified Bessel argument must be non-negative");
    if x <= SERIES_LIMIT {
        series_scaled(nu, x)
    } else {
        asymptotic_scaled(nu, x)
    }
}

pub fn bessel_i0_scaled(x: f64) -> f64 {
    scaled_i(0, x.abs())
}

pub fn bessel_i1_scaled(x: f64) -> f64 {
    x.signum() * scaled_i(1, x.abs())
}

pub fn bessel_i1(x: f64) -> f64 {
    bessel_i1_scaled(x) * x.abs().exp()
}

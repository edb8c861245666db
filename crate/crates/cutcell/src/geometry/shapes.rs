//! Implicit interface descriptions.
//!
//! A level set is negative in the light phase, positive in the dark phase and
//! zero on the interface. Besides point values, every shape supplies a bound
//! on how much it can change inside a ball, which lets the quadrature skip
//! regions that are certainly free of the interface.

use std::f64::consts::PI;

/// The two phases. `Minus` is the light (reference) phase where the level set is negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Minus = 0,
    Plus = 1,
}

impl Phase {
    pub const BOTH: [Phase; 2] = [Phase::Minus, Phase::Plus];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Phase {
        match self {
            Phase::Minus => Phase::Plus,
            Phase::Plus => Phase::Minus,
        }
    }

    /// Phase of a level-set value. Exact zeros belong to `Plus`.
    pub fn of(value: f64) -> Phase {
        if value < 0.0 {
            Phase::Minus
        } else {
            Phase::Plus
        }
    }
}

pub trait LevelSet: Send + Sync {
    fn value(&self, x: [f64; 3]) -> f64;

    /// Upper bound of `|ψ(y) − ψ(x)|` over `|y − x| ≤ radius`.
    fn variation(&self, x: [f64; 3], radius: f64) -> f64;
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Constant level set: the whole domain lies in one phase.
#[derive(Debug, Clone, Copy)]
pub struct Uniform(pub f64);

impl LevelSet for Uniform {
    fn value(&self, _x: [f64; 3]) -> f64 {
        self.0
    }
    fn variation(&self, _x: [f64; 3], _radius: f64) -> f64 {
        0.0
    }
}

/// `ψ = n·x − offset`, with `n` normalised on construction.
#[derive(Debug, Clone, Copy)]
pub struct HalfSpace {
    normal: [f64; 3],
    offset: f64,
}

impl HalfSpace {
    pub fn new(normal: [f64; 3], offset: f64) -> Self {
        let m = (normal[0].powi(2) + normal[1].powi(2) + normal[2].powi(2)).sqrt();
        assert!(m > 0.0, "half-space normal must be nonzero");
        Self { normal: [normal[0] / m, normal[1] / m, normal[2] / m], offset: offset / m }
    }

    /// The half-space `x_axis < position` is the light phase.
    pub fn axis(axis: usize, position: f64) -> Self {
        let mut n = [0.0; 3];
        n[axis] = 1.0;
        Self::new(n, position)
    }
}

impl LevelSet for HalfSpace {
    fn value(&self, x: [f64; 3]) -> f64 {
        self.normal[0] * x[0] + self.normal[1] * x[1] + self.normal[2] * x[2] - self.offset
    }
    fn variation(&self, _x: [f64; 3], radius: f64) -> f64 {
        radius
    }
}

/// Disk or sphere. In lower dimensions the unused center coordinates are ignored
/// because grid points carry zeros there.
#[derive(Debug, Clone, Copy)]
pub struct Ball {
    pub center: [f64; 3],
    pub radius: f64,
    /// Phase occupying the inside.
    pub inside: Phase,
}

impl Ball {
    pub fn new(center: [f64; 3], radius: f64, inside: Phase) -> Self {
        Self { center, radius, inside }
    }
}

impl LevelSet for Ball {
    fn value(&self, x: [f64; 3]) -> f64 {
        let d = dist(x, self.center) - self.radius;
        match self.inside {
            Phase::Minus => d,
            Phase::Plus => -d,
        }
    }
    fn variation(&self, _x: [f64; 3], radius: f64) -> f64 {
        radius
    }
}

/// Planar star-shaped curve `r = base + amp·cos(lobes·θ)` about `center`.
#[derive(Debug, Clone, Copy)]
pub struct Star {
    pub center: [f64; 2],
    pub base: f64,
    pub amp: f64,
    pub lobes: f64,
    pub inside: Phase,
}

impl Star {
    pub fn radius_at(&self, theta: f64) -> f64 {
        self.base + self.amp * (self.lobes * theta).cos()
    }
}

impl LevelSet for Star {
    fn value(&self, x: [f64; 3]) -> f64 {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let r = dx.hypot(dy);
        let d = r - self.radius_at(dy.atan2(dx));
        match self.inside {
            Phase::Minus => d,
            Phase::Plus => -d,
        }
    }

    fn variation(&self, x: [f64; 3], radius: f64) -> f64 {
        // |Δr| ≤ radius; |ΔR| ≤ amp·lobes·|Δθ| and never more than 2·amp.
        let rc = (x[0] - self.center[0]).hypot(x[1] - self.center[1]);
        let dtheta = if rc > radius { (radius / rc).asin() } else { PI };
        let dr = (self.amp.abs() * self.lobes.abs() * dtheta).min(2.0 * self.amp.abs());
        (radius + dr) * (1.0 + 1e-12) + 1e-300
    }
}

/// Level set sampled on a regular lattice and interpolated (multi)linearly.
#[derive(Debug, Clone)]
pub struct Sampled {
    lo: [f64; 3],
    step: [f64; 3],
    dims: [usize; 3],
    data: Vec<f64>,
    lipschitz: f64,
}

impl Sampled {
    /// `dims` counts samples per axis (use 1 for unused axes); `data` is first-axis fastest.
    pub fn new(lo: [f64; 3], step: [f64; 3], dims: [usize; 3], data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dims[0] * dims[1] * dims[2], "sample count mismatch");
        let at = |i: usize, j: usize, k: usize| data[i + dims[0] * (j + dims[1] * k)];
        let mut slope = [0.0f64; 3];
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let v = at(i, j, k);
                    if i + 1 < dims[0] {
                        slope[0] = slope[0].max(((at(i + 1, j, k) - v) / step[0]).abs());
                    }
                    if j + 1 < dims[1] {
                        slope[1] = slope[1].max(((at(i, j + 1, k) - v) / step[1]).abs());
                    }
                    if k + 1 < dims[2] {
                        slope[2] = slope[2].max(((at(i, j, k + 1) - v) / step[2]).abs());
                    }
                }
            }
        }
        // Inside a lattice cell each partial derivative is a convex combination
        // of edge differences along that axis.
        let lipschitz = (slope[0].powi(2) + slope[1].powi(2) + slope[2].powi(2)).sqrt();
        Self { lo, step, dims, data, lipschitz }
    }

    fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[i + self.dims[0] * (j + self.dims[1] * k)]
    }
}

impl LevelSet for Sampled {
    fn value(&self, x: [f64; 3]) -> f64 {
        let mut idx = [0usize; 3];
        let mut w = [0.0; 3];
        for a in 0..3 {
            if self.dims[a] < 2 {
                continue;
            }
            let s = ((x[a] - self.lo[a]) / self.step[a]).clamp(0.0, (self.dims[a] - 1) as f64);
            let i = (s.floor() as usize).min(self.dims[a] - 2);
            idx[a] = i;
            w[a] = s - i as f64;
        }
        let mut v = 0.0;
        for corner in 0..8usize {
            let mut wt = 1.0;
            let mut ijk = idx;
            for a in 0..3 {
                let bit = (corner >> a) & 1;
                if self.dims[a] < 2 {
                    if bit == 1 {
                        wt = 0.0;
                    }
                    continue;
                }
                ijk[a] += bit;
                wt *= if bit == 1 { w[a] } else { 1.0 - w[a] };
            }
            if wt != 0.0 {
                v += wt * self.at(ijk[0], ijk[1], ijk[2]);
            }
        }
        v
    }

    fn variation(&self, _x: [f64; 3], radius: f64) -> f64 {
        self.lipschitz * radius * (1.0 + 1e-12)
    }
}

/// Negates another level set, swapping the phases.
pub struct Negated<L>(pub L);

impl<L: LevelSet> LevelSet for Negated<L> {
    fn value(&self, x: [f64; 3]) -> f64 {
        -self.0.value(x)
    }
    fn variation(&self, x: [f64; 3], radius: f64) -> f64 {
        self.0.variation(x, radius)
    }
}

//! The benchmark problems and their refinement ladders.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use super::{ExactFn, ExactGradient, Normalization, RadialTable};
use crate::assembly::{InterfaceModel, ProblemSpec};
use crate::conditions::{constant, BoundaryCondition, InterfaceLaw, OuterBC, RobinClosure, ScalarFn, Side, SinglePhaseClosure};
use crate::geometry::{compute_moments, Ball, CartesianGrid, HalfSpace, LevelSet, MomentOptions, MomentSet, Phase, Star};
use crate::reference::{
    jc1_exact, jc1_gradient, jc1_source, robin_disk_exact, BrownParams, CircleBessel, ErfcJump, ReferenceError, RobinSphereSeries,
};
use crate::solver::{DtRule, TimeControls};

use super::run::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseId {
    Jc1Star,
    Jc2Flower,
    RobinDisk,
    RobinSphere3d,
    NeumannConservation3d,
    Jump1d,
    Circle2Phase,
    BrownSphere3d,
}

impl CaseId {
    pub const ALL: [CaseId; 8] = [
        CaseId::Jc1Star,
        CaseId::Jc2Flower,
        CaseId::RobinDisk,
        CaseId::RobinSphere3d,
        CaseId::NeumannConservation3d,
        CaseId::Jump1d,
        CaseId::Circle2Phase,
        CaseId::BrownSphere3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Jc1Star => "jc1_star",
            CaseId::Jc2Flower => "jc2_flower",
            CaseId::RobinDisk => "robin_disk",
            CaseId::RobinSphere3d => "robin_sphere_3d",
            CaseId::NeumannConservation3d => "neumann_conservation_3d",
            CaseId::Jump1d => "jump_1d",
            CaseId::Circle2Phase => "circle_2phase",
            CaseId::BrownSphere3d => "brown_sphere_3d",
        }
    }

    pub fn from_name(name: &str) -> Option<CaseId> {
        CaseId::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            CaseId::Jc1Star => "steady Poisson inside a six-lobed star, Dirichlet data r^4 cos 3θ",
            CaseId::Jc2Flower => "steady Laplace outside a flower-shaped hole, boundedness monitor",
            CaseId::RobinDisk => "steady Poisson in a disk with a Robin boundary",
            CaseId::RobinSphere3d => "unsteady diffusion in a ball cooled through a Robin surface",
            CaseId::NeumannConservation3d => "unsteady diffusion in an insulated ball, global conservation",
            CaseId::Jump1d => "1D two-phase diffusion with a homothetic jump",
            CaseId::Circle2Phase => "2D two-phase diffusion out of a disk, interfacial flux",
            CaseId::BrownSphere3d => "3D two-phase diffusion out of a sphere",
        }
    }

    /// Cells per axis of every level the case knows about, coarsest first.
    pub fn ladder(self) -> Vec<usize> {
        let pow = |base: usize, n: usize| (0..n).map(|k| base << k).collect::<Vec<_>>();
        match self {
            CaseId::Jc1Star => pow(16, 6),
            CaseId::Jc2Flower => pow(4, 7),
            CaseId::RobinDisk => pow(16, 6),
            CaseId::RobinSphere3d => pow(4, 6),
            CaseId::NeumannConservation3d => pow(16, 2),
            CaseId::Jump1d => pow(4, 7),
            CaseId::Circle2Phase => pow(4, 6),
            CaseId::BrownSphere3d => pow(8, 4),
        }
    }

    /// Indices into [`CaseId::ladder`] run when no level count is requested.
    pub fn default_levels(self) -> std::ops::Range<usize> {
        match self {
            CaseId::Jc1Star => 1..5,
            CaseId::Jc2Flower => 0..6,
            CaseId::RobinDisk => 0..6,
            CaseId::RobinSphere3d => 2..4,
            CaseId::NeumannConservation3d => 1..2,
            CaseId::Jump1d => 0..7,
            CaseId::Circle2Phase => 2..6,
            CaseId::BrownSphere3d => 0..2,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            CaseId::Jump1d => 1,
            CaseId::Jc1Star | CaseId::Jc2Flower | CaseId::RobinDisk | CaseId::Circle2Phase => 2,
            _ => 3,
        }
    }

    pub fn is_two_phase(self) -> bool {
        matches!(self, CaseId::Jump1d | CaseId::Circle2Phase | CaseId::BrownSphere3d)
    }

    pub fn build_level(self, n: usize, params: &CaseParams) -> Result<LevelProblem, BenchError> {
        match self {
            CaseId::Jc1Star => jc1_star(n, params),
            CaseId::Jc2Flower => jc2_flower(n),
            CaseId::RobinDisk => robin_disk(n),
            CaseId::RobinSphere3d => robin_sphere(n, params),
            CaseId::NeumannConservation3d => neumann_sphere(n, params),
            CaseId::Jump1d => jump_1d(n, params),
            CaseId::Circle2Phase => circle(n, params),
            CaseId::BrownSphere3d => brown(n, params),
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Optional overrides of the physical and time parameters of a case.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaseParams {
    pub theta: Option<f64>,
    pub lambda: Option<f64>,
    pub diffusivity: Option<[f64; 2]>,
    pub t_final: Option<f64>,
    pub dt: Option<DtRule>,
}

/// One refinement level, ready to solve.
pub struct LevelProblem {
    pub cells_per_axis: usize,
    pub h: f64,
    pub moments: MomentSet,
    pub spec: ProblemSpec,
    pub exact: Option<ExactFn>,
    pub exact_gradient: Option<ExactGradient>,
    pub normalization: Normalization,
    /// Exact `Q⁺` at the final time.
    pub flux_reference: Option<f64>,
    /// Length used for the cells-per-diameter column.
    pub diameter: f64,
}

impl LevelProblem {
    pub fn cells_per_diameter(&self) -> usize {
        (self.diameter / self.h).round() as usize
    }
}

fn moments<L: LevelSet>(lo: &[f64], hi: &[f64], n: usize, ls: &L) -> Result<MomentSet, BenchError> {
    let cells = vec![n; lo.len()];
    let grid = CartesianGrid::uniform(lo, hi, &cells)?;
    Ok(compute_moments(&grid, ls, &MomentOptions::default())?)
}

fn polar(x: [f64; 3], c: [f64; 2]) -> (f64, f64) {
    let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
    (dx.hypot(dy), dy.atan2(dx))
}

fn radius(x: [f64; 3], c: [f64; 3], dim: usize) -> f64 {
    (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>().sqrt()
}

fn time(params: &CaseParams, theta: f64, dt: DtRule, t_final: f64) -> TimeControls {
    TimeControls { theta: params.theta.unwrap_or(theta), dt: params.dt.unwrap_or(dt), t_final: params.t_final.unwrap_or(t_final) }
}

fn steady_spec(source: ScalarFn, bc: OuterBC, closure: SinglePhaseClosure) -> ProblemSpec {
    ProblemSpec {
        capacity: [1.0, 1.0],
        diffusivity: [1.0, 1.0],
        source: [source, constant(0.0)],
        bc,
        interface: InterfaceModel::SinglePhase(closure),
        initial: [constant(0.0), constant(0.0)],
        time: None,
    }
}

fn jc1_star(n: usize, params: &CaseParams) -> Result<LevelProblem, BenchError> {
    let star = Star { center: [0.0, 0.0], base: 0.30, amp: 0.15, lobes: 6.0, inside: Phase::Minus };
    let m = moments(&[-0.5, -0.5], &[0.5, 0.5], n, &star)?;
    let exact_fn = |x: [f64; 3]| {
        let (r, th) = polar(x, [0.0, 0.0]);
        jc1_exact(r, th)
    };
    let value: ScalarFn = Arc::new(move |x, _| exact_fn(x));
    let source: ScalarFn = Arc::new(|x, _| {
        let (r, th) = polar(x, [0.0, 0.0]);
        -jc1_source(r, th)
    });
    let mut spec = steady_spec(source, OuterBC::uniform(BoundaryCondition::dirichlet(value.clone())), SinglePhaseClosure::Dirichlet(value));
    if let Some(k) = params.diffusivity {
        spec.diffusivity = k;
    }
    Ok(LevelProblem {
        cells_per_axis: n,
        h: 1.0 / n as f64,
        moments: m,
        spec,
        exact: Some(Arc::new(move |_, x, _| exact_fn(x))),
        exact_gradient: Some(Arc::new(|_, x, _| {
            let g = jc1_gradient(x[0], x[1]);
            [g[0], g[1], 0.0]
        })),
        normalization: Normalization::Absolute,
        flux_reference: None,
        diameter: 0.9,
    })
}

fn jc2_flower(n: usize) -> Result<LevelProblem, BenchError> {
    let flower = Star { center: [0.5, 0.5], base: 0.25, amp: 0.05, lobes: 6.0, inside: Phase::Plus };
    let m = moments(&[0.0, 0.0], &[1.0, 1.0], n, &flower)?;
    let spec = steady_spec(
        constant(0.0),
        OuterBC::uniform(BoundaryCondition::dirichlet(constant(0.0))),
        SinglePhaseClosure::Dirichlet(constant(1.0)),
    );
    Ok(LevelProblem {
        cells_per_axis: n,
        h: 1.0 / n as f64,
        moments: m,
        spec,
        exact: None,
        exact_gradient: None,
        normalization: Normalization::Absolute,
        flux_reference: None,
        diameter: 1.0,
    })
}

fn robin_disk(n: usize) -> Result<LevelProblem, BenchError> {
    let c = [2.0, 2.0, 0.0];
    let disk = Ball::new(c, 1.0, Phase::Minus);
    let m = moments(&[0.0, 0.0], &[4.0, 4.0], n, &disk)?;
    let closure = RobinClosure::new(1.0, constant(1.0))?;
    let spec = steady_spec(constant(1.0), OuterBC::uniform(BoundaryCondition::insulated()), SinglePhaseClosure::Robin(closure));
    Ok(LevelProblem {
        cells_per_axis: n,
        h: 4.0 / n as f64,
        moments: m,
        spec,
        exact: Some(Arc::new(move |_, x, _| robin_disk_exact(radius(x, c, 2)))),
        exact_gradient: Some(Arc::new(move |_, x, _| [-(x[0] - c[0]) / 2.0, -(x[1] - c[1]) / 2.0, 0.0])),
        normalization: Normalization::Absolute,
        flux_reference: None,
        diameter: 2.0,
    })
}

const BALL_CENTER: [f64; 3] = [2.0, 2.0, 2.0];

fn ball_spec(n: usize, closure: RobinClosure, initial: ScalarFn, controls: TimeControls, a: f64) -> Result<(MomentSet, ProblemSpec), BenchError> {
    let ball = Ball::new(BALL_CENTER, 1.0, Phase::Minus);
    let m = moments(&[0.0; 3], &[4.0; 3], n, &ball)?;
    let spec = ProblemSpec {
        capacity: [1.0, 1.0],
        diffusivity: [a, a],
        source: [constant(0.0), constant(0.0)],
        bc: OuterBC::uniform(BoundaryCondition::insulated()),
        interface: InterfaceModel::SinglePhase(SinglePhaseClosure::Robin(closure)),
        initial: [initial, constant(0.0)],
        time: Some(controls),
    };
    Ok((m, spec))
}

fn robin_sphere(n: usize, params: &CaseParams) -> Result<LevelProblem, BenchError> {
    let a = params.diffusivity.map_or(1.0, |k| k[0]);
    let k = 1.0;
    let controls = time(params, 0.5, DtRule::Quadratic(0.25), 0.1);
    let series = RobinSphereSeries::new(1.0, k, a, 1.0).prepared(controls.t_final)?;
    let (m, spec) = ball_spec(n, RobinClosure::new(a * k, constant(0.0))?, constant(1.0), controls, a)?;
    Ok(LevelProblem {
        cells_per_axis: n,
        h: 4.0 / n as f64,
        moments: m,
        spec,
        exact: Some(Arc::new(move |_, x, t| series.value(radius(x, BALL_CENTER, 3), t))),
        exact_gradient: None,
        normalization: Normalization::Absolute,
        flux_reference: None,
        diameter: 2.0,
    })
}

fn neumann_sphere(n: usize, params: &CaseParams) -> Result<LevelProblem, BenchError> {
    let a = params.diffusivity.map_or(1.0, |k| k[0]);
    let controls = time(params, 0.5, DtRule::Quadratic(0.25), 0.1);
    let pi = std::f64::consts::PI;
    let initial: ScalarFn = Arc::new(move |x, _| 1.0 + 0.5 * (pi * (x[0] - 2.0)).cos() * (pi * (x[1] - 2.0)).cos() * (pi * (x[2] - 2.0)).cos());
    let (m, spec) = ball_spec(n, RobinClosure::new(0.0, constant(0.0))?, initial, controls, a)?;
    Ok(LevelProblem {
        cells_per_axis: n,
        h: 4.0 / n as f64,
        moments: m,
        spec,
        exact: None,
        exact_gradient: None,
        normalization: Normalization::Absolute,
        flux_reference: None,
        diameter: 2.0,
    })
}

/// Interface position of the 1D jump case; just past a node at every level.
pub const JUMP_X_INT: f64 = 4.01;
/// Diffusivity of the 1D jump case.
pub const JUMP_K: f64 = 1.0;
/// Final time of the 1D jump case.
pub const JUMP_T_FINAL: f64 = 0.5;

fn two_phase_spec(k: [f64; 2], law: InterfaceLaw, bc: OuterBC, initial: [ScalarFn; 2], controls: TimeControls) -> ProblemSpec {
    ProblemSpec {
        capacity: [1.0, 1.0],
        diffusivity: k,
        source: [constant(0.0), constant(0.0)],
        bc,
        interface: InterfaceModel::TwoPhase(law),
        initial,
        time: Some(controls),
    }
}

fn jump_1d(n: usize, params: &CaseParams) -> Result<LevelProblem, BenchError> {
    let lambda = params.lambda.unwrap_or(100.0);
    let k = params.diffusivity.map_or(JUMP_K, |k| k[0]);
    let sol = ErfcJump { lambda, k, x_int: JUMP_X_INT };
    // Negative on the right: phase − for x > x_int.
    let ls = HalfSpace::new([-1.0, 0.0, 0.0], -JUMP_X_INT);
    let m = moments(&[0.0], &[8.0], n, &ls)?;
    let bc = OuterBC::default()
        .with(Side::West, BoundaryCondition::dirichlet(Arc::new(move |x, t| sol.left(x[0], t))))
        .with(Side::East, BoundaryCondition::dirichlet(Arc::new(move |x, t| sol.right(x[0], t))));
    let controls = time(params, 1.0, DtRule::Quadratic(0.25), JUMP_T_FINAL);
    let spec = two_phase_spec([k, k], InterfaceLaw::new(lambda, constant(0.0))?, bc, [constant(1.0), constant(0.0)], controls);
    Ok(LevelProblem {
        cells_per_axis: n,
        h: 8.0 / n as f64,
        moments: m,
        spec,
        exact: Some(Arc::new(move |p, x, t| sol.value(p, x[0], t))),
        exact_gradient: Some(Arc::new(move |_, x, t| [sol.slope(x[0], t), 0.0, 0.0])),
        normalization: Normalization::Absolute,
        flux_reference: None,
        diameter: 8.0,
    })
}

/// Phase-resolved radial tables of a reference solution, built on first use for each time.
struct RadialCache {
    f: Arc<dyn Fn(Phase, f64, f64) -> Result<f64, ReferenceError> + Send + Sync>,
    /// Radial range and node count per phase.
    ranges: [(f64, f64, usize); 2],
    tables: Mutex<HashMap<(u64, usize), Arc<RadialTable>>>,
}

impl RadialCache {
    fn eval(&self, p: Phase, r: f64, t: f64) -> f64 {
        let key = (t.to_bits(), p.index());
        let table = {
            let mut guard = self.tables.lock().expect("cache lock");
            if let Some(tab) = guard.get(&key) {
                tab.clone()
            } else {
                let (lo, hi, nodes) = self.ranges[p.index()];
                let f = self.f.clone();
                let tab = Arc::new(RadialTable::build(lo, hi, nodes, move |r| f(p, r, t)).unwrap_or_else(|e| {
                    // Unreachable with the fixed parameters; fail loudly rather than silently.
                    panic!("reference solution failed at t = {t}: {e}")
                }));
                guard.insert(key, tab.clone());
                tab
            }
        };
        table.eval(r)
    }
}

fn circle(n: usize, params: &CaseParams) -> Result<LevelProblem, BenchError> {
    let c = [4.0, 4.0, 0.0];
    let r0 = 2.0;
    let [k_minus, k_plus] = params.diffusivity.unwrap_or([1.0, 1.0]);
    let sol = CircleBessel { k_plus, k_minus, r0, phi0: 1.0 };
    let disk = Ball::new(c, r0, Phase::Plus);
    let m = moments(&[0.0, 0.0], &[8.0, 8.0], n, &disk)?;
    let controls = time(params, 1.0, DtRule::Quadratic(0.1), 0.25);
    let spec = two_phase_spec(
        [k_minus, k_plus],
        InterfaceLaw::continuity(),
        OuterBC::uniform(BoundaryCondition::insulated()),
        [constant(0.0), constant(1.0)],
        controls,
    );
    let r_max = 4.0 * 2f64.sqrt() + 0.1;
    let cache = Arc::new(RadialCache {
        f: Arc::new(move |p, r, t| sol.value(p, r, t)),
        ranges: [(r0, r_max, 800), (0.0, r0, 400)],
        tables: Mutex::new(HashMap::new()),
    });
    Ok(LevelProblem {
        cells_per_axis: n,
        h: 8.0 / n as f64,
        moments: m,
        spec,
        exact: Some(Arc::new(move |p, x, t| cache.eval(p, radius(x, c, 2), t))),
        exact_gradient: None,
        normalization: Normalization::Absolute,
        flux_reference: Some(sol.interface_flux(controls.t_final)?),
        diameter: 2.0 * r0,
    })
}

/// Diffusivities `[D⁻, D⁺]` of the composite-sphere case.
pub const BROWN_D: [f64; 2] = [1.0, 2.0];
/// Final time of the composite-sphere case.
pub const BROWN_T_FINAL: f64 = 0.5;

fn brown(n: usize, params: &CaseParams) -> Result<LevelProblem, BenchError> {
    let [d_minus, d_plus] = params.diffusivity.unwrap_or(BROWN_D);
    let sol = BrownParams::new(d_minus, d_plus, 1.0, 1.0).calibrate(1e-4)?;
    let ball = Ball::new(BALL_CENTER, 1.0, Phase::Minus);
    let m = moments(&[0.0; 3], &[4.0; 3], n, &ball)?;
    let r_max = 2.0 * 3f64.sqrt() + 0.05;
    let cache = Arc::new(RadialCache {
        // The initial condition at t = 0, where the integrals are singular.
        f: Arc::new(move |p, r, t| match p {
            Phase::Minus if t <= 0.0 => Ok(1.0),
            Phase::Plus if t <= 0.0 => Ok(0.0),
            Phase::Minus => sol.core_value(r, t),
            Phase::Plus => sol.shell_value(r, t),
        }),
        ranges: [(0.0, 1.0, 200), (1.0, r_max, 500)],
        tables: Mutex::new(HashMap::new()),
    });
    let bc_cache = cache.clone();
    let bc = OuterBC::uniform(BoundaryCondition::dirichlet(Arc::new(move |x, t| bc_cache.eval(Phase::Plus, radius(x, BALL_CENTER, 3), t))));
    let controls = time(params, 0.5, DtRule::Quadratic(0.25), BROWN_T_FINAL);
    let spec = two_phase_spec([d_minus, d_plus], InterfaceLaw::continuity(), bc, [constant(1.0), constant(0.0)], controls);
    Ok(LevelProblem {
        cells_per_axis: n,
        h: 4.0 / n as f64,
        moments: m,
        spec,
        exact: Some(Arc::new(move |p, x, t| cache.eval(p, radius(x, BALL_CENTER, 3), t))),
        exact_gradient: None,
        normalization: Normalization::Relative,
        flux_reference: None,
        diameter: 2.0,
    })
}

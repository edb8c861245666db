//! Steady solves and θ-scheme time stepping.

use std::fmt;
use std::io::{self, Write};
use std::time::Instant;

use crate::assembly::{
    interface_diagnostics, build_block_system, build_rhs, has_fixing_condition, initial_state, AssemblyError, BlockSystem, DiagnosticsReport,
    InterfaceModel, ProblemSpec,
};
use crate::geometry::{MomentSet, Phase};
use crate::linalg::{bicgstab, relative_residual, DirectSolver, LinalgError};
use crate::operators::FieldState;

/// Step size rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    Fixed(f64),
    /// `c · min(h)²`.
    Quadratic(f64),
    /// `c · min(h)`.
    Linear(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeControls {
    pub theta: f64,
    pub dt: DtRule,
    pub t_final: f64,
}

impl TimeControls {
    pub fn fixed(theta: f64, dt: f64, t_final: f64) -> Self {
        Self { theta, dt: DtRule::Fixed(dt), t_final }
    }

    /// `Δt = 0.25·min(h)²`.
    pub fn standard(theta: f64, t_final: f64) -> Self {
        Self { theta, dt: DtRule::Quadratic(0.25), t_final }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(format!("theta must lie in [0, 1], got {}", self.theta));
        }
        if !(self.t_final > 0.0) {
            return Err(format!("final time must be positive, got {}", self.t_final));
        }
        let c = match self.dt {
            DtRule::Fixed(v) | DtRule::Quadratic(v) | DtRule::Linear(v) => v,
        };
        if !(c > 0.0) {
            return Err(format!("time step parameter must be positive, got {c}"));
        }
        Ok(())
    }

    /// Uniform step that lands exactly on `t_final`, and the number of steps.
    pub fn resolve(&self, min_h: f64) -> (f64, usize) {
        let nominal = match self.dt {
            DtRule::Fixed(dt) => dt,
            DtRule::Quadratic(c) => c * min_h * min_h,
            DtRule::Linear(c) => c * min_h,
        };
        let n = ((self.t_final / nominal) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (self.t_final / n as f64, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearSolver {
    Direct,
    /// BiCGSTAB with ILU(0).
    Iterative { max_iter: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub linear: LinearSolver,
    pub tol: f64,
    /// Refactorize every step even when the matrix is unchanged.
    pub refactor_each_step: bool,
    pub keep_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { linear: LinearSolver::Direct, tol: 1e-10, refactor_each_step: false, keep_history: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    pub steps: usize,
    pub dt: Option<f64>,
    pub wall_time: f64,
    pub unknowns: usize,
    pub failed: bool,
}

#[derive(Debug, Clone)]
pub enum SolverError {
    Assembly(AssemblyError),
    Linear { source: LinalgError, diagnostics: Option<Box<DiagnosticsReport>> },
    Residual { residual: f64, tol: f64 },
    Step { index: usize, source: Box<SolverError> },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Assembly(e) => write!(f, "{e}"),
            SolverError::Linear { source, diagnostics } => {
                write!(f, "{source}")?;
                if let Some(d) = diagnostics {
                    write!(f, " (L^ww min eigenvalues {:?}", d.ww_min_eig)?;
                    if let Some(i) = &d.interface {
                        write!(f, ", pencil lambda_max {:.4e}, Schur margin {:.4e}", i.lambda_max, i.schur_margin)?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
            SolverError::Residual { residual, tol } => {
                write!(f, "linear residual {residual:.3e} above tolerance {tol:.1e}")
            }
            SolverError::Step { index, source } => write!(f, "step {index}: {source}"),
        }
    }
}

impl std::error::Error for SolverError {}

impl From<AssemblyError> for SolverError {
    fn from(e: AssemblyError) -> Self {
        SolverError::Assembly(e)
    }
}

fn lambda_of(spec: &ProblemSpec) -> f64 {
    match &spec.interface {
        InterfaceModel::TwoPhase(law) => law.lambda(),
        InterfaceModel::SinglePhase(_) => 1.0,
    }
}

fn linear_failure(system: &BlockSystem, spec: &ProblemSpec, e: LinalgError) -> SolverError {
    let diagnostics = (system.dofs.n <= 20_000).then(|| Box::new(interface_diagnostics(system, lambda_of(spec))));
    SolverError::Linear { source: e, diagnostics }
}

/// A system together with its factorization (or iterative settings).
pub struct Stepper {
    pub system: BlockSystem,
    direct: Option<DirectSolver>,
    opts: SolverOptions,
}

impl Stepper {
    pub fn new(m: &MomentSet, spec: &ProblemSpec, dt: Option<f64>, theta: f64, opts: SolverOptions) -> Result<Self, SolverError> {
        let system = build_block_system(m, spec, dt, theta)?;
        if dt.is_none() && !has_fixing_condition(m, spec) {
            let e = LinalgError::Singular("steady problem without Dirichlet or Robin data is defined up to a constant".into());
            return Err(linear_failure(&system, spec, e));
        }
        let direct = match opts.linear {
            LinearSolver::Direct => Some(DirectSolver::new(&system.matrix).map_err(|e| linear_failure(&system, spec, e))?),
            LinearSolver::Iterative { .. } => None,
        };
        Ok(Self { system, direct, opts })
    }

    fn solve(&self, spec: &ProblemSpec, rhs: &[f64], guess: &[f64]) -> Result<(Vec<f64>, f64, usize), SolverError> {
        let a = &self.system.matrix;
        let fresh;
        let (x, iters) = match self.opts.linear {
            LinearSolver::Direct => {
                let lu = if self.opts.refactor_each_step {
                    fresh = DirectSolver::new(a).map_err(|e| linear_failure(&self.system, spec, e))?;
                    &fresh
                } else {
                    self.direct.as_ref().expect("direct solver present")
                };
                (lu.solve(rhs).map_err(|e| linear_failure(&self.system, spec, e))?, 1)
            }
            LinearSolver::Iterative { max_iter } => {
                bicgstab(a, rhs, Some(guess), self.opts.tol * 1e-2, max_iter).map_err(|e| linear_failure(&self.system, spec, e))?
            }
        };
        let res = relative_residual(a, &x, rhs);
        if !(res <= self.opts.tol) {
            return Err(SolverError::Residual { residual: res, tol: self.opts.tol });
        }
        Ok((x, res, iters))
    }

    /// Advances `state` by one step; interfacial values are those at `t + θΔt`.
    pub fn step(&self, m: &MomentSet, spec: &ProblemSpec, state: &FieldState) -> Result<(FieldState, f64, usize), SolverError> {
        let rhs = build_rhs(&self.system, m, spec, state)?;
        let guess = self.system.dofs.gather(state);
        let (x, res, it) = self.solve(spec, &rhs, &guess)?;
        let t = state.time + self.system.dt.unwrap_or(0.0);
        Ok((self.system.dofs.scatter(&x, m.cells.len(), t), res, it))
    }
}

/// Solves the steady problem (storage dropped).
pub fn solve_steady(spec: &ProblemSpec, m: &MomentSet, opts: &SolverOptions) -> Result<(FieldState, SolveReport), SolverError> {
    let start = Instant::now();
    let st = Stepper::new(m, spec, None, 1.0, *opts)?;
    let zero = FieldState::zeros(m.cells.len(), 0.0);
    let (state, res, it) = st.step(m, spec, &zero)?;
    let report = SolveReport {
        residuals: vec![res],
        iterations: vec![it],
        steps: 1,
        dt: None,
        wall_time: start.elapsed().as_secs_f64(),
        unknowns: st.system.dofs.n,
        failed: false,
    };
    Ok((state, report))
}

/// One θ-step of size `dt` from `state`.
pub fn step_theta(
    state: &FieldState,
    spec: &ProblemSpec,
    m: &MomentSet,
    dt: f64,
    theta: f64,
    opts: &SolverOptions,
) -> Result<FieldState, SolverError> {
    let st = Stepper::new(m, spec, Some(dt), theta, *opts)?;
    Ok(st.step(m, spec, state)?.0)
}

pub struct Trajectory {
    pub final_state: FieldState,
    /// All states including the initial one, when requested.
    pub history: Vec<FieldState>,
    pub report: SolveReport,
}

/// Integrates from the initial condition of `spec` to `controls.t_final`.
///
/// `observer` is called with the step index (0 for the initial state), the
/// system and the state after each step.
pub fn run_unsteady(
    spec: &ProblemSpec,
    m: &MomentSet,
    controls: &TimeControls,
    opts: &SolverOptions,
    observer: &mut dyn FnMut(usize, &BlockSystem, &FieldState),
) -> Result<Trajectory, SolverError> {
    controls.validate().map_err(|s| SolverError::Assembly(AssemblyError::InvalidSpec(s)))?;
    let start = Instant::now();
    let (dt, n) = controls.resolve(m.grid.min_spacing());
    let st = Stepper::new(m, spec, Some(dt), controls.theta, *opts)?;
    let mut state = initial_state(m, spec, 0.0);
    let mut report = SolveReport { dt: Some(dt), unknowns: st.system.dofs.n, ..Default::default() };
    let mut history = Vec::new();
    observer(0, &st.system, &state);
    if opts.keep_history {
        history.push(state.clone());
    }
    for i in 1..=n {
        let (next, res, it) = st.step(m, spec, &state).map_err(|e| SolverError::Step { index: i, source: Box::new(e) })?;
        state = next;
        if i == n {
            state.time = controls.t_final;
        }
        report.residuals.push(res);
        report.iterations.push(it);
        report.steps = i;
        observer(i, &st.system, &state);
        if opts.keep_history {
            history.push(state.clone());
        }
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(Trajectory { final_state: state, history, report })
}

/// Compensated (Neumaier) sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// Total content `Σ C V Φ` over the solved phases.
pub fn total_content(m: &MomentSet, spec: &ProblemSpec, state: &FieldState) -> f64 {
    let vals = spec.phases().iter().flat_map(|&p| {
        let pi = p.index();
        let cap = spec.capacity[pi];
        (0..m.cells.len()).map(move |c| cap * m.cells[c].volume[pi] * state.omega[pi][c])
    });
    compensated_sum(vals.collect::<Vec<_>>())
}

/// Writes `cell,phase,value,kind` rows for the active bulk and interfacial values.
pub fn write_field_csv<W: Write>(m: &MomentSet, spec: &ProblemSpec, state: &FieldState, mut w: W) -> io::Result<()> {
    writeln!(w, "cell,phase,value,kind")?;
    for &p in spec.phases() {
        let name = match p {
            Phase::Minus => "minus",
            Phase::Plus => "plus",
        };
        for c in 0..m.cells.len() {
            if m.is_active(c, p) {
                writeln!(w, "{c},{name},{:.17e},omega", state.omega[p.index()][c])?;
            }
        }
        for c in m.mixed_cells() {
            writeln!(w, "{c},{name},{:.17e},gamma", state.gamma[p.index()][c])?;
        }
    }
    Ok(())
}

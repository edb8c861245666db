//! Convergence studies: per-level solves, error tables and CSV artifacts.

use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::cases::{CaseId, CaseParams, LevelProblem};
use super::{
    boundedness_monitor, convergence_orders, h1_errors, interfacial_flux, l2_errors, phase_interface_outflow, Bounds, ConservationLog, FluxLog,
    Orders, Subset,
};
use crate::assembly::{InterfaceModel, ProblemSpec};
use crate::conditions::{BoundaryCondition, ConditionError, InterfaceLaw, Side};
use crate::geometry::{CellKind, GeometryError, GridError, Phase};
use crate::operators::FieldState;
use crate::reference::ReferenceError;
use crate::solver::{run_unsteady, solve_steady, total_content, write_field_csv, LinearSolver, SolverError, SolverOptions};

#[derive(Debug)]
pub enum BenchError {
    UnknownCase(String),
    Config(String),
    Grid(GridError),
    Geometry(GeometryError),
    Condition(ConditionError),
    Reference(ReferenceError),
    Solver { level: usize, source: SolverError },
    Io(io::Error),
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::UnknownCase(s) => {
                let names: Vec<&str> = CaseId::ALL.iter().map(|c| c.name()).collect();
                write!(f, "unknown case '{s}' (expected one of {})", names.join(", "))
            }
            BenchError::Config(s) => write!(f, "{s}"),
            BenchError::Grid(e) => write!(f, "{e}"),
            BenchError::Geometry(e) => write!(f, "{e}"),
            BenchError::Condition(e) => write!(f, "{e}"),
            BenchError::Reference(e) => write!(f, "reference solution: {e}"),
            BenchError::Solver { level, source } => write!(f, "level with {level} cells per axis: {source}"),
            BenchError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BenchError {}

macro_rules! from_error {
    ($($t:ty => $v:ident),*) => {
        $(impl From<$t> for BenchError {
            fn from(e: $t) -> Self {
                BenchError::$v(e)
            }
        })*
    };
}

from_error!(GridError => Grid, GeometryError => Geometry, ConditionError => Condition, ReferenceError => Reference, io::Error => Io);

/// Replacements applied to every level's problem after the case builds it.
#[derive(Debug, Clone, Default)]
pub struct SpecOverrides {
    pub bc: Vec<(Side, BoundaryCondition)>,
    /// Only honoured by two-phase cases.
    pub interface: Option<InterfaceLaw>,
}

impl SpecOverrides {
    pub fn is_empty(&self) -> bool {
        self.bc.is_empty() && self.interface.is_none()
    }

    pub fn apply(&self, spec: &mut ProblemSpec) -> Result<(), BenchError> {
        for (side, bc) in &self.bc {
            spec.bc = std::mem::take(&mut spec.bc).with(*side, bc.clone());
        }
        if let Some(law) = &self.interface {
            match &mut spec.interface {
                InterfaceModel::TwoPhase(l) => *l = law.clone(),
                InterfaceModel::SinglePhase(_) => return Err(BenchError::Config("interface law given for a single-phase case".into())),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchConfig {
    /// Run the first `n` levels of the case ladder instead of the default selection.
    pub levels: Option<usize>,
    /// Run the full ladder.
    pub full_scale: bool,
    pub params: CaseParams,
    /// Directory receiving the CSV artifacts.
    pub out_dir: Option<PathBuf>,
    pub write_fields: bool,
    /// Solve levels concurrently.
    pub parallel: bool,
    /// Forces a linear solver; otherwise chosen from the problem size.
    pub solver: Option<LinearSolver>,
    pub overrides: SpecOverrides,
}

impl BenchConfig {
    pub fn selected_levels(&self, case: CaseId) -> Result<Vec<usize>, BenchError> {
        let ladder = case.ladder();
        let picked: Vec<usize> = match (self.levels, self.full_scale) {
            (Some(n), _) => {
                if n == 0 || n > ladder.len() {
                    return Err(BenchError::Config(format!("{case} has {} levels, requested {n}", ladder.len())));
                }
                ladder[..n].to_vec()
            }
            (None, true) => ladder,
            (None, false) => ladder[case.default_levels()].to_vec(),
        };
        Ok(picked)
    }
}

/// Outcome of one refinement level.
#[derive(Debug, Clone)]
pub struct LevelResult {
    pub cells_per_axis: usize,
    pub h: f64,
    pub cells_per_diameter: usize,
    /// Active (phase, cell) pairs.
    pub active: usize,
    pub cut: usize,
    pub unknowns: usize,
    /// L² errors indexed as [`Subset::ALL`].
    pub l2: [Option<f64>; 3],
    pub h1: Option<[Option<f64>; 3]>,
    pub bounds: Bounds,
    pub conservation: ConservationLog,
    pub flux: Option<FluxLog>,
    pub flux_reference: Option<f64>,
    /// Largest `|Γ⁺ − λΓ⁻ − f|` over mixed cells, relative to the interfacial magnitude.
    pub jump_residual: Option<f64>,
    pub steps: usize,
    pub wall_time: f64,
    pub final_state: FieldState,
}

impl LevelResult {
    pub fn final_flux(&self) -> Option<f64> {
        self.flux.as_ref().and_then(|f| f.plus.last().copied())
    }

    pub fn flux_relative_error(&self) -> Option<f64> {
        match (self.final_flux(), self.flux_reference) {
            (Some(q), Some(r)) if r != 0.0 => Some(((q - r) / r).abs()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub case: CaseId,
    pub levels: Vec<LevelResult>,
    /// Orders of the L² errors indexed as [`Subset::ALL`].
    pub orders: [Orders; 3],
    pub h1_orders: Option<[Orders; 3]>,
    /// First failing level and its error; coarser results are kept.
    pub failure: Option<String>,
}

impl ErrorReport {
    pub fn hs(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.h).collect()
    }

    pub fn finest(&self) -> Option<&LevelResult> {
        self.levels.last()
    }

    /// Level whose spacing matches `h` to 1e-9 relative.
    pub fn at_h(&self, h: f64) -> Option<&LevelResult> {
        self.levels.iter().find(|l| (l.h - h).abs() <= 1e-9 * h)
    }

    /// Text table with columns `h, N, e_all, e_reg, e_cut, p_all, p_reg, p_cut` and a fit row.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let has_errors = self.levels.iter().any(|l| l.l2[0].is_some());
        let _ = writeln!(s, "{} ({})", self.case, self.case.description());
        if has_errors {
            write_table(&mut s, "L2", &self.levels.iter().map(|l| l.l2).collect::<Vec<_>>(), &self.levels, &self.orders);
        }
        if let Some(h1o) = &self.h1_orders {
            let rows: Vec<[Option<f64>; 3]> = self.levels.iter().map(|l| l.h1.unwrap_or([None; 3])).collect();
            write_table(&mut s, "H1", &rows, &self.levels, h1o);
        }
        if self.case == CaseId::Jc2Flower || !has_errors {
            let _ = writeln!(s, "{:>6} {:>8} {:>8} {:>12} {:>12} {:>8}", "N", "cut", "active", "max", "min", "k/N");
            for l in &self.levels {
                let b = &l.bounds;
                let _ = writeln!(s, "{:>6} {:>8} {:>8} {:>12.6} {:>12.6} {:>8.4}", l.cells_per_axis, l.cut, l.active, b.max, b.min, b.outside_fraction());
            }
        }
        if self.levels.iter().any(|l| l.flux_reference.is_some()) {
            let _ = writeln!(s, "{:>10} {:>16} {:>16} {:>12}", "h", "Q+", "Q+ exact", "rel. error");
            for l in &self.levels {
                let _ = writeln!(
                    s,
                    "{:>10.6} {:>16.10} {:>16.10} {:>12.3e}",
                    l.h,
                    l.final_flux().unwrap_or(f64::NAN),
                    l.flux_reference.unwrap_or(f64::NAN),
                    l.flux_relative_error().unwrap_or(f64::NAN)
                );
            }
        }
        if self.levels.iter().any(|l| l.conservation.times.len() > 1 && l.flux.is_none() && l.l2[0].is_none()) {
            for l in &self.levels {
                let _ = writeln!(s, "N = {:>4}: max |drift| {:.3e}", l.cells_per_axis, l.conservation.max_drift());
            }
        }
        if let Some(f) = &self.failure {
            let _ = writeln!(s, "aborted: {f}");
        }
        s
    }

    /// Writes `errors.csv`, `h1.csv`, `bounds.csv`, `flux_final.csv`, `conservation.csv` and `flux.csv`.
    pub fn write_csv(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let hs = self.hs();
        let write_errors = |name: &str, rows: &[[Option<f64>; 3]], orders: &[Orders; 3]| -> io::Result<()> {
            let mut w = BufWriter::new(File::create(dir.join(name))?);
            writeln!(w, "h,N,e_all,e_reg,e_cut,p_all,p_reg,p_cut")?;
            for (i, l) in self.levels.iter().enumerate() {
                write!(w, "{},{}", num(Some(hs[i])), l.cells_per_axis)?;
                for e in rows[i] {
                    write!(w, ",{}", num(e))?;
                }
                for o in orders {
                    write!(w, ",{}", if i == 0 { String::new() } else { num(o.pairwise[i - 1]) })?;
                }
                writeln!(w)?;
            }
            write!(w, "fit,")?;
            for _ in 0..3 {
                write!(w, ",")?;
            }
            for o in orders {
                write!(w, ",{}", num(o.fit))?;
            }
            writeln!(w)
        };
        write_errors("errors.csv", &self.levels.iter().map(|l| l.l2).collect::<Vec<_>>(), &self.orders)?;
        if let Some(h1o) = &self.h1_orders {
            write_errors("h1.csv", &self.levels.iter().map(|l| l.h1.unwrap_or([None; 3])).collect::<Vec<_>>(), h1o)?;
        }
        let mut w = BufWriter::new(File::create(dir.join("bounds.csv"))?);
        writeln!(w, "N,cut,active,max,min,outside_fraction")?;
        for l in &self.levels {
            let b = &l.bounds;
            writeln!(w, "{},{},{},{},{},{}", l.cells_per_axis, l.cut, l.active, num(Some(b.max)), num(Some(b.min)), num(Some(b.outside_fraction())))?;
        }
        if self.levels.iter().any(|l| l.flux.is_some()) {
            let mut w = BufWriter::new(File::create(dir.join("flux_final.csv"))?);
            writeln!(w, "h,Qplus,Qplus_exact,rel_error")?;
            for l in &self.levels {
                writeln!(w, "{},{},{},{}", num(Some(l.h)), num(l.final_flux()), num(l.flux_reference), num(l.flux_relative_error()))?;
            }
        }
        if let Some(l) = self.finest() {
            if l.conservation.times.len() > 1 {
                let mut w = BufWriter::new(File::create(dir.join("conservation.csv"))?);
                writeln!(w, "t,I,drift")?;
                let c = &l.conservation;
                for i in 0..c.times.len() {
                    writeln!(w, "{},{},{}", num(Some(c.times[i])), num(Some(c.content[i])), num(Some(c.drift[i])))?;
                }
            }
            if let Some(f) = &l.flux {
                let mut w = BufWriter::new(File::create(dir.join("flux.csv"))?);
                writeln!(w, "t,Qplus")?;
                for i in 0..f.times.len() {
                    writeln!(w, "{},{}", num(Some(f.times[i])), num(Some(f.plus[i])))?;
                }
            }
        }
        Ok(())
    }
}

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.12e}"),
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

fn write_table(s: &mut String, label: &str, rows: &[[Option<f64>; 3]], levels: &[LevelResult], orders: &[Orders; 3]) {
    let e = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
    let p = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
    let _ = writeln!(
        s,
        "{:>12} {:>6} {:>10} {:>10} {:>10} {:>6} {:>6} {:>6}   [{label}]",
        "h", "N", "e_all", "e_reg", "e_cut", "p_all", "p_reg", "p_cut"
    );
    for (i, l) in levels.iter().enumerate() {
        let ord = |k: usize| if i == 0 { "-".to_string() } else { p(orders[k].pairwise[i - 1]) };
        let _ = writeln!(
            s,
            "{:>12.8} {:>6} {:>10} {:>10} {:>10} {:>6} {:>6} {:>6}",
            l.h,
            l.cells_per_diameter,
            e(rows[i][0]),
            e(rows[i][1]),
            e(rows[i][2]),
            ord(0),
            ord(1),
            ord(2)
        );
    }
    let _ = writeln!(s, "{:>12} {:>6} {:>10} {:>10} {:>10} {:>6} {:>6} {:>6}", "fit", "-", "-", "-", "-", p(orders[0].fit), p(orders[1].fit), p(orders[2].fit));
}

fn pick_solver(problem: &LevelProblem, forced: Option<LinearSolver>) -> LinearSolver {
    if let Some(s) = forced {
        return s;
    }
    let m = &problem.moments;
    let active: usize = problem.spec.phases().iter().map(|&p| (0..m.cells.len()).filter(|&c| m.is_active(c, p)).count()).sum();
    if m.dim() == 3 && active > 60_000 {
        LinearSolver::Iterative { max_iter: 5000 }
    } else {
        LinearSolver::Direct
    }
}

/// Solves one level and evaluates every diagnostic that applies.
pub fn solve_level(problem: &LevelProblem, solver: Option<LinearSolver>) -> Result<LevelResult, BenchError> {
    let start = Instant::now();
    let m = &problem.moments;
    let spec = &problem.spec;
    let phases = spec.phases();
    let opts = SolverOptions { linear: pick_solver(problem, solver), ..SolverOptions::default() };
    let level = problem.cells_per_axis;
    let two_phase = matches!(spec.interface, InterfaceModel::TwoPhase(_));
    let mut conservation = ConservationLog::default();
    let mut flux = two_phase.then(FluxLog::default);
    let mut flux_error = None;
    let (state, steps, unknowns) = match &spec.time {
        None => {
            let (state, rep) = solve_steady(spec, m, &opts).map_err(|source| BenchError::Solver { level, source })?;
            conservation.push(0.0, total_content(m, spec, &state));
            (state, 0, rep.unknowns)
        }
        Some(controls) => {
            let mut observer = |_: usize, _: &crate::assembly::BlockSystem, s: &FieldState| {
                conservation.push(s.time, total_content(m, spec, s));
                if let Some(log) = flux.as_mut() {
                    let qp = interfacial_flux(s, m, spec);
                    let qm = phase_interface_outflow(s, m, spec, Phase::Minus);
                    match (qp, qm) {
                        (Ok(a), Ok(b)) => {
                            log.times.push(s.time);
                            log.plus.push(a);
                            log.minus.push(b);
                        }
                        (Err(e), _) => flux_error = Some(e),
                        (_, Err(e)) => flux_error = Some(e.into()),
                    }
                }
            };
            let traj = run_unsteady(spec, m, controls, &opts, &mut observer).map_err(|source| BenchError::Solver { level, source })?;
            (traj.final_state, traj.report.steps, traj.report.unknowns)
        }
    };
    if let Some(e) = flux_error {
        return Err(e);
    }
    let l2 = match &problem.exact {
        Some(ex) => Subset::ALL.map(|s| l2_errors(&state, ex.as_ref(), m, phases, s, problem.normalization)),
        None => [None; 3],
    };
    let h1 = problem.exact_gradient.as_ref().map(|g| Subset::ALL.map(|s| h1_errors(&state, g.as_ref(), m, phases, s, problem.normalization)));
    let jump_residual = match &spec.interface {
        InterfaceModel::TwoPhase(law) => {
            let lam = law.lambda();
            let mut worst = 0.0f64;
            for c in m.mixed_cells() {
                let (gm, gp) = (state.gamma[0][c], state.gamma[1][c]);
                let f = (law.source)(m.cells[c].gamma_centroid, state.time);
                let scale = gp.abs().max(lam * gm.abs()).max(1.0);
                worst = worst.max((gp - lam * gm - f).abs() / scale);
            }
            Some(worst)
        }
        InterfaceModel::SinglePhase(_) => None,
    };
    let active = phases.iter().map(|&p| (0..m.cells.len()).filter(|&c| m.is_active(c, p)).count()).sum();
    let cut = m.cells.iter().filter(|c| c.kind == CellKind::Mixed).count();
    Ok(LevelResult {
        cells_per_axis: level,
        h: problem.h,
        cells_per_diameter: problem.cells_per_diameter(),
        active,
        cut,
        unknowns,
        l2,
        h1,
        bounds: boundedness_monitor(&state, m, phases),
        conservation,
        flux,
        flux_reference: problem.flux_reference,
        jump_residual,
        steps,
        wall_time: start.elapsed().as_secs_f64(),
        final_state: state,
    })
}

fn build_and_solve(case: CaseId, n: usize, cfg: &BenchConfig) -> Result<(LevelResult, Option<LevelProblem>), BenchError> {
    let mut problem = case.build_level(n, &cfg.params)?;
    cfg.overrides.apply(&mut problem.spec)?;
    let result = solve_level(&problem, cfg.solver)?;
    Ok((result, cfg.write_fields.then_some(problem)))
}

/// Runs the convergence study of `case`. A failing level stops the study;
/// the coarser levels are kept and the error is recorded in the report.
pub fn run_benchmark(case: CaseId, cfg: &BenchConfig) -> Result<ErrorReport, BenchError> {
    let sizes = cfg.selected_levels(case)?;
    let outcomes: Vec<Result<(LevelResult, Option<LevelProblem>), BenchError>> = if cfg.parallel {
        sizes.par_iter().map(|&n| build_and_solve(case, n, cfg)).collect()
    } else {
        let mut out = Vec::new();
        for &n in &sizes {
            let r = build_and_solve(case, n, cfg);
            let failed = r.is_err();
            out.push(r);
            if failed {
                break;
            }
        }
        out
    };
    let mut levels = Vec::new();
    let mut failure = None;
    for r in outcomes {
        match r {
            Ok((res, problem)) => {
                if let (Some(dir), Some(p)) = (&cfg.out_dir, problem) {
                    fs::create_dir_all(dir)?;
                    let w = BufWriter::new(File::create(dir.join(format!("field_{}.csv", res.cells_per_axis)))?);
                    write_field_csv(&p.moments, &p.spec, &res.final_state, w)?;
                }
                levels.push(res);
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    if levels.is_empty() {
        return Err(BenchError::Config(failure.unwrap_or_else(|| "no levels selected".into())));
    }
    let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let orders = [0, 1, 2].map(|k| convergence_orders(&levels.iter().map(|l| l.l2[k]).collect::<Vec<_>>(), &hs));
    let h1_orders = levels[0]
        .h1
        .is_some()
        .then(|| [0, 1, 2].map(|k| convergence_orders(&levels.iter().map(|l| l.h1.and_then(|h| h[k])).collect::<Vec<_>>(), &hs)));
    let report = ErrorReport { case, levels, orders, h1_orders, failure };
    if let Some(dir) = &cfg.out_dir {
        report.write_csv(dir)?;
    }
    Ok(report)
}

//! Error norms, convergence orders, monitors and the benchmark registry.

pub mod cases;
pub mod run;

use std::sync::Arc;

use crate::assembly::{InterfaceModel, ProblemSpec};
use crate::conditions::{interface_outflow, ConditionError, Var};
use crate::geometry::{MomentSet, Phase};
use crate::operators::{gradient, FieldState};
use crate::solver::compensated_sum;

pub use cases::{CaseId, LevelProblem};
pub use run::{run_benchmark, solve_level, BenchConfig, BenchError, ErrorReport, LevelResult, SpecOverrides};

/// Exact solution by phase, position and time.
pub type ExactFn = Arc<dyn Fn(Phase, [f64; 3], f64) -> f64 + Send + Sync>;
/// Exact gradient by phase, position and time.
pub type ExactGradient = Arc<dyn Fn(Phase, [f64; 3], f64) -> [f64; 3] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subset {
    All,
    Regular,
    Cut,
}

impl Subset {
    pub const ALL: [Subset; 3] = [Subset::All, Subset::Regular, Subset::Cut];

    fn contains(self, m: &MomentSet, c: usize) -> bool {
        match self {
            Subset::All => true,
            Subset::Regular => !m.is_mixed(c),
            Subset::Cut => m.is_mixed(c),
        }
    }
}

/// Normalization of the L² error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `sqrt(Σ V e²)`; the subsets then satisfy `all² = reg² + cut²`.
    Absolute,
    /// Divided by the measure of the subset.
    Volume,
    /// Divided by `Σ V φ²` of the exact solution over all active cells, so
    /// the subsets stay additive.
    Relative,
}

fn sample_pairs<'a>(m: &'a MomentSet, phases: &'a [Phase], subset: Subset) -> impl Iterator<Item = (Phase, usize)> + 'a {
    phases
        .iter()
        .flat_map(move |&p| (0..m.cells.len()).filter(move |&c| m.is_active(c, p) && subset.contains(m, c)).map(move |c| (p, c)))
}

/// L² error of the bulk values against `exact` sampled at the phase
/// centroids. `None` for an empty subset.
pub fn l2_errors(
    state: &FieldState,
    exact: &dyn Fn(Phase, [f64; 3], f64) -> f64,
    m: &MomentSet,
    phases: &[Phase],
    subset: Subset,
    norm: Normalization,
) -> Option<f64> {
    let mut num = Vec::new();
    let mut den = Vec::new();
    for (p, c) in sample_pairs(m, phases, Subset::All) {
        let pi = p.index();
        let v = m.cells[c].volume[pi];
        let ex = exact(p, m.cells[c].centroid[pi], state.time);
        let inside = subset.contains(m, c);
        if inside {
            let e = state.omega[pi][c] - ex;
            num.push(v * e * e);
        }
        match norm {
            Normalization::Volume if inside => den.push(v),
            Normalization::Relative => den.push(v * ex * ex),
            _ => {}
        }
    }
    if num.is_empty() {
        return None;
    }
    let d = if norm == Normalization::Absolute { 1.0 } else { sorted_sum(&mut den) };
    (d > 0.0).then(|| (sorted_sum(&mut num) / d).sqrt())
}

/// Order-independent sum: ascending magnitude, compensated.
fn sorted_sum(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    compensated_sum(v.iter().copied())
}

/// H¹ semi-norm error of the staggered gradient. Each face is weighted by its
/// staggered volume and the exact gradient is sampled midway between the two
/// phase centroids. A face counts as cut when either neighbor is mixed.
pub fn h1_errors(
    state: &FieldState,
    exact_gradient: &dyn Fn(Phase, [f64; 3], f64) -> [f64; 3],
    m: &MomentSet,
    phases: &[Phase],
    subset: Subset,
    norm: Normalization,
) -> Option<f64> {
    let mut num = Vec::new();
    let mut den = Vec::new();
    for &p in phases {
        let pi = p.index();
        let g = gradient(m, p, &state.omega[pi], &state.gamma[pi]);
        for axis in 0..m.dim() {
            for f in 0..m.grid.n_faces(axis) {
                let Some(gv) = g.get(axis, f) else { continue };
                let (Some(c0), Some(c1)) = m.grid.face_cells(axis, f) else { continue };
                let cut = m.is_mixed(c0) || m.is_mixed(c1);
                let inside = match subset {
                    Subset::All => true,
                    Subset::Regular => !cut,
                    Subset::Cut => cut,
                };
                let a = m.cells[c0].centroid[pi];
                let b = m.cells[c1].centroid[pi];
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
                let exact = exact_gradient(p, mid, state.time)[axis];
                let w = m.faces[axis][f].staggered[pi];
                if inside {
                    let e = gv - exact;
                    num.push(w * e * e);
                }
                match norm {
                    Normalization::Volume if inside => den.push(w),
                    Normalization::Relative => den.push(w * exact * exact),
                    _ => {}
                }
            }
        }
    }
    if num.is_empty() {
        return None;
    }
    let d = match norm {
        Normalization::Absolute => 1.0,
        // Σ W over one axis family approximates the volume, so the total counts each cell dim times.
        Normalization::Volume => sorted_sum(&mut den) / m.dim() as f64,
        Normalization::Relative => sorted_sum(&mut den),
    };
    (d > 0.0).then(|| (sorted_sum(&mut num) / d).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orders {
    /// Order between level `i` and `i + 1`; `None` when either error vanishes or is missing.
    pub pairwise: Vec<Option<f64>>,
    /// Least-squares slope of `log e` against `log h` over the usable levels.
    pub fit: Option<f64>,
}

pub fn convergence_orders(errors: &[Option<f64>], hs: &[f64]) -> Orders {
    assert_eq!(errors.len(), hs.len(), "one error per level");
    let usable = |e: Option<f64>| e.filter(|v| *v > 0.0 && v.is_finite());
    let pairwise = (1..errors.len())
        .map(|i| match (usable(errors[i - 1]), usable(errors[i])) {
            (Some(a), Some(b)) => Some((a / b).ln() / (hs[i - 1] / hs[i]).ln()),
            _ => None,
        })
        .collect();
    let pts: Vec<(f64, f64)> = errors.iter().zip(hs).filter_map(|(e, &h)| usable(*e).map(|e| (h.ln(), e.ln()))).collect();
    let fit = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Orders { pairwise, fit: fit.filter(|v| v.is_finite()) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
    /// Number of active bulk values outside `[0, 1]`.
    pub outside: usize,
    pub count: usize,
}

impl Bounds {
    pub fn outside_fraction(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.outside as f64 / self.count as f64
        }
    }
}

/// Extrema of the active bulk values and how many leave `[0, 1]`.
pub fn boundedness_monitor(state: &FieldState, m: &MomentSet, phases: &[Phase]) -> Bounds {
    let mut b = Bounds { min: f64::INFINITY, max: f64::NEG_INFINITY, outside: 0, count: 0 };
    for (p, c) in sample_pairs(m, phases, Subset::All) {
        let v = state.omega[p.index()][c];
        b.min = b.min.min(v);
        b.max = b.max.max(v);
        b.count += 1;
        if !(0.0..=1.0).contains(&v) {
            b.outside += 1;
        }
    }
    b
}

/// Total outflow of phase `p` through the interface, summed over mixed cells.
pub fn phase_interface_outflow(state: &FieldState, m: &MomentSet, spec: &ProblemSpec, p: Phase) -> Result<f64, ConditionError> {
    let k = spec.diffusivity[p.index()];
    let mut parts = Vec::new();
    for c in m.mixed_cells() {
        let row = interface_outflow(m, p, k, &spec.bc, c, state.time)?;
        parts.push(row.residual(|v| match v {
            Var::Omega(q, i) => state.omega[q.index()][i],
            Var::Gamma(q, i) => state.gamma[q.index()][i],
        }));
    }
    Ok(sorted_sum(&mut parts))
}

/// Interfacial transfer rate `Q⁺`: the discrete flux leaving phase `+` through the interface.
pub fn interfacial_flux(state: &FieldState, m: &MomentSet, spec: &ProblemSpec) -> Result<f64, BenchError> {
    if !matches!(spec.interface, InterfaceModel::TwoPhase(_)) {
        return Err(BenchError::Config("interfacial flux needs a two-phase problem".into()));
    }
    Ok(phase_interface_outflow(state, m, spec, Phase::Plus)?)
}

/// `I(t) = Σ V φ` and its relative drift `(I − I₀)/I₀`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConservationLog {
    pub times: Vec<f64>,
    pub content: Vec<f64>,
    pub drift: Vec<f64>,
}

impl ConservationLog {
    pub fn push(&mut self, t: f64, content: f64) {
        let i0 = self.content.first().copied().unwrap_or(content);
        let d = if i0 != 0.0 { (content - i0) / i0 } else { content - i0 };
        self.times.push(t);
        self.content.push(content);
        self.drift.push(d);
    }

    pub fn max_drift(&self) -> f64 {
        self.drift.iter().fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// History of the interfacial transfer rate. `minus` is the outflow of phase `−`,
/// so `plus + minus` vanishes when flux balance holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FluxLog {
    pub times: Vec<f64>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl FluxLog {
    pub fn max_imbalance(&self) -> f64 {
        self.plus.iter().zip(&self.minus).fold(0.0, |m, (a, b)| m.max((a + b).abs()))
    }
}

/// Piecewise-quartic table of a function of `r ∈ [lo, hi]` on uniform nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl RadialTable {
    pub fn build<E>(lo: f64, hi: f64, nodes: usize, f: impl Fn(f64) -> Result<f64, E> + Sync) -> Result<Self, E>
    where
        E: Send,
    {
        use rayon::prelude::*;
        let nodes = nodes.max(5);
        let step = (hi - lo) / (nodes - 1) as f64;
        let values = (0..nodes).into_par_iter().map(|i| f(lo + step * i as f64)).collect::<Result<Vec<_>, E>>()?;
        Ok(Self { lo, step, values })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.values.len();
        let s = ((r - self.lo) / self.step).clamp(0.0, (n - 1) as f64);
        let first = (s.floor() as isize - 2).clamp(0, n as isize - 5) as usize;
        let mut out = 0.0;
        for j in 0..5 {
            let mut w = 1.0;
            for k in 0..5 {
                if k != j {
                    w *= (s - (first + k) as f64) / (j as f64 - k as f64);
                }
            }
            out += w * self.values[first + j];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_orders() {
        let o = convergence_orders(&[Some(1e-2), Some(2.5e-3)], &[0.1, 0.05]);
        assert!((o.pairwise[0].unwrap() - 2.0).abs() < 1e-12);
        assert!((o.fit.unwrap() - 2.0).abs() < 1e-12);
        let same = convergence_orders(&[Some(3e-3), Some(3e-3)], &[0.1, 0.05]);
        assert_eq!(same.pairwise[0], Some(0.0));
        let zero = convergence_orders(&[Some(0.0), Some(1e-3)], &[0.1, 0.05]);
        assert_eq!(zero.pairwise[0], None);
    }

    #[test]
    fn table_reproduces_quartics() {
        let t = RadialTable::build::<()>(0.0, 2.0, 11, |r| Ok(r.powi(4) - 3.0 * r)).unwrap();
        for r in [0.0, 0.13, 1.01, 1.99, 2.0] {
            assert!((t.eval(r) - (r.powi(4) - 3.0 * r)).abs() < 1e-12);
        }
    }
}

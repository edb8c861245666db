//! Operator blocks, the coupled bulk/interface linear system and its right-hand side.

mod three_cell;
mod diagnostics;

pub use three_cell::{assemble_three_cell, solve_three_cell_general, ThreeCellError, ThreeCellSystem, ThreeCellSetup, Distances};
pub use diagnostics::{interface_diagnostics, DiagnosticsReport, InterfaceDiagnostics};

use std::fmt;

use crate::conditions::{boundary_face, BcKind, ConditionError, InterfaceLaw, OuterBC, ScalarFn, SinglePhaseClosure};
use crate::geometry::{MomentSet, Phase};
use crate::linalg::Csr;
use crate::operators::{face_stencil, FieldState};
use crate::solver::TimeControls;

/// How the interfacial unknowns are closed.
#[derive(Debug, Clone)]
pub enum InterfaceModel {
    /// Both phases solved, coupled by flux balance and a weighted jump.
    TwoPhase(InterfaceLaw),
    /// Only the light phase is solved; the interface carries a boundary condition.
    SinglePhase(SinglePhaseClosure),
}

/// Physical data of a (possibly two-phase) diffusion problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub capacity: [f64; 2],
    pub diffusivity: [f64; 2],
    pub source: [ScalarFn; 2],
    pub bc: OuterBC,
    pub interface: InterfaceModel,
    pub initial: [ScalarFn; 2],
    /// `None` selects the steady problem.
    pub time: Option<TimeControls>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("capacity", &self.capacity)
            .field("diffusivity", &self.diffusivity)
            .field("interface", &self.interface)
            .field("time", &self.time)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn phases(&self) -> &'static [Phase] {
        match self.interface {
            InterfaceModel::TwoPhase(_) => &Phase::BOTH,
            InterfaceModel::SinglePhase(_) => &[Phase::Minus],
        }
    }

    pub fn is_steady(&self) -> bool {
        self.time.is_none()
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        for &p in self.phases() {
            let k = self.diffusivity[p.index()];
            if !(k > 0.0) || !k.is_finite() {
                return Err(AssemblyError::InvalidSpec(format!("diffusivity of {p:?} must be positive, got {k}")));
            }
            let c = self.capacity[p.index()];
            if self.time.is_some() && !(c > 0.0) {
                return Err(AssemblyError::InvalidSpec(format!("capacity of {p:?} must be positive, got {c}")));
            }
        }
        if let Some(tc) = &self.time {
            tc.validate().map_err(AssemblyError::InvalidSpec)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssemblyError {
    InvalidSpec(String),
    Condition(ConditionError),
    /// A stencil reached a cell without the matching unknown.
    InconsistentMask { phase: Phase, cell: usize },
}

impl fmt::Display for AssemblyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssemblyError::InvalidSpec(s) => write!(f, "invalid problem: {s}"),
            AssemblyError::Condition(e) => write!(f, "{e}"),
            AssemblyError::InconsistentMask { phase, cell } => {
                write!(f, "stencil couples to cell {cell} which has no {phase:?} unknown")
            }
        }
    }
}

impl std::error::Error for AssemblyError {}

impl From<ConditionError> for AssemblyError {
    fn from(e: ConditionError) -> Self {
        AssemblyError::Condition(e)
    }
}

const NONE: usize = usize::MAX;

/// Maps (phase, cell) to positions in the global unknown vector.
///
/// Layout: active bulk cells of each solved phase, then mixed cells per phase,
/// each block in lexicographic cell order.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    omega: [Vec<usize>; 2],
    gamma: [Vec<usize>; 2],
    pub omega_cells: [Vec<usize>; 2],
    pub gamma_cells: [Vec<usize>; 2],
    pub offsets: [usize; 4],
    pub n: usize,
}

impl DofMap {
    pub fn new(m: &MomentSet, phases: &[Phase]) -> Self {
        let nc = m.cells.len();
        let mut omega = [vec![NONE; nc], vec![NONE; nc]];
        let mut gamma = [vec![NONE; nc], vec![NONE; nc]];
        let mut omega_cells: [Vec<usize>; 2] = Default::default();
        let mut gamma_cells: [Vec<usize>; 2] = Default::default();
        let mut n = 0;
        let mut offsets = [0; 4];
        for p in Phase::BOTH {
            offsets[p.index()] = n;
            if phases.contains(&p) {
                for c in m.active_cells(p) {
                    omega[p.index()][c] = n;
                    omega_cells[p.index()].push(c);
                    n += 1;
                }
            }
        }
        for p in Phase::BOTH {
            offsets[2 + p.index()] = n;
            if phases.contains(&p) {
                for c in m.mixed_cells() {
                    gamma[p.index()][c] = n;
                    gamma_cells[p.index()].push(c);
                    n += 1;
                }
            }
        }
        Self { omega, gamma, omega_cells, gamma_cells, offsets, n }
    }

    pub fn omega(&self, p: Phase, c: usize) -> Option<usize> {
        let d = self.omega[p.index()][c];
        (d != NONE).then_some(d)
    }

    pub fn gamma(&self, p: Phase, c: usize) -> Option<usize> {
        let d = self.gamma[p.index()][c];
        (d != NONE).then_some(d)
    }

    /// Packs the masked entries of `state` into a global vector.
    pub fn gather(&self, state: &FieldState) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for p in Phase::BOTH {
            for &c in &self.omega_cells[p.index()] {
                x[self.omega[p.index()][c]] = state.omega[p.index()][c];
            }
            for &c in &self.gamma_cells[p.index()] {
                x[self.gamma[p.index()][c]] = state.gamma[p.index()][c];
            }
        }
        x
    }

    /// Unpacks a global vector into a cell-indexed state.
    pub fn scatter(&self, x: &[f64], n_cells: usize, time: f64) -> FieldState {
        let mut s = FieldState::zeros(n_cells, time);
        for p in Phase::BOTH {
            for &c in &self.omega_cells[p.index()] {
                s.omega[p.index()][c] = x[self.omega[p.index()][c]];
            }
            for &c in &self.gamma_cells[p.index()] {
                s.gamma[p.index()][c] = x[self.gamma[p.index()][c]];
            }
        }
        s
    }
}

/// The four operator blocks of each phase, indexed by cell on both sides.
///
/// `ww` and `wg` map bulk and interfacial values to the bulk outflow of a
/// cell; `gw` and `gg` map them to the outflow through the cell's interface.
/// Outer-face couplings are folded in; their data-dependent parts are
/// returned separately by [`boundary_known`].
#[derive(Debug, Clone, PartialEq)]
pub struct LBlocks {
    pub ww: [Csr; 2],
    pub wg: [Csr; 2],
    pub gw: [Csr; 2],
    pub gg: [Csr; 2],
}

pub fn build_l_blocks(m: &MomentSet, spec: &ProblemSpec) -> Result<LBlocks, AssemblyError> {
    let n = m.cells.len();
    let empty = || [Csr::zeros(n, n), Csr::zeros(n, n)];
    let mut out = LBlocks { ww: empty(), wg: empty(), gw: empty(), gg: empty() };
    for &p in spec.phases() {
        let k = spec.diffusivity[p.index()];
        let mut t: [Vec<(usize, usize, f64)>; 4] = Default::default();
        for axis in 0..m.dim() {
            for f in 0..m.grid.n_faces(axis) {
                if m.grid.is_boundary_face(axis, f) {
                    if let Some(bf) = boundary_face(&spec.bc, m, p, k, axis, f, 0.0)? {
                        let c = bf.cell;
                        t[0].push((c, c, bf.omega[0]));
                        t[1].push((c, c, bf.omega[1]));
                        t[2].push((c, c, bf.gamma[0]));
                        t[3].push((c, c, bf.gamma[1]));
                    }
                    continue;
                }
                let Some(st) = face_stencil(m, p, axis, f) else { continue };
                let s = k / st.staggered;
                for i in 0..2 {
                    for j in 0..2 {
                        let (ci, cj) = (st.cells[i], st.cells[j]);
                        t[0].push((ci, cj, s * st.bulk[i] * st.bulk[j]));
                        t[1].push((ci, cj, s * st.bulk[i] * st.interface[j]));
                        t[2].push((ci, cj, -s * st.interface[i] * st.bulk[j]));
                        t[3].push((ci, cj, -s * st.interface[i] * st.interface[j]));
                    }
                }
            }
        }
        let pi = p.index();
        for (b, trip) in t.iter_mut().enumerate() {
            trip.retain(|e| e.2 != 0.0);
            let mat = Csr::from_triplets(n, n, trip);
            match b {
                0 => out.ww[pi] = mat,
                1 => out.wg[pi] = mat,
                2 => out.gw[pi] = mat,
                _ => out.gg[pi] = mat,
            }
        }
    }
    Ok(out)
}

/// Data-dependent outer-face contributions at time `t`: the known part of the
/// bulk outflow and of the interfacial outflow, per cell.
pub fn boundary_known(m: &MomentSet, spec: &ProblemSpec, p: Phase, t: f64) -> Result<[Vec<f64>; 2], AssemblyError> {
    let n = m.cells.len();
    let mut ok = vec![0.0; n];
    let mut gk = vec![0.0; n];
    let k = spec.diffusivity[p.index()];
    for axis in 0..m.dim() {
        for f in 0..m.grid.n_faces(axis) {
            if !m.grid.is_boundary_face(axis, f) {
                continue;
            }
            if let Some(bf) = boundary_face(&spec.bc, m, p, k, axis, f, t)? {
                ok[bf.cell] += bf.omega_known;
                gk[bf.cell] += bf.gamma_known;
            }
        }
    }
    Ok([ok, gk])
}

/// Assembled system of one step (or of the steady problem).
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub dofs: DofMap,
    pub blocks: LBlocks,
    /// Diagonal `C·V/Δt` per phase and cell; zero in steady mode.
    pub mass: [Vec<f64>; 2],
    pub theta: f64,
    pub dt: Option<f64>,
    pub matrix: Csr,
}

impl BlockSystem {
    pub fn is_steady(&self) -> bool {
        self.dt.is_none()
    }
}

/// Builds the coupled matrix. `dt = None` assembles the steady problem (`θ = 1`, no storage).
pub fn build_block_system(m: &MomentSet, spec: &ProblemSpec, dt: Option<f64>, theta: f64) -> Result<BlockSystem, AssemblyError> {
    spec.validate()?;
    if let Some(dt) = dt {
        if !(dt > 0.0) {
            return Err(AssemblyError::InvalidSpec(format!("time step must be positive, got {dt}")));
        }
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(AssemblyError::InvalidSpec(format!("theta must lie in [0, 1], got {theta}")));
    }
    let theta = if dt.is_none() { 1.0 } else { theta };
    let blocks = build_l_blocks(m, spec)?;
    let dofs = DofMap::new(m, spec.phases());
    let n_cells = m.cells.len();
    let mut mass = [vec![0.0; n_cells], vec![0.0; n_cells]];
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();

    let col = |p: Phase, c: usize, gamma: bool| -> Result<usize, AssemblyError> {
        let d = if gamma { dofs.gamma(p, c) } else { dofs.omega(p, c) };
        d.ok_or(AssemblyError::InconsistentMask { phase: p, cell: c })
    };

    for &p in spec.phases() {
        let pi = p.index();
        for &c in &dofs.omega_cells[pi] {
            let r = dofs.omega[pi][c];
            if let Some(dt) = dt {
                mass[pi][c] = spec.capacity[pi] * m.cells[c].volume[pi] / dt;
                trip.push((r, r, mass[pi][c]));
            }
            for (cj, v) in blocks.ww[pi].row(c) {
                trip.push((r, col(p, cj, false)?, theta * v));
            }
            for (cj, v) in blocks.wg[pi].row(c) {
                trip.push((r, col(p, cj, true)?, v));
            }
        }
    }

    match &spec.interface {
        InterfaceModel::TwoPhase(law) => {
            for &c in &dofs.gamma_cells[0] {
                let r3 = dofs.gamma[0][c];
                let r4 = dofs.gamma[1][c];
                for p in Phase::BOTH {
                    let pi = p.index();
                    for (cj, v) in blocks.gw[pi].row(c) {
                        trip.push((r3, col(p, cj, false)?, theta * v));
                    }
                    for (cj, v) in blocks.gg[pi].row(c) {
                        trip.push((r3, col(p, cj, true)?, v));
                    }
                }
                trip.push((r4, r4, 1.0));
                trip.push((r4, r3, -law.lambda()));
            }
        }
        InterfaceModel::SinglePhase(closure) => {
            for &c in &dofs.gamma_cells[0] {
                let r = dofs.gamma[0][c];
                match closure {
                    SinglePhaseClosure::Dirichlet(_) => trip.push((r, r, 1.0)),
                    SinglePhaseClosure::Robin(rc) => {
                        for (cj, v) in blocks.gw[0].row(c) {
                            trip.push((r, col(Phase::Minus, cj, false)?, theta * v));
                        }
                        for (cj, v) in blocks.gg[0].row(c) {
                            trip.push((r, col(Phase::Minus, cj, true)?, v));
                        }
                        let beta = rc.beta();
                        if beta != 0.0 {
                            trip.push((r, r, -beta * m.cells[c].gamma_measure));
                        }
                    }
                }
            }
        }
    }
    trip.retain(|e| e.2 != 0.0);
    let matrix = Csr::from_triplets(dofs.n, dofs.n, &trip);
    Ok(BlockSystem { dofs, blocks, mass, theta, dt, matrix })
}

/// Right-hand side of the step from `state` (at `state.time`) or of the steady problem.
pub fn build_rhs(system: &BlockSystem, m: &MomentSet, spec: &ProblemSpec, state: &FieldState) -> Result<Vec<f64>, AssemblyError> {
    let theta = system.theta;
    let t = state.time + system.dt.map_or(0.0, |dt| theta * dt);
    let explicit = 1.0 - theta;
    let dofs = &system.dofs;
    let mut rhs = vec![0.0; dofs.n];
    let mut gamma_known = vec![0.0; m.cells.len()];
    let mut gamma_explicit = vec![0.0; m.cells.len()];

    for &p in spec.phases() {
        let pi = p.index();
        let phi = &state.omega[pi];
        let [ok, gk] = boundary_known(m, spec, p, t)?;
        for &c in &dofs.omega_cells[pi] {
            let cm = &m.cells[c];
            let mut v = cm.volume[pi] * (spec.source[pi])(cm.centroid[pi], t) - ok[c];
            if system.dt.is_some() {
                v += system.mass[pi][c] * phi[c];
                if explicit != 0.0 {
                    v -= explicit * system.blocks.ww[pi].row(c).map(|(j, a)| a * phi[j]).sum::<f64>();
                }
            }
            rhs[dofs.omega[pi][c]] = v;
        }
        for &c in &dofs.gamma_cells[pi] {
            gamma_known[c] += gk[c];
            if explicit != 0.0 && system.dt.is_some() {
                gamma_explicit[c] += system.blocks.gw[pi].row(c).map(|(j, a)| a * phi[j]).sum::<f64>();
            }
        }
    }

    match &spec.interface {
        InterfaceModel::TwoPhase(law) => {
            for &c in &dofs.gamma_cells[0] {
                rhs[dofs.gamma[0][c]] = -explicit * gamma_explicit[c] - gamma_known[c];
                rhs[dofs.gamma[1][c]] = (law.source)(m.cells[c].gamma_centroid, t);
            }
        }
        InterfaceModel::SinglePhase(closure) => {
            for &c in &dofs.gamma_cells[0] {
                let cm = &m.cells[c];
                rhs[dofs.gamma[0][c]] = match closure {
                    SinglePhaseClosure::Dirichlet(g) => g(cm.gamma_centroid, t),
                    SinglePhaseClosure::Robin(rc) => {
                        -explicit * gamma_explicit[c] - gamma_known[c] - cm.gamma_measure * (rc.source)(cm.gamma_centroid, t)
                    }
                };
            }
        }
    }
    Ok(rhs)
}

/// Initial state: bulk values at phase centroids, interfacial values at the interface centroid.
pub fn initial_state(m: &MomentSet, spec: &ProblemSpec, t0: f64) -> FieldState {
    let mut s = FieldState::zeros(m.cells.len(), t0);
    for &p in spec.phases() {
        let pi = p.index();
        for (c, cm) in m.cells.iter().enumerate() {
            if m.is_active(c, p) {
                s.omega[pi][c] = (spec.initial[pi])(cm.centroid[pi], t0);
            }
            if m.is_mixed(c) {
                s.gamma[pi][c] = (spec.initial[pi])(cm.gamma_centroid, t0);
            }
        }
    }
    s
}

/// Whether any outer face of the solved phases carries a Dirichlet or Robin condition.
pub fn has_fixing_condition(m: &MomentSet, spec: &ProblemSpec) -> bool {
    let outer = (0..m.dim()).any(|a| {
        (0..2).any(|e| matches!(spec.bc.get(a, e).map(|b| b.kind), Some(BcKind::Dirichlet | BcKind::Robin { .. })))
    });
    let inner = match &spec.interface {
        InterfaceModel::SinglePhase(SinglePhaseClosure::Dirichlet(_)) => !m.mixed_cells().is_empty(),
        InterfaceModel::SinglePhase(SinglePhaseClosure::Robin(r)) => r.beta() > 0.0 && !m.mixed_cells().is_empty(),
        InterfaceModel::TwoPhase(_) => false,
    };
    outer || inner
}

/// Restriction of a cell-indexed block to the given row and column cells.
pub fn restrict(a: &Csr, rows: &[usize], cols: &[usize]) -> Csr {
    let mut pos = vec![NONE; a.n_cols];
    for (j, &c) in cols.iter().enumerate() {
        pos[c] = j;
    }
    let mut t = Vec::new();
    for (i, &r) in rows.iter().enumerate() {
        for (c, v) in a.row(r) {
            if pos[c] != NONE {
                t.push((i, pos[c], v));
            }
        }
    }
    Csr::from_triplets(rows.len(), cols.len(), &t)
}

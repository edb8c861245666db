//! Outer boundary conditions and interface laws as algebraic row contributions.
//!
//! Boundary data use the diffusive flux convention `g = K ∂φ/∂n` with `n`
//! the outward normal of the phase: a Neumann value is the inflow through the
//! face and a Robin condition reads `K ∂φ/∂n + β φ = g`.

pub mod expr;

use std::fmt;
use std::sync::Arc;

use crate::geometry::{MomentSet, Phase};
use crate::operators::face_stencil;

pub use expr::{Expr, ParseError};

/// Space-time scalar data `f(x, t)`.
pub type ScalarFn = Arc<dyn Fn([f64; 3], f64) -> f64 + Send + Sync>;

pub fn constant(v: f64) -> ScalarFn {
    Arc::new(move |_, _| v)
}

pub fn from_expr(e: Expr) -> ScalarFn {
    Arc::new(move |x, t| e.eval(x, t))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConditionError {
    NonPositiveLambda(f64),
    NegativeBeta(f64),
    MissingBoundary { axis: usize, face: usize },
    NotMixed(usize),
}

impl fmt::Display for ConditionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionError::NonPositiveLambda(l) => write!(f, "jump weight must be positive, got {l}"),
            ConditionError::NegativeBeta(b) => write!(f, "Robin coefficient must be non-negative, got {b}"),
            ConditionError::MissingBoundary { axis, face } => {
                write!(f, "no boundary condition for active outer face {face} normal to axis {axis}")
            }
            ConditionError::NotMixed(c) => write!(f, "cell {c} is not cut by the interface"),
        }
    }
}

impl std::error::Error for ConditionError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcKind {
    Dirichlet,
    Neumann,
    Robin { beta: f64 },
}

#[derive(Clone)]
pub struct BoundaryCondition {
    pub kind: BcKind,
    pub value: ScalarFn,
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryCondition").field("kind", &self.kind).finish_non_exhaustive()
    }
}

impl BoundaryCondition {
    pub fn dirichlet(value: ScalarFn) -> Self {
        Self { kind: BcKind::Dirichlet, value }
    }

    pub fn neumann(inflow: ScalarFn) -> Self {
        Self { kind: BcKind::Neumann, value: inflow }
    }

    pub fn robin(beta: f64, value: ScalarFn) -> Result<Self, ConditionError> {
        if beta < 0.0 {
            return Err(ConditionError::NegativeBeta(beta));
        }
        if beta == 0.0 {
            return Ok(Self::neumann(value));
        }
        Ok(Self { kind: BcKind::Robin { beta }, value })
    }

    pub fn insulated() -> Self {
        Self::neumann(constant(0.0))
    }
}

/// Sides of the box in the order west, east, south, north, bottom, top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    West,
    East,
    South,
    North,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 6] = [Side::West, Side::East, Side::South, Side::North, Side::Bottom, Side::Top];

    pub fn axis(self) -> usize {
        self as usize / 2
    }

    /// 0 for the low end of the axis, 1 for the high end.
    pub fn end(self) -> usize {
        self as usize % 2
    }

    pub fn from_name(name: &str) -> Option<Side> {
        Some(match name {
            "west" => Side::West,
            "east" => Side::East,
            "south" => Side::South,
            "north" => Side::North,
            "bottom" => Side::Bottom,
            "top" => Side::Top,
            _ => return None,
        })
    }
}

/// Boundary conditions on the sides of the computational box.
#[derive(Debug, Clone, Default)]
pub struct OuterBC {
    sides: [Option<BoundaryCondition>; 6],
}

impl OuterBC {
    pub fn uniform(bc: BoundaryCondition) -> Self {
        Self { sides: std::array::from_fn(|_| Some(bc.clone())) }
    }

    pub fn with(mut self, side: Side, bc: BoundaryCondition) -> Self {
        self.sides[side as usize] = Some(bc);
        self
    }

    pub fn get(&self, axis: usize, end: usize) -> Option<&BoundaryCondition> {
        self.sides[2 * axis + end].as_ref()
    }
}

/// Weighted jump `φ⁺ − λ φ⁻ = f` across the interface.
#[derive(Clone)]
pub struct InterfaceLaw {
    lambda: f64,
    pub source: ScalarFn,
}

impl fmt::Debug for InterfaceLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InterfaceLaw").field("lambda", &self.lambda).finish_non_exhaustive()
    }
}

impl InterfaceLaw {
    pub fn new(lambda: f64, source: ScalarFn) -> Result<Self, ConditionError> {
        if !(lambda > 0.0) {
            return Err(ConditionError::NonPositiveLambda(lambda));
        }
        Ok(Self { lambda, source })
    }

    pub fn continuity() -> Self {
        Self { lambda: 1.0, source: constant(0.0) }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Robin closure `K ∂φ/∂n + β φ = g` on the interface in single-phase mode.
#[derive(Clone)]
pub struct RobinClosure {
    beta: f64,
    pub source: ScalarFn,
}

impl fmt::Debug for RobinClosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RobinClosure").field("beta", &self.beta).finish_non_exhaustive()
    }
}

impl RobinClosure {
    pub fn new(beta: f64, source: ScalarFn) -> Result<Self, ConditionError> {
        if beta < 0.0 {
            return Err(ConditionError::NegativeBeta(beta));
        }
        Ok(Self { beta, source })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Closure of the interfacial unknowns when only the light phase is solved.
#[derive(Clone)]
pub enum SinglePhaseClosure {
    Robin(RobinClosure),
    Dirichlet(ScalarFn),
}

impl fmt::Debug for SinglePhaseClosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SinglePhaseClosure::Robin(r) => f.debug_tuple("Robin").field(r).finish(),
            SinglePhaseClosure::Dirichlet(_) => f.write_str("Dirichlet"),
        }
    }
}

/// Unknown referenced by a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Omega(Phase, usize),
    Gamma(Phase, usize),
}

/// Linear constraint `Σ coef·var = rhs`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearRow {
    pub terms: Vec<(Var, f64)>,
    pub rhs: f64,
}

impl LinearRow {
    pub fn add(&mut self, v: Var, c: f64) {
        if c == 0.0 {
            return;
        }
        if let Some(t) = self.terms.iter_mut().find(|t| t.0 == v) {
            t.1 += c;
        } else {
            self.terms.push((v, c));
        }
    }

    /// Residual `Σ coef·var − rhs` for the values supplied by `value`.
    pub fn residual(&self, value: impl Fn(Var) -> f64) -> f64 {
        self.terms.iter().map(|&(v, c)| c * value(v)).sum::<f64>() - self.rhs
    }

    pub fn coefficient(&self, v: Var) -> f64 {
        self.terms.iter().filter(|t| t.0 == v).map(|t| t.1).sum()
    }
}

/// Contribution of one outer face to the rows of its cell, for one phase.
///
/// The bulk outflow through the face is `omega·[Φ, Γ] + omega_known` and its
/// share of the interfacial outflow is `gamma·[Φ, Γ] + gamma_known`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    pub cell: usize,
    /// Coefficients of `Φ` and `Γ` in the bulk row.
    pub omega: [f64; 2],
    /// Coefficients of `Φ` and `Γ` in the interfacial outflow.
    pub gamma: [f64; 2],
    /// Known part of the bulk outflow through the face.
    pub omega_known: f64,
    /// Known part of the interfacial outflow.
    pub gamma_known: f64,
}

/// Terms contributed by the outer face `f` normal to `axis` for phase `p` with diffusivity `k`.
pub fn boundary_face(
    bc: &OuterBC,
    m: &MomentSet,
    p: Phase,
    k: f64,
    axis: usize,
    f: usize,
    t: f64,
) -> Result<Option<BoundaryFace>, ConditionError> {
    let (c0, c1) = m.grid.face_cells(axis, f);
    let (cell, end) = match (c0, c1) {
        (None, Some(c)) => (c, 0usize),
        (Some(c), None) => (c, 1usize),
        _ => return Ok(None),
    };
    let pi = p.index();
    let fm = &m.faces[axis][f];
    let w = fm.staggered[pi];
    if w <= 0.0 {
        return Ok(None);
    }
    let a = fm.aperture[pi];
    let b = m.cells[cell].section[pi][axis];
    let gb = if m.is_mixed(cell) { a - b } else { 0.0 };
    // Cell divergence coefficient of Q is −s·B, interfacial one s·(A − B).
    let (ws, known) = if a <= 0.0 {
        (1.0 / w, 0.0)
    } else {
        let cond = bc.get(axis, end).ok_or(ConditionError::MissingBoundary { axis, face: f })?;
        let g = (cond.value)(fm.centroid[pi], t);
        match cond.kind {
            BcKind::Dirichlet => (1.0 / w, a * g / w),
            BcKind::Robin { beta } => {
                let d = k * a + beta * w;
                (beta / d, a * g / d)
            }
            BcKind::Neumann => {
                // Q = s·g: bulk outflow −B·g, interfacial outflow (A − B)·g.
                return Ok(Some(BoundaryFace {
                    cell,
                    omega: [0.0; 2],
                    gamma: [0.0; 2],
                    omega_known: -b * g,
                    gamma_known: gb * g,
                }));
            }
        }
    };
    // Q = −K·s·(ws·S − known) with s = ±1 the side sign: bulk outflow K·B·(ws·S − known).
    Ok(Some(BoundaryFace {
        cell,
        omega: [k * ws * b * b, k * ws * b * gb],
        gamma: [-k * ws * gb * b, -k * ws * gb * gb],
        omega_known: -k * b * known,
        gamma_known: k * gb * known,
    }))
}

/// Interfacial outflow of phase `p` through the interface of mixed cell `c`,
/// `V·div^γ(Q)`, as a linear expression: `terms` minus `rhs`.
pub fn interface_outflow(
    m: &MomentSet,
    p: Phase,
    k: f64,
    bc: &OuterBC,
    c: usize,
    t: f64,
) -> Result<LinearRow, ConditionError> {
    let mut row = LinearRow::default();
    for axis in 0..m.dim() {
        for end in 0..2 {
            let f = m.grid.cell_face(c, axis, end);
            if m.grid.is_boundary_face(axis, f) {
                if let Some(bf) = boundary_face(bc, m, p, k, axis, f, t)? {
                    row.add(Var::Omega(p, c), bf.gamma[0]);
                    row.add(Var::Gamma(p, c), bf.gamma[1]);
                    row.rhs -= bf.gamma_known;
                }
                continue;
            }
            if let Some(st) = face_stencil(m, p, axis, f) {
                let pos = if st.cells[0] == c { 0 } else { 1 };
                let g = st.interface[pos];
                if g == 0.0 {
                    continue;
                }
                let w = -k * g / st.staggered;
                for q in 0..2 {
                    if st.bulk[q] != 0.0 && m.is_active(st.cells[q], p) {
                        row.add(Var::Omega(p, st.cells[q]), w * st.bulk[q]);
                    }
                    row.add(Var::Gamma(p, st.cells[q]), w * st.interface[q]);
                }
            }
        }
    }
    row.terms.retain(|t| t.1 != 0.0);
    Ok(row)
}

/// Flux continuity row of a mixed cell: the outflows of both phases sum to zero.
pub fn flux_balance_row(m: &MomentSet, k: [f64; 2], bc: &OuterBC, c: usize, t: f64) -> Result<LinearRow, ConditionError> {
    if !m.is_mixed(c) {
        return Err(ConditionError::NotMixed(c));
    }
    let mut row = interface_outflow(m, Phase::Minus, k[0], bc, c, t)?;
    let plus = interface_outflow(m, Phase::Plus, k[1], bc, c, t)?;
    for (v, coef) in plus.terms {
        row.add(v, coef);
    }
    row.rhs += plus.rhs;
    Ok(row)
}

/// Weighted jump row `Γ⁺ − λ Γ⁻ = f(centroid, t)`.
pub fn jump_row(law: &InterfaceLaw, m: &MomentSet, c: usize, t: f64) -> Result<LinearRow, ConditionError> {
    if !m.is_mixed(c) {
        return Err(ConditionError::NotMixed(c));
    }
    let f = (law.source)(m.cells[c].gamma_centroid, t);
    Ok(LinearRow { terms: vec![(Var::Gamma(Phase::Plus, c), 1.0), (Var::Gamma(Phase::Minus, c), -law.lambda)], rhs: f })
}

/// Single-phase Robin row: `outflow − β|Γ|Γ⁻ = −|Γ| g`.
pub fn robin_row(
    closure: &RobinClosure,
    m: &MomentSet,
    k: f64,
    bc: &OuterBC,
    c: usize,
    t: f64,
) -> Result<LinearRow, ConditionError> {
    if !m.is_mixed(c) {
        return Err(ConditionError::NotMixed(c));
    }
    let mut row = interface_outflow(m, Phase::Minus, k, bc, c, t)?;
    let cm = &m.cells[c];
    if closure.beta != 0.0 {
        row.add(Var::Gamma(Phase::Minus, c), -closure.beta * cm.gamma_measure);
    }
    let g = (closure.source)(cm.gamma_centroid, t);
    if g != 0.0 {
        row.rhs -= cm.gamma_measure * g;
    }
    Ok(row)
}

/// Single-phase Dirichlet row: `Γ⁻ = g(centroid, t)`.
pub fn interface_dirichlet_row(value: &ScalarFn, m: &MomentSet, c: usize, t: f64) -> Result<LinearRow, ConditionError> {
    if !m.is_mixed(c) {
        return Err(ConditionError::NotMixed(c));
    }
    Ok(LinearRow { terms: vec![(Var::Gamma(Phase::Minus, c), 1.0)], rhs: value(m.cells[c].gamma_centroid, t) })
}

//! Discrete divergence, staggered gradient and flux closure on a moment set.
//!
//! For one phase and one axis, the face between a low cell `c0` and a high
//! cell `c1` carries the staggered gradient
//!
//! ```text
//! G = (B1·Φ1 − B0·Φ0 + (A − B1)·Γ1 − (A − B0)·Γ0) / W
//! ```
//!
//! where `B` are centroid-section measures, `A` the face aperture, `W` the
//! staggered volume and `Γ` the interfacial unknowns. The cell divergence
//! splits into a mesh-face part `A₊Q₊ − A₋Q₋` and an interfacial part
//! `(B − A₊)Q₊ + (A₋ − B)Q₋`.

use std::fmt;

use crate::geometry::{MomentSet, Phase};

/// Values attached to the faces of one axis family, with a definedness mask per face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub values: [Vec<f64>; 3],
    pub defined: [Vec<bool>; 3],
}

pub type GradientField = FaceField;
pub type FaceFluxField = FaceField;

impl FaceField {
    pub fn undefined(m: &MomentSet) -> Self {
        let mut values: [Vec<f64>; 3] = Default::default();
        let mut defined: [Vec<bool>; 3] = Default::default();
        for a in 0..m.dim() {
            let n = m.grid.n_faces(a);
            values[a] = vec![0.0; n];
            defined[a] = vec![false; n];
        }
        Self { values, defined }
    }

    pub fn set(&mut self, axis: usize, f: usize, v: f64) {
        self.values[axis][f] = v;
        self.defined[axis][f] = true;
    }

    pub fn get(&self, axis: usize, f: usize) -> Option<f64> {
        if self.defined[axis][f] {
            Some(self.values[axis][f])
        } else {
            None
        }
    }

    /// Uniform value on every face of every axis.
    pub fn constant(m: &MomentSet, v: f64) -> Self {
        let mut out = Self::undefined(m);
        for a in 0..m.dim() {
            out.values[a].iter_mut().for_each(|x| *x = v);
            out.defined[a].iter_mut().for_each(|x| *x = true);
        }
        out
    }
}

/// Cell-indexed bulk and interfacial averages of both phases.
///
/// Vectors span all cells; entries outside the active (bulk) or mixed
/// (interfacial) masks are kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub omega: [Vec<f64>; 2],
    pub gamma: [Vec<f64>; 2],
    pub time: f64,
}

impl FieldState {
    pub fn zeros(n_cells: usize, time: f64) -> Self {
        Self { omega: [vec![0.0; n_cells], vec![0.0; n_cells]], gamma: [vec![0.0; n_cells], vec![0.0; n_cells]], time }
    }

    /// Zeroes entries outside the masks of `m`.
    pub fn apply_masks(&mut self, m: &MomentSet) {
        for p in Phase::BOTH {
            for c in 0..m.cells.len() {
                if !m.is_active(c, p) {
                    self.omega[p.index()][c] = 0.0;
                }
                if !m.is_mixed(c) {
                    self.gamma[p.index()][c] = 0.0;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorError {
    MissingFlux { axis: usize, face: usize },
}

impl fmt::Display for OperatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorError::MissingFlux { axis, face } => {
                write!(f, "no flux supplied on active face {face} normal to axis {axis}")
            }
        }
    }
}

impl std::error::Error for OperatorError {}

/// Gradient coefficients of one interior face for one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceStencil {
    pub cells: [usize; 2],
    /// Bulk coefficients `[−B0, B1]`.
    pub bulk: [f64; 2],
    /// Interfacial coefficients `[B0 − A, A − B1]`.
    pub interface: [f64; 2],
    pub staggered: f64,
}

/// Stencil of an interior face; `None` for outer faces or deactivated ones (`W = 0`).
pub fn face_stencil(m: &MomentSet, p: Phase, axis: usize, f: usize) -> Option<FaceStencil> {
    let (c0, c1) = m.grid.face_cells(axis, f);
    let (c0, c1) = (c0?, c1?);
    let fm = &m.faces[axis][f];
    let w = fm.staggered[p.index()];
    if w <= 0.0 {
        return None;
    }
    let a = fm.aperture[p.index()];
    let b0 = m.cells[c0].section[p.index()][axis];
    let b1 = m.cells[c1].section[p.index()][axis];
    debug_assert!(m.is_mixed(c0) || (a - b0).abs() <= 1e-9 * b0.max(a), "pure cell with A != B");
    debug_assert!(m.is_mixed(c1) || (a - b1).abs() <= 1e-9 * b1.max(a), "pure cell with A != B");
    let (g0, g1) = if m.is_mixed(c0) || m.is_mixed(c1) {
        (if m.is_mixed(c0) { b0 - a } else { 0.0 }, if m.is_mixed(c1) { a - b1 } else { 0.0 })
    } else {
        (0.0, 0.0)
    };
    Some(FaceStencil { cells: [c0, c1], bulk: [-b0, b1], interface: [g0, g1], staggered: w })
}

fn grad_part(m: &MomentSet, p: Phase, axis: usize, phi: &[f64], bulk: bool) -> GradientField {
    let mut out = FaceField::undefined(m);
    for f in 0..m.grid.n_faces(axis) {
        if let Some(s) = face_stencil(m, p, axis, f) {
            let coef = if bulk { s.bulk } else { s.interface };
            let v = (coef[0] * phi[s.cells[0]] + coef[1] * phi[s.cells[1]]) / s.staggered;
            out.set(axis, f, v);
        }
    }
    out
}

/// Bulk part of the staggered gradient along `axis`.
pub fn grad_omega(m: &MomentSet, p: Phase, axis: usize, phi: &[f64]) -> GradientField {
    grad_part(m, p, axis, phi, true)
}

/// Interfacial part of the staggered gradient along `axis`.
pub fn grad_gamma(m: &MomentSet, p: Phase, axis: usize, phi_gamma: &[f64]) -> GradientField {
    grad_part(m, p, axis, phi_gamma, false)
}

/// Full staggered gradient on every axis.
pub fn gradient(m: &MomentSet, p: Phase, phi: &[f64], phi_gamma: &[f64]) -> GradientField {
    let mut out = FaceField::undefined(m);
    for axis in 0..m.dim() {
        let go = grad_omega(m, p, axis, phi);
        let gg = grad_gamma(m, p, axis, phi_gamma);
        for f in 0..m.grid.n_faces(axis) {
            if go.defined[axis][f] {
                out.set(axis, f, go.values[axis][f] + gg.values[axis][f]);
            }
        }
    }
    out
}

/// `Q = −K·G` wherever `G` is defined.
pub fn flux_closure(k: f64, g: &GradientField) -> FaceFluxField {
    let mut out = g.clone();
    for a in 0..3 {
        for v in out.values[a].iter_mut() {
            *v *= -k;
        }
    }
    out
}

fn face_flux(m: &MomentSet, p: Phase, axis: usize, f: usize, q: &FaceFluxField, needed: bool) -> Result<f64, OperatorError> {
    match q.get(axis, f) {
        Some(v) => Ok(v),
        None => {
            let fm = &m.faces[axis][f];
            let outer = m.grid.is_boundary_face(axis, f);
            if needed && (outer || fm.staggered[p.index()] > 0.0) {
                Err(OperatorError::MissingFlux { axis, face: f })
            } else {
                Ok(0.0)
            }
        }
    }
}

fn div_part(m: &MomentSet, p: Phase, axis: usize, q: &FaceFluxField, part: u8) -> Result<Vec<f64>, OperatorError> {
    let pi = p.index();
    let mut out = vec![0.0; m.cells.len()];
    for (c, cm) in m.cells.iter().enumerate() {
        if cm.volume[pi] == 0.0 && !(part != 0 && m.is_mixed(c)) {
            continue;
        }
        let fl = m.grid.cell_face(c, axis, 0);
        let fh = m.grid.cell_face(c, axis, 1);
        let al = m.faces[axis][fl].aperture[pi];
        let ah = m.faces[axis][fh].aperture[pi];
        let b = cm.section[pi][axis];
        let (cl, ch) = match part {
            0 => (-al, ah),
            1 => (al - b, b - ah),
            _ => (-b, b),
        };
        let ql = face_flux(m, p, axis, fl, q, cl != 0.0)?;
        let qh = face_flux(m, p, axis, fh, q, ch != 0.0)?;
        out[c] = match part {
            0 => ah * qh - al * ql,
            1 => (b - ah) * qh + (al - b) * ql,
            _ => b * (qh - ql),
        };
    }
    Ok(out)
}

/// Volume-integrated mesh-face divergence `A₊Q₊ − A₋Q₋` along `axis`.
pub fn div_omega(m: &MomentSet, p: Phase, axis: usize, q: &FaceFluxField) -> Result<Vec<f64>, OperatorError> {
    div_part(m, p, axis, q, 0)
}

/// Volume-integrated interfacial divergence `(B − A₊)Q₊ + (A₋ − B)Q₋` along `axis`.
pub fn div_gamma(m: &MomentSet, p: Phase, axis: usize, q: &FaceFluxField) -> Result<Vec<f64>, OperatorError> {
    div_part(m, p, axis, q, 1)
}

/// Combined divergence `B·(Q₊ − Q₋)` along `axis`.
pub fn div_total(m: &MomentSet, p: Phase, axis: usize, q: &FaceFluxField) -> Result<Vec<f64>, OperatorError> {
    div_part(m, p, axis, q, 2)
}

/// Sum over all axes of one divergence part.
pub fn div_sum(
    m: &MomentSet,
    p: Phase,
    q: &FaceFluxField,
    op: fn(&MomentSet, Phase, usize, &FaceFluxField) -> Result<Vec<f64>, OperatorError>,
) -> Result<Vec<f64>, OperatorError> {
    let mut out = vec![0.0; m.cells.len()];
    for axis in 0..m.dim() {
        for (o, v) in out.iter_mut().zip(op(m, p, axis, q)?) {
            *o += v;
        }
    }
    Ok(out)
}

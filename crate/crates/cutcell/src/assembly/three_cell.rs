//! Hand-assembled three-cell 1D two-phase system, used as an independent
//! check of the general assembly.
//!
//! Cells `[0, Δx]`, `[Δx, 2Δx]`, `[2Δx, 3Δx]`; the interface sits at `x_Γ` in
//! the middle cell, the light phase on the left. Unknown order is
//! `[Φ1, Φ2⁻, Φ2⁺, Γ⁻, Γ⁺, Φ3]`; `a` and `b` are the heat inflows through
//! the left and right ends.

use std::fmt;

use faer::prelude::*;
use faer::Mat;

use super::{build_block_system, build_rhs, InterfaceModel, ProblemSpec};
use crate::conditions::{constant, BoundaryCondition, InterfaceLaw, OuterBC, Side};
use crate::geometry::{compute_moments, CartesianGrid, HalfSpace, MomentOptions, Phase};
use crate::linalg::DirectSolver;
use crate::operators::FieldState;
use crate::solver::TimeControls;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeCellSetup {
    pub dx: f64,
    pub x_gamma: f64,
    pub k: [f64; 2],
    pub c: [f64; 2],
    pub dt: f64,
    pub a: f64,
    pub b: f64,
    /// Previous values `[Φ1, Φ2⁻, Φ2⁺, Φ3]`.
    pub phi_n: [f64; 4],
}

/// Distance model used for the four conductances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distances {
    /// `Δx/2 + ℓ⁻`, `ℓ⁻`, `ℓ⁺`, `ℓ⁺ + Δx/2`, measured over full segment lengths.
    FullSegment,
    /// Centroid-to-centroid and centroid-to-interface distances:
    /// `Δx/2 + ℓ⁻/2`, `ℓ⁻/2`, `ℓ⁺/2`, `ℓ⁺/2 + Δx/2`.
    Centroid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThreeCellError {
    InterfaceOutsideMiddleCell { x_gamma: f64, dx: f64 },
    InvalidParameter(String),
    Singular,
}

impl fmt::Display for ThreeCellError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThreeCellError::InterfaceOutsideMiddleCell { x_gamma, dx } => {
                write!(f, "interface position {x_gamma} not inside ({dx}, {})", 2.0 * dx)
            }
            ThreeCellError::InvalidParameter(s) => write!(f, "{s}"),
            ThreeCellError::Singular => write!(f, "three-cell system is singular"),
        }
    }
}

impl std::error::Error for ThreeCellError {}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeCellSystem {
    pub matrix: [[f64; 6]; 6],
    pub rhs: [f64; 6],
}

impl ThreeCellSystem {
    pub fn solve(&self) -> Result<[f64; 6], ThreeCellError> {
        let a = Mat::<f64>::from_fn(6, 6, |i, j| self.matrix[i][j]);
        let b = Mat::<f64>::from_fn(6, 1, |i, _| self.rhs[i]);
        let x = a.partial_piv_lu().solve(&b);
        let out: [f64; 6] = std::array::from_fn(|i| x[(i, 0)]);
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(ThreeCellError::Singular)
        }
    }
}

fn check(s: &ThreeCellSetup) -> Result<(), ThreeCellError> {
    if !(s.x_gamma > s.dx && s.x_gamma < 2.0 * s.dx) {
        return Err(ThreeCellError::InterfaceOutsideMiddleCell { x_gamma: s.x_gamma, dx: s.dx });
    }
    let positive = [("dx", s.dx), ("dt", s.dt), ("k-", s.k[0]), ("k+", s.k[1]), ("c-", s.c[0]), ("c+", s.c[1])];
    for (name, v) in positive {
        if !(v > 0.0) {
            return Err(ThreeCellError::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Builds the 6×6 backward-Euler system with unit continuity across the interface.
pub fn assemble_three_cell(s: &ThreeCellSetup, distances: Distances) -> Result<ThreeCellSystem, ThreeCellError> {
    check(s)?;
    let dx = s.dx;
    let lm = s.x_gamma - dx;
    let lp = 2.0 * dx - s.x_gamma;
    let (d1, d2, d3, d4) = match distances {
        Distances::FullSegment => (0.5 * dx + lm, lm, lp, lp + 0.5 * dx),
        Distances::Centroid => (0.5 * (dx + lm), 0.5 * lm, 0.5 * lp, 0.5 * (lp + dx)),
    };
    let (a1, a2, a3, a4) = (s.k[0] / d1, s.k[0] / d2, s.k[1] / d3, s.k[1] / d4);
    let (m1, m2, m3, m4) = (s.c[0] * dx, s.c[0] * lm, s.c[1] * lp, s.c[1] * dx);
    let dt = s.dt;
    let matrix = [
        [m1 + dt * a1, -dt * a1, 0.0, 0.0, 0.0, 0.0],
        [-dt * a1, m2 + dt * (a1 + a2), 0.0, -dt * a2, 0.0, 0.0],
        [0.0, 0.0, m3 + dt * (a3 + a4), 0.0, -dt * a3, -dt * a4],
        [0.0, 0.0, 0.0, 1.0, -1.0, 0.0],
        [0.0, -a2, -a3, a2, a3, 0.0],
        [0.0, 0.0, -dt * a4, 0.0, 0.0, m4 + dt * a4],
    ];
    let p = s.phi_n;
    let rhs = [m1 * p[0] + dt * s.a, m2 * p[1], m3 * p[2], 0.0, 0.0, m4 * p[3] + dt * s.b];
    Ok(ThreeCellSystem { matrix, rhs })
}

/// Solves the same step through the general moment-based assembly.
/// Returns the unknowns in the three-cell order.
pub fn solve_three_cell_general(s: &ThreeCellSetup) -> Result<[f64; 6], Box<dyn std::error::Error>> {
    check(s)?;
    let grid = CartesianGrid::uniform(&[0.0], &[3.0 * s.dx], &[3])?;
    let ls = HalfSpace::axis(0, s.x_gamma);
    let m = compute_moments(&grid, &ls, &MomentOptions::default())?;
    let bc = OuterBC::uniform(BoundaryCondition::insulated())
        .with(Side::West, BoundaryCondition::neumann(constant(s.a)))
        .with(Side::East, BoundaryCondition::neumann(constant(s.b)));
    let spec = ProblemSpec {
        capacity: s.c,
        diffusivity: s.k,
        source: [constant(0.0), constant(0.0)],
        bc,
        interface: InterfaceModel::TwoPhase(InterfaceLaw::continuity()),
        initial: [constant(0.0), constant(0.0)],
        time: Some(TimeControls::fixed(1.0, s.dt, s.dt)),
    };
    let sys = build_block_system(&m, &spec, Some(s.dt), 1.0)?;
    let mut state = FieldState::zeros(3, 0.0);
    state.omega[0][0] = s.phi_n[0];
    state.omega[0][1] = s.phi_n[1];
    state.omega[1][1] = s.phi_n[2];
    state.omega[1][2] = s.phi_n[3];
    let rhs = build_rhs(&sys, &m, &spec, &state)?;
    let x = DirectSolver::new(&sys.matrix)?.solve(&rhs)?;
    let out = sys.dofs.scatter(&x, 3, s.dt);
    let (mi, pl) = (Phase::Minus.index(), Phase::Plus.index());
    Ok([out.omega[mi][0], out.omega[mi][1], out.omega[pl][1], out.gamma[mi][1], out.gamma[pl][1], out.omega[pl][2]])
}

//! Solvability diagnostics of an assembled system.

use faer::{Mat, Side};

use super::{restrict, BlockSystem};
use crate::geometry::Phase;
use crate::linalg::{lanczos_extremes, spectral_norm, Csr};

/// Above this size eigenvalue problems switch from dense to Lanczos estimates.
const DENSE_LIMIT: usize = 2500;

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceDiagnostics {
    /// Largest eigenvalue of `(D⁺)^{-1/2} D⁻ (D⁺)^{-1/2}`, with `D± = −L^{γγ±}` on mixed cells.
    /// Infinite when `D⁺` is singular.
    pub lambda_max: f64,
    /// Minimum eigenvalue of `λD⁺ − D⁻`.
    pub d_eff_min_eig: f64,
    pub d_eff_positive_definite: bool,
    /// Minimum eigenvalue of `λD⁺ + D⁻`, the operator left after eliminating `Γ⁺`.
    pub coupled_min_eig: f64,
    /// Coercivity of the bulk block, `λmin` of its symmetric part.
    pub alpha: f64,
    pub norm_bulk_to_interface: f64,
    pub norm_interface_to_bulk: f64,
    pub norm_interface_inverse: f64,
    /// `α − ‖C‖‖G⁻¹‖‖B‖`; positive means the sufficient coercivity condition holds.
    pub schur_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    /// Minimum eigenvalue of the symmetric part of the restricted `L^{ωω}` per phase.
    pub ww_min_eig: [Option<f64>; 2],
    /// `‖L^{ωω} − (L^{ωω})ᵀ‖_max / ‖L^{ωω}‖_max` per phase.
    pub ww_asymmetry: [f64; 2],
    /// `max |L^{γω}_{pq} + L^{ωγ}_{qp}| / scale` per phase.
    pub adjointness: [f64; 2],
    pub interface: Option<InterfaceDiagnostics>,
    /// False when an iterative eigen estimate did not settle.
    pub converged: bool,
}

fn dense(a: &Csr) -> Mat<f64> {
    a.to_dense()
}

fn sym_eigs(d: &Mat<f64>) -> Vec<f64> {
    let n = d.nrows();
    let s = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (d[(i, j)] + d[(j, i)]));
    let mut ev = s.self_adjoint_eigenvalues(Side::Lower).unwrap_or_default();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

fn min_sym_eig(a: &Csr) -> (f64, bool) {
    if a.n_rows == 0 {
        return (f64::INFINITY, true);
    }
    if a.n_rows <= DENSE_LIMIT {
        (sym_eigs(&dense(a))[0], true)
    } else {
        let at = a.transpose();
        let apply = |x: &[f64]| {
            let (p, q) = (a.matvec(x), at.matvec(x));
            p.iter().zip(q).map(|(u, v)| 0.5 * (u + v)).collect()
        };
        let (lo, _, ok) = lanczos_extremes(&apply, a.n_rows, 400, 1e-8);
        (lo, ok)
    }
}

fn asymmetry(a: &Csr) -> f64 {
    let scale = a.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for (i, j, v) in a.triplets() {
        worst = worst.max((v - a.get(j, i)).abs());
    }
    worst / scale
}

fn adjointness(gw: &Csr, wg: &Csr) -> f64 {
    let scale = gw.max_abs().max(wg.max_abs());
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for (p, q, v) in gw.triplets() {
        worst = worst.max((v + wg.get(q, p)).abs());
    }
    for (q, p, v) in wg.triplets() {
        worst = worst.max((v + gw.get(p, q)).abs());
    }
    worst / scale
}

fn block(a: &Csr, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Csr {
    let mut t = Vec::new();
    for i in rows.clone() {
        for (j, v) in a.row(i) {
            if cols.contains(&j) {
                t.push((i - rows.start, j - cols.start, v));
            }
        }
    }
    Csr::from_triplets(rows.len(), cols.len(), &t)
}

/// Pencil and definiteness checks on the interface operators; `None` unless
/// the system couples two phases through mixed cells.
fn interface_part(system: &BlockSystem, lambda: f64) -> Option<(InterfaceDiagnostics, bool)> {
    let dofs = &system.dofs;
    let mixed = &dofs.gamma_cells[0];
    if mixed.is_empty() || dofs.gamma_cells[1].is_empty() || mixed.len() > DENSE_LIMIT {
        return None;
    }
    let n = mixed.len();
    let d: [Mat<f64>; 2] = std::array::from_fn(|p| {
        let g = dense(&restrict(&system.blocks.gg[p], mixed, mixed));
        Mat::<f64>::from_fn(n, n, |i, j| -0.5 * (g[(i, j)] + g[(j, i)]))
    });
    let (dm, dp) = (&d[Phase::Minus.index()], &d[Phase::Plus.index()]);

    let lambda_max = match dp.self_adjoint_eigen(Side::Lower) {
        Ok(e) => {
            let u = e.U();
            let s = e.S().column_vector();
            let top = (0..n).map(|i| s[i]).fold(0.0f64, f64::max);
            if (0..n).any(|i| s[i] <= 1e-13 * top) {
                f64::INFINITY
            } else {
                let inv_sqrt = Mat::<f64>::from_fn(n, n, |i, j| (0..n).map(|k| u[(i, k)] * u[(j, k)] / s[k].sqrt()).sum());
                let pencil = &inv_sqrt * dm * &inv_sqrt;
                *sym_eigs(&pencil).last().unwrap()
            }
        }
        Err(_) => f64::NAN,
    };
    let d_eff = Mat::<f64>::from_fn(n, n, |i, j| lambda * dp[(i, j)] - dm[(i, j)]);
    let d_eff_min_eig = sym_eigs(&d_eff)[0];
    let coupled = Mat::<f64>::from_fn(n, n, |i, j| lambda * dp[(i, j)] + dm[(i, j)]);
    let coupled_min_eig = sym_eigs(&coupled)[0];

    let split = dofs.offsets[2];
    let total = dofs.n;
    let a = block(&system.matrix, 0..split, 0..split);
    let b = block(&system.matrix, 0..split, split..total);
    let c = block(&system.matrix, split..total, 0..split);
    let g = block(&system.matrix, split..total, split..total);
    let (alpha, ok) = min_sym_eig(&a);
    let norm_b = spectral_norm(&b, 500);
    let norm_c = spectral_norm(&c, 500);
    let sv = dense(&g).singular_values().unwrap_or_default();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let norm_g_inv = if smin > 0.0 { 1.0 / smin } else { f64::INFINITY };
    let schur_margin = alpha - norm_c * norm_g_inv * norm_b;
    Some((
        InterfaceDiagnostics {
            lambda_max,
            d_eff_min_eig,
            d_eff_positive_definite: d_eff_min_eig > 0.0,
            coupled_min_eig,
            alpha,
            norm_bulk_to_interface: norm_c,
            norm_interface_to_bulk: norm_b,
            norm_interface_inverse: norm_g_inv,
            schur_margin,
        },
        ok,
    ))
}

/// Symmetry, adjointness and interface-definiteness report for `system` with jump weight `lambda`.
pub fn interface_diagnostics(system: &BlockSystem, lambda: f64) -> DiagnosticsReport {
    let mut converged = true;
    let mut ww_min_eig = [None, None];
    let mut ww_asymmetry = [0.0; 2];
    let mut adj = [0.0; 2];
    for p in Phase::BOTH {
        let pi = p.index();
        let cells = &system.dofs.omega_cells[pi];
        if cells.is_empty() {
            continue;
        }
        let ww = restrict(&system.blocks.ww[pi], cells, cells);
        let (lo, ok) = min_sym_eig(&ww);
        converged &= ok;
        ww_min_eig[pi] = Some(lo);
        ww_asymmetry[pi] = asymmetry(&system.blocks.ww[pi]);
        adj[pi] = adjointness(&system.blocks.gw[pi], &system.blocks.wg[pi]);
    }
    let interface = interface_part(system, lambda).map(|(d, ok)| {
        converged &= ok;
        d
    });
    DiagnosticsReport { ww_min_eig, ww_asymmetry, adjointness: adj, interface, converged }
}

//! Reduced geometric moments of a Cartesian grid cut by an implicit interface.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use super::grid::CartesianGrid;
use super::quadrature::{self, QuadParams};
use super::shapes::{LevelSet, Phase};

/// Relative threshold below which phase volumes, apertures and staggered volumes vanish.
pub const SNAP_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Pure(Phase),
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Pure(Phase),
    Mixed,
    /// Both phases absent: the face separates pure cells of opposite phases.
    Wall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMoments {
    pub kind: CellKind,
    pub volume: [f64; 2],
    /// Phase centroids; the cell center when the phase is empty.
    pub centroid: [[f64; 3]; 2],
    /// Measure of the phase cross-section through the phase centroid, per axis.
    pub section: [[f64; 3]; 2],
    /// Phase volume below and above the phase centroid, per axis.
    pub half: [[[f64; 2]; 3]; 2],
    pub gamma_measure: f64,
    pub gamma_centroid: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceMoments {
    pub kind: FaceKind,
    pub aperture: [f64; 2],
    /// Centroid of the wetted part of the face (face center when empty).
    pub centroid: [[f64; 3]; 2],
    /// Staggered volume between the adjacent phase centroids.
    pub staggered: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MomentDiagnostics {
    /// Cells where subdivision stopped at the depth limit before the linearity test passed.
    pub unconverged: Vec<usize>,
    /// Cells whose interface measure fell under the threshold and were made pure.
    pub demoted: usize,
    /// Faces where both phase apertures vanish.
    pub walls: usize,
    /// Faces with positive aperture whose staggered volume vanished.
    pub deactivated: usize,
}

#[derive(Debug, Clone)]
pub enum GeometryError {
    Unconverged { cells: Vec<usize> },
    BadTolerance(f64),
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::Unconverged { cells } => {
                let shown: Vec<String> = cells.iter().take(16).map(|c| c.to_string()).collect();
                write!(f, "moment quadrature did not converge in {} cell(s): {}", cells.len(), shown.join(", "))?;
                if cells.len() > 16 {
                    write!(f, ", ...")?;
                }
                Ok(())
            }
            GeometryError::BadTolerance(t) => write!(f, "quadrature tolerance must be positive, got {t}"),
        }
    }
}

impl std::error::Error for GeometryError {}

#[derive(Debug, Clone, Copy)]
pub struct MomentOptions {
    /// Linearity tolerance relative to the local cell size.
    pub tol: f64,
    /// Subdivision depth limit; defaults depend on the dimension.
    pub max_depth: Option<u32>,
    /// Fail instead of recording unconverged cells.
    pub strict: bool,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_depth: None, strict: false }
    }
}

impl MomentOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct MomentSet {
    pub grid: CartesianGrid,
    pub cells: Vec<CellMoments>,
    /// Faces normal to each axis; empty for unused axes.
    pub faces: [Vec<FaceMoments>; 3],
    pub diagnostics: MomentDiagnostics,
}

/// Per-cell and per-face tags derived from a moment set.
#[derive(Debug, Clone, PartialEq)]
pub struct CellClassification {
    pub cells: Vec<CellKind>,
    pub faces: [Vec<FaceKind>; 3],
}

impl CellClassification {
    pub fn count(&self, kind: CellKind) -> usize {
        self.cells.iter().filter(|&&k| k == kind).count()
    }
}

impl MomentSet {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn is_mixed(&self, c: usize) -> bool {
        self.cells[c].kind == CellKind::Mixed
    }

    pub fn is_active(&self, c: usize, p: Phase) -> bool {
        self.cells[c].volume[p.index()] > 0.0
    }

    pub fn mixed_cells(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&c| self.is_mixed(c)).collect()
    }

    pub fn active_cells(&self, p: Phase) -> Vec<usize> {
        (0..self.cells.len()).filter(|&c| self.is_active(c, p)).collect()
    }

    pub fn classification(&self) -> CellClassification {
        let mut faces: [Vec<FaceKind>; 3] = Default::default();
        for a in 0..self.dim() {
            faces[a] = self.faces[a].iter().map(|f| f.kind).collect();
        }
        CellClassification { cells: self.cells.iter().map(|c| c.kind).collect(), faces }
    }

    pub fn total_volume(&self, p: Phase) -> f64 {
        self.cells.iter().map(|c| c.volume[p.index()]).sum()
    }

    pub fn total_interface(&self) -> f64 {
        self.cells.iter().map(|c| c.gamma_measure).sum()
    }

    /// Writes one line per cell with volumes, centroids, apertures of the low faces,
    /// sections, low-face staggered volumes and interface data.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let d = self.dim();
        let axes = ["x", "y", "z"];
        let idx = ["i", "j", "k"];
        let mut head: Vec<String> = idx[..d].iter().map(|s| s.to_string()).collect();
        head.push("V-".into());
        head.push("V+".into());
        for s in ["-", "+"] {
            for ax in &axes[..d] {
                head.push(format!("{ax}{s}"));
            }
        }
        for tag in ["A", "B", "W"] {
            for a in 1..=d {
                for s in ["-", "+"] {
                    head.push(format!("{tag}{a}{s}"));
                }
            }
        }
        head.push("gamma_measure".into());
        for ax in &axes[..d] {
            head.push(format!("gamma_c{ax}"));
        }
        writeln!(w, "{}", head.join(","))?;
        for (c, cm) in self.cells.iter().enumerate() {
            let ijk = self.grid.cell_ijk(c);
            let mut row: Vec<String> = ijk[..d].iter().map(|v| v.to_string()).collect();
            row.push(format!("{:.17e}", cm.volume[0]));
            row.push(format!("{:.17e}", cm.volume[1]));
            for p in 0..2 {
                for a in 0..d {
                    row.push(format!("{:.17e}", cm.centroid[p][a]));
                }
            }
            for a in 0..d {
                let f = &self.faces[a][self.grid.cell_face(c, a, 0)];
                row.push(format!("{:.17e}", f.aperture[0]));
                row.push(format!("{:.17e}", f.aperture[1]));
            }
            for a in 0..d {
                row.push(format!("{:.17e}", cm.section[0][a]));
                row.push(format!("{:.17e}", cm.section[1][a]));
            }
            for a in 0..d {
                let f = &self.faces[a][self.grid.cell_face(c, a, 0)];
                row.push(format!("{:.17e}", f.staggered[0]));
                row.push(format!("{:.17e}", f.staggered[1]));
            }
            row.push(format!("{:.17e}", cm.gamma_measure));
            for a in 0..d {
                row.push(format!("{:.17e}", cm.gamma_centroid[a]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn params_for(dim: usize, h: f64, opts: &MomentOptions) -> QuadParams {
    let depth = opts.max_depth.unwrap_or(match dim {
        3 => 4,
        _ => 8,
    });
    QuadParams { max_depth: depth, lin_tol: opts.tol * h, min_len: h * 2f64.powi(-12), root_tol: 0.0 }
}

fn embed(fixed: usize, value: f64, free: [usize; 2], uv: [f64; 2]) -> [f64; 3] {
    let mut x = [0.0; 3];
    x[fixed] = value;
    x[free[0]] = uv[0];
    x[free[1]] = uv[1];
    x
}

fn other_axes(axis: usize) -> [usize; 2] {
    match axis {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

/// Measure of each phase on the axis-normal section `x_axis = value` clipped to `[lo, hi]`.
fn section_measure<L: LevelSet + ?Sized>(
    ls: &L,
    dim: usize,
    axis: usize,
    value: f64,
    lo: [f64; 3],
    hi: [f64; 3],
    qp: &QuadParams,
) -> ([f64; 2], [[f64; 3]; 2]) {
    let mut base = [0.0; 3];
    base[axis] = value;
    match dim {
        1 => {
            let ph = Phase::of(quadrature::snap(ls.value(base)));
            let mut m = [0.0; 2];
            m[ph.index()] = 1.0;
            (m, [base, base])
        }
        2 => {
            let t = 1 - axis;
            let f = |s: f64| {
                let mut x = base;
                x[t] = s;
                ls.value(x)
            };
            let vb = |s: f64, r: f64| {
                let mut x = base;
                x[t] = s;
                ls.variation(x, r)
            };
            let lm = quadrature::line_measure(&f, &vb, lo[t], hi[t], qp);
            let mut cen = [base, base];
            for p in 0..2 {
                cen[p][t] = if lm.len[p] > 0.0 { lm.moment[p] / lm.len[p] } else { 0.5 * (lo[t] + hi[t]) };
            }
            (lm.len, cen)
        }
        _ => {
            let free = other_axes(axis);
            let f = |uv: [f64; 2]| ls.value(embed(axis, value, free, uv));
            let vb = |uv: [f64; 2], r: f64| ls.variation(embed(axis, value, free, uv), r);
            let am = quadrature::area_moments(
                &f,
                &vb,
                [lo[free[0]], lo[free[1]]],
                [hi[free[0]], hi[free[1]]],
                qp,
                false,
            );
            let mut cen = [base, base];
            for p in 0..2 {
                for (k, &a) in free.iter().enumerate() {
                    cen[p][a] = if am.area[p] > 0.0 {
                        am.moment[p][k] / am.area[p]
                    } else {
                        0.5 * (lo[a] + hi[a])
                    };
                }
            }
            (am.area, cen)
        }
    }
}

struct RawCell {
    moments: CellMoments,
    converged: bool,
    demoted: bool,
}

fn pure_cell(grid: &CartesianGrid, c: usize, ph: Phase) -> CellMoments {
    let d = grid.dim();
    let center = grid.cell_center(c);
    let v = grid.cell_volume(c);
    let mut m = CellMoments {
        kind: CellKind::Pure(ph),
        volume: [0.0; 2],
        centroid: [center, center],
        section: [[0.0; 3]; 2],
        half: [[[0.0; 2]; 3]; 2],
        gamma_measure: 0.0,
        gamma_centroid: center,
    };
    let p = ph.index();
    m.volume[p] = v;
    for a in 0..d {
        m.section[p][a] = grid.cell_section(c, a);
        m.half[p][a] = [0.5 * v, 0.5 * v];
    }
    m
}

fn cell_moments<L: LevelSet + ?Sized>(grid: &CartesianGrid, ls: &L, c: usize, opts: &MomentOptions) -> RawCell {
    let d = grid.dim();
    let (lo, hi) = grid.cell_bounds(c);
    let center = grid.cell_center(c);
    let vcell = grid.cell_volume(c);
    let h = (0..d).map(|a| hi[a] - lo[a]).fold(f64::INFINITY, f64::min);
    let qp = params_for(d, h, opts);

    let mut volume: [f64; 2];
    let mut first = [[0.0; 3]; 2];
    let gamma;
    let mut gamma_c = center;
    let mut converged = true;
    let mut leaves2 = Vec::new();
    let mut leaves3 = Vec::new();
    match d {
        1 => {
            let f = |s: f64| ls.value([s, 0.0, 0.0]);
            let vb = |s: f64, r: f64| ls.variation([s, 0.0, 0.0], r);
            let lm = quadrature::line_measure(&f, &vb, lo[0], hi[0], &qp);
            volume = lm.len;
            first[0][0] = lm.moment[0];
            first[1][0] = lm.moment[1];
            gamma = lm.roots.len() as f64;
            if !lm.roots.is_empty() {
                gamma_c[0] = lm.roots.iter().sum::<f64>() / gamma;
            }
        }
        2 => {
            let f = |p: [f64; 2]| ls.value([p[0], p[1], 0.0]);
            let vb = |p: [f64; 2], r: f64| ls.variation([p[0], p[1], 0.0], r);
            let am = quadrature::area_moments(&f, &vb, [lo[0], lo[1]], [hi[0], hi[1]], &qp, true);
            volume = am.area;
            for p in 0..2 {
                first[p][0] = am.moment[p][0];
                first[p][1] = am.moment[p][1];
            }
            gamma = am.gamma_len;
            if gamma > 0.0 {
                gamma_c[0] = am.gamma_moment[0] / gamma;
                gamma_c[1] = am.gamma_moment[1] / gamma;
            }
            converged = am.converged;
            leaves2 = am.leaves;
        }
        _ => {
            let f = |p: [f64; 3]| ls.value(p);
            let vb = |p: [f64; 3], r: f64| ls.variation(p, r);
            let vm = quadrature::volume_moments(&f, &vb, lo, hi, &qp, true);
            volume = vm.vol;
            first = vm.moment;
            gamma = vm.gamma_area;
            if gamma > 0.0 {
                for a in 0..3 {
                    gamma_c[a] = vm.gamma_moment[a] / gamma;
                }
            }
            converged = vm.converged;
            leaves3 = vm.leaves;
        }
    }

    let gamma_floor = SNAP_REL * h.powi(d as i32 - 1);
    let gamma_floor = if d == 1 { 0.5 } else { gamma_floor };
    if gamma < gamma_floor {
        let ph = if volume[0] > volume[1] { Phase::Minus } else { Phase::Plus };
        let demoted = volume[0] > SNAP_REL * vcell && volume[1] > SNAP_REL * vcell;
        return RawCell { moments: pure_cell(grid, c, ph), converged: true, demoted };
    }

    for p in 0..2 {
        if volume[p] < SNAP_REL * vcell {
            volume[p] = 0.0;
        }
    }
    let mut m = CellMoments {
        kind: CellKind::Mixed,
        volume,
        centroid: [center, center],
        section: [[0.0; 3]; 2],
        half: [[[0.0; 2]; 3]; 2],
        gamma_measure: gamma,
        gamma_centroid: gamma_c,
    };
    for ph in Phase::BOTH {
        let p = ph.index();
        if volume[p] == 0.0 {
            continue;
        }
        for a in 0..d {
            m.centroid[p][a] = (first[p][a] / volume[p]).clamp(lo[a], hi[a]);
        }
        for a in 0..d {
            let xc = m.centroid[p][a];
            m.section[p][a] = section_measure(ls, d, a, xc, lo, hi, &qp).0[p];
            let split = match d {
                1 => {
                    let f = |s: f64| ls.value([s, 0.0, 0.0]);
                    let vb = |s: f64, r: f64| ls.variation([s, 0.0, 0.0], r);
                    let below = quadrature::line_measure(&f, &vb, lo[0], xc, &qp).len[p];
                    [below, (volume[p] - below).max(0.0)]
                }
                2 => quadrature::split_area(&leaves2, ph, a, xc),
                _ => quadrature::split_volume(&leaves3, ph, a, xc),
            };
            m.half[p][a] = split;
        }
    }
    RawCell { moments: m, converged, demoted: false }
}

fn face_moments<L: LevelSet + ?Sized>(
    grid: &CartesianGrid,
    ls: &L,
    cells: &[CellMoments],
    axis: usize,
    f: usize,
    opts: &MomentOptions,
) -> (FaceMoments, bool, usize) {
    let d = grid.dim();
    let (lo, hi) = grid.face_bounds(axis, f);
    let mut center = [0.0; 3];
    for a in 0..d {
        center[a] = 0.5 * (lo[a] + hi[a]);
    }
    let full = grid.face_measure(axis, f);
    let (c0, c1) = grid.face_cells(axis, f);
    let adjacent: Vec<&CellMoments> = [c0, c1].iter().flatten().map(|&c| &cells[c]).collect();

    let pure_sides: Vec<Phase> = adjacent
        .iter()
        .filter_map(|cm| match cm.kind {
            CellKind::Pure(p) => Some(p),
            CellKind::Mixed => None,
        })
        .collect();

    let mut aperture = [0.0; 2];
    let mut centroid = [center, center];
    let mut wall = false;
    if pure_sides.len() == 2 && pure_sides[0] != pure_sides[1] {
        wall = true;
    } else if let Some(&p) = pure_sides.first() {
        aperture[p.index()] = full;
    } else {
        let h = (0..d).filter(|&a| a != axis).map(|a| hi[a] - lo[a]).fold(grid.max_spacing(), f64::min);
        let qp = params_for(d, h, opts);
        let (m, cen) = section_measure(ls, d, axis, lo[axis], lo, hi, &qp);
        aperture = m;
        centroid = cen;
        for p in 0..2 {
            if aperture[p] < SNAP_REL * full {
                aperture[p] = 0.0;
                aperture[1 - p] = full;
                centroid[1 - p] = center;
            }
        }
        for p in 0..2 {
            if adjacent.iter().all(|cm| cm.volume[p] == 0.0) {
                aperture[p] = 0.0;
            }
        }
    }
    for p in 0..2 {
        if aperture[p] == 0.0 {
            centroid[p] = center;
        }
    }

    let mut staggered = [0.0; 2];
    let mut deactivated = 0;
    if wall {
        return (FaceMoments { kind: FaceKind::Wall, aperture, centroid, staggered }, true, 0);
    }
    let vref = [c0, c1].iter().flatten().map(|&c| grid.cell_volume(c)).fold(f64::INFINITY, f64::min);
    for p in 0..2 {
        let mut w = 0.0;
        if let Some(c) = c0 {
            w += cells[c].half[p][axis][1];
        }
        if let Some(c) = c1 {
            w += cells[c].half[p][axis][0];
        }
        if w < SNAP_REL * vref {
            if aperture[p] > 0.0 {
                deactivated += 1;
            }
            w = 0.0;
        }
        staggered[p] = w;
    }

    let kind = if wall {
        FaceKind::Wall
    } else if aperture[1] == 0.0 && aperture[0] > 0.0 {
        FaceKind::Pure(Phase::Minus)
    } else if aperture[0] == 0.0 && aperture[1] > 0.0 {
        FaceKind::Pure(Phase::Plus)
    } else if aperture[0] == 0.0 && aperture[1] == 0.0 {
        FaceKind::Wall
    } else {
        FaceKind::Mixed
    };
    (FaceMoments { kind, aperture, centroid, staggered }, kind == FaceKind::Wall, deactivated)
}

/// Computes the moment set of `grid` cut by the level set `ls`.
pub fn compute_moments<L: LevelSet + ?Sized>(
    grid: &CartesianGrid,
    ls: &L,
    opts: &MomentOptions,
) -> Result<MomentSet, GeometryError> {
    if !(opts.tol > 0.0) {
        return Err(GeometryError::BadTolerance(opts.tol));
    }
    let raw: Vec<RawCell> = (0..grid.n_cells()).into_par_iter().map(|c| cell_moments(grid, ls, c, opts)).collect();
    let mut diagnostics = MomentDiagnostics::default();
    let mut cells = Vec::with_capacity(raw.len());
    for (c, r) in raw.into_iter().enumerate() {
        if !r.converged {
            diagnostics.unconverged.push(c);
        }
        if r.demoted {
            diagnostics.demoted += 1;
        }
        cells.push(r.moments);
    }
    if opts.strict && !diagnostics.unconverged.is_empty() {
        return Err(GeometryError::Unconverged { cells: diagnostics.unconverged });
    }
    let mut faces: [Vec<FaceMoments>; 3] = Default::default();
    for axis in 0..grid.dim() {
        let out: Vec<(FaceMoments, bool, usize)> = (0..grid.n_faces(axis))
            .into_par_iter()
            .map(|f| face_moments(grid, ls, &cells, axis, f, opts))
            .collect();
        for (fm, wall, deact) in out {
            if wall {
                diagnostics.walls += 1;
            }
            diagnostics.deactivated += deact;
            faces[axis].push(fm);
        }
    }
    Ok(MomentSet { grid: grid.clone(), cells, faces, diagnostics })
}

/// Cell tags of `grid` against `ls`, consistent with [`compute_moments`].
pub fn classify<L: LevelSet + ?Sized>(grid: &CartesianGrid, ls: &L, opts: &MomentOptions) -> Result<CellClassification, GeometryError> {
    Ok(compute_moments(grid, ls, opts)?.classification())
}

/// Interface measure and centroid inside one cell. Returns `None` when the
/// cell is not cut (including grazing contacts below the snapping threshold).
pub fn interface_measure_centroid<L: LevelSet + ?Sized>(
    grid: &CartesianGrid,
    ls: &L,
    c: usize,
    opts: &MomentOptions,
) -> Option<(f64, [f64; 3])> {
    let r = cell_moments(grid, ls, c, opts);
    match r.moments.kind {
        CellKind::Mixed => Some((r.moments.gamma_measure, r.moments.gamma_centroid)),
        CellKind::Pure(_) => None,
    }
}

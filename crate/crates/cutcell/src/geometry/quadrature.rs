//! Subdivision quadrature for phase measures of a level set.
//!
//! Regions are split recursively until the level set is certainly of one sign
//! or is close enough to linear; linear leaves are clipped exactly (triangles
//! in 2D, tetrahedra in 3D). Line measures use sign changes refined by
//! bisection.

use super::shapes::Phase;

#[derive(Debug, Clone, Copy)]
pub struct QuadParams {
    /// Maximum subdivision depth for area/volume kernels.
    pub max_depth: u32,
    /// Absolute tolerance on the deviation from linearity inside a leaf.
    pub lin_tol: f64,
    /// Minimum interval length when bracketing roots along a line.
    pub min_len: f64,
    /// Absolute tolerance on root positions.
    pub root_tol: f64,
}

/// Level-set value with exact zeros moved to the `Plus` side.
#[inline]
pub fn snap(v: f64) -> f64 {
    if v == 0.0 {
        f64::MIN_POSITIVE
    } else {
        v
    }
}

#[inline]
fn surely_pure(v: f64, bound: f64) -> bool {
    v.abs() > bound * (1.0 + 1e-9) + 1e-300
}

// ---------------------------------------------------------------- 1D ----

#[derive(Debug, Clone, Default)]
pub struct LineMeasure {
    pub len: [f64; 2],
    pub moment: [f64; 2],
    pub roots: Vec<f64>,
}

/// Phase lengths of `[a, b]` for the function `f` with variation bound `vb`.
pub fn line_measure<F, V>(f: &F, vb: &V, a: f64, b: f64, p: &QuadParams) -> LineMeasure
where
    F: Fn(f64) -> f64,
    V: Fn(f64, f64) -> f64,
{
    let fa = snap(f(a));
    let fb = snap(f(b));
    let mut roots = Vec::new();
    line_roots(f, vb, a, b, fa, fb, p, &mut roots);
    let mut out = LineMeasure::default();
    let mut phase = Phase::of(fa);
    let mut start = a;
    for &r in roots.iter().chain(std::iter::once(&b)) {
        let l = r - start;
        out.len[phase.index()] += l;
        out.moment[phase.index()] += l * 0.5 * (start + r);
        start = r;
        phase = phase.other();
    }
    out.roots = roots;
    out
}

#[allow(clippy::too_many_arguments)]
fn line_roots<F, V>(f: &F, vb: &V, a: f64, b: f64, fa: f64, fb: f64, p: &QuadParams, out: &mut Vec<f64>)
where
    F: Fn(f64) -> f64,
    V: Fn(f64, f64) -> f64,
{
    let m = 0.5 * (a + b);
    let fm = snap(f(m));
    if surely_pure(fm, vb(m, 0.5 * (b - a))) {
        return;
    }
    if b - a <= p.min_len {
        if (fa < 0.0) != (fm < 0.0) {
            out.push(bisect(f, a, m, fa, p.root_tol));
        }
        if (fm < 0.0) != (fb < 0.0) {
            out.push(bisect(f, m, b, fm, p.root_tol));
        }
        return;
    }
    line_roots(f, vb, a, m, fa, fm, p, out);
    line_roots(f, vb, m, b, fm, fb, p, out);
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, flo: f64, tol: f64) -> f64 {
    let neg_lo = flo < 0.0;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if (snap(f(m)) < 0.0) == neg_lo {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------- 2D ----

type P2 = [f64; 2];

#[derive(Debug, Clone)]
pub enum Leaf2 {
    Pure { lo: P2, hi: P2, phase: Phase },
    Cut { lo: P2, hi: P2, vals: [f64; 5], area: [f64; 2] },
}

#[derive(Debug, Clone, Default)]
pub struct AreaMoments {
    pub area: [f64; 2],
    pub moment: [P2; 2],
    pub gamma_len: f64,
    pub gamma_moment: P2,
    pub converged: bool,
    pub leaves: Vec<Leaf2>,
}

fn rect_corners(lo: P2, hi: P2) -> [P2; 4] {
    [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]]
}

/// Clip a convex polygon to the part where the linear interpolant of `vals` has phase `keep`.
fn clip_polygon(poly: &[P2], vals: &[f64], keep: Phase) -> Vec<P2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let j = (i + 1) % n;
        let (vi, vj) = (vals[i], vals[j]);
        let ini = Phase::of(vi) == keep;
        let inj = Phase::of(vj) == keep;
        if ini {
            out.push(poly[i]);
        }
        if ini != inj {
            let t = vi / (vi - vj);
            out.push([poly[i][0] + t * (poly[j][0] - poly[i][0]), poly[i][1] + t * (poly[j][1] - poly[i][1])]);
        }
    }
    out
}

/// Area and first moment of a simple polygon (orientation independent).
fn polygon_moments(poly: &[P2]) -> (f64, P2) {
    if poly.len() < 3 {
        return (0.0, [0.0; 2]);
    }
    let o = poly[0];
    let mut a2 = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    for k in 1..poly.len() - 1 {
        let p = [poly[k][0] - o[0], poly[k][1] - o[1]];
        let q = [poly[k + 1][0] - o[0], poly[k + 1][1] - o[1]];
        let cr = p[0] * q[1] - p[1] * q[0];
        a2 += cr;
        mx += cr * (p[0] + q[0]) / 3.0;
        my += cr * (p[1] + q[1]) / 3.0;
    }
    let area = 0.5 * a2;
    let s = if area < 0.0 { -1.0 } else { 1.0 };
    let area = area.abs();
    (area, [s * 0.5 * mx + area * o[0], s * 0.5 * my + area * o[1]])
}

fn triangle_fan(lo: P2, hi: P2, vals: &[f64; 5]) -> [([P2; 3], [f64; 3]); 4] {
    let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let k = rect_corners(lo, hi);
    let mut tris = [([[0.0; 2]; 3], [0.0; 3]); 4];
    for e in 0..4 {
        let n = (e + 1) % 4;
        tris[e] = ([c, k[e], k[n]], [vals[4], vals[e], vals[n]]);
    }
    tris
}

/// Phase areas, first moments and interface length of the rectangle `[lo, hi]`.
pub fn area_moments<F, V>(f: &F, vb: &V, lo: P2, hi: P2, p: &QuadParams, keep_leaves: bool) -> AreaMoments
where
    F: Fn(P2) -> f64,
    V: Fn(P2, f64) -> f64,
{
    let mut out = AreaMoments { converged: true, ..Default::default() };
    area_rec(f, vb, lo, hi, 0, p, keep_leaves, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn area_rec<F, V>(f: &F, vb: &V, lo: P2, hi: P2, depth: u32, p: &QuadParams, keep: bool, out: &mut AreaMoments)
where
    F: Fn(P2) -> f64,
    V: Fn(P2, f64) -> f64,
{
    let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let (wx, wy) = (hi[0] - lo[0], hi[1] - lo[1]);
    let fc = snap(f(c));
    if surely_pure(fc, vb(c, 0.5 * wx.hypot(wy))) {
        let ph = Phase::of(fc);
        let a = wx * wy;
        out.area[ph.index()] += a;
        out.moment[ph.index()][0] += a * c[0];
        out.moment[ph.index()][1] += a * c[1];
        if keep {
            out.leaves.push(Leaf2::Pure { lo, hi, phase: ph });
        }
        return;
    }
    let k = rect_corners(lo, hi);
    let vals = [snap(f(k[0])), snap(f(k[1])), snap(f(k[2])), snap(f(k[3])), fc];
    let nonlin = (fc - 0.25 * (vals[0] + vals[1] + vals[2] + vals[3])).abs();
    if depth < p.max_depth && nonlin > p.lin_tol {
        let mid = c;
        area_rec(f, vb, lo, mid, depth + 1, p, keep, out);
        area_rec(f, vb, [mid[0], lo[1]], [hi[0], mid[1]], depth + 1, p, keep, out);
        area_rec(f, vb, mid, hi, depth + 1, p, keep, out);
        area_rec(f, vb, [lo[0], mid[1]], [mid[0], hi[1]], depth + 1, p, keep, out);
        return;
    }
    if nonlin > p.lin_tol {
        out.converged = false;
    }
    let mut leaf_area = [0.0; 2];
    for (tri, tv) in triangle_fan(lo, hi, &vals) {
        for ph in Phase::BOTH {
            let poly = clip_polygon(&tri, &tv, ph);
            let (a, m) = polygon_moments(&poly);
            leaf_area[ph.index()] += a;
            out.area[ph.index()] += a;
            out.moment[ph.index()][0] += m[0];
            out.moment[ph.index()][1] += m[1];
        }
        let mut pts = [[0.0; 2]; 2];
        let mut np = 0;
        for e in 0..3 {
            let n = (e + 1) % 3;
            if (tv[e] < 0.0) != (tv[n] < 0.0) && np < 2 {
                let t = tv[e] / (tv[e] - tv[n]);
                pts[np] = [tri[e][0] + t * (tri[n][0] - tri[e][0]), tri[e][1] + t * (tri[n][1] - tri[e][1])];
                np += 1;
            }
        }
        if np == 2 {
            let l = (pts[1][0] - pts[0][0]).hypot(pts[1][1] - pts[0][1]);
            out.gamma_len += l;
            out.gamma_moment[0] += l * 0.5 * (pts[0][0] + pts[1][0]);
            out.gamma_moment[1] += l * 0.5 * (pts[0][1] + pts[1][1]);
        }
    }
    if keep {
        out.leaves.push(Leaf2::Cut { lo, hi, vals, area: leaf_area });
    }
}

/// Area of phase `ph` in the stored leaves lying below (`[0]`) and above (`[1]`)
/// the line `x_axis = c`.
pub fn split_area(leaves: &[Leaf2], ph: Phase, axis: usize, c: f64) -> [f64; 2] {
    let mut below = 0.0;
    let mut above = 0.0;
    for leaf in leaves {
        match leaf {
            Leaf2::Pure { lo, hi, phase } => {
                if *phase != ph {
                    continue;
                }
                let other = 1 - axis;
                let w = hi[other] - lo[other];
                let b = (c.clamp(lo[axis], hi[axis]) - lo[axis]) * w;
                below += b;
                above += (hi[axis] - lo[axis]) * w - b;
            }
            Leaf2::Cut { lo, hi, vals, area } => {
                let a = area[ph.index()];
                if a == 0.0 {
                    continue;
                }
                if hi[axis] <= c {
                    below += a;
                } else if lo[axis] >= c {
                    above += a;
                } else {
                    let mut b = 0.0;
                    for (tri, tv) in triangle_fan(*lo, *hi, vals) {
                        let poly = clip_polygon(&tri, &tv, ph);
                        if poly.len() < 3 {
                            continue;
                        }
                        let pv: Vec<f64> = poly.iter().map(|q| snap(q[axis] - c)).collect();
                        let part = clip_polygon(&poly, &pv, Phase::Minus);
                        b += polygon_moments(&part).0;
                    }
                    let b = b.min(a);
                    below += b;
                    above += a - b;
                }
            }
        }
    }
    [below, above]
}

// ---------------------------------------------------------------- 3D ----

type P3 = [f64; 3];

#[derive(Debug, Clone)]
pub enum Leaf3 {
    Pure { lo: P3, hi: P3, phase: Phase },
    Cut { lo: P3, hi: P3, vals: [f64; 8], vol: [f64; 2] },
}

#[derive(Debug, Clone, Default)]
pub struct VolumeMoments {
    pub vol: [f64; 2],
    pub moment: [P3; 2],
    pub gamma_area: f64,
    pub gamma_moment: P3,
    pub converged: bool,
    pub leaves: Vec<Leaf3>,
}

fn box_corner(lo: P3, hi: P3, k: usize) -> P3 {
    [
        if k & 1 == 0 { lo[0] } else { hi[0] },
        if k & 2 == 0 { lo[1] } else { hi[1] },
        if k & 4 == 0 { lo[2] } else { hi[2] },
    ]
}

/// Six tetrahedra sharing the main diagonal of the box (corner 0 to corner 7).
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn tet_volume(t: &[P3; 4]) -> f64 {
    dot(sub(t[1], t[0]), cross(sub(t[2], t[0]), sub(t[3], t[0]))).abs() / 6.0
}

fn lerp3(a: P3, b: P3, va: f64, vb: f64) -> P3 {
    let t = va / (va - vb);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
}

/// Decomposition of the part of a tetrahedron in phase `ph` into at most three
/// tetrahedra, for the linear interpolant of `v`.
fn tet_part(t: &[P3; 4], v: &[f64; 4], ph: Phase) -> ([[P3; 4]; 3], usize) {
    let mut inside = [0usize; 4];
    let mut outside = [0usize; 4];
    let (mut ni, mut no) = (0, 0);
    for k in 0..4 {
        if Phase::of(v[k]) == ph {
            inside[ni] = k;
            ni += 1;
        } else {
            outside[no] = k;
            no += 1;
        }
    }
    let mut out = [[[0.0; 3]; 4]; 3];
    let x = |i: usize, o: usize| lerp3(t[i], t[o], v[i], v[o]);
    match ni {
        0 => (out, 0),
        4 => {
            out[0] = *t;
            (out, 1)
        }
        1 => {
            let i = inside[0];
            out[0] = [t[i], x(i, outside[0]), x(i, outside[1]), x(i, outside[2])];
            (out, 1)
        }
        3 => {
            let o = outside[0];
            let (a0, a1, a2) = (t[inside[0]], t[inside[1]], t[inside[2]]);
            let (b0, b1, b2) = (x(inside[0], o), x(inside[1], o), x(inside[2], o));
            out[0] = [a0, a1, a2, b0];
            out[1] = [a1, a2, b0, b1];
            out[2] = [a2, b0, b1, b2];
            (out, 3)
        }
        _ => {
            let (i0, i1) = (inside[0], inside[1]);
            let (o0, o1) = (outside[0], outside[1]);
            let (a0, a1, a2) = (t[i0], x(i0, o0), x(i0, o1));
            let (b0, b1, b2) = (t[i1], x(i1, o0), x(i1, o1));
            out[0] = [a0, a1, a2, b0];
            out[1] = [a1, a2, b0, b1];
            out[2] = [a2, b0, b1, b2];
            (out, 3)
        }
    }
}

/// Interface polygon inside a tetrahedron: area and first moment.
fn tet_interface(t: &[P3; 4], v: &[f64; 4]) -> (f64, P3) {
    let neg: Vec<usize> = (0..4).filter(|&k| v[k] < 0.0).collect();
    let pos: Vec<usize> = (0..4).filter(|&k| v[k] >= 0.0).collect();
    let x = |i: usize, o: usize| lerp3(t[i], t[o], v[i], v[o]);
    let tri = |a: P3, b: P3, c: P3| -> (f64, P3) {
        let cr = cross(sub(b, a), sub(c, a));
        let ar = 0.5 * dot(cr, cr).sqrt();
        (ar, [ar * (a[0] + b[0] + c[0]) / 3.0, ar * (a[1] + b[1] + c[1]) / 3.0, ar * (a[2] + b[2] + c[2]) / 3.0])
    };
    match (neg.len(), pos.len()) {
        (1, 3) => tri(x(neg[0], pos[0]), x(neg[0], pos[1]), x(neg[0], pos[2])),
        (3, 1) => tri(x(pos[0], neg[0]), x(pos[0], neg[1]), x(pos[0], neg[2])),
        (2, 2) => {
            let p00 = x(neg[0], pos[0]);
            let p01 = x(neg[0], pos[1]);
            let p11 = x(neg[1], pos[1]);
            let p10 = x(neg[1], pos[0]);
            let (a1, m1) = tri(p00, p01, p11);
            let (a2, m2) = tri(p00, p11, p10);
            (a1 + a2, [m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2]])
        }
        _ => (0.0, [0.0; 3]),
    }
}

/// Phase volumes, first moments and interface area of the box `[lo, hi]`.
pub fn volume_moments<F, V>(f: &F, vb: &V, lo: P3, hi: P3, p: &QuadParams, keep_leaves: bool) -> VolumeMoments
where
    F: Fn(P3) -> f64,
    V: Fn(P3, f64) -> f64,
{
    let mut out = VolumeMoments { converged: true, ..Default::default() };
    volume_rec(f, vb, lo, hi, 0, p, keep_leaves, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn volume_rec<F, V>(f: &F, vb: &V, lo: P3, hi: P3, depth: u32, p: &QuadParams, keep: bool, out: &mut VolumeMoments)
where
    F: Fn(P3) -> f64,
    V: Fn(P3, f64) -> f64,
{
    let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])];
    let w = sub(hi, lo);
    let fc = snap(f(c));
    if surely_pure(fc, vb(c, 0.5 * dot(w, w).sqrt())) {
        let ph = Phase::of(fc);
        let v = w[0] * w[1] * w[2];
        out.vol[ph.index()] += v;
        for a in 0..3 {
            out.moment[ph.index()][a] += v * c[a];
        }
        if keep {
            out.leaves.push(Leaf3::Pure { lo, hi, phase: ph });
        }
        return;
    }
    let mut vals = [0.0; 8];
    for (k, val) in vals.iter_mut().enumerate() {
        *val = snap(f(box_corner(lo, hi, k)));
    }
    let nonlin = (fc - vals.iter().sum::<f64>() / 8.0).abs();
    if depth < p.max_depth && nonlin > p.lin_tol {
        for k in 0..8 {
            let mut clo = lo;
            let mut chi = c;
            for a in 0..3 {
                if (k >> a) & 1 == 1 {
                    clo[a] = c[a];
                    chi[a] = hi[a];
                }
            }
            volume_rec(f, vb, clo, chi, depth + 1, p, keep, out);
        }
        return;
    }
    if nonlin > p.lin_tol {
        out.converged = false;
    }
    let mut leaf_vol = [0.0; 2];
    for tet in KUHN.iter() {
        let t = [
            box_corner(lo, hi, tet[0]),
            box_corner(lo, hi, tet[1]),
            box_corner(lo, hi, tet[2]),
            box_corner(lo, hi, tet[3]),
        ];
        let tv = [vals[tet[0]], vals[tet[1]], vals[tet[2]], vals[tet[3]]];
        for ph in Phase::BOTH {
            let (pieces, n) = tet_part(&t, &tv, ph);
            for piece in pieces.iter().take(n) {
                let v = tet_volume(piece);
                leaf_vol[ph.index()] += v;
                out.vol[ph.index()] += v;
                for a in 0..3 {
                    out.moment[ph.index()][a] +=
                        v * 0.25 * (piece[0][a] + piece[1][a] + piece[2][a] + piece[3][a]);
                }
            }
        }
        let (ga, gm) = tet_interface(&t, &tv);
        out.gamma_area += ga;
        for a in 0..3 {
            out.gamma_moment[a] += gm[a];
        }
    }
    if keep {
        out.leaves.push(Leaf3::Cut { lo, hi, vals, vol: leaf_vol });
    }
}

/// Volume of phase `ph` in the stored leaves below and above the plane `x_axis = c`.
pub fn split_volume(leaves: &[Leaf3], ph: Phase, axis: usize, c: f64) -> [f64; 2] {
    let mut below = 0.0;
    let mut above = 0.0;
    for leaf in leaves {
        match leaf {
            Leaf3::Pure { lo, hi, phase } => {
                if *phase != ph {
                    continue;
                }
                let mut s = 1.0;
                for a in 0..3 {
                    if a != axis {
                        s *= hi[a] - lo[a];
                    }
                }
                let b = (c.clamp(lo[axis], hi[axis]) - lo[axis]) * s;
                below += b;
                above += (hi[axis] - lo[axis]) * s - b;
            }
            Leaf3::Cut { lo, hi, vals, vol } => {
                let v = vol[ph.index()];
                if v == 0.0 {
                    continue;
                }
                if hi[axis] <= c {
                    below += v;
                } else if lo[axis] >= c {
                    above += v;
                } else {
                    let mut b = 0.0;
                    for tet in KUHN.iter() {
                        let t = [
                            box_corner(*lo, *hi, tet[0]),
                            box_corner(*lo, *hi, tet[1]),
                            box_corner(*lo, *hi, tet[2]),
                            box_corner(*lo, *hi, tet[3]),
                        ];
                        let tv = [vals[tet[0]], vals[tet[1]], vals[tet[2]], vals[tet[3]]];
                        let (pieces, n) = tet_part(&t, &tv, ph);
                        for piece in pieces.iter().take(n) {
                            let pv = [
                                snap(piece[0][axis] - c),
                                snap(piece[1][axis] - c),
                                snap(piece[2][axis] - c),
                                snap(piece[3][axis] - c),
                            ];
                            let (sub_pieces, m) = tet_part(piece, &pv, Phase::Minus);
                            b += sub_pieces.iter().take(m).map(tet_volume).sum::<f64>();
                        }
                    }
                    let b = b.min(v);
                    below += b;
                    above += v - b;
                }
            }
        }
    }
    [below, above]
}

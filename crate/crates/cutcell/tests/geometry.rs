use std::f64::consts::PI;

use cutcell::geometry::*;
use proptest::prelude::*;

fn unit_cell() -> CartesianGrid {
    CartesianGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[1, 1]).unwrap()
}

#[test]
fn uniform_grid_spacing() {
    let g = CartesianGrid::uniform(&[0.0], &[4.0], &[8]).unwrap();
    assert_eq!(g.n_cells(), 8);
    assert!((g.spacing(0, 3) - 0.5).abs() < 1e-15);
}

#[test]
fn rejects_non_monotone_axis() {
    let err = CartesianGrid::new(vec![vec![0.0, 1.0, 0.5]]).unwrap_err();
    assert_eq!(err.to_string(), "axis 0 not increasing");
    assert!(CartesianGrid::new(vec![vec![0.0]]).is_err());
}

#[test]
fn square_cell_volumes() {
    let g = CartesianGrid::uniform(&[0.0, 0.0], &[8.0, 8.0], &[16, 16]).unwrap();
    assert!((0..g.n_cells()).all(|c| (g.cell_volume(c) - 0.25).abs() < 1e-15));
}

#[test]
fn classify_affine_1d() {
    let g = CartesianGrid::uniform(&[0.0], &[8.0], &[4]).unwrap();
    let cls = classify(&g, &HalfSpace::axis(0, 4.01), &MomentOptions::default()).unwrap();
    assert_eq!(
        cls.cells,
        vec![CellKind::Pure(Phase::Minus), CellKind::Pure(Phase::Minus), CellKind::Mixed, CellKind::Pure(Phase::Plus)]
    );
}

#[test]
fn classify_disk_matches_point_sampling() {
    let g = CartesianGrid::uniform(&[0.0, 0.0], &[8.0, 8.0], &[4, 4]).unwrap();
    let disk = Ball::new([4.0, 4.0, 0.0], 2.0, Phase::Minus);
    let cls = classify(&g, &disk, &MomentOptions::default()).unwrap();
    for c in 0..g.n_cells() {
        let (lo, hi) = g.cell_bounds(c);
        let n = 200;
        let (mut neg, mut pos) = (false, false);
        for i in 0..=n {
            for j in 0..=n {
                let x = [lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64, lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64, 0.0];
                if disk.value(x) < 0.0 {
                    neg = true;
                } else {
                    pos = true;
                }
            }
        }
        let sampled_mixed = neg && pos;
        assert_eq!(cls.cells[c] == CellKind::Mixed, sampled_mixed, "cell {c}");
    }
    let center: Vec<usize> = [(1, 1), (2, 1), (1, 2), (2, 2)].iter().map(|&(i, j)| g.cell_index([i, j, 0])).collect();
    assert!(center.iter().all(|&c| cls.cells[c] == CellKind::Mixed));
}

#[test]
fn classify_uniform_light() {
    let g = CartesianGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[3, 3]).unwrap();
    let cls = classify(&g, &Uniform(-1.0), &MomentOptions::default()).unwrap();
    assert_eq!(cls.count(CellKind::Pure(Phase::Minus)), 9);
}

#[test]
fn half_plane_moments() {
    let g = unit_cell();
    let m = compute_moments(&g, &HalfSpace::axis(0, 0.25), &MomentOptions::default()).unwrap();
    let c = &m.cells[0];
    assert!((c.volume[0] - 0.25).abs() < 1e-14);
    assert!((c.centroid[0][0] - 0.125).abs() < 1e-14);
    assert!((c.gamma_measure - 1.0).abs() < 1e-14);
    assert!((m.faces[0][0].aperture[0] - 1.0).abs() < 1e-14);
    assert_eq!(m.faces[0][1].aperture[0], 0.0);
    // section along y at the light centroid spans the whole light strip
    assert!((c.section[0][1] - 0.25).abs() < 1e-14);
    assert!((c.half[0][0][0] - 0.125).abs() < 1e-14);
}

#[test]
fn quarter_disk_area() {
    let g = unit_cell();
    let m = compute_moments(&g, &Ball::new([0.0; 3], 1.0, Phase::Minus), &MomentOptions::default()).unwrap();
    assert!((m.cells[0].volume[0] - 0.785398).abs() < 5e-6);
    // centroid of a quarter disk: 4/(3π)
    assert!((m.cells[0].centroid[0][0] - 4.0 / (3.0 * PI)).abs() < 1e-6);
}

#[test]
fn empty_phase_falls_back_to_center() {
    let g = unit_cell();
    let m = compute_moments(&g, &Uniform(1.0), &MomentOptions::default()).unwrap();
    let c = &m.cells[0];
    assert_eq!(c.volume[0], 0.0);
    assert_eq!(c.centroid[0], [0.5, 0.5, 0.0]);
    for a in 0..2 {
        assert!(m.faces[a].iter().all(|f| f.aperture[0] == 0.0));
    }
}

#[test]
fn vertical_segment_interface() {
    let g = unit_cell();
    let (len, c) = interface_measure_centroid(&g, &HalfSpace::axis(0, 0.25), 0, &MomentOptions::default()).unwrap();
    assert!((len - 1.0).abs() < 1e-14);
    assert!((c[0] - 0.25).abs() < 1e-14 && (c[1] - 0.5).abs() < 1e-14);
}

#[test]
fn grazing_contact_is_demoted() {
    let g = unit_cell();
    // disk touching the cell only at a corner
    let m = compute_moments(&g, &Ball::new([2.0, 2.0, 0.0], 2f64.sqrt(), Phase::Minus), &MomentOptions::default()).unwrap();
    assert_eq!(m.cells[0].kind, CellKind::Pure(Phase::Plus));
    assert!(interface_measure_centroid(&g, &Ball::new([2.0, 2.0, 0.0], 2f64.sqrt(), Phase::Minus), 0, &MomentOptions::default()).is_none());
}

#[test]
fn circle_perimeter() {
    let g = CartesianGrid::uniform(&[0.0, 0.0], &[8.0, 8.0], &[128, 128]).unwrap();
    let m = compute_moments(&g, &Ball::new([4.0, 4.0, 0.0], 2.0, Phase::Plus), &MomentOptions::default()).unwrap();
    let p = m.total_interface();
    assert!((p / (4.0 * PI) - 1.0).abs() < 1e-2, "perimeter {p}");
    assert!((m.total_volume(Phase::Plus) / (4.0 * PI) - 1.0).abs() < 1e-6);
}

#[test]
fn sphere_surface() {
    let g = CartesianGrid::uniform(&[-1.25; 3], &[1.25; 3], &[40, 40, 40]).unwrap();
    let m = compute_moments(&g, &Ball::new([0.0; 3], 1.0, Phase::Minus), &MomentOptions::default()).unwrap();
    let s = m.total_interface();
    assert!((s / (4.0 * PI) - 1.0).abs() < 1e-2, "area {s}");
    assert!((m.total_volume(Phase::Minus) / (4.0 * PI / 3.0) - 1.0).abs() < 1e-3);
}

#[test]
fn perimeter_converges() {
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let g = CartesianGrid::uniform(&[-0.5, -0.5], &[0.5, 0.5], &[n, n]).unwrap();
        let star = Star { center: [0.0, 0.0], base: 0.3, amp: 0.0, lobes: 6.0, inside: Phase::Minus };
        let m = compute_moments(&g, &star, &MomentOptions::default()).unwrap();
        errs.push((m.total_interface() - 2.0 * PI * 0.3).abs());
    }
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn staggered_volumes_vanish_without_phase() {
    let g = CartesianGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[8, 8]).unwrap();
    let m = compute_moments(&g, &Ball::new([0.5, 0.5, 0.0], 0.3, Phase::Minus), &MomentOptions::default()).unwrap();
    for a in 0..2 {
        for (f, fm) in m.faces[a].iter().enumerate() {
            let (c0, c1) = g.face_cells(a, f);
            for p in 0..2 {
                let vols: Vec<f64> = [c0, c1].iter().flatten().map(|&c| m.cells[c].volume[p]).collect();
                if vols.iter().all(|&v| v == 0.0) {
                    assert_eq!(fm.staggered[p], 0.0);
                    assert_eq!(fm.aperture[p], 0.0);
                }
            }
        }
    }
}

#[test]
fn csv_dump_has_one_row_per_cell() {
    let g = CartesianGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[4, 4]).unwrap();
    let m = compute_moments(&g, &Ball::new([0.5, 0.5, 0.0], 0.3, Phase::Minus), &MomentOptions::default()).unwrap();
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 17);
    assert!(lines[0].starts_with("i,j,V-,V+,x-,y-,x+,y+,A1-"));
    assert!(lines[0].ends_with("gamma_measure,gamma_cx,gamma_cy"));
}

#[test]
fn strict_mode_reports_unconverged_cells() {
    let g = CartesianGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[4, 4]).unwrap();
    let opts = MomentOptions { tol: 1e-14, max_depth: Some(1), strict: true, ..Default::default() };
    let err = compute_moments(&g, &Ball::new([0.5, 0.5, 0.0], 0.3, Phase::Minus), &opts).unwrap_err();
    assert!(matches!(err, GeometryError::Unconverged { ref cells } if !cells.is_empty()));
}

fn check_identities(m: &MomentSet) {
    let g = &m.grid;
    let d = g.dim();
    for (c, cm) in m.cells.iter().enumerate() {
        let v = g.cell_volume(c);
        assert!((cm.volume[0] + cm.volume[1] - v).abs() <= 1e-9 * v, "volume partition in cell {c}");
        let (lo, hi) = g.cell_bounds(c);
        let center = g.cell_center(c);
        for a in 0..d {
            let first = cm.volume[0] * cm.centroid[0][a] + cm.volume[1] * cm.centroid[1][a];
            assert!((first - v * center[a]).abs() <= 1e-9 * v * (hi[a] - lo[a]).max(center[a].abs()), "centroid partition");
            for p in 0..2 {
                assert!(lo[a] <= cm.centroid[p][a] && cm.centroid[p][a] <= hi[a], "convexity");
                assert!(cm.section[p][a] >= 0.0 && cm.half[p][a][0] >= 0.0 && cm.half[p][a][1] >= 0.0);
                let hs = cm.half[p][a][0] + cm.half[p][a][1];
                assert!((hs - cm.volume[p]).abs() <= 1e-9 * v, "half split");
            }
        }
        assert!(cm.volume.iter().all(|&x| x >= 0.0));
        assert_eq!(cm.kind == CellKind::Mixed, cm.gamma_measure > 0.0);
        if cm.kind == CellKind::Pure(Phase::Plus) {
            assert_eq!(cm.volume[0], 0.0);
        }
    }
    for a in 0..d {
        for (f, fm) in m.faces[a].iter().enumerate() {
            let full = g.face_measure(a, f);
            if fm.kind != FaceKind::Wall {
                assert!((fm.aperture[0] + fm.aperture[1] - full).abs() <= 1e-9 * full, "aperture partition");
            }
            assert!(fm.aperture.iter().chain(fm.staggered.iter()).all(|&x| x >= 0.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn disk_identities(cx in 0.3f64..0.7, cy in 0.3f64..0.7, r in 0.05f64..0.28, n in 4usize..20) {
        let g = CartesianGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[n, n]).unwrap();
        let m = compute_moments(&g, &Ball::new([cx, cy, 0.0], r, Phase::Minus), &MomentOptions::default()).unwrap();
        check_identities(&m);
        let a = m.total_volume(Phase::Minus);
        prop_assert!((a - PI * r * r).abs() < 1e-4 * PI * r * r);
    }

    #[test]
    fn star_identities(amp in 0.0f64..0.15, lobes in 2u32..8, n in 8usize..40) {
        let g = CartesianGrid::uniform(&[-0.5, -0.5], &[0.5, 0.5], &[n, n]).unwrap();
        let star = Star { center: [0.01, -0.02], base: 0.3, amp, lobes: lobes as f64, inside: Phase::Minus };
        let m = compute_moments(&g, &star, &MomentOptions::default()).unwrap();
        check_identities(&m);
    }

    #[test]
    fn sphere_identities(cx in 0.4f64..0.6, r in 0.1f64..0.35, n in 3usize..8) {
        let g = CartesianGrid::uniform(&[0.0; 3], &[1.0; 3], &[n, n, n]).unwrap();
        let m = compute_moments(&g, &Ball::new([cx, 0.5, 0.47], r, Phase::Plus), &MomentOptions::default()).unwrap();
        check_identities(&m);
    }

    #[test]
    fn moments_are_deterministic(cx in 0.3f64..0.7, r in 0.1f64..0.25) {
        let g = CartesianGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[12, 12]).unwrap();
        let disk = Ball::new([cx, 0.5, 0.0], r, Phase::Minus);
        let a = compute_moments(&g, &disk, &MomentOptions::default()).unwrap();
        let b = compute_moments(&g, &disk, &MomentOptions::default()).unwrap();
        prop_assert_eq!(a.cells, b.cells);
        prop_assert_eq!(a.faces, b.faces);
    }

    #[test]
    fn translation_by_whole_cells(cx in 0.35f64..0.45, r in 0.1f64..0.2, shift in 1usize..4) {
        let n = 16;
        let h = 1.0 / n as f64;
        let g = CartesianGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[n, n]).unwrap();
        let a = compute_moments(&g, &Ball::new([cx, 0.5, 0.0], r, Phase::Minus), &MomentOptions::default()).unwrap();
        let b = compute_moments(&g, &Ball::new([cx + shift as f64 * h, 0.5, 0.0], r, Phase::Minus), &MomentOptions::default()).unwrap();
        for j in 0..n {
            for i in 0..n - shift {
                let ca = &a.cells[g.cell_index([i, j, 0])];
                let cb = &b.cells[g.cell_index([i + shift, j, 0])];
                prop_assert_eq!(ca.kind, cb.kind);
                for p in 0..2 {
                    prop_assert!((ca.volume[p] - cb.volume[p]).abs() < 1e-9 * h * h);
                    prop_assert!((ca.centroid[p][0] + shift as f64 * h - cb.centroid[p][0]).abs() < 1e-9);
                    prop_assert!((ca.section[p][1] - cb.section[p][1]).abs() < 1e-9 * h);
                }
                prop_assert!((ca.gamma_measure - cb.gamma_measure).abs() < 1e-9 * h);
            }
        }
    }
}

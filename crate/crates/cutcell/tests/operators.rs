use cutcell::assembly::{build_l_blocks, InterfaceModel, ProblemSpec};
use cutcell::conditions::{constant, BoundaryCondition, InterfaceLaw, OuterBC};
use cutcell::geometry::*;
use cutcell::operators::*;
use proptest::prelude::*;

fn circle(n: usize) -> MomentSet {
    let grid = CartesianGrid::uniform(&[0.0, 0.0], &[8.0, 8.0], &[n, n]).unwrap();
    compute_moments(&grid, &Ball::new([4.0, 4.0, 0.0], 2.0, Phase::Plus), &MomentOptions::default()).unwrap()
}

fn sphere(n: usize) -> MomentSet {
    let grid = CartesianGrid::uniform(&[0.0; 3], &[4.0; 3], &[n, n, n]).unwrap();
    compute_moments(&grid, &Ball::new([2.0, 2.0, 2.0], 1.0, Phase::Minus), &MomentOptions::default()).unwrap()
}

fn half_plane(x: f64) -> MomentSet {
    let grid = CartesianGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[4, 4]).unwrap();
    compute_moments(&grid, &HalfSpace::axis(0, x), &MomentOptions::default()).unwrap()
}

fn two_phase(k: [f64; 2]) -> ProblemSpec {
    ProblemSpec {
        capacity: [1.0, 1.0],
        diffusivity: k,
        source: [constant(0.0), constant(0.0)],
        bc: OuterBC::uniform(BoundaryCondition::dirichlet(constant(0.0))),
        interface: InterfaceModel::TwoPhase(InterfaceLaw::continuity()),
        initial: [constant(0.0), constant(0.0)],
        time: None,
    }
}

/// Deterministic pseudo-random face values in [-1, 1].
fn noisy_flux(m: &MomentSet, seed: u64) -> FaceFluxField {
    let mut q = FaceField::constant(m, 0.0);
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    for a in 0..m.dim() {
        for v in q.values[a].iter_mut() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v = ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
        }
    }
    q
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn constant_flux_cancels_on_every_cell() {
    for m in [circle(16), circle(32), sphere(8), sphere(16)] {
        let q = FaceField::constant(&m, 1.7);
        for p in Phase::BOTH {
            let om = div_sum(&m, p, &q, div_omega).unwrap();
            let ga = div_sum(&m, p, &q, div_gamma).unwrap();
            let scale = max_abs(&om).max(max_abs(&ga));
            let worst = om.iter().zip(&ga).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
            assert!(worst <= 1e-13 * scale, "residual {worst} against {scale}");
            assert!(div_sum(&m, p, &q, div_total).unwrap().iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn divergence_two_forms_agree() {
    for (seed, m) in [circle(16), circle(32), sphere(8), sphere(16)].into_iter().enumerate() {
        let q = noisy_flux(&m, seed as u64);
        for p in Phase::BOTH {
            for axis in 0..m.dim() {
                let om = div_omega(&m, p, axis, &q).unwrap();
                let ga = div_gamma(&m, p, axis, &q).unwrap();
                let tot = div_total(&m, p, axis, &q).unwrap();
                let scale = max_abs(&tot).max(max_abs(&om));
                for c in 0..m.cells.len() {
                    assert!((om[c] + ga[c] - tot[c]).abs() <= 1e-13 * scale);
                }
            }
        }
    }
}

#[test]
fn operator_blocks_are_adjoint_and_symmetric() {
    for m in [circle(16), circle(32), sphere(8), sphere(16)] {
        let blocks = build_l_blocks(&m, &two_phase([1.0, 3.5])).unwrap();
        for p in 0..2 {
            let ww = &blocks.ww[p];
            let asym = ww.add_scaled(&ww.transpose(), -1.0).max_abs();
            assert!(asym <= 1e-13 * ww.max_abs(), "asymmetry {asym}");
            let adj = blocks.gw[p].add_scaled(&blocks.wg[p].transpose(), 1.0).max_abs();
            assert!(adj <= 1e-13 * blocks.wg[p].max_abs().max(1e-300), "adjointness {adj}");
        }
    }
}

#[test]
fn telescoping_leaves_only_outer_faces() {
    let m = circle(16);
    let q = noisy_flux(&m, 7);
    for p in Phase::BOTH {
        let total: f64 = div_sum(&m, p, &q, div_omega).unwrap().iter().sum();
        let mut outer = 0.0;
        for axis in 0..2 {
            for f in 0..m.grid.n_faces(axis) {
                if m.grid.is_boundary_face(axis, f) {
                    let (lo, _) = m.grid.face_cells(axis, f);
                    let sign = if lo.is_some() { 1.0 } else { -1.0 };
                    outer += sign * m.faces[axis][f].aperture[p.index()] * q.values[axis][f];
                }
            }
        }
        assert!((total - outer).abs() <= 1e-13 * outer.abs().max(1.0));
    }
}

#[test]
fn regular_cell_divergence_formula() {
    let grid = CartesianGrid::uniform(&[0.0], &[2.0], &[4]).unwrap();
    let m = compute_moments(&grid, &Uniform(-1.0), &MomentOptions::default()).unwrap();
    let mut q = FaceField::constant(&m, 0.0);
    q.values[0] = vec![0.0, 1.0, 2.0, 0.0, 0.0];
    let d = div_omega(&m, Phase::Minus, 0, &q).unwrap();
    // Point faces have unit aperture in 1D.
    assert!((d[1] - 1.0).abs() < 1e-15);
    // Linear flux Q = x gives h per cell.
    q.values[0] = vec![0.0, 0.5, 1.0, 1.5, 2.0];
    for v in div_omega(&m, Phase::Minus, 0, &q).unwrap() {
        assert!((v - 0.5).abs() < 1e-15);
    }
}

#[test]
fn planar_cut_interfacial_divergence_is_the_interface_flux() {
    let m = half_plane(0.3);
    let q = FaceField::constant(&m, 1.0);
    let ga = div_gamma(&m, Phase::Minus, 0, &q).unwrap();
    for c in m.mixed_cells() {
        // Outward normal of the minus side (x < 0.3) is +x; the interface segment has length 0.25.
        assert!((ga[c] - 0.25).abs() < 1e-12, "{}", ga[c]);
    }
    assert_eq!(m.mixed_cells().len(), 4);
}

#[test]
fn gradient_is_exact_for_linear_fields_on_pure_cells() {
    let m = circle(16);
    let slope = [0.7, -1.3];
    let phi: Vec<f64> = (0..m.cells.len())
        .map(|c| {
            let x = m.cells[c].centroid[0];
            slope[0] * x[0] + slope[1] * x[1]
        })
        .collect();
    let zeros = vec![0.0; m.cells.len()];
    let g = gradient(&m, Phase::Minus, &phi, &zeros);
    for axis in 0..2 {
        for f in 0..m.grid.n_faces(axis) {
            let (Some(a), Some(b)) = m.grid.face_cells(axis, f) else { continue };
            if m.cells[a].kind == CellKind::Pure(Phase::Minus) && m.cells[b].kind == CellKind::Pure(Phase::Minus) {
                assert!((g.values[axis][f] - slope[axis]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn flux_closure_scales_the_gradient() {
    let m = circle(8);
    let g = FaceField::constant(&m, 3.0);
    let q = flux_closure(2.0, &g);
    assert!(q.values[0].iter().all(|&v| v == -6.0));
    let zero = flux_closure(2.0, &FaceField::constant(&m, 0.0));
    assert!(zero.values[1].iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn divergence_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, s1 in 0u64..1000, s2 in 0u64..1000) {
        let m = circle(8);
        let u = noisy_flux(&m, s1);
        let v = noisy_flux(&m, s2);
        let mut w = u.clone();
        for axis in 0..2 {
            for f in 0..w.values[axis].len() {
                w.values[axis][f] = a * u.values[axis][f] + b * v.values[axis][f];
            }
        }
        for p in Phase::BOTH {
            let du = div_sum(&m, p, &u, div_gamma).unwrap();
            let dv = div_sum(&m, p, &v, div_gamma).unwrap();
            let dw = div_sum(&m, p, &w, div_gamma).unwrap();
            for c in 0..m.cells.len() {
                prop_assert!((dw[c] - a * du[c] - b * dv[c]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cancellation_holds_for_any_constant(q0 in -1e3f64..1e3, x in 0.05f64..0.95) {
        let m = half_plane(x);
        let q = FaceField::constant(&m, q0);
        for p in Phase::BOTH {
            let om = div_sum(&m, p, &q, div_omega).unwrap();
            let ga = div_sum(&m, p, &q, div_gamma).unwrap();
            for c in 0..m.cells.len() {
                prop_assert!((om[c] + ga[c]).abs() <= 1e-13 * q0.abs().max(1.0));
            }
        }
    }
}

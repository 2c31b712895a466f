use btq_core::linalg::{c, hermitian_power, rank, CMat};
use btq_core::symplectic::StructurePath;
use btq_core::torus::*;
use btq_core::transport::PathDiscretization;
use num_complex::Complex64;
use proptest::prelude::*;

fn taus() -> [Complex64; 3] {
    [c(0.0, 1.0), c(1.0, 1.0), c(0.0, 2.0)]
}

#[test]
fn dimension_is_p() {
    for p in [1, 2, 4, 8, 16, 32] {
        for tau in taus() {
            let b = ThetaBasis::validated(p, tau).unwrap();
            let g = gram(&b, &QuadratureGrid::for_level(p)).unwrap();
            assert_eq!(rank(&g, 1e-10), p as usize, "p={p} tau={tau}");
        }
    }
}

#[test]
fn gram_is_stable_and_positive() {
    let b = ThetaBasis::new(1, c(0.0, 1.0)).unwrap();
    let g = gram(&b, &QuadratureGrid::for_level(1)).unwrap();
    assert!(g[(0, 0)].re > 0.0 && g[(0, 0)].im.abs() < 1e-15);
    assert!(QuadratureGrid::new(32, 1).is_err());
    assert!(ThetaBasis::with_truncation(TorusGeometry::new(4, c(0.0, 1.0)).unwrap(), 1).is_err());
}

#[test]
fn transport_is_unitary_and_reversible() {
    let disc = PathDiscretization::default();
    let (t0, t1) = (c(0.0, 1.0), c(1.0, 1.5));
    for p in [3, 8] {
        let grid = QuadratureGrid::for_level(p);
        let there = l2_transport(p, &StructurePath::upper_half_plane_segment(t0, t1).unwrap(), &grid, &disc).unwrap();
        let back = l2_transport(p, &StructurePath::upper_half_plane_segment(t1, t0).unwrap(), &grid, &disc).unwrap();
        assert!(there.unitarity_defect() < 1e-6);
        let round = back.compose(&there);
        assert!((round.matrix - CMat::identity(p as usize, p as usize)).norm() < 1e-6);
    }
    let constant = StructurePath::upper_half_plane_segment(t0, t0).unwrap();
    let id = l2_transport(4, &constant, &QuadratureGrid::for_level(4), &disc).unwrap();
    assert!((id.matrix - CMat::identity(4, 4)).norm() < 1e-12);
}

#[test]
fn pullbacks() {
    let tau = c(0.0, 1.0);
    let p = 6;
    let grid = QuadratureGrid::for_level(p);
    let b = ThetaBasis::new(p, tau).unwrap();
    let id = AffineMap::linear([[1, 0], [0, 1]]).unwrap();
    let m = pullback_matrix(&id, &b, &b, &grid).unwrap();
    assert!((m.matrix - CMat::identity(6, 6)).norm() < 1e-9);

    let minus = AffineMap::linear([[-1, 0], [0, -1]]).unwrap();
    let m = pullback_matrix(&minus, &b, &b, &grid).unwrap();
    assert!(m.unitarity_defect() < 1e-6);
    let sq = &m.matrix * &m.matrix;
    let k = sq[(0, 0)];
    assert!((k.norm() - 1.0).abs() < 1e-9);
    assert!((sq - CMat::identity(6, 6) * k).norm() < 1e-9);

    let hyp = AffineMap::linear([[2, 1], [1, 1]]).unwrap();
    let src = ThetaBasis::new(p, hyp.modulus_image(tau)).unwrap();
    assert!(pullback_matrix(&hyp, &b, &src, &grid).unwrap().unitarity_defect() < 1e-6);
    // The source basis must sit at the image modulus.
    assert!(pullback_matrix(&hyp, &b, &b, &grid).is_err());
}

#[test]
fn trace_is_basis_independent() {
    let disc = PathDiscretization::default();
    let map = AffineMap::linear([[2, 1], [1, 1]]).unwrap();
    let q = quantized_map(&map, c(0.0, 1.0), 5, &QuadratureGrid::for_level(5), &disc).unwrap();
    let g = &q.gram_domain;
    let whitened = hermitian_power(g, 0.5) * &q.matrix * hermitian_power(g, -0.5);
    assert!((q.trace() - whitened.trace()).norm() < 1e-9);
    assert!(q.unitarity_defect() < 1e-6);
}

#[test]
fn minus_identity_traces() {
    // Four half-period fixed points with a_0 = 1/2 and lambda = 1, -1, -1, -1.
    let disc = PathDiscretization::default();
    let map = AffineMap::linear([[-1, 0], [0, -1]]).unwrap();
    let s = trace_study(&map, c(0.0, 1.0), &[4, 5], GridRule::PerLevel, &disc).unwrap();
    assert!((s.points[0].trace - c(2.0, 0.0)).norm() < 1e-9);
    assert!((s.points[1].trace - c(-1.0, 0.0)).norm() < 1e-9);
    for pt in &s.points {
        assert!(pt.residual.norm() < 1e-9);
    }
}

#[test]
fn constant_path_has_no_deviation() {
    let disc = PathDiscretization::default();
    let path = StructurePath::upper_half_plane_segment(c(0.0, 1.0), c(0.0, 1.0)).unwrap();
    for pt in approx_theorem_check(&[2, 4], &path, GridRule::Fixed(64), &disc, None).unwrap() {
        assert!(pt.deviation < 1e-12);
    }
}

#[test]
fn unsupported_maps_are_rejected() {
    let disc = PathDiscretization::default();
    let shear_shift = AffineMap::new([[1, 1], [0, 1]], [0.5, 0.0]).unwrap();
    assert!(prediction_terms(&shear_shift, c(0.0, 1.0), &disc).is_err());
    assert!(AffineMap::linear([[2, 0], [0, 1]]).is_err());
}

fn sl2(a: i64, b: i64, k: i64) -> [[i64; 2]; 2] {
    // [[1, a], [0, 1]] [[1, 0], [b, 1]] [[1, k], [0, 1]]
    let m1 = [[1 + a * b, a], [b, 1]];
    [[m1[0][0], m1[0][0] * k + m1[0][1]], [m1[1][0], m1[1][0] * k + m1[1][1]]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn theta_basis_invariants(p in 1u32..12, re in -2.0f64..2.0, im in 0.4f64..2.5) {
        let b = ThetaBasis::new(p, c(re, im)).unwrap();
        prop_assert!(b.periodicity_residual() <= 1e-10);
        prop_assert!(b.holomorphy_residual() <= 1e-8);
    }

    #[test]
    fn modulus_image_is_conjugation(a in -2i64..3, b in -2i64..3, k in -2i64..3, re in -1.0f64..1.0, im in 0.5f64..2.0) {
        let map = AffineMap::linear(sl2(a, b, k)).unwrap();
        let tau = c(re, im);
        let j = btq_core::symplectic::CompatibleStructure::from_modulus(tau).unwrap();
        let pushed = btq_core::fixed_point::pushforward(&map.matrix(), &j).unwrap();
        let image = btq_core::symplectic::CompatibleStructure::from_modulus(map.modulus_image(tau)).unwrap();
        prop_assert!((pushed.j() - image.j()).norm() <= 1e-9 * (1.0 + pushed.j().norm()));
        prop_assert!(map.lift_residual(3, map.modulus_image(tau)).unwrap() <= LIFT_TOL);
    }

    #[test]
    fn gauge_cocycle(p in 1u32..40) {
        let g = LineBundleGauge { p };
        prop_assert!(g.cocycle_residual() <= 1e-12);
        prop_assert!(g.curvature_residual() <= 1e-8);
    }
}

use btq_core::fixed_point::*;
use btq_core::linalg::{c, RMat};
use btq_core::quadrature::QuadratureSpec;
use btq_core::random;
use btq_core::symplectic::CompatibleStructure;
use btq_core::transport::PathDiscretization;
use proptest::prelude::*;

fn random_datum(seed: u64) -> FixedPointDatum {
    let mut rng = random::rng(seed);
    let n = 1 + (seed % 2) as usize;
    loop {
        let j0 = random::compatible_structure(n, &mut rng);
        let d = random::symplectic(n, 0.9, &mut rng);
        if let Ok(datum) = FixedPointDatum::new(d, c(1.0, 0.0), j0) {
            let id = RMat::identity(2 * n, 2 * n);
            let s = (id - &datum.dphi).svd(false, false).singular_values.min();
            if s > 0.05 {
                return datum;
            }
        }
    }
}

#[test]
fn formula_matches_gaussian_oracle_on_random_maps() {
    let disc = PathDiscretization::default();
    for seed in 0..20 {
        let datum = random_datum(seed);
        let spec = QuadratureSpec::for_dim(datum.n());
        let a0 = leading_coeff_isolated(&datum, &disc).unwrap().value;
        let oracle = gaussian_fixed_point_oracle(&datum, &disc, &spec).unwrap();
        assert!((a0 - oracle).norm() <= 1e-6 * oracle.norm().max(1.0), "seed {seed}: {a0} vs {oracle}");
        let geo = geometric_identity_check(&datum, &disc).unwrap();
        assert!(geo <= 1e-6, "seed {seed}: {geo}");
        assert!(splitting_residual(&datum).unwrap() <= 1e-10);
    }
}

#[test]
fn kernel_oracles_agree() {
    let disc = PathDiscretization::default();
    for seed in 0..20 {
        let datum = random_datum(seed);
        assert!(kernel_form_residual(&datum).unwrap() <= 1e-10, "seed {seed}");
        if datum.n() == 1 && seed < 6 {
            let a0 = leading_coeff_isolated(&datum, &disc).unwrap().value;
            let k = kernel_fixed_point_oracle(&datum, &disc, &QuadratureSpec::for_dim(1)).unwrap();
            assert!((a0 - k).norm() <= 1e-6 * a0.norm().max(1.0), "seed {seed}: {a0} vs {k}");
        }
    }
}

#[test]
fn near_degenerate_rotation() {
    // Smallest singular value of I - dphi is 2 sin(th/2) = 0.1.
    let th = 2.0 * (0.05f64).asin();
    let d = RMat::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
    let datum = FixedPointDatum::new(d, c(1.0, 0.0), CompatibleStructure::standard(1)).unwrap();
    let disc = PathDiscretization::default();
    let a0 = leading_coeff_isolated(&datum, &disc).unwrap().value;
    let spec = QuadratureSpec::for_dim(1);
    let g = gaussian_fixed_point_oracle(&datum, &disc, &spec).unwrap();
    assert!((a0 - g).norm() <= 1e-5, "{a0} vs {g}");
}

#[test]
fn simplified_form_for_unitary_maps() {
    let disc = PathDiscretization::default();
    let mut rng = random::rng(11);
    for n in 1..=2 {
        for _ in 0..5 {
            let j0 = random::compatible_structure(n, &mut rng);
            let u = random::unitary(&j0, 1.5, &mut rng);
            let datum = FixedPointDatum::new(u, c(1.0, 0.0), j0).unwrap();
            let zero = RMat::zeros(2 * n, 0);
            let comp = FixedComponentDatum::new(datum, zero, RMat::identity(2 * n, 2 * n)).unwrap();
            let nu = leading_density_component(&comp, &disc).unwrap().value;
            let simple = simplified_density(&comp, &disc).unwrap();
            // The simplified form fixes the root only up to sign.
            let r = (nu - simple).norm().min((nu + simple).norm());
            assert!(r <= 1e-6, "{nu} vs {simple}");
            let iso = leading_coeff_isolated(&comp.base, &disc).unwrap().value;
            assert!((nu - iso).norm() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn splitting_operator_acts_as_expected(seed in 0u64..1000) {
        let datum = random_datum(seed);
        prop_assert!(splitting_residual(&datum).unwrap() <= 1e-10);
        let q = datum.quadratic_form().unwrap();
        prop_assert!((&q - q.transpose()).norm() <= 1e-9 * (1.0 + q.norm()));
        prop_assert!(q.map(|z| z.re).cholesky().is_some());
    }

    #[test]
    fn density_is_basis_independent(a in 0.2f64..3.0, b in -2.0f64..2.0, s in 0.2f64..3.0) {
        let disc = PathDiscretization::default();
        let m = RMat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let datum = FixedPointDatum::new(m, c(1.0, 0.0), CompatibleStructure::standard(1)).unwrap();
        let e1 = RMat::from_column_slice(2, 1, &[1.0, 0.0]);
        let base = FixedComponentDatum::new(datum.clone(), e1.clone(), RMat::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        let other = FixedComponentDatum::new(datum, e1 * s, RMat::from_column_slice(2, 1, &[b, a])).unwrap();
        let v0 = leading_density_component(&base, &disc).unwrap().value;
        let v1 = leading_density_component(&other, &disc).unwrap().value;
        // The fixed-subspace scale s multiplies the density, as a density should.
        prop_assert!((v0 * s - v1).norm() <= 1e-10);
    }
}

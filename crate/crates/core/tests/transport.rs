use btq_core::quadrature::QuadratureSpec;
use btq_core::transport::*;

#[test]
fn regression_set_identities() {
    let disc = PathDiscretization::default();
    for (name, path) in regression_paths() {
        let spec = QuadratureSpec::for_dim(path.n());
        for &t in &REGRESSION_TIMES {
            let mut_r = mut_identity_residual(&path, t, &disc, MutVariant::Mut, &spec).unwrap();
            let til_r = mut_identity_residual(&path, t, &disc, MutVariant::Tilmut, &spec).unwrap();
            let bar = barmut_check(&path, t, &disc).unwrap();
            let f = transport_factors(&path, t, &disc).unwrap();
            println!(
                "{name} t={t}: mut {mut_r:.2e} tilmut {til_r:.2e} barmut {bar:.2e} canon {:.2e}",
                f.canonical_residual()
            );
            assert!(mut_r <= 1e-5, "{name} t={t}: {mut_r}");
            assert!(til_r <= 1e-5, "{name} t={t}: {til_r}");
            assert!(bar <= 1e-7, "{name} t={t}: {bar}");
            assert!(f.canonical_residual() <= 1e-7, "{name} t={t}");
            assert!(f.g0_residual() <= 1e-7, "{name} t={t}");
        }
    }
}

#[test]
fn g0_matches_ode_on_regression_set() {
    let disc = PathDiscretization::default();
    for (name, path) in regression_paths() {
        let e = g0_ode_crosscheck(&path, &disc).unwrap();
        assert!(e <= 1e-7, "{name}: {e}");
    }
}

#[test]
fn anchoring_under_reparametrization() {
    let disc = PathDiscretization::default();
    let base = btq_core::symplectic::StructurePath::upper_half_plane_segment(
        btq_core::linalg::c(0.3, 0.8),
        btq_core::linalg::c(-0.5, 1.7),
    )
    .unwrap();
    let rep = btq_core::symplectic::StructurePath::reparametrized(base.clone(), 2.0).unwrap();
    for k in 1..=8 {
        let t = k as f64 / 8.0;
        let a = mu(&rep, t, &disc).unwrap();
        let b = mu(&base, t * t, &disc).unwrap();
        assert!((a - b).norm() <= 1e-7);
    }
}

//! Identity suites shared by `verify` and the acceptance tests.

use crate::report::Record;
use btq_core::fixed_point::{
    gaussian_fixed_point_oracle, geometric_identity, kernel_fixed_point_oracle, leading_coeff_isolated, splitting_residual,
    FixedPointDatum,
};
use btq_core::gaussian::{compose, compose_poly, difference_form, kernel_of, quadratic_moment, Polynomial, Side};
use btq_core::linalg::{c, CMat, RMat};
use btq_core::quadrature::{quadrature_compose, QuadratureSpec};
use btq_core::random;
use btq_core::symplectic::{idempotence_residual, projector_holo, symplectic_residual, CompatibleStructure, ALG_TOL};
use btq_core::transport::{
    barmut_check, g0_ode_crosscheck, mu, mut_identity_residual, regression_paths, sample_pairs, transport_factors,
    MutVariant, PathDiscretization, REGRESSION_TIMES,
};
use btq_core::Complex64;
use std::time::Instant;

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn phase_gap(a: Complex64, b: Complex64) -> f64 {
    let d = (a.arg() - b.arg()).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}

fn run<F>(suite: &str, name: &str, tol: f64, f: F) -> Record
where
    F: FnOnce() -> btq_core::Result<f64>,
{
    match f() {
        Ok(v) => Record::check(suite, name, v, tol),
        Err(e) => Record::error(suite, name, tol, &e.to_string()),
    }
}

/// Structural identities of random compatible structures.
pub fn symplectic(seed: u64) -> Vec<Record> {
    let mut rng = random::rng(seed);
    let mut out = Vec::new();
    for n in 1..=2 {
        let (mut sq, mut inv, mut idem, mut round) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..10 {
            let j = random::compatible_structure(n, &mut rng);
            let dim = 2 * n;
            sq = sq.max((j.j() * j.j() + RMat::identity(dim, dim)).norm());
            inv = inv.max(symplectic_residual(j.j()));
            idem = idem.max(idempotence_residual(projector_holo(&j).matrix()));
            let back = CompatibleStructure::from_siegel(&j.siegel()).map(|k| (k.j() - j.j()).norm());
            round = round.max(back.unwrap_or(f64::INFINITY));
        }
        out.push(Record::check("symplectic", &format!("j_squared_n{n}"), sq, ALG_TOL));
        out.push(Record::check("symplectic", &format!("j_preserves_omega_n{n}"), inv, ALG_TOL));
        out.push(Record::check("symplectic", &format!("projector_idempotence_n{n}"), idem, ALG_TOL));
        out.push(Record::check("symplectic", &format!("siegel_round_trip_n{n}"), round, ALG_TOL));
    }
    out
}

/// Closed-form composition against quadrature on 50 random pairs.
pub fn gaussian_composition(seed: u64) -> Vec<Record> {
    let mut rng = random::rng(seed ^ 0x9a55);
    let mut worst = [0.0f64; 2];
    let mut failures = Vec::new();
    for k in 0..50u64 {
        let n = 1 + (k % 2) as usize;
        let jt = random::compatible_structure(n, &mut rng);
        let j0 = random::compatible_structure(n, &mut rng);
        let (z, zp) = sample_pairs(n, 1, seed.wrapping_add(k)).remove(0);
        let r = (|| {
            let kt = kernel_of(&jt);
            let k0 = kernel_of(&j0);
            let closed = compose(&kt, &k0)?.eval(&z, &zp);
            // Some draws cancel to |K| ~ 1e-4; 36 nodes per axis leave 1e-3 there.
            let spec = if n == 2 { QuadratureSpec { nodes: 48, half_width: 3.8 } } else { QuadratureSpec::for_dim(n) };
            let quad = quadrature_compose(&kt, None, &k0, &z, &zp, &spec)?;
            Ok::<f64, btq_core::Error>(rel(quad, closed))
        })();
        match r {
            Ok(v) => worst[n - 1] = worst[n - 1].max(v),
            Err(e) => failures.push(format!("instance {k}: {e}")),
        }
    }
    let mut out = vec![
        Record::check("gaussian", "compose_vs_quadrature_n1", worst[0], 1e-6),
        Record::check("gaussian", "compose_vs_quadrature_n2", worst[1], 1e-6),
    ];
    if !failures.is_empty() {
        out.push(Record::error("gaussian", "compose_instances", 0.0, &failures.join("; ")));
    }
    out.push(run("gaussian", "scaling_pair_constant", 1e-12, || {
        let a = CompatibleStructure::new(RMat::from_row_slice(2, 2, &[0.0, -4.0, 0.25, 0.0]))?;
        let k = compose(&kernel_of(&a), &kernel_of(&CompatibleStructure::standard(1)))?;
        Ok((k.c() - c(0.8, 0.0)).norm())
    }));
    out
}

fn random_poly(n_vars: usize, degree: usize, rng: &mut impl FnMut() -> f64) -> Polynomial {
    let mut p = Polynomial::zero(n_vars);
    for _ in 0..6 {
        let mut e = vec![0u16; n_vars];
        let d = 1 + (rng().abs() * degree as f64) as usize % degree;
        for _ in 0..d {
            let v = (rng().abs() * n_vars as f64) as usize % n_vars;
            e[v] += 1;
        }
        p.add_term(e, c(rng(), rng()));
    }
    p
}

/// Moment formulas: polynomial composition, quadratic moments and parity.
pub fn moments(seed: u64) -> Vec<Record> {
    let mut rng = random::rng(seed ^ 0x30e7);
    let mut pts = sample_pairs(1, 400, seed ^ 0x30e8).into_iter().flat_map(|(a, b)| a.into_iter().chain(b));
    let mut draw = move || pts.next().unwrap_or(0.5);
    let mut out = Vec::new();
    let (mut poly, mut quad_m, mut odd) = (0.0f64, 0.0f64, 0.0f64);
    let mut errors = Vec::new();
    for k in 0..6u64 {
        let n = 1 + (k % 2) as usize;
        let dim = 2 * n;
        let jt = random::compatible_structure(n, &mut rng);
        let j0 = random::compatible_structure(n, &mut rng);
        let kt = kernel_of(&jt);
        let k0 = kernel_of(&j0);
        let (z, zp) = sample_pairs(n, 1, seed.wrapping_add(100 + k)).remove(0);
        let f = random_poly(dim, 6, &mut draw);
        let r = (|| {
            let closed = compose_poly(&kt, &f, &k0)?.eval(&z, &zp);
            let q = quadrature_compose(&kt, Some(&f), &k0, &z, &zp, &QuadratureSpec::for_dim(n))?;
            poly = poly.max((closed - q).norm() / closed.norm().max(1.0));

            let b = CMat::from_fn(dim, dim, |_, _| c(draw(), draw()));
            for (side, off) in [(Side::Left, 0), (Side::Right, 2 * dim)] {
                let closed = quadratic_moment(&kt, &b, side, &k0)?;
                let engine = compose_poly(&kt, &difference_form(&b, 3 * dim, off, dim), &k0)?;
                quad_m = quad_m.max((closed.eval(&z, &zp) - engine.eval(&z, &zp)).norm());
            }

            let zero = vec![0.0; dim];
            for d in [1u32, 3, 5] {
                let lin = Polynomial::linear(dim, 0, &(0..dim).map(|_| c(draw(), draw())).collect::<Vec<_>>());
                let v = compose_poly(&kt, &lin.pow(d), &k0)?.eval(&zero, &zero);
                odd = odd.max(v.norm());
            }
            Ok::<(), btq_core::Error>(())
        })();
        if let Err(e) = r {
            errors.push(format!("instance {k}: {e}"));
        }
    }
    out.push(Record::check("gaussian", "compose_poly_vs_quadrature", poly, 1e-6));
    out.push(Record::check("gaussian", "quadratic_moment_vs_compose_poly", quad_m, 1e-10));
    out.push(Record::check("gaussian", "odd_weight_at_origin", odd, 1e-8));
    if !errors.is_empty() {
        out.push(Record::error("gaussian", "moment_instances", 0.0, &errors.join("; ")));
    }
    out
}

/// Local transport identities on the regression paths.
pub fn transport(disc: &PathDiscretization) -> Vec<Record> {
    let mut out = Vec::new();
    for (name, path) in regression_paths() {
        let spec = QuadratureSpec::for_dim(path.n());
        let (mut m, mut tm, mut bar) = (0.0f64, 0.0f64, 0.0f64);
        let mut errors = Vec::new();
        for &t in &REGRESSION_TIMES {
            let r = (|| {
                m = m.max(mut_identity_residual(&path, t, disc, MutVariant::Mut, &spec)?);
                tm = tm.max(mut_identity_residual(&path, t, disc, MutVariant::Tilmut, &spec)?);
                bar = bar.max(barmut_check(&path, t, disc)?);
                Ok::<(), btq_core::Error>(())
            })();
            if let Err(e) = r {
                errors.push(format!("t={t}: {e}"));
            }
        }
        out.push(Record::check("transport", &format!("mut[{name}]"), m, 1e-5));
        out.push(Record::check("transport", &format!("tilmut[{name}]"), tm, 1e-5));
        out.push(Record::check("transport", &format!("barmut[{name}]"), bar, 1e-7));
        if !errors.is_empty() {
            out.push(Record::error("transport", &format!("evaluation[{name}]"), 0.0, &errors.join("; ")));
        }
    }
    out.push(run("transport", "scaling_mu_closed_form", 1e-8, || {
        let path = btq_core::symplectic::StructurePath::diagonal_scaling(1, 1.0)?;
        Ok((mu(&path, 1.0, disc)? - c(1f64.cosh().sqrt(), 0.0)).norm())
    }));
    out
}

/// The canonical-line and `g_0` identities on the regression paths.
pub fn canonical(disc: &PathDiscretization) -> Vec<Record> {
    let mut out = Vec::new();
    for (name, path) in regression_paths() {
        let (mut canon, mut g0) = (0.0f64, 0.0f64);
        let mut errors = Vec::new();
        for t in REGRESSION_TIMES.iter().copied().chain([1.0]) {
            match transport_factors(&path, t, disc) {
                Ok(f) => {
                    canon = canon.max(f.canonical_residual());
                    g0 = g0.max(f.g0_residual());
                }
                Err(e) => errors.push(format!("t={t}: {e}")),
            }
        }
        out.push(Record::check("canonical", &format!("canonical_line[{name}]"), canon, 1e-7));
        out.push(Record::check("canonical", &format!("g0[{name}]"), g0, 1e-7));
        out.push(run("canonical", &format!("g0_vs_ode[{name}]"), 1e-7, || g0_ode_crosscheck(&path, disc)));
        if !errors.is_empty() {
            out.push(Record::error("canonical", &format!("evaluation[{name}]"), 0.0, &errors.join("; ")));
        }
    }
    out
}

/// Random fixed-point data with `I - dphi` well conditioned.
pub fn random_fixed_point(seed: u64) -> FixedPointDatum {
    let mut rng = random::rng(seed);
    let n = 1 + (seed % 2) as usize;
    loop {
        let j0 = random::compatible_structure(n, &mut rng);
        let d = random::symplectic(n, 0.9, &mut rng);
        if let Ok(datum) = FixedPointDatum::new(d, c(1.0, 0.0), j0) {
            let id = RMat::identity(2 * n, 2 * n);
            if (id - &datum.dphi).svd(false, false).singular_values.min() > 0.05 {
                return datum;
            }
        }
    }
}

/// Leading fixed-point coefficient against the oracles.
pub fn fixed_point(seed: u64, disc: &PathDiscretization) -> Vec<Record> {
    let mut modulus = 0.0f64;
    let mut phase = 0.0f64;
    let mut geo = 0.0f64;
    let mut split = 0.0f64;
    let mut kernel = 0.0f64;
    let mut errors = Vec::new();
    for k in 0..20u64 {
        let datum = random_fixed_point(seed.wrapping_mul(1000).wrapping_add(k));
        let r = (|| {
            let spec = QuadratureSpec::for_dim(datum.n());
            let a0 = leading_coeff_isolated(&datum, disc)?.value;
            let o = gaussian_fixed_point_oracle(&datum, disc, &spec)?;
            modulus = modulus.max((a0.norm() - o.norm()).abs());
            phase = phase.max(phase_gap(a0, o));
            geo = geo.max(geometric_identity(&datum, disc)?.residual());
            split = split.max(splitting_residual(&datum)?);
            if datum.n() == 1 && k < 8 {
                kernel = kernel.max((kernel_fixed_point_oracle(&datum, disc, &spec)? - a0).norm());
            }
            Ok::<(), btq_core::Error>(())
        })();
        if let Err(e) = r {
            errors.push(format!("instance {k}: {e}"));
        }
    }
    let mut out = vec![
        Record::check("fixed_point", "coefficient_modulus_vs_oracle", modulus, 1e-6),
        Record::check("fixed_point", "coefficient_phase_vs_oracle", phase, 1e-6),
        Record::check("fixed_point", "coefficient_vs_kernel_oracle", kernel, 1e-6),
        Record::check("fixed_point", "geometric_identity", geo, 1e-6),
        Record::check("fixed_point", "splitting_operator", split, 1e-10),
    ];
    for n in 1..=2usize {
        out.push(run("fixed_point", &format!("minus_identity_n{n}"), 1e-12, || {
            let d = -RMat::identity(2 * n, 2 * n);
            let datum = FixedPointDatum::new(d, c(1.0, 0.0), CompatibleStructure::standard(n))?;
            let a0 = leading_coeff_isolated(&datum, disc)?.value;
            Ok((a0 - c(0.5f64.powi(n as i32), 0.0)).norm())
        }));
    }
    if !errors.is_empty() {
        out.push(Record::error("fixed_point", "instances", 0.0, &errors.join("; ")));
    }
    out
}

/// Everything `verify` runs, in order.
pub fn all(seed: u64, disc: &PathDiscretization) -> Vec<Record> {
    timed_all(seed, disc).0
}

/// [`all`] with the wall time of each suite.
pub fn timed_all(seed: u64, disc: &PathDiscretization) -> (Vec<Record>, Vec<(String, f64)>) {
    let mut out = Vec::new();
    let mut times = Vec::new();
    let mut time = |name: &str, f: &dyn Fn() -> Vec<Record>| {
        let start = Instant::now();
        out.extend(f());
        times.push((name.to_string(), start.elapsed().as_secs_f64()));
    };
    time("symplectic", &|| symplectic(seed));
    time("gaussian", &|| gaussian_composition(seed));
    time("moments", &|| moments(seed));
    time("transport", &|| transport(disc));
    time("canonical", &|| canonical(disc));
    time("fixed_point", &|| fixed_point(seed, disc));
    (out, times)
}

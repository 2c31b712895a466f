//! Transport factors along a path `t -> J_t` anchored at `J_0 = path(0)`.
//!
//! `mu_t = exp(int_0^t 1/4 Tr[Pi_u^0 d/du(-J_0 J_u)] du)`, the transport
//! `tau^K` of `det V^{(0,1)}`, and the determinant of `conj(Pi_t^0)`.

use crate::error::{Error, Result};
use crate::gaussian::{compose, kernel_of, ModelKernel};
use crate::linalg::{c, complexify, hermitian_power, CMat, RMat};
use crate::quadrature::{gauss_legendre, integrate_affine, whitening, QuadratureSpec};
use crate::symplectic::{interpolation_operators, projector_holo, CompatibleStructure, StructurePath};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

/// Absolute tolerance for transport identities.
pub const TAU_ODE: f64 = 1e-7;
/// Centered-difference step in `t` for kernel derivatives.
pub const FD_STEP: f64 = 1e-5;
const MAX_PANELS: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathDiscretization {
    pub steps: usize,
    pub scheme: Scheme,
    /// Repeat with doubled resolution and require agreement to `TAU_ODE`.
    pub richardson: bool,
}

impl Default for PathDiscretization {
    fn default() -> Self {
        Self { steps: 256, scheme: Scheme::Rk4Fixed, richardson: true }
    }
}

impl PathDiscretization {
    pub fn new(steps: usize) -> Result<Self> {
        if steps < 16 {
            return Err(Error::InvalidInput(format!("need at least 16 steps, got {steps}")));
        }
        Ok(Self { steps, ..Self::default() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportFactors {
    pub t: f64,
    pub mu: Complex64,
    pub tau_k: Complex64,
    pub det_pi_bar: Complex64,
    pub g0: Complex64,
}

impl TransportFactors {
    /// `|conj(mu)^{-2} tau^K - det conj(Pi)|`.
    pub fn canonical_residual(&self) -> f64 {
        (self.tau_k / (self.mu.conj() * self.mu.conj()) - self.det_pi_bar).norm()
    }

    /// `|conj(g0)^2 det conj(Pi) - tau^K|`.
    pub fn g0_residual(&self) -> f64 {
        (self.g0.conj() * self.g0.conj() * self.det_pi_bar - self.tau_k).norm()
    }
}

/// `1/4 Tr[Pi_u^0 d/du(-J_0 J_u)]`.
pub fn mu_integrand(path: &StructurePath, j0: &CompatibleStructure, u: f64) -> Result<Complex64> {
    let ju = path.at(u)?;
    let pi = interpolation_operators(&ju, j0)?.pi;
    let d = -(j0.j() * path.derivative(u)?);
    Ok((pi.matrix() * complexify(&d)).trace() / 4.0)
}

fn log_mu(path: &StructurePath, j0: &CompatibleStructure, t: f64, panels: usize) -> Result<Complex64> {
    let rule = gauss_legendre(8);
    let h = t / panels as f64;
    let mut sum = c(0.0, 0.0);
    for p in 0..panels {
        let a = p as f64 * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            sum += mu_integrand(path, j0, a + 0.5 * h * (x + 1.0))? * (0.5 * h * w);
        }
    }
    Ok(sum)
}

/// `mu_t` by composite 8-point Gauss-Legendre on `steps / 16` panels,
/// doubled until two successive values agree to `TAU_ODE`.
pub fn mu(path: &StructurePath, t: f64, disc: &PathDiscretization) -> Result<Complex64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(c(1.0, 0.0));
    }
    let j0 = path.start()?;
    let mut panels = (disc.steps / 16).max(1);
    let mut value = log_mu(path, &j0, t, panels)?.exp();
    if !disc.richardson {
        return Ok(value);
    }
    loop {
        panels *= 2;
        let next = log_mu(path, &j0, t, panels)?.exp();
        let change = (next - value).norm();
        if change < TAU_ODE * 1e-2 {
            return Ok(next);
        }
        if panels >= MAX_PANELS {
            return Err(Error::ConvergenceFailure { change, tol: TAU_ODE });
        }
        value = next;
    }
}

/// `P_t P_0` as a closed-form kernel along the path.
pub fn composed_kernel(path: &StructurePath, t: f64) -> Result<ModelKernel> {
    compose(&kernel_of(&path.at(t)?), &kernel_of(&path.start()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutVariant {
    /// `P_t (d/dt P_t P_0) + 1/4 Tr[...] P_t P_0`.
    Mut,
    /// `P_t d/dt (mu_t P_t P_0)`.
    Tilmut,
}

/// Fixed sample of point pairs used by the kernel identities.
pub fn sample_pairs(n: usize, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let z = (0..2 * n).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let zp = (0..2 * n).map(|_| rng.gen_range(-0.8..0.8)).collect();
            (z, zp)
        })
        .collect()
}

/// Max over 10 point pairs of the residual of the chosen kernel identity.
/// `d/dt` is a centered difference; the outer `P_t` is applied by quadrature.
pub fn mut_identity_residual(
    path: &StructurePath,
    t: f64,
    disc: &PathDiscretization,
    variant: MutVariant,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(t > FD_STEP && t < 1.0 - FD_STEP) {
        return Err(Error::InvalidInput(format!("t = {t} must be interior")));
    }
    let n = path.n();
    let kt = kernel_of(&path.at(t)?);
    let kt0 = composed_kernel(path, t)?;
    let kp = composed_kernel(path, t + FD_STEP)?;
    let km = composed_kernel(path, t - FD_STEP)?;
    let (wp, wm, trace_term) = match variant {
        MutVariant::Mut => {
            let j0 = path.start()?;
            (c(1.0, 0.0), c(1.0, 0.0), Some(mu_integrand(path, &j0, t)?))
        }
        MutVariant::Tilmut => (mu(path, t + FD_STEP, disc)?, mu(path, t - FD_STEP, disc)?, None),
    };
    let r1 = kt.m().map(|z| z.re);
    let r2 = kt0.m().map(|z| z.re);
    let r = &r1 + &r2;
    let tw = whitening(&r)?;
    let mut worst: f64 = 0.0;
    for (z, zp) in sample_pairs(n, 10, 0x7a11) {
        let center = r
            .clone()
            .lu()
            .solve(&(&r1 * DVector::from_column_slice(&z) + &r2 * DVector::from_column_slice(&zp)))
            .ok_or(Error::NotPositive)?;
        let outer = integrate_affine(center.as_slice(), &tw, spec, 2, |y| {
            let d = (kp.eval(y, &zp) * wp - km.eval(y, &zp) * wm) / (2.0 * FD_STEP);
            kt.eval(&z, y) * d
        })?;
        let res = match trace_term {
            Some(f) => outer + f * kt0.eval(&z, &zp),
            None => outer,
        };
        worst = worst.max(res.norm());
    }
    Ok(worst)
}

/// `|mu_t (P_t P_0)(0, 0) - conj(mu_t)^{-1}|`.
pub fn barmut_check(path: &StructurePath, t: f64, disc: &PathDiscretization) -> Result<f64> {
    let m = mu(path, t, disc)?;
    let k = composed_kernel(path, t)?;
    Ok((m * k.c() - 1.0 / m.conj()).norm())
}

fn frame_rhs(path: &StructurePath, t: f64, v: &CMat) -> Result<CMat> {
    // d/dt P^{(0,1)} = (i/2) dJ/dt, and P dP P = 0 on V_t^{(0,1)}.
    Ok(complexify(&path.derivative(t)?) * c(0.0, 0.5) * v)
}

fn transport_frame(path: &StructurePath, t: f64, steps: usize, f: &CMat) -> Result<CMat> {
    let h = t / steps as f64;
    let mut v = f.clone();
    for k in 0..steps {
        let s = k as f64 * h;
        let k1 = frame_rhs(path, s, &v)?;
        let k2 = frame_rhs(path, s + 0.5 * h, &(&v + &k1 * c(0.5 * h, 0.0)))?;
        let k3 = frame_rhs(path, s + 0.5 * h, &(&v + &k2 * c(0.5 * h, 0.0)))?;
        let k4 = frame_rhs(path, s + h, &(&v + &k3 * c(h, 0.0)))?;
        v += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0);
    }
    Ok(v)
}

/// Base frame `conj(d/dz_j) = P_0^{(0,1)} e_{2j}` of `V_0^{(0,1)}`.
pub fn base_frame(j0: &CompatibleStructure) -> CMat {
    let n = j0.n();
    let p = projector_holo(j0).conjugate();
    CMat::from_fn(2 * n, n, |r, k| p.matrix()[(r, 2 * k)])
}

/// Hermitian Gram matrix `F^H G F` of a frame for the metric of `J`.
pub fn frame_gram(j: &CompatibleStructure, f: &CMat) -> CMat {
    f.adjoint() * complexify(j.metric()) * f
}

/// Transport of `det V^{(0,1)}` and `det conj(Pi_t^0)`, both expressed
/// against the unitary part of `conj(Pi_t^0)`.
///
/// `det conj(Pi)` is then `sqrt(det Gram_t(conj(Pi) f) / det Gram_0(f))`.
pub fn canonical_transport(path: &StructurePath, t: f64, disc: &PathDiscretization) -> Result<(Complex64, Complex64)> {
    let j0 = path.start()?;
    let jt = path.at(t)?;
    let f = base_frame(&j0);
    let pibar = interpolation_operators(&jt, &j0)?.pi_bar();
    let target = &pibar * &f;
    let g0 = frame_gram(&j0, &f);
    let gt = frame_gram(&jt, &target);
    let det_pi_bar = (gt.determinant() / g0.determinant()).sqrt();

    let solve = |steps: usize| -> Result<Complex64> {
        let v = transport_frame(path, t, steps, &f)?;
        // Coordinates of v in the frame conj(Pi) f; the frame lies in V_t^{(0,1)}.
        let coords = (target.adjoint() * &target)
            .lu()
            .solve(&(target.adjoint() * &v))
            .ok_or(Error::SingularInterpolation)?;
        Ok(coords.determinant() * det_pi_bar)
    };
    let tau = solve(disc.steps)?;
    if disc.richardson {
        let fine = solve(2 * disc.steps)?;
        let change = (fine - tau).norm();
        if change > TAU_ODE {
            return Err(Error::ConvergenceFailure { change, tol: TAU_ODE });
        }
        return Ok((fine, det_pi_bar));
    }
    Ok((tau, det_pi_bar))
}

/// Unitary part `U` of `conj(Pi_t^0): (V_0^{(0,1)}, h_0) -> (V_t^{(0,1)}, h_t)`
/// applied to the base frame.
pub fn polar_frame(j0: &CompatibleStructure, jt: &CompatibleStructure) -> Result<CMat> {
    let f = base_frame(j0);
    let target = interpolation_operators(jt, j0)?.pi_bar() * &f;
    let g0 = frame_gram(j0, &f);
    let gt = frame_gram(jt, &target);
    // U f = (Pi f) Gram_t^{-1/2} Gram_0^{1/2}, up to the unitary freedom that
    // the determinant does not see.
    let s = hermitian_power(&gt, -0.5) * hermitian_power(&g0, 0.5);
    Ok(target * s)
}

pub fn transport_factors(path: &StructurePath, t: f64, disc: &PathDiscretization) -> Result<TransportFactors> {
    let m = mu(path, t, disc)?;
    let (tau_k, det_pi_bar) = canonical_transport(path, t, disc)?;
    Ok(TransportFactors { t, mu: m, tau_k, det_pi_bar, g0: m })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G0Report {
    pub g0: Complex64,
    /// `|conj(g0)^2 det conj(Pi) - tau^K|`.
    pub identity_residual: f64,
}

/// First Toeplitz coefficient for the trivial auxiliary bundle: `g0 = mu_t`.
pub fn g0(path: &StructurePath, t: f64, disc: &PathDiscretization) -> Result<G0Report> {
    let f = transport_factors(path, t, disc)?;
    Ok(G0Report { g0: f.g0, identity_residual: f.g0_residual() })
}

/// Solves `g' = 1/4 Tr[Pi_t^0 d/dt(-J_0 J_t)] g`, `g(0) = 1`, by RK4 and
/// returns `max |g(t) - mu_t|` over `t = k/16`.
pub fn g0_ode_crosscheck(path: &StructurePath, disc: &PathDiscretization) -> Result<f64> {
    let j0 = path.start()?;
    let run = |steps: usize| -> Result<Vec<Complex64>> {
        let h = 1.0 / steps as f64;
        let mut g = c(1.0, 0.0);
        let mut out = vec![g];
        let stride = steps / 16;
        for k in 0..steps {
            let s = k as f64 * h;
            let fa = mu_integrand(path, &j0, s)?;
            let fm = mu_integrand(path, &j0, s + 0.5 * h)?;
            let fb = mu_integrand(path, &j0, s + h)?;
            let k1 = fa * g;
            let k2 = fm * (g + k1 * (0.5 * h));
            let k3 = fm * (g + k2 * (0.5 * h));
            let k4 = fb * (g + k3 * h);
            g += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            if (k + 1) % stride == 0 {
                out.push(g);
            }
        }
        Ok(out)
    };
    let steps = disc.steps.max(16) / 16 * 16;
    let mut gs = run(steps)?;
    if disc.richardson {
        let fine = run(2 * steps)?;
        let change = gs.iter().zip(&fine).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if change > TAU_ODE {
            return Err(Error::ConvergenceFailure { change, tol: TAU_ODE });
        }
        gs = fine;
    }
    let mut worst: f64 = 0.0;
    for (k, g) in gs.iter().enumerate() {
        let m = mu(path, k as f64 / 16.0, disc)?;
        worst = worst.max((g - m).norm());
    }
    Ok(worst)
}

/// The fixed set of paths the transport identities are checked on.
pub fn regression_paths() -> Vec<(String, StructurePath)> {
    let i = c(0.0, 1.0);
    let mut out = vec![
        ("scaling:1.0".to_string(), StructurePath::diagonal_scaling(1, 1.0).unwrap()),
        ("segment:i,1+i".to_string(), StructurePath::upper_half_plane_segment(i, c(1.0, 1.0)).unwrap()),
        ("segment:i,2i".to_string(), StructurePath::upper_half_plane_segment(i, c(0.0, 2.0)).unwrap()),
    ];
    let base = StructurePath::upper_half_plane_segment(c(0.3, 0.8), c(-0.5, 1.7)).unwrap();
    out.push(("segment:0.3+0.8i,-0.5+1.7i;power:2".to_string(), StructurePath::reparametrized(base, 2.0).unwrap()));
    out.push(("scaling2:-0.6".to_string(), StructurePath::diagonal_scaling(2, -0.6).unwrap()));
    let z0 = CMat::from_row_slice(2, 2, &[c(0.1, 1.2), c(0.2, 0.3), c(0.2, 0.3), c(-0.3, 0.9)]);
    let z1 = CMat::from_row_slice(2, 2, &[c(-0.4, 0.7), c(0.1, -0.1), c(0.1, -0.1), c(0.6, 1.5)]);
    out.push(("siegel2".to_string(), StructurePath::siegel_segment(z0, z1).unwrap()));
    out
}

/// Parameter values at which the regression identities are evaluated.
pub const REGRESSION_TIMES: [f64; 3] = [0.25, 0.5, 0.75];

/// Real-matrix helper: `-J_0 J_t` along the path.
pub fn relative_metric(path: &StructurePath, t: f64) -> Result<RMat> {
    Ok(-(path.start()?.j() * path.at(t)?.j()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc() -> PathDiscretization {
        PathDiscretization::default()
    }

    #[test]
    fn constant_path_is_trivial() {
        let p = StructurePath::constant(CompatibleStructure::from_modulus(c(0.2, 1.3)).unwrap());
        assert_eq!(mu(&p, 0.7, &disc()).unwrap(), c(1.0, 0.0));
        assert_eq!(barmut_check(&p, 0.7, &disc()).unwrap(), 0.0);
        let (tau, det) = canonical_transport(&p, 0.7, &disc()).unwrap();
        assert!((tau - c(1.0, 0.0)).norm() < 1e-14);
        assert!((det - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn scaling_closed_forms() {
        let p = StructurePath::diagonal_scaling(1, 1.0).unwrap();
        let m = mu(&p, 1.0, &disc()).unwrap();
        assert!((m - c(1f64.cosh().sqrt(), 0.0)).norm() < 1e-10);
        assert!((m.re - 1.2422079676).abs() < 1e-9);
        assert!(barmut_check(&p, 1.0, &disc()).unwrap() < 1e-9);
        let f = transport_factors(&p, 1.0, &disc()).unwrap();
        assert!((f.det_pi_bar - c(1.0 / 1f64.cosh(), 0.0)).norm() < 1e-12);
        assert!((f.tau_k - c(1.0, 0.0)).norm() < 1e-9);
        assert!(f.canonical_residual() < 1e-9);
        let half = mu(&p, 0.5, &disc()).unwrap();
        assert!((half.re - 0.5f64.cosh().sqrt()).abs() < 1e-10);
    }

    #[test]
    fn reparametrization_leaves_mu_unchanged() {
        let base = StructurePath::upper_half_plane_segment(c(0.0, 1.0), c(1.0, 1.0)).unwrap();
        let rep = StructurePath::reparametrized(base.clone(), 3.0).unwrap();
        for t in [0.3, 0.8, 1.0] {
            let a = mu(&rep, t, &disc()).unwrap();
            let b = mu(&base, t.powi(3), &disc()).unwrap();
            assert!((a - b).norm() < TAU_ODE, "{a} vs {b}");
        }
    }

    #[test]
    fn canonical_identity_on_segment() {
        let p = StructurePath::upper_half_plane_segment(c(0.0, 1.0), c(1.0, 1.0)).unwrap();
        let f = transport_factors(&p, 1.0, &disc()).unwrap();
        assert!(f.canonical_residual() < 1e-7, "{f:?}");
        assert!(f.g0_residual() < 1e-7);
        assert!(barmut_check(&p, 1.0, &disc()).unwrap() < 1e-7);
        assert!((f.tau_k.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ode_matches_quadrature() {
        let p = StructurePath::diagonal_scaling(1, 1.0).unwrap();
        assert!(g0_ode_crosscheck(&p, &disc()).unwrap() < 1e-8);
    }
}

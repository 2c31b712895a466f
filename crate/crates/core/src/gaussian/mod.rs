//! Model Bergman kernels on `R^{2n}` and their compositions.
//!
//! A [`ModelKernel`] is `c exp(-pi [(Z-Z')^T M (Z-Z') + i Omega(Z, Z')])`.
//! Composing two of them against a polynomial weight is done exactly by
//! completing the square in the middle variable and averaging the weight
//! over the resulting complex Gaussian.

mod poly;
mod wick;

pub use poly::Polynomial;
pub use wick::{expectation, Moments, MAX_WICK_DEGREE};

use crate::error::{Error, Result};
use crate::linalg::{c, complexify, conj, frob, sym_part, CMat};
use crate::quadrature::{integrate_affine, quadrature_compose, whitening, QuadratureSpec};
use crate::symplectic::{
    interpolation_operators, omega_pairing, projector_holo, sqrt_det_convention, standard_j, standard_omega,
    CompatibleStructure,
};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

const PURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelKernel {
    n: usize,
    m: CMat,
    c: Complex64,
}

impl ModelKernel {
    /// Only the symmetric part of `m` is kept.
    pub fn new(m: CMat, c: Complex64) -> Result<Self> {
        let dim = m.nrows();
        if dim == 0 || dim % 2 != 0 || m.ncols() != dim {
            return Err(Error::InvalidDimension(format!("exponent matrix is {}x{}", m.nrows(), m.ncols())));
        }
        let m = sym_part(&m);
        if m.map(|z| z.re).cholesky().is_none() {
            return Err(Error::NotPositive);
        }
        Ok(Self { n: dim / 2, m, c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> &CMat {
        &self.m
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    pub fn eval(&self, z: &[f64], zp: &[f64]) -> Complex64 {
        self.c * self.exponent(z, zp).exp()
    }

    /// `log(K(Z, Z') / c)`.
    pub fn exponent(&self, z: &[f64], zp: &[f64]) -> Complex64 {
        let dim = z.len();
        let mut q = Complex64::new(0.0, 0.0);
        for a in 0..dim {
            let da = z[a] - zp[a];
            if da == 0.0 {
                continue;
            }
            let mut row = Complex64::new(0.0, 0.0);
            for b in 0..dim {
                row += self.m[(a, b)] * (z[b] - zp[b]);
            }
            q += row * da;
        }
        -PI * (q + Complex64::new(0.0, omega_pairing(z, zp)))
    }

    /// The structure `J` of a pure kernel (`c = 1`, `M = G/2` real).
    pub fn structure(&self) -> Result<CompatibleStructure> {
        let im = frob(&self.m.map(|z| z.im));
        if (self.c - c(1.0, 0.0)).norm() > PURE_TOL || im > PURE_TOL {
            return Err(Error::InvalidInput("kernel is not a pure Bergman kernel".into()));
        }
        let g = self.m.map(|z| 2.0 * z.re);
        CompatibleStructure::new(standard_j(self.n) * g)
    }
}

/// A kernel `weight(Z, Z') * base(Z, Z')`; the weight has variables `(Z, Z')`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyKernel {
    pub base: ModelKernel,
    pub weight: Polynomial,
}

impl PolyKernel {
    pub fn eval(&self, z: &[f64], zp: &[f64]) -> Complex64 {
        let all: Vec<f64> = z.iter().chain(zp).copied().collect();
        self.weight.eval_real(&all) * self.base.eval(z, zp)
    }

    pub fn weight_at(&self, z: &[f64], zp: &[f64]) -> Complex64 {
        let all: Vec<f64> = z.iter().chain(zp).copied().collect();
        self.weight.eval_real(&all)
    }
}

/// The Bergman kernel `exp(-pi/2 |Z-Z'|_J^2 - i pi Omega(Z, Z'))` of `J`.
pub fn kernel_of(j: &CompatibleStructure) -> ModelKernel {
    ModelKernel { n: j.n(), m: complexify(j.metric()).scale(0.5), c: c(1.0, 0.0) }
}

/// Closed-form `P_t P_0` for pure kernels:
/// `c = det(A_t^0)^{1/2}`, `M = sym(G_0 Pi_0^t)`.
pub fn compose(kt: &ModelKernel, k0: &ModelKernel) -> Result<ModelKernel> {
    if kt.n != k0.n {
        return Err(Error::DimensionMismatch { expected: kt.n, found: k0.n });
    }
    let jt = kt.structure()?;
    let j0 = k0.structure()?;
    let fwd = interpolation_operators(&jt, &j0)?;
    let back = interpolation_operators(&j0, &jt)?;
    let det = fwd.a.determinant();
    if det <= 0.0 {
        return Err(Error::NotPositive);
    }
    let m = sym_part(&(complexify(j0.metric()) * back.pi.matrix()));
    Ok(ModelKernel { n: kt.n, m, c: c(det.sqrt(), 0.0) })
}

/// `int K1(Z, Y) F(Z, Y, Z') K2(Y, Z') dY` with `F` in `6n` variables.
pub fn compose_general(k1: &ModelKernel, f: &Polynomial, k2: &ModelKernel) -> Result<PolyKernel> {
    let n = k1.n;
    if k2.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: k2.n });
    }
    let dim = 2 * n;
    if f.n_vars() != 3 * dim {
        return Err(Error::DimensionMismatch { expected: 3 * dim, found: f.n_vars() });
    }
    let s = &k1.m + &k2.m;
    let s_inv = s.clone().try_inverse().ok_or(Error::NotPositive)?;
    let om = complexify(&standard_omega(n));
    let i = c(0.0, 1.0);
    let b1 = k1.m.scale(2.0) - om.transpose() * i;
    let b2 = k2.m.scale(2.0) - &om * i;
    let m = &k1.m - sym_part(&(b1.transpose() * &s_inv * &b1)).scale(0.25);
    let root = sqrt_det_convention(&s, 64)?;
    let prefactor = k1.c * k2.c / root.value;

    // Middle variable: Y = L X + W with X = (Z, Z'), W ~ N(0, (2 pi S)^{-1}).
    let l1 = &s_inv * &b1 * c(0.5, 0.0);
    let l2 = &s_inv * &b2 * c(0.5, 0.0);
    let nv = 2 * dim + dim;
    let mut subs = Vec::with_capacity(3 * dim);
    for k in 0..dim {
        subs.push(Polynomial::var(nv, k));
    }
    for r in 0..dim {
        let mut coeffs: Vec<Complex64> = (0..dim).map(|k| l1[(r, k)]).collect();
        coeffs.extend((0..dim).map(|k| l2[(r, k)]));
        let mut p = Polynomial::linear(nv, 0, &coeffs);
        p = &p + &Polynomial::var(nv, 2 * dim + r);
        subs.push(p);
    }
    for k in 0..dim {
        subs.push(Polynomial::var(nv, dim + k));
    }
    let cov = s_inv.scale(1.0 / (2.0 * PI));
    let weight = expectation(&f.substitute(&subs), &cov);
    Ok(PolyKernel { base: ModelKernel { n, m, c: prefactor }, weight })
}

/// `P_t F P_0` with `F` in the middle variable (`2n` variables) or in
/// `(Z, Y, Z')` (`6n` variables).
pub fn compose_poly(kt: &ModelKernel, f: &Polynomial, k0: &ModelKernel) -> Result<PolyKernel> {
    let dim = 2 * kt.n;
    let f6 = if f.n_vars() == dim {
        f.embed(3 * dim, dim)
    } else if f.n_vars() == 3 * dim {
        f.clone()
    } else {
        return Err(Error::DimensionMismatch { expected: dim, found: f.n_vars() });
    };
    compose_general(kt, &f6, k0)
}

/// `<B (X_a - X_b), (X_a - X_b)>` in `n_vars` variables, blocks of size `b.nrows()`.
pub fn difference_form(b: &CMat, n_vars: usize, a_off: usize, b_off: usize) -> Polynomial {
    let dim = b.nrows();
    let diff: Vec<Polynomial> = (0..dim)
        .map(|k| &Polynomial::var(n_vars, a_off + k) - &Polynomial::var(n_vars, b_off + k))
        .collect();
    bilinear_form(b, &diff)
}

/// `<B P u, P u>` for linear polynomials `u`.
fn projected_form(b: &CMat, p: &CMat, u: &[Polynomial]) -> Polynomial {
    let nv = u[0].n_vars();
    let pu: Vec<Polynomial> = (0..p.nrows())
        .map(|r| {
            (0..p.ncols()).fold(Polynomial::zero(nv), |acc, k| &acc + &u[k].scale(p[(r, k)]))
        })
        .collect();
    bilinear_form(b, &pu)
}

fn bilinear_form(b: &CMat, u: &[Polynomial]) -> Polynomial {
    let nv = u[0].n_vars();
    let mut out = Polynomial::zero(nv);
    for r in 0..b.nrows() {
        for k in 0..b.ncols() {
            if b[(r, k)] != c(0.0, 0.0) {
                out = &out + &(&u[k] * &u[r]).scale(b[(r, k)]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Weight `<B(Z - Y), (Z - Y)>`.
    Left,
    /// Weight `<B(Z' - Y), (Z' - Y)>`.
    Right,
}

/// Closed form of `P_t <B(X - Y), (X - Y)> P_0` with `X = Z` or `Z'`.
///
/// Left: `<B conj(Pi_t^0) W, conj(Pi_t^0) W> + Tr[A_t^0 G_0^{-1} B] / 2pi`.
/// Right: `<B Pi_0^t W, Pi_0^t W> + Tr[A_0^t G_t^{-1} B] / 2pi`, `W = Z - Z'`.
/// Both trace terms equal `Tr[2 (G_t + G_0)^{-1} B] / 2pi`.
pub fn quadratic_moment(kt: &ModelKernel, b: &CMat, side: Side, k0: &ModelKernel) -> Result<PolyKernel> {
    let n = kt.n;
    let dim = 2 * n;
    if b.nrows() != dim || b.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: b.nrows() });
    }
    let jt = kt.structure()?;
    let j0 = k0.structure()?;
    let base = compose(kt, k0)?;
    let (proj, a, g) = match side {
        Side::Left => {
            let it = interpolation_operators(&jt, &j0)?;
            (it.pi_bar(), it.a, j0.metric().clone())
        }
        Side::Right => {
            let it = interpolation_operators(&j0, &jt)?;
            (it.pi.matrix().clone(), it.a, jt.metric().clone())
        }
    };
    let g_inv = g.try_inverse().ok_or(Error::NotPositive)?;
    let trace = (complexify(&(a * g_inv)) * b).trace() / (2.0 * PI);
    let nv = 2 * dim;
    let w: Vec<Polynomial> = (0..dim)
        .map(|k| &Polynomial::var(nv, k) - &Polynomial::var(nv, dim + k))
        .collect();
    let weight = &projected_form(b, &proj, &w) + &Polynomial::constant(nv, trace);
    Ok(PolyKernel { base, weight })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coords {
    /// Dependence on `Z` only through the `J_t`-holomorphic coordinates.
    HoloT,
    /// Dependence on `Z'` only through the `J_0`-antiholomorphic coordinates.
    AntiHolo0,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReproducingReport {
    /// Max deviation between quadrature and closed-form triple composition.
    pub composition: f64,
    /// Max derivative of the weight along `V_t^{(0,1)}` in `Z`.
    pub holo_t: f64,
    /// Max derivative of the weight along `V_0^{(1,0)}` in `Z'`.
    pub antiholo_0: f64,
}

impl ReproducingReport {
    pub fn residual(&self, coords: Coords) -> f64 {
        self.composition.max(match coords {
            Coords::HoloT => self.holo_t,
            Coords::AntiHolo0 => self.antiholo_0,
        })
    }
}

/// Closed-form `P_t (F P_t P_0) P_0 = Q_t(F) P_t P_0` for `F(Z, Z')`.
pub fn triple_compose(jt: &CompatibleStructure, j0: &CompatibleStructure, f: &Polynomial) -> Result<PolyKernel> {
    let kt = kernel_of(jt);
    let k0 = kernel_of(j0);
    let kt0 = compose(&kt, &k0)?;
    let dim = 2 * jt.n();
    if f.n_vars() != 2 * dim {
        return Err(Error::DimensionMismatch { expected: 2 * dim, found: f.n_vars() });
    }
    let inner = compose_general(&kt0, &f.embed(3 * dim, 0), &k0)?;
    let outer = compose_general(&kt, &inner.weight.embed(3 * dim, dim), &inner.base)?;
    Ok(outer)
}

/// Checks `P_t (F P_t P_0) P_0 = Q_t(F) P_t P_0` on 20 fixed points.
///
/// For `n = 1` both integrals are done by quadrature; for `n = 2` the inner
/// one uses the closed form (an 8-dimensional tensor grid is out of reach).
pub fn reproducing_check(
    jt: &CompatibleStructure,
    j0: &CompatibleStructure,
    f: &Polynomial,
    spec: &QuadratureSpec,
) -> Result<ReproducingReport> {
    let n = jt.n();
    if n > 2 {
        return Err(Error::InvalidDimension("reproducing check supports n <= 2".into()));
    }
    let dim = 2 * n;
    let kt = kernel_of(jt);
    let k0 = kernel_of(j0);
    let kt0 = compose(&kt, &k0)?;
    let closed = triple_compose(jt, j0, f)?;
    let f6 = f.embed(3 * dim, 0);
    let inner_closed = compose_general(&kt0, &f6, &k0)?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let points: Vec<(Vec<f64>, Vec<f64>)> = (0..20)
        .map(|_| {
            let z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let zp: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.8..0.8)).collect();
            (z, zp)
        })
        .collect();

    let r1 = kt.m.map(|z| z.re);
    let r2 = kt0.m.map(|z| z.re);
    let r = &r1 + &r2;
    let t = whitening(&r)?;
    let mut composition: f64 = 0.0;
    for (z, zp) in &points {
        let zv = DVector::from_column_slice(z);
        let zpv = DVector::from_column_slice(zp);
        let center = r.clone().lu().solve(&(&r1 * &zv + &r2 * &zpv)).ok_or(Error::NotPositive)?;
        let inner = |w: &[f64]| -> Complex64 {
            if n == 1 {
                quadrature_compose(&kt0, Some(&f6), &k0, w, zp, spec).unwrap_or(Complex64::new(f64::NAN, 0.0))
            } else {
                inner_closed.eval(w, zp)
            }
        };
        let lhs = integrate_affine(center.as_slice(), &t, spec, f.degree(), |w| kt.eval(z, w) * inner(w))?;
        if !lhs.is_finite() {
            return Err(Error::TailBoundViolated { bound: f64::NAN });
        }
        composition = composition.max((lhs - closed.eval(z, zp)).norm());
    }

    let pt01 = conj(projector_holo(jt).matrix());
    let p010 = projector_holo(j0).matrix().clone();
    let h = 1e-4;
    let directional = |z: &[f64], zp: &[f64], dir: &CMat, offset: usize| -> f64 {
        let base: Vec<Complex64> = z.iter().chain(zp).map(|&x| c(x, 0.0)).collect();
        let mut worst: f64 = 0.0;
        for col in 0..dir.ncols() {
            let mut plus = base.clone();
            let mut minus = base.clone();
            for k in 0..dim {
                plus[offset + k] += dir[(k, col)] * h;
                minus[offset + k] -= dir[(k, col)] * h;
            }
            let d = (closed.weight.eval(&plus) - closed.weight.eval(&minus)) / (2.0 * h);
            worst = worst.max(d.norm());
        }
        worst
    };
    let mut holo_t: f64 = 0.0;
    let mut antiholo_0: f64 = 0.0;
    for (z, zp) in &points {
        holo_t = holo_t.max(directional(z, zp, &pt01, 0));
        antiholo_0 = antiholo_0.max(directional(z, zp, &p010, dim));
    }
    Ok(ReproducingReport { composition, holo_t, antiholo_0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cfrob;
    use nalgebra::dmatrix;

    fn scaling() -> CompatibleStructure {
        CompatibleStructure::new(dmatrix![0.0, -4.0; 0.25, 0.0]).unwrap()
    }

    fn siegel2() -> CompatibleStructure {
        CompatibleStructure::from_siegel(&CMat::from_row_slice(
            2,
            2,
            &[c(0.2, 1.3), c(-0.1, 0.4), c(-0.1, 0.4), c(0.5, 0.9)],
        ))
        .unwrap()
    }

    fn siegel2b() -> CompatibleStructure {
        CompatibleStructure::from_siegel(&CMat::from_row_slice(
            2,
            2,
            &[c(-0.3, 0.8), c(0.2, 0.1), c(0.2, 0.1), c(0.1, 1.6)],
        ))
        .unwrap()
    }

    #[test]
    fn pure_kernel_examples() {
        let k = kernel_of(&CompatibleStructure::standard(1));
        assert!((k.eval(&[0.7, -0.2], &[0.0, 0.0]) - c((-PI * 0.53 / 2.0).exp(), 0.0)).norm() < 1e-15);
        let ks = kernel_of(&scaling());
        assert_eq!(ks.m().map(|z| z.re), dmatrix![0.125, 0.0; 0.0, 2.0]);
        assert!((ks.eval(&[0.3, 0.4], &[0.3, 0.4]) - c(1.0, 0.0)).norm() < 1e-15);
        let a = [0.3, -1.1];
        let b = [0.5, 0.2];
        assert!((ks.eval(&a, &b) - ks.eval(&b, &a).conj()).norm() < 1e-15);
    }

    #[test]
    fn scaling_pair_composition() {
        let kt = kernel_of(&scaling());
        let k0 = kernel_of(&CompatibleStructure::standard(1));
        let k = compose(&kt, &k0).unwrap();
        assert!((k.c() - c(0.8, 0.0)).norm() < 1e-14);
        // M = Pi_0^1 with A_0^1 = diag(2/5, 8/5); only the symmetric part is kept.
        let pi = CMat::from_row_slice(2, 2, &[c(0.2, 0.0), c(0.0, 0.8), c(0.0, -0.2), c(0.8, 0.0)]);
        assert!(cfrob(&(k.m() - sym_part(&pi))) < 1e-14);
        let same = compose(&k0, &k0).unwrap();
        assert_eq!(same.c(), c(1.0, 0.0));
        assert!(cfrob(&(same.m() - k0.m())) < 1e-14);
    }

    #[test]
    fn closed_form_matches_square_completion() {
        for (jt, j0) in [(scaling(), CompatibleStructure::standard(1)), (siegel2(), siegel2b())] {
            let kt = kernel_of(&jt);
            let k0 = kernel_of(&j0);
            let closed = compose(&kt, &k0).unwrap();
            let general = compose_general(&kt, &Polynomial::one(6 * jt.n()), &k0).unwrap();
            assert!((closed.c() - general.base.c()).norm() < 1e-12);
            assert!(cfrob(&(closed.m() - general.base.m())) < 1e-12);
            assert_eq!(general.weight, Polynomial::one(4 * jt.n()));
            let z: Vec<f64> = (0..2 * jt.n()).map(|k| 0.3 * k as f64 - 0.2).collect();
            let zp: Vec<f64> = (0..2 * jt.n()).map(|k| 0.1 - 0.25 * k as f64).collect();
            assert!((closed.eval(&z, &zp) - general.eval(&z, &zp)).norm() < 1e-12);
        }
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let kt = kernel_of(&scaling());
        let k0 = kernel_of(&CompatibleStructure::standard(1));
        let k = compose(&kt, &k0).unwrap();
        let q = quadrature_compose(&kt, None, &k0, &[1.0, 0.0], &[0.0, 0.0], &QuadratureSpec::for_dim(1)).unwrap();
        let v = k.eval(&[1.0, 0.0], &[0.0, 0.0]);
        assert!((q - v).norm() / v.norm() < 1e-6, "{q} vs {v}");
    }

    #[test]
    fn moment_example_and_parity() {
        let kt = kernel_of(&scaling());
        let k0 = kernel_of(&CompatibleStructure::standard(1));
        // F(Y) = |Z - Y|^2 at Z = Z' = 0.
        let f = difference_form(&CMat::identity(2, 2), 6, 0, 2);
        let pk = compose_poly(&kt, &f, &k0).unwrap();
        let v = pk.eval(&[0.0, 0.0], &[0.0, 0.0]);
        assert!((v - c(4.0 / (5.0 * PI), 0.0)).norm() < 1e-14, "{v}");
        let odd = Polynomial::var(2, 0).pow(3);
        let pk = compose_poly(&kt, &odd, &k0).unwrap();
        assert_eq!(pk.weight.parity(), Some(1));
        assert!(pk.eval(&[0.0, 0.0], &[0.0, 0.0]).norm() < 1e-15);
    }

    #[test]
    fn quadratic_moment_matches_engine() {
        let b = CMat::from_row_slice(
            4,
            4,
            &[
                c(1.0, 0.2), c(0.3, 0.0), c(-0.5, 0.1), c(0.0, 0.4),
                c(0.2, -0.3), c(0.7, 0.0), c(0.1, 0.1), c(0.9, 0.0),
                c(0.0, 0.0), c(-0.4, 0.6), c(1.2, 0.0), c(0.3, -0.2),
                c(0.5, 0.5), c(0.0, -0.1), c(0.2, 0.0), c(-0.6, 0.0),
            ],
        );
        let kt = kernel_of(&siegel2());
        let k0 = kernel_of(&siegel2b());
        let z = [0.3, -0.4, 0.1, 0.6];
        let zp = [-0.2, 0.5, 0.7, -0.1];
        for (side, off) in [(Side::Left, 0), (Side::Right, 8)] {
            let closed = quadratic_moment(&kt, &b, side, &k0).unwrap();
            let engine = compose_poly(&kt, &difference_form(&b, 12, off, 4), &k0).unwrap();
            let d = (closed.eval(&z, &zp) - engine.eval(&z, &zp)).norm();
            assert!(d < 1e-12, "{side:?}: {d}");
            let d0 = (closed.eval(&z, &z) - engine.eval(&z, &z)).norm();
            assert!(d0 < 1e-12);
        }
    }
}

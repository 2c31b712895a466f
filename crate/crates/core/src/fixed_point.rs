//! Leading coefficients of trace formulas at fixed points of a symplectic
//! map, from linear data at the fixed point.

use crate::error::{Error, Result};
use crate::gaussian::{compose, kernel_of};
use crate::linalg::{complexify, real_singular_values, CMat, RMat};
use crate::quadrature::{gaussian_integral, integrate_affine, oscillation_nodes, whitening, QuadratureSpec};
use crate::symplectic::{
    interpolation_operators, projector_holo, sqrt_det_convention, symplectic_residual, BranchedValue,
    CompatibleStructure, StructurePath, ALG_TOL,
};
use crate::transport::{base_frame, canonical_transport, frame_gram, mu, PathDiscretization};
use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Smallest admissible singular value of `I - dphi` (on `N` for components).
pub const DEGENERACY_TOL: f64 = 1e-6;
const BRANCH_STEPS: usize = 64;

#[derive(Debug, Clone)]
pub struct FixedPointDatum {
    pub dphi: RMat,
    /// Value of the lift at the point.
    pub lambda: Complex64,
    pub j0: CompatibleStructure,
    /// From `J_0` to `J_1 = dphi J_0 dphi^{-1}`.
    pub path: StructurePath,
    /// Auxiliary-bundle factor; 1 for the trivial bundle.
    pub phi_e_tau_e: Complex64,
}

impl FixedPointDatum {
    /// Uses the straight Siegel segment from `J_0` to `dphi J_0 dphi^{-1}`.
    pub fn new(dphi: RMat, lambda: Complex64, j0: CompatibleStructure) -> Result<Self> {
        let j1 = pushforward(&dphi, &j0)?;
        let path = if (j1.j() - j0.j()).norm() <= ALG_TOL {
            StructurePath::constant(j0.clone())
        } else {
            StructurePath::between(&j0, &j1)?
        };
        Self::with_path(dphi, lambda, j0, path)
    }

    pub fn with_path(dphi: RMat, lambda: Complex64, j0: CompatibleStructure, path: StructurePath) -> Result<Self> {
        let dim = j0.dim();
        if dphi.nrows() != dim || dphi.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: dphi.nrows() });
        }
        let res = symplectic_residual(&dphi);
        if res > ALG_TOL {
            return Err(Error::NotSymplectic { residual: res });
        }
        if ((lambda.norm() - 1.0).abs()) > ALG_TOL {
            return Err(Error::InvalidInput(format!("|lambda| = {} is not 1", lambda.norm())));
        }
        let j1 = pushforward(&dphi, &j0)?;
        let start = path.start()?;
        let end = path.end()?;
        let scale = 1.0 + j0.j().norm_squared();
        let r0 = (start.j() - j0.j()).norm() / scale;
        let r1 = (end.j() - j1.j()).norm() / scale;
        if r0.max(r1) > ALG_TOL {
            return Err(Error::InvalidInput(format!("path endpoints off by {:.2e}", r0.max(r1))));
        }
        Ok(Self { dphi, lambda, j0, path, phi_e_tau_e: Complex64::new(1.0, 0.0) })
    }

    pub fn n(&self) -> usize {
        self.j0.n()
    }

    pub fn j1(&self) -> Result<CompatibleStructure> {
        pushforward(&self.dphi, &self.j0)
    }

    /// `Pi_0^1 - dphi^{-1} conj(Pi_1^0)`.
    pub fn splitting_operator(&self) -> Result<CMat> {
        let j1 = self.j1()?;
        let pi01 = interpolation_operators(&self.j0, &j1)?.pi;
        let pibar10 = interpolation_operators(&j1, &self.j0)?.pi_bar();
        let inv = self.dphi.clone().try_inverse().ok_or(Error::NotSymplectic { residual: f64::INFINITY })?;
        Ok(pi01.matrix() - complexify(&inv) * pibar10)
    }

    /// Symmetric matrix `Q` with the leading term `int exp(-pi Z^T Q Z) dZ`:
    /// `G_0 (Pi_0^1 - dphi^{-1} conj(Pi_1^0)) (I - dphi)`.
    pub fn quadratic_form(&self) -> Result<CMat> {
        let dim = self.j0.dim();
        let id = RMat::identity(dim, dim);
        Ok(complexify(self.j0.metric()) * self.splitting_operator()? * complexify(&(id - &self.dphi)))
    }

    fn mu(&self, disc: &PathDiscretization) -> Result<Complex64> {
        mu(&self.path, 1.0, disc)
    }
}

/// `dphi J dphi^{-1}`.
pub fn pushforward(dphi: &RMat, j: &CompatibleStructure) -> Result<CompatibleStructure> {
    let inv = dphi.clone().try_inverse().ok_or(Error::NotSymplectic { residual: f64::INFINITY })?;
    CompatibleStructure::new(dphi * j.j() * inv)
}

/// Residual of `(Pi_0^1 - dphi^{-1} conj(Pi_1^0)) v = v` on `V_0^{(1,0)}` and
/// `= -v` on `dphi V_0^{(0,1)}` (applied as `T dphi v = -v`).
pub fn splitting_residual(datum: &FixedPointDatum) -> Result<f64> {
    let t = datum.splitting_operator()?;
    let p10 = projector_holo(&datum.j0);
    let p01 = p10.conjugate();
    let d = complexify(&datum.dphi);
    let a = &t * p10.matrix() - p10.matrix();
    let b = &t * &d * p01.matrix() + p01.matrix();
    Ok(a.norm().max(b.norm()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientReport {
    /// `a_0` for an isolated point, the density value `nu_0` for a component.
    pub value: Complex64,
    pub branch: BranchedValue,
    /// Nearest power `k` of `i` to the continued square root, mod 4.
    pub sign_class: u8,
}

fn sign_class(z: Complex64) -> u8 {
    ((z.arg() / FRAC_PI_2).round() as i64).rem_euclid(4) as u8
}

fn check_form(q: &CMat) -> Result<CMat> {
    let sym = (q + q.transpose()).scale(0.5);
    let asym = (q - q.transpose()).norm() / (1.0 + q.norm());
    if asym > 1e-8 {
        return Err(Error::InvalidInput(format!("quadratic form not symmetric ({asym:.2e})")));
    }
    if sym.map(|z| z.re).cholesky().is_none() {
        return Err(Error::NotPositive);
    }
    Ok(sym)
}

fn check_isolated(dphi: &RMat) -> Result<()> {
    let id = RMat::identity(dphi.nrows(), dphi.ncols());
    let s = real_singular_values(&(id - dphi));
    let sigma_min = s.last().copied().unwrap_or(0.0);
    if sigma_min < DEGENERACY_TOL {
        return Err(Error::DegenerateFixedPoint { sigma_min });
    }
    Ok(())
}

/// `a_0 = conj(mu)^{-1} phiE_tauE det^{-1/2}[G_0 (Pi_0^1 - dphi^{-1} conj(Pi_1^0))(I - dphi)]`,
/// the root continued from the real part.
pub fn leading_coeff_isolated(datum: &FixedPointDatum, disc: &PathDiscretization) -> Result<CoefficientReport> {
    check_isolated(&datum.dphi)?;
    let q = check_form(&datum.quadratic_form()?)?;
    let root = sqrt_det_convention(&q, BRANCH_STEPS)?;
    let m = datum.mu(disc)?;
    let value = datum.phi_e_tau_e / (m.conj() * root.value);
    Ok(CoefficientReport { value, sign_class: sign_class(root.value), branch: root })
}

/// The Gaussian integral of the leading term by tensor quadrature.
pub fn gaussian_fixed_point_oracle(
    datum: &FixedPointDatum,
    disc: &PathDiscretization,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    check_isolated(&datum.dphi)?;
    let q = datum.quadratic_form()?;
    let m = datum.mu(disc)?;
    Ok(datum.phi_e_tau_e / m.conj() * gaussian_integral(&q, spec)?)
}

/// `mu int (P_1 P_0)(dphi Z, Z) dZ` with the composed kernel, independent
/// of the closed-form quadratic form. Two-dimensional only: the node count
/// grows with the oscillation of the integrand.
pub fn kernel_fixed_point_oracle(
    datum: &FixedPointDatum,
    disc: &PathDiscretization,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    check_isolated(&datum.dphi)?;
    if datum.n() != 1 {
        return Err(Error::InvalidDimension("kernel oracle is limited to n = 1".into()));
    }
    let k = compose(&kernel_of(&datum.j1()?), &kernel_of(&datum.j0))?;
    let q = datum.quadratic_form()?;
    let t = whitening(&q.map(|z| z.re))?;
    let im = t.transpose() * q.map(|z| z.im) * &t;
    let s = im.symmetric_eigen().eigenvalues.abs().max();
    let spec = QuadratureSpec { nodes: oscillation_nodes(spec, s), ..*spec };
    let d = &datum.dphi;
    let integral = integrate_affine(&[0.0, 0.0], &t, &spec, 0, |z| {
        let w = [d[(0, 0)] * z[0] + d[(0, 1)] * z[1], d[(1, 0)] * z[0] + d[(1, 1)] * z[1]];
        k.eval(&w, z)
    })?;
    Ok(datum.phi_e_tau_e * datum.mu(disc)? * integral)
}

/// Max over sample points of `|(P_1 P_0)(dphi Z, Z) - c exp(-pi Z^T Q Z)|`,
/// relative to `c`.
pub fn kernel_form_residual(datum: &FixedPointDatum) -> Result<f64> {
    let k = compose(&kernel_of(&datum.j1()?), &kernel_of(&datum.j0))?;
    let q = datum.quadratic_form()?;
    let dim = datum.j0.dim();
    let mut worst: f64 = 0.0;
    for (z, _) in crate::transport::sample_pairs(datum.n(), 10, 0xf1) {
        let zv = DVector::from_column_slice(&z);
        let w = &datum.dphi * &zv;
        let zc = zv.map(|x| Complex64::new(x, 0.0));
        let form = (zc.transpose() * &q * &zc)[(0, 0)];
        let expect = k.c() * (-std::f64::consts::PI * form).exp();
        let got = k.eval(w.as_slice(), &z[..dim]);
        worst = worst.max((got - expect).norm() / k.c().norm());
    }
    Ok(worst)
}

/// `phi^K`: the determinant of `dphi: V_0^{(0,1)} -> V_1^{(0,1)}` in the
/// frame `f` at `J_0` and the unitary part of `conj(Pi_1^0) f` at `J_1`.
pub fn phi_k(datum: &FixedPointDatum) -> Result<Complex64> {
    let j1 = datum.j1()?;
    let f = base_frame(&datum.j0);
    let target = interpolation_operators(&j1, &datum.j0)?.pi_bar() * &f;
    let det_pi_bar = (frame_gram(&j1, &target).determinant() / frame_gram(&datum.j0, &f).determinant()).sqrt();
    let image = complexify(&datum.dphi) * &f;
    let coords = (target.adjoint() * &target)
        .lu()
        .solve(&(target.adjoint() * image))
        .ok_or(Error::SingularInterpolation)?;
    Ok(coords.determinant() * det_pi_bar)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricIdentity {
    /// `conj(mu)^{-2} det(Pi_0^1 - dphi^{-1} conj(Pi_1^0))^{-1}`.
    pub lhs: Complex64,
    /// The same without the inverse on the determinant.
    pub uninverted: Complex64,
    /// `(-1)^n phi^K / tau^K`.
    pub rhs: Complex64,
    pub phi_k: Complex64,
    pub tau_k: Complex64,
    pub mu: Complex64,
}

impl GeometricIdentity {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }

    /// Residual of `conj(mu)^{-2} det(...) = (-1)^n phi^K / tau^K`, which
    /// only holds when `|det(...)| = 1`.
    pub fn uninverted_residual(&self) -> f64 {
        (self.uninverted - self.rhs).norm()
    }
}

pub fn geometric_identity(datum: &FixedPointDatum, disc: &PathDiscretization) -> Result<GeometricIdentity> {
    let m = datum.mu(disc)?;
    let (tau_k, _) = canonical_transport(&datum.path, 1.0, disc)?;
    let pk = phi_k(datum)?;
    let det = datum.splitting_operator()?.determinant();
    let mbar2 = m.conj() * m.conj();
    let sign = if datum.n() % 2 == 0 { 1.0 } else { -1.0 };
    Ok(GeometricIdentity {
        lhs: 1.0 / (mbar2 * det),
        uninverted: det / mbar2,
        rhs: pk / tau_k * sign,
        phi_k: pk,
        tau_k,
        mu: m,
    })
}

/// `|conj(mu)^{-2} det(Pi_0^1 - dphi^{-1} conj(Pi_1^0))^{-1} - (-1)^n phi^K / tau^K|`.
pub fn geometric_identity_check(datum: &FixedPointDatum, disc: &PathDiscretization) -> Result<f64> {
    Ok(geometric_identity(datum, disc)?.residual())
}

/// A fixed component with constant linear data.
#[derive(Debug, Clone)]
pub struct FixedComponentDatum {
    pub base: FixedPointDatum,
    /// Columns span `ker(I - dphi)`.
    pub fixed_subspace: RMat,
    /// Columns span a complement `N`.
    pub n_subspace: RMat,
    /// `|dv|_{TX/N}` on the parallelepiped of `fixed_subspace`.
    pub density_ratio: f64,
}

impl FixedComponentDatum {
    pub fn new(base: FixedPointDatum, fixed_subspace: RMat, n_subspace: RMat) -> Result<Self> {
        let dim = base.j0.dim();
        if fixed_subspace.nrows() != dim || n_subspace.nrows() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: fixed_subspace.nrows() });
        }
        if fixed_subspace.ncols() + n_subspace.ncols() != dim {
            return Err(Error::InvalidInput("fixed subspace and N must have complementary dimensions".into()));
        }
        let res = (&base.dphi * &fixed_subspace - &fixed_subspace).norm();
        if res > ALG_TOL * (1.0 + fixed_subspace.norm()) {
            return Err(Error::InvalidInput(format!("dphi is not the identity on the fixed subspace ({res:.2e})")));
        }
        let mut all = RMat::zeros(dim, dim);
        all.columns_mut(0, fixed_subspace.ncols()).copy_from(&fixed_subspace);
        all.columns_mut(fixed_subspace.ncols(), n_subspace.ncols()).copy_from(&n_subspace);
        let s = real_singular_values(&all);
        if s.last().copied().unwrap_or(0.0) < DEGENERACY_TOL * s[0] {
            return Err(Error::InvalidInput("N is not transverse to the fixed subspace".into()));
        }
        let density_ratio = density_ratio(base.j0.metric(), &fixed_subspace, &n_subspace);
        Ok(Self { base, fixed_subspace, n_subspace, density_ratio })
    }

    /// Real dimension of the component.
    pub fn dim(&self) -> usize {
        self.fixed_subspace.ncols()
    }
}

/// `|dv|_{TX}(F, B) / |dv|_N(B)` for the metric `g`.
pub fn density_ratio(g: &RMat, fixed: &RMat, n_basis: &RMat) -> f64 {
    let dim = g.nrows();
    let mut all = RMat::zeros(dim, dim);
    all.columns_mut(0, fixed.ncols()).copy_from(fixed);
    all.columns_mut(fixed.ncols(), n_basis.ncols()).copy_from(n_basis);
    let full = (all.transpose() * g * &all).determinant();
    let nn = (n_basis.transpose() * g * n_basis).determinant();
    (full / nn).sqrt()
}

/// `nu_0 = conj(mu)^{-1} phiE_tauE det_N^{-1/2}[P^N T (I - dphi) P^N] |dv|_{TX/N}`.
///
/// `det_N` is the determinant of the operator on `N`, basis independent; the
/// root is continued on the Gram-weighted form `B^T G_0 T (I - dphi) B` and
/// divided by the positive root of `det(B^T G_0 B)`.
pub fn leading_density_component(comp: &FixedComponentDatum, disc: &PathDiscretization) -> Result<CoefficientReport> {
    let base = &comp.base;
    let b = complexify(&comp.n_subspace);
    let g = complexify(base.j0.metric());
    let form = b.transpose() * base.quadratic_form()? * &b;
    let gram = (b.transpose() * &g * &b).map(|z| z.re);
    let det_n = form.determinant() / gram.determinant();
    if det_n.norm() < ALG_TOL {
        return Err(Error::DegenerateOnN { value: det_n.norm() });
    }
    let form = check_form(&form)?;
    let root = sqrt_det_convention(&form, BRANCH_STEPS)?;
    let m = base.mu(disc)?;
    let root_n = root.value / gram.determinant().sqrt();
    let value = base.phi_e_tau_e / (m.conj() * root_n) * comp.density_ratio;
    Ok(CoefficientReport { value, sign_class: sign_class(root.value), branch: root })
}

/// `int_N mu (P_1 P_0)(dphi w, w) dw |dv|_{TX/N}` by quadrature over `N`.
pub fn component_oracle(comp: &FixedComponentDatum, disc: &PathDiscretization, spec: &QuadratureSpec) -> Result<Complex64> {
    let base = &comp.base;
    let k = compose(&kernel_of(&base.j1()?), &kernel_of(&base.j0))?;
    let b = &comp.n_subspace;
    let g = base.j0.metric();
    let gram = b.transpose() * g * b;
    let form = (b.transpose() * base.quadratic_form()?.map(|z| z.re) * b + (b.transpose() * base.quadratic_form()?.map(|z| z.re) * b).transpose()) * 0.5;
    let t = whitening(&form)?;
    let dim = base.j0.dim();
    let k_dim = b.ncols();
    let center = vec![0.0; k_dim];
    let d = &base.dphi;
    let integral = integrate_affine(&center, &t, spec, 0, |c| {
        let w: DVector<f64> = b * DVector::from_column_slice(c);
        let dw = d * &w;
        let mut x = [0.0; 8];
        let mut y = [0.0; 8];
        x[..dim].copy_from_slice(dw.as_slice());
        y[..dim].copy_from_slice(w.as_slice());
        k.eval(&x[..dim], &y[..dim])
    })?;
    Ok(base.phi_e_tau_e * base.mu(disc)? * integral * gram.determinant().sqrt() * comp.density_ratio)
}

/// Simplified leading density for `dphi` preserving a complex `N`:
/// `(-1)^{(n-d)/2} phiE_tauE (phi^K / tau^K)^{1/2} |det_N(I - dphi|_N)|^{-1/2} |dv|_{TX/N}`,
/// with `d` the complex dimension of the component and the principal root.
pub fn simplified_density(comp: &FixedComponentDatum, disc: &PathDiscretization) -> Result<Complex64> {
    let base = &comp.base;
    let id = geometric_identity(base, disc)?;
    let b = &comp.n_subspace;
    let g = base.j0.metric();
    let k = b.ncols();
    let gram = b.transpose() * g * b;
    let restricted = gram.clone().lu().solve(&(b.transpose() * g * (RMat::identity(g.nrows(), g.nrows()) - &base.dphi) * b))
        .ok_or(Error::DegenerateOnN { value: 0.0 })?;
    let det = restricted.determinant().abs();
    let codim = k / 2;
    let phase = Complex64::new(0.0, 1.0).powu(codim as u32);
    Ok(phase * base.phi_e_tau_e * (id.phi_k / id.tau_k).sqrt() / det.sqrt() * comp.density_ratio)
}

/// One term of the leading trace prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentTerm {
    /// Real dimension of the component.
    pub dim: usize,
    pub lambda: Complex64,
    /// Integral of `nu_0` over the component.
    pub integral: Complex64,
}

impl ComponentTerm {
    pub fn isolated(datum: &FixedPointDatum, disc: &PathDiscretization) -> Result<Self> {
        Ok(Self { dim: 0, lambda: datum.lambda, integral: leading_coeff_isolated(datum, disc)?.value })
    }

    /// For linear data, constant `nu_0` times the volume measured in units
    /// of the fixed-subspace parallelepiped.
    pub fn component(comp: &FixedComponentDatum, volume: f64, disc: &PathDiscretization) -> Result<Self> {
        let nu = leading_density_component(comp, disc)?.value;
        Ok(Self { dim: comp.dim(), lambda: comp.base.lambda, integral: nu * volume })
    }
}

/// `sum_j p^{d_j/2} lambda_j^p int nu_0`.
pub fn trace_prediction(terms: &[ComponentTerm], p: u32) -> Complex64 {
    terms
        .iter()
        .map(|t| t.lambda.powu(p) * t.integral * (p as f64).powf(t.dim as f64 / 2.0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn disc() -> PathDiscretization {
        PathDiscretization::default()
    }

    #[test]
    fn minus_identity() {
        for n in 1..=2 {
            let d = RMat::identity(2 * n, 2 * n) * -1.0;
            let datum = FixedPointDatum::new(d, c(1.0, 0.0), CompatibleStructure::standard(n)).unwrap();
            let a0 = leading_coeff_isolated(&datum, &disc()).unwrap();
            assert!((a0.value - c(0.5f64.powi(n as i32), 0.0)).norm() < 1e-12);
            assert!(geometric_identity_check(&datum, &disc()).unwrap() < 1e-12);
            assert!(splitting_residual(&datum).unwrap() < 1e-12);
        }
    }

    #[test]
    fn rotation_matches_oracles() {
        let th: f64 = 1.1;
        let d = RMat::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let datum = FixedPointDatum::new(d, c(1.0, 0.0), CompatibleStructure::standard(1)).unwrap();
        let a0 = leading_coeff_isolated(&datum, &disc()).unwrap().value;
        let spec = QuadratureSpec::for_dim(1);
        let g = gaussian_fixed_point_oracle(&datum, &disc(), &spec).unwrap();
        let k = kernel_fixed_point_oracle(&datum, &disc(), &spec).unwrap();
        assert!((a0 - g).norm() < 1e-10, "{a0} {g}");
        assert!((a0 - k).norm() < 1e-10, "{a0} {k}");
        assert!(((a0.norm() - 1.0 / (2.0 - 2.0 * th.cos()).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic() {
        let a = RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let datum = FixedPointDatum::new(a, c(1.0, 0.0), CompatibleStructure::standard(1)).unwrap();
        let a0 = leading_coeff_isolated(&datum, &disc()).unwrap().value;
        assert!((a0.norm() - 1.0).abs() < 1e-6);
        let k = kernel_fixed_point_oracle(&datum, &disc(), &QuadratureSpec::for_dim(1)).unwrap();
        assert!((a0 - k).norm() < 1e-8, "{a0} {k}");
        assert!(geometric_identity_check(&datum, &disc()).unwrap() < 1e-6);
        assert!(splitting_residual(&datum).unwrap() < 1e-10);
    }

    #[test]
    fn degenerate_rejected() {
        let a = RMat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let datum = FixedPointDatum::new(a, c(1.0, 0.0), CompatibleStructure::standard(1)).unwrap();
        assert!(matches!(leading_coeff_isolated(&datum, &disc()), Err(Error::DegenerateFixedPoint { .. })));
    }

    #[test]
    fn parabolic_component() {
        let a = RMat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let datum = FixedPointDatum::new(a, c(1.0, 0.0), CompatibleStructure::standard(1)).unwrap();
        let e1 = RMat::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = RMat::from_column_slice(2, 1, &[0.0, 1.0]);
        let comp = FixedComponentDatum::new(datum.clone(), e1.clone(), e2.clone()).unwrap();
        let nu = leading_density_component(&comp, &disc()).unwrap().value;
        let oracle = component_oracle(&comp, &disc(), &QuadratureSpec::for_dim(1)).unwrap();
        assert!((nu - oracle).norm() < 1e-8, "{nu} vs {oracle}");
        // Rescaled / sheared N basis gives the same density.
        let n2 = RMat::from_column_slice(2, 1, &[0.3, 2.5]);
        let comp2 = FixedComponentDatum::new(datum, e1, n2).unwrap();
        let nu2 = leading_density_component(&comp2, &disc()).unwrap().value;
        assert!((nu - nu2).norm() < 1e-10, "{nu} vs {nu2}");
    }

    #[test]
    fn prediction_sums_terms() {
        let t = [
            ComponentTerm { dim: 0, lambda: c(-1.0, 0.0), integral: c(0.5, 0.0) },
            ComponentTerm { dim: 1, lambda: c(1.0, 0.0), integral: c(2.0, 0.0) },
        ];
        let v = trace_prediction(&t, 4);
        assert!((v - c(0.5 + 4.0, 0.0)).norm() < 1e-14);
    }
}

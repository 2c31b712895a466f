//! Linear algebra of the standard symplectic space `R^{2n}`.
//!
//! Coordinates are interleaved: `(Z_0, Z_1, ..., Z_{2n-1})` with
//! `J0 e_{2j} = e_{2j+1}` and `J0 e_{2j+1} = -e_{2j}`. The symplectic form is
//! `Omega(Z, Z') = <J0 Z, Z'> = Z^T J0^T Z'`, and a compatible structure `J`
//! induces the metric `<u, v>_J = Omega(u, J v) = u^T (-J0 J) v`.

mod branch;
mod path;

pub use branch::{sqrt_det_convention, sqrt_det_tracked, BranchedValue, MAX_BRANCH_STEPS};
pub use path::{PathKind, StructurePath, SAMPLED_FD_STEP};

use crate::error::{Error, Result};
use crate::linalg::{cfrob, complexify, conj, frob, CMat, RMat, I};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Relative Frobenius tolerance for matrix identities.
pub const ALG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    pub n: usize,
    /// Matrix of the form: `Omega(Z, Z') = Z^T omega Z'`.
    pub omega: RMat,
    pub j0: RMat,
}

pub fn standard_space(n: usize) -> Result<SymplecticSpace> {
    if n == 0 {
        return Err(Error::InvalidDimension("half-dimension must be positive".into()));
    }
    let j0 = standard_j(n);
    Ok(SymplecticSpace { n, omega: j0.transpose(), j0 })
}

pub fn standard_j(n: usize) -> RMat {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

pub fn standard_omega(n: usize) -> RMat {
    standard_j(n).transpose()
}

/// `Omega(u, v)` for the standard form.
pub fn omega_pairing(u: &[f64], v: &[f64]) -> f64 {
    u.chunks(2)
        .zip(v.chunks(2))
        .map(|(a, b)| a[0] * b[1] - a[1] * b[0])
        .sum()
}

/// Check `M^T Omega M = Omega`; returns the relative residual.
pub fn symplectic_residual(m: &RMat) -> f64 {
    let n = m.nrows() / 2;
    let om = standard_omega(n);
    frob(&(m.transpose() * &om * m - &om)) / (1.0 + frob(m).powi(2))
}

/// A compatible complex structure with its cached metric `G = -J0 J`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibleStructure {
    j: RMat,
    g: RMat,
}

impl CompatibleStructure {
    /// Validate `J` and cache its metric.
    pub fn new(j: RMat) -> Result<Self> {
        let dim = j.nrows();
        if dim != j.ncols() || dim == 0 || dim % 2 != 0 {
            return Err(Error::InvalidDimension(format!(
                "expected a square matrix of positive even size, got {}x{}",
                j.nrows(),
                j.ncols()
            )));
        }
        let n = dim / 2;
        let id = RMat::identity(dim, dim);
        let scale = 1.0 + frob(&j).powi(2);
        let sq = frob(&(&j * &j + &id)) / scale;
        if sq > ALG_TOL {
            return Err(Error::NotAlmostComplex { residual: sq });
        }
        let om = standard_omega(n);
        let inv = frob(&(j.transpose() * &om * &j - &om)) / scale;
        if inv > ALG_TOL {
            return Err(Error::NotSymplectic { residual: inv });
        }
        let g = -(standard_j(n) * &j);
        let g = (&g + g.transpose()).scale(0.5);
        if g.clone().cholesky().is_none() {
            return Err(Error::NotPositive);
        }
        Ok(Self { j, g })
    }

    pub fn standard(n: usize) -> Self {
        let j = standard_j(n);
        Self { g: RMat::identity(2 * n, 2 * n), j }
    }

    /// The structure whose holomorphic coordinate on `R^2` is `x + tau y`.
    pub fn from_modulus(tau: Complex64) -> Result<Self> {
        Self::from_siegel(&CMat::from_element(1, 1, tau))
    }

    /// The structure with holomorphic coordinates `w = x + Z y` for a point
    /// `Z = X + iY` of the Siegel upper half space (`x_j = Z_{2j}`,
    /// `y_j = Z_{2j+1}`).
    pub fn from_siegel(z: &CMat) -> Result<Self> {
        let g = siegel_metric(z)?;
        let n = z.nrows();
        Self::new(standard_j(n) * g)
    }

    pub fn n(&self) -> usize {
        self.j.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn j(&self) -> &RMat {
        &self.j
    }

    /// Metric matrix `G = -J0 J`, so that `<u, v>_J = u^T G v`.
    pub fn metric(&self) -> &RMat {
        &self.g
    }

    /// Siegel coordinates `X + iY` of the structure.
    pub fn siegel(&self) -> CMat {
        let n = self.n();
        let (gxx, gxy, _, _) = split_blocks(&self.g);
        let y = gxx.clone().try_inverse().expect("metric block is positive");
        let x = &y * gxy;
        CMat::from_fn(n, n, |r, s| Complex64::new(x[(r, s)], y[(r, s)]))
    }

    /// `(I - iJ)/2`, the projector onto `V^{(1,0)}`.
    pub fn holomorphic_projector(&self) -> ComplexProjector {
        projector_holo(self)
    }

    pub fn antiholomorphic_projector(&self) -> ComplexProjector {
        ComplexProjector { p: conj(&projector_holo(self).p), rank: self.n() }
    }
}

/// Symplectic positive metric attached to a Siegel point.
pub(crate) fn siegel_metric(z: &CMat) -> Result<RMat> {
    let n = z.nrows();
    if n == 0 || z.ncols() != n {
        return Err(Error::InvalidDimension("Siegel point must be square".into()));
    }
    let x = z.map(|w| w.re);
    let y = z.map(|w| w.im);
    let asym = frob(&(&x - x.transpose())) + frob(&(&y - y.transpose()));
    if asym > ALG_TOL * (1.0 + frob(&x) + frob(&y)) {
        return Err(Error::InvalidInput("Siegel point must be symmetric".into()));
    }
    if y.clone().cholesky().is_none() {
        return Err(Error::NotPositive);
    }
    let yi = y.clone().try_inverse().ok_or(Error::NotPositive)?;
    let gxx = yi.clone();
    let gxy = &yi * &x;
    let gyy = &y + &x * &yi * &x;
    Ok(join_blocks(&gxx, &gxy, &gxy.transpose(), &gyy))
}

/// Derivative of the Siegel metric along `dz`.
pub(crate) fn siegel_metric_derivative(z: &CMat, dz: &CMat) -> RMat {
    let x = z.map(|w| w.re);
    let y = z.map(|w| w.im);
    let dx = dz.map(|w| w.re);
    let dy = dz.map(|w| w.im);
    let yi = y.try_inverse().expect("Siegel point has positive imaginary part");
    let dyi = -(&yi * &dy * &yi);
    let dxx = dyi.clone();
    let dxy = &dyi * &x + &yi * &dx;
    let dyy = &dy + &dx * &yi * &x + &x * &dyi * &x + &x * &yi * &dx;
    join_blocks(&dxx, &dxy, &dxy.transpose(), &dyy)
}

fn split_blocks(m: &RMat) -> (RMat, RMat, RMat, RMat) {
    let n = m.nrows() / 2;
    let f = |a: usize, b: usize| RMat::from_fn(n, n, |r, s| m[(2 * r + a, 2 * s + b)]);
    (f(0, 0), f(0, 1), f(1, 0), f(1, 1))
}

fn join_blocks(xx: &RMat, xy: &RMat, yx: &RMat, yy: &RMat) -> RMat {
    let n = xx.nrows();
    let mut m = RMat::zeros(2 * n, 2 * n);
    for r in 0..n {
        for s in 0..n {
            m[(2 * r, 2 * s)] = xx[(r, s)];
            m[(2 * r, 2 * s + 1)] = xy[(r, s)];
            m[(2 * r + 1, 2 * s)] = yx[(r, s)];
            m[(2 * r + 1, 2 * s + 1)] = yy[(r, s)];
        }
    }
    m
}

/// A complex projector of rank `n` on `C^{2n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexProjector {
    p: CMat,
    rank: usize,
}

impl ComplexProjector {
    pub fn new(p: CMat, rank: usize) -> Result<Self> {
        let res = idempotence_residual(&p);
        if res > ALG_TOL {
            return Err(Error::NotProjector { rank, residual: res });
        }
        let tr = p.trace();
        if (tr - Complex64::new(rank as f64, 0.0)).norm() > 1e-8 {
            return Err(Error::NotProjector { rank, residual: (tr.re - rank as f64).abs() });
        }
        Ok(Self { p, rank })
    }

    pub fn matrix(&self) -> &CMat {
        &self.p
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn conjugate(&self) -> ComplexProjector {
        ComplexProjector { p: conj(&self.p), rank: self.rank }
    }
}

pub fn idempotence_residual(p: &CMat) -> f64 {
    cfrob(&(p * p - p)) / (1.0 + cfrob(p).powi(2))
}

pub fn projector_holo(j: &CompatibleStructure) -> ComplexProjector {
    let dim = j.dim();
    let p = (CMat::identity(dim, dim) - complexify(j.j()) * I).scale(0.5);
    ComplexProjector { p, rank: j.n() }
}

/// `A = ((I + (-J_ref J_t))/2)^{-1}` and `Pi = A P_ref^{(1,0)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolation {
    pub a: RMat,
    pub pi: ComplexProjector,
}

impl Interpolation {
    /// `conj(Pi)`: projector onto `V_t^{(0,1)}` with kernel `V_ref^{(1,0)}`.
    pub fn pi_bar(&self) -> CMat {
        conj(self.pi.matrix())
    }
}

/// Interpolation operators between `J_t` and the reference `J_ref`.
///
/// `Pi` is the projector onto `V_t^{(1,0)}` with kernel `V_ref^{(0,1)}`.
/// `A` is positive and self-adjoint for the reference metric.
pub fn interpolation_operators(
    jt: &CompatibleStructure,
    jref: &CompatibleStructure,
) -> Result<Interpolation> {
    if jt.dim() != jref.dim() {
        return Err(Error::DimensionMismatch { expected: jref.dim(), found: jt.dim() });
    }
    let dim = jt.dim();
    let id = RMat::identity(dim, dim);
    let half = (&id - jref.j() * jt.j()).scale(0.5);
    let a = half.try_inverse().ok_or(Error::SingularInterpolation)?;
    if !a.iter().all(|x| x.is_finite()) {
        return Err(Error::SingularInterpolation);
    }
    let p = complexify(&a) * projector_holo(jref).p;
    Ok(Interpolation { a, pi: ComplexProjector { p, rank: jt.n() } })
}

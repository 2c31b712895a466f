//! Quantization of the flat torus `R^2 / Z^2` with `omega = dx ^ dy`.
//!
//! Sections of `L^p` are functions on `R^2` with
//! `psi(x + m) = e_m(x) psi(x)`, `e_m(x) = eps(m)^p exp(i pi p omega(m, x))`,
//! `eps(m) = (-1)^{m1 + m2 + m1 m2}`, and the connection is
//! `d - 2 pi i p alpha` with `alpha = (x dy - y dx) / 2`.
//! `z = x + tau y` is the holomorphic coordinate of `J_tau`.

use crate::error::{Error, Result};
use crate::fit::{fit_loglog, PowerFit};
use crate::fixed_point::{ComponentTerm, FixedComponentDatum, FixedPointDatum};
use crate::linalg::{c, hermitian_power, singular_values, CMat, RMat};
use crate::symplectic::{CompatibleStructure, StructurePath};
use crate::transport::{mu, sample_pairs, PathDiscretization, TAU_ODE};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Relative tail of the theta series that truncation must stay below.
pub const SERIES_TAIL: f64 = 1e-14;
/// Gram entries must move less than this when the grid is doubled.
pub const GRID_WITNESS_TOL: f64 = 1e-9;
/// Tolerance for the lift's connection and multiplier checks.
pub const LIFT_TOL: f64 = 1e-6;

fn omega(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGeometry {
    pub p: u32,
    pub tau: Complex64,
}

impl TorusGeometry {
    pub fn new(p: u32, tau: Complex64) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("level p must be positive".into()));
        }
        if !(tau.im > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidInput(format!("modulus {tau} not in the upper half-plane")));
        }
        Ok(Self { p, tau })
    }

    pub fn structure(&self) -> Result<CompatibleStructure> {
        CompatibleStructure::from_modulus(self.tau)
    }

    /// Symplectic volume of the torus.
    pub fn volume(&self) -> f64 {
        1.0
    }
}

/// The fixed gauge of `L^p` on the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineBundleGauge {
    pub p: u32,
}

impl LineBundleGauge {
    /// `(alpha_1, alpha_2) = (-y/2, x/2)`.
    pub fn potential(&self, x: f64, y: f64) -> (f64, f64) {
        (-0.5 * y, 0.5 * x)
    }

    pub fn epsilon(m: [i64; 2]) -> i64 {
        if (m[0] + m[1] + m[0] * m[1]).rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }

    /// `e_m(x)` with `psi(x + m) = e_m(x) psi(x)`.
    pub fn multiplier(&self, m: [i64; 2], x: f64, y: f64) -> Complex64 {
        let sign = if Self::epsilon(m) < 0 && self.p % 2 == 1 { -1.0 } else { 1.0 };
        Complex64::from_polar(sign, PI * self.p as f64 * omega([m[0] as f64, m[1] as f64], [x, y]))
    }

    /// `d alpha / (dx ^ dy) - 1` at sample points by centered differences.
    pub fn curvature_residual(&self) -> f64 {
        let h = 1e-4;
        sample_pairs(1, 20, 0xc0)
            .into_iter()
            .map(|(z, _)| {
                let (x, y) = (z[0], z[1]);
                let d2x = (self.potential(x + h, y).1 - self.potential(x - h, y).1) / (2.0 * h);
                let d1y = (self.potential(x, y + h).0 - self.potential(x, y - h).0) / (2.0 * h);
                (d2x - d1y - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `|e_{m+m'}(x) - e_m(x + m') e_{m'}(x)|` over sample points and
    /// small lattice vectors.
    pub fn cocycle_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (z, _) in sample_pairs(1, 10, 0xc1) {
            for m in [[1, 0], [0, 1], [1, 1], [-1, 2]] {
                for mp in [[1, 0], [0, 1], [2, -1]] {
                    let sum = [m[0] + mp[0], m[1] + mp[1]];
                    let lhs = self.multiplier(sum, z[0], z[1]);
                    let rhs = self.multiplier(m, z[0] + mp[0] as f64, z[1] + mp[1] as f64) * self.multiplier(mp, z[0], z[1]);
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
        worst
    }

    /// The potential is real, so `d - 2 pi i p alpha` preserves `|psi|^2`.
    pub fn is_hermitian(&self) -> bool {
        true
    }
}

/// Theta basis `psi_j`, `j = 0..p`, of holomorphic sections of `L^p`:
/// `psi_j = e^{i pi p x y} sum_k exp(i pi p tau (k + a_j + y)^2 + 2 pi i p (k + a_j)(x + 1/2))`
/// with `a_j = j/p + 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaBasis {
    pub geometry: TorusGeometry,
    pub gauge: LineBundleGauge,
    /// Terms with `|k + a_j + y| > k_trunc` are dropped.
    pub k_trunc: usize,
}

/// Series terms `(F, g(y), u)` for one basis element at one `y`, where
/// `F = p k + j` is the integer frequency of `e^{2 pi i F x}` (up to the
/// common `e^{i pi p x}`), `u = k + a_j + y`, and the full element is
/// `e^{i pi p x (y + 1)} sum g e^{2 pi i F x}`.
#[derive(Debug, Clone, Copy)]
struct Term {
    freq: i64,
    g: Complex64,
    u: f64,
}

impl ThetaBasis {
    pub fn new(p: u32, tau: Complex64) -> Result<Self> {
        let geometry = TorusGeometry::new(p, tau)?;
        let k = (-SERIES_TAIL.ln() / (PI * p as f64 * tau.im)).sqrt().ceil() as usize;
        Self::with_truncation(geometry, k.max(1))
    }

    pub fn with_truncation(geometry: TorusGeometry, k_trunc: usize) -> Result<Self> {
        let k = k_trunc as f64;
        let tail = (-PI * geometry.p as f64 * geometry.tau.im * k * k).exp();
        if tail >= SERIES_TAIL {
            return Err(Error::TruncationTooSmall { k: k_trunc, tail });
        }
        Ok(Self { geometry, gauge: LineBundleGauge { p: geometry.p }, k_trunc })
    }

    pub fn p(&self) -> usize {
        self.geometry.p as usize
    }

    pub fn tau(&self) -> Complex64 {
        self.geometry.tau
    }

    fn a(&self, j: usize) -> f64 {
        j as f64 / self.p() as f64 + 0.5
    }

    fn for_each_term(&self, j: usize, y: f64, mut f: impl FnMut(Term)) {
        let p = self.p() as f64;
        let a = self.a(j);
        let tau = self.tau();
        let center = -(a + y);
        let kmin = (center - self.k_trunc as f64).ceil() as i64;
        let kmax = (center + self.k_trunc as f64).floor() as i64;
        for k in kmin..=kmax {
            let u = k as f64 + a + y;
            // e^{2 pi i p (k + a)(x + 1/2)} = e^{i pi p x} e^{2 pi i (p k + j) x} e^{i pi p (k + a)}
            let g = (Complex64::new(0.0, PI * p) * (tau * u * u + (k as f64 + a))).exp();
            f(Term { freq: self.p() as i64 * k + j as i64, g, u });
        }
    }

    /// `psi_j(x, y)`.
    pub fn eval(&self, j: usize, x: f64, y: f64) -> Complex64 {
        self.eval_full(j, x, y).0
    }

    /// `(psi, d_x psi, d_y psi, d_tau psi)` at `(x, y)`.
    pub fn eval_full(&self, j: usize, x: f64, y: f64) -> (Complex64, Complex64, Complex64, Complex64) {
        let p = self.p() as f64;
        let tau = self.tau();
        let gauge = Complex64::from_polar(1.0, PI * p * x * (y + 1.0));
        let (mut s, mut sx, mut sy, mut st) = (c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let ip = Complex64::new(0.0, PI * p);
        self.for_each_term(j, y, |t| {
            let v = t.g * Complex64::from_polar(1.0, 2.0 * PI * t.freq as f64 * x);
            s += v;
            sx += v * Complex64::new(0.0, 2.0 * PI * t.freq as f64);
            sy += v * ip * tau * (2.0 * t.u);
            st += v * ip * (t.u * t.u);
        });
        let psi = gauge * s;
        let dx = gauge * (sx + ip * (y + 1.0) * s);
        let dy = gauge * (sy + ip * x * s);
        (psi, dx, dy, gauge * st)
    }

    /// Max relative `|psi(x + m) - e_m(x) psi(x)|` at 50 boundary points.
    pub fn periodicity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut rng_pts = sample_pairs(1, 25, 0xb0).into_iter().flat_map(|(a, b)| [a, b]);
        for i in 0..50 {
            let z = rng_pts.next().unwrap();
            let s = z[0] / 1.6 + 0.5;
            // Points on the edges x = 0 and y = 0 of the fundamental domain.
            let (x, y, m) = if i % 2 == 0 { (0.0, s, [1, 0]) } else { (s, 0.0, [0, 1]) };
            for j in 0..self.p() {
                let base = self.eval(j, x, y);
                let moved = self.eval(j, x + m[0] as f64, y + m[1] as f64);
                let e = self.gauge.multiplier(m, x, y);
                let scale = base.norm().max(moved.norm()).max(1e-300);
                worst = worst.max((moved - e * base).norm() / scale.max(self.peak()));
            }
        }
        worst
    }

    fn peak(&self) -> f64 {
        // |psi| is at most the sum of the Gaussian envelope over k.
        (0..4).map(|k| (-PI * self.p() as f64 * self.tau().im * (k as f64 * 0.5).powi(2)).exp()).sum::<f64>()
    }

    /// Max of `|(tau nabla_x - nabla_y) psi_j| / (1 + |nabla psi_j|)` at 50
    /// interior points.
    pub fn holomorphy_residual(&self) -> f64 {
        let p = self.p() as f64;
        let tau = self.tau();
        let mut worst: f64 = 0.0;
        for (z, w) in sample_pairs(1, 25, 0xb1) {
            for pt in [z, w] {
                let (x, y) = (pt[0] / 1.6 + 0.5, pt[1] / 1.6 + 0.5);
                let (a1, a2) = self.gauge.potential(x, y);
                for j in 0..self.p() {
                    let (psi, dx, dy, _) = self.eval_full(j, x, y);
                    let nx = dx - Complex64::new(0.0, 2.0 * PI * p * a1) * psi;
                    let ny = dy - Complex64::new(0.0, 2.0 * PI * p * a2) * psi;
                    let r = (tau * nx - ny).norm() / (self.peak() + nx.norm() + ny.norm());
                    worst = worst.max(r);
                }
            }
        }
        worst
    }

    /// Construction plus the periodicity and holomorphy checks.
    pub fn validated(p: u32, tau: Complex64) -> Result<Self> {
        let b = Self::new(p, tau)?;
        let per = b.periodicity_residual();
        if per > 1e-10 {
            return Err(Error::PeriodicityFailure { residual: per });
        }
        let hol = b.holomorphy_residual();
        if hol > 1e-8 {
            return Err(Error::HolomorphyFailure { residual: hol });
        }
        Ok(b)
    }
}

/// Uniform `N x N` grid on `[0, 1)^2` with equal weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureGrid {
    pub n: usize,
}

impl QuadratureGrid {
    pub fn for_level(p: u32) -> Self {
        Self { n: (8 * p as usize).max(64) }
    }

    pub fn new(n: usize, p: u32) -> Result<Self> {
        let min = (8 * p as usize).max(64);
        if n < min {
            return Err(Error::GridTooCoarse(format!("{n} nodes per axis, need at least {min}")));
        }
        Ok(Self { n })
    }

    pub fn doubled(&self) -> Self {
        Self { n: 2 * self.n }
    }
}

/// How studies over several levels size their grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridRule {
    /// `N = max(64, 8p)`.
    #[default]
    PerLevel,
    /// The same `N` for every level; must satisfy the per-level minimum.
    Fixed(usize),
}

impl GridRule {
    pub fn grid(&self, p: u32) -> Result<QuadratureGrid> {
        match *self {
            GridRule::PerLevel => Ok(QuadratureGrid::for_level(p)),
            GridRule::Fixed(n) => QuadratureGrid::new(n, p),
        }
    }
}

/// Matrix of an operator `H_p(tau_a) -> H_p(tau_b)` in theta bases.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: CMat,
    pub domain_tau: Complex64,
    pub codomain_tau: Complex64,
    pub gram_domain: CMat,
    pub gram_codomain: CMat,
}

impl OperatorMatrix {
    /// `G_cod^{1/2} M G_dom^{-1/2}`, the matrix in orthonormal bases.
    pub fn whitened(&self) -> CMat {
        hermitian_power(&self.gram_codomain, 0.5) * &self.matrix * hermitian_power(&self.gram_domain, -0.5)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        singular_values(&self.whitened())
    }

    pub fn norm(&self) -> f64 {
        self.singular_values()[0]
    }

    /// `|| s - 1 ||_inf` over whitened singular values.
    pub fn unitarity_defect(&self) -> f64 {
        self.singular_values().iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn compose(&self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix {
            matrix: &self.matrix * &rhs.matrix,
            domain_tau: rhs.domain_tau,
            codomain_tau: self.codomain_tau,
            gram_domain: rhs.gram_domain.clone(),
            gram_codomain: self.gram_codomain.clone(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }
}

/// Series terms of all basis elements at height `y`, with `d_tau g` in
/// `u` when asked for.
fn row_terms(b: &ThetaBasis, y: f64, dtau: bool) -> Vec<(Term, Complex64)> {
    let ip = Complex64::new(0.0, PI * b.p() as f64);
    let mut all = Vec::with_capacity(b.p() * (2 * b.k_trunc + 2));
    for j in 0..b.p() {
        b.for_each_term(j, y, |t| {
            let d = if dtau { t.g * ip * (t.u * t.u) } else { Complex64::new(0.0, 0.0) };
            all.push((t, d));
        });
    }
    all
}

/// `<u_i, v_j>` on the grid, and `<u_i, d_tau v_j>` when `dtau` is set,
/// exactly as the uniform-weight sum but with the `x` sum done in closed
/// form: `sum_n e^{2 pi i F n / N}` is `N` when `N | F` and 0 otherwise,
/// aliasing included.
fn grid_pairings(u: &ThetaBasis, v: &ThetaBasis, grid: &QuadratureGrid, dtau: bool) -> (CMat, CMat) {
    let p = u.p();
    assert_eq!(p, v.p());
    let n = grid.n as i64;
    let zero = || (CMat::zeros(p, p), CMat::zeros(p, p));
    let (g, d) = (0..grid.n)
        .into_par_iter()
        .fold(zero, |(mut g, mut d), m| {
            let y = m as f64 / grid.n as f64;
            let tv = row_terms(v, y, dtau);
            let tu = if std::ptr::eq(u, v) { None } else { Some(row_terms(u, y, false)) };
            let tu = tu.as_ref().unwrap_or(&tv);
            // Terms of v chained by frequency residue mod N.
            let mut head = vec![usize::MAX; grid.n];
            let mut next = vec![usize::MAX; tv.len()];
            for (idx, (b, _)) in tv.iter().enumerate() {
                let r = b.freq.rem_euclid(n) as usize;
                next[idx] = head[r];
                head[r] = idx;
            }
            for (a, _) in tu {
                let i = a.freq.rem_euclid(p as i64) as usize;
                let ca = a.g.conj();
                let mut idx = head[a.freq.rem_euclid(n) as usize];
                while idx != usize::MAX {
                    let (b, db) = &tv[idx];
                    let j = b.freq.rem_euclid(p as i64) as usize;
                    g[(i, j)] += ca * b.g;
                    if dtau {
                        d[(i, j)] += ca * db;
                    }
                    idx = next[idx];
                }
            }
            (g, d)
        })
        .reduce(zero, |x, y| (x.0 + y.0, x.1 + y.1));
    let w = Complex64::new(grid.n as f64, 0.0);
    (g / w, d / w)
}

fn grid_pairing(u: &ThetaBasis, v: &ThetaBasis, grid: &QuadratureGrid) -> CMat {
    grid_pairings(u, v, grid, false).0
}

/// `G_ij = <psi_i, psi_j>` by the uniform rule, checked against the doubled
/// grid.
pub fn gram(basis: &ThetaBasis, grid: &QuadratureGrid) -> Result<CMat> {
    let g = grid_pairing(basis, basis, grid);
    let g2 = grid_pairing(basis, basis, &grid.doubled());
    let change = (&g - &g2).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if change > GRID_WITNESS_TOL {
        return Err(Error::GridTooCoarse(format!("Gram changes by {change:.2e} under doubling")));
    }
    Ok(g)
}

/// Values of all basis elements on the grid, one row per point
/// (`x` fastest).
fn sample(basis: &ThetaBasis, grid: &QuadratureGrid) -> CMat {
    let n = grid.n;
    let p = basis.p();
    let mut out = CMat::zeros(n * n, p);
    let cols: Vec<Vec<Complex64>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let mut v = Vec::with_capacity(n * n);
            for m in 0..n {
                for k in 0..n {
                    v.push(basis.eval(j, k as f64 / n as f64, m as f64 / n as f64));
                }
            }
            v
        })
        .collect();
    for (j, col) in cols.into_iter().enumerate() {
        out.column_mut(j).copy_from_slice(&col);
    }
    out
}

/// Matrix of `P_{p,b} f P_{p,a}`: `G_b^{-1} <psi_b, f psi_a>`. `None` means
/// `f = 1`.
pub fn toeplitz_matrix(
    f: Option<&(dyn Fn(f64, f64) -> Complex64 + Sync)>,
    basis_b: &ThetaBasis,
    basis_a: &ThetaBasis,
    grid: &QuadratureGrid,
) -> Result<OperatorMatrix> {
    if basis_a.p() != basis_b.p() {
        return Err(Error::DimensionMismatch { expected: basis_b.p(), found: basis_a.p() });
    }
    let gb = gram(basis_b, grid)?;
    let ga = gram(basis_a, grid)?;
    let pairing = match f {
        None => grid_pairing(basis_b, basis_a, grid),
        Some(f) => {
            let n = grid.n;
            let sb = sample(basis_b, grid);
            let mut sa = sample(basis_a, grid);
            for m in 0..n {
                for k in 0..n {
                    let w = f(k as f64 / n as f64, m as f64 / n as f64);
                    sa.row_mut(m * n + k).scale_mut(1.0);
                    for j in 0..sa.ncols() {
                        sa[(m * n + k, j)] *= w;
                    }
                }
            }
            sb.adjoint() * sa / Complex64::new((n * n) as f64, 0.0)
        }
    };
    let matrix = gb.clone().lu().solve(&pairing).ok_or(Error::NotPositive)?;
    Ok(OperatorMatrix { matrix, domain_tau: basis_a.tau(), codomain_tau: basis_b.tau(), gram_domain: ga, gram_codomain: gb })
}

fn path_modulus(path: &StructurePath, t: f64) -> Result<(Complex64, Complex64)> {
    if path.n() != 1 {
        return Err(Error::InvalidDimension("torus paths are paths of moduli (n = 1)".into()));
    }
    let h = 1e-6;
    let (a, b) = (t.max(h) - h, t.min(1.0 - h) + h);
    let dtau = (path.modulus(b)? - path.modulus(a)?) / (b - a);
    Ok((path.modulus(t)?, dtau))
}

/// Connection matrix `C(t) = G_t^{-1} <psi_t, d/dt psi_t>`.
fn connection(p: u32, path: &StructurePath, t: f64, grid: &QuadratureGrid) -> Result<CMat> {
    let (tau, dtau) = path_modulus(path, t)?;
    let b = ThetaBasis::new(p, tau)?;
    let (g, d) = grid_pairings(&b, &b, grid, true);
    g.lu().solve(&(d * dtau)).ok_or(Error::NotPositive)
}

fn transport_rk4(p: u32, path: &StructurePath, grid: &QuadratureGrid, steps: usize) -> Result<CMat> {
    let dim = p as usize;
    let h = 1.0 / steps as f64;
    let mut m = CMat::identity(dim, dim);
    let mut c_prev = connection(p, path, 0.0, grid)?;
    for k in 0..steps {
        let t = k as f64 * h;
        let c_mid = connection(p, path, t + 0.5 * h, grid)?;
        let c_end = connection(p, path, t + h, grid)?;
        let hc = Complex64::new(h, 0.0);
        let k1 = -(&c_prev * &m);
        let k2 = -(&c_mid * (&m + &k1 * (hc * 0.5)));
        let k3 = -(&c_mid * (&m + &k2 * (hc * 0.5)));
        let k4 = -(&c_end * (&m + &k3 * hc));
        m += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * (hc / 6.0);
        c_prev = c_end;
    }
    Ok(m)
}

/// Parallel transport `H_p(tau_0) -> H_p(tau_1)` for the `L^2` connection
/// `P d/dt P` along a path of moduli.
pub fn l2_transport(p: u32, path: &StructurePath, grid: &QuadratureGrid, disc: &PathDiscretization) -> Result<OperatorMatrix> {
    let b0 = ThetaBasis::new(p, path.modulus(0.0)?)?;
    let b1 = ThetaBasis::new(p, path.modulus(1.0)?)?;
    let g0 = gram(&b0, grid)?;
    let g1 = gram(&b1, grid)?;
    let mut m = transport_rk4(p, path, grid, disc.steps)?;
    if disc.richardson {
        let fine = transport_rk4(p, path, grid, 2 * disc.steps)?;
        let op = |x: &CMat| hermitian_power(&g1, 0.5) * x * hermitian_power(&g0, -0.5);
        let change = singular_values(&(op(&fine) - op(&m)))[0];
        if change > TAU_ODE {
            return Err(Error::ConvergenceFailure { change, tol: TAU_ODE });
        }
        m = fine;
    }
    Ok(OperatorMatrix { matrix: m, domain_tau: b0.tau(), codomain_tau: b1.tau(), gram_domain: g0, gram_codomain: g1 })
}

/// Affine symplectic map `x -> A x + v` of the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub a: [[i64; 2]; 2],
    pub v: [f64; 2],
}

impl AffineMap {
    pub fn linear(a: [[i64; 2]; 2]) -> Result<Self> {
        Self::new(a, [0.0, 0.0])
    }

    pub fn new(a: [[i64; 2]; 2], v: [f64; 2]) -> Result<Self> {
        if a[0][0] * a[1][1] - a[0][1] * a[1][0] != 1 {
            return Err(Error::InvalidInput("map must lie in SL(2, Z)".into()));
        }
        Ok(Self { a, v })
    }

    pub fn translation(v: [f64; 2]) -> Self {
        Self { a: [[1, 0], [0, 1]], v }
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.a[0][0] as f64 * x[0] + self.a[0][1] as f64 * x[1] + self.v[0],
            self.a[1][0] as f64 * x[0] + self.a[1][1] as f64 * x[1] + self.v[1],
        ]
    }

    fn linear_part(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.a[0][0] as f64 * x[0] + self.a[0][1] as f64 * x[1],
            self.a[1][0] as f64 * x[0] + self.a[1][1] as f64 * x[1],
        ]
    }

    pub fn matrix(&self) -> RMat {
        RMat::from_row_slice(2, 2, &[self.a[0][0] as f64, self.a[0][1] as f64, self.a[1][0] as f64, self.a[1][1] as f64])
    }

    /// `tau'` with `A J_tau A^{-1} = J_tau'`: `(a tau - b) / (-c tau + d)`.
    pub fn modulus_image(&self, tau: Complex64) -> Complex64 {
        let [[a, b], [cc, d]] = self.a;
        (tau * a as f64 - b as f64) / (-tau * cc as f64 + d as f64)
    }

    /// Lift factor: `(phi^* s)(x) = Lambda(x) s(phi(x))` with
    /// `Lambda(x) = exp(-i pi p omega(v, A x))`, equal to 1 at the origin.
    pub fn lift(&self, p: u32, x: [f64; 2]) -> Complex64 {
        Complex64::from_polar(1.0, -PI * p as f64 * omega(self.v, self.linear_part(x)))
    }

    /// Residual of connection preservation and of the multipliers of
    /// pulled-back sections, for a test section at `tau`.
    pub fn lift_residual(&self, p: u32, tau: Complex64) -> Result<f64> {
        let gauge = LineBundleGauge { p };
        let basis = ThetaBasis::new(p, tau)?;
        let pf = p as f64;
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for (z, _) in sample_pairs(1, 20, 0x11f7) {
            let x = [z[0] + 0.5, z[1] + 0.5];
            // d Lambda(w) / Lambda = 2 pi i p (alpha_x(w) - alpha_{phi x}(A w)).
            for w in [[1.0, 0.0], [0.0, 1.0]] {
                let lp = self.lift(p, [x[0] + h * w[0], x[1] + h * w[1]]);
                let lm = self.lift(p, [x[0] - h * w[0], x[1] - h * w[1]]);
                let dl = (lp - lm) / (2.0 * h) / self.lift(p, x);
                let fx = self.apply(x);
                let aw = self.linear_part(w);
                let expect = Complex64::new(0.0, 2.0 * PI * pf * (0.5 * omega(x, w) - 0.5 * omega(fx, aw)));
                worst = worst.max((dl - expect).norm() / (1.0 + expect.norm()));
            }
            for m in [[1i64, 0i64], [0, 1]] {
                let pull = |q: [f64; 2]| {
                    let f = self.apply(q);
                    self.lift(p, q) * basis.eval(0, f[0], f[1])
                };
                let moved = pull([x[0] + m[0] as f64, x[1] + m[1] as f64]);
                let base = pull(x);
                let e = gauge.multiplier(m, x[0], x[1]);
                worst = worst.max((moved - e * base).norm() / (base.norm() + moved.norm() + 1e-300).max(1e-3));
            }
        }
        Ok(worst)
    }

    /// Value `lambda_x` (level 1) of the inverse lift at a fixed point
    /// `phi(x) = x + m`: `(phi^* s)(x) = lambda_x^p s(x)`.
    pub fn lift_value(&self, x: [f64; 2], m: [i64; 2]) -> Complex64 {
        let eps = LineBundleGauge::epsilon(m) as f64;
        self.lift(1, x) * Complex64::from_polar(eps, PI * omega([m[0] as f64, m[1] as f64], x))
    }

    /// Fixed points `x` in `[0, 1)^2` with `phi(x) - x = m` in `Z^2`, for
    /// `det(A - I) != 0`.
    pub fn isolated_fixed_points(&self) -> Result<Vec<([f64; 2], [i64; 2])>> {
        let b = [[self.a[0][0] - 1, self.a[0][1]], [self.a[1][0], self.a[1][1] - 1]];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        if det == 0 {
            return Err(Error::DegenerateFixedPoint { sigma_min: 0.0 });
        }
        let inv = |r: [f64; 2]| {
            [
                (b[1][1] as f64 * r[0] - b[0][1] as f64 * r[1]) / det as f64,
                (-b[1][0] as f64 * r[0] + b[0][0] as f64 * r[1]) / det as f64,
            ]
        };
        let bound = (b.iter().flatten().map(|v| v.abs()).sum::<i64>() + 2) as i64;
        let mut out: Vec<([f64; 2], [i64; 2])> = Vec::new();
        for m0 in -bound..=bound {
            for m1 in -bound..=bound {
                let x = inv([m0 as f64 - self.v[0], m1 as f64 - self.v[1]]);
                let r = [x[0].rem_euclid(1.0), x[1].rem_euclid(1.0)];
                let r = [if (r[0] - 1.0).abs() < 1e-12 { 0.0 } else { r[0] }, if (r[1] - 1.0).abs() < 1e-12 { 0.0 } else { r[1] }];
                if out.iter().any(|(q, _)| (q[0] - r[0]).abs() < 1e-9 && (q[1] - r[1]).abs() < 1e-9) {
                    continue;
                }
                let f = self.apply(r);
                let m = [(f[0] - r[0]).round() as i64, (f[1] - r[1]).round() as i64];
                out.push((r, m));
            }
        }
        if out.len() as i64 != det.abs() {
            return Err(Error::InvalidInput(format!("found {} fixed points, expected {}", out.len(), det.abs())));
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(out)
    }
}

/// Matrix of `phi^*_p: H_p(tau') -> H_p(tau)` with `tau' = A . tau`.
pub fn pullback_matrix(
    map: &AffineMap,
    basis_target: &ThetaBasis,
    basis_source: &ThetaBasis,
    grid: &QuadratureGrid,
) -> Result<OperatorMatrix> {
    let p = basis_target.geometry.p;
    let tau_src = map.modulus_image(basis_target.tau());
    if (tau_src - basis_source.tau()).norm() > 1e-12 * (1.0 + tau_src.norm()) {
        return Err(Error::InvalidInput(format!("source modulus {} is not {tau_src}", basis_source.tau())));
    }
    let res = map.lift_residual(p, basis_source.tau())?;
    if res > LIFT_TOL {
        return Err(Error::LiftInconsistent { residual: res });
    }
    let n = grid.n;
    let pdim = basis_source.p();
    let cols: Vec<Vec<Complex64>> = (0..pdim)
        .into_par_iter()
        .map(|j| {
            let mut v = Vec::with_capacity(n * n);
            for m in 0..n {
                for k in 0..n {
                    let x = [k as f64 / n as f64, m as f64 / n as f64];
                    let f = map.apply(x);
                    v.push(map.lift(p, x) * basis_source.eval(j, f[0], f[1]));
                }
            }
            v
        })
        .collect();
    let mut values = CMat::zeros(n * n, pdim);
    for (j, col) in cols.into_iter().enumerate() {
        values.column_mut(j).copy_from_slice(&col);
    }
    // The Gram witness covers the grid: pulled-back sections live in the
    // same level-p space and have the same frequency content.
    let pairing = sample(basis_target, grid).adjoint() * values / Complex64::new((n * n) as f64, 0.0);
    let gt = gram(basis_target, grid)?;
    let gs = gram(basis_source, grid)?;
    let matrix = gt.clone().lu().solve(&pairing).ok_or(Error::NotPositive)?;
    Ok(OperatorMatrix { matrix, domain_tau: basis_source.tau(), codomain_tau: basis_target.tau(), gram_domain: gs, gram_codomain: gt })
}

/// `phi^*_p T_p` on `H_p(tau)`, with `T_p` the `L^2` transport along the
/// straight segment from `tau` to `A . tau`.
pub fn quantized_map(map: &AffineMap, tau: Complex64, p: u32, grid: &QuadratureGrid, disc: &PathDiscretization) -> Result<OperatorMatrix> {
    let tau1 = map.modulus_image(tau);
    let b0 = ThetaBasis::validated(p, tau)?;
    let b1 = ThetaBasis::validated(p, tau1)?;
    let t = if (tau1 - tau).norm() == 0.0 {
        let g = gram(&b0, grid)?;
        OperatorMatrix { matrix: CMat::identity(p as usize, p as usize), domain_tau: tau, codomain_tau: tau, gram_domain: g.clone(), gram_codomain: g }
    } else {
        l2_transport(p, &StructurePath::upper_half_plane_segment(tau, tau1)?, grid, disc)?
    };
    Ok(pullback_matrix(map, &b0, &b1, grid)?.compose(&t))
}

/// Leading-order trace prediction for an affine map at modulus `tau`.
///
/// Isolated fixed points use the leading coefficient with the Siegel
/// segment from `J_tau` to `A J_tau A^{-1}`; shears `[[1, k], [0, 1]]`
/// without translation have `|k|` fixed circles `y = j/|k|`.
pub fn prediction_terms(map: &AffineMap, tau: Complex64, disc: &PathDiscretization) -> Result<Vec<ComponentTerm>> {
    let j0 = CompatibleStructure::from_modulus(tau)?;
    let dphi = map.matrix();
    let [[a, b], [cc, d]] = map.a;
    if (a - 1) * (d - 1) - b * cc != 0 {
        let mut out = Vec::new();
        for (x, m) in map.isolated_fixed_points()? {
            let datum = FixedPointDatum::new(dphi.clone(), map.lift_value(x, m), j0.clone())?;
            out.push(ComponentTerm::isolated(&datum, disc)?);
        }
        return Ok(out);
    }
    if a == 1 && d == 1 && cc == 0 && b != 0 && map.v == [0.0, 0.0] {
        let datum0 = FixedPointDatum::new(dphi, c(1.0, 0.0), j0)?;
        let e1 = RMat::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = RMat::from_column_slice(2, 1, &[0.0, 1.0]);
        let mut out = Vec::new();
        for j in 0..b.abs() {
            let x = [0.0, j as f64 / b.abs() as f64];
            let f = map.apply(x);
            let m = [(f[0] - x[0]).round() as i64, (f[1] - x[1]).round() as i64];
            let datum = FixedPointDatum { lambda: map.lift_value(x, m), ..datum0.clone() };
            let comp = FixedComponentDatum::new(datum, e1.clone(), e2.clone())?;
            out.push(ComponentTerm::component(&comp, 1.0, disc)?);
        }
        return Ok(out);
    }
    if map.a == [[1, 0], [0, 1]] {
        // A translation by a non-lattice vector has no fixed points.
        let frac = |t: f64| (t - t.round()).abs() > 1e-12;
        if frac(map.v[0]) || frac(map.v[1]) {
            return Ok(Vec::new());
        }
    }
    Err(Error::InvalidInput("fixed point set of this map is not supported".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub p: u32,
    pub trace: Complex64,
    pub prediction: Complex64,
    pub residual: Complex64,
    /// Whitened `max |s - 1|` of `phi^*_p T_p`.
    pub unitarity_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSeries {
    pub points: Vec<TracePoint>,
    /// Log-log fit of `|residual|` against `p`; `None` when a residual is 0.
    pub fit: Option<PowerFit>,
}

pub fn trace_study(map: &AffineMap, tau: Complex64, p_list: &[u32], rule: GridRule, disc: &PathDiscretization) -> Result<TraceSeries> {
    let terms = prediction_terms(map, tau, disc)?;
    let mut points = Vec::new();
    for &p in p_list {
        let q = quantized_map(map, tau, p, &rule.grid(p)?, disc)?;
        let trace = q.trace();
        let prediction = crate::fixed_point::trace_prediction(&terms, p);
        points.push(TracePoint { p, trace, prediction, residual: trace - prediction, unitarity_defect: q.unitarity_defect() });
    }
    let xs: Vec<f64> = points.iter().map(|t| t.p as f64).collect();
    let ys: Vec<f64> = points.iter().map(|t| t.residual.norm()).collect();
    let fit = fit_loglog(&xs, &ys).ok();
    Ok(TraceSeries { points, fit })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxPoint {
    pub p: u32,
    pub deviation: f64,
}

/// Whitened `|| T_{p,1} - P_{p,1} g P_{p,0} ||` with `g = mu_1` unless a
/// coefficient is given.
pub fn approx_theorem_check(
    p_list: &[u32],
    path: &StructurePath,
    rule: GridRule,
    disc: &PathDiscretization,
    coefficient: Option<Complex64>,
) -> Result<Vec<ApproxPoint>> {
    let g = match coefficient {
        Some(g) => g,
        None => mu(path, 1.0, disc)?,
    };
    let mut out = Vec::new();
    for &p in p_list {
        let grid = rule.grid(p)?;
        let t = l2_transport(p, path, &grid, disc)?;
        let b0 = ThetaBasis::validated(p, path.modulus(0.0)?)?;
        let b1 = ThetaBasis::validated(p, path.modulus(1.0)?)?;
        let pp = toeplitz_matrix(None, &b1, &b0, &grid)?;
        let diff = OperatorMatrix { matrix: &t.matrix - &pp.matrix * g, ..t };
        out.push(ApproxPoint { p, deviation: diff.norm() });
    }
    Ok(out)
}

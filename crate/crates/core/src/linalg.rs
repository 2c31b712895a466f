//! Small dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn complexify(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMat) -> RMat {
    m.map(|z| z.im)
}

pub fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

pub fn frob(m: &RMat) -> f64 {
    m.norm()
}

pub fn cfrob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Symmetric (not Hermitian) part `(M + M^T) / 2`.
pub fn sym_part(m: &CMat) -> CMat {
    (m + m.transpose()).scale(0.5)
}

/// `x^T M y` with the bilinear (not sesquilinear) pairing.
pub fn bilinear(m: &CMat, x: &CVec, y: &CVec) -> Complex64 {
    (x.transpose() * (m * y))[(0, 0)]
}

/// Hermitian positive-definite `H^{power}` through the eigendecomposition.
pub fn hermitian_power(h: &CMat, power: f64) -> CMat {
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let d = eig
        .eigenvalues
        .map(|l| Complex64::new(l.max(0.0).powf(power), 0.0));
    let q = &eig.eigenvectors;
    q * CMat::from_diagonal(&d) * q.adjoint()
}

pub fn min_hermitian_eigenvalue(h: &CMat) -> f64 {
    let sym = (h + h.adjoint()).scale(0.5);
    sym.symmetric_eigen().eigenvalues.min()
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

pub fn real_singular_values(m: &RMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Numerical rank with a relative singular-value cutoff.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > rel_tol * top).count()
}

/// Solve `a x = b` for square `a`, `None` if singular.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

/// Least-squares coordinates of the columns of `v` in the column frame `u`.
pub fn coordinates(u: &CMat, v: &CMat) -> Option<CMat> {
    let gram = u.adjoint() * u;
    solve(&gram, &(u.adjoint() * v))
}

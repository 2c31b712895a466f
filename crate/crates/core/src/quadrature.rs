//! Brute-force tensor Gauss-Legendre integration over `R^{2n}`.
//!
//! Integrands here are Gaussians times polynomials. The box is centered at
//! the peak of the modulus and whitened by the real part of the quadratic
//! form, so a fixed half-width `L` bounds the tail uniformly.

use crate::error::{Error, Result};
use crate::gaussian::{ModelKernel, Polynomial};
use crate::linalg::{CMat, RMat};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

pub const TAIL_TOL: f64 = 1e-12;

/// Largest real dimension a tensor grid is built for.
pub const MAX_QUAD_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Nodes per axis.
    pub nodes: usize,
    /// Half-width of the box in whitened coordinates.
    pub half_width: f64,
}

impl QuadratureSpec {
    /// 96 nodes per axis in two dimensions; fewer in four, where the tensor
    /// grid would otherwise hold 8.5e7 points.
    pub fn for_dim(n: usize) -> Self {
        match n {
            1 => Self { nodes: 96, half_width: 4.5 },
            2 => Self { nodes: 36, half_width: 3.8 },
            _ => Self { nodes: 16, half_width: 4.5 },
        }
    }

    /// Per-level spec for nested two-dimensional integrals.
    pub fn nested() -> Self {
        Self { nodes: 48, half_width: 4.0 }
    }

    /// Upper bound on the mass outside the box for a weight of the given degree.
    pub fn tail_bound(&self, dim: usize, degree: usize) -> f64 {
        let l = self.half_width;
        dim as f64 * (-PI * l * l).exp() * (1.0 + l).powi(degree as i32)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, cached per order.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(n).or_insert_with(|| Arc::new(golub_welsch(n))).clone()
}

fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // Symmetrize against eigen-solver asymmetry.
    for k in 0..n / 2 {
        let (x0, w0) = pairs[k];
        let (x1, w1) = pairs[n - 1 - k];
        let x = 0.5 * (x1 - x0);
        let w = 0.5 * (w0 + w1);
        pairs[k] = (-x, w);
        pairs[n - 1 - k] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

/// `int f(Y) dY` over `R^dim` with `Y = center + T u`, `u` in the box.
pub fn integrate_affine<F>(center: &[f64], t: &RMat, spec: &QuadratureSpec, degree: usize, f: F) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let dim = center.len();
    if dim > MAX_QUAD_DIM {
        return Err(Error::InvalidDimension(format!("tensor quadrature limited to {MAX_QUAD_DIM} dimensions")));
    }
    let bound = spec.tail_bound(dim, degree);
    if bound > TAIL_TOL {
        return Err(Error::TailBoundViolated { bound });
    }
    let rule = gauss_legendre(spec.nodes);
    let (x, w) = (&rule.0, &rule.1);
    let l = spec.half_width;
    let nodes: Vec<f64> = x.iter().map(|v| v * l).collect();
    let weights: Vec<f64> = w.iter().map(|v| v * l).collect();
    let n = spec.nodes;
    let jac = t.determinant().abs();
    // One block per first-axis node; blocks are summed in order, so the
    // result does not depend on thread scheduling.
    let blocks: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; dim];
            idx[0] = i0;
            let mut y = vec![0.0; dim];
            let mut u = vec![0.0; dim];
            let mut acc = Complex64::new(0.0, 0.0);
            loop {
                let mut wt = 1.0;
                for k in 0..dim {
                    u[k] = nodes[idx[k]];
                    wt *= weights[idx[k]];
                }
                for r in 0..dim {
                    let mut s = center[r];
                    for k in 0..dim {
                        s += t[(r, k)] * u[k];
                    }
                    y[r] = s;
                }
                acc += f(&y) * wt;
                // Odometer over axes 1..dim.
                let mut k = 1;
                loop {
                    if k == dim {
                        return acc;
                    }
                    idx[k] += 1;
                    if idx[k] < n {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
        })
        .collect();
    Ok(blocks.iter().sum::<Complex64>() * jac)
}

/// Whitening map `T = R^{-1/2}` for a symmetric positive `R`.
pub fn whitening(r: &RMat) -> Result<RMat> {
    let sym = (r + r.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::NotPositive);
    }
    let d = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    Ok(&eig.eigenvectors * RMat::from_diagonal(&d))
}

/// `int K1(Z, Y) F K2(Y, Z') dY`.
///
/// `F` is either a polynomial in the middle variable `Y` (`2n` variables) or
/// in `(Z, Y, Z')` (`6n` variables); `None` means `F = 1`.
pub fn quadrature_compose(
    k1: &ModelKernel,
    f: Option<&Polynomial>,
    k2: &ModelKernel,
    z: &[f64],
    zp: &[f64],
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    let dim = 2 * k1.n();
    if k2.n() != k1.n() {
        return Err(Error::DimensionMismatch { expected: k1.n(), found: k2.n() });
    }
    if z.len() != dim || zp.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: z.len().max(zp.len()) });
    }
    if let Some(p) = f {
        if p.n_vars() != dim && p.n_vars() != 3 * dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.n_vars() });
        }
    }
    let r1 = k1.m().map(|c| c.re);
    let r2 = k2.m().map(|c| c.re);
    let r = &r1 + &r2;
    let zv = nalgebra::DVector::from_column_slice(z);
    let zpv = nalgebra::DVector::from_column_slice(zp);
    let center = r
        .clone()
        .lu()
        .solve(&(&r1 * &zv + &r2 * &zpv))
        .ok_or(Error::NotPositive)?;
    let t = whitening(&r)?;
    let degree = f.map(|p| p.degree()).unwrap_or(0);
    let scalar = match f {
        None => Some(Complex64::new(1.0, 0.0)),
        Some(p) => p.as_constant(),
    };
    integrate_affine(center.as_slice(), &t, spec, degree, |y| {
        let e = k1.exponent(z, y) + k2.exponent(y, zp);
        let v = k1.c() * k2.c() * e.exp();
        match (scalar, f) {
            (Some(s), _) => v * s,
            (None, Some(p)) if p.n_vars() == dim => v * p.eval_real(y),
            (None, Some(p)) => {
                let mut all = [0.0; 3 * MAX_QUAD_DIM];
                all[..dim].copy_from_slice(z);
                all[dim..2 * dim].copy_from_slice(y);
                all[2 * dim..3 * dim].copy_from_slice(zp);
                v * p.eval_real(&all[..3 * dim])
            }
            (None, None) => unreachable!(),
        }
    })
}

/// Nodes per axis resolving `exp(-pi (1 + i s) u^2)` on `[-L, L]`.
pub fn oscillation_nodes(spec: &QuadratureSpec, s: f64) -> usize {
    spec.nodes + (2.0 * s.abs() * spec.half_width * spec.half_width).ceil() as usize
}

/// `int exp(-pi Z^T Q Z) dZ` for `Q` with positive-definite real symmetric part.
///
/// `Z = T u` with `T^T Re(Q) T = I` and `T^T Im(Q) T = diag(s)`, so the
/// tensor rule factors into one-dimensional sums, each with enough nodes
/// for its oscillation rate `s_k`.
pub fn gaussian_integral(q: &CMat, spec: &QuadratureSpec) -> Result<Complex64> {
    let dim = q.nrows();
    let bound = spec.tail_bound(dim, 0);
    if bound > TAIL_TOL {
        return Err(Error::TailBoundViolated { bound });
    }
    let sym = (q + q.transpose()).scale(0.5);
    let w = whitening(&sym.map(|c| c.re))?;
    let im = w.transpose() * sym.map(|c| c.im) * &w;
    let eig = ((&im + im.transpose()) * 0.5).symmetric_eigen();
    let t = &w * &eig.eigenvectors;
    let l = spec.half_width;
    let mut total = Complex64::new(t.determinant().abs(), 0.0);
    for &s in eig.eigenvalues.iter() {
        let rule = gauss_legendre(oscillation_nodes(spec, s));
        let a = Complex64::new(1.0, s);
        let axis: Complex64 = rule
            .0
            .iter()
            .zip(&rule.1)
            .map(|(x, wt)| (-PI * a * (l * x) * (l * x)).exp() * (wt * l))
            .sum();
        total *= axis;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_exact_for_polynomials() {
        let rule = gauss_legendre(7);
        let (x, w) = (&rule.0, &rule.1);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m12: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((m12 - 2.0 / 13.0).abs() < 1e-14);
        let odd: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(5)).sum();
        assert!(odd.abs() < 1e-15);
    }

    #[test]
    fn complex_gaussian() {
        // int exp(-pi z^T Q z) = det(Q)^{-1/2}
        let q = CMat::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 0.3), Complex64::new(0.1, 0.0), Complex64::new(0.1, 0.0), Complex64::new(2.0, -0.5)],
        );
        let v = gaussian_integral(&q, &QuadratureSpec::for_dim(1)).unwrap();
        let expect = 1.0 / q.determinant().sqrt();
        assert!((v - expect).norm() < 1e-12, "{v} vs {expect}");
        // Strong oscillation, checked against the same form on the full
        // tensor grid with many nodes.
        let q = CMat::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 6.0), Complex64::new(0.2, -2.0), Complex64::new(0.2, -2.0), Complex64::new(0.7, 3.0)],
        );
        let v = gaussian_integral(&q, &QuadratureSpec::for_dim(1)).unwrap();
        let t = whitening(&q.map(|c| c.re)).unwrap();
        let brute = integrate_affine(&[0.0, 0.0], &t, &QuadratureSpec { nodes: 600, half_width: 4.5 }, 0, |y| {
            let s = q[(0, 0)] * y[0] * y[0] + q[(0, 1)] * 2.0 * y[0] * y[1] + q[(1, 1)] * y[1] * y[1];
            (-PI * s).exp()
        })
        .unwrap();
        assert!((v - brute).norm() < 1e-10, "{v} vs {brute}");
    }

    #[test]
    fn tail_guard() {
        let spec = QuadratureSpec { nodes: 8, half_width: 1.0 };
        let r = gaussian_integral(&CMat::identity(2, 2), &spec);
        assert!(matches!(r, Err(Error::TailBoundViolated { .. })));
    }
}

//! Moments of a centered Gaussian with complex covariance.

use super::poly::Polynomial;
use crate::linalg::CMat;
use num_complex::Complex64;
use std::collections::HashMap;

/// Highest total degree the moment engine accepts.
pub const MAX_WICK_DEGREE: usize = 8;

/// `E[W^alpha]` for `E[W_a W_b] = cov[a][b]`, by the Isserlis recursion
/// `E[W_i W^beta] = sum_j beta_j cov_ij E[W^{beta - e_j}]`, memoized.
pub struct Moments<'a> {
    cov: &'a CMat,
    memo: HashMap<Vec<u16>, Complex64>,
}

impl<'a> Moments<'a> {
    pub fn new(cov: &'a CMat) -> Self {
        Self { cov, memo: HashMap::new() }
    }

    pub fn moment(&mut self, alpha: &[u16]) -> Complex64 {
        let deg: usize = alpha.iter().map(|&k| k as usize).sum();
        assert!(deg <= MAX_WICK_DEGREE, "moment of degree {deg} exceeds {MAX_WICK_DEGREE}");
        if deg % 2 == 1 {
            return Complex64::new(0.0, 0.0);
        }
        if deg == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if let Some(&v) = self.memo.get(alpha) {
            return v;
        }
        let i = alpha.iter().position(|&k| k > 0).unwrap();
        let mut rest = alpha.to_vec();
        rest[i] -= 1;
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 0..rest.len() {
            if rest[j] == 0 {
                continue;
            }
            let mult = rest[j] as f64;
            let mut sub = rest.clone();
            sub[j] -= 1;
            sum += self.cov[(i, j)] * mult * self.moment(&sub);
        }
        self.memo.insert(alpha.to_vec(), sum);
        sum
    }
}

/// Average out the trailing `cov.nrows()` variables of `p`.
pub fn expectation(p: &Polynomial, cov: &CMat) -> Polynomial {
    let k = cov.nrows();
    let keep = p.n_vars() - k;
    let mut moments = Moments::new(cov);
    let mut out = Polynomial::zero(keep);
    for (e, c) in p.terms() {
        let m = moments.moment(&e[keep..]);
        if m != Complex64::new(0.0, 0.0) {
            out.add_term(e[..keep].to_vec(), c * m);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn scalar_moments() {
        let cov = dmatrix![r(2.0)];
        let mut m = Moments::new(&cov);
        assert_eq!(m.moment(&[2]), r(2.0));
        assert_eq!(m.moment(&[4]), r(12.0)); // 3 s^2
        assert_eq!(m.moment(&[6]), r(120.0)); // 15 s^3
        assert_eq!(m.moment(&[8]), r(1680.0)); // 105 s^4
        assert_eq!(m.moment(&[3]), r(0.0));
    }

    #[test]
    fn isserlis_four() {
        let cov = dmatrix![r(1.0), r(0.5), r(0.2); r(0.5), r(2.0), r(0.3); r(0.2), r(0.3), r(1.5)];
        let mut m = Moments::new(&cov);
        // E[W0 W1 W2 W2] = c01 c22 + 2 c02 c12
        let expect = cov[(0, 1)] * cov[(2, 2)] + cov[(0, 2)] * cov[(1, 2)] * 2.0;
        assert!((m.moment(&[1, 1, 2]) - expect).norm() < 1e-15);
    }
}

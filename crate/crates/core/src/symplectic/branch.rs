//! Square roots of determinants fixed by continuation along a matrix path.

use crate::error::{Error, Result};
use crate::linalg::{CMat, I};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Refinement stops here; beyond it the path is reported as discontinuous.
pub const MAX_BRANCH_STEPS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct BranchedValue {
    pub value: Complex64,
    /// Determinants sampled along the path, in order.
    pub samples: Vec<Complex64>,
}

impl BranchedValue {
    /// Largest argument increment between consecutive samples.
    pub fn max_arg_increment(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| (w[1] / w[0]).arg().abs())
            .fold(0.0, f64::max)
    }

    pub fn inverse(&self) -> BranchedValue {
        BranchedValue { value: 1.0 / self.value, samples: self.samples.clone() }
    }
}

/// `det^{1/2}(path(1))`, continued from the principal root at `path(0)`.
///
/// Starts from `steps` uniform samples and doubles until every argument
/// increment is below `pi/2`.
pub fn sqrt_det_tracked<F>(path: F, steps: usize) -> Result<BranchedValue>
where
    F: Fn(f64) -> CMat,
{
    let mut steps = steps.max(1);
    loop {
        match track(&path, steps) {
            Ok(v) => return Ok(v),
            Err(Error::BranchJump { .. }) if steps < MAX_BRANCH_STEPS => steps *= 2,
            Err(e) => return Err(e),
        }
    }
}

fn track<F: Fn(f64) -> CMat>(path: &F, steps: usize) -> Result<BranchedValue> {
    let mut samples = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let d = path(k as f64 / steps as f64).determinant();
        if d.norm() == 0.0 || !d.is_finite() {
            return Err(Error::ZeroDeterminant);
        }
        samples.push(d);
    }
    let mut theta = samples[0].arg();
    for w in samples.windows(2) {
        let inc = (w[1] / w[0]).arg();
        if inc.abs() >= FRAC_PI_2 {
            return Err(Error::BranchJump { steps });
        }
        theta += inc;
    }
    let last = samples[steps];
    let value = Complex64::from_polar(last.norm().sqrt(), theta / 2.0);
    Ok(BranchedValue { value, samples })
}

/// `det^{1/2}(m)` for a matrix whose symmetric part has positive-definite
/// real part, continued along `Re m + t i Im m` from the positive root.
pub fn sqrt_det_convention(m: &CMat, steps: usize) -> Result<BranchedValue> {
    let re = m.map(|z| Complex64::new(z.re, 0.0));
    let im = m.map(|z| Complex64::new(z.im, 0.0));
    sqrt_det_tracked(|t| &re + &im * (I * t), steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use std::f64::consts::PI;

    #[test]
    fn constant_identity() {
        let v = sqrt_det_tracked(|_| CMat::identity(3, 3), 8).unwrap();
        assert!((v.value - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn quarter_turn() {
        let v = sqrt_det_tracked(
            |t| CMat::from_diagonal(&nalgebra::dvector![c(1.0, 0.0), Complex64::from_polar(1.0, PI * t / 2.0)]),
            64,
        )
        .unwrap();
        assert!((v.value - Complex64::from_polar(1.0, PI / 4.0)).norm() < 1e-14);
        assert_eq!(v.samples.len(), 65);
        assert!(v.max_arg_increment() < FRAC_PI_2);
    }

    #[test]
    fn positive_real() {
        let a = CMat::from_diagonal(&nalgebra::dvector![c(1.6, 0.0), c(0.4, 0.0)]);
        let v = sqrt_det_convention(&a, 16).unwrap();
        assert!((v.value - c(0.8, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn winding_past_principal_branch() {
        // det goes once around the origin: the continued root flips sign.
        let v = sqrt_det_tracked(
            |t| CMat::from_element(1, 1, Complex64::from_polar(1.0, 2.0 * PI * t)),
            2,
        )
        .unwrap();
        assert!((v.value + c(1.0, 0.0)).norm() < 1e-14);
        assert!(v.samples.len() > 3);
    }

    #[test]
    fn zero_determinant() {
        let r = sqrt_det_tracked(|t| CMat::from_element(1, 1, c(1.0 - 2.0 * t, 0.0)), 2);
        assert_eq!(r, Err(Error::ZeroDeterminant));
    }

    #[test]
    fn jump_reported() {
        let r = sqrt_det_tracked(
            |t| CMat::from_element(1, 1, if t < 0.5 { c(1.0, 0.0) } else { c(-1.0, 1e-9) }),
            4,
        );
        assert!(matches!(r, Err(Error::BranchJump { .. })));
    }
}

//! Seeded random compatible structures and symplectic matrices.

use crate::linalg::{c, CMat, RMat};
use crate::symplectic::{standard_j, CompatibleStructure};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn symmetric(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> RMat {
    let a = RMat::from_fn(n, n, |_, _| rng.gen_range(-scale..scale));
    (&a + a.transpose()) * 0.5
}

/// Siegel point `X + iY` with `X` symmetric and `Y >= 0.3 I`.
pub fn siegel_point(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let x = symmetric(n, 0.8, rng);
    let b = RMat::from_fn(n, n, |_, _| rng.gen_range(-0.7..0.7));
    let y = &b * b.transpose() + RMat::identity(n, n) * 0.3;
    CMat::from_fn(n, n, |i, j| c(x[(i, j)], y[(i, j)]))
}

pub fn compatible_structure(n: usize, rng: &mut ChaCha8Rng) -> CompatibleStructure {
    CompatibleStructure::from_siegel(&siegel_point(n, rng)).expect("Siegel points are valid")
}

/// `exp(J_std H)` for a random symmetric `H` with entries below `scale`.
pub fn symplectic(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> RMat {
    let h = symmetric(2 * n, scale, rng);
    (standard_j(n) * h).exp()
}

/// A symplectic matrix preserving `J`, `G^{-1/2} exp(J_std H) G^{1/2}`
/// with `H` symmetric and commuting with `J_std`.
pub fn unitary(j: &CompatibleStructure, scale: f64, rng: &mut ChaCha8Rng) -> RMat {
    let n = j.n();
    let j0 = standard_j(n);
    let h = symmetric(2 * n, scale, rng);
    let h = (&h + j0.transpose() * &h * &j0) * 0.5;
    let u = (&j0 * h).exp();
    let eig = j.metric().clone().symmetric_eigen();
    let root = |p: f64| {
        &eig.eigenvectors * RMat::from_diagonal(&eig.eigenvalues.map(|l| l.powf(p))) * eig.eigenvectors.transpose()
    };
    root(-0.5) * u * root(0.5)
}

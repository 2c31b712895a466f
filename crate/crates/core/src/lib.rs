//! Linear-model calculus of Berezin-Toeplitz quantization along paths of
//! compatible complex structures, and an exact finite-dimensional
//! quantization of the flat 2-torus used to check its asymptotics.
//!
//! Module map:
//! - [`symplectic`]: compatible complex structures on the standard
//!   symplectic space, interpolation projectors, branch-tracked square roots
//!   of determinants, and structure paths.
//! - [`gaussian`]: model Bergman kernels, their compositions with
//!   polynomial weights (Wick expansion), and a brute-force quadrature oracle.
//! - [`transport`]: transport factors along a path of structures.
//! - [`fixed_point`]: leading coefficients of trace localization formulas.
//! - [`torus`]: theta bases, Gram matrices, Toeplitz matrices, L2 transport,
//!   quantized SL(2,Z) maps and trace studies.

pub mod error;
pub mod fit;
pub mod fixed_point;
pub mod gaussian;
pub mod linalg;
pub mod quadrature;
pub mod random;
pub mod symplectic;
pub mod torus;
pub mod transport;

pub use error::{Error, Result};
pub use num_complex::Complex64;

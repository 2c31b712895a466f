//! Paths `t -> J_t` of compatible structures on `[0, 1]`.

use super::{siegel_metric, siegel_metric_derivative, standard_j, CompatibleStructure};
use crate::error::{Error, Result};
use crate::linalg::{CMat, RMat};
use num_complex::Complex64;

/// Step of the centered difference used for sampled paths.
pub const SAMPLED_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    Constant(CompatibleStructure),
    /// Siegel point `i e^{2st} I`, i.e. `G_t = diag(e^{-2st}, e^{2st})` per plane.
    DiagonalScaling { n: usize, s: f64 },
    UpperHalfPlaneSegment { start: Complex64, end: Complex64 },
    /// Straight segment in the Siegel upper half space.
    SiegelSegment { start: CMat, end: CMat },
    Sampled(Spline),
    /// `t -> base(t^power)`, same geometric path with a different clock.
    Reparametrized { base: Box<StructurePath>, power: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructurePath {
    kind: PathKind,
    n: usize,
}

impl StructurePath {
    pub fn constant(j: CompatibleStructure) -> Self {
        let n = j.n();
        Self { kind: PathKind::Constant(j), n }
    }

    pub fn diagonal_scaling(n: usize, s: f64) -> Result<Self> {
        if n == 0 || !s.is_finite() {
            return Err(Error::InvalidInput("scaling path needs n >= 1 and finite rate".into()));
        }
        Ok(Self { kind: PathKind::DiagonalScaling { n, s }, n })
    }

    pub fn upper_half_plane_segment(start: Complex64, end: Complex64) -> Result<Self> {
        if !(start.im > 0.0 && end.im > 0.0) {
            return Err(Error::InvalidInput("moduli must lie in the upper half-plane".into()));
        }
        Ok(Self { kind: PathKind::UpperHalfPlaneSegment { start, end }, n: 1 })
    }

    pub fn siegel_segment(start: CMat, end: CMat) -> Result<Self> {
        if start.shape() != end.shape() {
            return Err(Error::DimensionMismatch { expected: start.nrows(), found: end.nrows() });
        }
        // Positivity is convex, so validating the ends validates the segment.
        siegel_metric(&start)?;
        siegel_metric(&end)?;
        let n = start.nrows();
        Ok(Self { kind: PathKind::SiegelSegment { start, end }, n })
    }

    /// Segment between two structures in Siegel coordinates.
    pub fn between(a: &CompatibleStructure, b: &CompatibleStructure) -> Result<Self> {
        Self::siegel_segment(a.siegel(), b.siegel())
    }

    /// Natural cubic spline through sampled structures (Siegel coordinates).
    pub fn sampled(samples: Vec<(f64, CompatibleStructure)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput("sampled path needs at least two samples".into()));
        }
        let n = samples[0].1.n();
        if let Some((_, bad)) = samples.iter().find(|(_, j)| j.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.n() });
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidInput("sample times must increase".into()));
        }
        let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let zs: Vec<CMat> = samples.iter().map(|s| s.1.siegel()).collect();
        Ok(Self { kind: PathKind::Sampled(Spline::new(ts, zs)), n })
    }

    pub fn reparametrized(base: StructurePath, power: f64) -> Result<Self> {
        if !(power >= 1.0) {
            return Err(Error::InvalidInput("reparametrization power must be >= 1".into()));
        }
        let n = base.n;
        Ok(Self { kind: PathKind::Reparametrized { base: Box::new(base), power }, n })
    }

    pub fn kind(&self) -> &PathKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn start(&self) -> Result<CompatibleStructure> {
        self.at(0.0)
    }

    pub fn end(&self) -> Result<CompatibleStructure> {
        self.at(1.0)
    }

    pub fn at(&self, t: f64) -> Result<CompatibleStructure> {
        match &self.kind {
            PathKind::Constant(j) => Ok(j.clone()),
            PathKind::Reparametrized { base, power } => base.at(t.powf(*power)),
            _ => CompatibleStructure::new(self.raw_j(t)?),
        }
    }

    /// `d/dt J_t`.
    pub fn derivative(&self, t: f64) -> Result<RMat> {
        let dim = 2 * self.n;
        match &self.kind {
            PathKind::Constant(_) => Ok(RMat::zeros(dim, dim)),
            PathKind::DiagonalScaling { n, s } => {
                let mut d = RMat::zeros(dim, dim);
                for k in 0..*n {
                    d[(2 * k, 2 * k + 1)] = -2.0 * s * (2.0 * s * t).exp();
                    d[(2 * k + 1, 2 * k)] = -2.0 * s * (-2.0 * s * t).exp();
                }
                Ok(d)
            }
            PathKind::UpperHalfPlaneSegment { start, end } => {
                let z = CMat::from_element(1, 1, start + (end - start) * t);
                let dz = CMat::from_element(1, 1, end - start);
                Ok(standard_j(1) * siegel_metric_derivative(&z, &dz))
            }
            PathKind::SiegelSegment { start, end } => {
                let z = start + (end - start) * Complex64::new(t, 0.0);
                Ok(standard_j(self.n) * siegel_metric_derivative(&z, &(end - start)))
            }
            PathKind::Sampled(_) => {
                let h = SAMPLED_FD_STEP;
                Ok((self.raw_j(t + h)? - self.raw_j(t - h)?) / (2.0 * h))
            }
            PathKind::Reparametrized { base, power } => {
                let speed = if t == 0.0 && *power > 1.0 { 0.0 } else { power * t.powf(power - 1.0) };
                Ok(base.derivative(t.powf(*power))? * speed)
            }
        }
    }

    /// Siegel coordinate of `J_t`.
    pub fn siegel_at(&self, t: f64) -> Result<CMat> {
        Ok(match &self.kind {
            PathKind::DiagonalScaling { n, s } => {
                CMat::identity(*n, *n) * Complex64::new(0.0, (2.0 * s * t).exp())
            }
            PathKind::UpperHalfPlaneSegment { start, end } => {
                CMat::from_element(1, 1, start + (end - start) * t)
            }
            PathKind::SiegelSegment { start, end } => start + (end - start) * Complex64::new(t, 0.0),
            PathKind::Sampled(sp) => sp.eval(t),
            PathKind::Constant(j) => j.siegel(),
            PathKind::Reparametrized { base, power } => base.siegel_at(t.powf(*power))?,
        })
    }

    /// Modulus `tau_t` of an `n = 1` path.
    pub fn modulus(&self, t: f64) -> Result<Complex64> {
        if self.n != 1 {
            return Err(Error::InvalidDimension("modulus is defined for n = 1 paths".into()));
        }
        Ok(self.siegel_at(t)?[(0, 0)])
    }

    /// Unvalidated `J_t`; sampled paths may extrapolate slightly past the ends.
    fn raw_j(&self, t: f64) -> Result<RMat> {
        match &self.kind {
            PathKind::DiagonalScaling { n, s } => {
                let mut j = RMat::zeros(2 * n, 2 * n);
                for k in 0..*n {
                    j[(2 * k, 2 * k + 1)] = -(2.0 * s * t).exp();
                    j[(2 * k + 1, 2 * k)] = (-2.0 * s * t).exp();
                }
                Ok(j)
            }
            PathKind::Constant(j) => Ok(j.j().clone()),
            PathKind::Reparametrized { base, power } => base.raw_j(t.powf(*power)),
            _ => Ok(standard_j(self.n) * siegel_metric(&self.siegel_at(t)?)?),
        }
    }
}

/// Natural cubic spline of a matrix-valued function, entrywise.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    ts: Vec<f64>,
    values: Vec<CMat>,
    second: Vec<CMat>,
}

impl Spline {
    fn new(ts: Vec<f64>, values: Vec<CMat>) -> Self {
        let m = ts.len();
        let (r, c) = values[0].shape();
        let zero = CMat::zeros(r, c);
        let mut second = vec![zero.clone(); m];
        if m > 2 {
            // Thomas algorithm for the interior second derivatives.
            let mut diag = vec![0.0; m];
            let mut rhs = vec![zero.clone(); m];
            let mut upper = vec![0.0; m];
            for i in 1..m - 1 {
                let h0 = ts[i] - ts[i - 1];
                let h1 = ts[i + 1] - ts[i];
                let lower = h0 / 6.0;
                let mut d = (h0 + h1) / 3.0;
                let mut b = (&values[i + 1] - &values[i]) / Complex64::new(h1, 0.0)
                    - (&values[i] - &values[i - 1]) / Complex64::new(h0, 0.0);
                if i > 1 {
                    let w = lower / diag[i - 1];
                    d -= w * upper[i - 1];
                    b -= &rhs[i - 1] * Complex64::new(w, 0.0);
                }
                diag[i] = d;
                upper[i] = h1 / 6.0;
                rhs[i] = b;
            }
            for i in (1..m - 1).rev() {
                let mut b = rhs[i].clone();
                if i + 1 < m - 1 {
                    b -= &second[i + 1] * Complex64::new(upper[i], 0.0);
                }
                second[i] = b / Complex64::new(diag[i], 0.0);
            }
        }
        Self { ts, values, second }
    }

    fn eval(&self, t: f64) -> CMat {
        let m = self.ts.len();
        let i = match self.ts.iter().position(|&x| x > t) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => m - 2,
        }
        .min(m - 2);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        let cw = (a * a * a - a) * h * h / 6.0;
        let dw = (b * b * b - b) * h * h / 6.0;
        let r = |x: f64| Complex64::new(x, 0.0);
        &self.values[i] * r(a) + &self.values[i + 1] * r(b) + &self.second[i] * r(cw) + &self.second[i + 1] * r(dw)
    }
}

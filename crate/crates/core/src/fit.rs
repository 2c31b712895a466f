//! Least-squares power-law fits in log-log coordinates.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `log y` about the fitted line.
    pub rms: f64,
    /// Standard error of the slope; infinite with two points, 0 when held fixed.
    pub slope_stderr: f64,
}

impl PowerFit {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

fn logs(xs: &[f64], ys: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput("need at least two matching points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput("log-log fit needs positive finite data".into()));
    }
    Ok((xs.iter().map(|x| x.ln()).collect(), ys.iter().map(|y| y.ln()).collect()))
}

fn rms(lx: &[f64], ly: &[f64], slope: f64, intercept: f64) -> f64 {
    let ss: f64 = lx.iter().zip(ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    (ss / lx.len() as f64).sqrt()
}

/// `log y = intercept + slope log x` by ordinary least squares.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    let (lx, ly) = logs(xs, ys)?;
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("abscissae must not all coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r = rms(&lx, &ly, slope, intercept);
    let slope_stderr = if lx.len() > 2 { (r * r * n / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    Ok(PowerFit { slope, intercept, rms: r, slope_stderr })
}

/// Best `log y = c + slope log x` with the slope held fixed.
pub fn fit_fixed_slope(xs: &[f64], ys: &[f64], slope: f64) -> Result<PowerFit> {
    let (lx, ly) = logs(xs, ys)?;
    let intercept = lx.iter().zip(&ly).map(|(x, y)| y - slope * x).sum::<f64>() / lx.len() as f64;
    Ok(PowerFit { slope, intercept, rms: rms(&lx, &ly, slope, intercept), slope_stderr: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs = [4.0, 8.0, 16.0, 32.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.0)).collect();
        let f = fit_loglog(&xs, &ys).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.rms < 1e-12 && f.slope_stderr < 1e-12);
        let worse = fit_fixed_slope(&xs, &ys, -0.5).unwrap();
        assert!(worse.rms > 0.1);
        assert!(fit_loglog(&xs, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }
}

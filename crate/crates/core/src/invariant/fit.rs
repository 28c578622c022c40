use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::MonotoneProfile;

/// Number of log-spaced samples used by [`ns_exponent_fit`].
pub const FIT_SAMPLES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Slope of `ln F` against `ln lambda`.
    pub exponent: f64,
    /// `ln C` in `F ~ C lambda^exponent`.
    pub intercept: f64,
    /// Largest absolute residual of the log-log fit.
    pub residual: f64,
    pub window: (f64, f64),
}

/// Log-spaced sample points of a window.
pub fn fit_grid(window: (f64, f64)) -> Vec<f64> {
    let (lo, hi) = window;
    (0..FIT_SAMPLES)
        .map(|k| lo * (hi / lo).powf(k as f64 / (FIT_SAMPLES - 1) as f64))
        .collect()
}

/// Least-squares fit of `ln F(lambda) = a ln lambda + b` on
/// [`FIT_SAMPLES`] log-spaced points of `window`.
pub fn ns_exponent_fit(f: &MonotoneProfile, window: (f64, f64)) -> Result<ExponentFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidProfile(format!("invalid fit window [{lo}, {hi}]")));
    }
    let mut xs = Vec::with_capacity(FIT_SAMPLES);
    let mut ys = Vec::with_capacity(FIT_SAMPLES);
    for lambda in fit_grid(window) {
        let v = f.evaluate(lambda)?;
        if !(v > 0.0) {
            return Err(Error::InvalidProfile(format!("profile vanishes at {lambda} inside the fit window")));
        }
        xs.push(lambda.ln());
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - exponent * x - intercept).abs())
        .fold(0.0, f64::max);
    Ok(ExponentFit {
        exponent,
        intercept,
        residual,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let f = MonotoneProfile::power(1.0, 1.5).unwrap();
        let fit = ns_exponent_fit(&f, (1e-3, 1e-1)).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-10);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn vanishing_profile_is_rejected() {
        let f = MonotoneProfile::step(0.0, &[(0.05, 1.0)]).unwrap();
        assert!(ns_exponent_fit(&f, (1e-3, 1e-1)).is_err());
    }
}

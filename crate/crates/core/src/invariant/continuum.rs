//! Closed forms for the Laplacian on `R^n`.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::profiles::MonotoneProfile;

/// `ln vol(B_n) = (n/2) ln pi - ln Gamma(n/2 + 1)`.
pub fn ln_ball_volume(n: usize) -> f64 {
    let n = n as f64;
    0.5 * n * PI.ln() - ln_gamma(0.5 * n + 1.0)
}

/// `ln C_n` with `C_n = (2 pi)^{-n} vol(B_n)`.
pub fn ln_weyl_constant(n: usize) -> f64 {
    -(n as f64) * (2.0 * PI).ln() + ln_ball_volume(n)
}

/// `F(lambda) = C_n lambda^{n/2}`.
pub fn rn_laplacian_profile(n: usize) -> Result<MonotoneProfile> {
    if n == 0 {
        return Err(Error::InvalidSpace("dimension must be at least 1".into()));
    }
    MonotoneProfile::power(ln_weyl_constant(n).exp(), 0.5 * n as f64)
}

/// `D_n = (1/pi) (n vol(B_n) / (n - 2))^{1/n}`.
pub fn sobolev_constant_rn(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::Unsupported(format!("the Sobolev constant needs n >= 3, got {n}")));
    }
    let nf = n as f64;
    let ln = (nf.ln() + ln_ball_volume(n) - (nf - 2.0).ln()) / nf;
    Ok(ln.exp() / PI)
}

/// `E_n = 4^{1 + 2/n} C_n^{2/n}`.
pub fn moser_constant_rn(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidSpace("dimension must be at least 1".into()));
    }
    let nf = n as f64;
    Ok(((1.0 + 2.0 / nf) * 4f64.ln() + 2.0 / nf * ln_weyl_constant(n)).exp())
}

//! Stieltjes transforms between profiles: `F -> G -> H`, `L -> M -> N`,
//! Laplace-Stieltjes transforms and growth conditions.

use statrs::function::gamma::ln_gamma;

use super::decay::{right_inverse_decreasing, DecayProfile};
use super::monotone::{MonotoneProfile, Representation};
use crate::error::{Error, Result};
use crate::extended::Extended;

/// `G(lambda) = int_{]0, lambda]} dF(u) / u`, with breakpoints at or below
/// `floor` rejected.
pub fn g_transform_with_floor(f: &MonotoneProfile, floor: f64) -> Result<MonotoneProfile> {
    if f.value_at_zero() != 0.0 {
        return Err(Error::Divergent(format!(
            "profile carries mass {} at zero; G needs the ]0, lambda] flavor",
            f.value_at_zero()
        )));
    }
    match f.to_step().representation() {
        Representation::Step(s) => {
            let mut breakpoints = Vec::with_capacity(s.positions().len());
            for (&pos, &inc) in s.positions().iter().zip(s.increments()) {
                if pos <= floor {
                    return Err(Error::Divergent(format!("breakpoint {pos} at or below floor {floor}")));
                }
                breakpoints.push((pos, inc / pos));
            }
            MonotoneProfile::step(0.0, &breakpoints)
        }
        Representation::Power {
            coefficient,
            exponent,
        } => {
            if *exponent <= 1.0 {
                return Err(Error::Divergent(format!(
                    "int dF/u diverges at 0 for exponent {exponent} <= 1"
                )));
            }
            MonotoneProfile::power(coefficient * exponent / (exponent - 1.0), exponent - 1.0)
        }
        Representation::Tabulated(_) => unreachable!("to_step converts tabulated profiles"),
    }
}

/// [`g_transform_with_floor`] with floor 0: every breakpoint must be positive.
pub fn g_transform(f: &MonotoneProfile) -> Result<MonotoneProfile> {
    g_transform_with_floor(f, 0.0)
}

/// `H(y) = y G^{-1}(y)`.
pub fn h_of(g: &MonotoneProfile, y: f64) -> Extended {
    if y <= 0.0 {
        return Extended::ZERO;
    }
    g.right_inverse(y).weighted(y)
}

/// `N(y) = y / M^{-1}(y)`; infinite when `M^{-1}(y) = 0`.
pub fn n_of(m: &DecayProfile, y: f64) -> Result<Extended> {
    let t = right_inverse_decreasing(m, y)?;
    if t == 0.0 {
        return Ok(Extended::Infinite);
    }
    Ok(Extended::Finite(y / t))
}

/// `int_{[0, inf)} e^{-lambda t} dF(lambda)`, the mass at zero included.
pub fn laplace_stieltjes(f: &MonotoneProfile, t: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeArgument(t));
    }
    match f.to_step().representation() {
        Representation::Step(s) => Ok(f.value_at_zero()
            + s.positions()
                .iter()
                .zip(s.increments())
                .map(|(&p, &inc)| inc * (-p * t).exp())
                .sum::<f64>()),
        Representation::Power {
            coefficient,
            exponent,
        } => {
            if t == 0.0 {
                return Err(Error::Divergent("Laplace transform of a power profile at t = 0".into()));
            }
            let log = ln_gamma(exponent + 1.0) - exponent * t.ln();
            Ok(f.value_at_zero() + coefficient * log.exp())
        }
        Representation::Tabulated(_) => unreachable!("to_step converts tabulated profiles"),
    }
}

/// Outcome of [`check_growth_condition`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthCheck {
    pub holds: bool,
    /// Sample `(u, y)` maximizing `ln G(uy) - C u - ln G(y)`.
    pub worst: Option<(f64, f64)>,
    pub worst_excess: f64,
}

/// Tests `G(uy) <= e^{Cu} G(y)` on the sampled pairs, in log space.
pub fn check_growth_condition(g: &MonotoneProfile, c: f64, samples: &[(f64, f64)]) -> GrowthCheck {
    let mut worst = None;
    let mut worst_excess = f64::NEG_INFINITY;
    for &(u, y) in samples {
        let lhs = g.eval_unchecked(u * y);
        let rhs = g.eval_unchecked(y);
        let excess = if lhs == 0.0 {
            f64::NEG_INFINITY
        } else if rhs == 0.0 {
            f64::INFINITY
        } else {
            lhs.ln() - c * u - rhs.ln()
        };
        if worst.is_none() || excess > worst_excess {
            worst = Some((u, y));
            worst_excess = excess;
        }
    }
    GrowthCheck {
        holds: worst_excess <= 1e-12,
        worst,
        worst_excess,
    }
}

/// Tests `F(2 lambda) >= 2 (1 + eps) F(lambda)` at `lambda = k lambda_max / grid`,
/// `k = 1..=grid`, with relative slack `1e-12`.
pub fn check_doubling(f: &MonotoneProfile, eps: f64, lambda_max: f64, grid: usize) -> bool {
    let grid = grid.max(2);
    (1..=grid).all(|k| {
        let lambda = lambda_max * k as f64 / grid as f64;
        let lhs = f.eval_unchecked(2.0 * lambda);
        let rhs = 2.0 * (1.0 + eps) * f.eval_unchecked(lambda);
        lhs >= rhs * (1.0 - 1e-12)
    })
}

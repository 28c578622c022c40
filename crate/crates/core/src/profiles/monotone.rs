//! Right-continuous nondecreasing profiles on `[0, inf)`.

use crate::error::{Error, Result};
use crate::extended::Extended;

/// Increments smaller than this are treated as eigensolver noise when a
/// step profile is assembled from cumulative values.
pub const INCREMENT_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct StepData {
    positions: Vec<f64>,
    increments: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepData {
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Value of the jump sum right after each breakpoint, excluding the mass at zero.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    /// Jumps at strictly increasing positions.
    Step(StepData),
    /// `C * lambda^alpha`.
    Power { coefficient: f64, exponent: f64 },
    /// Samples read as a right-continuous staircase from the left sample.
    Tabulated(Vec<(f64, f64)>),
}

/// A right-continuous nondecreasing function `F: [0, inf) -> [0, inf)`.
///
/// `value_at_zero` is the mass `F(0)`: zero for profiles of `]0, lambda]`
/// projectors and the kernel contribution for `[0, lambda]` projectors.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneProfile {
    repr: Representation,
    value_at_zero: f64,
}

fn check_nonneg_finite(v: f64, what: &str) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidProfile(format!("{what} must be finite and nonnegative, got {v}")));
    }
    Ok(())
}

impl MonotoneProfile {
    /// Step profile from `(position, increment)` pairs.
    pub fn step(value_at_zero: f64, breakpoints: &[(f64, f64)]) -> Result<Self> {
        check_nonneg_finite(value_at_zero, "value at zero")?;
        let mut positions = Vec::with_capacity(breakpoints.len());
        let mut increments = Vec::with_capacity(breakpoints.len());
        let mut cumulative = Vec::with_capacity(breakpoints.len());
        let mut acc = 0.0;
        for &(pos, inc) in breakpoints {
            check_nonneg_finite(pos, "breakpoint position")?;
            if !(inc > 0.0) || !inc.is_finite() {
                return Err(Error::InvalidProfile(format!(
                    "increment at {pos} must be strictly positive, got {inc}"
                )));
            }
            if let Some(&last) = positions.last() {
                if pos <= last {
                    return Err(Error::InvalidProfile(format!(
                        "breakpoints must be strictly increasing ({pos} after {last})"
                    )));
                }
            }
            acc += inc;
            positions.push(pos);
            increments.push(inc);
            cumulative.push(acc);
        }
        Ok(MonotoneProfile {
            repr: Representation::Step(StepData {
                positions,
                increments,
                cumulative,
            }),
            value_at_zero,
        })
    }

    /// Step profile from cumulative values `F(position)` (mass at zero
    /// included). Entries that do not increase the running maximum by more
    /// than [`INCREMENT_FLOOR`] are dropped.
    pub fn step_from_values(value_at_zero: f64, values: &[(f64, f64)]) -> Result<Self> {
        let mut current = value_at_zero;
        let mut breakpoints = Vec::new();
        for &(pos, v) in values {
            if v - current > INCREMENT_FLOOR {
                breakpoints.push((pos, v - current));
                current = v;
            }
        }
        Self::step(value_at_zero, &breakpoints)
    }

    /// `C * lambda^alpha` with `C > 0` and `alpha > 0`.
    pub fn power(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient > 0.0 && coefficient.is_finite()) {
            return Err(Error::InvalidProfile(format!("power coefficient must be positive, got {coefficient}")));
        }
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidProfile(format!("power exponent must be positive, got {exponent}")));
        }
        Ok(MonotoneProfile {
            repr: Representation::Power {
                coefficient,
                exponent,
            },
            value_at_zero: 0.0,
        })
    }

    /// Tabulated staircase: value `v_i` on `[lambda_i, lambda_{i+1})` and
    /// `value_at_zero` below the first sample.
    pub fn tabulated(value_at_zero: f64, samples: &[(f64, f64)]) -> Result<Self> {
        check_nonneg_finite(value_at_zero, "value at zero")?;
        let mut prev_pos = -1.0;
        let mut prev_val = value_at_zero;
        for &(pos, v) in samples {
            check_nonneg_finite(pos, "sample position")?;
            check_nonneg_finite(v, "sample value")?;
            if pos <= prev_pos {
                return Err(Error::InvalidProfile("sample positions must be strictly increasing".into()));
            }
            if v < prev_val {
                return Err(Error::InvalidProfile(format!(
                    "tabulated values must be nondecreasing ({v} after {prev_val})"
                )));
            }
            prev_pos = pos;
            prev_val = v;
        }
        Ok(MonotoneProfile {
            repr: Representation::Tabulated(samples.to_vec()),
            value_at_zero,
        })
    }

    /// The identically zero profile.
    pub fn zero() -> Self {
        MonotoneProfile {
            repr: Representation::Step(StepData {
                positions: Vec::new(),
                increments: Vec::new(),
                cumulative: Vec::new(),
            }),
            value_at_zero: 0.0,
        }
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    /// Breakpoints of a step profile, `None` for other representations.
    pub fn as_step(&self) -> Option<&StepData> {
        match &self.repr {
            Representation::Step(s) => Some(s),
            _ => None,
        }
    }

    /// Rewrites a tabulated profile as a step profile; other kinds are returned as is.
    pub fn to_step(&self) -> MonotoneProfile {
        match &self.repr {
            Representation::Tabulated(samples) => {
                Self::step_from_values(self.value_at_zero, samples).expect("validated samples")
            }
            _ => self.clone(),
        }
    }

    /// Positions where the profile jumps (step and tabulated kinds).
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.to_step().repr {
            Representation::Step(s) => s.positions.clone(),
            _ => Vec::new(),
        }
    }

    /// Supremum of the profile (`inf` for power profiles).
    pub fn total(&self) -> Extended {
        match &self.repr {
            Representation::Step(s) => {
                Extended::Finite(self.value_at_zero + s.cumulative.last().copied().unwrap_or(0.0))
            }
            Representation::Power { .. } => Extended::Infinite,
            Representation::Tabulated(samples) => {
                Extended::Finite(samples.last().map(|s| s.1).unwrap_or(self.value_at_zero))
            }
        }
    }

    /// Right-continuous evaluation.
    pub fn evaluate(&self, lambda: f64) -> Result<f64> {
        if lambda < 0.0 || lambda.is_nan() {
            return Err(Error::NegativeArgument(lambda));
        }
        Ok(self.eval_unchecked(lambda))
    }

    pub(crate) fn eval_unchecked(&self, lambda: f64) -> f64 {
        match &self.repr {
            Representation::Step(s) => {
                let idx = s.positions.partition_point(|&p| p <= lambda);
                if idx == 0 {
                    self.value_at_zero
                } else {
                    self.value_at_zero + s.cumulative[idx - 1]
                }
            }
            Representation::Power {
                coefficient,
                exponent,
            } => {
                if lambda.is_infinite() {
                    return f64::INFINITY;
                }
                self.value_at_zero + coefficient * lambda.powf(*exponent)
            }
            Representation::Tabulated(samples) => {
                let idx = samples.partition_point(|&(p, _)| p <= lambda);
                if idx == 0 {
                    self.value_at_zero
                } else {
                    samples[idx - 1].1
                }
            }
        }
    }

    /// Right-continuous inverse `sup{lambda >= 0 : F(lambda) <= y}`, completed
    /// by `0` when `y < F(0)`.
    pub fn right_inverse(&self, y: f64) -> Extended {
        if y.is_nan() || y < self.value_at_zero {
            return Extended::ZERO;
        }
        match &self.repr {
            Representation::Step(s) => {
                let excess = y - self.value_at_zero;
                let idx = s.cumulative.partition_point(|&c| c <= excess);
                match s.positions.get(idx) {
                    Some(&p) => Extended::Finite(p),
                    None => Extended::Infinite,
                }
            }
            Representation::Power {
                coefficient,
                exponent,
            } => {
                if y.is_infinite() {
                    return Extended::Infinite;
                }
                Extended::Finite(((y - self.value_at_zero) / coefficient).powf(1.0 / exponent))
            }
            Representation::Tabulated(samples) => {
                let idx = samples.partition_point(|&(_, v)| v <= y);
                match samples.get(idx) {
                    Some(&(p, _)) => Extended::Finite(p),
                    None => Extended::Infinite,
                }
            }
        }
    }
}

/// Free-function form of [`MonotoneProfile::evaluate`].
pub fn evaluate(p: &MonotoneProfile, lambda: f64) -> Result<f64> {
    p.evaluate(lambda)
}

/// Free-function form of [`MonotoneProfile::right_inverse`].
pub fn right_inverse_increasing(p: &MonotoneProfile, y: f64) -> Extended {
    p.right_inverse(y)
}

//! Nonnegative extended reals.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// A value in `[0, +inf]`. Infinity is carried symbolically.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub const ZERO: Extended = Extended::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// Lossy conversion; infinity maps to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            Extended::Finite(v) => v,
            Extended::Infinite => f64::INFINITY,
        }
    }

    /// Product with a nonnegative weight using the measure-theoretic
    /// convention `0 * inf = 0`.
    pub fn weighted(self, weight: f64) -> Extended {
        if weight == 0.0 {
            return Extended::ZERO;
        }
        match self {
            Extended::Finite(v) => Extended::Finite(v * weight),
            Extended::Infinite => Extended::Infinite,
        }
    }

    pub fn add(self, other: Extended) -> Extended {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::Infinite,
        }
    }
}

impl From<f64> for Extended {
    fn from(v: f64) -> Self {
        if v.is_infinite() && v > 0.0 {
            Extended::Infinite
        } else {
            Extended::Finite(v)
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(*v),
            Extended::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Extended::from(crate::serde_ext::deserialize_f64(d)?))
    }
}

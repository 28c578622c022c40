//! JSON and CSV forms of profiles.
//!
//! JSON: `{"kind": "step"|"power"|"tabulated", "value_at_zero": v, "data": [...]}`
//! where `data` is `[[position, increment], ...]` for steps, `[C, alpha]`
//! for powers and `[[lambda, value], ...]` for tabulated profiles.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt::Write as _;

use super::decay::TabulatedDecay;
use super::monotone::{MonotoneProfile, Representation};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct ProfileJson {
    kind: String,
    value_at_zero: f64,
    data: Value,
}

fn invalid(msg: &str) -> Error {
    Error::Parse {
        line: 0,
        column: 0,
        message: msg.to_string(),
    }
}

fn pairs(v: &Value) -> Result<Vec<(f64, f64)>> {
    let arr = v.as_array().ok_or_else(|| invalid("data must be an array"))?;
    arr.iter()
        .map(|item| {
            let pair = item.as_array().filter(|p| p.len() == 2).ok_or_else(|| invalid("expected [x, y] pairs"))?;
            match (pair[0].as_f64(), pair[1].as_f64()) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(invalid("pair entries must be numbers")),
            }
        })
        .collect()
}

impl Serialize for MonotoneProfile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (kind, data) = match self.representation() {
            Representation::Step(st) => (
                "step",
                serde_json::json!(st
                    .positions()
                    .iter()
                    .zip(st.increments())
                    .map(|(p, i)| [*p, *i])
                    .collect::<Vec<_>>()),
            ),
            Representation::Power {
                coefficient,
                exponent,
            } => ("power", serde_json::json!([coefficient, exponent])),
            Representation::Tabulated(samples) => (
                "tabulated",
                serde_json::json!(samples.iter().map(|(a, b)| [*a, *b]).collect::<Vec<_>>()),
            ),
        };
        ProfileJson {
            kind: kind.to_string(),
            value_at_zero: self.value_at_zero(),
            data,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MonotoneProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ProfileJson::deserialize(d)?;
        from_json_parts(&raw).map_err(serde::de::Error::custom)
    }
}

fn from_json_parts(raw: &ProfileJson) -> Result<MonotoneProfile> {
    match raw.kind.as_str() {
        "step" => MonotoneProfile::step(raw.value_at_zero, &pairs(&raw.data)?),
        "tabulated" => MonotoneProfile::tabulated(raw.value_at_zero, &pairs(&raw.data)?),
        "power" => {
            let arr = raw.data.as_array().filter(|a| a.len() == 2).ok_or_else(|| invalid("power data is [C, alpha]"))?;
            let (c, a) = match (arr[0].as_f64(), arr[1].as_f64()) {
                (Some(c), Some(a)) => (c, a),
                _ => return Err(invalid("power data entries must be numbers")),
            };
            if raw.value_at_zero != 0.0 {
                return Err(invalid("power profiles have no mass at zero"));
            }
            MonotoneProfile::power(c, a)
        }
        other => Err(invalid(&format!("unknown profile kind {other:?}"))),
    }
}

pub fn to_json(p: &MonotoneProfile) -> String {
    serde_json::to_string(p).expect("profile serialization is infallible")
}

pub fn from_json(s: &str) -> Result<MonotoneProfile> {
    let raw: ProfileJson = serde_json::from_str(s)?;
    from_json_parts(&raw)
}

/// CSV with header `lambda,value`.
///
/// Steps and tabulated profiles list the value right after each breakpoint
/// (preceded by a `0` row when there is mass at zero); power profiles are
/// sampled on `power_grid`.
pub fn to_csv(p: &MonotoneProfile, power_grid: &[f64]) -> String {
    let mut out = String::from("lambda,value\n");
    let step = p.to_step();
    match step.representation() {
        Representation::Step(s) => {
            if p.value_at_zero() > 0.0 {
                writeln!(out, "0,{}", p.value_at_zero()).unwrap();
            }
            for (pos, c) in s.positions().iter().zip(s.cumulative()) {
                writeln!(out, "{},{}", pos, p.value_at_zero() + c).unwrap();
            }
        }
        Representation::Power { .. } => {
            for &l in power_grid {
                writeln!(out, "{},{}", l, p.eval_unchecked(l)).unwrap();
            }
        }
        Representation::Tabulated(_) => unreachable!(),
    }
    out
}

/// Parses a `lambda,value` CSV into a tabulated profile (first row may be `0`).
pub fn from_csv(s: &str) -> Result<MonotoneProfile> {
    let mut lines = s.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "lambda,value" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "expected header lambda,value".into(),
            })
        }
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut field = |col: usize| -> Result<f64> {
            parts
                .next()
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or(Error::Parse {
                    line: i + 1,
                    column: col,
                    message: "expected a number".into(),
                })
        };
        let l = field(1)?;
        let v = field(2)?;
        samples.push((l, v));
    }
    let value_at_zero = match samples.first() {
        Some(&(l, v)) if l == 0.0 => {
            samples.remove(0);
            v
        }
        _ => 0.0,
    };
    MonotoneProfile::tabulated(value_at_zero, &samples)
}

/// CSV with header `t,value` for a tabulated decay.
pub fn decay_to_csv(d: &TabulatedDecay) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in d.samples() {
        writeln!(out, "{t},{v}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shapes() {
        let p = MonotoneProfile::step(0.0, &[(2.0, 0.5), (4.0, 0.25)]).unwrap();
        assert_eq!(to_json(&p), r#"{"kind":"step","value_at_zero":0.0,"data":[[2.0,0.5],[4.0,0.25]]}"#);
        assert_eq!(from_json(&to_json(&p)).unwrap(), p);
        let q = MonotoneProfile::power(0.5, 1.5).unwrap();
        assert_eq!(from_json(&to_json(&q)).unwrap(), q);
        assert!(from_json(r#"{"kind":"blob","value_at_zero":0,"data":[]}"#).is_err());
    }

    #[test]
    fn csv_rows() {
        let p = MonotoneProfile::step(0.0, &[(2.0, 0.5), (4.0, 0.25)]).unwrap();
        assert_eq!(to_csv(&p, &[]), "lambda,value\n2,0.5\n4,0.75\n");
        let back = from_csv(&to_csv(&p, &[])).unwrap();
        assert_eq!(back.to_step(), p);
        let err = from_csv("lambda,value\n1,x\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 2, column: 2, message: "expected a number".into() });
    }
}

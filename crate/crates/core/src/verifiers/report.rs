use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::serde_ext::ext_f64;

/// Tolerances shared by all verifiers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// A report passes when `margin >= -abs_tol * max(1, |rhs|)`.
    pub abs_tol: f64,
    /// Largest relative kernel component accepted where the `]0, lambda]`
    /// flavor needs a kernel-free state.
    pub kernel_tol: f64,
    /// Largest relative mass outside a region accepted for supported states.
    pub support_tol: f64,
    /// Number of log-spaced times for heat/spectral comparisons.
    pub heat_grid: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            abs_tol: 1e-9,
            kernel_tol: 1e-9,
            support_tol: 1e-10,
            heat_grid: 50,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("abs_tol", self.abs_tol),
            ("kernel_tol", self.kernel_tol),
            ("support_tol", self.support_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidProfile(format!("{name} must be positive, got {v}")));
            }
        }
        if self.heat_grid < 2 {
            return Err(Error::InvalidProfile("heat_grid must be at least 2".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn threshold(&self, rhs: f64) -> f64 {
        self.abs_tol * rhs.abs().max(1.0)
    }
}

/// Identifies the instance a report was computed on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub operator: String,
    pub state: String,
    pub params: BTreeMap<String, Value>,
    pub config: String,
}

impl Witness {
    pub fn new(operator: String, state: String, config: String) -> Self {
        Witness {
            operator,
            state,
            params: BTreeMap::new(),
            config,
        }
    }

    /// Records a numeric parameter; non-finite values are stored as strings.
    pub fn param(mut self, key: &str, v: f64) -> Self {
        self.params.insert(key.to_string(), number(v));
        self
    }

    pub fn text(mut self, key: &str, v: impl Into<String>) -> Self {
        self.params.insert(key.to_string(), Value::String(v.into()));
        self
    }

    pub fn set(&mut self, key: &str, v: f64) {
        self.params.insert(key.to_string(), number(v));
    }

    pub fn set_text(&mut self, key: &str, v: impl Into<String>) {
        self.params.insert(key.to_string(), Value::String(v.into()));
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("witness serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

fn number(v: f64) -> Value {
    match serde_json::Number::from_f64(v) {
        Some(n) => Value::Number(n),
        None if v.is_nan() => Value::String("nan".into()),
        None if v > 0.0 => Value::String("inf".into()),
        None => Value::String("-inf".into()),
    }
}

/// Both sides of one inequality on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub id: String,
    #[serde(with = "ext_f64")]
    pub lhs: f64,
    #[serde(with = "ext_f64")]
    pub rhs: f64,
    #[serde(with = "ext_f64")]
    pub margin: f64,
    #[serde(with = "ext_f64")]
    pub rel_margin: f64,
    pub pass: bool,
    pub witness: Witness,
    #[serde(with = "ext_f64")]
    pub exclusions: f64,
    pub seed: Option<u64>,
}

impl InequalityReport {
    /// Report for `lhs <= rhs`.
    pub fn new(id: &str, lhs: f64, rhs: f64, witness: Witness, cfg: &VerifyConfig) -> Self {
        let margin = if lhs == rhs { 0.0 } else { rhs - lhs };
        let rel_margin = if rhs != 0.0 && rhs.is_finite() { margin / rhs.abs() } else { margin };
        let pass = margin >= -cfg.threshold(rhs);
        InequalityReport {
            id: id.to_string(),
            lhs,
            rhs,
            margin,
            rel_margin,
            pass,
            witness,
            exclusions: 0.0,
            seed: None,
        }
    }

    pub fn with_exclusions(mut self, mass: f64) -> Self {
        self.exclusions = mass;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Distance to failure in units of the pass threshold scale.
    pub fn score(&self, cfg: &VerifyConfig) -> f64 {
        if self.margin.is_nan() {
            return f64::NEG_INFINITY;
        }
        self.margin / self.rhs.abs().max(1.0) + cfg.abs_tol
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Keeps the report closest to failure among checks of one inequality over
/// a parameter sweep, recording the sweep size.
pub(crate) fn worst_of(
    id: &str,
    cases: impl IntoIterator<Item = (f64, f64, f64)>,
    witness: Witness,
    param: &str,
    cfg: &VerifyConfig,
) -> InequalityReport {
    let mut best: Option<(f64, f64, f64, f64)> = None;
    let mut count = 0usize;
    for (at, lhs, rhs) in cases {
        count += 1;
        let r = InequalityReport::new(id, lhs, rhs, Witness::default(), cfg);
        let s = r.score(cfg);
        if best.is_none_or(|b| s < b.3) {
            best = Some((at, lhs, rhs, s));
        }
    }
    let (at, lhs, rhs) = best.map(|b| (b.0, b.1, b.2)).unwrap_or((f64::NAN, 0.0, 0.0));
    let witness = witness.param(param, at).param("sweep_points", count as f64);
    InequalityReport::new(id, lhs, rhs, witness, cfg)
}

pub fn write_jsonl<W: Write>(reports: &[InequalityReport], mut out: W) -> std::io::Result<()> {
    for r in reports {
        writeln!(out, "{}", r.to_json())?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: InequalityReport = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}

/// Per-id summary: `id,total,passed,failed,worst_margin,worst_rel_margin`.
pub fn csv_summary(reports: &[InequalityReport]) -> String {
    let mut rows: BTreeMap<&str, (usize, usize, f64, f64)> = BTreeMap::new();
    for r in reports {
        let e = rows.entry(&r.id).or_insert((0, 0, f64::INFINITY, f64::INFINITY));
        e.0 += 1;
        if r.pass {
            e.1 += 1;
        }
        e.2 = e.2.min(r.margin);
        e.3 = e.3.min(r.rel_margin);
    }
    let mut s = String::from("id,total,passed,failed,worst_margin,worst_rel_margin\n");
    for (id, (total, passed, m, rm)) in rows {
        s.push_str(&format!("{id},{total},{passed},{},{m:e},{rm:e}\n", total - passed));
    }
    s
}

/// Order-independent aggregation: sorted by witness digest, then id, with
/// exact duplicates dropped.
pub fn merge_reports(batches: impl IntoIterator<Item = Vec<InequalityReport>>) -> Vec<InequalityReport> {
    let mut keyed: Vec<(String, String, InequalityReport)> = batches
        .into_iter()
        .flatten()
        .map(|r| (r.witness.digest(), r.to_json(), r))
        .collect();
    keyed.sort_by(|a, b| (&a.0, &a.2.id, &a.1).cmp(&(&b.0, &b.2.id, &b.1)));
    keyed.dedup_by(|a, b| a.1 == b.1);
    keyed.into_iter().map(|(_, _, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_threshold_is_scaled() {
        let cfg = VerifyConfig::default();
        let w = Witness::default();
        assert!(InequalityReport::new("x", 1.0 + 5e-10, 1.0, w.clone(), &cfg).pass);
        assert!(!InequalityReport::new("x", 1.0 + 2e-9, 1.0, w.clone(), &cfg).pass);
        assert!(InequalityReport::new("x", 1000.0 + 5e-7, 1000.0, w.clone(), &cfg).pass);
        assert!(!InequalityReport::new("x", f64::INFINITY, 1.0, w.clone(), &cfg).pass);
        let both = InequalityReport::new("x", f64::INFINITY, f64::INFINITY, w, &cfg);
        assert!(both.pass && both.margin == 0.0);
    }

    #[test]
    fn json_roundtrip_with_infinity() {
        let cfg = VerifyConfig::default();
        let w = Witness::new("op".into(), "st".into(), cfg.digest()).param("t", f64::INFINITY);
        let r = InequalityReport::new("x", f64::INFINITY, 2.0, w, &cfg).with_seed(7);
        let line = r.to_json();
        assert!(line.contains("\"lhs\":\"inf\""));
        let back = read_jsonl(std::io::Cursor::new(line)).unwrap();
        assert_eq!(back[0].witness, r.witness);
        assert!(back[0].lhs.is_infinite() && back[0].margin == f64::NEG_INFINITY);
    }

    #[test]
    fn merge_is_order_independent() {
        let cfg = VerifyConfig::default();
        let a = InequalityReport::new("a", 0.0, 1.0, Witness::new("1".into(), "".into(), "".into()), &cfg);
        let b = InequalityReport::new("b", 0.0, 1.0, Witness::new("2".into(), "".into(), "".into()), &cfg);
        let m1 = merge_reports([vec![a.clone()], vec![b.clone(), a.clone()]]);
        let m2 = merge_reports([vec![b, a]]);
        assert_eq!(m1, m2);
        assert_eq!(m1.len(), 2);
    }

    #[test]
    fn summary_counts() {
        let cfg = VerifyConfig::default();
        let w = Witness::default();
        let rs = vec![
            InequalityReport::new("a", 0.0, 1.0, w.clone(), &cfg),
            InequalityReport::new("a", 2.0, 1.0, w, &cfg),
        ];
        let csv = csv_summary(&rs);
        assert!(csv.lines().nth(1).unwrap().starts_with("a,2,1,1,"));
    }
}

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};
use specdens_core::verifiers::VerifyConfig;
use specdens_core::Flavor;

/// Anything that stops a run before it produces reports. Exit code 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(specdens_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<specdens_core::Error> for CliError {
    fn from(e: specdens_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

struct Entry {
    value: String,
    line: usize,
    column: usize,
}

/// `key = value` settings; `#` starts a comment. Keys are flag names, with
/// `_` and `-` interchangeable.
#[derive(Default)]
pub struct ConfigFile {
    name: String,
    entries: BTreeMap<String, Entry>,
}

fn canonical(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ConfigFile {
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> CliResult<Self> {
        match path {
            Some(p) => Self::parse(&read_file(p)?, &p.display().to_string(), allowed),
            None => Ok(Self::default()),
        }
    }

    pub fn parse(text: &str, name: &str, allowed: &[&str]) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("");
            if body.trim().is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                let column = body.len() - body.trim_start().len() + 1;
                return Err(CliError::Usage(format!("{name}:{line}:{column}: expected `key = value`")));
            };
            let key_col = key.len() - key.trim_start().len() + 1;
            let k = canonical(key);
            if !allowed.contains(&k.as_str()) {
                return Err(CliError::Usage(format!("{name}:{line}:{key_col}: unknown key {k:?}")));
            }
            let value_col = key.len() + 1 + value.len() - value.trim_start().len() + 1;
            if entries
                .insert(
                    k.clone(),
                    Entry {
                        value: value.trim().to_string(),
                        line,
                        column: value_col,
                    },
                )
                .is_some()
            {
                return Err(CliError::Usage(format!("{name}:{line}:{key_col}: duplicate key {k:?}")));
            }
        }
        Ok(ConfigFile {
            name: name.to_string(),
            entries,
        })
    }

    /// The flag value when given, otherwise the parsed config entry.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value
            .parse()
            .map(Some)
            .map_err(|err| CliError::Usage(format!("{}:{}:{}: {key}: {err}", self.name, e.line, e.column)))
    }
}

/// Where the operator or complex of a run comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSpec {
    Family(String),
    /// Input file, identified by the SHA-256 of its contents.
    File(String),
    Random { min_n: usize, max_n: usize },
}

/// Fully resolved settings of a run. Its digest is embedded in every
/// report; thread count and output paths are left out so that outputs do
/// not depend on them.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub source: SourceSpec,
    pub flavor: Option<String>,
    pub kind: Option<String>,
    pub checks: Vec<String>,
    pub seed: Option<u64>,
    pub trials: usize,
    pub omega: Option<Vec<String>>,
    pub kappa: f64,
    pub verify: VerifyConfig,
    pub quadrature_tol: f64,
    pub options: BTreeMap<String, serde_json::Value>,
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.verify.validate()?;
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(CliError::Usage(format!("kappa must lie in (0, 1), got {}", self.kappa)));
        }
        if self.trials > 0 && self.seed.is_none() {
            return Err(CliError::Usage("a seed is required when trials > 0".into()));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("run config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

pub fn parse_flavor(s: Option<&str>) -> CliResult<Option<Flavor>> {
    s.map(|v| {
        v.parse()
            .map_err(|_| CliError::Usage(format!("unknown flavor {v:?}; expected half-open or closed")))
    })
    .transpose()
}

pub fn file_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

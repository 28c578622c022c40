use std::path::Path;

use specdens_core::cohomology::{circle, parse_complex, torus, ComplexFile, PeriodicComplex};
use specdens_core::invariant::TorusSymbol;
use specdens_core::operators::{families, DEFAULT_KERNEL_THRESHOLD};
use specdens_core::SpectralOperator;

use crate::config::{file_digest, read_file, CliError, CliResult, SourceSpec};
use crate::Common;

pub enum ProfileSource {
    Operator(SpectralOperator),
    Symbol(TorusSymbol),
    /// Laplacian on `R^n`.
    Continuum(usize),
}

fn located(what: &str, e: specdens_core::Error) -> CliError {
    CliError::Usage(format!("{what}: {e}"))
}

enum Raw {
    Family(String),
    File(String, String),
}

fn raw_source(c: &Common) -> CliResult<Option<Raw>> {
    match (&c.family, &c.input) {
        (Some(_), Some(_)) => Err(CliError::Usage("--family and --input are mutually exclusive".into())),
        (Some(f), None) => Ok(Some(Raw::Family(f.split_whitespace().collect::<Vec<_>>().join(" ")))),
        (None, Some(p)) => Ok(Some(Raw::File(p.display().to_string(), read_file(p)?))),
        (None, None) => Ok(None),
    }
}

fn spec_of(raw: &Raw) -> SourceSpec {
    match raw {
        Raw::Family(f) => SourceSpec::Family(f.clone()),
        Raw::File(_, text) => SourceSpec::File(file_digest(text)),
    }
}

fn with_kappa(op: SpectralOperator, kappa: f64) -> CliResult<SpectralOperator> {
    if kappa == DEFAULT_KERNEL_THRESHOLD {
        return Ok(op);
    }
    Ok(SpectralOperator::from_form(&op.form(), op.space().clone(), kappa)?)
}

fn operator_file(path: &str, text: &str) -> CliResult<SpectralOperator> {
    let parsed = if Path::new(path).extension().is_some_and(|e| e == "json") {
        families::parse_dense_json(text)
    } else {
        families::parse_edge_list(text)
    };
    parsed.map_err(|e| located(path, e))
}

/// The operator of `--family` or `--input`, if any.
pub fn operator(c: &Common, kappa: f64) -> CliResult<Option<(SpectralOperator, SourceSpec)>> {
    let Some(raw) = raw_source(c)? else {
        return Ok(None);
    };
    let op = match &raw {
        Raw::Family(f) => families::family(f).map_err(|e| located("--family", e))?,
        Raw::File(path, text) => operator_file(path, text)?,
    };
    Ok(Some((with_kappa(op, kappa)?, spec_of(&raw))))
}

/// Operators, torus symbols (`lattice_laplacian d`, `discrete_bilaplacian d`,
/// `symbol <expression>`) and `rn_laplacian n`.
pub fn profile_source(c: &Common, kappa: f64) -> CliResult<(ProfileSource, SourceSpec)> {
    let raw = raw_source(c)?.ok_or_else(|| CliError::Usage("one of --family or --input is required".into()))?;
    let spec = spec_of(&raw);
    let Raw::Family(f) = &raw else {
        let (op, _) = operator(c, kappa)?.expect("input given");
        return Ok((ProfileSource::Operator(op), spec));
    };
    let (name, rest) = f.split_once(' ').unwrap_or((f.as_str(), ""));
    let source = match name {
        "lattice_laplacian" | "discrete_bilaplacian" => {
            ProfileSource::Symbol(TorusSymbol::builtin(f).map_err(|e| located("--family", e))?)
        }
        "symbol" => ProfileSource::Symbol(TorusSymbol::parse(rest, None).map_err(|e| located("--family", e))?),
        "rn_laplacian" => {
            let n = rest
                .trim_start_matches("n=")
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Usage("--family: expected rn_laplacian n=<dimension>".into()))?;
            ProfileSource::Continuum(n)
        }
        _ => {
            let (op, _) = operator(c, kappa)?.expect("family given");
            ProfileSource::Operator(op)
        }
    };
    Ok((source, spec))
}

/// Complexes: `line`, `grid d`, `circle n`, `torus n` or a complex file.
pub fn complex(c: &Common) -> CliResult<(ComplexFile, SourceSpec)> {
    let raw = raw_source(c)?.ok_or_else(|| CliError::Usage("one of --family or --input is required".into()))?;
    let spec = spec_of(&raw);
    let cx = match &raw {
        Raw::File(path, text) => parse_complex(text).map_err(|e| located(path, e))?,
        Raw::Family(f) => {
            let (name, rest) = f.split_once(' ').unwrap_or((f.as_str(), ""));
            let arg = || -> CliResult<usize> {
                rest.trim_start_matches("n=")
                    .trim_start_matches("d=")
                    .parse()
                    .map_err(|_| CliError::Usage(format!("--family: expected `{name} <integer>`")))
            };
            let built = match name {
                "line" => Ok(ComplexFile::Periodic(PeriodicComplex::line())),
                "grid" => PeriodicComplex::grid(arg()?).map(ComplexFile::Periodic),
                "circle" => circle(arg()?).map(ComplexFile::Finite),
                "torus" => torus(arg()?).map(ComplexFile::Finite),
                other => return Err(CliError::Usage(format!("--family: unknown complex {other:?}"))),
            };
            built.map_err(|e| located("--family", e))?
        }
    };
    Ok((cx, spec))
}

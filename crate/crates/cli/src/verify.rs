use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use specdens_core::operators::DEFAULT_KERNEL_THRESHOLD;
use specdens_core::profiles::decay::QUADRATURE_REL_TOL;
use specdens_core::verifiers::{merge_reports, read_jsonl, run_sweep, Check, InequalityReport, Instance, SweepSpec, VerifyConfig};
use specdens_core::{MeasureSpace, Result};

use crate::config::{parse_flavor, CliError, CliResult, RunConfig, SourceSpec};
use crate::input::operator;
use crate::output::{emit, jsonl, summarize};
use crate::Common;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Checks to run, comma separated or repeated; all when unset.
    #[arg(long, value_delimiter = ',')]
    check: Vec<String>,
    /// Fixed region for the Faber-Krahn checks: point labels and ranges,
    /// e.g. `0-7` or `0,2,5`.
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    kernel_tol: Option<f64>,
    #[arg(long)]
    support_tol: Option<f64>,
    /// Times sampled by the heat/spectral comparisons.
    #[arg(long)]
    heat_grid: Option<usize>,
    /// Smallest random graph size.
    #[arg(long)]
    min_n: Option<usize>,
    /// Largest random graph size.
    #[arg(long)]
    max_n: Option<usize>,
}

const KEYS: [&str; 7] = ["check", "omega", "kernel-tol", "support-tol", "heat-grid", "min-n", "max-n"];

/// Labels and inclusive ranges `a-b` of integer labels.
fn parse_omega(text: &str, space: &MeasureSpace) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for token in text.split([',', ' ']).filter(|t| !t.is_empty()) {
        let names: Vec<String> = match token.split_once('-') {
            Some((a, b)) => match (a.parse::<usize>(), b.parse::<usize>()) {
                (Ok(a), Ok(b)) if a <= b => (a..=b).map(|i| i.to_string()).collect(),
                _ => return Err(CliError::Usage(format!("--omega: invalid range {token:?}"))),
            },
            None => vec![token.to_string()],
        };
        for name in names {
            let x = space
                .index_of(&name)
                .ok_or_else(|| CliError::Usage(format!("--omega: unknown point {name:?}")))?;
            out.push(x);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("--omega: empty region".into()));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn parse_checks(names: &[String]) -> CliResult<Vec<Check>> {
    let names: Vec<&str> = names.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() || names == ["all"] {
        return Ok(Check::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| n.parse::<Check>().map_err(|e| CliError::Usage(format!("--check: {e}"))))
        .collect()
}

pub fn run(args: &VerifyArgs) -> CliResult<bool> {
    let (c, file) = args.common.resolve(&KEYS)?;
    let check_flag = (!args.check.is_empty()).then(|| args.check.join(","));
    let checks = parse_checks(&[file.pick(check_flag, "check")?.unwrap_or_default()])?;
    let omega_text = file.pick(args.omega.clone(), "omega")?;
    let defaults = VerifyConfig::default();
    let verify = VerifyConfig {
        abs_tol: c.tol.unwrap_or(defaults.abs_tol),
        kernel_tol: file.pick(args.kernel_tol, "kernel-tol")?.unwrap_or(defaults.kernel_tol),
        support_tol: file.pick(args.support_tol, "support-tol")?.unwrap_or(defaults.support_tol),
        heat_grid: file.pick(args.heat_grid, "heat-grid")?.unwrap_or(defaults.heat_grid),
    };
    let kappa = c.kappa.unwrap_or(DEFAULT_KERNEL_THRESHOLD);
    let flavor = parse_flavor(c.flavor.as_deref())?;
    let seed = c.seed.unwrap_or(0);
    let fixed = operator(&c, kappa)?;

    let (source, region, trials) = match &fixed {
        Some((op, spec)) => {
            let region = omega_text.as_deref().map(|t| parse_omega(t, op.space())).transpose()?;
            (spec.clone(), region, c.trials.unwrap_or(1))
        }
        None => {
            if omega_text.is_some() || flavor.is_some() {
                return Err(CliError::Usage(
                    "--omega and --flavor need a fixed operator (--family or --input)".into(),
                ));
            }
            let min_n = file.pick(args.min_n, "min-n")?.unwrap_or(4);
            let max_n = file.pick(args.max_n, "max-n")?.unwrap_or(40);
            (SourceSpec::Random { min_n, max_n }, None, c.trials.unwrap_or(100))
        }
    };
    let run = RunConfig {
        command: "verify".into(),
        source: source.clone(),
        flavor: flavor.map(|f| f.to_string()),
        kind: None,
        checks: checks.iter().map(|c| c.name().to_string()).collect(),
        seed: Some(seed),
        trials,
        omega: region
            .as_ref()
            .zip(fixed.as_ref())
            .map(|(r, (op, _))| r.iter().map(|&x| op.space().points()[x].clone()).collect()),
        kappa,
        verify: verify.clone(),
        quadrature_tol: QUADRATURE_REL_TOL,
        options: BTreeMap::new(),
    };
    run.validate()?;

    let mut reports = match (&fixed, source) {
        (Some((op, _)), _) => {
            let batches: Vec<Result<Vec<InequalityReport>>> = (0..trials as u64)
                .into_par_iter()
                .map(|trial| {
                    Instance::for_operator(op.clone(), seed, trial, flavor, region.as_deref())?.run(&checks, &verify)
                })
                .collect();
            let mut out = Vec::new();
            for b in batches {
                out.extend(b?.into_iter().map(|r| r.with_seed(seed)));
            }
            out
        }
        (None, SourceSpec::Random { min_n, max_n }) => {
            let spec = SweepSpec {
                checks,
                trials,
                seed,
                min_n,
                max_n,
            };
            run_sweep(&spec, &verify)?
        }
        (None, _) => unreachable!("sources without an operator are random"),
    };
    let digest = run.digest();
    for r in &mut reports {
        r.witness.config = digest.clone();
    }
    emit(c.out.as_deref(), &jsonl(&reports))?;
    Ok(summarize(&reports))
}

#[derive(Args, Debug)]
pub struct MergeArgs {
    /// JSON-lines report files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Output file; stdout when unset.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn merge(args: &MergeArgs) -> CliResult<bool> {
    let mut batches = Vec::new();
    for path in &args.files {
        let f = File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let reports =
            read_jsonl(BufReader::new(f)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        batches.push(reports);
    }
    let merged = merge_reports(batches);
    emit(args.out.as_deref(), &jsonl(&merged))?;
    Ok(summarize(&merged))
}

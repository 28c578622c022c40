use std::collections::BTreeMap;

use clap::Args;
use serde_json::{json, Value};
use specdens_core::cohomology::{
    gap_below, sobolev_exponent, verify_cochain_sobolev, verify_periodic_cochain_sobolev, ComplexFile,
    PeriodicComplex, SimplicialComplex,
};
use specdens_core::invariant::{fit_grid, ns_exponent_fit};
use specdens_core::operators::DEFAULT_KERNEL_THRESHOLD;
use specdens_core::profiles::decay::QUADRATURE_REL_TOL;
use specdens_core::profiles::io::to_json;
use specdens_core::verifiers::{dominating_constant, Context, InequalityReport, VerifyConfig};
use specdens_core::{Flavor, MonotoneProfile};

use crate::config::{CliError, CliResult, RunConfig};
use crate::input::complex;
use crate::output::{emit, log_grid};
use crate::Common;

#[derive(Args, Debug)]
pub struct CohomologyArgs {
    #[command(flatten)]
    common: Common,
    /// Cochain degree `k` of `d_k^* d_k`.
    #[arg(long)]
    degree: Option<usize>,
    /// Floquet grid points per axis; by default 4096, 1024 and 128 in
    /// dimensions 1, 2 and 3 or more.
    #[arg(long)]
    resolution: Option<usize>,
    /// Exponent fit window `lo,hi`.
    #[arg(long)]
    window: Option<String>,
    /// Lambda samples of the profile table.
    #[arg(long)]
    points: Option<usize>,
    /// Quotient size `n` for the cochain Sobolev check of periodic complexes.
    #[arg(long)]
    truncation: Option<usize>,
    /// Run the cochain Sobolev check with this profile exponent `alpha`.
    #[arg(long)]
    sobolev_alpha: Option<f64>,
}

const KEYS: [&str; 6] = ["degree", "resolution", "window", "points", "truncation", "sobolev-alpha"];

fn parse_window(text: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Usage(format!("--window: expected `lo,hi`, got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn profile_json(p: &MonotoneProfile) -> Value {
    serde_json::from_str(&to_json(p)).expect("profile json round-trips")
}

/// Fitted exponent `a` of `F ~ lambda^a` gives `alpha = 2 a`, rounded to two
/// decimals for the verdict.
fn exponent_summary(f: &MonotoneProfile, window: (f64, f64), out: &mut BTreeMap<String, Value>) {
    match ns_exponent_fit(f, window) {
        Ok(fit) => {
            let alpha = 2.0 * fit.exponent;
            let verdict = sobolev_exponent((alpha * 100.0).round() / 100.0);
            out.insert("fit".into(), json!(fit));
            out.insert("alpha".into(), json!(alpha));
            out.insert("sobolev".into(), json!({ "verdict": verdict.to_string(), "p": verdict.p() }));
        }
        Err(e) => {
            out.insert("fit".into(), Value::Null);
            out.insert("fit_unavailable".into(), json!(e.to_string()));
        }
    }
}

struct Sobolev {
    alpha: f64,
    trials: usize,
    seed: u64,
}

fn cochain_constant(cx: &SimplicialComplex, k: usize, alpha: f64, cfg: &VerifyConfig) -> CliResult<f64> {
    let op = cx.up_laplacian(k)?;
    let ctx = Context::new(&op, cfg);
    Ok(dominating_constant(ctx.ultra(Flavor::HalfOpen)?, alpha / 2.0)?)
}

pub fn run(args: &CohomologyArgs) -> CliResult<bool> {
    let (c, file) = args.common.resolve(&KEYS)?;
    let k = file.pick(args.degree, "degree")?.unwrap_or(0);
    let window = match file.pick(args.window.clone(), "window")? {
        Some(w) => parse_window(&w)?,
        None => (1e-3, 1e-1),
    };
    let points = file.pick(args.points, "points")?.unwrap_or(128);
    if points < 2 {
        return Err(CliError::Usage("points must be at least 2".into()));
    }
    let truncation = file.pick(args.truncation, "truncation")?;
    let sobolev_alpha = file.pick(args.sobolev_alpha, "sobolev-alpha")?;
    let kappa = c.kappa.unwrap_or(DEFAULT_KERNEL_THRESHOLD);
    if kappa != DEFAULT_KERNEL_THRESHOLD {
        return Err(CliError::Usage("--kappa is fixed for complexes".into()));
    }
    let (cx, spec) = complex(&c)?;
    let resolution = match &cx {
        ComplexFile::Periodic(p) => Some(file.pick(args.resolution, "resolution")?.unwrap_or(match p.lattice_dim() {
            1 => 4096,
            2 => 1024,
            _ => 128,
        })),
        ComplexFile::Finite(_) => None,
    };
    let truncation = match (&cx, sobolev_alpha) {
        (ComplexFile::Periodic(_), Some(_)) => Some(truncation.unwrap_or(16)),
        _ => truncation,
    };
    let verify = VerifyConfig {
        abs_tol: c.tol.unwrap_or(VerifyConfig::default().abs_tol),
        ..VerifyConfig::default()
    };
    let sobolev = sobolev_alpha.map(|alpha| Sobolev {
        alpha,
        trials: c.trials.unwrap_or(20),
        seed: c.seed.unwrap_or(0),
    });

    let mut options = BTreeMap::new();
    options.insert("degree".into(), json!(k));
    options.insert("window".into(), json!(window));
    options.insert("points".into(), json!(points));
    options.insert("resolution".into(), json!(resolution));
    options.insert("truncation".into(), json!(truncation));
    options.insert("sobolev_alpha".into(), json!(sobolev_alpha));
    let run = RunConfig {
        command: "cohomology".into(),
        source: spec,
        flavor: Some(Flavor::HalfOpen.to_string()),
        kind: Some("density".into()),
        checks: Vec::new(),
        seed: sobolev.as_ref().map(|s| s.seed),
        trials: sobolev.as_ref().map_or(0, |s| s.trials),
        omega: None,
        kappa,
        verify: verify.clone(),
        quadrature_tol: QUADRATURE_REL_TOL,
        options,
    };
    run.validate()?;
    let digest = run.digest();

    let mut out = BTreeMap::new();
    out.insert("config_digest".into(), json!(digest));
    out.insert("degree".into(), json!(k));
    let mut reports: Vec<InequalityReport> = Vec::new();
    match &cx {
        ComplexFile::Periodic(p) => {
            periodic(p, k, resolution.expect("set for periodic complexes"), window, points, &mut out)?;
            if let Some(s) = &sobolev {
                let n = truncation.expect("set with sobolev_alpha");
                if sobolev_exponent(s.alpha).p().is_some() {
                    let constant = cochain_constant(&p.truncation(n)?, k, s.alpha, &verify)?;
                    reports.push(verify_periodic_cochain_sobolev(
                        p, n, k, constant, s.alpha, s.trials, s.seed, &verify,
                    )?);
                }
                out.insert("cochain_sobolev".into(), json!(sobolev_exponent(s.alpha).to_string()));
            }
        }
        ComplexFile::Finite(cx) => {
            finite(cx, k, window, &mut out)?;
            if let Some(s) = &sobolev {
                if sobolev_exponent(s.alpha).p().is_some() {
                    let constant = cochain_constant(cx, k, s.alpha, &verify)?;
                    reports.push(verify_cochain_sobolev(cx, k, constant, s.alpha, s.trials, s.seed, &verify)?);
                }
                out.insert("cochain_sobolev".into(), json!(sobolev_exponent(s.alpha).to_string()));
            }
        }
    }
    for r in &mut reports {
        r.witness.config = digest.clone();
    }
    let pass = reports.iter().all(|r| r.pass);
    out.insert("reports".into(), json!(reports));
    let text = serde_json::to_string_pretty(&out).expect("json") + "\n";
    emit(c.out.as_deref(), &text)?;
    Ok(pass)
}

fn periodic(
    p: &PeriodicComplex,
    k: usize,
    resolution: usize,
    window: (f64, f64),
    points: usize,
    out: &mut BTreeMap<String, Value>,
) -> CliResult<()> {
    let top = p.laplacian_bound(k)?.max(1.0);
    let mut grid = log_grid(1e-4 * top, top, points);
    grid.extend(fit_grid(window));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let gp = p.floquet_density_profile(k, resolution, &grid, None)?;
    out.insert(
        "complex".into(),
        json!({
            "kind": "periodic",
            "lattice_dim": p.lattice_dim(),
            "cells": (0..=p.dim()).map(|j| p.count(j)).collect::<Vec<_>>(),
        }),
    );
    out.insert("resolution".into(), json!(gp.resolution));
    out.insert("error_estimate".into(), json!(gp.error_estimate));
    out.insert("gap_below".into(), json!(gap_below(&gp, &grid)?));
    exponent_summary(&gp.profile, window, out);
    out.insert("profile".into(), profile_json(&gp.profile));
    Ok(())
}

fn finite(cx: &SimplicialComplex, k: usize, window: (f64, f64), out: &mut BTreeMap<String, Value>) -> CliResult<()> {
    let betti: Vec<usize> = (0..=cx.dim()).map(|j| cx.harmonic_dim(j)).collect::<Result<_, _>>()?;
    out.insert(
        "complex".into(),
        json!({
            "kind": "finite",
            "cells": (0..=cx.dim()).map(|j| cx.count(j)).collect::<Vec<_>>(),
            "betti": betti,
            "euler_characteristic": cx.euler_characteristic(),
        }),
    );
    let f = cx.spectral_profile(k, 1.0)?;
    exponent_summary(&f, window, out);
    out.insert("profile".into(), profile_json(&f));
    Ok(())
}

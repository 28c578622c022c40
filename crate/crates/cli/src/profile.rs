use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;

use clap::Args;
use serde_json::{json, Value};
use specdens_core::invariant::{rn_laplacian_profile, symbol_density_profile};
use specdens_core::operators::{decay_profile, heat_decay, DEFAULT_KERNEL_THRESHOLD};
use specdens_core::profiles::decay::QUADRATURE_REL_TOL;
use specdens_core::profiles::io::{decay_to_csv, to_csv, to_json};
use specdens_core::profiles::{g_transform, h_of, laplace_stieltjes, m_transform, n_of, TabulatedDecay};
use specdens_core::verifiers::VerifyConfig;
use specdens_core::{DecayProfile, Flavor, MonotoneProfile, ProfileKind};

use crate::config::{parse_flavor, CliError, CliResult, RunConfig};
use crate::input::{profile_source, ProfileSource};
use crate::output::{emit, log_grid};
use crate::Common;

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[command(flatten)]
    common: Common,
    /// `ultra` for the operator norm `L1 -> Linf`, `density` for the largest
    /// pointwise density.
    #[arg(long)]
    kind: Option<String>,
    /// Grid points per axis for torus symbols.
    #[arg(long)]
    resolution: Option<usize>,
    /// Rows of the lambda and time tables.
    #[arg(long)]
    points: Option<usize>,
    /// Rows of the H and N tables; omitted when unset.
    #[arg(long)]
    samples: Option<usize>,
}

const KEYS: [&str; 4] = ["kind", "resolution", "points", "samples"];

struct Tables {
    f: MonotoneProfile,
    g: Option<MonotoneProfile>,
    l: Option<DecayProfile>,
    m: Option<DecayProfile>,
    lambda_grid: Vec<f64>,
    info: BTreeMap<String, Value>,
}

impl Tables {
    fn new(f: MonotoneProfile, lambda_grid: Vec<f64>) -> Self {
        Tables {
            f,
            g: None,
            l: None,
            m: None,
            lambda_grid,
            info: BTreeMap::new(),
        }
    }

    /// Keeps a transform, or records why it does not exist.
    fn keep<T>(&mut self, name: &str, r: specdens_core::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.info.insert(format!("{name}_unavailable"), Value::String(e.to_string()));
                None
            }
        }
    }
}

fn times(points: usize) -> Vec<f64> {
    log_grid(1e-3, 1e3, points)
}

fn operator_tables(op: &specdens_core::SpectralOperator, kind: &ProfileKind, flavor: Flavor) -> CliResult<Tables> {
    let f = decay_profile(op, kind, flavor)?;
    let mut t = Tables::new(f, Vec::new());
    t.g = t.keep("G", g_transform(&t.f));
    let l = heat_decay(op, kind)?;
    t.m = t.keep("M", m_transform(&l));
    t.l = Some(l);
    Ok(t)
}

fn symbol_tables(
    sym: &specdens_core::invariant::TorusSymbol,
    resolution: usize,
    points: usize,
) -> CliResult<Tables> {
    let bound = sym.bound();
    let grid = log_grid(1e-4 * bound, bound, points);
    let gp = symbol_density_profile(sym, &grid, resolution, None)?;
    let mut t = Tables::new(gp.profile, grid);
    t.info.insert("error_estimate".into(), json!(gp.error_estimate));
    t.info.insert("resolution".into(), json!(gp.resolution));
    t.g = t.keep("G", g_transform(&t.f));
    let samples: specdens_core::Result<Vec<(f64, f64)>> = times(points)
        .into_iter()
        .map(|s| laplace_stieltjes(&t.f, s).map(|v| (s, v)))
        .collect();
    let l = samples.and_then(|s| TabulatedDecay::new(s, None)).map(DecayProfile::Tabulated);
    t.l = t.keep("L", l);
    if let Some(l) = &t.l {
        let m = m_transform(l);
        t.m = t.keep("M", m);
    }
    Ok(t)
}

fn continuum_tables(n: usize, points: usize) -> CliResult<Tables> {
    let f = rn_laplacian_profile(n)?;
    let alpha = 0.5 * n as f64;
    let mut t = Tables::new(f, log_grid(1e-3, 1e3, points));
    t.g = t.keep("G", g_transform(&t.f));
    let l = DecayProfile::power_law(laplace_stieltjes(&t.f, 1.0)?, alpha)?;
    t.m = t.keep("M", m_transform(&l));
    t.l = Some(l);
    if let specdens_core::profiles::Representation::Power { coefficient, exponent } = t.f.representation() {
        t.info.insert("coefficient".into(), json!(coefficient));
        t.info.insert("exponent".into(), json!(exponent));
    }
    Ok(t)
}

fn decay_csv(d: &DecayProfile, points: usize) -> CliResult<String> {
    Ok(decay_to_csv(&d.tabulate(&times(points), None)?))
}

fn extended_csv(header: &str, rows: impl Iterator<Item = (f64, specdens_core::Result<specdens_core::Extended>)>) -> CliResult<String> {
    let mut out = format!("{header},value\n");
    for (y, v) in rows {
        writeln!(out, "{y},{}", v?).unwrap();
    }
    Ok(out)
}

pub fn run(args: &ProfileArgs) -> CliResult<bool> {
    let (c, file) = args.common.resolve(&KEYS)?;
    let kind_name = file.pick(args.kind.clone(), "kind")?.unwrap_or_else(|| "ultra".into());
    let kind = match kind_name.as_str() {
        "ultra" => ProfileKind::Ultra,
        "density" => ProfileKind::Density,
        other => return Err(CliError::Usage(format!("unknown kind {other:?}; expected ultra or density"))),
    };
    let flavor = parse_flavor(c.flavor.as_deref())?.unwrap_or(Flavor::HalfOpen);
    let kappa = c.kappa.unwrap_or(DEFAULT_KERNEL_THRESHOLD);
    let points = file.pick(args.points, "points")?.unwrap_or(128);
    let samples = file.pick(args.samples, "samples")?;
    if points < 2 {
        return Err(CliError::Usage("points must be at least 2".into()));
    }
    let (source, spec) = profile_source(&c, kappa)?;
    let resolution = match &source {
        ProfileSource::Symbol(s) => Some(file.pick(args.resolution, "resolution")?.unwrap_or(match s.dim() {
            1 => 4096,
            2 => 1024,
            _ => 128,
        })),
        _ => None,
    };

    let mut options = BTreeMap::new();
    options.insert("points".into(), json!(points));
    options.insert("samples".into(), json!(samples));
    options.insert("resolution".into(), json!(resolution));
    let run = RunConfig {
        command: "profile".into(),
        source: spec,
        flavor: Some(flavor.to_string()),
        kind: Some(kind_name),
        checks: Vec::new(),
        seed: c.seed,
        trials: 0,
        omega: None,
        kappa,
        verify: VerifyConfig {
            abs_tol: c.tol.unwrap_or(VerifyConfig::default().abs_tol),
            ..VerifyConfig::default()
        },
        quadrature_tol: QUADRATURE_REL_TOL,
        options,
    };
    run.validate()?;

    let tables = match &source {
        ProfileSource::Operator(op) => operator_tables(op, &kind, flavor)?,
        ProfileSource::Symbol(sym) => symbol_tables(sym, resolution.expect("set for symbols"), points)?,
        ProfileSource::Continuum(n) => continuum_tables(*n, points)?,
    };
    let f_csv = to_csv(&tables.f, &tables.lambda_grid);
    let Some(dir) = c.out.as_deref() else {
        emit(None, &f_csv)?;
        return Ok(true);
    };
    fs::create_dir_all(dir)?;
    let write = |name: &str, text: String| emit(Some(&dir.join(name)), &text);
    write("F.csv", f_csv.clone())?;
    write("F.json", to_json(&tables.f) + "\n")?;
    if let Some(g) = &tables.g {
        write("G.csv", to_csv(g, &tables.lambda_grid))?;
        write("G.json", to_json(g) + "\n")?;
    }
    if let Some(l) = &tables.l {
        write("L.csv", decay_csv(l, points)?)?;
    }
    if let Some(m) = &tables.m {
        write("M.csv", decay_csv(m, points)?)?;
    }
    if let Some(s) = samples {
        let ys = log_grid(1e-3, 1e3, s.max(2));
        if let Some(g) = &tables.g {
            write("H.csv", extended_csv("y", ys.iter().map(|&y| (y, Ok(h_of(g, y)))))?)?;
        }
        if let Some(m) = &tables.m {
            write("N.csv", extended_csv("y", ys.iter().map(|&y| (y, n_of(m, y))))?)?;
        }
    }
    let summary = json!({
        "config": run,
        "config_digest": run.digest(),
        "info": tables.info,
    });
    write("run.json", serde_json::to_string_pretty(&summary).expect("json") + "\n")?;
    Ok(true)
}

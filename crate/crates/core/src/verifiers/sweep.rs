use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::context::Context;
use super::functional::PureInequality;
use super::report::{InequalityReport, VerifyConfig};
use crate::error::{Error, Result};
use crate::operators::{dirichlet_modes, families, DensityState, DirichletSpace, Flavor, SpectralOperator};

/// A family of checks run by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    HSobolev,
    NSobolev,
    RhoSobolev,
    RhoMoserIntegral,
    RhoMoserPartition,
    FaberKrahnMixed,
    DirichletFk,
    PureMoserNash,
    HeatSpectral,
    SobolevFk,
    IntegralVsDiscrete,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::HSobolev,
        Check::NSobolev,
        Check::RhoSobolev,
        Check::RhoMoserIntegral,
        Check::RhoMoserPartition,
        Check::FaberKrahnMixed,
        Check::DirichletFk,
        Check::PureMoserNash,
        Check::HeatSpectral,
        Check::SobolevFk,
        Check::IntegralVsDiscrete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::HSobolev => "h-sobolev",
            Check::NSobolev => "n-sobolev",
            Check::RhoSobolev => "rho-sobolev",
            Check::RhoMoserIntegral => "rho-moser-integral",
            Check::RhoMoserPartition => "rho-moser-partition",
            Check::FaberKrahnMixed => "fk-mixed",
            Check::DirichletFk => "fk-dirichlet",
            Check::PureMoserNash => "moser-nash",
            Check::HeatSpectral => "heat-spectral",
            Check::SobolevFk => "sobolev-fk",
            Check::IntegralVsDiscrete => "integral-vs-discrete",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse {
                line: 1,
                column: 1,
                message: format!(
                    "unknown check {s:?}; expected one of {}",
                    Check::ALL.map(Check::name).join(", ")
                ),
            })
    }
}

/// Parameters of a randomized sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub checks: Vec<Check>,
    pub trials: usize,
    pub seed: u64,
    pub min_n: usize,
    pub max_n: usize,
}

impl SweepSpec {
    pub fn new(checks: Vec<Check>, trials: usize, seed: u64) -> Self {
        SweepSpec {
            checks,
            trials,
            seed,
            min_n: 4,
            max_n: 40,
        }
    }
}

/// One random instance: an operator with states adapted to every check.
#[derive(Clone, Debug)]
pub struct Instance {
    pub trial: u64,
    pub flavor: Flavor,
    pub op: SpectralOperator,
    pub f: DVector<f64>,
    pub rho: DensityState,
    pub region: Vec<usize>,
    pub parts: Vec<Vec<usize>>,
    /// Supported in `region`; kernel-free under the `]0, lambda]` flavor.
    pub local_state: Option<DensityState>,
    pub local_vector: Option<DVector<f64>>,
    /// Supported in `region` and kernel-free.
    pub free_state: Option<DensityState>,
}

fn gaussian<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random mixture of combinations of the columns of `modes`.
fn random_mixture<R: Rng>(rng: &mut R, op: &SpectralOperator, modes: &DMatrix<f64>) -> Option<DensityState> {
    let k = modes.ncols();
    if k == 0 {
        return None;
    }
    let rank = rng.random_range(1..=k.min(3));
    let parts: Vec<(f64, DVector<f64>)> = (0..rank)
        .map(|_| {
            let use_modes = rng.random_range(1..=k.min(4));
            let c = gaussian(rng, use_modes);
            let f = modes.columns(0, use_modes) * c;
            (rng.random_range(0.1..1.0), f)
        })
        .collect();
    DensityState::mixture(op.space().clone(), &parts).ok()
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

impl Instance {
    /// Deterministic instance for `(seed, trial)`, independent of any other
    /// trial.
    pub fn generate(seed: u64, trial: u64, min_n: usize, max_n: usize) -> Result<Instance> {
        let mut rng = trial_rng(seed, trial);
        let n = rng.random_range(min_n..=max_n);
        let p = rng.random_range(0.05..0.6);
        let weighted = rng.random::<bool>();
        let op = families::random_graph(&mut rng, n, p, weighted)?;
        Self::populate(rng, op, trial, None, None)
    }

    /// Random states on a given operator. The flavor alternates with the
    /// trial unless given; the region is random unless given.
    pub fn for_operator(
        op: SpectralOperator,
        seed: u64,
        trial: u64,
        flavor: Option<Flavor>,
        region: Option<&[usize]>,
    ) -> Result<Instance> {
        Self::populate(trial_rng(seed, trial), op, trial, flavor, region)
    }

    fn populate(
        mut rng: ChaCha8Rng,
        op: SpectralOperator,
        trial: u64,
        flavor: Option<Flavor>,
        fixed_region: Option<&[usize]>,
    ) -> Result<Instance> {
        let n = op.space().len();
        let h = op.space().fiber_dim();
        let flavor = flavor.unwrap_or(if trial % 2 == 0 { Flavor::HalfOpen } else { Flavor::Closed });

        let mut f = gaussian(&mut rng, n * h);
        if rng.random_range(0..4) == 0 {
            for v in f.iter_mut() {
                if rng.random::<bool>() {
                    *v = 0.0;
                }
            }
            f[rng.random_range(0..n * h)] += 1.0;
        }

        let rho = if rng.random_range(0..4) == 0 {
            let lambda = op.eigenvalues()[rng.random_range(0..n * h)];
            DensityState::from_kernel(&op.projector(Flavor::Closed, lambda))?
        } else {
            let rank = rng.random_range(1..=n.min(4));
            let parts: Vec<(f64, DVector<f64>)> = (0..rank)
                .map(|_| (rng.random_range(0.05..1.0), gaussian(&mut rng, n * h)))
                .collect();
            DensityState::mixture(op.space().clone(), &parts)?
        };

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let size = rng.random_range(1..=n / 2 + 1);
        let mut region = order[..size].to_vec();
        region.sort_unstable();
        if let Some(r) = fixed_region {
            region = op.space().check_region(r)?;
        }

        order.shuffle(&mut rng);
        let k = rng.random_range(1..=n);
        let mut parts = vec![Vec::new(); k];
        for (i, &x) in order.iter().enumerate() {
            let label = if i < k { i } else { rng.random_range(0..k) };
            parts[label].push(x);
        }
        parts.iter_mut().for_each(|p| p.sort_unstable());

        let space = match flavor {
            Flavor::HalfOpen => DirichletSpace::KernelFree,
            Flavor::Closed => DirichletSpace::Supported,
        };
        let (_, local_modes) = dirichlet_modes(&op, &region, space)?;
        let local_state = random_mixture(&mut rng, &op, &local_modes);
        let local_vector = (local_modes.ncols() > 0).then(|| {
            let c = gaussian(&mut rng, local_modes.ncols());
            &local_modes * c
        });
        let free_state = if space == DirichletSpace::KernelFree {
            random_mixture(&mut rng, &op, &local_modes)
        } else {
            let (_, free_modes) = dirichlet_modes(&op, &region, DirichletSpace::KernelFree)?;
            random_mixture(&mut rng, &op, &free_modes)
        };

        Ok(Instance {
            trial,
            flavor,
            op,
            f,
            rho,
            region,
            parts,
            local_state,
            local_vector,
            free_state,
        })
    }

    /// Runs the requested checks. Inputs a check cannot use (a vector lying
    /// in the kernel, a region without admissible states) skip that check.
    pub fn run(&self, checks: &[Check], cfg: &VerifyConfig) -> Result<Vec<InequalityReport>> {
        let ctx = Context::new(&self.op, cfg);
        let mut out = Vec::new();
        let kernel_free_f = match ctx.kernel_free_vector(&self.f) {
            Ok((g, _)) => Some(g),
            Err(Error::StateInKernel) => None,
            Err(e) => return Err(e),
        };
        let half_open_rho = self.rho.project_out_kernel(&self.op).is_ok();
        let rho_usable = self.flavor == Flavor::Closed || half_open_rho;
        for &check in checks {
            match check {
                Check::HSobolev => {
                    if kernel_free_f.is_some() {
                        out.push(ctx.h_sobolev(&self.f)?);
                    }
                }
                Check::NSobolev => {
                    if kernel_free_f.is_some() {
                        out.push(ctx.n_sobolev(&self.f)?);
                    }
                }
                Check::RhoSobolev => {
                    if half_open_rho {
                        out.push(ctx.rho_sobolev(&self.rho)?);
                    }
                }
                Check::RhoMoserIntegral => {
                    if rho_usable {
                        out.push(ctx.rho_moser_integral(&self.rho, self.flavor)?);
                    }
                }
                Check::RhoMoserPartition => {
                    if rho_usable {
                        out.push(ctx.rho_moser_partition(&self.rho, &self.parts, self.flavor)?);
                    }
                }
                Check::FaberKrahnMixed => {
                    if let Some(state) = &self.local_state {
                        out.extend(ctx.fk_mixed_state(state, &self.region, self.flavor)?);
                    }
                }
                Check::DirichletFk => out.extend(ctx.dirichlet_fk(&self.region, 0.5, self.flavor)?),
                Check::PureMoserNash => {
                    let f = match self.flavor {
                        Flavor::HalfOpen => kernel_free_f.as_ref(),
                        Flavor::Closed => Some(&self.f),
                    };
                    if let Some(f) = f {
                        for which in [PureInequality::MoserL2, PureInequality::MoserL1, PureInequality::Nash] {
                            out.push(ctx.pure_moser_nash(f, &which, self.flavor)?);
                        }
                    }
                    if let Some(v) = &self.local_vector {
                        let which = PureInequality::FaberKrahn(self.region.clone());
                        out.push(ctx.pure_moser_nash(v, &which, self.flavor)?);
                    }
                }
                Check::HeatSpectral => out.extend(ctx.heat_spectral()?),
                Check::SobolevFk => match &self.free_state {
                    Some(state) => out.extend(ctx.sobolev_to_fk(state, &self.region)?),
                    None => out.extend(ctx.dirichlet_sobolev_fk(&self.region)?),
                },
                Check::IntegralVsDiscrete => {
                    if rho_usable {
                        out.push(ctx.integral_dominates_discrete(&self.rho, &self.parts, self.flavor)?);
                    }
                }
            }
        }
        for r in &mut out {
            r.witness.set("trial", self.trial as f64);
        }
        Ok(out)
    }
}

/// Runs `spec.trials` independent instances in parallel. The output order
/// is by trial, then by check, whatever the thread count.
pub fn run_sweep(spec: &SweepSpec, cfg: &VerifyConfig) -> Result<Vec<InequalityReport>> {
    cfg.validate()?;
    if spec.min_n < 2 || spec.min_n > spec.max_n {
        return Err(Error::InvalidSpace(format!(
            "invalid size range {}..={}",
            spec.min_n, spec.max_n
        )));
    }
    let batches: Vec<Result<Vec<InequalityReport>>> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let inst = Instance::generate(spec.seed, trial, spec.min_n, spec.max_n)?;
            inst.run(&spec.checks, cfg)
        })
        .collect();
    let mut out = Vec::new();
    for b in batches {
        out.extend(b?.into_iter().map(|r| r.with_seed(spec.seed)));
    }
    Ok(out)
}

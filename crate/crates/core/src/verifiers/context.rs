use std::cell::OnceCell;

use nalgebra::DVector;

use super::report::{VerifyConfig, Witness};
use crate::error::{Error, Result};
use crate::operators::{
    decay_profile, heat_decay, pointwise_profiles, DensityState, Flavor, ProfileKind, SpectralOperator,
};
use crate::profiles::{g_transform, m_transform, DecayProfile, MonotoneProfile};

fn cached<'c, T>(cell: &'c OnceCell<T>, init: impl FnOnce() -> Result<T>) -> Result<&'c T> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = init()?;
    Ok(cell.get_or_init(|| v))
}

fn slot(flavor: Flavor) -> usize {
    match flavor {
        Flavor::HalfOpen => 0,
        Flavor::Closed => 1,
    }
}

/// An operator with lazily computed profiles, shared by every verifier run
/// on it.
pub struct Context<'a> {
    pub(crate) op: &'a SpectralOperator,
    pub(crate) cfg: VerifyConfig,
    config_digest: String,
    op_digest: OnceCell<String>,
    ultra: [OnceCell<MonotoneProfile>; 2],
    density: [OnceCell<MonotoneProfile>; 2],
    pointwise: [OnceCell<Vec<MonotoneProfile>>; 2],
    g_ultra: OnceCell<MonotoneProfile>,
    g_density: OnceCell<MonotoneProfile>,
    l_ultra: OnceCell<DecayProfile>,
    m_ultra: OnceCell<DecayProfile>,
}

impl<'a> Context<'a> {
    pub fn new(op: &'a SpectralOperator, cfg: &VerifyConfig) -> Self {
        Context {
            op,
            config_digest: cfg.digest(),
            cfg: cfg.clone(),
            op_digest: OnceCell::new(),
            ultra: Default::default(),
            density: Default::default(),
            pointwise: Default::default(),
            g_ultra: OnceCell::new(),
            g_density: OnceCell::new(),
            l_ultra: OnceCell::new(),
            m_ultra: OnceCell::new(),
        }
    }

    pub fn operator(&self) -> &SpectralOperator {
        self.op
    }

    pub fn config(&self) -> &VerifyConfig {
        &self.cfg
    }

    pub(crate) fn witness(&self, state: String) -> Witness {
        let op = self.op_digest.get_or_init(|| self.op.digest()).clone();
        Witness::new(op, state, self.config_digest.clone())
    }

    pub fn ultra(&self, flavor: Flavor) -> Result<&MonotoneProfile> {
        cached(&self.ultra[slot(flavor)], || decay_profile(self.op, &ProfileKind::Ultra, flavor))
    }

    pub fn density(&self, flavor: Flavor) -> Result<&MonotoneProfile> {
        cached(&self.density[slot(flavor)], || decay_profile(self.op, &ProfileKind::Density, flavor))
    }

    pub fn pointwise(&self, flavor: Flavor) -> Result<&[MonotoneProfile]> {
        cached(&self.pointwise[slot(flavor)], || pointwise_profiles(self.op, flavor)).map(|v| v.as_slice())
    }

    /// `G` of the `]0, lambda]` ultracontractive profile.
    pub fn g_ultra(&self) -> Result<&MonotoneProfile> {
        cached(&self.g_ultra, || g_transform(self.ultra(Flavor::HalfOpen)?))
    }

    /// `G` of the `]0, lambda]` density profile.
    pub fn g_density(&self) -> Result<&MonotoneProfile> {
        cached(&self.g_density, || g_transform(self.density(Flavor::HalfOpen)?))
    }

    pub fn l_ultra(&self) -> Result<&DecayProfile> {
        cached(&self.l_ultra, || heat_decay(self.op, &ProfileKind::Ultra))
    }

    pub fn m_ultra(&self) -> Result<&DecayProfile> {
        cached(&self.m_ultra, || m_transform(self.l_ultra()?))
    }

    pub(crate) fn check_state(&self, rho: &DensityState) -> Result<()> {
        if rho.space() != self.op.space() {
            return Err(Error::DimensionMismatch {
                expected: self.op.dim(),
                got: rho.space().dim(),
            });
        }
        Ok(())
    }

    /// Kernel-free part of `f` with the relative size of the removed part;
    /// errors when nothing is left.
    pub(crate) fn kernel_free_vector(&self, f: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let (g, residual) = self.op.project_out_kernel(f)?;
        let total = self.op.space().norm2_squared(f).sqrt();
        if total == 0.0 {
            return Err(Error::ZeroState);
        }
        if self.op.space().norm2_squared(&g).sqrt() <= 1e-12 * total {
            return Err(Error::StateInKernel);
        }
        Ok((g, residual))
    }

    /// Rejects a vector with a kernel component above `kernel_tol`.
    pub(crate) fn require_kernel_free_vector(&self, f: &DVector<f64>) -> Result<()> {
        let (_, residual) = self.kernel_free_vector(f)?;
        if residual > self.cfg.kernel_tol {
            return Err(Error::KernelComponent(residual));
        }
        Ok(())
    }

    pub(crate) fn require_kernel_free_state(&self, rho: &DensityState) -> Result<()> {
        let (_, residual) = rho.project_out_kernel(self.op)?;
        if residual > self.cfg.kernel_tol {
            return Err(Error::KernelComponent(residual));
        }
        Ok(())
    }

    /// State used under a flavor: projected off the kernel for `]0, lambda]`,
    /// unchanged for `[0, lambda]`. Returns the removed relative mass.
    pub(crate) fn flavored_state(&self, rho: &DensityState, flavor: Flavor) -> Result<(DensityState, f64)> {
        self.check_state(rho)?;
        if rho.trace() <= 0.0 {
            return Err(Error::ZeroState);
        }
        match flavor {
            Flavor::HalfOpen => rho.project_out_kernel(self.op),
            Flavor::Closed => Ok((rho.clone(), 0.0)),
        }
    }

    pub(crate) fn require_supported(&self, rho: &DensityState, region: &[usize]) -> Result<()> {
        let residual = rho.support_residual(region)?;
        if residual > self.cfg.support_tol {
            return Err(Error::SupportViolation(residual));
        }
        Ok(())
    }

    pub(crate) fn require_supported_vector(&self, f: &DVector<f64>, region: &[usize]) -> Result<()> {
        let space = self.op.space();
        space.check_vector(f)?;
        let region = space.check_region(region)?;
        let scale = f.amax();
        if scale == 0.0 {
            return Ok(());
        }
        let mut inside = vec![false; space.len()];
        region.iter().for_each(|&x| inside[x] = true);
        let h = space.fiber_dim();
        let outside = f
            .iter()
            .enumerate()
            .filter(|(i, _)| !inside[i / h])
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        let residual = outside / scale;
        if residual > self.cfg.support_tol {
            return Err(Error::SupportViolation(residual));
        }
        Ok(())
    }
}

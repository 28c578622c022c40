use super::context::Context;
use super::functional::counting_sweep;
use super::report::{worst_of, InequalityReport, VerifyConfig};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::operators::{
    dirichlet_eigenvalues, region_profiles, rho_energy, sandwich_norm, DensityState, DirichletSpace, Flavor,
    ProfileKind, SpectralOperator,
};
use crate::operators::decay_profile;
use crate::profiles::MonotoneProfile;

fn sum(terms: impl Iterator<Item = Extended>) -> f64 {
    terms.fold(Extended::ZERO, Extended::add).to_f64()
}

/// Relative size below which a `]0, lambda]` profile counts as identically
/// zero, relative to the largest possible density.
const VANISHING_PROFILE: f64 = 1e-10;

/// `F^{-1}(mass / scale) mass`, except where `F` vanishes identically at
/// the `]0, lambda]` level: only kernel modes live there, so the mass a
/// kernel-free state puts there is rounding and is returned separately as
/// excluded.
fn inverse_term(f: &MonotoneProfile, mass: f64, scale: f64, cap: f64, flavor: Flavor) -> (Extended, f64) {
    if flavor == Flavor::HalfOpen && f.total().to_f64() <= VANISHING_PROFILE * cap {
        return (Extended::ZERO, mass);
    }
    (f.right_inverse(mass / scale).weighted(mass), 0.0)
}

fn dirichlet_space(flavor: Flavor) -> DirichletSpace {
    match flavor {
        Flavor::HalfOpen => DirichletSpace::KernelFree,
        Flavor::Closed => DirichletSpace::Supported,
    }
}

impl Context<'_> {
    /// Mixed-state Sobolev inequality with `G` from the density profile; the
    /// state is projected off `ker A` first.
    pub fn rho_sobolev(&self, rho: &DensityState) -> Result<InequalityReport> {
        let (rho, residual) = self.flavored_state(rho, Flavor::HalfOpen)?;
        let s = sandwich_norm(self.op, &rho)?;
        if !(s > 0.0) {
            return Err(Error::ZeroEnergy);
        }
        let g = self.g_density()?;
        let w = self.op.space().weights();
        let lhs = sum(rho
            .density()
            .iter()
            .zip(w)
            .map(|(&d, &mu)| g.right_inverse(d / (4.0 * s)).weighted(d * mu)));
        let rhs = 4.0 * rho_energy(self.op, &rho)?;
        let witness = self
            .witness(rho.digest())
            .param("sandwich_norm", s)
            .param("kernel_residual", residual);
        Ok(InequalityReport::new("rho-sobolev", lhs, rhs, witness, &self.cfg))
    }

    /// Mixed-state Moser inequality with pointwise profiles `F_x`.
    pub fn rho_moser_integral(&self, rho: &DensityState, flavor: Flavor) -> Result<InequalityReport> {
        let (rho, residual) = self.flavored_state(rho, flavor)?;
        let norm = rho.norm();
        let profiles = self.pointwise(flavor)?;
        let space = self.op.space();
        let h = space.fiber_dim() as f64;
        let (mut lhs, mut excluded) = (Extended::ZERO, 0.0);
        for ((&d, &mu), f) in rho.density().iter().zip(space.weights()).zip(profiles) {
            let (term, noise) = inverse_term(f, d, 4.0 * norm, h / mu, flavor);
            lhs = lhs.add(term.weighted(mu));
            excluded += noise * mu;
        }
        let rhs = 4.0 * rho_energy(self.op, &rho)?;
        let witness = self
            .witness(rho.digest())
            .text("flavor", flavor.to_string())
            .param("norm", norm)
            .param("kernel_residual", residual);
        Ok(InequalityReport::new("rho-moser-integral", lhs.to_f64(), rhs, witness, &self.cfg).with_exclusions(excluded))
    }

    /// Mixed-state Moser inequality summed over a partition with region
    /// profiles `F_{Omega_i}`.
    pub fn rho_moser_partition(
        &self,
        rho: &DensityState,
        parts: &[Vec<usize>],
        flavor: Flavor,
    ) -> Result<InequalityReport> {
        self.op.space().check_partition(parts)?;
        let (rho, residual) = self.flavored_state(rho, flavor)?;
        let norm = rho.norm();
        let profiles = region_profiles(self.op, parts, flavor)?;
        let h = self.op.space().fiber_dim() as f64;
        let (mut lhs, mut excluded) = (Extended::ZERO, 0.0);
        for (part, f) in parts.iter().zip(&profiles) {
            let nu = rho.region_measure(part)?;
            let (term, noise) = inverse_term(f, nu, 4.0 * norm, h * part.len() as f64, flavor);
            lhs = lhs.add(term);
            excluded += noise;
        }
        let lhs = lhs.to_f64();
        let rhs = 4.0 * rho_energy(self.op, &rho)?;
        let witness = self
            .witness(rho.digest())
            .text("flavor", flavor.to_string())
            .param("parts", parts.len() as f64)
            .param("norm", norm)
            .param("kernel_residual", residual);
        Ok(InequalityReport::new("rho-moser-partition", lhs, rhs, witness, &self.cfg).with_exclusions(excluded))
    }

    /// Faber-Krahn inequalities for a state supported in `region`, followed
    /// by the Dirichlet counting checks of [`Context::dirichlet_fk`].
    pub fn faber_krahn_mixed(
        &self,
        rho: &DensityState,
        region: &[usize],
        eps: f64,
        flavor: Flavor,
    ) -> Result<Vec<InequalityReport>> {
        let mut out = self.fk_mixed_state(rho, region, flavor)?;
        out.extend(self.dirichlet_fk(region, eps, flavor)?);
        Ok(out)
    }

    pub(crate) fn fk_mixed_state(
        &self,
        rho: &DensityState,
        region: &[usize],
        flavor: Flavor,
    ) -> Result<Vec<InequalityReport>> {
        self.check_state(rho)?;
        let space = self.op.space();
        let region = space.check_region(region)?;
        self.require_supported(rho, &region)?;
        if flavor == Flavor::HalfOpen {
            self.require_kernel_free_state(rho)?;
        }
        let tau = rho.trace();
        if !(tau > 0.0) {
            return Err(Error::ZeroState);
        }
        let norm = rho.norm();
        let expectation = rho_energy(self.op, rho)? / tau;
        let mu = space.measure(&region);
        let f_region = decay_profile(self.op, &ProfileKind::Region(region.clone()), flavor)?;
        let f = self.density(flavor)?;
        let at = 4.0 * expectation;
        let middle = f_region.evaluate(at)?;
        let witness = self
            .witness(rho.digest())
            .text("flavor", flavor.to_string())
            .param("measure", mu)
            .param("expectation", expectation)
            .param("norm", norm);
        Ok(vec![
            InequalityReport::new("fk-mixed-left", tau / (4.0 * norm), middle, witness.clone(), &self.cfg),
            InequalityReport::new("fk-mixed-right", middle, mu * f.evaluate(at)?, witness, &self.cfg),
        ])
    }

    /// `F_Omega^dim(lambda) <= 4 mu(Omega) F(4 lambda)` and its balanced form
    /// `(1 - eps)^2 F_Omega^dim(lambda) <= F_Omega(lambda/eps^2) <=
    /// mu(Omega) F(lambda/eps^2)`, swept over the Dirichlet eigenvalues. The
    /// `]0, lambda]` flavor counts kernel-free subspaces.
    pub fn dirichlet_fk(&self, region: &[usize], eps: f64, flavor: Flavor) -> Result<Vec<InequalityReport>> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidProfile(format!("eps must lie in (0, 1), got {eps}")));
        }
        let space = self.op.space();
        let region = space.check_region(region)?;
        let mu = space.measure(&region);
        let eig = dirichlet_eigenvalues(self.op, &region, dirichlet_space(flavor))?;
        let f_region = decay_profile(self.op, &ProfileKind::Region(region.clone()), flavor)?;
        let f = self.density(flavor)?;
        let sweep: Vec<(f64, f64)> = counting_sweep(&eig).collect();
        let state = format!("region:{region:?}");
        let witness = self
            .witness(state)
            .text("flavor", flavor.to_string())
            .param("measure", mu)
            .param("eps", eps);
        let scaled = |l: f64| l / (eps * eps);
        let dirichlet = sweep
            .iter()
            .map(|&(l, count)| Ok((l, count, 4.0 * mu * f.evaluate(4.0 * l)?)))
            .collect::<Result<Vec<_>>>()?;
        let left = sweep
            .iter()
            .map(|&(l, count)| Ok((l, (1.0 - eps).powi(2) * count, f_region.evaluate(scaled(l))?)))
            .collect::<Result<Vec<_>>>()?;
        let right = sweep
            .iter()
            .map(|&(l, _)| Ok((l, f_region.evaluate(scaled(l))?, mu * f.evaluate(scaled(l))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(vec![
            worst_of("fk-dirichlet", dirichlet, witness.clone(), "lambda", &self.cfg),
            worst_of("fk-balanced-left", left, witness.clone(), "lambda", &self.cfg),
            worst_of("fk-balanced-right", right, witness, "lambda", &self.cfg),
        ])
    }

    /// `tau(rho) <= 8 mu(Omega) |rho^{1/2} A rho^{1/2}| G(8 <A>_rho)` for a
    /// kernel-free state supported in `region`, followed by
    /// [`Context::dirichlet_sobolev_fk`].
    pub fn sobolev_to_fk(&self, rho: &DensityState, region: &[usize]) -> Result<Vec<InequalityReport>> {
        self.check_state(rho)?;
        let space = self.op.space();
        let region = space.check_region(region)?;
        self.require_supported(rho, &region)?;
        self.require_kernel_free_state(rho)?;
        let tau = rho.trace();
        if !(tau > 0.0) {
            return Err(Error::ZeroState);
        }
        let s = sandwich_norm(self.op, rho)?;
        let expectation = rho_energy(self.op, rho)? / tau;
        let mu = space.measure(&region);
        let g = self.g_density()?;
        let rhs = 8.0 * mu * s * g.evaluate(8.0 * expectation)?;
        let witness = self
            .witness(rho.digest())
            .param("measure", mu)
            .param("sandwich_norm", s)
            .param("expectation", expectation);
        let mut out = vec![InequalityReport::new("sobolev-fk", tau, rhs, witness, &self.cfg)];
        out.extend(self.dirichlet_sobolev_fk(&region)?);
        Ok(out)
    }

    /// `F_Omega^dim(lambda) <= 8 mu(Omega) lambda G(8 lambda)` over kernel-free
    /// Dirichlet eigenvalues, and `F(lambda) <= lambda G(lambda)` at the
    /// breakpoints of the density profile.
    pub fn dirichlet_sobolev_fk(&self, region: &[usize]) -> Result<Vec<InequalityReport>> {
        let space = self.op.space();
        let region = space.check_region(region)?;
        let mu = space.measure(&region);
        let eig = dirichlet_eigenvalues(self.op, &region, DirichletSpace::KernelFree)?;
        let g = self.g_density()?;
        let f = self.density(Flavor::HalfOpen)?;
        let cases = counting_sweep(&eig)
            .map(|(l, count)| Ok((l, count, 8.0 * mu * l * g.evaluate(8.0 * l)?)))
            .collect::<Result<Vec<_>>>()?;
        let witness = self.witness(format!("region:{region:?}")).param("measure", mu);
        let comparison = f
            .breakpoints()
            .into_iter()
            .map(|l| Ok((l, f.evaluate(l)?, l * g.evaluate(l)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(vec![
            worst_of("sobolev-fk-dirichlet", cases, witness.clone(), "lambda", &self.cfg),
            worst_of("lambda-g-vs-f", comparison, witness, "lambda", &self.cfg),
        ])
    }

    /// For every part `Omega_i`:
    /// `F_{Omega_i}^{-1}(nu(Omega_i)/8|rho|) nu(Omega_i) <= 2 int_{Omega_i}
    /// F_x^{-1}(Dnu(x)/4|rho|) dnu`. Reports the part closest to failure,
    /// with the summed sides as parameters.
    pub fn integral_dominates_discrete(
        &self,
        rho: &DensityState,
        parts: &[Vec<usize>],
        flavor: Flavor,
    ) -> Result<InequalityReport> {
        self.op.space().check_partition(parts)?;
        let (rho, residual) = self.flavored_state(rho, flavor)?;
        let norm = rho.norm();
        let regions = region_profiles(self.op, parts, flavor)?;
        let points = self.pointwise(flavor)?;
        let density = rho.density();
        let w = self.op.space().weights();
        let h = self.op.space().fiber_dim() as f64;
        let mut cases = Vec::with_capacity(parts.len());
        let (mut total_lhs, mut total_rhs) = (Extended::ZERO, Extended::ZERO);
        let mut excluded = 0.0;
        for (i, (part, f)) in parts.iter().zip(&regions).enumerate() {
            let nu = rho.region_measure(part)?;
            let (lhs, noise) = inverse_term(f, nu, 8.0 * norm, h * part.len() as f64, flavor);
            excluded += noise;
            let rhs = sum(part.iter().map(|&x| {
                let (term, noise) = inverse_term(&points[x], density[x], 4.0 * norm, h / w[x], flavor);
                excluded += noise * w[x];
                term.weighted(w[x])
            }));
            total_lhs = total_lhs.add(lhs);
            total_rhs = total_rhs.add(Extended::from(2.0 * rhs));
            cases.push((i as f64, lhs.to_f64(), 2.0 * rhs));
        }
        let witness = self
            .witness(rho.digest())
            .text("flavor", flavor.to_string())
            .param("sum_lhs", total_lhs.to_f64())
            .param("sum_rhs", total_rhs.to_f64())
            .param("kernel_residual", residual);
        Ok(worst_of("integral-vs-discrete", cases, witness, "part", &self.cfg).with_exclusions(excluded))
    }
}

pub fn verify_rho_sobolev(op: &SpectralOperator, rho: &DensityState, cfg: &VerifyConfig) -> Result<InequalityReport> {
    Context::new(op, cfg).rho_sobolev(rho)
}

pub fn verify_rho_moser_integral(
    op: &SpectralOperator,
    rho: &DensityState,
    flavor: Flavor,
    cfg: &VerifyConfig,
) -> Result<InequalityReport> {
    Context::new(op, cfg).rho_moser_integral(rho, flavor)
}

pub fn verify_rho_moser_partition(
    op: &SpectralOperator,
    rho: &DensityState,
    parts: &[Vec<usize>],
    flavor: Flavor,
    cfg: &VerifyConfig,
) -> Result<InequalityReport> {
    Context::new(op, cfg).rho_moser_partition(rho, parts, flavor)
}

pub fn verify_faber_krahn_mixed(
    op: &SpectralOperator,
    rho: &DensityState,
    region: &[usize],
    eps: f64,
    flavor: Flavor,
    cfg: &VerifyConfig,
) -> Result<Vec<InequalityReport>> {
    Context::new(op, cfg).faber_krahn_mixed(rho, region, eps, flavor)
}

pub fn verify_dirichlet_fk(
    op: &SpectralOperator,
    region: &[usize],
    eps: f64,
    flavor: Flavor,
    cfg: &VerifyConfig,
) -> Result<Vec<InequalityReport>> {
    Context::new(op, cfg).dirichlet_fk(region, eps, flavor)
}

pub fn verify_sobolev_to_fk(
    op: &SpectralOperator,
    rho: &DensityState,
    region: &[usize],
    cfg: &VerifyConfig,
) -> Result<Vec<InequalityReport>> {
    Context::new(op, cfg).sobolev_to_fk(rho, region)
}

pub fn verify_integral_dominates_discrete(
    op: &SpectralOperator,
    rho: &DensityState,
    parts: &[Vec<usize>],
    flavor: Flavor,
    cfg: &VerifyConfig,
) -> Result<InequalityReport> {
    Context::new(op, cfg).integral_dominates_discrete(rho, parts, flavor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::families;
    use nalgebra::DVector;

    fn cfg() -> VerifyConfig {
        VerifyConfig::default()
    }

    fn k2_pure_top() -> (SpectralOperator, DensityState) {
        let op = families::complete(2).unwrap();
        let f = DVector::from_vec(vec![1.0, -1.0]) / 2f64.sqrt();
        let rho = DensityState::pure(op.space().clone(), &f).unwrap();
        (op, rho)
    }

    #[test]
    fn k2_rho_sobolev() {
        let (op, rho) = k2_pure_top();
        let r = verify_rho_sobolev(&op, &rho, &cfg()).unwrap();
        assert!((r.lhs - 2.0).abs() < 1e-12 && (r.rhs - 8.0).abs() < 1e-12);
        let scaled = verify_rho_sobolev(&op, &rho.scaled(7.5), &cfg()).unwrap();
        assert!((scaled.lhs / r.lhs - 7.5).abs() < 1e-12 && scaled.pass);
    }

    #[test]
    fn k2_moser_integral() {
        let (op, rho) = k2_pure_top();
        let r = verify_rho_moser_integral(&op, &rho, Flavor::HalfOpen, &cfg()).unwrap();
        assert!((r.lhs - 2.0).abs() < 1e-12 && (r.rhs - 8.0).abs() < 1e-12);
        let constants = DensityState::from_kernel(&op.projector(Flavor::Closed, 0.0)).unwrap();
        let r = verify_rho_moser_integral(&op, &constants, Flavor::Closed, &cfg()).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.rhs.abs() < 1e-15 && r.pass);
        assert!(matches!(
            verify_rho_moser_integral(&op, &constants, Flavor::HalfOpen, &cfg()),
            Err(Error::StateInKernel)
        ));
    }

    #[test]
    fn singleton_partition_matches_integral() {
        let op = families::cycle(4).unwrap();
        let rho = DensityState::from_kernel(&op.projector(Flavor::HalfOpen, 2.0)).unwrap();
        for flavor in [Flavor::HalfOpen, Flavor::Closed] {
            let a = verify_rho_moser_integral(&op, &rho, flavor, &cfg()).unwrap();
            let parts: Vec<Vec<usize>> = (0..4).map(|x| vec![x]).collect();
            let b = verify_rho_moser_partition(&op, &rho, &parts, flavor, &cfg()).unwrap();
            assert!((a.lhs - b.lhs).abs() < 1e-12 && a.pass && b.pass);
            let edges = vec![vec![0, 1], vec![2, 3]];
            assert!(verify_rho_moser_partition(&op, &rho, &edges, flavor, &cfg()).unwrap().pass);
            let whole = vec![vec![0, 1, 2, 3]];
            assert!(verify_rho_moser_partition(&op, &rho, &whole, flavor, &cfg()).unwrap().pass);
        }
        assert!(matches!(
            verify_rho_moser_partition(&op, &rho, &[vec![0, 1], vec![1, 2, 3]], Flavor::Closed, &cfg()),
            Err(Error::InvalidPartition(_))
        ));
    }

    #[test]
    fn k2_faber_krahn() {
        let op = families::complete(2).unwrap();
        let rho = DensityState::pure(op.space().clone(), &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let reports = verify_faber_krahn_mixed(&op, &rho, &[0], 0.5, Flavor::Closed, &cfg()).unwrap();
        assert!((reports[0].lhs - 0.25).abs() < 1e-12 && (reports[0].rhs - 1.0).abs() < 1e-12);
        assert!((reports[1].lhs - 1.0).abs() < 1e-12 && (reports[1].rhs - 1.0).abs() < 1e-12);
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
        assert!(matches!(
            verify_faber_krahn_mixed(&op, &rho, &[1], 0.5, Flavor::Closed, &cfg()),
            Err(Error::SupportViolation(_))
        ));
        assert!(matches!(
            verify_faber_krahn_mixed(&op, &rho, &[0], 0.5, Flavor::HalfOpen, &cfg()),
            Err(Error::KernelComponent(_))
        ));
    }

    #[test]
    fn c4_dirichlet_fk() {
        let op = families::cycle(4).unwrap();
        let reports = verify_dirichlet_fk(&op, &[0], 0.5, Flavor::Closed, &cfg()).unwrap();
        assert_eq!(reports[0].id, "fk-dirichlet");
        assert_eq!(reports[0].lhs, 1.0);
        assert!((reports[0].rhs - 4.0).abs() < 1e-12);
        let all = verify_dirichlet_fk(&op, &[0, 1, 2, 3], 0.5, Flavor::Closed, &cfg()).unwrap();
        assert!(all.iter().all(|r| r.pass));
    }

    #[test]
    fn k2_sobolev_fk() {
        let (op, rho) = k2_pure_top();
        let reports = verify_sobolev_to_fk(&op, &rho, &[0, 1], &cfg()).unwrap();
        assert!((reports[0].lhs - 1.0).abs() < 1e-12 && (reports[0].rhs - 8.0).abs() < 1e-12);
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
    }

    #[test]
    fn c4_integral_dominates_discrete() {
        let op = families::cycle(4).unwrap();
        let rho = DensityState::from_kernel(&op.projector(Flavor::HalfOpen, 2.0)).unwrap();
        let parts: Vec<Vec<usize>> = (0..4).map(|x| vec![x]).collect();
        for flavor in [Flavor::HalfOpen, Flavor::Closed] {
            let r = verify_integral_dominates_discrete(&op, &rho, &parts, flavor, &cfg()).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }
}

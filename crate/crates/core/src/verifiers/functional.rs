use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::context::Context;
use super::report::{worst_of, InequalityReport, VerifyConfig};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::operators::spectral::sym_eigenvalues;
use crate::operators::{dirichlet_eigenvalues, energy, vector_digest, DirichletSpace, Flavor, SpectralOperator};
use crate::profiles::{h_of, n_of, MonotoneProfile, Representation};

/// Inequalities for a single function compared against its own norms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PureInequality {
    /// `sum |f|^2 F^{-1}(|f|^2 / 4|f|_2^2) mu <= 4 E(f)`.
    MoserL2,
    /// `sum |f|^2 F^{-1}(|f| / 2|f|_1) mu <= 4 E(f)`.
    MoserL1,
    /// `|f|_2^2 F^{-1}(|f|_2^2 / 4|f|_1^2) <= 8 E(f)`.
    Nash,
    /// `4 mu(Omega) F(8 E(f) / |f|_2^2) >= 1` for `f` supported in `Omega`.
    FaberKrahn(Vec<usize>),
}

impl PureInequality {
    pub fn id(&self) -> &'static str {
        match self {
            PureInequality::MoserL2 => "moser-l2",
            PureInequality::MoserL1 => "moser-l1",
            PureInequality::Nash => "nash",
            PureInequality::FaberKrahn(_) => "fk-pure",
        }
    }
}

fn weighted_sum(terms: impl Iterator<Item = Extended>) -> f64 {
    terms.fold(Extended::ZERO, Extended::add).to_f64()
}

fn energy_of(op: &SpectralOperator, f: &DVector<f64>) -> Result<f64> {
    let e = energy(op, f)?;
    if !(e > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    Ok(e)
}

impl Context<'_> {
    /// Orlicz-Sobolev inequality with `H(y) = y G^{-1}(y)`, `G` from the
    /// ultracontractive profile.
    pub fn h_sobolev(&self, f: &DVector<f64>) -> Result<InequalityReport> {
        let (g, residual) = self.kernel_free_vector(f)?;
        let e = energy_of(self.op, &g)?;
        let big_g = self.g_ultra()?;
        let space = self.op.space();
        let lhs = weighted_sum(
            space
                .fiber_norms(&g)
                .iter()
                .zip(space.weights())
                .map(|(n, &w)| h_of(big_g, n * n / (4.0 * e)).weighted(w)),
        );
        let w = self
            .witness(vector_digest(f))
            .param("energy", e)
            .param("kernel_residual", residual);
        Ok(InequalityReport::new("h-sobolev", lhs, 1.0, w, &self.cfg))
    }

    /// Orlicz-Sobolev inequality with `N(y) = y / M^{-1}(y)`, `M` the tail
    /// integral of the heat decay. Points where `N` is infinite are left out
    /// of the sum and their measure is reported.
    pub fn n_sobolev(&self, f: &DVector<f64>) -> Result<InequalityReport> {
        let (g, residual) = self.kernel_free_vector(f)?;
        let e = energy_of(self.op, &g)?;
        let m = self.m_ultra()?;
        let space = self.op.space();
        let mut lhs = 0.0;
        let mut excluded = 0.0;
        for (n, &w) in space.fiber_norms(&g).iter().zip(space.weights()) {
            let y = n * n / (4.0 * e);
            if y == 0.0 {
                continue;
            }
            match n_of(m, y)? {
                Extended::Finite(v) => lhs += v * w,
                Extended::Infinite => excluded += w,
            }
        }
        let w = self
            .witness(vector_digest(f))
            .param("energy", e)
            .param("kernel_residual", residual);
        Ok(InequalityReport::new("n-sobolev", lhs, std::f64::consts::LN_2, w, &self.cfg).with_exclusions(excluded))
    }

    /// Moser, Nash and pure Faber-Krahn inequalities against the
    /// ultracontractive profile of the given flavor. The `]0, lambda]` flavor
    /// needs `f` orthogonal to `ker A`.
    pub fn pure_moser_nash(&self, f: &DVector<f64>, which: &PureInequality, flavor: Flavor) -> Result<InequalityReport> {
        let space = self.op.space();
        space.check_vector(f)?;
        let l2 = space.norm2_squared(f);
        if l2 == 0.0 {
            return Err(Error::ZeroState);
        }
        if flavor == Flavor::HalfOpen {
            self.require_kernel_free_vector(f)?;
        }
        let big_f = self.ultra(flavor)?;
        let e = energy(self.op, f)?;
        let norms = space.fiber_norms(f);
        let l1 = space.norm1(f);
        let (lhs, rhs) = match which {
            PureInequality::MoserL2 => {
                let lhs = weighted_sum(
                    norms
                        .iter()
                        .zip(space.weights())
                        .map(|(n, &w)| big_f.right_inverse(n * n / (4.0 * l2)).weighted(n * n * w)),
                );
                (lhs, 4.0 * e)
            }
            PureInequality::MoserL1 => {
                let lhs = weighted_sum(
                    norms
                        .iter()
                        .zip(space.weights())
                        .map(|(n, &w)| big_f.right_inverse(n / (2.0 * l1)).weighted(n * n * w)),
                );
                (lhs, 4.0 * e)
            }
            PureInequality::Nash => (big_f.right_inverse(l2 / (4.0 * l1 * l1)).weighted(l2).to_f64(), 8.0 * e),
            PureInequality::FaberKrahn(region) => {
                self.require_supported_vector(f, region)?;
                let mu = space.measure(&space.check_region(region)?);
                (1.0, 4.0 * mu * big_f.evaluate(8.0 * e / l2)?)
            }
        };
        let w = self
            .witness(vector_digest(f))
            .text("flavor", flavor.to_string())
            .param("energy", e)
            .param("l2_squared", l2)
            .param("l1", l1);
        Ok(InequalityReport::new(which.id(), lhs, rhs, w, &self.cfg))
    }

    /// `|f|_p <= 2 C_1^{1/2 alpha} sqrt(E(f))` with `p = 2 alpha/(alpha - 1)`,
    /// `C_1 = C alpha/(alpha - 1)`, given `F_ultra <= C lambda^alpha`.
    pub fn lp_sobolev(&self, f: &DVector<f64>, c: f64, alpha: f64) -> Result<InequalityReport> {
        check_exponent(c, alpha)?;
        dominates(self.ultra(Flavor::HalfOpen)?, c, alpha)?;
        let (g, residual) = self.kernel_free_vector(f)?;
        let e = energy_of(self.op, &g)?;
        let k = PolynomialConstants::new(c, alpha);
        let lhs = self.op.space().norm_p(&g, k.p);
        let rhs = 2.0 * k.c1.powf(1.0 / (2.0 * alpha)) * e.sqrt();
        let w = self
            .witness(vector_digest(f))
            .param("c", c)
            .param("alpha", alpha)
            .param("p", k.p)
            .param("energy", e)
            .param("kernel_residual", residual);
        Ok(InequalityReport::new("lp-sobolev", lhs, rhs, w, &self.cfg))
    }

    /// Consequences of `F_density <= C lambda^alpha` for the span `V` of
    /// `states`: the integral bound for an orthonormal basis of `V` (after
    /// removing kernel components), and with a region, the dimension bound
    /// for `V` and the Dirichlet counting bound on the region. With a region
    /// the states must be supported in it and orthogonal to `ker A`.
    pub fn polynomial_consequences(
        &self,
        c: f64,
        alpha: f64,
        states: &[DVector<f64>],
        region: Option<&[usize]>,
    ) -> Result<Vec<InequalityReport>> {
        check_exponent(c, alpha)?;
        dominates(self.density(Flavor::HalfOpen)?, c, alpha)?;
        if states.is_empty() {
            return Err(Error::ZeroState);
        }
        if let Some(region) = region {
            for f in states {
                self.require_supported_vector(f, region)?;
                self.require_kernel_free_vector(f)?;
            }
        }
        let space = self.op.space();
        let mut projected = Vec::with_capacity(states.len());
        for f in states {
            space.check_vector(f)?;
            if let Ok((g, _)) = self.kernel_free_vector(f) {
                projected.push(g);
            }
        }
        let basis = orthonormalize(self.op, &projected);
        if basis.is_empty() {
            return Err(Error::StateInKernel);
        }
        let k = PolynomialConstants::new(c, alpha);
        let energies: Vec<f64> = basis.iter().map(|f| energy(self.op, f)).collect::<Result<_>>()?;
        let lambda = top_rayleigh(self.op, &basis)?;
        let mut digest_input = DVector::zeros(0);
        for f in states {
            digest_input = DVector::from_iterator(
                digest_input.len() + f.len(),
                digest_input.iter().chain(f.iter()).copied(),
            );
        }
        let witness = self
            .witness(vector_digest(&digest_input))
            .param("c", c)
            .param("alpha", alpha)
            .param("dim", basis.len() as f64)
            .param("lambda", lambda);

        let mut density = vec![0.0; space.len()];
        for f in &basis {
            for (d, n) in density.iter_mut().zip(space.fiber_norms(f)) {
                *d += n * n;
            }
        }
        let q = alpha / (alpha - 1.0);
        let lhs: f64 = density.iter().zip(space.weights()).map(|(d, w)| d.powf(q) * w).sum();
        let rhs = k.c2 * lambda.powf(1.0 / (alpha - 1.0)) * energies.iter().sum::<f64>();
        let mut out = vec![InequalityReport::new("family-lp", lhs, rhs, witness.clone(), &self.cfg)];

        if let Some(region) = region {
            let region = space.check_region(region)?;
            let mu = space.measure(&region);
            out.push(InequalityReport::new(
                "family-dimension",
                basis.len() as f64 / mu,
                k.c3 * lambda.powf(alpha),
                witness.clone().param("measure", mu),
                &self.cfg,
            ));
            let eig = dirichlet_eigenvalues(self.op, &region, DirichletSpace::KernelFree)?;
            let cases = counting_sweep(&eig).map(|(l, count)| (l, count, mu * k.c3 * l.powf(alpha)));
            out.push(worst_of(
                "family-dirichlet",
                cases,
                witness.param("measure", mu),
                "lambda",
                &self.cfg,
            ));
        }
        Ok(out)
    }
}

/// Distinct values of a sorted spectrum with the count of values up to each.
pub(crate) fn counting_sweep(eig: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    let mut j = 0;
    std::iter::from_fn(move || {
        if j >= eig.len() {
            return None;
        }
        let lambda = eig[j];
        j += eig[j..].partition_point(|&l| crate::operators::within(l, lambda));
        Some((lambda, j as f64))
    })
}

/// Constants derived from `F <= C lambda^alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolynomialConstants {
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl PolynomialConstants {
    pub fn new(c: f64, alpha: f64) -> Self {
        let c1 = c * alpha / (alpha - 1.0);
        PolynomialConstants {
            p: 2.0 * alpha / (alpha - 1.0),
            c1,
            c2: 4f64.powf(alpha / (alpha - 1.0)) * c1.powf(1.0 / (alpha - 1.0)),
            c3: 4f64.powf(alpha) * alpha * c / (alpha - 1.0),
        }
    }
}

fn check_exponent(c: f64, alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidProfile(format!("exponent must exceed 1, got {alpha}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::NonPositiveArgument(c));
    }
    Ok(())
}

/// Checks `F(lambda) <= C lambda^alpha` at every breakpoint, which suffices
/// for a step profile.
pub fn dominates(f: &MonotoneProfile, c: f64, alpha: f64) -> Result<()> {
    if f.value_at_zero() > 0.0 {
        return Err(Error::NotDominated {
            alpha,
            lambda: 0.0,
            value: f.value_at_zero(),
            bound: 0.0,
        });
    }
    let Representation::Step(s) = f.to_step().representation().clone() else {
        unreachable!("to_step returns a step profile")
    };
    let mut value = 0.0;
    for (&lambda, &inc) in s.positions().iter().zip(s.increments()) {
        value += inc;
        let bound = c * lambda.powf(alpha);
        if value > bound * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::NotDominated {
                alpha,
                lambda,
                value,
                bound,
            });
        }
    }
    Ok(())
}

/// Smallest `C` with `F(lambda) <= C lambda^alpha` at every breakpoint.
pub fn dominating_constant(f: &MonotoneProfile, alpha: f64) -> Result<f64> {
    if f.value_at_zero() > 0.0 {
        return Err(Error::NotDominated {
            alpha,
            lambda: 0.0,
            value: f.value_at_zero(),
            bound: 0.0,
        });
    }
    let Representation::Step(s) = f.to_step().representation().clone() else {
        unreachable!("to_step returns a step profile")
    };
    Ok(s.positions()
        .iter()
        .zip(s.cumulative())
        .map(|(l, v)| v / l.powf(alpha))
        .fold(0.0, f64::max))
}

/// Weighted modified Gram-Schmidt, dropping dependent vectors.
fn orthonormalize(op: &SpectralOperator, vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let space = op.space();
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let scale = space.norm2_squared(v).sqrt();
        let mut u = v.clone();
        for _ in 0..2 {
            for b in &out {
                let c = space.inner(&u, b);
                u -= b * c;
            }
        }
        let n = space.norm2_squared(&u).sqrt();
        if n > 1e-10 * scale {
            out.push(u / n);
        }
    }
    out
}

/// Largest Rayleigh quotient of `A` on the span of an orthonormal family.
fn top_rayleigh(op: &SpectralOperator, basis: &[DVector<f64>]) -> Result<f64> {
    let coeffs: Vec<DVector<f64>> = basis.iter().map(|f| op.coefficients(f)).collect::<Result<_>>()?;
    let lambda = op.eigenvalues();
    let k = basis.len();
    let b = DMatrix::<f64>::from_fn(k, k, |i, j| {
        lambda.iter().enumerate().map(|(m, l)| l * coeffs[i][m] * coeffs[j][m]).sum()
    });
    Ok(sym_eigenvalues(b).max())
}

pub fn verify_h_sobolev(op: &SpectralOperator, f: &DVector<f64>, cfg: &VerifyConfig) -> Result<InequalityReport> {
    Context::new(op, cfg).h_sobolev(f)
}

pub fn verify_n_sobolev(op: &SpectralOperator, f: &DVector<f64>, cfg: &VerifyConfig) -> Result<InequalityReport> {
    Context::new(op, cfg).n_sobolev(f)
}

pub fn verify_pure_moser_nash(
    op: &SpectralOperator,
    f: &DVector<f64>,
    which: &PureInequality,
    flavor: Flavor,
    cfg: &VerifyConfig,
) -> Result<InequalityReport> {
    Context::new(op, cfg).pure_moser_nash(f, which, flavor)
}

pub fn verify_lp_sobolev(
    op: &SpectralOperator,
    f: &DVector<f64>,
    c: f64,
    alpha: f64,
    cfg: &VerifyConfig,
) -> Result<InequalityReport> {
    Context::new(op, cfg).lp_sobolev(f, c, alpha)
}

pub fn polynomial_consequences(
    c: f64,
    alpha: f64,
    op: &SpectralOperator,
    states: &[DVector<f64>],
    region: Option<&[usize]>,
    cfg: &VerifyConfig,
) -> Result<Vec<InequalityReport>> {
    Context::new(op, cfg).polynomial_consequences(c, alpha, states, region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{dirichlet_modes, families};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn k2_h_sobolev() {
        let op = families::complete(2).unwrap();
        let r = verify_h_sobolev(&op, &v(&[1.0, -1.0]), &VerifyConfig::default()).unwrap();
        assert!((r.lhs - 0.25).abs() < 1e-12 && r.rhs == 1.0 && r.pass);
        let scaled = verify_h_sobolev(&op, &v(&[1e-3, -1e-3]), &VerifyConfig::default()).unwrap();
        assert!((scaled.lhs - r.lhs).abs() < 1e-12);
    }

    #[test]
    fn k2_n_sobolev() {
        let op = families::complete(2).unwrap();
        let r = verify_n_sobolev(&op, &v(&[1.0, -1.0]), &VerifyConfig::default()).unwrap();
        let expected = 2.0 * (1.0 / 16.0) / (4f64.ln() / 2.0);
        assert!((r.lhs - expected).abs() < 1e-10, "{}", r.lhs);
        assert_eq!(r.rhs, std::f64::consts::LN_2);
        assert!(r.pass && r.exclusions == 0.0);
    }

    #[test]
    fn kernel_and_zero_errors() {
        let op = families::complete(2).unwrap();
        let cfg = VerifyConfig::default();
        assert!(matches!(verify_h_sobolev(&op, &v(&[1.0, 1.0]), &cfg), Err(Error::StateInKernel)));
        assert!(matches!(verify_h_sobolev(&op, &v(&[0.0, 0.0]), &cfg), Err(Error::ZeroState)));
        assert!(matches!(
            verify_pure_moser_nash(&op, &v(&[1.0, 0.0]), &PureInequality::Nash, Flavor::HalfOpen, &cfg),
            Err(Error::KernelComponent(_))
        ));
    }

    #[test]
    fn k2_nash_and_fk() {
        let op = families::complete(2).unwrap();
        let cfg = VerifyConfig::default();
        let r = verify_pure_moser_nash(&op, &v(&[1.0, -1.0]), &PureInequality::Nash, Flavor::HalfOpen, &cfg).unwrap();
        assert!((r.lhs - 4.0).abs() < 1e-12 && (r.rhs - 32.0).abs() < 1e-12);
        let fk = PureInequality::FaberKrahn(vec![0]);
        let r = verify_pure_moser_nash(&op, &v(&[1.0, 0.0]), &fk, Flavor::Closed, &cfg).unwrap();
        assert!((r.rhs - 4.0).abs() < 1e-12 && r.lhs == 1.0 && r.pass);
        assert!(matches!(
            verify_pure_moser_nash(&op, &v(&[1.0, 0.5]), &fk, Flavor::Closed, &cfg),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn minimal_constant_dominates() {
        let f = MonotoneProfile::step(0.0, &[(2.0, 0.5), (4.0, 0.25)]).unwrap();
        let c = dominating_constant(&f, 2.0).unwrap();
        assert_eq!(c, 0.125);
        dominates(&f, c, 2.0).unwrap();
        assert!(dominates(&f, 0.9 * c, 2.0).is_err());
    }

    #[test]
    fn polynomial_constants() {
        let k = PolynomialConstants::new(1.0, 2.0);
        assert_eq!(k.p, 4.0);
        assert_eq!(k.c1, 2.0);
        assert_eq!(k.c2, 32.0);
        assert_eq!(k.c3, 32.0);
    }

    #[test]
    fn c4_lp_sobolev() {
        let op = families::cycle(4).unwrap();
        let cfg = VerifyConfig::default();
        let c = 0.5 / 4.0;
        let f = v(&[1.0, 0.0, -1.0, 0.0]);
        let r = verify_lp_sobolev(&op, &f, c, 2.0, &cfg).unwrap();
        let c1 = 2.0 * c;
        assert!((r.lhs - 2f64.powf(0.25)).abs() < 1e-12);
        assert!((r.rhs - 2.0 * c1.powf(0.25) * 4f64.sqrt()).abs() < 1e-12);
        assert!(r.pass);
        assert!(matches!(
            verify_lp_sobolev(&op, &f, 0.1, 2.0, &cfg),
            Err(Error::NotDominated { .. })
        ));
    }

    #[test]
    fn single_state_family_matches_lp_bound() {
        let op = families::cycle(8).unwrap();
        let cfg = VerifyConfig::default();
        let (c, alpha) = (2.0, 2.0);
        let mut f = v(&[1.0, 0.5, -0.2, 0.0, 0.3, -1.0, 0.1, 0.2]);
        f.add_scalar_mut(-f.mean());
        let reports = polynomial_consequences(c, alpha, &op, std::slice::from_ref(&f), None, &cfg).unwrap();
        assert_eq!(reports.len(), 1);
        assert!(reports[0].pass);
        let n = op.space().norm2_squared(&f).sqrt();
        let k = PolynomialConstants::new(c, alpha);
        assert!((reports[0].lhs - (op.space().norm_p(&f, k.p) / n).powf(k.p)).abs() < 1e-12);
    }

    #[test]
    fn region_consequences_on_dirichlet_modes() {
        let op = families::cycle(12).unwrap();
        let cfg = VerifyConfig::default();
        let region = [2, 3, 4, 5];
        let (_, modes) = dirichlet_modes(&op, &region, DirichletSpace::KernelFree).unwrap();
        let states: Vec<DVector<f64>> = (0..2).map(|c| modes.column(c).into_owned()).collect();
        let reports = polynomial_consequences(4.0, 2.0, &op, &states, Some(&region), &cfg).unwrap();
        assert_eq!(reports.len(), 3);
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
        assert!((reports[1].lhs - 0.5).abs() < 1e-12);
    }
}

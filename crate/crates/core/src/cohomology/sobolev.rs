use std::fmt;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::periodic::PeriodicComplex;
use super::simplicial::SimplicialComplex;
use crate::error::{Error, Result};
use crate::verifiers::{Context, InequalityReport, VerifyConfig};

/// Sobolev exponent for a spectral density `F(lambda) <= C lambda^{alpha/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevExponent {
    /// `|a|_p <= C |d a|_2` on the complement of `ker d`, with
    /// `1/p = 1/2 - 1/alpha`.
    Exponent { alpha: f64, p: f64 },
    NotApplicable { alpha: f64 },
}

impl SobolevExponent {
    pub fn p(&self) -> Option<f64> {
        match self {
            SobolevExponent::Exponent { p, .. } => Some(*p),
            SobolevExponent::NotApplicable { .. } => None,
        }
    }
}

impl fmt::Display for SobolevExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SobolevExponent::Exponent { alpha, p } => write!(f, "alpha={alpha} > 2: p={p}"),
            SobolevExponent::NotApplicable { alpha } => write!(f, "alpha={alpha} <= 2: not applicable"),
        }
    }
}

/// `p = 2 alpha / (alpha - 2)` for `alpha > 2`.
pub fn sobolev_exponent(alpha: f64) -> SobolevExponent {
    if alpha > 2.0 && alpha.is_finite() {
        SobolevExponent::Exponent {
            alpha,
            p: 2.0 * alpha / (alpha - 2.0),
        }
    } else {
        SobolevExponent::NotApplicable { alpha }
    }
}

/// Random cochains checked against `|a|_p <= 2 C_1^{1/alpha} |d_k a|_2`,
/// the Lp Sobolev bound for profile exponent `alpha/2`, given that
/// `C lambda^{alpha/2}` dominates the ultracontractive profile of
/// `d_k^* d_k`. Cochains are projected onto `(ker d_k)^perp`; the worst trial
/// is reported.
pub fn verify_cochain_sobolev(
    cx: &SimplicialComplex,
    k: usize,
    c: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
    cfg: &VerifyConfig,
) -> Result<InequalityReport> {
    cochain_sobolev(cx, k, c, alpha, trials, seed, cfg, None)
}

/// [`verify_cochain_sobolev`] on the quotient of a periodic complex by
/// `n Z^d`.
#[allow(clippy::too_many_arguments)]
pub fn verify_periodic_cochain_sobolev(
    pcx: &PeriodicComplex,
    n: usize,
    k: usize,
    c: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
    cfg: &VerifyConfig,
) -> Result<InequalityReport> {
    cochain_sobolev(&pcx.truncation(n)?, k, c, alpha, trials, seed, cfg, Some(n))
}

#[allow(clippy::too_many_arguments)]
fn cochain_sobolev(
    cx: &SimplicialComplex,
    k: usize,
    c: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
    cfg: &VerifyConfig,
    truncation: Option<usize>,
) -> Result<InequalityReport> {
    let exponent = sobolev_exponent(alpha);
    if exponent.p().is_none() {
        return Err(Error::Unsupported(exponent.to_string()));
    }
    if trials == 0 {
        return Err(Error::Unsupported("at least one trial is required".into()));
    }
    let op = cx.up_laplacian(k)?;
    let ctx = Context::new(&op, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Option<(f64, InequalityReport)> = None;
    for trial in 0..trials {
        let a = DVector::from_fn(op.dim(), |_, _| rng.sample(StandardNormal));
        let r = ctx.lp_sobolev(&a, c, alpha / 2.0)?;
        let score = r.score(cfg);
        if worst.as_ref().is_none_or(|(s, _)| score < *s) {
            let mut r = r;
            r.witness.set("trial", trial as f64);
            worst = Some((score, r));
        }
    }
    let (_, mut r) = worst.expect("at least one trial");
    r.id = "cochain-sobolev".into();
    r.witness.set("degree", k as f64);
    r.witness.set("trials", trials as f64);
    r.witness.set("sobolev_alpha", alpha);
    match truncation {
        Some(n) => {
            r.witness.set_text("truncation", "periodic");
            r.witness.set("truncation_size", n as f64);
        }
        None => r.witness.set_text("truncation", "none"),
    }
    Ok(r.with_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::simplicial::circle;
    use crate::operators::Flavor;
    use crate::verifiers::dominating_constant;

    #[test]
    fn exponents() {
        assert_eq!(sobolev_exponent(4.0).p(), Some(4.0));
        assert_eq!(sobolev_exponent(3.0).p(), Some(6.0));
        assert_eq!(sobolev_exponent(2.0), SobolevExponent::NotApplicable { alpha: 2.0 });
        assert_eq!(sobolev_exponent(1.0).to_string(), "alpha=1 <= 2: not applicable");
    }

    fn constant_for(cx: &SimplicialComplex, k: usize, alpha: f64) -> f64 {
        let op = cx.up_laplacian(k).unwrap();
        let ctx = Context::new(&op, &VerifyConfig::default());
        dominating_constant(ctx.ultra(Flavor::HalfOpen).unwrap(), alpha / 2.0).unwrap()
    }

    #[test]
    fn single_edge() {
        let cx = SimplicialComplex::closure([vec![0, 1]]).unwrap();
        let c = constant_for(&cx, 0, 4.0);
        assert!((c - 0.125).abs() < 1e-12);
        let r = verify_cochain_sobolev(&cx, 0, c, 4.0, 20, 1, &VerifyConfig::default()).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn cycle_64_random_cochains() {
        let line = PeriodicComplex::line();
        let cx = line.truncation(64).unwrap();
        let c = constant_for(&cx, 0, 3.0);
        let r = verify_periodic_cochain_sobolev(&line, 64, 0, c, 3.0, 50, 7, &VerifyConfig::default()).unwrap();
        assert!(r.pass && r.id == "cochain-sobolev");
        assert_eq!(r.witness.params["truncation"], "periodic");
        assert_eq!(r.seed, Some(7));
        let cx = circle(64).unwrap();
        assert!(verify_cochain_sobolev(&cx, 0, 0.5 * c, 3.0, 5, 7, &VerifyConfig::default()).is_err());
    }

    #[test]
    fn low_exponent_is_refused() {
        let cx = circle(8).unwrap();
        let err = verify_cochain_sobolev(&cx, 0, 10.0, 2.0, 5, 0, &VerifyConfig::default()).unwrap_err();
        assert!(err.to_string().contains("not applicable"));
    }
}

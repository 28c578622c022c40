//! Right-continuous nonincreasing profiles on `(0, inf)`: heat decays `L`
//! and their tail integrals `M`.


use super::envelope::{HeatEnvelope, PiecewiseExp};
use crate::error::{Error, Result};
use crate::quadrature;

/// Relative tolerance for tail integrals of tabulated and envelope profiles.
pub const QUADRATURE_REL_TOL: f64 = 1e-9;

/// `coefficient * e^{-rate t}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTerm {
    pub coefficient: f64,
    pub rate: f64,
}

/// Exponential majorant `coefficient * e^{-rate t}` valid beyond the last sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTail {
    pub rate: f64,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedDecay {
    samples: Vec<(f64, f64)>,
    tail: Option<ExpTail>,
}

impl TabulatedDecay {
    pub fn new(samples: Vec<(f64, f64)>, tail: Option<ExpTail>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidProfile("tabulated decay needs at least one sample".into()));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidProfile("sample times must be strictly increasing".into()));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::InvalidProfile("tabulated decay must be nonincreasing".into()));
            }
        }
        if samples.iter().any(|&(t, v)| t < 0.0 || v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidProfile("samples must be nonnegative and finite".into()));
        }
        if let Some(tail) = tail {
            if !(tail.rate > 0.0) || tail.coefficient < 0.0 {
                return Err(Error::InvalidProfile("tail needs a positive rate and nonnegative coefficient".into()));
            }
        }
        Ok(TabulatedDecay { samples, tail })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn tail(&self) -> Option<ExpTail> {
        self.tail
    }

    fn eval(&self, t: f64) -> f64 {
        let s = &self.samples;
        let idx = s.partition_point(|&(x, _)| x <= t);
        if idx == 0 {
            return s[0].1;
        }
        if idx == s.len() {
            let (last_t, last_v) = s[idx - 1];
            return match self.tail {
                Some(tail) if t > last_t => last_v.min(tail.coefficient * (-tail.rate * t).exp()),
                _ => last_v,
            };
        }
        let (t0, v0) = s[idx - 1];
        let (t1, v1) = s[idx];
        let w = (t - t0) / (t1 - t0);
        if v0 > 0.0 && v1 > 0.0 {
            v0 * (v1 / v0).powf(w)
        } else {
            v0 + (v1 - v0) * w
        }
    }
}

/// `M(t) = int_t^inf L(s) ds` for an `L` without a closed-form antiderivative.
///
/// Values are cached on a geometric node grid; evaluation between nodes
/// integrates `L` exactly over the remaining partial segment.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratedDecay {
    integrand: DecayProfile,
    nodes: Vec<(f64, f64)>,
}

impl IntegratedDecay {
    fn build(integrand: DecayProfile, t_min: f64, t_max: f64) -> Self {
        let mut times = vec![0.0];
        let per_decade = 8.0;
        let decades = (t_max / t_min).log10().max(0.0);
        let count = (decades * per_decade).ceil() as usize;
        for k in 0..=count {
            times.push(t_min * 10f64.powf(k as f64 / per_decade));
        }
        let last = *times.last().unwrap();
        let tail = quadrature::half_line(|s| integrand.eval_unchecked(s), last, 0.0, QUADRATURE_REL_TOL);
        let mut nodes = vec![(last, tail); times.len()];
        let mut acc = tail;
        for i in (0..times.len() - 1).rev() {
            let seg = quadrature::adaptive_simpson(|s| integrand.eval_unchecked(s), times[i], times[i + 1], QUADRATURE_REL_TOL);
            acc += seg;
            nodes[i] = (times[i], acc);
        }
        IntegratedDecay { integrand, nodes }
    }

    pub fn integrand(&self) -> &DecayProfile {
        &self.integrand
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    fn eval(&self, t: f64) -> f64 {
        let idx = self.nodes.partition_point(|&(x, _)| x <= t);
        if idx == self.nodes.len() {
            return quadrature::half_line(|s| self.integrand.eval_unchecked(s), t, 0.0, QUADRATURE_REL_TOL);
        }
        let (t1, m1) = self.nodes[idx];
        m1 + quadrature::adaptive_simpson(|s| self.integrand.eval_unchecked(s), t, t1, QUADRATURE_REL_TOL)
    }
}

/// A nonincreasing function on `(0, inf)`.
#[derive(Clone, Debug, PartialEq)]
pub enum DecayProfile {
    /// `sum_j c_j e^{-t lambda_j}`.
    SumExp(Vec<ExpTerm>),
    /// `c t^{-beta}`.
    PowerLaw { coefficient: f64, exponent: f64 },
    /// Log-linear interpolation of samples with an exponential tail.
    Tabulated(TabulatedDecay),
    /// Exact heat decay of a finite eigensystem.
    Envelope(HeatEnvelope),
    /// Exact tail integral of a scalar heat envelope.
    Piecewise(PiecewiseExp),
    /// Tail integral of another profile by quadrature.
    Integrated(Box<IntegratedDecay>),
}

impl DecayProfile {
    pub fn sum_exp(terms: Vec<ExpTerm>) -> Result<Self> {
        if terms.iter().any(|t| t.coefficient < 0.0 || t.rate < 0.0 || !t.coefficient.is_finite()) {
            return Err(Error::InvalidProfile("exponential terms need c >= 0 and rate >= 0".into()));
        }
        Ok(DecayProfile::SumExp(terms.into_iter().filter(|t| t.coefficient > 0.0).collect()))
    }

    pub fn power_law(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient > 0.0) || !(exponent > 0.0) {
            return Err(Error::InvalidProfile("power law needs positive coefficient and exponent".into()));
        }
        Ok(DecayProfile::PowerLaw {
            coefficient,
            exponent,
        })
    }

    pub fn zero() -> Self {
        DecayProfile::SumExp(Vec::new())
    }

    /// `lim_{t -> 0+} p(t)`, possibly infinite.
    pub fn value_at_zero_plus(&self) -> f64 {
        match self {
            DecayProfile::SumExp(terms) => terms.iter().map(|t| t.coefficient).sum(),
            DecayProfile::PowerLaw { .. } => f64::INFINITY,
            DecayProfile::Tabulated(t) => t.samples[0].1,
            DecayProfile::Envelope(e) => e.eval(0.0),
            DecayProfile::Piecewise(p) => p.values_at_breaks()[0],
            DecayProfile::Integrated(m) => m.nodes[0].1,
        }
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeArgument(t));
        }
        if t == 0.0 {
            if let DecayProfile::PowerLaw { .. } = self {
                return Err(Error::NonPositiveArgument(t));
            }
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match self {
            DecayProfile::SumExp(terms) => terms.iter().map(|e| e.coefficient * (-e.rate * t).exp()).sum(),
            DecayProfile::PowerLaw {
                coefficient,
                exponent,
            } => coefficient * t.powf(-exponent),
            DecayProfile::Tabulated(tab) => tab.eval(t),
            DecayProfile::Envelope(env) => env.eval(t),
            DecayProfile::Piecewise(p) => p.eval(t),
            DecayProfile::Integrated(m) => m.eval(t),
        }
    }

    /// `-p'(t)` where it is available without differentiation.
    fn negative_derivative(&self, t: f64) -> Option<f64> {
        match self {
            DecayProfile::SumExp(terms) => {
                Some(terms.iter().map(|e| e.rate * e.coefficient * (-e.rate * t).exp()).sum())
            }
            DecayProfile::PowerLaw {
                coefficient,
                exponent,
            } => Some(exponent * coefficient * t.powf(-exponent - 1.0)),
            DecayProfile::Piecewise(p) => Some(p.integrand_at(t)),
            DecayProfile::Integrated(m) => Some(m.integrand.eval_unchecked(t)),
            _ => None,
        }
    }

    /// Samples the profile on `times` (all positive) as a tabulated decay
    /// with the given tail.
    pub fn tabulate(&self, times: &[f64], tail: Option<ExpTail>) -> Result<TabulatedDecay> {
        let samples: Vec<(f64, f64)> = times.iter().map(|&t| (t, self.eval_unchecked(t))).collect();
        // Quadrature noise can make consecutive samples tick upward by an ulp.
        let mut running = f64::INFINITY;
        let samples = samples
            .into_iter()
            .map(|(t, v)| {
                running = running.min(v);
                (t, running)
            })
            .collect();
        TabulatedDecay::new(samples, tail)
    }
}

/// `inf{t > 0 : p(t) <= y}`; `0` when `p(0+) <= y`.
///
/// Continuous representations are inverted by bracketing and bisection to
/// the absolute tolerance `1e-12 (1 + t)`; profiles with an available
/// derivative take Newton steps from the left inside the bracket, which is
/// monotone for the convex tail integrals produced by [`m_transform`].
pub fn right_inverse_decreasing(p: &DecayProfile, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::NonPositiveArgument(y));
    }
    if p.value_at_zero_plus() <= y {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = bracket(p, y)?;
    let tol = |t: f64| 1e-12 * (1.0 + t);
    let newton = matches!(p, DecayProfile::Integrated(_) | DecayProfile::Piecewise(_));
    let mut f_lo = p.eval_unchecked(lo);
    for _ in 0..400 {
        if hi - lo <= tol(hi) {
            break;
        }
        let mut next = 0.5 * (lo + hi);
        if newton {
            if let Some(d) = p.negative_derivative(lo) {
                if d > 0.0 && lo > 0.0 {
                    let candidate = lo + (f_lo - y) / d;
                    if candidate > lo && candidate < hi {
                        next = candidate;
                    }
                }
            }
        }
        let f_next = p.eval_unchecked(next);
        if f_next <= y {
            hi = next;
        } else {
            if newton && next - lo <= tol(next) {
                lo = next;
                break;
            }
            lo = next;
            f_lo = f_next;
        }
    }
    Ok(if newton && hi - lo > tol(hi) { lo } else { hi })
}

fn bracket(p: &DecayProfile, y: f64) -> Result<(f64, f64)> {
    if let DecayProfile::Piecewise(pw) = p {
        let pos = pw.values_at_breaks().partition_point(|&v| v > y);
        if pos < pw.breaks().len() {
            let lo = if pos == 0 { 0.0 } else { pw.breaks()[pos - 1] };
            return Ok((lo, pw.breaks()[pos]));
        }
        let mut lo = *pw.breaks().last().unwrap();
        let mut hi = 2.0 * lo.max(1.0);
        for _ in 0..2000 {
            if p.eval_unchecked(hi) <= y {
                return Ok((lo, hi));
            }
            lo = hi;
            hi *= 2.0;
        }
        return Err(Error::Unsupported("decay profile does not reach the level".into()));
    }
    if let DecayProfile::Integrated(m) = p {
        if let Some(pos) = m.nodes.iter().position(|&(_, v)| v <= y) {
            let lo = if pos == 0 { 0.0 } else { m.nodes[pos - 1].0 };
            return Ok((lo, m.nodes[pos].0));
        }
        let mut lo = m.nodes.last().unwrap().0;
        let mut hi = 2.0 * lo.max(1e-300);
        for _ in 0..2000 {
            if p.eval_unchecked(hi) <= y {
                return Ok((lo, hi));
            }
            lo = hi;
            hi *= 2.0;
        }
        return Err(Error::Unsupported("decay profile does not reach the level".into()));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..4000 {
        if p.eval_unchecked(hi) <= y {
            return Ok((lo, hi));
        }
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::Unsupported("decay profile does not reach the level".into()))
}

/// `M(t) = int_t^inf L(s) ds`.
pub fn m_transform(l: &DecayProfile) -> Result<DecayProfile> {
    match l {
        DecayProfile::SumExp(terms) => {
            let mut out = Vec::with_capacity(terms.len());
            for term in terms {
                if !(term.rate > 0.0) {
                    return Err(Error::Divergent("exponential term with zero rate is not integrable".into()));
                }
                out.push(ExpTerm {
                    coefficient: term.coefficient / term.rate,
                    rate: term.rate,
                });
            }
            Ok(DecayProfile::SumExp(out))
        }
        DecayProfile::PowerLaw {
            coefficient,
            exponent,
        } => {
            if *exponent <= 1.0 {
                return Err(Error::Divergent(format!("t^-{exponent} is not integrable at infinity")));
            }
            // The result blows up at 0 like t^{1-beta}, still a power law.
            DecayProfile::power_law(coefficient / (exponent - 1.0), exponent - 1.0)
        }
        DecayProfile::Tabulated(tab) => {
            let tail = tab.tail.ok_or(Error::MissingTail)?;
            let samples = &tab.samples;
            let (last_t, _) = *samples.last().unwrap();
            let tail_mass = tail.coefficient * (-tail.rate * last_t).exp() / tail.rate;
            let mut values = vec![0.0; samples.len()];
            let mut acc = tail_mass;
            values[samples.len() - 1] = acc;
            for i in (0..samples.len() - 1).rev() {
                acc += quadrature::adaptive_simpson(|s| tab.eval(s), samples[i].0, samples[i + 1].0, QUADRATURE_REL_TOL);
                values[i] = acc;
            }
            let out: Vec<(f64, f64)> = samples.iter().zip(values).map(|(&(t, _), v)| (t, v)).collect();
            Ok(DecayProfile::Tabulated(TabulatedDecay::new(
                out,
                Some(ExpTail {
                    rate: tail.rate,
                    coefficient: tail.coefficient / tail.rate,
                }),
            )?))
        }
        DecayProfile::Envelope(env) if env.is_scalar() && !env.rates().is_empty() => {
            Ok(DecayProfile::Piecewise(env.integrate()))
        }
        DecayProfile::Envelope(env) => match (env.min_rate(), env.max_rate()) {
            (Some(lo), Some(hi)) => {
                let t_min = 1e-3 / hi;
                let t_max = 40.0 / lo;
                Ok(DecayProfile::Integrated(Box::new(IntegratedDecay::build(
                    l.clone(),
                    t_min,
                    t_max.max(t_min),
                ))))
            }
            _ => Ok(DecayProfile::zero()),
        },
        DecayProfile::Piecewise(_) | DecayProfile::Integrated(_) => {
            Err(Error::Unsupported("iterated tail integrals".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(c: f64, r: f64) -> DecayProfile {
        DecayProfile::sum_exp(vec![ExpTerm { coefficient: c, rate: r }]).unwrap()
    }

    #[test]
    fn inverse_decreasing_examples() {
        let p = single(0.25, 2.0);
        assert_eq!(right_inverse_decreasing(&p, 0.25).unwrap(), 0.0);
        assert_eq!(right_inverse_decreasing(&p, 1.0).unwrap(), 0.0);
        let t = right_inverse_decreasing(&p, 0.025).unwrap();
        assert!((t - 10f64.ln() / 2.0).abs() < 1e-11, "{t}");
        assert!(right_inverse_decreasing(&p, 0.0).is_err());
    }

    #[test]
    fn m_transform_examples() {
        let m = m_transform(&single(0.5, 2.0)).unwrap();
        assert_eq!(m, single(0.25, 2.0));
        let two = DecayProfile::sum_exp(vec![
            ExpTerm { coefficient: 1.0, rate: 1.0 },
            ExpTerm { coefficient: 1.0, rate: 4.0 },
        ])
        .unwrap();
        let m = m_transform(&two).unwrap();
        for t in [0.1f64, 1.0, 3.0] {
            let want = (-t).exp() + 0.25 * (-4.0 * t).exp();
            assert!((m.evaluate(t).unwrap() - want).abs() < 1e-15);
        }
        assert_eq!(m_transform(&DecayProfile::zero()).unwrap(), DecayProfile::zero());
        let flat = DecayProfile::sum_exp(vec![ExpTerm { coefficient: 1.0, rate: 0.0 }]).unwrap();
        assert!(matches!(m_transform(&flat), Err(Error::Divergent(_))));
    }

    #[test]
    fn power_law_tail() {
        let l = DecayProfile::power_law(1.0, 2.0).unwrap();
        let m = m_transform(&l).unwrap();
        assert!((m.evaluate(4.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(m_transform(&DecayProfile::power_law(1.0, 1.0).unwrap()).is_err());
        assert!(m.evaluate(0.0).is_err());
    }

    #[test]
    fn tabulated_requires_tail() {
        let tab = TabulatedDecay::new(vec![(0.0, 1.0), (1.0, 0.5)], None).unwrap();
        assert_eq!(m_transform(&DecayProfile::Tabulated(tab)), Err(Error::MissingTail));
    }

    #[test]
    fn tabulated_exponential_is_integrated_exactly() {
        let l = single(0.5, 2.0);
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let tab = l
            .tabulate(&times, Some(ExpTail { rate: 2.0, coefficient: 0.5 }))
            .unwrap();
        let m = m_transform(&DecayProfile::Tabulated(tab)).unwrap();
        for t in [0.0f64, 0.35, 1.0, 3.95, 6.0] {
            let want = 0.25 * (-2.0 * t).exp();
            assert!((m.evaluate(t).unwrap() - want).abs() < 1e-9 * want.max(1e-3), "t={t}");
        }
    }
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::spectral::{sym_eigenvalues, Flavor, SpectralOperator};
use crate::error::{Error, Result};
use crate::profiles::{DecayProfile, ExpTerm, HeatEnvelope, MonotoneProfile};

/// Which functional of the spectral projector a profile tracks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `|Pi_lambda|_{1,inf}`.
    Ultra,
    /// `D(Pi_lambda) = max_x Dnu(x)`.
    Density,
    /// `Dnu_{Pi_lambda}(x)`.
    Pointwise(usize),
    /// `nu_{Pi_lambda}(Omega)`.
    Region(Vec<usize>),
}

struct Accumulator<'a> {
    op: &'a SpectralOperator,
    kind: ProfileKind,
    diag: Vec<DMatrix<f64>>,
}

impl<'a> Accumulator<'a> {
    fn new(op: &'a SpectralOperator, kind: &ProfileKind) -> Result<Self> {
        let space = op.space();
        let kind = match kind {
            ProfileKind::Region(r) => ProfileKind::Region(space.check_region(r)?),
            ProfileKind::Pointwise(x) => {
                space.check_region(&[*x])?;
                ProfileKind::Pointwise(*x)
            }
            other => other.clone(),
        };
        let h = space.fiber_dim();
        Ok(Accumulator {
            op,
            kind,
            diag: vec![DMatrix::zeros(h, h); space.len()],
        })
    }

    fn add_modes(&mut self, modes: std::ops::Range<usize>) {
        let h = self.op.space().fiber_dim();
        let psi = self.op.vectors();
        for j in modes {
            for (x, d) in self.diag.iter_mut().enumerate() {
                let v = psi.view((x * h, j), (h, 1));
                *d += &v * v.transpose();
            }
        }
    }

    fn value(&self) -> f64 {
        let weights = self.op.space().weights();
        match &self.kind {
            ProfileKind::Ultra => self
                .diag
                .iter()
                .map(|d| {
                    if d.nrows() == 1 {
                        d[(0, 0)]
                    } else {
                        sym_eigenvalues(d.clone()).max()
                    }
                })
                .fold(0.0, f64::max),
            ProfileKind::Density => self.diag.iter().map(|d| d.trace()).fold(0.0, f64::max),
            ProfileKind::Pointwise(x) => self.diag[*x].trace(),
            ProfileKind::Region(r) => r.iter().map(|&x| self.diag[x].trace() * weights[x]).sum(),
        }
    }
}

/// Step profile `lambda -> N(Pi_lambda)` with breakpoints at the distinct
/// positive eigenvalues.
pub fn decay_profile(op: &SpectralOperator, kind: &ProfileKind, flavor: Flavor) -> Result<MonotoneProfile> {
    let mut acc = Accumulator::new(op, kind)?;
    let value_at_zero = match flavor {
        Flavor::HalfOpen => 0.0,
        Flavor::Closed => {
            acc.add_modes(0..op.kernel_dim());
            acc.value()
        }
    };
    let mut values = Vec::new();
    let mut start = op.kernel_dim();
    for (lambda, end) in op.clusters() {
        acc.add_modes(start..end);
        values.push((lambda, acc.value()));
        start = end;
    }
    MonotoneProfile::step_from_values(value_at_zero, &values)
}

/// `Dnu_{Pi_lambda}(x)` traced over clusters for every point at once:
/// values at zero and after each cluster.
fn pointwise_traces(op: &SpectralOperator, flavor: Flavor) -> (Vec<f64>, Vec<(f64, Vec<f64>)>) {
    let h = op.space().fiber_dim();
    let n = op.space().len();
    let psi = op.vectors();
    let mut acc = vec![0.0; n];
    let add = |acc: &mut Vec<f64>, modes: std::ops::Range<usize>| {
        for j in modes {
            for (x, a) in acc.iter_mut().enumerate() {
                *a += psi.view((x * h, j), (h, 1)).norm_squared();
            }
        }
    };
    if flavor == Flavor::Closed {
        add(&mut acc, 0..op.kernel_dim());
    }
    let at_zero = acc.clone();
    let mut start = op.kernel_dim();
    let mut steps = Vec::new();
    for (lambda, end) in op.clusters() {
        add(&mut acc, start..end);
        steps.push((lambda, acc.clone()));
        start = end;
    }
    (at_zero, steps)
}

/// `F_x` for every point `x`.
pub fn pointwise_profiles(op: &SpectralOperator, flavor: Flavor) -> Result<Vec<MonotoneProfile>> {
    let (zero, steps) = pointwise_traces(op, flavor);
    (0..op.space().len())
        .map(|x| {
            let values: Vec<(f64, f64)> = steps.iter().map(|(l, v)| (*l, v[x])).collect();
            MonotoneProfile::step_from_values(zero[x], &values)
        })
        .collect()
}

/// `F_{Omega_i}` for every part of a partition (or any list of regions).
pub fn region_profiles(op: &SpectralOperator, parts: &[Vec<usize>], flavor: Flavor) -> Result<Vec<MonotoneProfile>> {
    let space = op.space();
    let parts: Vec<Vec<usize>> = parts.iter().map(|r| space.check_region(r)).collect::<Result<_>>()?;
    let (zero, steps) = pointwise_traces(op, flavor);
    let w = space.weights();
    let measure = |v: &[f64], r: &[usize]| r.iter().map(|&x| v[x] * w[x]).sum::<f64>();
    parts
        .iter()
        .map(|r| {
            let values: Vec<(f64, f64)> = steps.iter().map(|(l, v)| (*l, measure(v, r))).collect();
            MonotoneProfile::step_from_values(measure(&zero, r), &values)
        })
        .collect()
}

/// Heat decay `t -> N(e^{-tA} Pi_V)` with `V = (ker A)^perp`, exact.
pub fn heat_decay(op: &SpectralOperator, kind: &ProfileKind) -> Result<DecayProfile> {
    let space = op.space();
    let h = space.fiber_dim();
    let modes: Vec<usize> = (op.kernel_dim()..op.dim()).collect();
    if modes.is_empty() {
        if let ProfileKind::Region(r) = kind {
            space.check_region(r)?;
        }
        return Ok(DecayProfile::zero());
    }
    let rates: Vec<f64> = modes.iter().map(|&j| op.eigenvalues()[j]).collect();
    let psi = op.vectors();
    let squared = |x: usize, j: usize| psi.view((x * h, j), (h, 1)).norm_squared();
    match kind {
        ProfileKind::Ultra | ProfileKind::Density => {
            let values = (0..space.len())
                .map(|x| DMatrix::from_fn(h, modes.len(), |a, c| psi[(x * h + a, modes[c])]))
                .collect();
            Ok(DecayProfile::Envelope(HeatEnvelope::new(
                rates,
                h,
                values,
                *kind == ProfileKind::Ultra,
            )?))
        }
        ProfileKind::Pointwise(x) => {
            space.check_region(&[*x])?;
            let terms = modes
                .iter()
                .zip(&rates)
                .map(|(&j, &rate)| ExpTerm {
                    coefficient: squared(*x, j),
                    rate,
                })
                .collect();
            DecayProfile::sum_exp(terms)
        }
        ProfileKind::Region(r) => {
            let r = space.check_region(r)?;
            let terms = modes
                .iter()
                .zip(&rates)
                .map(|(&j, &rate)| ExpTerm {
                    coefficient: r.iter().map(|&x| squared(x, j) * space.weights()[x]).sum(),
                    rate,
                })
                .collect();
            DecayProfile::sum_exp(terms)
        }
    }
}

/// Step profile of `|A^{-1} Pi_lambda|_{1,inf}`.
pub fn inverse_ultra_profile(op: &SpectralOperator) -> Result<MonotoneProfile> {
    let values: Vec<(f64, f64)> = op
        .clusters()
        .iter()
        .map(|&(lambda, _)| (lambda, op.inverse_projector(lambda).ultra_norm_psd()))
        .collect();
    MonotoneProfile::step_from_values(0.0, &values)
}

/// Rejects a kind that names points outside the space.
pub fn check_kind(op: &SpectralOperator, kind: &ProfileKind) -> Result<()> {
    match kind {
        ProfileKind::Region(r) => op.space().check_region(r).map(|_| ()),
        ProfileKind::Pointwise(x) if *x >= op.space().len() => {
            Err(Error::InvalidSpace(format!("point {x} out of range")))
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::families;

    #[test]
    fn c4_density_profile() {
        let op = families::cycle(4).unwrap();
        let f = decay_profile(&op, &ProfileKind::Density, Flavor::HalfOpen).unwrap();
        assert!((f.evaluate(2.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((f.evaluate(4.0).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(f.evaluate(1.9).unwrap(), 0.0);
        let closed = decay_profile(&op, &ProfileKind::Density, Flavor::Closed).unwrap();
        assert!((closed.value_at_zero() - 0.25).abs() < 1e-12);
        assert!((closed.evaluate(4.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k2_ultra_and_region() {
        let op = families::complete(2).unwrap();
        let f = decay_profile(&op, &ProfileKind::Ultra, Flavor::HalfOpen).unwrap();
        let s = f.as_step().unwrap();
        assert_eq!(s.positions().len(), 1);
        assert!((s.positions()[0] - 2.0).abs() < 1e-12);
        assert!((s.increments()[0] - 0.5).abs() < 1e-12);
        let r = decay_profile(&op, &ProfileKind::Region(vec![0]), Flavor::HalfOpen).unwrap();
        assert!((r.evaluate(2.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(r.evaluate(1.0).unwrap(), 0.0);
        assert!(matches!(
            decay_profile(&op, &ProfileKind::Region(vec![]), Flavor::HalfOpen),
            Err(Error::EmptyRegion)
        ));
    }

    #[test]
    fn batched_profiles_match_single() {
        let op = families::path(5).unwrap();
        for flavor in [Flavor::HalfOpen, Flavor::Closed] {
            let all = pointwise_profiles(&op, flavor).unwrap();
            let parts = vec![vec![0, 1], vec![2], vec![3, 4]];
            let regions = region_profiles(&op, &parts, flavor).unwrap();
            for lambda in [0.0, 0.3, 1.0, 2.5, 4.0] {
                for (x, p) in all.iter().enumerate() {
                    let single = decay_profile(&op, &ProfileKind::Pointwise(x), flavor).unwrap();
                    assert!((p.evaluate(lambda).unwrap() - single.evaluate(lambda).unwrap()).abs() < 1e-13);
                }
                for (r, p) in parts.iter().zip(&regions) {
                    let single = decay_profile(&op, &ProfileKind::Region(r.clone()), flavor).unwrap();
                    assert!((p.evaluate(lambda).unwrap() - single.evaluate(lambda).unwrap()).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn k2_heat_decay() {
        let op = families::complete(2).unwrap();
        let l = heat_decay(&op, &ProfileKind::Ultra).unwrap();
        for t in [0.0f64, 0.5, 3.0] {
            assert!((l.evaluate(t).unwrap() - 0.5 * (-2.0 * t).exp()).abs() < 1e-14);
        }
        let m = crate::profiles::m_transform(&l).unwrap();
        for t in [0.0f64, 0.5, 3.0] {
            assert!((m.evaluate(t).unwrap() - 0.25 * (-2.0 * t).exp()).abs() < 1e-14);
        }
    }
}

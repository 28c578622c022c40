use super::context::Context;
use super::report::{worst_of, InequalityReport, VerifyConfig};
use crate::error::Result;
use crate::operators::{Flavor, SpectralOperator};
use crate::profiles::laplace_stieltjes;

/// Relative spread below which all pointwise profiles count as equal.
const CONSTANT_DENSITY_TOL: f64 = 1e-12;

impl Context<'_> {
    /// Whether every spectral projector has a constant density, as for
    /// operators invariant under a transitive group.
    pub fn has_constant_density(&self) -> Result<bool> {
        let points = self.pointwise(Flavor::HalfOpen)?;
        let Some(first) = points.first() else {
            return Ok(true);
        };
        let grid = first.breakpoints();
        for p in &points[1..] {
            for &l in &grid {
                let (a, b) = (first.evaluate(l)?, p.evaluate(l)?);
                if (a - b).abs() > CONSTANT_DENSITY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Ok(false);
                }
            }
            if p.breakpoints().len() != grid.len() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Log-spaced times spanning the decay scales of the spectrum.
    fn time_grid(&self) -> Vec<f64> {
        let (Some(lo), hi) = (self.op.lambda_min_positive(), self.op.lambda_max()) else {
            return vec![1.0];
        };
        let (a, b) = ((1e-2 / hi).ln(), (10.0 / lo).ln());
        let n = self.cfg.heat_grid;
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
    }

    /// Heat decay against Laplace transforms of the spectral profiles:
    /// `L(t) <= L(dF)(t)` and `M(t) <= L(dG)(t)`. When the density is
    /// constant in space, also the reverse bounds with the fiber factor `h`:
    /// `L(dF) <= h L`, `L(dG) <= h M` and `G(y) <= h e M(1/y)`.
    pub fn heat_spectral(&self) -> Result<Vec<InequalityReport>> {
        let f = self.ultra(Flavor::HalfOpen)?;
        let g = self.g_ultra()?;
        let l = self.l_ultra()?;
        let m = self.m_ultra()?;
        let times = self.time_grid();
        let mut rows = Vec::with_capacity(times.len());
        for &t in &times {
            rows.push((
                t,
                l.evaluate(t)?,
                laplace_stieltjes(f, t)?,
                m.evaluate(t)?,
                laplace_stieltjes(g, t)?,
            ));
        }
        let invariant = self.has_constant_density()?;
        let witness = self
            .witness(String::new())
            .param("constant_density", if invariant { 1.0 } else { 0.0 });
        let cfg = &self.cfg;
        let mut out = vec![
            worst_of(
                "heat-spectral-l",
                rows.iter().map(|r| (r.0, r.1, r.2)),
                witness.clone(),
                "t",
                cfg,
            ),
            worst_of(
                "heat-spectral-m",
                rows.iter().map(|r| (r.0, r.3, r.4)),
                witness.clone(),
                "t",
                cfg,
            ),
        ];
        if invariant {
            let h = self.op.space().fiber_dim() as f64;
            out.push(worst_of(
                "heat-spectral-l-reverse",
                rows.iter().map(|r| (r.0, r.2, h * r.1)),
                witness.clone(),
                "t",
                cfg,
            ));
            out.push(worst_of(
                "heat-spectral-m-reverse",
                rows.iter().map(|r| (r.0, r.4, h * r.3)),
                witness.clone(),
                "t",
                cfg,
            ));
            let cases = rows
                .iter()
                .map(|r| Ok((1.0 / r.0, g.evaluate(1.0 / r.0)?, h * std::f64::consts::E * r.3)))
                .collect::<Result<Vec<_>>>()?;
            out.push(worst_of("g-vs-m", cases, witness, "y", cfg));
        }
        Ok(out)
    }
}

pub fn compare_heat_spectral(op: &SpectralOperator, cfg: &VerifyConfig) -> Result<Vec<InequalityReport>> {
    Context::new(op, cfg).heat_spectral()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::families;

    #[test]
    fn k2_equality() {
        let op = families::complete(2).unwrap();
        let reports = compare_heat_spectral(&op, &VerifyConfig::default()).unwrap();
        assert_eq!(reports.len(), 5);
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
        assert!(reports[0].margin.abs() < 1e-15);
    }

    #[test]
    fn c4_group_bound() {
        let op = families::cycle(4).unwrap();
        let reports = compare_heat_spectral(&op, &VerifyConfig::default()).unwrap();
        let gm = reports.iter().find(|r| r.id == "g-vs-m").unwrap();
        assert!(gm.pass && gm.margin > 0.0);
    }

    #[test]
    fn path_is_not_invariant() {
        let op = families::path(5).unwrap();
        let reports = compare_heat_spectral(&op, &VerifyConfig::default()).unwrap();
        assert_eq!(reports.len(), 2);
        assert!(reports.iter().all(|r| r.pass));
    }
}

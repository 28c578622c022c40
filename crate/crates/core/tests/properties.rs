use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specdens_core::cohomology::{PeriodicComplex, SimplicialComplex};
use specdens_core::invariant::{rn_laplacian_profile, symbol_density_profile, TorusSymbol};
use specdens_core::operators::{
    decay_profile, dirichlet_counting, energy, families, inverse_ultra_profile, DirichletSpace,
};
use specdens_core::profiles::{check_doubling, g_transform, h_of, laplace_stieltjes, Representation};
use specdens_core::verifiers::{verify_h_sobolev, verify_rho_moser_integral, verify_rho_sobolev, VerifyConfig};
use specdens_core::{DensityState, Extended, Flavor, MonotoneProfile, ProfileKind};

fn step_profile() -> impl Strategy<Value = MonotoneProfile> {
    (
        prop::collection::vec((1e-3f64..5.0, 1e-3f64..3.0), 1..8),
        prop_oneof![Just(0.0), 0.0f64..1.0],
    )
        .prop_map(|(raw, at_zero)| {
            let mut pos = 0.0;
            let bps: Vec<(f64, f64)> = raw
                .into_iter()
                .map(|(gap, inc)| {
                    pos += gap;
                    (pos, inc)
                })
                .collect();
            MonotoneProfile::step(at_zero, &bps).unwrap()
        })
}

fn any_profile() -> impl Strategy<Value = MonotoneProfile> {
    prop_oneof![
        3 => step_profile(),
        1 => (1e-2f64..1e2, 0.2f64..4.0).prop_map(|(c, a)| MonotoneProfile::power(c, a).unwrap()),
    ]
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #[test]
    fn right_inverse_is_a_section(f in any_profile(), y in 1e-4f64..20.0) {
        if let Extended::Finite(l) = f.right_inverse(y) {
            prop_assert!(f.evaluate(l).unwrap() >= y * (1.0 - 1e-12));
        }
    }

    #[test]
    fn young_type_inequality(f in any_profile(), s in 0.0f64..50.0, t in 0.0f64..50.0) {
        let rhs = Extended::Finite(s * f.evaluate(s).unwrap()).add(f.right_inverse(t).weighted(t));
        if let Extended::Finite(r) = rhs {
            prop_assert!(s * t <= r * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn g_is_monotone_and_h_antitone(f in step_profile(), extra in step_profile(), y in 1e-3f64..10.0) {
        let f1 = MonotoneProfile::step(0.0, &increments(&f)).unwrap();
        let mut both = increments(&f1);
        both.extend(increments(&extra));
        both.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (p, inc) in both {
            match merged.last_mut() {
                Some(last) if last.0 == p => last.1 += inc,
                _ => merged.push((p, inc)),
            }
        }
        let f2 = MonotoneProfile::step(0.0, &merged).unwrap();
        let g1 = g_transform(&f1).unwrap();
        let g2 = g_transform(&f2).unwrap();
        for l in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 40.0] {
            prop_assert!(f1.evaluate(l).unwrap() <= f2.evaluate(l).unwrap() * (1.0 + 1e-12));
            prop_assert!(g1.evaluate(l).unwrap() <= g2.evaluate(l).unwrap() * (1.0 + 1e-12));
        }
        let (h1, h2) = (h_of(&g1, y).to_f64(), h_of(&g2, y).to_f64());
        prop_assert!(h1 >= h2 * (1.0 - 1e-12));
    }

    #[test]
    fn doubling_bounds_lambda_g(c in 1e-2f64..1e2, alpha in 1.05f64..5.0, frac in 0.01f64..0.99) {
        let f = MonotoneProfile::power(c, alpha).unwrap();
        let eps = frac * (2f64.powf(alpha - 1.0) - 1.0);
        prop_assert!(check_doubling(&f, eps, 10.0, 32));
        let g = g_transform(&f).unwrap();
        for k in 1..=32 {
            let l = 10.0 * k as f64 / 32.0;
            let (fl, lg) = (f.evaluate(l).unwrap(), l * g.evaluate(l).unwrap());
            prop_assert!(lg >= fl * (1.0 - 1e-12));
            prop_assert!(lg <= (2.0 + 1.0 / eps) * fl * (1.0 + 1e-12));
        }
    }

    #[test]
    fn laplace_of_g_is_termwise(f in step_profile(), t in 0.0f64..5.0) {
        let f = MonotoneProfile::step(0.0, &increments(&f)).unwrap();
        let g = g_transform(&f).unwrap();
        let direct: f64 = increments(&f).iter().map(|&(p, inc)| inc / p * (-p * t).exp()).sum();
        let got = laplace_stieltjes(&g, t).unwrap();
        prop_assert!((got - direct).abs() <= 1e-12 * direct.max(1.0));
    }
}

fn increments(f: &MonotoneProfile) -> Vec<(f64, f64)> {
    let s = f.as_step().unwrap();
    s.positions().iter().copied().zip(s.increments().iter().copied()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_sandwich(seed in any::<u64>(), h in 1usize..=3, n in 2usize..9, q in 0.0f64..1.0) {
        let mut r = rng(seed);
        let op = families::random_block_operator(&mut r, n, h, 0.5).unwrap();
        let lambda = q * op.lambda_max();
        for flavor in [Flavor::HalfOpen, Flavor::Closed] {
            let k = op.projector(flavor, lambda);
            let ultra = k.ultra_norm();
            let dens = k.density_sup().unwrap();
            prop_assert!(ultra <= dens + 1e-12);
            prop_assert!(dens <= h as f64 * ultra + 1e-12);
        }
    }

    #[test]
    fn measure_is_additive(seed in any::<u64>(), n in 2usize..12) {
        let mut r = rng(seed);
        let op = families::random_graph(&mut r, n, 0.5, true).unwrap();
        let parts: Vec<(f64, DVector<f64>)> = (0..3)
            .map(|_| (r.random_range(0.1..1.0), DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0))))
            .collect();
        let rho = DensityState::mixture(op.space().clone(), &parts).unwrap();
        let split = r.random_range(1..n);
        let (a, b): (Vec<usize>, Vec<usize>) = ((0..split).collect(), (split..n).collect());
        let all: Vec<usize> = (0..n).collect();
        let sum = rho.region_measure(&a).unwrap() + rho.region_measure(&b).unwrap();
        prop_assert!((rho.region_measure(&all).unwrap() - sum).abs() < 1e-12 * sum.max(1.0));
        prop_assert!((rho.region_measure(&all).unwrap() - rho.trace()).abs() < 1e-12 * sum.max(1.0));
    }

    #[test]
    fn spectral_telescoping(seed in any::<u64>(), n in 2usize..16) {
        let mut r = rng(seed);
        let op = families::random_graph(&mut r, n, 0.4, true).unwrap();
        let f = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
        let c = op.coefficients(&f).unwrap();
        let telescoped: f64 = op.eigenvalues().iter().zip(c.iter()).map(|(l, c)| l * c * c).sum();
        let e = energy(&op, &f).unwrap();
        prop_assert!((telescoped - e).abs() <= 1e-10 * e.max(1.0));
    }

    #[test]
    fn full_space_dirichlet_counting(seed in any::<u64>(), n in 2usize..14, q in 0.0f64..1.2) {
        let mut r = rng(seed);
        let op = families::random_graph(&mut r, n, 0.4, true).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let mut lambdas = vec![q * op.lambda_max()];
        lambdas.extend(op.eigenvalues().iter().copied());
        for lambda in lambdas {
            let want = op.eigenvalues().iter().filter(|&&l| l <= lambda * (1.0 + 1e-9) + 1e-12).count();
            let got = dirichlet_counting(&op, &all, lambda, DirichletSpace::Supported).unwrap();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn inverse_projector_is_dominated_by_g(seed in any::<u64>(), n in 2usize..14) {
        let mut r = rng(seed);
        let op = families::random_graph(&mut r, n, 0.4, true).unwrap();
        let inv = inverse_ultra_profile(&op).unwrap();
        let g = g_transform(&decay_profile(&op, &ProfileKind::Ultra, Flavor::HalfOpen).unwrap()).unwrap();
        for (lambda, _) in op.clusters() {
            let (a, b) = (inv.evaluate(lambda).unwrap(), g.evaluate(lambda).unwrap());
            prop_assert!(a <= b * (1.0 + 1e-10) + 1e-12);
        }
    }

    #[test]
    fn verdicts_are_scale_invariant(seed in any::<u64>(), n in 3usize..12, c in 1e-3f64..1e3) {
        let mut r = rng(seed);
        let op = families::random_graph(&mut r, n, 0.5, true).unwrap();
        let cfg = VerifyConfig::default();
        let raw = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
        let Ok((f, _)) = op.project_out_kernel(&raw) else { return Ok(()) };
        let Ok(a) = verify_h_sobolev(&op, &f, &cfg) else { return Ok(()) };
        let b = verify_h_sobolev(&op, &(&f * c), &cfg).unwrap();
        prop_assert_eq!(a.pass, b.pass);
        prop_assert!((a.lhs - b.lhs).abs() <= 1e-9 * a.lhs.max(1.0));
        let rho = DensityState::pure(op.space().clone(), &f).unwrap();
        if let Ok((rho, _)) = rho.project_out_kernel(&op) {
            let a = verify_rho_sobolev(&op, &rho, &cfg).unwrap();
            let b = verify_rho_sobolev(&op, &rho.scaled(c), &cfg).unwrap();
            prop_assert_eq!(a.pass, b.pass);
        }
    }

    #[test]
    fn closed_flavor_cuts_off_kernel_states(seed in any::<u64>(), n in 2usize..12) {
        let mut r = rng(seed);
        let op = families::random_graph(&mut r, n, 0.3, true).unwrap();
        let rho = DensityState::from_kernel(&op.projector(Flavor::Closed, 0.0)).unwrap();
        let rep = verify_rho_moser_integral(&op, &rho, Flavor::Closed, &VerifyConfig::default()).unwrap();
        prop_assert_eq!(rep.lhs, 0.0);
        prop_assert!(rep.pass);
    }

    #[test]
    fn coboundaries_square_to_zero(tris in prop::collection::vec((0usize..7, 0usize..7, 0usize..7), 1..10)) {
        let simplices: Vec<Vec<usize>> = tris
            .into_iter()
            .filter(|(a, b, c)| a != b && b != c && a != c)
            .map(|(a, b, c)| vec![a, b, c])
            .collect();
        prop_assume!(!simplices.is_empty());
        let cx = SimplicialComplex::closure(simplices).unwrap();
        for k in 0..cx.dim() {
            cx.check_nilpotent(k).unwrap();
        }
    }

    #[test]
    fn twisted_coboundaries_square_to_zero(x in 0.0f64..std::f64::consts::TAU, y in 0.0f64..std::f64::consts::TAU) {
        let text = "0 1 3\n0 2 3\n1 -> 0 + (1, 0)\n2 -> 0 + (0, 1)\n3 -> 0 + (1, 1)\n";
        let specdens_core::cohomology::ComplexFile::Periodic(p) =
            specdens_core::cohomology::parse_complex(text).unwrap() else { unreachable!() };
        p.check_nilpotent(0).unwrap();
        let d0 = p.twisted_coboundary(0, &[x, y]).unwrap();
        let d1 = p.twisted_coboundary(1, &[x, y]).unwrap();
        prop_assert!((d1 * d0).iter().all(|z| z.norm() < 1e-12));
        let g = PeriodicComplex::grid(3).unwrap();
        g.check_nilpotent(0).unwrap();
    }

    #[test]
    fn symbol_profile_is_monotone_and_bounded(d in 1usize..=2, half in 4usize..32) {
        let sym = TorusSymbol::lattice_laplacian(d).unwrap();
        let grid: Vec<f64> = (1..=40).map(|i| sym.bound() * 1.1 * i as f64 / 40.0).collect();
        let gp = symbol_density_profile(&sym, &grid, 2 * half, None).unwrap();
        let mut prev = 0.0;
        for &l in &grid {
            let v = gp.profile.evaluate(l).unwrap();
            prop_assert!(v >= prev && v <= sym.fiber_dim() as f64 + 1e-12);
            prev = v;
        }
    }
}

#[test]
fn continuum_g_matches_closed_form() {
    for n in 3..12 {
        let f = rn_laplacian_profile(n).unwrap();
        let Representation::Power { coefficient, .. } = f.representation() else { panic!() };
        let g = g_transform(&f).unwrap();
        let nf = n as f64;
        for l in [0.1f64, 1.0, 7.0] {
            let want = nf * coefficient / (nf - 2.0) * l.powf(nf / 2.0 - 1.0);
            assert!((g.evaluate(l).unwrap() - want).abs() <= 1e-13 * want);
        }
    }
}

#[test]
fn cycle_profiles_approach_the_lattice_symbol() {
    let sym = TorusSymbol::lattice_laplacian(1).unwrap();
    let mut errors = Vec::new();
    for n in [16usize, 64, 256] {
        let op = families::cycle(n).unwrap();
        let f = decay_profile(&op, &ProfileKind::Density, Flavor::HalfOpen).unwrap();
        let grid: Vec<f64> = op.clusters().iter().map(|c| c.0).collect();
        let gp = symbol_density_profile(&sym, &grid, 4096, None).unwrap();
        let worst = grid
            .iter()
            .map(|&l| (f.evaluate(l).unwrap() - gp.profile.evaluate(l).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1.0 / n as f64 + gp.error_estimate, "N={n}: {worst}");
        errors.push(worst);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

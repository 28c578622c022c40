use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use specdens_bench::{lambda_grid, torus_2d};
use specdens_core::cohomology::PeriodicComplex;
use specdens_core::invariant::{symbol_density_profile, TorusSymbol};
use specdens_core::operators::{decay_profile, families, SpectralOperator, DEFAULT_KERNEL_THRESHOLD};
use specdens_core::{Flavor, ProfileKind};

fn diagonalize(c: &mut Criterion) {
    let mut group = c.benchmark_group("diagonalize");
    group.sample_size(10);
    for side in [8, 16] {
        let op = torus_2d(side);
        let form = op.form();
        let space = op.space().clone();
        group.bench_with_input(BenchmarkId::from_parameter(side * side), &side, |b, _| {
            b.iter(|| SpectralOperator::from_form(black_box(&form), space.clone(), DEFAULT_KERNEL_THRESHOLD).unwrap())
        });
    }
    group.finish();
}

fn profiles(c: &mut Criterion) {
    let mut group = c.benchmark_group("decay_profile");
    let op = families::cycle(128).unwrap();
    for (name, kind) in [("ultra", ProfileKind::Ultra), ("density", ProfileKind::Density)] {
        group.bench_function(name, |b| b.iter(|| decay_profile(black_box(&op), &kind, Flavor::HalfOpen).unwrap()));
    }
    group.finish();
}

fn symbols(c: &mut Criterion) {
    let mut group = c.benchmark_group("symbol_density_profile");
    group.sample_size(10);
    for (d, r) in [(1, 4096), (2, 256)] {
        let sym = TorusSymbol::lattice_laplacian(d).unwrap();
        let grid = lambda_grid(sym.bound(), 64);
        group.bench_with_input(BenchmarkId::new(format!("d{d}"), r), &r, |b, &r| {
            b.iter(|| symbol_density_profile(&sym, black_box(&grid), r, None).unwrap())
        });
    }
    group.finish();
}

fn floquet(c: &mut Criterion) {
    let mut group = c.benchmark_group("floquet_density_profile");
    group.sample_size(10);
    let grid = lambda_grid(8.0, 64);
    for (name, cx, r) in [("line", PeriodicComplex::line(), 4096), ("grid2", PeriodicComplex::grid(2).unwrap(), 128)] {
        group.bench_function(name, |b| b.iter(|| cx.floquet_density_profile(0, r, black_box(&grid), None).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, diagonalize, profiles, symbols, floquet);
criterion_main!(benches);

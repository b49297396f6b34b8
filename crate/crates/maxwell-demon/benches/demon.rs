//! Benchmarks for the batch entry points and their numeric cores.
//!
//! Group names carry the active execution mode, so
//! `cargo bench` (rayon) and `cargo bench --no-default-features`
//! (sequential) write distinguishable baselines that can be compared
//! directly.

use std::time::Duration;

use criterion::{Criterion, criterion_group, criterion_main};

use maxwell_demon::dilation::{
    brute_force_min_entropy, build_standard_dilation, entropy_balance, verify_dilation,
};
use maxwell_demon::exec;
use maxwell_demon::instruments::Instrument;
use maxwell_demon::linalg::polar_decompose;
use maxwell_demon::sampling::{
    ginibre, haar_unitary, random_density, random_projection_family, rng_from,
};
use maxwell_demon::scenarios::{
    erasure_families, parameter_grid, run_property_suite, run_simple_qmd_sweep,
};

fn batch_entry_points(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("batch/{}", exec::MODE));
    group.sample_size(10).measurement_time(Duration::from_secs(8));

    let (ps, us) = erasure_families(3).unwrap();
    let instr = Instrument::maxwell(&ps, &us).unwrap();
    let spec = build_standard_dilation(&ps, &us).unwrap();
    group.bench_function("verify-dilation-8d-32-trials", |b| {
        b.iter(|| verify_dilation(&spec, &instr, 32, 7).unwrap())
    });

    let grid = parameter_grid(0.05, 0.95, 0.05).unwrap();
    group.bench_function("bias-sweep-19-rows", |b| {
        b.iter(|| run_simple_qmd_sweep(&grid).unwrap())
    });

    group.bench_function("property-suite-24-trials", |b| {
        b.iter(|| run_property_suite(5, 3, 24, 11, false).unwrap())
    });

    let mut rng = rng_from(13);
    let rho = random_density(4, &mut rng);
    let family = random_projection_family(4, 3, &mut rng);
    group.bench_function("entropy-search-128-samples", |b| {
        b.iter(|| brute_force_min_entropy(&rho, &family, 128, 5).unwrap())
    });
    group.finish();
}

fn numeric_cores(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("core/{}", exec::MODE));
    group.sample_size(20).measurement_time(Duration::from_secs(5));

    group.bench_function("haar-unitary-16d", |b| {
        let mut rng = rng_from(3);
        b.iter(|| haar_unitary(16, &mut rng))
    });

    let mut rng = rng_from(5);
    let a = ginibre(16, &mut rng);
    group.bench_function("polar-decompose-16d", |b| {
        b.iter(|| polar_decompose(&a).unwrap())
    });

    let (ps, us) = erasure_families(3).unwrap();
    let instr = Instrument::maxwell(&ps, &us).unwrap();
    let spec = build_standard_dilation(&ps, &us).unwrap();
    let rho = random_density(8, &mut rng);
    group.bench_function("entropy-balance-8d", |b| {
        b.iter(|| entropy_balance(&spec, &instr, &rho).unwrap())
    });
    group.finish();
}

criterion_group!(benches, batch_entry_points, numeric_cores);
criterion_main!(benches);

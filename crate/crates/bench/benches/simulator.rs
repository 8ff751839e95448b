//! Benchmarks for the hot paths: schedule evolution under noise, the
//! four-round measurement, maximum-likelihood reconstruction, and a short
//! randomized-benchmarking pass.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use trimon_core::algorithms::{run_algorithm, Algorithm, QftInput};
use trimon_core::channels::{calibrate_readout, evolve_schedule, measure_populations, NoiseModel};
use trimon_core::device::DeviceParams;
use trimon_core::experiments::{
    acquire_tomography, mle_reconstruct, prepare_reference, run_rb, RbConfig, ReferenceState,
};
use trimon_core::sampling;
use trimon_core::state::{BasisIndex, DensityMatrix};
use trimon_core::Transition;

fn bench_evolve_schedule(c: &mut Criterion) {
    let dev = DeviceParams::reference();
    let noise = NoiseModel::from_device(&dev);
    let sched = prepare_reference(&dev, ReferenceState::Ghz);
    let rho = DensityMatrix::pure(BasisIndex::new(0).unwrap());
    c.bench_function("evolve_schedule_ghz_noisy", |b| {
        b.iter(|| evolve_schedule(black_box(&rho), black_box(&sched), &noise).unwrap())
    });
}

fn bench_measure_populations(c: &mut Criterion) {
    let dev = DeviceParams::reference();
    let noise = NoiseModel::from_device(&dev);
    let model = calibrate_readout((0.951, 0.852), &dev).unwrap();
    let rho = DensityMatrix::maximally_mixed();
    c.bench_function("measure_populations_10k_shots", |b| {
        b.iter(|| {
            let mut rng = sampling::stream_from_seed(7);
            measure_populations(black_box(&rho), 10_000, &model, &noise, &dev, &mut rng).unwrap()
        })
    });
}

fn bench_mle(c: &mut Criterion) {
    let dev = DeviceParams::reference();
    let noise = NoiseModel::from_device(&dev);
    let prep = prepare_reference(&dev, ReferenceState::Ghz);
    let record = acquire_tomography(&prep, &dev, &noise, None, 0, 0).unwrap();
    c.bench_function("mle_reconstruct_ghz", |b| {
        b.iter(|| mle_reconstruct(black_box(&record)).unwrap())
    });
}

fn bench_rb(c: &mut Criterion) {
    let dev = DeviceParams::reference();
    let noise = NoiseModel::from_device(&dev);
    let mut config = RbConfig::new(Transition::parse("CA1B1").unwrap());
    config.lengths = vec![1, 5, 10, 20];
    config.sequences_per_length = 3;
    config.shots = 1000;
    c.bench_function("rb_short_noisy", |b| {
        b.iter(|| {
            let mut rng = sampling::stream_from_seed(3);
            run_rb(black_box(&config), &dev, &noise, None, &mut rng).unwrap()
        })
    });
}

fn bench_algorithms(c: &mut Criterion) {
    let dev = DeviceParams::reference();
    let noise = NoiseModel::disabled();
    c.bench_function("grover_ideal_20k_shots", |b| {
        b.iter(|| {
            run_algorithm(
                black_box(Algorithm::Grover(BasisIndex::new(5).unwrap())),
                &dev,
                &noise,
                None,
                20_000,
                42,
            )
            .unwrap()
        })
    });
    c.bench_function("qft_phase_exact", |b| {
        b.iter(|| {
            run_algorithm(
                black_box(Algorithm::Qft(QftInput::Phase(1.0))),
                &dev,
                &noise,
                None,
                0,
                0,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_evolve_schedule,
    bench_measure_populations,
    bench_mle,
    bench_rb,
    bench_algorithms
);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use deltakick::kernel::kernel_moments;
use deltakick::volterra::solve;
use deltakick::{m_kernel, simulate, DriveSpec, InitialState, MomentumGrid, RunOptions, TimeGrid};

fn kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("m_kernel");
    for s in [1e-3, 0.5, 5.0, 200.0] {
        group.bench_with_input(BenchmarkId::from_parameter(s), &s, |b, &s| {
            b.iter(|| m_kernel(black_box(s)))
        });
    }
    group.finish();
}

fn moments(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_moments");
    group.sample_size(10);
    for count in [1_000, 10_000] {
        group.bench_with_input(BenchmarkId::from_parameter(count), &count, |b, &n| {
            b.iter(|| kernel_moments(0.01, n).unwrap())
        });
    }
    group.finish();
}

fn stepper(c: &mut Criterion) {
    let drive = DriveSpec::harmonic(0.2, 2.0);
    let kg = MomentumGrid::default();
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for count in [2_000, 20_000] {
        let tg = TimeGrid::new(0.01, count).unwrap();
        let m = kernel_moments(tg.step, tg.count).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(count), &count, |b, _| {
            b.iter(|| solve(&drive, &InitialState::bound(), &tg, &kg, &m).unwrap())
        });
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let drive = DriveSpec::harmonic(0.2, 2.0);
    let tg = TimeGrid::new(0.01, 5_000).unwrap();
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    for (name, track) in [("survival_only", false), ("with_spectrum", true)] {
        let snapshots = if track { vec![50.0] } else { Vec::new() };
        let options = RunOptions {
            snapshot_times: snapshots,
            track_spectrum: track,
            ..RunOptions::default()
        };
        group.bench_function(name, |b| {
            b.iter(|| {
                simulate(
                    &drive,
                    &InitialState::bound(),
                    &tg,
                    &MomentumGrid::default(),
                    &options,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, kernel, moments, stepper, spectrum);
criterion_main!(benches);

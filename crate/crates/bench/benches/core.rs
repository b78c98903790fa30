use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polarosc_core::atomic::{optical_response, steady_state, AtomicParams, DriveField};
use polarosc_core::cavity::{
    optimal_phase, roundtrip, run_campaign, run_to_steady_state, CavityParams,
};
use polarosc_core::ising::{brute_force_ground_state, parse_instance, solve, IsingProblem};
use polarosc_core::stats::autocorrelation;
use polarosc_core::{Complex64, HelicitySequence, Medium, PolarizationState};

const RANDOM12: &str = include_str!("../../core/tests/fixtures/ising/random12.txt");

fn setup() -> (CavityParams, Medium) {
    let gl = 1.0;
    (
        CavityParams::new(0.9, optimal_phase(gl)).unwrap(),
        Medium::with_gain(0.1, 10.0, gl).unwrap(),
    )
}

fn atomic(c: &mut Criterion) {
    let params = AtomicParams::from_detuning_ratio(0.3, 1.0).unwrap();
    let drive = DriveField::from_ellipticity(&params, 10.0, 0.2).unwrap();
    c.bench_function("steady_state", |b| {
        b.iter(|| steady_state(black_box(&params), black_box(&drive)))
    });
    c.bench_function("optical_response", |b| {
        b.iter(|| optical_response(black_box(&params), black_box(&drive)))
    });
}

fn cavity(c: &mut Criterion) {
    let (cav, medium) = setup();
    let state = PolarizationState::new(1.0, Complex64::new(0.1, 0.2));
    c.bench_function("roundtrip", |b| {
        b.iter(|| roundtrip(black_box(&state), 1.0, &cav, &medium))
    });
    c.bench_function("run_to_steady_state", |b| {
        b.iter(|| run_to_steady_state(1.0, &cav, &medium, black_box(7)))
    });
    let mut group = c.benchmark_group("campaign");
    group.sample_size(10);
    group.bench_function("700_events", |b| {
        b.iter(|| run_campaign(1.0, &cav, &medium, 700, black_box(1)))
    });
    group.finish();
}

fn ising(c: &mut Criterion) {
    let problem = IsingProblem::new(parse_instance(RANDOM12).unwrap(), 0.08).unwrap();
    c.bench_function("brute_force_n12", |b| {
        b.iter(|| brute_force_ground_state(black_box(&problem)))
    });
    let cav = CavityParams::new(0.3, optimal_phase(1.5)).unwrap();
    let medium = Medium::with_gain(0.1, 10.0, 1.5).unwrap();
    let mut group = c.benchmark_group("ising_solve");
    group.sample_size(10);
    group.bench_function("n12_32_restarts", |b| {
        b.iter(|| solve(&problem, 1.0, &cav, &medium, 32, black_box(1000)))
    });
    group.finish();
}

fn stats(c: &mut Criterion) {
    let mut group = c.benchmark_group("autocorrelation");
    for m in [700usize, 10_000] {
        let values = (0..m)
            .map(|i| if (i * 2_654_435_761) % 7 < 3 { 1 } else { -1 })
            .collect();
        let seq = HelicitySequence::new(values).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &seq, |b, seq| {
            b.iter(|| autocorrelation(seq, 50))
        });
    }
    group.finish();
}

criterion_group!(benches, atomic, cavity, ising, stats);
criterion_main!(benches);

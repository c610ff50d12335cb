use std::f64::consts::FRAC_PI_2;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use qndm_bench::fixture;
use qndm_core::estimators::{DmProbe, QndmProbe};
use qndm_core::harness::{run_realization, ExperimentConfig, Preset, SweepKind, SweepPoint};
use qndm_core::seed::rng_for;
use qndm_core::{init_state, Order, Partial, QndmSettings};

fn gates(c: &mut Criterion) {
    let mut group = c.benchmark_group("circuit");
    for n in [6usize, 10] {
        let p = fixture(n, 10, 24, 1);
        let circuit = p.ansatz.build_circuit(&p.theta, false).unwrap();
        group.bench_with_input(BenchmarkId::new("ansatz", n), &n, |b, &n| {
            b.iter(|| {
                let mut s = init_state(n, true).unwrap();
                s.apply_circuit(black_box(&circuit)).unwrap();
                s
            })
        });
        let coupling = &p.observable.terms()[0].string;
        group.bench_with_input(BenchmarkId::new("coupling", n), &n, |b, &n| {
            let mut s = init_state(n, true).unwrap();
            b.iter(|| s.apply_detector_coupling(black_box(0.1), coupling).unwrap())
        });
    }
    group.finish();
}

fn probes(c: &mut Criterion) {
    let mut group = c.benchmark_group("probe");
    let p = fixture(6, 4, 24, 2);
    let partial = Partial::First(5);
    group.bench_function("qndm_prepare", |b| {
        b.iter(|| QndmProbe::prepare(black_box(&p), partial, &QndmSettings::new(0.1)).unwrap())
    });
    group.bench_function("dm_prepare", |b| b.iter(|| DmProbe::prepare(black_box(&p), partial, FRAC_PI_2).unwrap()));
    let q = QndmProbe::prepare(&p, partial, &QndmSettings::new(0.1)).unwrap();
    let d = DmProbe::prepare(&p, partial, FRAC_PI_2).unwrap();
    let mut rng = rng_for(3, &[]);
    group.bench_function("qndm_sample_500", |b| b.iter(|| q.sample(500, &mut rng).unwrap()));
    group.bench_function("dm_sample_500", |b| b.iter(|| d.sample(500, &mut rng).unwrap()));
    group.finish();
}

fn realization(c: &mut Criterion) {
    let mut cfg = ExperimentConfig::preset(SweepKind::MseVsJ, Order::First, Preset::Ci).with_seed(4);
    cfg.repeats = 20;
    let point = SweepPoint { j: 12, m: None };
    c.bench_function("mse_realization_n6_j12", |b| b.iter(|| run_realization(&cfg, point, 0).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = gates, probes, realization
}
criterion_main!(benches);

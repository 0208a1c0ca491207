use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use zoslice::{ChainState, DirectionLaw, Kernel, Potential, RoundLedger, ZoEngine};
use zoslice::samplers::RsHmc;
use zoslice_bench::{logistic, point, rng};

const D: usize = 200;

fn potential(c: &mut Criterion) {
    let t = logistic(D);
    let x = point(D);
    c.bench_function("logistic_value_d200", |b| b.iter(|| t.value(black_box(&x))));
}

fn directional_round(c: &mut Criterion) {
    let t = logistic(D);
    let x = point(D);
    let base = t.value(&x);
    let engine = ZoEngine::sequential();
    let mut group = c.benchmark_group("directional_round");
    for m in [5, 25, 100] {
        let v = DirectionLaw::CanonicalSubset.sample(&mut rng(m as u64), D, m).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &v, |b, v| {
            let mut ledger = RoundLedger::default();
            b.iter(|| engine.directional_derivatives(&t, &x, Some(base), v, &mut ledger).unwrap())
        });
    }
    group.finish();
}

fn rs_hmc_step(c: &mut Criterion) {
    let t = logistic(D);
    let engine = ZoEngine::sequential();
    let kernel = RsHmc::new(0.05, 3, 25, DirectionLaw::CanonicalSubset).unwrap();
    let state = ChainState::new(point(D));
    let mut r = rng(3);
    let mut ledger = RoundLedger::default();
    c.bench_function("rs_hmc_step_d200_m25_l3", |b| {
        b.iter(|| kernel.step(&t, &state, &engine, &mut r, &mut ledger).unwrap())
    });
}

fn direction_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("directions_d200");
    for (law, name) in [(DirectionLaw::UniformStiefel, "stiefel"), (DirectionLaw::CanonicalSubset, "canonical")] {
        for m in [25, 100] {
            let mut r = rng(4);
            group.bench_function(BenchmarkId::new(name, m), |b| b.iter(|| law.sample(&mut r, D, m).unwrap()));
        }
    }
    group.finish();
}

criterion_group!(benches, potential, directional_round, rs_hmc_step, direction_sampling);
criterion_main!(benches);

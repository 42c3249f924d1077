use criterion::{criterion_group, criterion_main, Criterion};
use glearn_bench::noisy_gridworld;
use glearn_core::oracle::{
    policy_evaluation, regularized_policy_evaluation, soft_policy, soft_value_iteration,
    value_iteration,
};
use glearn_core::StochasticPolicy;
use std::hint::black_box;

fn oracles(c: &mut Criterion) {
    let m = noisy_gridworld();
    let rho = StochasticPolicy::uniform(m.n_states(), m.n_actions());
    let mut group = c.benchmark_group("oracle");
    group.sample_size(20);
    group.bench_function("value_iteration", |b| {
        b.iter(|| black_box(value_iteration(&m, 1e-10).unwrap()))
    });
    for beta in [1.0, 100.0] {
        group.bench_function(format!("soft_value_iteration_beta_{beta}"), |b| {
            b.iter(|| black_box(soft_value_iteration(&m, &rho, beta, 1e-10).unwrap()))
        });
    }
    group.bench_function("policy_evaluation", |b| {
        b.iter(|| black_box(policy_evaluation(&m, &rho).unwrap()))
    });
    let g = soft_value_iteration(&m, &rho, 1.0, 1e-10).unwrap();
    let pi = soft_policy(&g, &rho, 1.0).unwrap();
    group.bench_function("regularized_policy_evaluation", |b| {
        b.iter(|| black_box(regularized_policy_evaluation(&m, &pi, &rho, 1.0).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, oracles);
criterion_main!(benches);

use std::hint::black_box;
use std::time::Duration;

use chanlab::channels::{monte_carlo, ChannelParams, Experiment, InputSpec, Pairing};
use chanlab::moments::{moment, MomentRequest};
use chanlab::Exec;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const STRATEGIES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn bench_monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group
        .sample_size(10)
        .measurement_time(Duration::from_secs(5));
    let params = ChannelParams::new(32, 2, 32).unwrap();
    let exp = Experiment::complementary(params, Pairing::Conjugate, InputSpec::Bell);
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::new(name, "n32_trials16"), &exec, |b, &exec| {
            b.iter(|| monte_carlo(black_box(&exp), 16, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_moment_sums(c: &mut Criterion) {
    let mut group = c.benchmark_group("moment_sum");
    group.sample_size(10);
    let cases = [
        ("conjugate_p3", MomentRequest::conjugate(8, 2, 8, 3)),
        ("identical_p3", MomentRequest::identical(8, 2, 8, 3)),
    ];
    for (label, req) in &cases {
        for (name, exec) in STRATEGIES {
            group.bench_with_input(BenchmarkId::new(name, label), &exec, |b, &exec| {
                b.iter(|| moment(black_box(req), exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_monte_carlo, bench_moment_sums);
criterion_main!(benches);

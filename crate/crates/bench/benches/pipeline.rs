use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use newsprop_core::*;

fn stores() -> DataStores {
    let cfg = SimConfig {
        n_firms: 300,
        n_days: 1500,
        news_rate: 10.0,
        edge_prob: 0.01,
        seed: 11,
        ..SimConfig::default()
    };
    simulate(&cfg).unwrap().load().unwrap()
}

fn window_change(c: &mut Criterion) {
    let s = stores();
    let series = s.prices.get("F000").unwrap();
    let date = series.dates()[series.len() / 2];
    let mut g = c.benchmark_group("window_change");
    for w in [1u32, 30, 180] {
        g.bench_with_input(BenchmarkId::from_parameter(w), &w, |b, &w| {
            b.iter(|| {
                series
                    .window_change(black_box(date), w, Period::Post)
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn panel_and_fit(c: &mut Criterion) {
    let s = stores();
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(20);
    for mode in [Mode::Own, Mode::Supplier] {
        g.bench_function(format!("build_panel/{mode}/w5"), |b| {
            b.iter(|| build_panel(&s, mode, Polarity::Positive, 5).unwrap())
        });
        let panel = build_panel(&s, mode, Polarity::Positive, 5).unwrap();
        g.bench_function(
            format!("fit/{mode}/w5/n{}", panel.observations.len()),
            |b| b.iter(|| fit(black_box(&panel), Covariance::Homoskedastic).unwrap()),
        );
    }
    g.finish();
}

fn simulate_bundle(c: &mut Criterion) {
    let cfg = SimConfig {
        n_firms: 200,
        seed: 2,
        ..SimConfig::default()
    };
    let mut g = c.benchmark_group("sim");
    g.sample_size(10);
    g.bench_function("simulate/200x730", |b| {
        b.iter(|| simulate(black_box(&cfg)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, window_change, panel_and_fit, simulate_bundle);
criterion_main!(benches);

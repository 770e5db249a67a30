use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use lorentz3::curvature::{covariant_tower, tower_at};
use lorentz3::dsl::{eval_metric_jets, MetricBody, Params};
use lorentz3::killing::kill_spaces;
use lorentz3::lie::{classify4, parabolic_model_algebra};
use lorentz3::scenarios::{analyze, box_grid, galpha_metric, AnalysisOptions};
use lorentz3::Jet;

const P: [f64; 3] = [0.3, -0.2, 1.4];

fn jets(c: &mut Criterion) {
    let a = Jet::seed_coordinate(3, P, 9).unwrap();
    let b = Jet::seed_coordinate(1, P, 9).unwrap().exp();
    c.bench_function("jet mul order 9", |x| x.iter(|| black_box(&a).try_mul(black_box(&b)).unwrap()));
    c.bench_function("jet pow_real order 9", |x| x.iter(|| black_box(&a).pow_real(-3.0).unwrap()));
    let g = galpha_metric(-3.0).unwrap();
    c.bench_function("metric jets order 9", |x| x.iter(|| eval_metric_jets(&g, black_box(P), 9, &Params::new()).unwrap()));
}

fn tower(c: &mut Criterion) {
    let g = galpha_metric(-3.0).unwrap();
    let mj = eval_metric_jets(&g, P, 9, &Params::new()).unwrap();
    c.bench_function("curvature tower r=7", |x| x.iter(|| covariant_tower(black_box(&mj), P, 7).unwrap()));
    let t = tower_at(&g, P, &Params::new(), 7).unwrap();
    c.bench_function("kill spaces r=0..7", |x| x.iter(|| kill_spaces(black_box(&t), 7).unwrap()));
}

fn lie(c: &mut Criterion) {
    let l = parabolic_model_algebra(1.0, 0.0, -1.0, 0.75).unwrap();
    c.bench_function("classify4", |x| x.iter(|| classify4(black_box(&l))));
}

fn pipeline(c: &mut Criterion) {
    let body = MetricBody::Single(galpha_metric(-3.0).unwrap());
    let pts = box_grid([-0.5, -0.5, 0.8], [0.5, 0.5, 1.6], 2);
    let mut group = c.benchmark_group("analyze");
    group.sample_size(10);
    group
        .bench_function("g_alpha 8 points", |x| x.iter(|| analyze("g", &body, &Params::new(), &pts, &AnalysisOptions::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, jets, tower, lie, pipeline);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_rational::BigRational;

use torchar::characterizer::{characterize, CharacterizeOptions, Tower};
use torchar::classic::factorial_charset;
use torchar::par;
use torchar::quasiconvex::quasi_hull;
use torchar::verifier::{monte_carlo_measure, sublevel_measures, tail_profile};
use torchar::TorusPoint;

fn point(n: i64, d: i64) -> TorusPoint {
    TorusPoint::from_rationals(&[BigRational::new(n.into(), d.into())]).unwrap()
}

/// Runs `f` once per mode under the same benchmark name.
fn both<R>(c: &mut Criterion, group: &str, mut f: impl FnMut() -> R) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_function(BenchmarkId::from_parameter("parallel"), |b| b.iter(&mut f));
    g.bench_function(BenchmarkId::from_parameter("sequential"), |b| b.iter(|| par::sequential(&mut f)));
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let tower = Tower::prufer(2).unwrap();
    let opts = CharacterizeOptions { levels: 10, ..Default::default() };
    both(c, "characterize dyadic 10 levels", || characterize(&tower, &opts).unwrap());
}

fn hulls(c: &mut Criterion) {
    let e: Vec<TorusPoint> = vec![point(1, 210), point(1, 77)];
    both(c, "quasi-hull of two points", || quasi_hull(&e, 3).unwrap());
}

fn measures(c: &mut Criterion) {
    let b = factorial_charset(8).unwrap();
    let delta = BigRational::new(1.into(), 8.into());
    both(c, "sublevel measures, factorial 8", || sublevel_measures(&b, 8, &delta).unwrap());
    both(c, "monte carlo, 200k samples", || monte_carlo_measure(&b, 8, 0.125, 200_000, 1).unwrap());
}

fn profiles(c: &mut Criterion) {
    let b = factorial_charset(50).unwrap();
    let x = point(17, 43);
    both(c, "tail profile, factorial 50", || tail_profile(&x, &b, 50).unwrap());
}

criterion_group!(benches, pipeline, hulls, measures, profiles);
criterion_main!(benches);

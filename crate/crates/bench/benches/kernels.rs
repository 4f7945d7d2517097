use criterion::{black_box, criterion_group, criterion_main, Criterion};

use diolab_core::estimators::{box_count, mc_measure, GenerationSet, Sampling};
use diolab_core::geometry::{cover_neighborhood, Neighborhood, ResonantPlane};
use diolab_core::series::schmidt_sum;
use diolab_core::slicing::circle_union_length;
use diolab_core::{LinearFormsProblem, Problem, Schedule, SquaresProblem, Window};

fn series(c: &mut Criterion) {
    let p = LinearFormsProblem::power(2, 2, 1.5).unwrap();
    c.bench_function("schmidt_sum n=2 m=2 H=256", |b| {
        b.iter(|| schmidt_sum(black_box(&p), 256).unwrap())
    });
}

fn boxdim(c: &mut Criterion) {
    let p = Problem::Squares(SquaresProblem::power(3.0).unwrap());
    let set = GenerationSet::new(&p, &Schedule::dyadic(0, 3).unwrap().windows()).unwrap();
    c.bench_function("box_count squares tau=3 scales 6..10", |b| {
        b.iter(|| box_count(black_box(&set), (6, 10), Sampling::Exact, None).unwrap())
    });
}

fn measure(c: &mut Criterion) {
    let p = Problem::Linear(LinearFormsProblem::power(2, 1, 2.0).unwrap());
    let w = Window::new(16, 64).unwrap();
    c.bench_function("mc_measure n=2 m=1 10k samples", |b| {
        b.iter(|| mc_measure(black_box(&p), w, 10_000, 7).unwrap())
    });
}

fn geometry(c: &mut Criterion) {
    let plane = ResonantPlane::linear(vec![7, -5], vec![2], vec![0.3]).unwrap();
    let nb = Neighborhood::new(plane, 1e-3).unwrap();
    c.bench_function("cover_neighborhood n=2 r=1e-4", |b| {
        b.iter(|| cover_neighborhood(black_box(&nb), 1e-4, false).unwrap())
    });
    let arcs: Vec<(f64, f64)> = (0..4096u64)
        .map(|i| (((i * 2654435761) % 1_000_003) as f64 / 1_000_003.0, 1e-4))
        .collect();
    c.bench_function("circle_union_length 4096 arcs", |b| {
        b.iter(|| circle_union_length(black_box(&arcs)))
    });
}

criterion_group!(benches, series, boxdim, measure, geometry);
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ising_strip::lattice::{build_transfer, Spin, SpinBasis};
use ising_strip::{Bits, Extended, Scalar, SquareMatrix};

fn filled<S: Scalar>(dim: usize, ctx: S::Ctx) -> SquareMatrix<S> {
    SquareMatrix::from_fn(dim, ctx, |i, j| S::from_f64(ctx, ((i * 13 + j * 7) % 11) as f64 / 3.0 - 1.5))
}

fn matmul(c: &mut Criterion) {
    let mut g = c.benchmark_group("matmul");
    for dim in [32, 64, 128] {
        let a = filled::<f64>(dim, ());
        g.bench_with_input(BenchmarkId::new("f64/sequential", dim), &a, |b, a| b.iter(|| black_box(a.mul_sequential(a))));
        g.bench_with_input(BenchmarkId::new("f64/parallel", dim), &a, |b, a| b.iter(|| black_box(a.mul_parallel(a))));
    }
    g.sample_size(10);
    let ctx = Bits::for_digits(80);
    for dim in [16, 32] {
        let a = filled::<Extended>(dim, ctx);
        g.bench_with_input(BenchmarkId::new("extended/sequential", dim), &a, |b, a| b.iter(|| black_box(a.mul_sequential(a))));
        g.bench_with_input(BenchmarkId::new("extended/parallel", dim), &a, |b, a| b.iter(|| black_box(a.mul_parallel(a))));
    }
    g.finish();
}

fn transfer(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_transfer");
    for l in [4, 6, 8] {
        let basis = SpinBasis::new(l, Spin::Plus).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(l), &basis, |b, basis| {
            b.iter(|| black_box(build_transfer(basis, &0.1f64).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, matmul, transfer);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use erqm_bench::{scattering_fixture, test_functions};
use erqm_core::{
    cheb_apply_operator, cheb_coeffs, default_degree, gram_matrix, s_matrix_iterated, Complex64, CovarianceKernel,
    ExactOracle, ModelParams, PhysicalConstants,
};
use std::hint::black_box;

fn chebyshev(c: &mut Criterion) {
    let mut group = c.benchmark_group("cheb_coeffs");
    for nu in [200.0, 800.0] {
        group.bench_with_input(BenchmarkId::from_parameter(nu), &nu, |b, &nu| {
            b.iter(|| cheb_coeffs(black_box(nu), default_degree(nu)))
        });
    }
    group.finish();

    let (ops, f) = scattering_fixture();
    let series = cheb_coeffs(600.0, default_degree(600.0));
    let psi = f.weighted();
    c.bench_function("cheb_apply_operator", |b| {
        b.iter(|| cheb_apply_operator(&series, ops.full_operator(), black_box(&psi)).unwrap())
    });
    c.bench_function("s_matrix_iterated/n=300", |b| {
        b.iter(|| s_matrix_iterated(300, &ops, &f, &f, default_degree(600.0)).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let o = ExactOracle::new(ModelParams::tuned(PhysicalConstants::default()).unwrap());
    let z = Complex64::new(3.7, 0.0);
    c.bench_function("resolvent_pairing", |b| b.iter(|| o.resolvent_pairing(black_box(z), true).unwrap()));
}

fn euclid(c: &mut Criterion) {
    let kernel = CovarianceKernel::free(1.0).unwrap();
    let fs = test_functions(8);
    c.bench_function("gram_matrix/8", |b| b.iter(|| gram_matrix(black_box(&fs), &kernel).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = chebyshev, oracle, euclid
}
criterion_main!(benches);

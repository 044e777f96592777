use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use crosskerr_core::dynamics::{lindblad_rhs, lindblad_rhs_dense};
use crosskerr_core::*;
use std::hint::black_box;

fn cat_params() -> DeviceParams {
    DeviceParams {
        omega_a_ghz: 3.5,
        omega_b_ghz: 6.5,
        delta_a_ghz: -1.0,
        delta_b_ghz: 1.696,
        g_mhz: 150.0,
        mu_mhz: 200.0,
        g_ab_mhz: 15.0,
        k: 1,
        rates: DecayRates::from_times(0.1, 5.0),
    }
}

fn mixed_state(space: HilbertSpace) -> CMatrix {
    let n = space.total();
    let v = CVector::from_fn(n, |i, _| C64::new(1.0 / (1.0 + i as f64), 0.1 * i as f64 / n as f64));
    let v = &v / C64::new(v.norm(), 0.0);
    &v * v.adjoint()
}

fn rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("lindblad_rhs");
    for dim in [4usize, 6, 10] {
        let space = HilbertSpace::new(dim, dim).unwrap();
        let spec = HamiltonianSpec::new(HamiltonianKind::FullCrosstalk, cat_params(), space).unwrap();
        let model = LindbladModel::from_spec(&spec).unwrap();
        let rho = mixed_state(space);
        group.bench_with_input(BenchmarkId::new("structured", dim), &rho, |b, rho| {
            b.iter(|| lindblad_rhs(&model, black_box(rho), 1.3).unwrap())
        });
        if dim <= 6 {
            group.bench_with_input(BenchmarkId::new("dense", dim), &rho, |b, rho| {
                b.iter(|| lindblad_rhs_dense(&model, black_box(rho), 1.3))
            });
        }
    }
    group.finish();
}

fn operator_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("operator_apply");
    for dim in [6usize, 12] {
        let space = HilbertSpace::new(dim, dim).unwrap();
        let spec = HamiltonianSpec::new(HamiltonianKind::FullCrosstalk, cat_params(), space).unwrap();
        let h = build_hamiltonian(&spec, 0.7).unwrap();
        let dense = h.to_dense_operator();
        let psi = CVector::from_fn(space.total(), |i, _| C64::new(1.0, i as f64).unscale(space.total() as f64));
        group.bench_with_input(BenchmarkId::new("structured", dim), &psi, |b, psi| {
            b.iter(|| h.apply_vector(black_box(psi)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dense", dim), &psi, |b, psi| {
            b.iter(|| dense.apply_vector(black_box(psi)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, rhs, operator_apply);
criterion_main!(benches);

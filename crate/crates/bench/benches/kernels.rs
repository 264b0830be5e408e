use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use motionsim_core::cooling::{self, limit_probabilities, CoolingConfig};
use motionsim_core::dynamics::{build_hamiltonian, dipole_jump_set};
use motionsim_core::entanglement::{hyper_entangle, project_and_recover};
use motionsim_core::linalg::expm;
use motionsim_core::sequences::Sequencer;
use motionsim_core::{hz, HilbertLayout, Liouvillian, PhysicalParams, Sideband, TwoAtomConfig, C64};

fn matrix_exponential(c: &mut Criterion) {
    let p = PhysicalParams::clock(hz(35.5e3)).unwrap();
    let mut g = c.benchmark_group("expm");
    for levels in [5, 10, 20] {
        let l = HilbertLayout::single(levels).unwrap();
        let h = build_hamiltonian(&p, l, 0, Sideband::Blue).unwrap().m * C64::new(0.0, -1e-3);
        g.bench_with_input(BenchmarkId::from_parameter(levels), &h, |b, h| b.iter(|| expm(black_box(h)).unwrap()));
    }
    g.finish();
}

fn lindblad_propagator(c: &mut Criterion) {
    let p = PhysicalParams::intercombination(hz(35.5e3)).unwrap();
    let mut g = c.benchmark_group("liouvillian_propagator");
    g.sample_size(20);
    for levels in [5, 10] {
        let l = HilbertLayout::single(levels).unwrap();
        let lv = Liouvillian::new(
            build_hamiltonian(&p, l, 0, Sideband::Red).unwrap(),
            dipole_jump_set(&p, l, 0, 15).unwrap(),
        )
        .unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(levels), &lv, |b, lv| {
            b.iter(|| lv.propagator(black_box(1e-3)).unwrap())
        });
    }
    g.finish();
}

fn cooling_protocols(c: &mut Criterion) {
    let omega = hz(35.5e3);
    let mut g = c.benchmark_group("cooling");
    g.sample_size(10);
    g.bench_function("limit_probabilities", |b| {
        let p = PhysicalParams::clock(omega).unwrap();
        b.iter(|| limit_probabilities(black_box(&p)).unwrap())
    });
    g.bench_function("ecc_noisy", |b| {
        let cfg = CoolingConfig::ecc_noisy(omega).unwrap();
        b.iter(|| cooling::run(black_box(&cfg)).unwrap())
    });
    g.bench_function("sc_3p1", |b| {
        let cfg = CoolingConfig::sc_3p1(omega).unwrap();
        b.iter(|| cooling::run(black_box(&cfg)).unwrap())
    });
    g.finish();
}

fn sequences(c: &mut Criterion) {
    let p = PhysicalParams::clock(hz(35.5e3)).unwrap();
    let taus: Vec<f64> = (0..20).map(|i| i as f64 * 2e-6).collect();
    c.bench_function("ramsey_20_points", |b| {
        b.iter(|| Sequencer::with_defaults(p).unwrap().ramsey(black_box(&taus)).unwrap())
    });
}

fn entanglement(c: &mut Criterion) {
    let cfg = TwoAtomConfig::clock(hz(35.5e3), hz(35.5e3)).unwrap();
    let holds: Vec<f64> = (0..12).map(|i| i as f64 * 1e-6).collect();
    c.bench_function("hyper_project_and_recover", |b| {
        b.iter(|| {
            let h = hyper_entangle(&cfg).unwrap();
            project_and_recover(&h, &cfg, &[], black_box(&holds)).unwrap()
        })
    });
}

criterion_group!(benches, matrix_exponential, lindblad_propagator, cooling_protocols, sequences, entanglement);
criterion_main!(benches);

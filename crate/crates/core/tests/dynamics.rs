use std::f64::consts::PI;

use motionsim_core::dynamics::*;
use motionsim_core::linalg::max_abs;
use motionsim_core::quantum::{apply_channel, build_fock_operators};
use motionsim_core::{hz, CMatrix, HilbertLayout, Liouvillian, PhysicalParams, QuantumState, Sideband, Spin, C64};
use proptest::prelude::*;

fn eta_oracle(f_hz: f64) -> f64 {
    // CODATA 2018 ħ and u; Sr-88 atomic mass.
    let hbar = 1.054_571_817e-34;
    let m = 87.905_612_5 * 1.660_539_066_60e-27;
    (2.0 * PI / 698e-9) * (hbar / (2.0 * m * hz(f_hz))).sqrt()
}

fn two_level(omega: f64) -> PhysicalParams {
    PhysicalParams { eta: 0.0, ..PhysicalParams::clock(omega).unwrap() }
}

#[test]
fn lamb_dicke_examples() {
    let e1 = lamb_dicke(hz(35.5e3), SR88_MASS, CLOCK_WAVELENGTH).unwrap();
    let e4 = lamb_dicke(4.0 * hz(35.5e3), SR88_MASS, CLOCK_WAVELENGTH).unwrap();
    assert!((e4 / e1 - 0.5).abs() < 1e-14);
    assert!((e1 - eta_oracle(35.5e3)).abs() < 1e-6);
    assert!((e1 - 0.36).abs() < 0.01);
    let axial = lamb_dicke(hz(10.7e3), SR88_MASS, CLOCK_WAVELENGTH).unwrap();
    assert!((axial - eta_oracle(10.7e3)).abs() < 1e-6);
    assert!((axial - 0.66).abs() < 0.01);
    assert!(lamb_dicke(0.0, SR88_MASS, CLOCK_WAVELENGTH).is_err());
    assert!(lamb_dicke(1.0, -1.0, CLOCK_WAVELENGTH).is_err());
}

#[test]
fn hamiltonian_without_drive_is_ladder() {
    let p = PhysicalParams { rabi: 0.0, ..PhysicalParams::clock(hz(35.5e3)).unwrap() };
    let l = HilbertLayout::single(6).unwrap();
    let h = build_hamiltonian(&p, l, 0, Sideband::Carrier).unwrap().m;
    let d = CMatrix::from_diagonal(&h.diagonal());
    assert!(max_abs(&(&h - d)) < 1e-15);
    for n in 0..5 {
        let i = l.index(&[(Spin::Down, n)]).unwrap();
        let j = l.index(&[(Spin::Down, n + 1)]).unwrap();
        assert!(((h[(j, j)] - h[(i, i)]).re - p.omega).abs() < 1e-9);
    }
}

#[test]
fn carrier_at_zero_eta_is_a_spin_flip() {
    let p = two_level(hz(35.5e3));
    let l = HilbertLayout::single(4).unwrap();
    let h = build_hamiltonian(&p, l, 0, Sideband::Carrier).unwrap().m;
    for n in 0..4 {
        for m in 0..4 {
            let i = l.index(&[(Spin::Up, m)]).unwrap();
            let j = l.index(&[(Spin::Down, n)]).unwrap();
            let want = if n == m { p.rabi / 2.0 } else { 0.0 };
            assert!((h[(i, j)] - C64::new(want, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn sideband_selector_sets_detuning() {
    let w = hz(20e3);
    assert_eq!(Sideband::Red.detuning(w), -w);
    assert_eq!(Sideband::Blue.detuning(w), w);
    assert_eq!(Sideband::Carrier.detuning(w), 0.0);
    assert_eq!(Sideband::Custom(3.0).detuning(w), 3.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hamiltonian_is_hermitian(
        f in 5e3f64..100e3, rabi in 0.0f64..2e4, delta in -1e6f64..1e6, eta in 0.0f64..0.8, phase in -PI..PI,
    ) {
        let p = PhysicalParams { rabi, eta, ..PhysicalParams::clock(hz(f)).unwrap() };
        let l = HilbertLayout::single(8).unwrap();
        let h = build_hamiltonian_phased(&p, l, 0, Sideband::Custom(delta), phase).unwrap();
        prop_assert!(h.hermiticity_error() < 1e-12);
    }

    #[test]
    fn generator_is_trace_annihilating(
        re in prop::collection::vec(-1.0f64..1.0, 100), im in prop::collection::vec(-1.0f64..1.0, 100),
        f in 5e3f64..100e3,
    ) {
        let p = PhysicalParams { heating_rate: 50.0, ..PhysicalParams::intercombination(hz(f)).unwrap() };
        let l = HilbertLayout::single(5).unwrap();
        let h = build_hamiltonian(&p, l, 0, Sideband::Red).unwrap();
        let mut jumps = dipole_jump_set(&p, l, 0, 15).unwrap();
        jumps.extend(heating_jump_set(&p, l, 0).unwrap());
        let lv = Liouvillian::new(h, jumps).unwrap();
        let a = CMatrix::from_fn(10, 10, |i, j| C64::new(re[i * 10 + j], im[i * 10 + j]));
        let rho = &a * a.adjoint();
        let scale = max_abs(&lv.apply(&rho)).max(1.0);
        prop_assert!(lv.apply(&rho).trace().norm() / scale < 1e-9);
    }

    #[test]
    fn recycling_evolution_preserves_trace(t in 0.0f64..5e-3, f in 5e3f64..100e3) {
        let p = PhysicalParams::intercombination(hz(f)).unwrap();
        let l = HilbertLayout::single(6).unwrap();
        let h = build_hamiltonian(&p, l, 0, Sideband::Red).unwrap();
        let lv = Liouvillian::new(h, dipole_jump_set(&p, l, 0, 15).unwrap()).unwrap();
        let s = QuantumState::basis(l, &[(Spin::Down, 2)]).unwrap();
        let out = evolve_segment(&s, &lv, t).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-9);
        prop_assert!(out.hermiticity_error() < 1e-10);
        prop_assert!(out.min_eigenvalue() > -1e-9);
    }
}

#[test]
fn dipole_weights_examples() {
    let (u, p) = dipole_weights(15).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let second: f64 = u.iter().zip(&p).map(|(u, p)| u * u * p).sum();
    assert!((second - 0.2).abs() < 1e-12);
    assert!(dipole_weights(1).is_err());

    let params = PhysicalParams { eta: 0.0, ..PhysicalParams::intercombination(hz(35.5e3)).unwrap() };
    let l = HilbertLayout::single(4).unwrap();
    let jumps = dipole_jump_set(&params, l, 0, 15).unwrap();
    let total: f64 = jumps.iter().map(|j| j.rate).sum();
    assert!((total - params.linewidth).abs() < 1e-9 * params.linewidth);
    let lowering = motionsim_core::OperatorMatrix::on_atom(
        l,
        0,
        &motionsim_core::quantum::spin::lowering(),
        &CMatrix::identity(4, 4),
        "σ-",
    )
    .unwrap();
    for j in &jumps {
        assert!(max_abs(&(&j.op.m - &lowering.m)) < 1e-15);
    }
    let clock = PhysicalParams::clock(hz(35.5e3)).unwrap();
    assert!(dipole_jump_set(&clock, l, 0, 15).is_err());
}

#[test]
fn zero_duration_is_identity() {
    let p = PhysicalParams::intercombination(hz(35.5e3)).unwrap();
    let l = HilbertLayout::single(4).unwrap();
    let lv =
        Liouvillian::new(build_hamiltonian(&p, l, 0, Sideband::Red).unwrap(), dipole_jump_set(&p, l, 0, 15).unwrap())
            .unwrap();
    let s = QuantumState::basis(l, &[(Spin::Up, 1)]).unwrap();
    let out = evolve_segment(&s, &lv, 0.0).unwrap();
    assert!(max_abs(&(out.rho - s.rho)) < 1e-14);
}

#[test]
fn spontaneous_decay_is_exponential() {
    let p = PhysicalParams { rabi: 0.0, eta: 0.0, ..PhysicalParams::intercombination(hz(35.5e3)).unwrap() };
    let l = HilbertLayout::single(3).unwrap();
    let lv = Liouvillian::new(
        build_hamiltonian(&p, l, 0, Sideband::Carrier).unwrap(),
        dipole_jump_set(&p, l, 0, 15).unwrap(),
    )
    .unwrap();
    let s = QuantumState::basis(l, &[(Spin::Up, 0)]).unwrap();
    for t in [0.0, 5e-6, 20e-6, 80e-6] {
        let up = evolve_segment(&s, &lv, t).unwrap().spin_population(0, Spin::Up).unwrap();
        assert!((up - (-p.linewidth * t).exp()).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn resonant_rabi_oscillation() {
    let p = two_level(hz(35.5e3));
    let l = HilbertLayout::single(3).unwrap();
    let lv = Liouvillian::coherent(build_hamiltonian(&p, l, 0, Sideband::Carrier).unwrap()).unwrap();
    let s = QuantumState::basis(l, &[(Spin::Down, 0)]).unwrap();
    for k in 0..12 {
        let t = k as f64 * 37e-6;
        let down = evolve_segment(&s, &lv, t).unwrap().spin_population(0, Spin::Down).unwrap();
        assert!((down - (p.rabi * t / 2.0).cos().powi(2)).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn heating_grows_mean_occupation_linearly() {
    let p = PhysicalParams { rabi: 0.0, heating_rate: 3.0, ..PhysicalParams::clock(hz(35.5e3)).unwrap() };
    let l = HilbertLayout::single(10).unwrap();
    let lv =
        Liouvillian::new(build_hamiltonian(&p, l, 0, Sideband::Carrier).unwrap(), heating_jump_set(&p, l, 0).unwrap())
            .unwrap();
    let s = QuantumState::basis(l, &[(Spin::Down, 0)]).unwrap();
    let out = evolve_segment(&s, &lv, 0.1).unwrap();
    let n = build_fock_operators(l, 0).unwrap().number;
    let n_bar = out.expectation(&n).unwrap().re;
    assert!((n_bar - 0.30).abs() < 0.01, "n̄ = {n_bar}");
    assert!((out.trace() - 1.0).abs() < 1e-9);

    let none = PhysicalParams { heating_rate: 0.0, ..p };
    assert!(heating_jump_set(&none, l, 0).unwrap().is_empty());
    let bad = PhysicalParams { heating_rate: -1.0, ..p };
    assert!(heating_jump_set(&bad, l, 0).is_err());
}

#[test]
fn recoil_never_cools() {
    // Ω = 0 with dipole jumps only: mean occupation cannot drop.
    let p = PhysicalParams { rabi: 0.0, ..PhysicalParams::intercombination(hz(20e3)).unwrap() };
    let l = HilbertLayout::single(8).unwrap();
    let lv = Liouvillian::new(
        build_hamiltonian(&p, l, 0, Sideband::Carrier).unwrap(),
        dipole_jump_set(&p, l, 0, 15).unwrap(),
    )
    .unwrap();
    let n = build_fock_operators(l, 0).unwrap().number;
    let s = QuantumState::basis(l, &[(Spin::Up, 1)]).unwrap();
    let mut last = s.expectation(&n).unwrap().re;
    for k in 1..10 {
        let now = evolve_segment(&s, &lv, k as f64 * 10e-6).unwrap().expectation(&n).unwrap().re;
        assert!(now >= last - 1e-12);
        last = now;
    }
}

#[test]
fn quadrature_doubling_is_converged() {
    let p = PhysicalParams::intercombination(hz(35.5e3)).unwrap();
    let l = HilbertLayout::single(10).unwrap();
    let s = motionsim_core::quantum::thermal_state(l, &[Spin::Down], 1.0).unwrap();
    let run = |m: usize| {
        let lv = Liouvillian::new(
            build_hamiltonian(&p, l, 0, Sideband::Red).unwrap(),
            dipole_jump_set(&p, l, 0, m).unwrap(),
        )
        .unwrap();
        evolve_segment(&s, &lv, 2e-3).unwrap().motional_populations(0).unwrap()
    };
    let (a, b) = (run(15), run(30));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-6);
    }
}

#[test]
fn exponential_agrees_with_rk4() {
    // A few fixed random-looking instances, all with recoil and heating.
    let cases = [(35.5e3, 2.5e3, 0.0, 0.36, 40e-6), (12e3, 4e3, 1.3e3, 0.5, 60e-6), (80e3, 9e3, -2e3, 0.2, 25e-6)];
    for (k, &(f, rabi, gamma, eta, t)) in cases.iter().enumerate() {
        let base = if gamma > 0.0 {
            PhysicalParams { linewidth: hz(gamma), ..PhysicalParams::intercombination(hz(f)).unwrap() }
        } else {
            PhysicalParams::clock(hz(f)).unwrap()
        };
        let p = PhysicalParams { rabi: hz(rabi), eta, heating_rate: 200.0, ..base };
        let l = HilbertLayout::single(4).unwrap();
        let mut jumps = heating_jump_set(&p, l, 0).unwrap();
        if p.linewidth > 0.0 {
            jumps.extend(dipole_jump_set(&p, l, 0, 15).unwrap());
        }
        let h = build_hamiltonian(&p, l, 0, Sideband::Red).unwrap();
        // Step set by the widest Bohr frequency of the truncated ladder, not just ω.
        let ev = h.m.symmetric_eigenvalues();
        let width = ev.max() - ev.min();
        let lv = Liouvillian::new(h, jumps).unwrap();
        let s = QuantumState::basis(l, &[(Spin::Down, 1)]).unwrap();
        let dt = 2.0 * PI / (100.0 * width.max(p.linewidth));
        let a = evolve_segment(&s, &lv, t).unwrap();
        let b = evolve_rk4(&s, &lv, t, dt).unwrap();
        let err = max_abs(&(a.rho - b.rho));
        assert!(err < 1e-6, "case {k}: {err:e}");
    }
}

#[test]
fn decay_projection_examples() {
    let p = PhysicalParams::clock(hz(35.5e3)).unwrap();
    let l = HilbertLayout::single(10).unwrap();
    let ch = decay_projection_channel(&p, l, 0, 15).unwrap();

    let down = motionsim_core::quantum::thermal_state(l, &[Spin::Down], 1.0).unwrap();
    let out = apply_channel(&down, &ch).unwrap();
    assert!(max_abs(&(out.rho - &down.rho)) < 1e-14);

    let zero = PhysicalParams { eta: 0.0, ..p };
    let up = QuantumState::basis(l, &[(Spin::Up, 0)]).unwrap();
    let out = apply_channel(&up, &decay_projection_channel(&zero, l, 0, 15).unwrap()).unwrap();
    let want = QuantumState::basis(l, &[(Spin::Down, 0)]).unwrap();
    assert!(max_abs(&(out.rho - want.rho)) < 1e-14);

    let p1 = |m: usize| {
        let out = apply_channel(&up, &decay_projection_channel(&p, l, 0, m).unwrap()).unwrap();
        assert!((out.spin_population(0, Spin::Down).unwrap() - 1.0).abs() < 1e-12);
        out.motional_populations(0).unwrap()[1]
    };
    let (coarse, fine) = (p1(15), p1(101));
    assert!((coarse - fine).abs() < 1e-6);
    // First order: η²⟨u²⟩ = η²/5.
    assert!((fine - p.eta * p.eta / 5.0).abs() < 0.2 * fine);
}

#[test]
fn coherences_destroyed_by_decay_projection() {
    let p = PhysicalParams::clock(hz(35.5e3)).unwrap();
    let l = HilbertLayout::single(4).unwrap();
    let mut psi = nalgebra::DVector::from_element(8, C64::new(0.0, 0.0));
    psi[l.index(&[(Spin::Down, 0)]).unwrap()] = C64::new(0.5f64.sqrt(), 0.0);
    psi[l.index(&[(Spin::Up, 0)]).unwrap()] = C64::new(0.5f64.sqrt(), 0.0);
    let s = QuantumState::pure(l, &psi).unwrap();
    let out = apply_channel(&s, &decay_projection_channel(&p, l, 0, 15).unwrap()).unwrap();
    assert!((out.trace() - 1.0).abs() < 1e-12);
    for i in 0..4 {
        for j in 4..8 {
            assert!(out.rho[(i, j)].norm() < 1e-15);
        }
    }
}

#[test]
fn stationary_state_is_annihilated() {
    let p = PhysicalParams::intercombination(hz(35.5e3)).unwrap();
    let l = HilbertLayout::single(6).unwrap();
    let lv =
        Liouvillian::new(build_hamiltonian(&p, l, 0, Sideband::Red).unwrap(), dipole_jump_set(&p, l, 0, 15).unwrap())
            .unwrap();
    let ss = lv.stationary_state().unwrap();
    assert!((ss.trace() - 1.0).abs() < 1e-10);
    assert!(max_abs(&lv.apply(&ss.rho)) < 1e-6 * p.omega);
    assert!(ss.min_eigenvalue() > -1e-9);
}

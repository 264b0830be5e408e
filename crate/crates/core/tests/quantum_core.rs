use motionsim_core::linalg::{expm, max_abs};
use motionsim_core::quantum::{
    apply_channel, build_fock_operators, displacement_coupling, partial_trace, reduced_density, thermal_populations,
    thermal_state, Factor,
};
use motionsim_core::{CMatrix, HilbertLayout, OperatorMatrix, QuantumChannel, QuantumState, Spin, C64};
use proptest::prelude::*;

fn random_matrix(d: usize, re: &[f64], im: &[f64]) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| C64::new(re[i * d + j], im[i * d + j]))
}

fn random_state(layout: HilbertLayout, re: &[f64], im: &[f64]) -> QuantumState {
    let a = random_matrix(layout.dim(), re, im);
    let rho = &a * a.adjoint();
    let t = rho.trace();
    QuantumState::new(layout, rho / t).unwrap()
}

fn random_unitary(d: usize, re: &[f64], im: &[f64]) -> CMatrix {
    let a = random_matrix(d, re, im);
    let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    expm(&(h * C64::new(0.0, 1.0))).unwrap()
}

fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

const D: usize = 8;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mixed_unitary_channels_preserve_state_invariants(
        re in entries(D * D), im in entries(D * D),
        ure in entries(D * D), uim in entries(D * D),
        p in 0.0f64..1.0,
    ) {
        let layout = HilbertLayout::single(4).unwrap();
        let s = random_state(layout, &re, &im);
        let u = random_unitary(D, &ure, &uim);
        let ks = vec![
            OperatorMatrix::new(layout, CMatrix::identity(D, D) * C64::new((1.0 - p).sqrt(), 0.0), "1").unwrap(),
            OperatorMatrix::new(layout, u * C64::new(p.sqrt(), 0.0), "U").unwrap(),
        ];
        let ch = QuantumChannel::new(ks, true).unwrap();
        let out = apply_channel(&s, &ch).unwrap();
        prop_assert!(out.hermiticity_error() < 1e-10);
        prop_assert!(out.min_eigenvalue() > -1e-9);
        prop_assert!((out.trace() - s.trace()).abs() < 1e-10);
    }

    #[test]
    fn heralding_never_increases_trace(re in entries(D * D), im in entries(D * D), up in any::<bool>()) {
        let layout = HilbertLayout::single(4).unwrap();
        let s = random_state(layout, &re, &im);
        let keep = if up { Spin::Up } else { Spin::Down };
        let out = apply_channel(&s, &QuantumChannel::herald_keep(layout, 0, keep).unwrap()).unwrap();
        prop_assert!(out.trace() <= s.trace() + 1e-12);
        prop_assert!((out.trace() - s.spin_population(0, keep).unwrap()).abs() < 1e-12);
        prop_assert!(out.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn displacement_sign_flip_is_adjoint(eta in -1.0f64..1.0) {
        let layout = HilbertLayout::new(2, 5).unwrap();
        for atom in 0..2 {
            let plus = displacement_coupling(layout, atom, eta).unwrap();
            let minus = displacement_coupling(layout, atom, -eta).unwrap();
            prop_assert!(max_abs(&(minus.m - plus.adjoint().m)) < 1e-10);
        }
    }

    #[test]
    fn thermal_populations_are_geometric(n_bar in 0.0f64..5.0, levels in 2usize..15) {
        let p = thermal_populations(levels, n_bar).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn partial_trace_matches_embedded_observables(
        re in prop::collection::vec(-1.0f64..1.0, 36 * 36),
        im in prop::collection::vec(-1.0f64..1.0, 36 * 36),
        ore in entries(36), oim in entries(36),
    ) {
        let layout = HilbertLayout::new(2, 3).unwrap();
        let s = random_state(layout, &re, &im);
        let o = random_matrix(6, &ore, &oim);
        for atom in 0..2 {
            let marginal = partial_trace(&s, &[atom]).unwrap();
            let lhs = (&marginal.rho * &o).trace();
            let rhs = (&s.rho * layout.embed(atom, &o).unwrap()).trace();
            prop_assert!((lhs - rhs).norm() < 1e-12);
            prop_assert!((marginal.trace() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn layout_dimension_and_factors() {
    let l = HilbertLayout::new(2, 3).unwrap();
    assert_eq!(l.dim(), 36);
    assert_eq!(l.factor_dims(), vec![2, 3, 2, 3]);
    assert!(HilbertLayout::new(0, 3).is_err());
    assert!(HilbertLayout::new(3, 10).is_err());
}

#[test]
fn fock_operators_on_second_atom() {
    let l = HilbertLayout::new(2, 3).unwrap();
    let f = build_fock_operators(l, 1).unwrap();
    let i = l.index(&[(Spin::Up, 2), (Spin::Down, 1)]).unwrap();
    let j = l.index(&[(Spin::Up, 2), (Spin::Down, 2)]).unwrap();
    assert!((f.a.m[(i, j)] - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
    let k = l.index(&[(Spin::Up, 1), (Spin::Down, 2)]).unwrap();
    assert_eq!(f.a.m[(i, k)], C64::new(0.0, 0.0));
    assert!(build_fock_operators(l, 2).is_err());
}

#[test]
fn displacement_coupling_examples() {
    let l = HilbertLayout::single(10).unwrap();
    let zero = displacement_coupling(l, 0, 0.0).unwrap();
    assert!(max_abs(&(zero.m - CMatrix::identity(20, 20))) < 1e-15);

    // Unitarity on the interior block n < N − 2, both spin sectors.
    let u = displacement_coupling(l, 0, 0.36).unwrap().m;
    let uu = &u * u.adjoint();
    for s in 0..2 {
        for a in 0..8 {
            for b in 0..8 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((uu[(s * 10 + a, s * 10 + b)] - C64::new(want, 0.0)).norm() < 1e-9);
            }
        }
    }

    let u = displacement_coupling(l, 0, 0.2).unwrap().m;
    assert!((u[(0, 0)].re - (-0.02f64).exp()).abs() < 1e-3);
}

#[test]
fn thermal_state_examples() {
    let l = HilbertLayout::single(10).unwrap();
    let s = thermal_state(l, &[Spin::Down], 0.0).unwrap();
    assert_eq!(s.ground_probability(0).unwrap(), 1.0);
    let s = thermal_state(l, &[Spin::Down], 1.0).unwrap();
    let p = s.motional_populations(0).unwrap();
    let oracle = 0.5 / (1.0 - 0.5f64.powi(10));
    assert!((p[0] - oracle).abs() < 1e-12);
    assert!((p[0] - 0.5).abs() < 1e-3);
    assert!((p[1] - 0.25).abs() < 1e-3);
    assert!(thermal_state(l, &[Spin::Down], -1.0).is_err());
    // No coherences, spin fully down.
    assert_eq!(s.spin_population(0, Spin::Down).unwrap(), 1.0);
    assert!((s.purity() - p.iter().map(|x| x * x).sum::<f64>()).abs() < 1e-12);
}

#[test]
fn channel_examples() {
    let l = HilbertLayout::single(2).unwrap();
    let s = QuantumState::basis(l, &[(Spin::Up, 1)]).unwrap();
    let same = apply_channel(&s, &QuantumChannel::identity(l)).unwrap();
    assert!(max_abs(&(same.rho - &s.rho)) < 1e-12);
    let mixed = apply_channel(&s, &QuantumChannel::depolarizing(l, 1.0).unwrap()).unwrap();
    assert!((mixed.purity() - 0.25).abs() < 1e-12);
    let other = HilbertLayout::single(3).unwrap();
    assert!(apply_channel(&s, &QuantumChannel::identity(other)).is_err());
}

#[test]
fn partial_trace_examples() {
    let l = HilbertLayout::new(2, 2).unwrap();
    let prod = QuantumState::basis(l, &[(Spin::Up, 0), (Spin::Down, 1)]).unwrap();
    let m = partial_trace(&prod, &[1]).unwrap();
    let want = QuantumState::basis(HilbertLayout::single(2).unwrap(), &[(Spin::Down, 1)]).unwrap();
    assert!(max_abs(&(m.rho - want.rho)) < 1e-12);

    let mut psi = nalgebra::DVector::from_element(l.dim(), C64::new(0.0, 0.0));
    let a = l.index(&[(Spin::Down, 0), (Spin::Down, 0)]).unwrap();
    let b = l.index(&[(Spin::Up, 0), (Spin::Up, 0)]).unwrap();
    psi[a] = C64::new(0.5f64.sqrt(), 0.0);
    psi[b] = C64::new(0.5f64.sqrt(), 0.0);
    let bell = QuantumState::pure(l, &psi).unwrap();
    let spin = reduced_density(&bell, &[Factor::Spin(0)]).unwrap();
    assert!(max_abs(&(spin - CMatrix::identity(2, 2) * C64::new(0.5, 0.0))) < 1e-12);
    assert!(partial_trace(&bell, &[0, 0]).is_err());
}

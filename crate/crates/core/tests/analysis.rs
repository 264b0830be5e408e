use motionsim_core::analysis::*;
use motionsim_core::quantum::{thermal_populations, thermal_state};
use motionsim_core::{hz, HilbertLayout, PhysicalParams, Spin};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn sinusoid(x: f64, f: f64, c: f64, phi: f64, off: f64) -> f64 {
    off + 0.5 * c * (2.0 * PI * f * x + phi).cos()
}

#[test]
fn sinusoid_recovers_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let f = rng.random_range(20e3..50e3);
        let c = rng.random_range(0.3..1.0);
        let phi = rng.random_range(-3.0..3.0);
        let off = rng.random_range(0.3..0.7);
        let pts: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let x = i as f64 * 2e-6;
                (x, sinusoid(x, f, c, phi, off))
            })
            .collect();
        let fit = fit_sinusoid(&pts).unwrap();
        assert!(fit.converged);
        for (name, want) in [("frequency", f), ("contrast", c), ("offset", off)] {
            let got = fit.value(name);
            assert!((got - want).abs() / want < 1e-3, "{name}: {got} vs {want}");
        }
        assert!((fit.value("phase") - phi).abs() < 1e-3);
        assert!(fit.residual_rms < 1e-8);
    }
}

#[test]
fn sinusoid_tolerates_noise_and_reports_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<(f64, f64)> = (0..80)
        .map(|i| {
            let x = i as f64 * 2e-6;
            (x, sinusoid(x, 35.5e3, 0.9, 0.4, 0.5) + rng.random_range(-0.02..0.02))
        })
        .collect();
    let fit = fit_sinusoid(&pts).unwrap();
    let f = fit.get("frequency").unwrap();
    assert!((f.value - 35.5e3).abs() < 5.0 * f.sigma.max(1.0));
    assert!(f.sigma > 0.0 && f.sigma < 200.0);
}

#[test]
fn power_law_recovers_exponent() {
    let pts: Vec<(f64, f64)> = (1..15)
        .map(|i| {
            let x = 1e-5 * i as f64;
            (x, 3.0 * x.powf(2.5))
        })
        .collect();
    let fit = fit_power_law(&pts).unwrap();
    assert!((fit.value("B") - 2.5).abs() < 1e-6);
    assert!((fit.value("A") / 3.0 - 1.0).abs() < 1e-6);
}

#[test]
fn gaussian_decay_recovers_time_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts: Vec<(f64, f64)> = (0..25)
        .map(|i| {
            let t = i as f64 * 8e-3;
            (t, 0.95 * (-(t / 0.096f64).powi(2)).exp() + rng.random_range(-0.005..0.005))
        })
        .collect();
    let g = fit_gaussian_decay(&pts).unwrap();
    assert!((g.value("T") - 0.096).abs() / 0.096 < 0.01, "{}", g.value("T"));
    let e = fit_exp_decay(&pts).unwrap();
    assert!(g.residual_rms < e.residual_rms);
}

#[test]
fn exp_decay_recovers_time_constant() {
    let pts: Vec<(f64, f64)> = (0..20)
        .map(|i| {
            let t = i as f64 * 1e-3;
            (t, 0.8 * (-t / 4e-3).exp())
        })
        .collect();
    let e = fit_exp_decay(&pts).unwrap();
    assert!((e.value("T") - 4e-3).abs() < 1e-9);
    assert!((e.value("C0") - 0.8).abs() < 1e-9);
}

#[test]
fn scaling_fit_uses_only_the_window() {
    let omega: Vec<f64> = (0..12).map(|i| hz(5e3 * 1.3f64.powi(i))).collect();
    let cut = hz(20e3);
    // Below the cutoff the data deliberately break the power law.
    let ec: Vec<f64> = omega.iter().map(|&w| if w >= cut { 1.0 - 4e8 / (w * w) } else { 0.5 }).collect();
    let sc: Vec<f64> = omega.iter().zip(&ec).map(|(&w, e)| e - 1e13 / w.powi(3)).collect();
    let fit = fit_scaling(&omega, &sc, &ec, cut).unwrap();
    assert!((fit.ecc_infidelity.value("B") - 2.0).abs() < 1e-9);
    assert!((fit.ecc_advantage.value("B") - 3.0).abs() < 1e-9);
    assert!(fit_scaling(&omega, &sc[1..], &ec, cut).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fits_are_covariant_under_x_rescaling(k in 0.1f64..10.0, f in 20e3f64..50e3, phi in -3.0f64..3.0) {
        let pts: Vec<(f64, f64)> = (0..50).map(|i| {
            let x = i as f64 * 2e-6;
            (x, sinusoid(x, f, 0.8, phi, 0.5))
        }).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (k * x, y)).collect();
        let a = fit_sinusoid(&pts).unwrap();
        let b = fit_sinusoid(&scaled).unwrap();
        prop_assert!((a.value("frequency") / k - b.value("frequency")).abs() / b.value("frequency") < 1e-6);
        prop_assert!((a.value("contrast") - b.value("contrast")).abs() < 1e-6);

        let pl: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 2.0 * (i as f64).powf(1.7))).collect();
        let pl_scaled: Vec<(f64, f64)> = pl.iter().map(|&(x, y)| (k * x, y)).collect();
        let p = fit_power_law(&pl).unwrap().value("B");
        let q = fit_power_law(&pl_scaled).unwrap().value("B");
        prop_assert!((p - q).abs() < 1e-9);
    }
}

#[test]
fn fit_input_validation() {
    assert!(fit_sinusoid(&[(0.0, 1.0); 4]).is_err());
    assert!(fit_sinusoid(&[(0.0, 1.0); 10]).is_err());
    assert!(fit_gaussian_decay(&[(0.0, 1.0)]).is_err());
}

fn spectrum_of(n_bar: f64) -> (Spectrum, f64) {
    let params = PhysicalParams::clock(hz(35.5e3)).unwrap();
    let (probe, t) = default_probe(&params);
    let layout = HilbertLayout::single(10).unwrap();
    let state = thermal_state(layout, &[Spin::Down], n_bar).unwrap();
    let step = hz(150.0);
    let grid: Vec<f64> = (-800..=800)
        .map(|i| i as f64 * step)
        .filter(|d| {
            let w = params.omega;
            (d.abs() - w).abs() < hz(3e3) || d.abs() < hz(3e3)
        })
        .collect();
    let s = sideband_spectroscopy(&state, &probe, &grid, t).unwrap();
    assert!(s.warnings.is_empty(), "{:?}", s.warnings);
    (s, thermal_populations(10, n_bar).unwrap()[0])
}

#[test]
fn ground_state_has_no_red_sideband() {
    let (s, _) = spectrum_of(0.0);
    assert!(s.a_red / s.a_blue < 1e-3, "{} / {}", s.a_red, s.a_blue);
    assert!(s.a_blue > 0.9);
    assert!(s.a_carrier > 0.1);
    assert!((p0_from_sidebands(s.a_red, s.a_blue).unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn sideband_ratio_estimates_thermal_ground_population() {
    for n_bar in [0.1, 0.5, 1.0] {
        let (s, truth) = spectrum_of(n_bar);
        let est = p0_from_sidebands(s.a_red, s.a_blue).unwrap();
        assert!((est - truth).abs() < 0.02, "n̄ = {n_bar}: {est} vs {truth}");
    }
    let (s, _) = spectrum_of(1.0);
    assert!((s.a_red / s.a_blue - 0.5).abs() < 0.05, "{}", s.a_red / s.a_blue);
}

#[test]
fn spectroscopy_warnings() {
    let params = PhysicalParams::clock(hz(35.5e3)).unwrap();
    let (probe, t) = default_probe(&params);
    let layout = HilbertLayout::single(6).unwrap();
    let state = thermal_state(layout, &[Spin::Down], 0.0).unwrap();
    let coarse: Vec<f64> = (-3..=3).map(|i| i as f64 * params.omega).collect();
    let s = sideband_spectroscopy(&state, &probe, &coarse, t).unwrap();
    assert!(s.warnings.iter().any(|w| w.contains("undersamples")));
    let strong = PhysicalParams { rabi: params.omega, ..params };
    let s = sideband_spectroscopy(&state, &strong, &coarse, t).unwrap();
    assert!(s.warnings.iter().any(|w| w.contains("not small")));
    let near: Vec<f64> = vec![0.0, hz(100.0)];
    let s = sideband_spectroscopy(&state, &probe, &near, t).unwrap();
    assert!(s.warnings.iter().any(|w| w.contains("red")));
}

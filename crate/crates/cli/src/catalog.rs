//! The named experiments.
//!
//! Physical-parameter overrides apply to the clock transition. The ³P₁
//! comparison columns always use the intercombination line.

use std::f64::consts::PI;

use motionsim_core::analysis::{
    default_probe, fit_exp_decay, fit_gaussian_decay, fit_scaling, fit_sinusoid, p0_from_sidebands,
    sideband_spectroscopy, Spectrum,
};
use motionsim_core::cooling::{self, limit_probabilities, reset_bound, CoolingConfig, InitialMotion, RegimeFlags};
use motionsim_core::entanglement::{
    hyper_entangle, motional_concurrence, motional_psi_plus, parity_scan_motion, parity_scan_spin, prepare_spin_bell,
    project_and_recover, spin_concurrence, transduce_pair,
};
use motionsim_core::quantum::motional_mixture_state;
use motionsim_core::sequences::{Jitter, PhaseBoundary, SequenceSettings, Sequencer, PHASE_SCAN_TAU};
use motionsim_core::{
    hz, BellKind, FitResult, HilbertLayout, PhysicalParams, PulseKind, PulseSpec, Spin, TwoAtomConfig,
};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{config_err, Result};
use crate::table::{Column, ResultTable};

pub const DEFAULT_TRAP_HZ: f64 = 35.5e3;
pub const AXIAL_TRAP_HZ: f64 = 10.7e3;
pub const DEFAULT_P0_PRIME: f64 = 0.77;
pub const AXIAL_P0_PRIME: f64 = 0.40;
pub const DEFAULT_HOLD_S: f64 = 640e-6;
pub const DEFAULT_FIT_OMEGA_MIN_HZ: f64 = 20e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridName {
    Omega,
    Tau,
    Phi,
    Hold,
    DepthRatio,
    Detuning,
    Rounds,
}

impl GridName {
    pub fn key(self) -> &'static str {
        match self {
            GridName::Omega => "omega_grid",
            GridName::Tau => "tau_grid",
            GridName::Phi => "phi_grid",
            GridName::Hold => "hold_grid",
            GridName::DepthRatio => "depth_ratio_grid",
            GridName::Detuning => "detuning_grid",
            GridName::Rounds => "rounds_grid",
        }
    }

    fn given(self, c: &ExperimentConfig) -> bool {
        let g = &c.grids;
        match self {
            GridName::Omega => g.omega_grid.is_some(),
            GridName::Tau => g.tau_grid.is_some(),
            GridName::Phi => g.phi_grid.is_some(),
            GridName::Hold => g.hold_grid.is_some(),
            GridName::DepthRatio => g.depth_ratio_grid.is_some(),
            GridName::Detuning => g.detuning_grid.is_some(),
            GridName::Rounds => g.rounds_grid.is_some(),
        }
    }
}

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    /// Grids the experiment reads; all have defaults.
    pub grids: &'static [GridName],
    run: fn(&ExperimentConfig) -> Result<ResultTable>,
}

use GridName::*;

pub const CATALOG: [Experiment; 11] = [
    Experiment {
        name: "fig2f_cooling_sweep",
        summary: "ground-state probability of ³P₁, idealized SC, idealized ECC and noisy ECC against trap frequency",
        grids: &[Omega],
        run: cooling_sweep,
    },
    Experiment {
        name: "figS4c_scaling",
        summary: "leakage of the idealized protocols and their power-law exponents",
        grids: &[Omega],
        run: scaling,
    },
    Experiment {
        name: "fig2d_spectroscopy",
        summary: "sideband spectra before and after noisy ECC, with thermal-model P₀ estimates",
        grids: &[Detuning],
        run: spectroscopy,
    },
    Experiment {
        name: "fig3b_ramsey",
        summary: "motional Ramsey fringe and its fitted frequency",
        grids: &[Tau],
        run: ramsey,
    },
    Experiment {
        name: "fig3c_phase_scan",
        summary: "Ramsey signal against a phase jump at the carrier-sideband and sideband-sideband boundaries",
        grids: &[Phi],
        run: phase_scan,
    },
    Experiment {
        name: "fig3f_echo_coherence",
        summary: "motional echo contrast: seeded jitter ensemble, single shot, and with erasure excision",
        grids: &[Tau],
        run: echo_coherence,
    },
    Experiment {
        name: "figS2_axial",
        summary: "noisy ECC and ³P₁ cooling along the weak axis",
        grids: &[Omega],
        run: axial,
    },
    Experiment {
        name: "fig4b_parity",
        summary: "motional Φ⁺ parity against hold time",
        grids: &[Hold],
        run: phi_parity,
    },
    Experiment {
        name: "figS6_psi_parity",
        summary: "motional Ψ⁺ parity at a fixed hold against the second tweezer's depth",
        grids: &[DepthRatio, Hold],
        run: psi_parity,
    },
    Experiment {
        name: "fig4_hyper",
        summary: "hyper-Bell spin parity before and after |↑↑⟩ projection, with motional recovery",
        grids: &[Phi, Hold],
        run: hyper,
    },
    Experiment {
        name: "reset_bound_table",
        summary: "analytic P₀ bound after repeated replacement",
        grids: &[Rounds],
        run: reset_table,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    CATALOG.iter().find(|e| e.name == name)
}

impl Experiment {
    /// Grids present in the config that this experiment does not read.
    pub fn unused_grids(&self, c: &ExperimentConfig) -> Vec<&'static str> {
        [Omega, Tau, Phi, Hold, DepthRatio, Detuning, Rounds]
            .into_iter()
            .filter(|g| g.given(c) && !self.grids.contains(g))
            .map(GridName::key)
            .collect()
    }

    pub fn execute(&self, c: &ExperimentConfig) -> Result<ResultTable> {
        let unused = self.unused_grids(c);
        if !unused.is_empty() {
            return config_err(format!("{} does not use {}", self.name, unused.join(", ")));
        }
        if c.program.is_some() && self.name != "fig3b_ramsey" {
            return config_err(format!("{} does not accept a program", self.name));
        }
        (self.run)(c)
    }

    /// Trap frequencies (Hz) the experiment runs at.
    pub fn trap_frequencies(&self, c: &ExperimentConfig) -> Vec<f64> {
        match self.name {
            "fig2f_cooling_sweep" | "figS4c_scaling" => omega_grid(c),
            "figS2_axial" => c.grids.omega_grid.clone().unwrap_or_else(|| vec![AXIAL_TRAP_HZ]),
            _ => vec![trap_hz(c)],
        }
    }
}

/// 20 log-spaced points over 5–100 kHz.
pub fn default_omega_grid() -> Vec<f64> {
    (0..20).map(|i| 5e3 * 20f64.powf(i as f64 / 19.0)).collect()
}

fn omega_grid(c: &ExperimentConfig) -> Vec<f64> {
    c.grids.omega_grid.clone().unwrap_or_else(default_omega_grid)
}

fn trap_hz(c: &ExperimentConfig) -> f64 {
    c.params.trap_frequency_hz.unwrap_or(DEFAULT_TRAP_HZ)
}

fn uniform(n: usize, step: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * step).collect()
}

/// Clock-transition parameters at `f_hz` with the config overrides.
pub fn clock_params(c: &ExperimentConfig, f_hz: f64) -> Result<PhysicalParams> {
    let p = c.params.apply(PhysicalParams::clock(hz(f_hz))?);
    p.validate()?;
    Ok(p)
}

/// Order-preserving parallel map over grid points.
fn par_rows<T: Sync>(xs: &[T], f: impl Fn(&T) -> Result<Vec<f64>> + Sync + Send) -> Result<Vec<Vec<f64>>> {
    xs.par_iter().map(f).collect()
}

fn cols(spec: &[(&str, &str)]) -> Vec<Column> {
    spec.iter().map(|(n, u)| Column::new(n, u)).collect()
}

fn with_fit(t: &mut ResultTable, name: &str, fit: FitResult) {
    t.metadata.fits.insert(name.to_string(), fit);
}

fn scalar(t: &mut ResultTable, name: &str, v: f64) {
    t.metadata.scalars.insert(name.to_string(), v);
}

fn noisy_ecc(c: &ExperimentConfig, f_hz: f64, p0_prime: f64) -> Result<CoolingConfig> {
    let mut cfg = CoolingConfig::ecc_noisy(hz(f_hz))?;
    cfg.params = c.params.apply(cfg.params);
    cfg.durations = c.options.durations();
    cfg.initial = InitialMotion::GroundFraction { p0: p0_prime };
    if let Some(n) = c.options.motional_levels {
        cfg.motional_levels = n;
    }
    if let Some(n) = c.options.iterations {
        cfg.iterations = n;
    }
    Ok(cfg)
}

fn sc_3p1_steady(f_hz: f64) -> Result<f64> {
    let r = cooling::run(&CoolingConfig::sc_3p1(hz(f_hz))?)?;
    Ok(r.stationary_p0.unwrap_or_else(|| r.p0()))
}

fn regime_warnings(c: &ExperimentConfig, p: &PhysicalParams) -> Vec<String> {
    RegimeFlags::evaluate(p, c.options.n_bar.unwrap_or(0.0)).warnings
}

fn cooling_sweep(c: &ExperimentConfig) -> Result<ResultTable> {
    let grid = omega_grid(c);
    let p0_prime = c.options.p0_prime.unwrap_or(DEFAULT_P0_PRIME);
    let rows = par_rows(&grid, |&f| {
        let limits = limit_probabilities(&clock_params(c, f)?)?;
        let noisy = cooling::run(&noisy_ecc(c, f, p0_prime)?)?.p0();
        Ok(vec![f, sc_3p1_steady(f)?, limits.p0_sc, limits.p0_ec, noisy])
    })?;
    let margin = rows.iter().map(|r| r[3] - r[2]).fold(f64::INFINITY, f64::min);
    let mut t = ResultTable::new(
        cols(&[("omega", "Hz"), ("P0_sc3p1", "1"), ("P0_sc_ideal", "1"), ("P0_ecc_ideal", "1"), ("P0_ecc_noisy", "1")]),
        rows,
    )?;
    scalar(&mut t, "min_ecc_minus_sc", margin);
    for &f in &grid {
        t.metadata.warnings.extend(regime_warnings(c, &clock_params(c, f)?));
    }
    Ok(t)
}

fn scaling(c: &ExperimentConfig) -> Result<ResultTable> {
    let grid = omega_grid(c);
    let rows = par_rows(&grid, |&f| {
        let l = limit_probabilities(&clock_params(c, f)?)?;
        Ok(vec![f, l.p0_sc, l.p0_ec, l.p_flip, l.p_same])
    })?;
    let mut t = ResultTable::new(
        cols(&[("omega", "Hz"), ("P0_sc_ideal", "1"), ("P0_ecc_ideal", "1"), ("p_flip", "1"), ("p_same", "1")]),
        rows,
    )?;
    let omega: Vec<f64> = grid.iter().map(|&f| hz(f)).collect();
    let cut = hz(c.options.fit_omega_min_hz.unwrap_or(DEFAULT_FIT_OMEGA_MIN_HZ));
    match fit_scaling(&omega, &t.column("P0_sc_ideal").unwrap(), &t.column("P0_ecc_ideal").unwrap(), cut) {
        Ok(fit) => {
            scalar(&mut t, "B_ecc_infidelity", fit.ecc_infidelity.value("B"));
            scalar(&mut t, "B_ecc_advantage", fit.ecc_advantage.value("B"));
            with_fit(&mut t, "ecc_infidelity", fit.ecc_infidelity);
            with_fit(&mut t, "ecc_advantage", fit.ecc_advantage);
        }
        Err(e) => t.metadata.warnings.push(format!("scaling fit skipped: {e}")),
    }
    Ok(t)
}

/// ±3 kHz windows at 150 Hz spacing around the carrier and both sidebands.
fn default_detuning_grid(f_hz: f64) -> Vec<f64> {
    let window: Vec<f64> = (-20..=20).map(|i| i as f64 * 150.0).collect();
    [-f_hz, 0.0, f_hz].iter().flat_map(|&c| window.iter().map(move |d| c + d)).collect()
}

fn spectroscopy(c: &ExperimentConfig) -> Result<ResultTable> {
    let f = trap_hz(c);
    let params = clock_params(c, f)?;
    let (mut probe, mut t_probe) = default_probe(&params);
    if let Some(r) = c.params.rabi_hz {
        probe.rabi = hz(r);
        t_probe = PI / (params.eta * probe.rabi);
    }
    let grid_hz = c.grids.detuning_grid.clone().unwrap_or_else(|| default_detuning_grid(f));
    let grid: Vec<f64> = grid_hz.iter().map(|&d| hz(d)).collect();
    let p0_prime = c.options.p0_prime.unwrap_or(DEFAULT_P0_PRIME);
    let cfg = noisy_ecc(c, f, p0_prime)?;
    let levels = cfg.motional_levels;
    let layout = HilbertLayout::single(levels)?;
    let before = cfg.initial.populations(levels)?;
    let after = cooling::run(&cfg)?.final_populations;
    let spectra = [&before, &after]
        .par_iter()
        .map(|pops| {
            let s = motional_mixture_state(layout, &[Spin::Down], pops)?;
            sideband_spectroscopy(&s, &probe, &grid, t_probe)
        })
        .collect::<motionsim_core::Result<Vec<Spectrum>>>()?;
    let rows =
        grid_hz.iter().enumerate().map(|(i, &d)| vec![d, spectra[0].points[i].1, spectra[1].points[i].1]).collect();
    let mut t = ResultTable::new(cols(&[("detuning", "Hz"), ("P_before", "1"), ("P_after", "1")]), rows)?;
    for (label, s, pops) in [("before", &spectra[0], &before), ("after", &spectra[1], &after)] {
        scalar(&mut t, &format!("a_red_{label}"), s.a_red);
        scalar(&mut t, &format!("a_blue_{label}"), s.a_blue);
        scalar(&mut t, &format!("P0_true_{label}"), pops[0]);
        match p0_from_sidebands(s.a_red, s.a_blue) {
            Ok(p) => scalar(&mut t, &format!("P0_estimate_{label}"), p),
            Err(e) => t.metadata.warnings.push(format!("{label}: {e}")),
        }
        t.metadata.warnings.extend(s.warnings.iter().map(|w| format!("{label}: {w}")));
    }
    scalar(&mut t, "probe_time_s", t_probe);
    Ok(t)
}

fn sequencer(
    c: &ExperimentConfig,
    params: PhysicalParams,
    default_model: crate::config::ModelName,
) -> Result<Sequencer> {
    let o = &c.options;
    let settings = SequenceSettings {
        model: o.pulse_model.unwrap_or(default_model).into(),
        sideband_infidelity: o.sideband_infidelity.unwrap_or(0.0),
        failure: o.failure_mode.map(Into::into).unwrap_or_default(),
        wait_detuning: hz(o.wait_detuning_hz.unwrap_or(0.0)),
        imaging_infidelity: o.imaging_infidelity.unwrap_or(0.0),
        motional_levels: o.motional_levels.unwrap_or(SequenceSettings::default().motional_levels),
    };
    Ok(Sequencer::new(params, settings)?)
}

/// Copy of `program` with every wait lasting `tau`.
fn with_waits(program: &[PulseSpec], tau: f64) -> Vec<PulseSpec> {
    program.iter().map(|s| if s.kind == PulseKind::Wait { PulseSpec { duration: tau, ..*s } } else { *s }).collect()
}

fn ramsey(c: &ExperimentConfig) -> Result<ResultTable> {
    let seq = sequencer(c, clock_params(c, trap_hz(c))?, crate::config::ModelName::Exact)?;
    let taus = c.grids.tau_grid.clone().unwrap_or_else(|| uniform(60, 2e-6));
    let s0 = seq.ground_up()?;
    let rows = par_rows(&taus, |&tau| {
        let prog = match &c.program {
            Some(p) => with_waits(p, tau),
            None => Sequencer::ramsey_program(tau),
        };
        Ok(vec![tau, seq.run(&s0, &prog)?.p_down()?])
    })?;
    let mut t = ResultTable::new(cols(&[("tau", "s"), ("P_down", "1")]), rows)?;
    let pts: Vec<(f64, f64)> = t.rows.iter().map(|r| (r[0], r[1])).collect();
    match fit_sinusoid(&pts) {
        Ok(fit) => {
            scalar(&mut t, "fringe_frequency_hz", fit.value("frequency"));
            scalar(&mut t, "fringe_contrast", fit.value("contrast"));
            with_fit(&mut t, "fringe", fit);
        }
        Err(e) => t.metadata.warnings.push(format!("fringe fit skipped: {e}")),
    }
    Ok(t)
}

fn phase_scan(c: &ExperimentConfig) -> Result<ResultTable> {
    let seq = sequencer(c, clock_params(c, trap_hz(c))?, crate::config::ModelName::Exact)?;
    let phis = c.grids.phi_grid.clone().unwrap_or_else(|| uniform(13, PI / 6.0));
    let tau = c.options.tau_s.unwrap_or(PHASE_SCAN_TAU);
    let rows = par_rows(&phis, |&phi| {
        let cs = seq.phase_scan(PhaseBoundary::CarrierSideband, tau, &[phi])?.points[0].1;
        let ss = seq.phase_scan(PhaseBoundary::SidebandSideband, tau, &[phi])?.points[0].1;
        Ok(vec![phi, cs, ss])
    })?;
    let mut t = ResultTable::new(
        cols(&[("phi", "rad"), ("P_down_carrier_sideband", "1"), ("P_down_sideband_sideband", "1")]),
        rows,
    )?;
    for (k, name) in [(1, "modulation_carrier_sideband"), (2, "modulation_sideband_sideband")] {
        let v: Vec<f64> = t.rows.iter().map(|r| r[k]).collect();
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
        scalar(&mut t, name, m);
    }
    Ok(t)
}

fn echo_coherence(c: &ExperimentConfig) -> Result<ResultTable> {
    let seq = sequencer(c, clock_params(c, trap_hz(c))?, crate::config::ModelName::Resonant)?;
    let taus = c.grids.tau_grid.clone().unwrap_or_else(|| uniform(10, 15e-3));
    let d = Jitter::default();
    let o = &c.options;
    let jitter = Jitter {
        static_sigma: o.static_jitter_hz.map(hz).unwrap_or(d.static_sigma),
        segment_sigma: o.segment_jitter.unwrap_or(d.segment_sigma),
        shots: o.shots.unwrap_or(d.shots),
    };
    let ensemble = seq.echo_jitter_ensemble(&taus, &jitter, c.seed)?;
    let rows = par_rows(&ensemble, |&(tau, jittered)| {
        Ok(vec![tau, jittered, seq.echo(tau, false)?.contrast, seq.echo(tau, true)?.contrast])
    })?;
    let mut t = ResultTable::new(
        cols(&[("tau", "s"), ("contrast_jitter", "1"), ("contrast_bare", "1"), ("contrast_excised", "1")]),
        rows,
    )?;
    for (name, fit) in [("gaussian", fit_gaussian_decay(&ensemble)), ("exponential", fit_exp_decay(&ensemble))] {
        match fit {
            Ok(f) => {
                scalar(&mut t, &format!("T_{name}_s"), f.value("T"));
                scalar(&mut t, &format!("residual_rms_{name}"), f.residual_rms);
                with_fit(&mut t, name, f);
            }
            Err(e) => t.metadata.warnings.push(format!("{name} fit skipped: {e}")),
        }
    }
    Ok(t)
}

fn axial(c: &ExperimentConfig) -> Result<ResultTable> {
    let grid = c.grids.omega_grid.clone().unwrap_or_else(|| vec![AXIAL_TRAP_HZ]);
    let p0_prime = c.options.p0_prime.unwrap_or(AXIAL_P0_PRIME);
    let rows = par_rows(&grid, |&f| {
        let mut cfg = noisy_ecc(c, f, p0_prime)?;
        if c.options.motional_levels.is_none() {
            cfg.motional_levels = 12;
        }
        let r = cooling::run(&cfg)?;
        let post = r.p0_trajectory[cfg.iterations].1;
        Ok(vec![f, cfg.params.eta, r.p0_trajectory[0].1, post, r.p0(), sc_3p1_steady(f)?])
    })?;
    let mut t = ResultTable::new(
        cols(&[
            ("omega", "Hz"),
            ("eta", "1"),
            ("P0_initial", "1"),
            ("P0_postselected", "1"),
            ("P0_replacement", "1"),
            ("P0_sc3p1", "1"),
        ]),
        rows,
    )?;
    for &f in &grid {
        t.metadata.warnings.extend(regime_warnings(c, &clock_params(c, f)?));
    }
    Ok(t)
}

fn pair(c: &ExperimentConfig, f1_hz: f64, f2_hz: f64) -> Result<TwoAtomConfig> {
    let o = &c.options;
    let mut p = TwoAtomConfig::clock(hz(f1_hz), hz(f2_hz))?;
    p.params1 = clock_params(c, f1_hz)?;
    p.params2 = clock_params(c, f2_hz)?;
    p.cz_error = o.cz_error.unwrap_or(0.0);
    p.transduction_infidelity = o.transduction_infidelity.unwrap_or(0.0);
    p.failure = o.failure_mode.map(Into::into).unwrap_or_default();
    if let Some(n) = o.motional_levels {
        p.motional_levels = n;
    }
    p.validate()?;
    Ok(p)
}

fn phi_parity(c: &ExperimentConfig) -> Result<ResultTable> {
    let f = trap_hz(c);
    let cfg = pair(c, f, f)?;
    let holds = c.grids.hold_grid.clone().unwrap_or_else(|| uniform(60, 1e-6));
    let spin = prepare_spin_bell(&cfg, BellKind::PhiPlus)?;
    let m = transduce_pair(&spin, &cfg)?;
    let report = parity_scan_motion(&m, &cfg, BellKind::PhiPlus, &holds)?;
    let rows = report.parity_points.iter().map(|&(h, p)| vec![h, p]).collect();
    let mut t = ResultTable::new(cols(&[("hold", "s"), ("parity", "1")]), rows)?;
    scalar(&mut t, "parity_contrast", report.parity_contrast);
    scalar(&mut t, "pair_population", report.pair_population);
    scalar(&mut t, "motional_fidelity", report.fidelity);
    scalar(&mut t, "spin_fidelity", parity_scan_spin(&spin, BellKind::PhiPlus, &[])?.fidelity);
    if let Some(freq) = report.parity_frequency {
        scalar(&mut t, "parity_frequency_hz", freq);
    }
    if let Some(fit) = report.parity_fit {
        with_fit(&mut t, "parity", fit);
    }
    Ok(t)
}

fn psi_parity(c: &ExperimentConfig) -> Result<ResultTable> {
    let f1 = trap_hz(c);
    let hold = c.options.hold_s.unwrap_or(DEFAULT_HOLD_S);
    let ratios = c.grids.depth_ratio_grid.clone().unwrap_or_else(|| (0..17).map(|i| 1.0 + 0.005 * i as f64).collect());
    let rows = par_rows(&ratios, |&r| {
        // Trap frequency scales with the square root of the depth.
        let f2 = f1 * r.sqrt();
        let cfg = pair(c, f1, f2)?;
        let m = motional_psi_plus(&cfg)?;
        let p = parity_scan_motion(&m, &cfg, BellKind::PsiPlus, &[hold])?.parity_points[0].1;
        let dw = hz(f2 - f1);
        Ok(vec![r, f2 - f1, dw * hold, p])
    })?;
    let mut t = ResultTable::new(
        cols(&[("depth_ratio", "1"), ("delta_omega", "Hz"), ("phase", "rad"), ("parity", "1")]),
        rows,
    )?;
    // Reference: equal traps, parity against hold time.
    let holds = c.grids.hold_grid.clone().unwrap_or_else(|| uniform(40, 20e-6));
    let cfg = pair(c, f1, f1)?;
    let flat = parity_scan_motion(&motional_psi_plus(&cfg)?, &cfg, BellKind::PsiPlus, &holds)?;
    scalar(&mut t, "equal_trap_modulation", flat.parity_modulation);
    scalar(&mut t, "hold_s", hold);
    Ok(t)
}

fn hyper(c: &ExperimentConfig) -> Result<ResultTable> {
    let f = trap_hz(c);
    let cfg = pair(c, f, f)?;
    let phis = c.grids.phi_grid.clone().unwrap_or_else(|| uniform(13, PI / 6.0));
    let holds = c.grids.hold_grid.clone().unwrap_or_else(|| uniform(12, 1e-6));
    let h = hyper_entangle(&cfg)?;
    let before = parity_scan_spin(&h, BellKind::PhiPlus, &phis)?;
    let proj = project_and_recover(&h, &cfg, &phis, &holds)?;
    let pre = parity_scan_motion(&motional_psi_plus(&cfg)?, &cfg, BellKind::PsiPlus, &holds)?;
    let rows = phis
        .iter()
        .enumerate()
        .map(|(i, &phi)| vec![phi, before.parity_points[i].1, proj.null_spin_parity.parity_points[i].1])
        .collect();
    let mut t = ResultTable::new(cols(&[("phi", "rad"), ("parity_hyper", "1"), ("parity_projected", "1")]), rows)?;
    scalar(&mut t, "spin_concurrence", spin_concurrence(&h)?);
    scalar(&mut t, "motional_concurrence", motional_concurrence(&h)?);
    scalar(&mut t, "spin_fidelity", before.fidelity);
    scalar(&mut t, "kept_probability", proj.kept_probability);
    scalar(&mut t, "projected_spin_modulation", proj.null_spin_parity.parity_modulation);
    scalar(&mut t, "recovered_motional_contrast", proj.recovered_motion.parity_contrast);
    scalar(&mut t, "recovered_motional_fidelity", proj.recovered_motion.fidelity);
    scalar(&mut t, "pre_projection_motional_contrast", pre.parity_contrast);
    Ok(t)
}

fn reset_table(c: &ExperimentConfig) -> Result<ResultTable> {
    let p0 = c.options.p0_prime.unwrap_or(DEFAULT_P0_PRIME);
    let rounds = c.grids.rounds_grid.clone().unwrap_or_else(|| (1..=5).collect());
    let rows = rounds.iter().map(|&r| Ok(vec![r as f64, reset_bound(p0, r)?])).collect::<Result<Vec<_>>>()?;
    let mut t = ResultTable::new(cols(&[("rounds", "1"), ("P0_bound", "1")]), rows)?;
    scalar(&mut t, "p0_prime", p0);
    Ok(t)
}

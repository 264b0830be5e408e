//! Sideband cooling and erasure-correction cooling (ECC).
//!
//! Sideband pulses last `t_π = π / (Ω |⟨0|e^{iη(a+a†)}|1⟩|)` and evolve under
//! the full Hamiltonian, so higher motional levels are over- or under-rotated.
//! ECC uses the blue sideband from |↑⟩ (|↑,n⟩ → |↓,n−1⟩), leaving |↑,0⟩ dark.

use num_complex::Complex64 as C64;

use crate::dynamics::{
    build_hamiltonian, decay_projection_channel, dipole_jump_set, heating_jump_set, lifetime_jump_set,
    unitary_propagator, Liouvillian, PhysicalParams, Propagator, Sideband, DEFAULT_QUADRATURE_NODES,
};
use crate::error::{domain, Result, SimError};
use crate::quantum::{
    apply_channel, motional_mixture_state, thermal_populations, CMatrix, HilbertLayout, OperatorMatrix, QuantumChannel,
    QuantumState, Spin,
};

pub const DEFAULT_MOTIONAL_LEVELS: usize = 10;
/// Window and threshold of the steady-state test.
pub const STEADY_WINDOW: usize = 10;
pub const STEADY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoolingVariant {
    Sc3p1,
    ScIdeal,
    EccIdealReplacement,
    EccNoisyReplacement,
    EccResetAnalytic,
}

/// Initial motional distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialMotion {
    Thermal {
        n_bar: f64,
    },
    /// Thermal distribution whose truncated ground population equals `p0`.
    GroundFraction {
        p0: f64,
    },
    Ground,
}

impl InitialMotion {
    pub fn populations(&self, levels: usize) -> Result<Vec<f64>> {
        match *self {
            InitialMotion::Thermal { n_bar } => thermal_populations(levels, n_bar),
            InitialMotion::Ground => {
                let mut p = vec![0.0; levels];
                p[0] = 1.0;
                Ok(p)
            }
            InitialMotion::GroundFraction { p0 } => {
                if !(p0 > 0.0 && p0 <= 1.0) {
                    return domain(format!("ground fraction must lie in (0, 1], got {p0}"));
                }
                let floor = 1.0 / levels as f64;
                if p0 <= floor {
                    return domain(format!("ground fraction {p0} unreachable with {levels} levels"));
                }
                // P₀(q) = (1−q)/(1−q^N) decreases in the ratio q ∈ [0, 1).
                let p0_of = |q: f64| (1.0 - q) / (1.0 - q.powi(levels as i32));
                let (mut lo, mut hi) = (0.0, 1.0 - 1e-15);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if p0_of(mid) > p0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let q = 0.5 * (lo + hi);
                thermal_populations(levels, q / (1.0 - q))
            }
        }
    }
}

/// Dead times of the replacement sequence, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Durations {
    pub slow_image_s: f64,
    pub fast_image_s: f64,
    pub replacement_s: f64,
}

impl Default for Durations {
    fn default() -> Self {
        Self { slow_image_s: 30e-3, fast_image_s: 24e-6, replacement_s: 1e-3 }
    }
}

/// Motional state of atoms that fill heralded-out sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FreshAtoms {
    /// Same distribution as the atoms that survived the heralds.
    MatchKept,
    /// `|↑⟩ ⊗ (p0|0⟩⟨0| + (1−p0)|1⟩⟨1|)`.
    GroundFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoolingConfig {
    pub variant: CoolingVariant,
    pub params: PhysicalParams,
    pub iterations: usize,
    pub initial: InitialMotion,
    pub durations: Durations,
    pub motional_levels: usize,
    pub quadrature_nodes: usize,
    pub fresh_atoms: FreshAtoms,
    /// Noisy ECC only: start in |↓⟩ and move to |↑⟩ with a carrier π pulse.
    pub carrier_transfer: bool,
}

impl CoolingConfig {
    fn base(variant: CoolingVariant, params: PhysicalParams, iterations: usize) -> Self {
        Self {
            variant,
            params,
            iterations,
            initial: InitialMotion::Thermal { n_bar: 1.0 },
            durations: Durations::default(),
            motional_levels: DEFAULT_MOTIONAL_LEVELS,
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
            fresh_atoms: FreshAtoms::MatchKept,
            carrier_transfer: false,
        }
    }

    /// Continuous cooling on ³P₁ for 1000 sideband Rabi cycles.
    pub fn sc_3p1(omega: f64) -> Result<Self> {
        Ok(Self::base(CoolingVariant::Sc3p1, PhysicalParams::intercombination(omega)?, 1000))
    }

    /// Red π pulse plus instantaneous decay, 100 iterations.
    pub fn sc_ideal(omega: f64) -> Result<Self> {
        let p = PhysicalParams { detuning: -omega, ..PhysicalParams::clock(omega)? };
        Ok(Self::base(CoolingVariant::ScIdeal, p, 100))
    }

    /// Blue π pulse plus herald-and-renormalise, 100 iterations.
    pub fn ecc_ideal(omega: f64) -> Result<Self> {
        let p = PhysicalParams { detuning: omega, ..PhysicalParams::clock(omega)? };
        Ok(Self::base(CoolingVariant::EccIdealReplacement, p, 100))
    }

    /// Two herald rounds with heating 3 s⁻¹, ³P₀ lifetime 100 s, P₀′ = 0.77.
    pub fn ecc_noisy(omega: f64) -> Result<Self> {
        let p = PhysicalParams {
            detuning: omega,
            heating_rate: 3.0,
            excited_lifetime: 100.0,
            ..PhysicalParams::clock(omega)?
        };
        let mut c = Self::base(CoolingVariant::EccNoisyReplacement, p, 2);
        c.initial = InitialMotion::GroundFraction { p0: 0.77 };
        c.carrier_transfer = true;
        Ok(c)
    }

    pub fn reset_analytic(p0_prime: f64, rounds: usize) -> Result<Self> {
        let mut c = Self::base(CoolingVariant::EccResetAnalytic, PhysicalParams::clock(crate::hz(35.5e3))?, rounds);
        c.initial = InitialMotion::GroundFraction { p0: p0_prime };
        Ok(c)
    }

    pub fn with_initial(mut self, initial: InitialMotion) -> Self {
        self.initial = initial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.iterations == 0 {
            return domain("iterations must be at least 1");
        }
        let d = self.durations;
        for (name, v) in
            [("slow_image_s", d.slow_image_s), ("fast_image_s", d.fast_image_s), ("replacement_s", d.replacement_s)]
        {
            if !(v >= 0.0) || !v.is_finite() {
                return domain(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.motional_levels < 2 {
            return domain("need at least two motional levels");
        }
        if let FreshAtoms::GroundFraction(p) = self.fresh_atoms {
            if !(0.0..=1.0).contains(&p) {
                return domain(format!("fresh-atom ground fraction {p} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub variant: CoolingVariant,
    /// `(step, P₀)`, step 0 being the initial state.
    pub p0_trajectory: Vec<(usize, f64)>,
    /// Normalised motional populations at the end.
    pub final_populations: Vec<f64>,
    /// Cumulative probability of having been heralded out at least once.
    pub discarded_fraction: f64,
    pub discarded_per_round: Vec<f64>,
    pub steady_state_reached: bool,
    /// Kernel of the Liouvillian, for continuous protocols.
    pub stationary_p0: Option<f64>,
}

impl ProtocolResult {
    pub fn p0(&self) -> f64 {
        self.p0_trajectory.last().map(|&(_, p)| p).unwrap_or(f64::NAN)
    }
}

/// `|ΔP₀| < STEADY_TOL` over the last `STEADY_WINDOW` steps.
pub fn steady_state_reached(traj: &[(usize, f64)]) -> bool {
    if traj.len() <= STEADY_WINDOW {
        return false;
    }
    let tail = &traj[traj.len() - STEADY_WINDOW - 1..];
    tail.windows(2).all(|w| (w[1].1 - w[0].1).abs() < STEADY_TOL)
}

pub fn run(config: &CoolingConfig) -> Result<ProtocolResult> {
    config.validate()?;
    match config.variant {
        CoolingVariant::Sc3p1 => run_sc_3p1(config),
        CoolingVariant::ScIdeal => run_sc_ideal(config),
        CoolingVariant::EccIdealReplacement => run_ecc_ideal_replacement(config),
        CoolingVariant::EccNoisyReplacement => run_ecc_noisy_replacement(config),
        CoolingVariant::EccResetAnalytic => run_reset_analytic(config),
    }
}

fn expect_variant(config: &CoolingConfig, v: CoolingVariant) -> Result<()> {
    if config.variant != v {
        return Err(SimError::Protocol(format!("config variant {:?} passed to the {v:?} runner", config.variant)));
    }
    config.validate()
}

fn initial_state(config: &CoolingConfig, spin: Spin) -> Result<(HilbertLayout, QuantumState)> {
    let layout = HilbertLayout::single(config.motional_levels)?;
    let pops = config.initial.populations(config.motional_levels)?;
    Ok((layout, motional_mixture_state(layout, &[spin], &pops)?))
}

fn finish(
    variant: CoolingVariant,
    traj: Vec<(usize, f64)>,
    state: &QuantumState,
    discarded: Vec<f64>,
) -> Result<ProtocolResult> {
    let t = state.trace();
    let final_populations = state.motional_populations(0)?.iter().map(|p| p / t).collect();
    let kept: f64 = discarded.iter().map(|p| 1.0 - p).product();
    Ok(ProtocolResult {
        variant,
        steady_state_reached: steady_state_reached(&traj),
        p0_trajectory: traj,
        final_populations,
        discarded_fraction: 1.0 - kept,
        discarded_per_round: discarded,
        stationary_p0: None,
    })
}

fn sideband_unitary(params: &PhysicalParams, layout: HilbertLayout, sideband: Sideband) -> Result<CMatrix> {
    let t = params.sideband_pi_time(layout.motional_levels())?;
    let p = PhysicalParams { linewidth: 0.0, ..*params };
    unitary_propagator(&build_hamiltonian(&p, layout, 0, sideband)?, t)
}

/// Continuous red-detuned drive on a broad line with recoil.
pub fn run_sc_3p1(config: &CoolingConfig) -> Result<ProtocolResult> {
    expect_variant(config, CoolingVariant::Sc3p1)?;
    let p = &config.params;
    if !(p.linewidth > 0.0) {
        return domain("³P₁ cooling needs Γ > 0");
    }
    let (layout, mut state) = initial_state(config, Spin::Down)?;
    let h = build_hamiltonian(p, layout, 0, Sideband::Custom(p.detuning))?;
    let mut jumps = dipole_jump_set(p, layout, 0, config.quadrature_nodes)?;
    jumps.extend(heating_jump_set(p, layout, 0)?);
    jumps.extend(lifetime_jump_set(p, layout, 0)?);
    let lv = Liouvillian::new(h, jumps)?;
    // One sideband Rabi cycle.
    let cycle = 2.0 * p.sideband_pi_time(config.motional_levels)?;
    let step = lv.propagator(cycle)?;
    let mut traj = vec![(0, state.ground_probability(0)?)];
    for k in 1..=config.iterations {
        state = step.apply(&state)?;
        traj.push((k, state.ground_probability(0)?));
    }
    let stationary = lv.stationary_state()?.ground_probability(0)?;
    let mut r = finish(config.variant, traj, &state, Vec::new())?;
    r.stationary_p0 = Some(stationary);
    Ok(r)
}

/// Red π pulse followed by projection onto |↓⟩ with recoil, repeated.
pub fn run_sc_ideal(config: &CoolingConfig) -> Result<ProtocolResult> {
    expect_variant(config, CoolingVariant::ScIdeal)?;
    let (layout, mut state) = initial_state(config, Spin::Down)?;
    let u = sideband_unitary(&config.params, layout, Sideband::Red)?;
    let decay = decay_projection_channel(&config.params, layout, 0, config.quadrature_nodes)?;
    let mut traj = vec![(0, state.ground_probability(0)?)];
    for k in 1..=config.iterations {
        state = apply_channel(&state.conjugated(&u), &decay)?;
        traj.push((k, state.ground_probability(0)?));
    }
    finish(config.variant, traj, &state, Vec::new())
}

/// Blue π pulse from |↑⟩, discard |↓⟩, renormalise; repeated.
pub fn run_ecc_ideal_replacement(config: &CoolingConfig) -> Result<ProtocolResult> {
    expect_variant(config, CoolingVariant::EccIdealReplacement)?;
    let (layout, mut state) = initial_state(config, Spin::Up)?;
    let u = sideband_unitary(&config.params, layout, Sideband::Blue)?;
    let herald = QuantumChannel::herald_keep(layout, 0, Spin::Up)?;
    let mut traj = vec![(0, state.ground_probability(0)?)];
    let mut discarded = Vec::with_capacity(config.iterations);
    for k in 1..=config.iterations {
        let kept = apply_channel(&state.conjugated(&u), &herald)?;
        discarded.push(1.0 - kept.trace());
        state = kept.renormalized()?;
        traj.push((k, state.ground_probability(0)?));
    }
    finish(config.variant, traj, &state, discarded)
}

/// Heating and ³P₀ decay only; both commute with the free motional rotation,
/// so dead times drop the Hamiltonian.
fn dead_time(params: &PhysicalParams, layout: HilbertLayout, t: f64) -> Result<Propagator> {
    let d = layout.dim();
    let zero = OperatorMatrix::new(layout, CMatrix::zeros(d, d), "0")?;
    let mut jumps = heating_jump_set(params, layout, 0)?;
    jumps.extend(lifetime_jump_set(params, layout, 0)?);
    Liouvillian::new(zero, jumps)?.propagator(t)
}

/// The replacement sequence: carrier transfer, then rounds of
/// [blue π, image dead time, herald |↓⟩], then refill and wait.
pub fn run_ecc_noisy_replacement(config: &CoolingConfig) -> Result<ProtocolResult> {
    expect_variant(config, CoolingVariant::EccNoisyReplacement)?;
    let p = &config.params;
    let start = if config.carrier_transfer { Spin::Down } else { Spin::Up };
    let (layout, mut state) = initial_state(config, start)?;
    let levels = config.motional_levels;
    let mut traj = vec![(0, state.ground_probability(0)?)];
    if config.carrier_transfer {
        let t = std::f64::consts::PI / (p.rabi * p.coupling_element(levels, 0, 0)?);
        let pc = PhysicalParams { linewidth: 0.0, ..*p };
        let u = unitary_propagator(&build_hamiltonian(&pc, layout, 0, Sideband::Carrier)?, t)?;
        state = state.conjugated(&u);
    }
    let u = sideband_unitary(p, layout, Sideband::Blue)?;
    let herald = QuantumChannel::herald_keep(layout, 0, Spin::Up)?;
    let d = config.durations;
    let first = dead_time(p, layout, d.slow_image_s + d.fast_image_s)?;
    let later = dead_time(p, layout, d.fast_image_s)?;
    let mut discarded = Vec::with_capacity(config.iterations);
    for k in 1..=config.iterations {
        let before = state.trace();
        let wait = if k == 1 { &first } else { &later };
        state = apply_channel(&wait.apply(&state.conjugated(&u))?, &herald)?;
        discarded.push(1.0 - state.trace() / before);
        traj.push((k, state.ground_probability(0)?));
    }
    // Refill the emptied sites, then heat during the replacement time.
    let missing = 1.0 - state.trace();
    let fresh = match config.fresh_atoms {
        FreshAtoms::MatchKept => state.renormalized()?,
        FreshAtoms::GroundFraction(g) => {
            let mut pops = vec![0.0; levels];
            pops[0] = g;
            pops[1] = 1.0 - g;
            motional_mixture_state(layout, &[Spin::Up], &pops)?
        }
    };
    state = QuantumState { layout, rho: &state.rho + &fresh.rho * C64::new(missing, 0.0) };
    state = dead_time(p, layout, d.replacement_s)?.apply(&state)?;
    traj.push((config.iterations + 1, state.ground_probability(0)?));
    finish(config.variant, traj, &state, discarded)
}

/// Iterate `P ← P + (1−P)·P₀′`.
pub fn reset_bound(p0_prime: f64, rounds: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0_prime) {
        return domain(format!("P₀′ must lie in [0, 1], got {p0_prime}"));
    }
    if rounds == 0 {
        return domain("reset bound needs at least one round");
    }
    Ok((0..rounds).fold(p0_prime, |p, _| p + (1.0 - p) * p0_prime))
}

fn run_reset_analytic(config: &CoolingConfig) -> Result<ProtocolResult> {
    let p0 = match config.initial {
        InitialMotion::GroundFraction { p0 } => p0,
        InitialMotion::Ground => 1.0,
        InitialMotion::Thermal { n_bar } => 1.0 / (1.0 + n_bar),
    };
    let mut traj = vec![(0, p0)];
    for k in 1..=config.iterations {
        traj.push((k, reset_bound(p0, k)?));
    }
    let last = traj.last().map(|t| t.1).unwrap_or(p0);
    Ok(ProtocolResult {
        variant: config.variant,
        steady_state_reached: steady_state_reached(&traj),
        p0_trajectory: traj,
        final_populations: vec![last, 1.0 - last],
        discarded_fraction: 0.0,
        discarded_per_round: Vec::new(),
        stationary_p0: None,
    })
}

/// Regime diagnostics for a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeFlags {
    pub sideband_resolved: bool,
    pub lamb_dicke: bool,
    pub warnings: Vec<String>,
}

impl RegimeFlags {
    /// Sideband-resolved: Ω < ω and Γ < ω. Lamb-Dicke: η√(2n̄+1) < 1.
    pub fn evaluate(params: &PhysicalParams, n_bar: f64) -> Self {
        let sideband_resolved = params.rabi < params.omega && params.linewidth < params.omega;
        let ld = params.eta * (2.0 * n_bar + 1.0).sqrt();
        let lamb_dicke = ld < 1.0;
        let mut warnings = Vec::new();
        if !sideband_resolved {
            warnings.push(format!(
                "sideband-resolved condition violated at ω/2π = {:.4} kHz",
                crate::to_hz(params.omega) * 1e-3
            ));
        }
        if !lamb_dicke {
            warnings.push(format!("Lamb-Dicke condition violated (η√(2n̄+1) = {ld:.3})"));
        }
        Self { sideband_resolved, lamb_dicke, warnings }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitProbabilities {
    /// Spin-flipping leakage, `P₀^EC − P₀^SC`.
    pub p_flip: f64,
    /// Spin-preserving leakage, `1 − P₀^EC`.
    pub p_same: f64,
    pub p0_sc: f64,
    pub p0_ec: f64,
    pub regime: RegimeFlags,
}

/// Steady-state leakage of the idealized protocols started in the ground state.
///
/// Starting in the motional ground state isolates the leakage floor; thermal
/// starts additionally leave population in levels whose sideband pulse area
/// is close to a multiple of 2π.
pub fn limit_probabilities(params: &PhysicalParams) -> Result<LimitProbabilities> {
    let omega = params.omega;
    let sc = CoolingConfig {
        params: PhysicalParams { detuning: -omega, linewidth: 0.0, ..*params },
        ..CoolingConfig::sc_ideal(omega)?
    }
    .with_initial(InitialMotion::Ground);
    let ec = CoolingConfig {
        params: PhysicalParams { detuning: omega, linewidth: 0.0, ..*params },
        ..CoolingConfig::ecc_ideal(omega)?
    }
    .with_initial(InitialMotion::Ground);
    let p0_sc = run_sc_ideal(&sc)?.p0();
    let p0_ec = run_ecc_ideal_replacement(&ec)?.p0();
    Ok(LimitProbabilities {
        p_flip: p0_ec - p0_sc,
        p_same: 1.0 - p0_ec,
        p0_sc,
        p0_ec,
        regime: RegimeFlags::evaluate(params, 0.0),
    })
}

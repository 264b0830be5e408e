//! Single-atom pulse programs.
//!
//! Pulses are expressed in the interaction picture of the free motion, so
//! only `wait` segments advance the motional phase `e^{−iωn t}`. The laser
//! phase of each tone is a running frame phase that `phase_shift` updates for
//! every later pulse on that tone.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    heating_jump_set, lifetime_jump_set, local_hamiltonian, Liouvillian, PhysicalParams, Propagator,
};
use crate::error::{domain, Result, SimError};
use crate::linalg::expm;
use crate::quantum::{
    apply_channel, hermitize, motion, spin, CMatrix, HilbertLayout, OperatorMatrix, QuantumChannel, QuantumState, Spin,
    ZERO,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Carrier,
    RedSideband,
    BlueSideband,
    Wait,
    PhaseShift,
    FastImage,
    Renormalize,
}

impl PulseKind {
    fn is_pulse(self) -> bool {
        matches!(self, PulseKind::Carrier | PulseKind::RedSideband | PulseKind::BlueSideband)
    }

    fn is_sideband(self) -> bool {
        matches!(self, PulseKind::RedSideband | PulseKind::BlueSideband)
    }
}

/// Which laser tone a phase shift acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tone {
    #[default]
    All,
    Carrier,
    Sideband,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub kind: PulseKind,
    /// Pulse area in radians.
    #[serde(default)]
    pub angle: f64,
    /// Laser phase (pulses) or phase increment (`phase_shift`).
    #[serde(default)]
    pub phase: f64,
    /// Wait length; for pulses a positive value overrides the angle.
    #[serde(default)]
    pub duration: f64,
    #[serde(default = "default_true")]
    pub record_erasure: bool,
    #[serde(default)]
    pub tone: Tone,
    /// Overrides the tone detuning (rad/s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
}

impl PulseSpec {
    fn new(kind: PulseKind) -> Self {
        Self { kind, angle: 0.0, phase: 0.0, duration: 0.0, record_erasure: true, tone: Tone::All, detuning: None }
    }

    fn pulse(kind: PulseKind, angle: f64, phase: f64) -> Self {
        Self { angle, phase, ..Self::new(kind) }
    }

    pub fn carrier(angle: f64, phase: f64) -> Self {
        Self::pulse(PulseKind::Carrier, angle, phase)
    }

    pub fn red(angle: f64, phase: f64) -> Self {
        Self::pulse(PulseKind::RedSideband, angle, phase)
    }

    pub fn blue(angle: f64, phase: f64) -> Self {
        Self::pulse(PulseKind::BlueSideband, angle, phase)
    }

    pub fn wait(duration: f64) -> Self {
        Self { duration, ..Self::new(PulseKind::Wait) }
    }

    pub fn phase_shift(phase: f64) -> Self {
        Self { phase, ..Self::new(PulseKind::PhaseShift) }
    }

    pub fn phase_shift_on(phase: f64, tone: Tone) -> Self {
        Self { phase, tone, ..Self::new(PulseKind::PhaseShift) }
    }

    pub fn fast_image() -> Self {
        Self::new(PulseKind::FastImage)
    }

    pub fn renormalize() -> Self {
        Self::new(PulseKind::Renormalize)
    }

    /// Same pulse with the phase advanced by π, which undoes it.
    pub fn inverse(&self) -> Self {
        Self { phase: self.phase + PI, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0 * PI + 1e-12).contains(&self.angle) {
            return domain(format!("pulse angle {} outside [0, 2π]", self.angle));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return domain(format!("duration {} must be finite and non-negative", self.duration));
        }
        if !self.phase.is_finite() || self.detuning.is_some_and(|d| !d.is_finite()) {
            return domain("phase and detuning must be finite");
        }
        Ok(())
    }
}

/// How pulses are propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PulseModel {
    /// Full Hamiltonian including off-resonant couplings.
    #[default]
    Exact,
    /// Only the couplings the tone is resonant with, exact matrix elements.
    Resonant,
}

/// What happens to the state when a sideband pulse fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FailureMode {
    /// The pulse does not act and coherences are lost; untransferred |↓⟩ remains and can be heralded.
    #[default]
    Leak,
    /// The pulse acts but coherences in the atom basis are lost.
    Dephase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceSettings {
    pub model: PulseModel,
    /// Per-sideband-pulse failure probability ε.
    pub sideband_infidelity: f64,
    pub failure: FailureMode,
    /// Static trap-frequency offset δω applied during waits.
    pub wait_detuning: f64,
    /// Probability that a |↓⟩ atom survives a fast image undetected.
    pub imaging_infidelity: f64,
    pub motional_levels: usize,
}

impl Default for SequenceSettings {
    fn default() -> Self {
        Self {
            model: PulseModel::Exact,
            sideband_infidelity: 0.0,
            failure: FailureMode::Leak,
            wait_detuning: 0.0,
            imaging_infidelity: 0.0,
            motional_levels: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureRecord {
    pub step: usize,
    /// Unconditional probability heralded at this step.
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOutcome {
    pub final_state: QuantumState,
    pub erasure_records: Vec<ErasureRecord>,
    pub survival_probability: f64,
}

impl SequenceOutcome {
    /// P(↓) conditioned on survival.
    pub fn p_down(&self) -> Result<f64> {
        Ok(self.final_state.spin_population(0, Spin::Down)? / self.final_state.trace())
    }
}

type PulseKey = (PulseKind, u64, u64, u64);

/// Runs pulse programs for one atom; caches pulse unitaries and dissipative waits.
#[derive(Debug)]
pub struct Sequencer {
    pub params: PhysicalParams,
    pub settings: SequenceSettings,
    pub layout: HilbertLayout,
    pulses: Mutex<HashMap<PulseKey, CMatrix>>,
    waits: Mutex<HashMap<u64, Option<Propagator>>>,
    tones: Mutex<HashMap<PulseKind, f64>>,
}

impl Clone for Sequencer {
    fn clone(&self) -> Self {
        Self {
            params: self.params,
            settings: self.settings,
            layout: self.layout,
            pulses: Mutex::new(HashMap::new()),
            waits: Mutex::new(HashMap::new()),
            tones: Mutex::new(HashMap::new()),
        }
    }
}

impl Sequencer {
    pub fn new(params: PhysicalParams, settings: SequenceSettings) -> Result<Self> {
        params.validate()?;
        if !(0.0..=1.0).contains(&settings.sideband_infidelity) || !(0.0..=1.0).contains(&settings.imaging_infidelity) {
            return domain("infidelities must lie in [0, 1]");
        }
        if !settings.wait_detuning.is_finite() {
            return domain("wait detuning must be finite");
        }
        let layout = HilbertLayout::single(settings.motional_levels)?;
        if settings.motional_levels < 3 {
            return domain("pulse sequences need at least three motional levels");
        }
        Ok(Self {
            params,
            settings,
            layout,
            pulses: Mutex::new(HashMap::new()),
            waits: Mutex::new(HashMap::new()),
            tones: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_defaults(params: PhysicalParams) -> Result<Self> {
        Self::new(params, SequenceSettings::default())
    }

    pub fn ground_up(&self) -> Result<QuantumState> {
        QuantumState::basis(self.layout, &[(Spin::Up, 0)])
    }

    /// Duration of a pulse of `angle` on the targeted transition.
    pub fn pulse_duration(&self, spec: &PulseSpec) -> Result<f64> {
        if spec.duration > 0.0 {
            return Ok(spec.duration);
        }
        let (m, n) = match spec.kind {
            PulseKind::Carrier => (0, 0),
            PulseKind::BlueSideband | PulseKind::RedSideband => (1, 0),
            _ => return Ok(0.0),
        };
        let el = self.params.coupling_element(self.layout.motional_levels(), m, n)?;
        if !(self.params.rabi * el > 0.0) {
            return domain("pulse has zero coupling");
        }
        Ok(spec.angle / (self.params.rabi * el))
    }

    fn tone_detuning(&self, spec: &PulseSpec) -> Result<f64> {
        if let Some(d) = spec.detuning {
            return Ok(d);
        }
        match spec.kind {
            PulseKind::RedSideband | PulseKind::BlueSideband if self.settings.model == PulseModel::Exact => {
                self.calibrated_sideband(spec.kind)
            }
            PulseKind::RedSideband => Ok(-self.params.omega),
            PulseKind::BlueSideband => Ok(self.params.omega),
            _ => Ok(0.0),
        }
    }

    /// Sideband tone detuning that maximises the |↓,0⟩→|↑,1⟩ (blue) or
    /// |↓,1⟩→|↑,0⟩ (red) transfer of a π pulse, absorbing the carrier light shift.
    fn calibrated_sideband(&self, kind: PulseKind) -> Result<f64> {
        if let Some(d) = self.tones.lock().expect("cache lock").get(&kind) {
            return Ok(*d);
        }
        let n = self.layout.motional_levels();
        let rabi_sb = self.params.rabi * self.params.coupling_element(n, 1, 0)?;
        if !(rabi_sb > 0.0) {
            return domain("pulse has zero coupling");
        }
        let t = PI / rabi_sb;
        let (nominal, from, to) = match kind {
            PulseKind::BlueSideband => (self.params.omega, 0, n + 1),
            _ => (-self.params.omega, 1, n),
        };
        let transfer = |delta: f64| -> Result<f64> {
            let h = local_hamiltonian(&self.params, n, delta, 0.0)?;
            Ok(expm(&(h * C64::new(0.0, -t)))?[(to, from)].norm_sqr())
        };
        // Golden-section search over the main lobe.
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (nominal - 0.5 * rabi_sb, nominal + 0.5 * rabi_sb);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (transfer(c)?, transfer(d)?);
        for _ in 0..80 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = transfer(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = transfer(d)?;
            }
        }
        let best = 0.5 * (a + b);
        self.tones.lock().expect("cache lock").insert(kind, best);
        Ok(best)
    }

    /// Pulse unitary at zero phase.
    fn bare_unitary(&self, spec: &PulseSpec) -> Result<CMatrix> {
        let t = self.pulse_duration(spec)?;
        let delta = self.tone_detuning(spec)?;
        let key = (spec.kind, t.to_bits(), delta.to_bits(), 0);
        if let Some(u) = self.pulses.lock().expect("cache lock").get(&key) {
            return Ok(u.clone());
        }
        let n = self.layout.motional_levels();
        let u = match self.settings.model {
            PulseModel::Exact => {
                let h = local_hamiltonian(&self.params, n, delta, 0.0)?;
                let free = PhysicalParams { rabi: 0.0, ..self.params };
                let h0 = local_hamiltonian(&free, n, delta, 0.0)?;
                let u = expm(&(h0 * C64::new(0.0, t)))? * expm(&(h * C64::new(0.0, -t)))?;
                if spec.kind.is_sideband() && spec.detuning.is_none() {
                    frame_corrected(u, n, spec.kind)
                } else {
                    u
                }
            }
            PulseModel::Resonant => {
                let order: i64 = match spec.kind {
                    PulseKind::Carrier => 0,
                    PulseKind::BlueSideband => 1,
                    _ => -1,
                };
                let d = motion::displacement(n, self.params.eta)?;
                let mut c = CMatrix::zeros(2 * n, 2 * n);
                for k in 0..n as i64 {
                    let m = k + order;
                    if m < 0 || m >= n as i64 {
                        continue;
                    }
                    let (k, m) = (k as usize, m as usize);
                    c[(n + m, k)] = d[(m, k)] * 0.5 * self.params.rabi;
                }
                let v = &c + c.adjoint();
                expm(&(v * C64::new(0.0, -t)))?
            }
        };
        self.pulses.lock().expect("cache lock").insert(key, u.clone());
        Ok(u)
    }

    /// Pulse unitary with laser phase φ: `R U₀ R†`, `R = e^{iφ|↑⟩⟨↑|}`.
    pub fn pulse_unitary(&self, spec: &PulseSpec, phase: f64) -> Result<CMatrix> {
        let u = self.bare_unitary(spec)?;
        let n = self.layout.motional_levels();
        let e = C64::from_polar(1.0, phase);
        Ok(CMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let mut z = u[(i, j)];
            if i >= n {
                z *= e;
            }
            if j >= n {
                z *= e.conj();
            }
            z
        }))
    }

    fn dissipative_wait(&self, t: f64) -> Result<Option<Propagator>> {
        if let Some(p) = self.waits.lock().expect("cache lock").get(&t.to_bits()) {
            return Ok(p.clone());
        }
        let mut jumps = heating_jump_set(&self.params, self.layout, 0)?;
        jumps.extend(lifetime_jump_set(&self.params, self.layout, 0)?);
        let prop = if jumps.is_empty() || t == 0.0 {
            None
        } else {
            let d = self.layout.dim();
            let zero = OperatorMatrix::new(self.layout, CMatrix::zeros(d, d), "0")?;
            Some(Liouvillian::new(zero, jumps)?.propagator(t)?)
        };
        self.waits.lock().expect("cache lock").insert(t.to_bits(), prop.clone());
        Ok(prop)
    }

    /// Free evolution at trap frequency ω + δω, plus heating and decay.
    pub fn wait(&self, state: &QuantumState, t: f64, offset: f64) -> Result<QuantumState> {
        let n = self.layout.motional_levels();
        let w = self.params.omega + self.settings.wait_detuning + offset;
        let phases: Vec<C64> = (0..2 * n).map(|i| C64::from_polar(1.0, -w * (i % n) as f64 * t)).collect();
        let rho = CMatrix::from_fn(2 * n, 2 * n, |i, j| state.rho[(i, j)] * phases[i] * phases[j].conj());
        let s = QuantumState { layout: self.layout, rho };
        match self.dissipative_wait(t)? {
            Some(p) => p.apply(&s),
            None => Ok(s),
        }
    }

    fn dephase(rho: &CMatrix) -> CMatrix {
        CMatrix::from_diagonal(&rho.diagonal())
    }

    pub fn run(&self, state: &QuantumState, program: &[PulseSpec]) -> Result<SequenceOutcome> {
        self.run_with_offsets(state, program, &[])
    }

    /// As [`Sequencer::run`], with an extra trap-frequency offset for the k-th wait.
    pub fn run_with_offsets(
        &self,
        state: &QuantumState,
        program: &[PulseSpec],
        wait_offsets: &[f64],
    ) -> Result<SequenceOutcome> {
        crate::quantum::same_layout(self.layout, state.layout)?;
        let mut st = state.clone();
        let (mut carrier_phase, mut sideband_phase) = (0.0, 0.0);
        let mut scale = 1.0;
        let mut records = Vec::new();
        let mut wait_index = 0;
        let eps = self.settings.sideband_infidelity;
        let herald = {
            let n = self.layout.motional_levels();
            let mut ks = vec![OperatorMatrix::on_atom(
                self.layout,
                0,
                &spin::projector(Spin::Up),
                &CMatrix::identity(n, n),
                "keep↑",
            )?];
            let f = self.settings.imaging_infidelity;
            if f > 0.0 {
                ks.push(OperatorMatrix::on_atom(
                    self.layout,
                    0,
                    &(spin::projector(Spin::Down) * C64::new(f.sqrt(), 0.0)),
                    &CMatrix::identity(n, n),
                    "miss↓",
                )?);
            }
            QuantumChannel::new(ks, false)?
        };
        for (step, spec) in program.iter().enumerate() {
            spec.validate()?;
            match spec.kind {
                k if k.is_pulse() => {
                    let frame = if k == PulseKind::Carrier { carrier_phase } else { sideband_phase };
                    let u = self.pulse_unitary(spec, spec.phase + frame)?;
                    let ideal = &u * &st.rho * u.adjoint();
                    st.rho = if k.is_sideband() && eps > 0.0 {
                        let failed = match self.settings.failure {
                            FailureMode::Leak => Self::dephase(&st.rho),
                            FailureMode::Dephase => Self::dephase(&ideal),
                        };
                        ideal * C64::new(1.0 - eps, 0.0) + failed * C64::new(eps, 0.0)
                    } else {
                        ideal
                    };
                    st.rho = hermitize(std::mem::replace(&mut st.rho, CMatrix::zeros(0, 0)));
                }
                PulseKind::Wait => {
                    let off = wait_offsets.get(wait_index).copied().unwrap_or(0.0);
                    wait_index += 1;
                    st = self.wait(&st, spec.duration, off)?;
                }
                PulseKind::PhaseShift => match spec.tone {
                    Tone::All => {
                        carrier_phase += spec.phase;
                        sideband_phase += spec.phase;
                    }
                    Tone::Carrier => carrier_phase += spec.phase,
                    Tone::Sideband => sideband_phase += spec.phase,
                },
                PulseKind::FastImage => {
                    let before = st.trace();
                    st = apply_channel(&st, &herald)?;
                    if spec.record_erasure {
                        records.push(ErasureRecord { step, probability: scale * (before - st.trace()) });
                    }
                }
                PulseKind::Renormalize => {
                    let t = st.trace();
                    st = st.renormalized()?;
                    scale *= t;
                }
                _ => unreachable!("all pulse kinds handled"),
            }
        }
        let survival = scale * st.trace();
        Ok(SequenceOutcome { final_state: st, erasure_records: records, survival_probability: survival })
    }

    /// Fringe contrast of P(↓) over the phase of the last pulse (four-point, exact).
    pub fn analysis_contrast(&self, state: &QuantumState, program: &[PulseSpec]) -> Result<(f64, SequenceOutcome)> {
        let mut base = program.to_vec();
        let last = base
            .last_mut()
            .filter(|p| p.kind.is_pulse())
            .ok_or_else(|| SimError::Protocol("program must end with an analysis pulse".into()))?;
        let phase0 = last.phase;
        let mut p = [0.0; 4];
        let mut first = None;
        for (k, pk) in p.iter_mut().enumerate() {
            let mut prog = base.clone();
            prog.last_mut().expect("non-empty").phase = phase0 + k as f64 * PI / 2.0;
            let out = self.run(state, &prog)?;
            *pk = out.p_down()?;
            if k == 0 {
                first = Some(out);
            }
        }
        let c = (p[0] - p[2]).hypot(p[1] - p[3]);
        Ok((c, first.expect("ran at least once")))
    }

    pub fn ramsey_program(tau: f64) -> Vec<PulseSpec> {
        vec![
            PulseSpec::carrier(PI / 2.0, 0.0),
            PulseSpec::blue(PI, 0.0),
            PulseSpec::wait(tau),
            PulseSpec::blue(PI, 0.0).inverse(),
            PulseSpec::carrier(PI / 2.0, 0.0).inverse(),
        ]
    }

    pub fn ramsey(&self, tau_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        let s0 = self.ground_up()?;
        tau_grid.iter().map(|&tau| Ok((tau, self.run(&s0, &Self::ramsey_program(tau))?.p_down()?))).collect()
    }

    pub fn phase_scan_program(which: PhaseBoundary, tau: f64, phi: f64) -> Vec<PulseSpec> {
        let mut prog = Self::ramsey_program(tau);
        let at = match which {
            PhaseBoundary::CarrierSideband => 1,
            PhaseBoundary::SidebandSideband => 3,
        };
        prog.insert(at, PulseSpec::phase_shift(phi));
        prog
    }

    pub fn phase_scan(&self, which: PhaseBoundary, tau: f64, phi_grid: &[f64]) -> Result<PhaseScan> {
        let s0 = self.ground_up()?;
        let points = phi_grid
            .iter()
            .map(|&phi| Ok((phi, self.run(&s0, &Self::phase_scan_program(which, tau, phi))?.p_down()?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PhaseScan::new(points))
    }

    /// Four-sideband echo; the final carrier π/2 has phase `analysis_phase`.
    pub fn echo_program(tau: f64, excise: bool, analysis_phase: f64) -> Vec<PulseSpec> {
        let mut p = vec![PulseSpec::carrier(PI / 2.0, 0.0), PulseSpec::blue(PI, 0.0)];
        if excise {
            p.push(PulseSpec::fast_image());
        }
        p.extend([
            PulseSpec::wait(tau),
            PulseSpec::blue(PI, 0.0).inverse(),
            PulseSpec::carrier(PI, 0.0),
            PulseSpec::blue(PI, 0.0),
        ]);
        if excise {
            p.push(PulseSpec::fast_image());
        }
        p.extend([
            PulseSpec::wait(tau),
            PulseSpec::blue(PI, 0.0).inverse(),
            PulseSpec::carrier(PI / 2.0, analysis_phase),
        ]);
        p
    }

    pub fn echo(&self, tau: f64, excise: bool) -> Result<EchoOutcome> {
        let s0 = self.ground_up()?;
        let (contrast, outcome) = self.analysis_contrast(&s0, &Self::echo_program(tau, excise, 0.0))?;
        Ok(EchoOutcome { outcome, contrast })
    }

    /// Echo contrast averaged over shots with Gaussian trap-frequency jitter.
    pub fn echo_jitter_ensemble(&self, tau_grid: &[f64], jitter: &Jitter, seed: u64) -> Result<Vec<(f64, f64)>> {
        jitter.validate()?;
        let s0 = self.ground_up()?;
        let static_d = Normal::new(0.0, jitter.static_sigma).map_err(|e| SimError::Domain(e.to_string()))?;
        let seg_d = Normal::new(0.0, jitter.segment_sigma).map_err(|e| SimError::Domain(e.to_string()))?;
        let offsets: Vec<[f64; 2]> = (0..jitter.shots)
            .map(|shot| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(shot as u64);
                let s = static_d.sample(&mut rng);
                [s + seg_d.sample(&mut rng), s + seg_d.sample(&mut rng)]
            })
            .collect();
        tau_grid
            .iter()
            .map(|&tau| {
                let mut p = [0.0; 4];
                for (k, pk) in p.iter_mut().enumerate() {
                    let prog = Self::echo_program(tau, false, k as f64 * PI / 2.0);
                    // Parallel over shots; summed in shot order so the result is schedule-independent.
                    let shots = offsets
                        .par_iter()
                        .map(|off| self.run_with_offsets(&s0, &prog, off)?.p_down())
                        .collect::<Result<Vec<f64>>>()?;
                    *pk = shots.iter().sum::<f64>() / shots.len() as f64;
                }
                Ok((tau, (p[0] - p[2]).hypot(p[1] - p[3])))
            })
            .collect()
    }
}

/// Removes light-shift phases on the code space with a diagonal
/// `exp(i(a + b|↑⟩⟨↑| + c n))`, i.e. a spin frame and an oscillator frame update.
fn frame_corrected(u: CMatrix, n: usize, kind: PulseKind) -> CMatrix {
    // (lower, upper) of the resonant pair and the dark spectator.
    let (lo, hi, dark) = match kind {
        PulseKind::BlueSideband => ((Spin::Down, 0), (Spin::Up, 1), (Spin::Up, 0)),
        _ => ((Spin::Down, 1), (Spin::Up, 0), (Spin::Down, 0)),
    };
    let idx = |(s, m): (Spin, usize)| s.index() * n + m;
    let (l, h, d) = (idx(lo), idx(hi), idx(dark));
    if u[(h, l)].norm() < 1e-6 {
        return u;
    }
    let up = |s: Spin| if s == Spin::Up { 1.0 } else { 0.0 };
    // Target phases: −π/2 on both transfer elements, 0 on the spectator.
    let th = -PI / 2.0 - u[(h, l)].arg();
    let tl = -PI / 2.0 - u[(l, h)].arg();
    let td = -u[(d, d)].arg();
    // Solve a + b·up + c·m = target for the three code-space levels.
    let rows = [(lo, tl), (hi, th), (dark, td)];
    let m = nalgebra::Matrix3::from_fn(|r, k| {
        let (s, lvl) = rows[r].0;
        [1.0, up(s), lvl as f64][k]
    });
    let rhs = nalgebra::Vector3::new(rows[0].1, rows[1].1, rows[2].1);
    let Some(x) = m.lu().solve(&rhs) else { return u };
    let phase = |i: usize| C64::from_polar(1.0, x[0] + x[1] * (i / n) as f64 + x[2] * (i % n) as f64);
    CMatrix::from_fn(2 * n, 2 * n, |i, j| u[(i, j)] * phase(i))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseBoundary {
    /// Between the first carrier and the first sideband pulse.
    CarrierSideband,
    /// Between the two sideband pulses.
    SidebandSideband,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScan {
    pub points: Vec<(f64, f64)>,
    /// `max − min` of P(↓) over the scan.
    pub modulation: f64,
}

impl PhaseScan {
    fn new(points: Vec<(f64, f64)>) -> Self {
        let max = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        Self { modulation: if points.is_empty() { 0.0 } else { max - min }, points }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EchoOutcome {
    pub outcome: SequenceOutcome,
    /// Post-selected fringe contrast.
    pub contrast: f64,
}

/// Trap-frequency jitter for echo ensembles (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    /// Shot-to-shot offset common to both waits.
    pub static_sigma: f64,
    /// Independent offset per wait segment.
    pub segment_sigma: f64,
    pub shots: usize,
}

impl Jitter {
    pub fn validate(&self) -> Result<()> {
        if !(self.static_sigma >= 0.0 && self.segment_sigma >= 0.0) || self.shots == 0 {
            return domain("jitter needs non-negative widths and at least one shot");
        }
        Ok(())
    }
}

impl Default for Jitter {
    fn default() -> Self {
        Self { static_sigma: crate::hz(200.0), segment_sigma: 10.0, shots: 200 }
    }
}

pub fn apply_pulse(state: &QuantumState, spec: &PulseSpec, params: &PhysicalParams) -> Result<QuantumState> {
    let settings = SequenceSettings { motional_levels: state.layout.motional_levels(), ..Default::default() };
    Ok(Sequencer::new(*params, settings)?.run(state, &[*spec])?.final_state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    SpinToMotion,
    MotionToSpin,
}

/// Blue π pulse (or its inverse); warns through the error channel only on layout problems.
pub fn transduce(state: &QuantumState, params: &PhysicalParams, direction: Direction) -> Result<SequenceOutcome> {
    let settings = SequenceSettings { motional_levels: state.layout.motional_levels(), ..Default::default() };
    let seq = Sequencer::new(*params, settings)?;
    let pulse = match direction {
        Direction::SpinToMotion => PulseSpec::blue(PI, 0.0),
        Direction::MotionToSpin => PulseSpec::blue(PI, 0.0).inverse(),
    };
    seq.run(state, &[pulse])
}

/// Population outside {|↓,0⟩, |↑,0⟩}; transduction assumes this is small.
pub fn outside_code_space(state: &QuantumState) -> Result<f64> {
    let l = state.layout;
    let a = l.index(&[(Spin::Down, 0)])?;
    let b = l.index(&[(Spin::Up, 0)])?;
    Ok(state.trace() - state.rho[(a, a)].re - state.rho[(b, b)].re)
}

pub fn ramsey_motional(params: &PhysicalParams, tau_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    Sequencer::with_defaults(*params)?.ramsey(tau_grid)
}

/// Phase scans are taken at τ = 100 μs.
pub const PHASE_SCAN_TAU: f64 = 100e-6;

pub fn phase_sensitivity_scan(params: &PhysicalParams, which: PhaseBoundary, phi_grid: &[f64]) -> Result<PhaseScan> {
    Sequencer::with_defaults(*params)?.phase_scan(which, PHASE_SCAN_TAU, phi_grid)
}

pub fn motional_echo(params: &PhysicalParams, tau: f64, with_erasure_excision: bool) -> Result<EchoOutcome> {
    if !(tau >= 0.0) {
        return domain("echo wait must be non-negative");
    }
    Sequencer::with_defaults(*params)?.echo(tau, with_erasure_excision)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MidCircuitReport {
    pub omega_a: f64,
    pub omega_b: f64,
    /// Fringe contrast of the shelved ensemble B.
    pub b_contrast: f64,
    /// Probability that an A atom is detected in |↓⟩.
    pub a_detected: f64,
    /// Largest |↑↓| coherence of A after the image.
    pub a_coherence: f64,
    /// Motional excitation of A caused by B's sideband pulse.
    pub a_perturbation: f64,
    /// `(η_A Ω / (ω_A − ω_B))²`.
    pub perturbation_bound: f64,
}

/// Shelve B (trap depth scaled by `depth_ratio`) into motion, image, unshelve.
pub fn mid_circuit_readout(
    params: &PhysicalParams,
    depth_ratio: f64,
    settings: SequenceSettings,
) -> Result<MidCircuitReport> {
    if !(depth_ratio > 0.0 && depth_ratio < 1.0) {
        return domain(format!("depth ratio must lie in (0, 1), got {depth_ratio}"));
    }
    let pb = params.with_trap_frequency(params.omega * depth_ratio.sqrt())?;
    let seq_a = Sequencer::new(*params, settings)?;
    let seq_b = Sequencer::new(pb, settings)?;
    let shelve = PulseSpec::blue(PI, 0.0);
    let t_shelve = seq_b.pulse_duration(&shelve)?;
    let program_b = vec![
        PulseSpec::carrier(PI / 2.0, 0.0),
        shelve,
        PulseSpec::fast_image(),
        shelve.inverse(),
        PulseSpec::carrier(PI / 2.0, 0.0),
    ];
    let (b_contrast, _) = seq_b.analysis_contrast(&seq_b.ground_up()?, &program_b)?;

    // A sees the same laser: B's sideband tone and pulse length.
    let a_pulse = PulseSpec { duration: t_shelve, detuning: Some(pb.omega), ..shelve };
    let s_a = seq_a.run(&seq_a.ground_up()?, &[PulseSpec::carrier(PI / 2.0, 0.0), a_pulse])?;
    let pops = s_a.final_state.motional_populations(0)?;
    let a_perturbation = 1.0 - pops[0] / s_a.final_state.trace();
    let imaged = seq_a.run(&s_a.final_state, &[PulseSpec::fast_image()])?;
    let n = seq_a.layout.motional_levels();
    let rho = &imaged.final_state.rho;
    let mut a_coherence: f64 = 0.0;
    for i in 0..n {
        for j in n..2 * n {
            a_coherence = a_coherence.max(rho[(i, j)].norm());
        }
    }
    let delta = params.omega - pb.omega;
    Ok(MidCircuitReport {
        omega_a: params.omega,
        omega_b: pb.omega,
        b_contrast,
        a_detected: imaged.erasure_records.iter().map(|r| r.probability).sum(),
        a_coherence,
        a_perturbation,
        perturbation_bound: (params.eta * params.rabi / delta).powi(2),
    })
}

/// `|⟨0|ρ_m|1⟩|` of the motional reduced state (normalised).
pub fn motional_coherence(state: &QuantumState) -> Result<f64> {
    let r = crate::quantum::reduced_density(state, &[crate::quantum::Factor::Motion(0)])?;
    Ok(r[(0, 1)].norm() / state.trace())
}

/// Fidelity `⟨ψ|ρ|ψ⟩ / Tr ρ`.
pub fn fidelity_to_pure(state: &QuantumState, psi: &DVector<C64>) -> f64 {
    let v = &state.rho * psi;
    psi.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).fold(ZERO, |s, x| s + x).re / state.trace()
}

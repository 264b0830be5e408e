//! Two-atom Bell and hyper-Bell protocols with parity readout.
//!
//! Single-atom carrier rotations act on the spin only; the entangling gate is
//! an ideal CZ followed by spin depolarisation. Transduction uses the resonant
//! blue-sideband model of each atom with exact matrix elements.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::analysis::{fit_sinusoid, FitResult};
use crate::dynamics::PhysicalParams;
use crate::error::{domain, Result, SimError};
use crate::quantum::{
    concurrence, hermitize, reduced_density, spin, two_qubit_block, CMatrix, Factor, HilbertLayout, QuantumState, Spin,
};
use crate::sequences::{FailureMode, PulseModel, PulseSpec, SequenceSettings, Sequencer};

/// Largest population tolerated in the top motional level.
pub const LEAKAGE_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellKind {
    /// `(|↓↓⟩ + |↑↑⟩)/√2`, or `|00⟩ ± |11⟩` in motion.
    PhiPlus,
    /// `(|↓↑⟩ + |↑↓⟩)/√2`, or `|01⟩ + |10⟩` in motion.
    PsiPlus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAtomConfig {
    pub params1: PhysicalParams,
    pub params2: PhysicalParams,
    /// Depolarising probability after the CZ gate.
    pub cz_error: f64,
    /// Per-atom, per-pulse transduction failure probability.
    pub transduction_infidelity: f64,
    pub failure: FailureMode,
    pub motional_levels: usize,
}

impl TwoAtomConfig {
    /// Clock-transition pair in tweezers at `omega1`, `omega2`.
    pub fn clock(omega1: f64, omega2: f64) -> Result<Self> {
        Ok(Self {
            params1: PhysicalParams::clock(omega1)?,
            params2: PhysicalParams::clock(omega2)?,
            cz_error: 0.0,
            transduction_infidelity: 0.0,
            failure: FailureMode::Leak,
            motional_levels: 3,
        })
    }

    pub fn omega1(&self) -> f64 {
        self.params1.omega
    }

    pub fn omega2(&self) -> f64 {
        self.params2.omega
    }

    pub fn delta_omega(&self) -> f64 {
        self.params2.omega - self.params1.omega
    }

    pub fn layout(&self) -> Result<HilbertLayout> {
        HilbertLayout::new(2, self.motional_levels)
    }

    pub fn validate(&self) -> Result<()> {
        self.params1.validate()?;
        self.params2.validate()?;
        if !(0.0..=1.0).contains(&self.cz_error) || !(0.0..=1.0).contains(&self.transduction_infidelity) {
            return domain("cz_error and transduction infidelity must lie in [0, 1]");
        }
        if self.motional_levels < 3 {
            return domain("two-atom runs need at least three motional levels for the leakage monitor");
        }
        Ok(())
    }

    fn sequencer(&self, atom: usize) -> Result<Sequencer> {
        let params = if atom == 0 { self.params1 } else { self.params2 };
        Sequencer::new(
            params,
            SequenceSettings {
                model: PulseModel::Resonant,
                motional_levels: self.motional_levels,
                ..Default::default()
            },
        )
    }
}

fn check_layout(state: &QuantumState, config: &TwoAtomConfig) -> Result<HilbertLayout> {
    let l = config.layout()?;
    if state.layout != l {
        return Err(SimError::Layout(format!("expected a two-atom layout with N = {}", config.motional_levels)));
    }
    Ok(l)
}

/// Spin-only rotation on one atom.
pub fn spin_rotation(layout: HilbertLayout, atom: usize, theta: f64, phi: f64) -> Result<CMatrix> {
    let n = layout.motional_levels();
    layout.embed(atom, &layout.local(&spin::rotation(theta, phi), &CMatrix::identity(n, n)))
}

fn rotate_both(state: &QuantumState, theta: f64, phi1: f64, phi2: f64) -> Result<QuantumState> {
    let u = spin_rotation(state.layout, 0, theta, phi1)? * spin_rotation(state.layout, 1, theta, phi2)?;
    Ok(state.conjugated(&u))
}

/// Spin reduced state `Tr_motion ρ` (4x4, ordered ↓↓, ↓↑, ↑↓, ↑↑).
pub fn spin_density(state: &QuantumState) -> Result<CMatrix> {
    reduced_density(state, &[Factor::Spin(0), Factor::Spin(1)])
}

/// Motional reduced state `Tr_spin ρ` (N²xN², index n₁N + n₂).
pub fn motion_density(state: &QuantumState) -> Result<CMatrix> {
    reduced_density(state, &[Factor::Motion(0), Factor::Motion(1)])
}

pub fn spin_concurrence(state: &QuantumState) -> Result<f64> {
    concurrence(&spin_density(state)?)
}

/// Concurrence of the motional state restricted to n ∈ {0, 1}.
pub fn motional_concurrence(state: &QuantumState) -> Result<f64> {
    let block = two_qubit_block(&motion_density(state)?, state.layout.motional_levels());
    if block.trace().re <= 1e-15 {
        return Ok(0.0);
    }
    concurrence(&block)
}

/// Population with either atom in its top motional level.
pub fn top_level_population(state: &QuantumState) -> f64 {
    let l = state.layout;
    let top = l.motional_levels() - 1;
    (0..l.dim()).filter(|&i| l.labels(i).iter().any(|&(_, n)| n == top)).map(|i| state.rho[(i, i)].re).sum::<f64>()
        / state.trace()
}

fn leakage_monitor(state: &QuantumState) -> Result<()> {
    let p = top_level_population(state);
    if p >= LEAKAGE_LIMIT {
        return Err(SimError::Protocol(format!("motional truncation leakage {p:.3e} exceeds {LEAKAGE_LIMIT:e}")));
    }
    Ok(())
}

/// Ideal CZ (−1 on |↑↑⟩, motion untouched) then spin depolarisation with probability `cz_error`.
pub fn cz_gate(state: &QuantumState, cz_error: f64) -> Result<QuantumState> {
    let l = state.layout;
    if l.n_atoms() != 2 {
        return Err(SimError::Layout("CZ needs a two-atom layout".into()));
    }
    if !(0.0..=1.0).contains(&cz_error) {
        return domain(format!("cz_error {cz_error} outside [0, 1]"));
    }
    let sign: Vec<f64> = (0..l.dim())
        .map(|i| {
            let lab = l.labels(i);
            if lab[0].0 == Spin::Up && lab[1].0 == Spin::Up {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    let mut rho = CMatrix::from_fn(l.dim(), l.dim(), |i, j| state.rho[(i, j)] * (sign[i] * sign[j]));
    if cz_error > 0.0 {
        let m = motion_density(&QuantumState { layout: l, rho: rho.clone() })?;
        let n = l.motional_levels();
        rho *= C64::new(1.0 - cz_error, 0.0);
        for i in 0..l.dim() {
            let a = l.labels(i);
            for j in 0..l.dim() {
                let b = l.labels(j);
                if a[0].0 == b[0].0 && a[1].0 == b[1].0 {
                    rho[(i, j)] += m[(a[0].1 * n + a[1].1, b[0].1 * n + b[1].1)] * (cz_error / 4.0);
                }
            }
        }
    }
    Ok(QuantumState { layout: l, rho: hermitize(rho) })
}

/// Both atoms in `|spin, 0⟩`.
pub fn ground_pair(config: &TwoAtomConfig, spins: Spin) -> Result<QuantumState> {
    QuantumState::basis(config.layout()?, &[(spins, 0), (spins, 0)])
}

/// Entangle spins from `|↓0,↓0⟩`: π/2, CZ, π/4.
pub fn prepare_spin_bell(config: &TwoAtomConfig, which: BellKind) -> Result<QuantumState> {
    config.validate()?;
    let s = rotate_both(&ground_pair(config, Spin::Down)?, PI / 2.0, 0.0, 0.0)?;
    let s = cz_gate(&s, config.cz_error)?;
    let phi = match which {
        BellKind::PhiPlus => PI,
        BellKind::PsiPlus => 0.0,
    };
    rotate_both(&s, PI / 4.0, phi, phi)
}

fn dephase_atom(rho: &CMatrix, layout: HilbertLayout, atom: usize) -> CMatrix {
    let local: Vec<usize> = (0..layout.dim())
        .map(|i| {
            let (s, n) = layout.labels(i)[atom];
            layout.local_index(s, n)
        })
        .collect();
    CMatrix::from_fn(
        rho.nrows(),
        rho.ncols(),
        |i, j| if local[i] == local[j] { rho[(i, j)] } else { C64::new(0.0, 0.0) },
    )
}

fn sideband_both(state: &QuantumState, config: &TwoAtomConfig, phase: f64) -> Result<QuantumState> {
    let l = check_layout(state, config)?;
    let eps = config.transduction_infidelity;
    let mut rho = state.rho.clone();
    for atom in 0..2 {
        let seq = config.sequencer(atom)?;
        let u = l.embed(atom, &seq.pulse_unitary(&PulseSpec::blue(PI, 0.0), phase)?)?;
        let ideal = &u * &rho * u.adjoint();
        rho = if eps > 0.0 {
            let failed = match config.failure {
                FailureMode::Leak => dephase_atom(&rho, l, atom),
                FailureMode::Dephase => dephase_atom(&ideal, l, atom),
            };
            ideal * C64::new(1.0 - eps, 0.0) + failed * C64::new(eps, 0.0)
        } else {
            ideal
        };
    }
    let out = QuantumState { layout: l, rho: hermitize(rho) };
    leakage_monitor(&out)?;
    Ok(out)
}

/// Simultaneous blue π on both atoms, spin entanglement into motion.
pub fn transduce_pair(state: &QuantumState, config: &TwoAtomConfig) -> Result<QuantumState> {
    sideband_both(state, config, 0.0)
}

/// Inverse of [`transduce_pair`].
pub fn untransduce_pair(state: &QuantumState, config: &TwoAtomConfig) -> Result<QuantumState> {
    sideband_both(state, config, PI)
}

/// Free evolution: each motional quantum of atom i picks up `e^{−iω_i t}`.
pub fn hold(state: &QuantumState, config: &TwoAtomConfig, t: f64) -> Result<QuantumState> {
    let l = check_layout(state, config)?;
    let ph: Vec<C64> = (0..l.dim())
        .map(|i| {
            let lab = l.labels(i);
            C64::from_polar(1.0, -(config.omega1() * lab[0].1 as f64 + config.omega2() * lab[1].1 as f64) * t)
        })
        .collect();
    let rho = CMatrix::from_fn(l.dim(), l.dim(), |i, j| state.rho[(i, j)] * ph[i] * ph[j].conj());
    Ok(QuantumState { layout: l, rho })
}

/// ⟨σzσz⟩ normalised by the trace.
pub fn spin_parity(state: &QuantumState) -> f64 {
    let l = state.layout;
    (0..l.dim())
        .map(|i| {
            let lab = l.labels(i);
            let s = if lab[0].0 == lab[1].0 { 1.0 } else { -1.0 };
            s * state.rho[(i, i)].re
        })
        .sum::<f64>()
        / state.trace()
}

/// Parity after π/2 analysis pulses; Ψ-type readout shifts only atom 2.
fn analysed_parity(state: &QuantumState, which: BellKind, phi: f64) -> Result<f64> {
    let (p1, p2) = match which {
        BellKind::PhiPlus => (phi, phi),
        BellKind::PsiPlus => (0.0, phi),
    };
    Ok(spin_parity(&rotate_both(state, PI / 2.0, p1, p2)?))
}

/// Parity fringe amplitude from four analysis phases (exact for a single harmonic).
fn parity_contrast(state: &QuantumState, which: BellKind) -> Result<f64> {
    let step = match which {
        BellKind::PhiPlus => PI / 4.0,
        BellKind::PsiPlus => PI / 2.0,
    };
    let mut p = [0.0; 4];
    for (k, pk) in p.iter_mut().enumerate() {
        *pk = analysed_parity(state, which, k as f64 * step)?;
    }
    Ok(0.5 * (p[0] - p[2]).hypot(p[1] - p[3]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellReport {
    pub which: BellKind,
    /// Populations of `|00⟩, |01⟩, |10⟩, |11⟩` (motion) or `↓↓, ↓↑, ↑↓, ↑↑` (spin).
    pub populations: [f64; 4],
    /// Population in the Bell pair's two basis states.
    pub pair_population: f64,
    /// Parity against hold time (or analysis phase for spin scans).
    pub parity_points: Vec<(f64, f64)>,
    pub parity_contrast: f64,
    /// max − min of the parity points.
    pub parity_modulation: f64,
    pub parity_fit: Option<FitResult>,
    /// Fitted parity frequency in Hz.
    pub parity_frequency: Option<f64>,
    /// `(pair_population + parity_contrast) / 2`.
    pub fidelity: f64,
}

impl BellReport {
    fn new(which: BellKind, populations: [f64; 4], points: Vec<(f64, f64)>, contrast: f64) -> Self {
        let pair = match which {
            BellKind::PhiPlus => populations[0] + populations[3],
            BellKind::PsiPlus => populations[1] + populations[2],
        };
        let max = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let fit = if points.len() >= 8 && max - min > 1e-6 { fit_sinusoid(&points).ok() } else { None };
        Self {
            which,
            populations,
            pair_population: pair,
            parity_modulation: if points.is_empty() { 0.0 } else { max - min },
            parity_frequency: fit.as_ref().map(|f| f.value("frequency")),
            parity_fit: fit,
            parity_points: points,
            parity_contrast: contrast,
            fidelity: ((pair + contrast) / 2.0).clamp(0.0, 1.0),
        }
    }
}

/// Populations of the four code states with both spins ↑, normalised.
fn motional_code_populations(state: &QuantumState) -> Result<[f64; 4]> {
    let l = state.layout;
    let t = state.trace();
    let mut out = [0.0; 4];
    for (k, (n1, n2)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let i = l.index(&[(Spin::Up, n1), (Spin::Up, n2)])?;
        out[k] = state.rho[(i, i)].re / t;
    }
    Ok(out)
}

/// Hold, map back to spin, and read parity; contrast and populations are taken at t = 0.
pub fn parity_scan_motion(
    state: &QuantumState,
    config: &TwoAtomConfig,
    which: BellKind,
    hold_grid: &[f64],
) -> Result<BellReport> {
    config.validate()?;
    check_layout(state, config)?;
    let pops = motional_code_populations(state)?;
    let points = hold_grid
        .iter()
        .map(|&t| {
            let s = untransduce_pair(&hold(state, config, t)?, config)?;
            Ok((t, analysed_parity(&s, which, 0.0)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let contrast = parity_contrast(&untransduce_pair(state, config)?, which)?;
    Ok(BellReport::new(which, pops, points, contrast))
}

/// Spin parity report, scanning the analysis phase.
pub fn parity_scan_spin(state: &QuantumState, which: BellKind, phi_grid: &[f64]) -> Result<BellReport> {
    let r = spin_density(state)?;
    let t = r.trace().re;
    let pops = [r[(0, 0)].re / t, r[(1, 1)].re / t, r[(2, 2)].re / t, r[(3, 3)].re / t];
    let points =
        phi_grid.iter().map(|&phi| Ok((phi, analysed_parity(state, which, phi)?))).collect::<Result<Vec<_>>>()?;
    Ok(BellReport::new(which, pops, points, parity_contrast(state, which)?))
}

/// `|ψ⟩⟨ψ|` overlap with the motional Bell state (both spins ↑), normalised.
pub fn motional_bell_overlap(state: &QuantumState, which: BellKind, relative_sign: f64) -> Result<f64> {
    let l = state.layout;
    let (a, b) = match which {
        BellKind::PhiPlus => ((0, 0), (1, 1)),
        BellKind::PsiPlus => ((0, 1), (1, 0)),
    };
    let i = l.index(&[(Spin::Up, a.0), (Spin::Up, a.1)])?;
    let j = l.index(&[(Spin::Up, b.0), (Spin::Up, b.1)])?;
    let r = &state.rho;
    Ok(0.5 * (r[(i, i)].re + r[(j, j)].re + 2.0 * relative_sign * r[(i, j)].re) / state.trace())
}

/// `⟨Bell|ρ_spin|Bell⟩`, normalised.
pub fn spin_bell_overlap(state: &QuantumState, which: BellKind) -> Result<f64> {
    let r = spin_density(state)?;
    let (i, j) = match which {
        BellKind::PhiPlus => (0, 3),
        BellKind::PsiPlus => (1, 2),
    };
    Ok(0.5 * (r[(i, i)].re + r[(j, j)].re + 2.0 * r[(i, j)].re) / r.trace().re)
}

/// Motional Ψ⁺ followed by a second spin entangling sequence from |↑↑⟩, giving `|Ψ⁺, Φ⁺⟩`.
pub fn hyper_entangle(config: &TwoAtomConfig) -> Result<QuantumState> {
    let motional = transduce_pair(&prepare_spin_bell(config, BellKind::PsiPlus)?, config)?;
    spin_entangle_from_up(&motional, config)
}

fn spin_entangle_from_up(state: &QuantumState, config: &TwoAtomConfig) -> Result<QuantumState> {
    let s = rotate_both(state, PI / 2.0, 0.0, 0.0)?;
    let s = cz_gate(&s, config.cz_error)?;
    rotate_both(&s, PI / 4.0, 0.0, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    /// Probability that both atoms are kept in |↑⟩.
    pub kept_probability: f64,
    /// The renormalised |↑↑⟩ branch.
    pub kept_state: QuantumState,
    pub null_spin_parity: BellReport,
    pub recovered_motion: BellReport,
}

/// Keep the |↑↑⟩ branch of a hyper-Bell state, then read out the spin and motional parities.
pub fn project_and_recover(
    state: &QuantumState,
    config: &TwoAtomConfig,
    phi_grid: &[f64],
    hold_grid: &[f64],
) -> Result<ProjectionReport> {
    let l = check_layout(state, config)?;
    let keep: Vec<bool> = (0..l.dim()).map(|i| l.labels(i).iter().all(|&(s, _)| s == Spin::Up)).collect();
    let rho =
        CMatrix::from_fn(
            l.dim(),
            l.dim(),
            |i, j| {
                if keep[i] && keep[j] {
                    state.rho[(i, j)]
                } else {
                    C64::new(0.0, 0.0)
                }
            },
        );
    let kept = QuantumState { layout: l, rho };
    let kept_probability = kept.trace() / state.trace();
    if kept_probability < 1e-12 {
        return Err(SimError::Protocol("no population in the kept |↑↑⟩ branch".into()));
    }
    let kept = kept.renormalized()?;
    Ok(ProjectionReport {
        kept_probability,
        null_spin_parity: parity_scan_spin(&kept, BellKind::PhiPlus, phi_grid)?,
        recovered_motion: parity_scan_motion(&kept, config, BellKind::PsiPlus, hold_grid)?,
        kept_state: kept,
    })
}

/// Motional Ψ⁺ before any spin entangling: the reference for recovery.
pub fn motional_psi_plus(config: &TwoAtomConfig) -> Result<QuantumState> {
    transduce_pair(&prepare_spin_bell(config, BellKind::PsiPlus)?, config)
}

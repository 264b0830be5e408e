//! Spin-motion Hamiltonian, jump operators and Lindblad evolution.
//!
//! The Hamiltonian is stored as `H/ħ` in rad/s:
//!
//! `H = ω(a†a + ½) − Δ|↑⟩⟨↑| + ½Ω(e^{iφ} e^{iη(a+a†)}|↑⟩⟨↓| + h.c.)`
//!
//! Density matrices are propagated in a real orthonormal basis of Hermitian
//! matrices, so Liouvillians and their exponentials are real `d² × d²`
//! matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{domain, Result, SimError};
use crate::linalg::expm;
use crate::quantum::{
    hermitize, motion, spin, CMatrix, HilbertLayout, OperatorMatrix, QuantumChannel, QuantumState, Spin, I, ONE, ZERO,
};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const SR88_MASS: f64 = 87.905_612 * ATOMIC_MASS_UNIT;
/// ¹S₀ ↔ ³P₀ clock transition.
pub const CLOCK_WAVELENGTH: f64 = 698e-9;
/// ¹S₀ ↔ ³P₁ intercombination transition.
pub const INTERCOMBINATION_WAVELENGTH: f64 = 689e-9;
pub const INTERCOMBINATION_LINEWIDTH: f64 = 2.0 * std::f64::consts::PI * 7.4e3;
pub const DEFAULT_QUADRATURE_NODES: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Trap frequency ω.
    pub omega: f64,
    /// Rabi frequency Ω.
    pub rabi: f64,
    /// Detuning Δ.
    pub detuning: f64,
    /// Linewidth Γ of the excited state (0 for a closed transition).
    pub linewidth: f64,
    pub mass: f64,
    pub wavelength: f64,
    /// Lamb-Dicke factor η.
    pub eta: f64,
    /// Heating rate in quanta per second.
    pub heating_rate: f64,
    /// Lifetime of |↑⟩ in seconds (`f64::INFINITY` for none).
    pub excited_lifetime: f64,
}

impl PhysicalParams {
    /// Sr-88 on the clock transition, Ω = 2π·2.5 kHz, noiseless.
    pub fn clock(omega: f64) -> Result<Self> {
        let eta = lamb_dicke(omega, SR88_MASS, CLOCK_WAVELENGTH)?;
        Ok(Self {
            omega,
            rabi: crate::hz(2.5e3),
            detuning: 0.0,
            linewidth: 0.0,
            mass: SR88_MASS,
            wavelength: CLOCK_WAVELENGTH,
            eta,
            heating_rate: 0.0,
            excited_lifetime: f64::INFINITY,
        })
    }

    /// Sr-88 on the intercombination line: Γ = 2π·7.4 kHz, Ω = Γ/500, Δ = −ω.
    pub fn intercombination(omega: f64) -> Result<Self> {
        let eta = lamb_dicke(omega, SR88_MASS, INTERCOMBINATION_WAVELENGTH)?;
        Ok(Self {
            omega,
            rabi: INTERCOMBINATION_LINEWIDTH / 500.0,
            detuning: -omega,
            linewidth: INTERCOMBINATION_LINEWIDTH,
            mass: SR88_MASS,
            wavelength: INTERCOMBINATION_WAVELENGTH,
            eta,
            heating_rate: 0.0,
            excited_lifetime: f64::INFINITY,
        })
    }

    /// New trap frequency; η is re-derived from mass and wavelength.
    pub fn with_trap_frequency(mut self, omega: f64) -> Result<Self> {
        self.eta = lamb_dicke(omega, self.mass, self.wavelength)?;
        if self.detuning == -self.omega {
            self.detuning = -omega;
        } else if self.detuning == self.omega {
            self.detuning = omega;
        }
        self.omega = omega;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.rabi, self.detuning, self.linewidth, self.mass]
            .iter()
            .chain([self.wavelength, self.eta, self.heating_rate].iter())
            .all(|x| x.is_finite());
        if !finite {
            return domain("physical parameters must be finite");
        }
        if self.omega <= 0.0 || self.mass <= 0.0 || self.wavelength <= 0.0 {
            return domain("trap frequency, mass and wavelength must be positive");
        }
        if self.eta < 0.0 || self.rabi < 0.0 || self.linewidth < 0.0 {
            return domain("η, Ω and Γ must be non-negative");
        }
        if self.heating_rate < 0.0 {
            return domain("heating rate must be non-negative");
        }
        if !(self.excited_lifetime > 0.0) {
            return domain("excited-state lifetime must be positive (or infinite)");
        }
        Ok(())
    }

    /// `|⟨m| e^{iη(a+a†)} |n⟩|` in an `levels`-level truncation.
    pub fn coupling_element(&self, levels: usize, m: usize, n: usize) -> Result<f64> {
        let d = motion::displacement(levels, self.eta)?;
        Ok(d[(m, n)].norm())
    }

    /// Duration of a π pulse on the |↓,1⟩ ↔ |↑,0⟩ sideband with the exact matrix element.
    pub fn sideband_pi_time(&self, levels: usize) -> Result<f64> {
        let el = self.coupling_element(levels, 0, 1)?;
        if self.rabi <= 0.0 || el <= 0.0 {
            return domain("sideband π time undefined for zero coupling");
        }
        Ok(std::f64::consts::PI / (self.rabi * el))
    }
}

/// `η = (2π/λ) √(ħ / 2mω)`.
pub fn lamb_dicke(omega: f64, mass: f64, wavelength: f64) -> Result<f64> {
    if !(omega > 0.0 && mass > 0.0 && wavelength > 0.0) {
        return domain("lamb_dicke needs positive ω, mass and wavelength");
    }
    Ok(2.0 * std::f64::consts::PI / wavelength * (HBAR / (2.0 * mass * omega)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sideband {
    Carrier,
    /// Δ = −ω: |↓,n⟩ ↔ |↑,n−1⟩.
    Red,
    /// Δ = +ω: |↓,n⟩ ↔ |↑,n+1⟩.
    Blue,
    Custom(f64),
}

impl Sideband {
    pub fn detuning(self, omega: f64) -> f64 {
        match self {
            Sideband::Carrier => 0.0,
            Sideband::Red => -omega,
            Sideband::Blue => omega,
            Sideband::Custom(d) => d,
        }
    }

    /// Motional quantum change of the resonant transition from |↓⟩.
    pub fn order(self) -> Option<i32> {
        match self {
            Sideband::Carrier => Some(0),
            Sideband::Red => Some(-1),
            Sideband::Blue => Some(1),
            Sideband::Custom(_) => None,
        }
    }
}

/// Single-atom `H/ħ` of dimension `2N`.
pub fn local_hamiltonian(params: &PhysicalParams, levels: usize, detuning: f64, phase: f64) -> Result<CMatrix> {
    let free = CMatrix::from_diagonal(&DVector::from_fn(levels, |k, _| C64::new(params.omega * (k as f64 + 0.5), 0.0)));
    let mut h = crate::linalg::kron(&spin::identity(), &free);
    h -= crate::linalg::kron(&spin::projector(Spin::Up), &CMatrix::identity(levels, levels)) * C64::new(detuning, 0.0);
    if params.rabi != 0.0 {
        let d = motion::displacement(levels, params.eta)?;
        let up = crate::linalg::kron(&spin::raising(), &d) * (C64::from_polar(0.5 * params.rabi, phase));
        h += &up + up.adjoint();
    }
    Ok(hermitize(h))
}

/// Hamiltonian with Δ selected by `sideband` and zero laser phase.
pub fn build_hamiltonian(
    params: &PhysicalParams,
    layout: HilbertLayout,
    atom: usize,
    sideband: Sideband,
) -> Result<OperatorMatrix> {
    build_hamiltonian_phased(params, layout, atom, sideband, 0.0)
}

pub fn build_hamiltonian_phased(
    params: &PhysicalParams,
    layout: HilbertLayout,
    atom: usize,
    sideband: Sideband,
    phase: f64,
) -> Result<OperatorMatrix> {
    params.validate()?;
    let local = local_hamiltonian(params, layout.motional_levels(), sideband.detuning(params.omega), phase)?;
    OperatorMatrix::new(layout, layout.embed(atom, &local)?, format!("H{atom}({sideband:?})"))
}

/// Gauss–Legendre nodes and weights on [−1, 1], nodes ascending.
pub fn gauss_legendre(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return domain("quadrature needs at least one node");
    }
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[m - 1 - i] = x;
        weights[m - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    Ok((nodes, weights))
}

/// A Lindblad jump: dissipator `rate · D[op]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub op: OperatorMatrix,
    pub rate: f64,
}

/// Dipole-pattern weights `(3/4)(1−u²)w` for the recoil projection, summing to 1.
pub fn dipole_weights(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m < 2 {
        return domain(format!("dipole quadrature needs M ≥ 2, got {m}"));
    }
    let (u, w) = gauss_legendre(m)?;
    let p = u.iter().zip(&w).map(|(u, w)| 0.75 * (1.0 - u * u) * w).collect();
    Ok((u, p))
}

fn recoil_operators(
    params: &PhysicalParams,
    layout: HilbertLayout,
    atom: usize,
    m: usize,
) -> Result<Vec<(OperatorMatrix, f64)>> {
    let (u, p) = dipole_weights(m)?;
    let levels = layout.motional_levels();
    u.iter()
        .zip(p)
        .enumerate()
        .map(|(j, (&uj, pj))| {
            let kick = motion::displacement(levels, -params.eta * uj)?;
            let op = OperatorMatrix::on_atom(layout, atom, &spin::lowering(), &kick, format!("c{j}"))?;
            Ok((op, pj))
        })
        .collect()
}

/// Spontaneous decay |↑⟩ → |↓⟩ with a recoil kick along the trap axis.
pub fn dipole_jump_set(params: &PhysicalParams, layout: HilbertLayout, atom: usize, m: usize) -> Result<Vec<Jump>> {
    if !(params.linewidth > 0.0) {
        return domain("dipole jumps need Γ > 0");
    }
    Ok(recoil_operators(params, layout, atom, m)?
        .into_iter()
        .map(|(op, p)| Jump { op, rate: params.linewidth * p })
        .collect())
}

/// Symmetric motional diffusion: jumps a† and a at the heating rate.
pub fn heating_jump_set(params: &PhysicalParams, layout: HilbertLayout, atom: usize) -> Result<Vec<Jump>> {
    if !(params.heating_rate >= 0.0) {
        return domain("heating rate must be non-negative");
    }
    if params.heating_rate == 0.0 {
        return Ok(Vec::new());
    }
    let f = crate::quantum::build_fock_operators(layout, atom)?;
    Ok(vec![Jump { op: f.a_dagger, rate: params.heating_rate }, Jump { op: f.a, rate: params.heating_rate }])
}

/// Plain decay |↓⟩⟨↑| at 1/lifetime, no recoil.
pub fn lifetime_jump_set(params: &PhysicalParams, layout: HilbertLayout, atom: usize) -> Result<Vec<Jump>> {
    if !(params.excited_lifetime > 0.0) {
        return domain("excited-state lifetime must be positive");
    }
    if params.excited_lifetime.is_infinite() {
        return Ok(Vec::new());
    }
    let n = layout.motional_levels();
    let op = OperatorMatrix::on_atom(layout, atom, &spin::lowering(), &CMatrix::identity(n, n), "σ-")?;
    Ok(vec![Jump { op, rate: 1.0 / params.excited_lifetime }])
}

/// Instantaneous projection of |↑⟩ onto |↓⟩ with a dipole-averaged recoil kick.
pub fn decay_projection_channel(
    params: &PhysicalParams,
    layout: HilbertLayout,
    atom: usize,
    m: usize,
) -> Result<QuantumChannel> {
    let mut kraus: Vec<OperatorMatrix> = recoil_operators(params, layout, atom, m)?
        .into_iter()
        .map(|(op, p)| op.scaled(C64::new(p.sqrt(), 0.0)))
        .collect();
    let n = layout.motional_levels();
    kraus.push(OperatorMatrix::on_atom(layout, atom, &spin::projector(Spin::Down), &CMatrix::identity(n, n), "P↓")?);
    QuantumChannel::new(kraus, true)
}

/// Coordinates of Hermitian matrices in the orthonormal basis
/// `{E_kk, (E_kl+E_lk)/√2, i(E_kl−E_lk)/√2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianBasis {
    dim: usize,
    /// `pairs[k*dim + l]` = coordinate index of the symmetric element for k<l.
    pairs: Vec<usize>,
}

impl HermitianBasis {
    pub fn new(dim: usize) -> Self {
        let mut pairs = vec![usize::MAX; dim * dim];
        let mut next = dim;
        for k in 0..dim {
            for l in k + 1..dim {
                pairs[k * dim + l] = next;
                next += 2;
            }
        }
        Self { dim, pairs }
    }

    pub fn len(&self) -> usize {
        self.dim * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    fn pair(&self, k: usize, l: usize) -> usize {
        self.pairs[k * self.dim + l]
    }

    pub fn to_real(&self, rho: &CMatrix) -> DVector<f64> {
        let d = self.dim;
        let mut v = DVector::zeros(d * d);
        let s = std::f64::consts::SQRT_2;
        for k in 0..d {
            v[k] = rho[(k, k)].re;
            for l in k + 1..d {
                // Average the two triangles so slightly non-Hermitian input is projected.
                let z = (rho[(k, l)] + rho[(l, k)].conj()) * 0.5;
                let p = self.pair(k, l);
                v[p] = s * z.re;
                v[p + 1] = s * z.im;
            }
        }
        v
    }

    pub fn from_real(&self, v: &DVector<f64>) -> CMatrix {
        let d = self.dim;
        let mut rho = CMatrix::zeros(d, d);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for k in 0..d {
            rho[(k, k)] = C64::new(v[k], 0.0);
            for l in k + 1..d {
                let p = self.pair(k, l);
                let z = C64::new(v[p] * s, v[p + 1] * s);
                rho[(k, l)] = z;
                rho[(l, k)] = z.conj();
            }
        }
        rho
    }
}

/// Dense Lindblad generator for a piecewise-constant segment.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub layout: HilbertLayout,
    pub hamiltonian: OperatorMatrix,
    pub jumps: Vec<Jump>,
    basis: HermitianBasis,
    generator: DMatrix<f64>,
    /// `−iH − ½ Σ rate L†L`
    effective: CMatrix,
}

impl Liouvillian {
    pub fn new(hamiltonian: OperatorMatrix, jumps: Vec<Jump>) -> Result<Self> {
        let layout = hamiltonian.layout;
        let d = layout.dim();
        for j in &jumps {
            crate::quantum::same_layout(layout, j.op.layout)?;
            if !(j.rate >= 0.0) || !j.rate.is_finite() {
                return Err(SimError::Numerical(format!("invalid jump rate {}", j.rate)));
            }
        }
        if !hamiltonian.m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(SimError::Numerical("non-finite Hamiltonian entries".into()));
        }
        let mut g = &hamiltonian.m * (-I);
        let ls: Vec<CMatrix> =
            jumps.iter().filter(|j| j.rate > 0.0).map(|j| &j.op.m * C64::new(j.rate.sqrt(), 0.0)).collect();
        for l in &ls {
            g -= l.adjoint() * l * C64::new(0.5, 0.0);
        }
        let basis = HermitianBasis::new(d);
        let generator = build_generator(&basis, d, &g, &ls);
        Ok(Self { layout, hamiltonian, jumps, basis, generator, effective: g })
    }

    pub fn coherent(hamiltonian: OperatorMatrix) -> Result<Self> {
        Self::new(hamiltonian, Vec::new())
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn basis(&self) -> &HermitianBasis {
        &self.basis
    }

    /// `L[ρ]` evaluated directly from the operators.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = &self.effective * rho + rho * self.effective.adjoint();
        for j in self.jumps.iter().filter(|j| j.rate > 0.0) {
            out += &j.op.m * rho * j.op.m.adjoint() * C64::new(j.rate, 0.0);
        }
        out
    }

    pub fn propagator(&self, t: f64) -> Result<Propagator> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("segment duration must be finite and non-negative, got {t}"));
        }
        Ok(Propagator { layout: self.layout, basis: self.basis.clone(), matrix: expm(&(&self.generator * t))? })
    }

    /// Trace-one state in the kernel of the generator.
    pub fn stationary_state(&self) -> Result<QuantumState> {
        let n = self.generator.nrows();
        let d = self.layout.dim();
        let mut a = self.generator.clone();
        for c in 0..n {
            a[(0, c)] = if c < d { 1.0 } else { 0.0 };
        }
        let mut b = DVector::zeros(n);
        b[0] = 1.0;
        let v = a.lu().solve(&b).ok_or_else(|| SimError::Numerical("stationary state is not unique".into()))?;
        QuantumState::new(self.layout, self.basis.from_real(&v))
    }
}

fn build_generator(basis: &HermitianBasis, d: usize, g: &CMatrix, ls: &[CMatrix]) -> DMatrix<f64> {
    let mut gen = DMatrix::zeros(d * d, d * d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            // m = L[|i⟩⟨j|]
            m.fill(ZERO);
            for r in 0..d {
                m[(r, j)] += g[(r, i)];
                m[(i, r)] += g[(r, j)].conj();
            }
            for l in ls {
                for r in 0..d {
                    let a = l[(r, i)];
                    if a == ZERO {
                        continue;
                    }
                    for c in 0..d {
                        m[(r, c)] += a * l[(c, j)].conj();
                    }
                }
            }
            if i == j {
                write_column(basis, &mut gen, i, &m, ONE);
            } else {
                let p = basis.pair(i, j);
                // L[S] = (M + M†)/√2 and L[A] = i(M − M†)/√2.
                write_column(basis, &mut gen, p, &m, C64::new(s, 0.0));
                write_column(basis, &mut gen, p + 1, &m, C64::new(0.0, s));
            }
        }
    }
    gen
}

/// Column `col` gets the coordinates of `f·M + conj(f)·M†` (of `M` itself for diagonal columns).
fn write_column(basis: &HermitianBasis, gen: &mut DMatrix<f64>, col: usize, m: &CMatrix, f: C64) {
    let d = basis.dim;
    let sq = std::f64::consts::SQRT_2;
    let diag_only = col < d;
    for k in 0..d {
        let x = if diag_only { m[(k, k)].re } else { (f * m[(k, k)] + f.conj() * m[(k, k)].conj()).re };
        gen[(k, col)] = x;
        for l in k + 1..d {
            let z = if diag_only {
                (m[(k, l)] + m[(l, k)].conj()) * 0.5
            } else {
                f * m[(k, l)] + f.conj() * m[(l, k)].conj()
            };
            let p = basis.pair(k, l);
            gen[(p, col)] = sq * z.re;
            gen[(p + 1, col)] = sq * z.im;
        }
    }
}

/// Exponentiated generator for a fixed duration.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub layout: HilbertLayout,
    basis: HermitianBasis,
    pub matrix: DMatrix<f64>,
}

impl Propagator {
    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        crate::quantum::same_layout(self.layout, state.layout)?;
        let v = &self.matrix * self.basis.to_real(&state.rho);
        Ok(QuantumState { layout: self.layout, rho: self.basis.from_real(&v) })
    }

    /// `self` after `first`.
    pub fn after(&self, first: &Propagator) -> Result<Propagator> {
        crate::quantum::same_layout(self.layout, first.layout)?;
        Ok(Propagator { layout: self.layout, basis: self.basis.clone(), matrix: &self.matrix * &first.matrix })
    }
}

/// `ρ(t+τ) = exp(Lτ)[ρ(t)]`.
pub fn evolve_segment(state: &QuantumState, liouvillian: &Liouvillian, duration: f64) -> Result<QuantumState> {
    crate::quantum::same_layout(state.layout, liouvillian.layout)?;
    liouvillian.propagator(duration)?.apply(state)
}

/// Fixed-step fourth-order Runge–Kutta integration; a cross-check for [`evolve_segment`].
pub fn evolve_rk4(state: &QuantumState, liouvillian: &Liouvillian, duration: f64, dt: f64) -> Result<QuantumState> {
    if !(dt > 0.0) || !(duration >= 0.0) {
        return domain("rk4 needs dt > 0 and duration ≥ 0");
    }
    let steps = (duration / dt).ceil().max(1.0) as usize;
    let h = C64::new(duration / steps as f64, 0.0);
    let mut rho = state.rho.clone();
    let half = C64::new(0.5, 0.0);
    for _ in 0..steps {
        let k1 = liouvillian.apply(&rho);
        let k2 = liouvillian.apply(&(&rho + &k1 * h * half));
        let k3 = liouvillian.apply(&(&rho + &k2 * h * half));
        let k4 = liouvillian.apply(&(&rho + &k3 * h));
        rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (h / 6.0);
    }
    Ok(QuantumState { layout: state.layout, rho: hermitize(rho) })
}

/// `exp(−iHt)`.
pub fn unitary_propagator(h: &OperatorMatrix, t: f64) -> Result<CMatrix> {
    expm(&(&h.m * C64::new(0.0, -t)))
}

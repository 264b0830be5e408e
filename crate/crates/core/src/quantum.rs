//! Hilbert-space kernel: layout, density matrices, operators and channels.
//!
//! Basis ordering: within one atom the spin is the slow index, so the local
//! index is `spin * N + n` with `Down = 0`, `Up = 1`. Across atoms, atom 0 is
//! the most significant factor. Every operator and state carries its layout
//! and operations refuse to mix layouts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SimError};
use crate::linalg::{expm, kron, max_abs};

pub type CMatrix = DMatrix<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Down => Spin::Up,
            Spin::Up => Spin::Down,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertLayout {
    n_atoms: usize,
    motional_levels: usize,
}

impl HilbertLayout {
    pub const SPIN_LEVELS: usize = 2;

    pub fn new(n_atoms: usize, motional_levels: usize) -> Result<Self> {
        if n_atoms == 0 || motional_levels == 0 {
            return Err(SimError::Layout("atom count and motional levels must be positive".into()));
        }
        let local = 2 * motional_levels;
        if local.checked_pow(n_atoms as u32).is_none_or(|d| d > 4096) {
            return Err(SimError::Layout("Hilbert space too large for dense storage".into()));
        }
        Ok(Self { n_atoms, motional_levels })
    }

    pub fn single(motional_levels: usize) -> Result<Self> {
        Self::new(1, motional_levels)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn motional_levels(&self) -> usize {
        self.motional_levels
    }

    pub fn atom_dim(&self) -> usize {
        2 * self.motional_levels
    }

    pub fn dim(&self) -> usize {
        self.atom_dim().pow(self.n_atoms as u32)
    }

    /// Dimensions of the tensor factors in order `[spin0, motion0, spin1, ...]`.
    pub fn factor_dims(&self) -> Vec<usize> {
        (0..self.n_atoms).flat_map(|_| [2, self.motional_levels]).collect()
    }

    pub fn local_index(&self, spin: Spin, n: usize) -> usize {
        spin.index() * self.motional_levels + n
    }

    /// Global basis index of a product state, one `(spin, n)` per atom.
    pub fn index(&self, atoms: &[(Spin, usize)]) -> Result<usize> {
        if atoms.len() != self.n_atoms {
            return Err(SimError::Layout(format!("expected {} atom labels, got {}", self.n_atoms, atoms.len())));
        }
        let mut idx = 0;
        for &(s, n) in atoms {
            if n >= self.motional_levels {
                return Err(SimError::Layout(format!("motional level {n} outside truncation")));
            }
            idx = idx * self.atom_dim() + self.local_index(s, n);
        }
        Ok(idx)
    }

    /// Inverse of [`HilbertLayout::index`].
    pub fn labels(&self, mut idx: usize) -> Vec<(Spin, usize)> {
        let d = self.atom_dim();
        let mut out = vec![(Spin::Down, 0); self.n_atoms];
        for slot in out.iter_mut().rev() {
            let local = idx % d;
            idx /= d;
            let spin = if local >= self.motional_levels { Spin::Up } else { Spin::Down };
            *slot = (spin, local % self.motional_levels);
        }
        out
    }

    fn check_atom(&self, atom: usize) -> Result<()> {
        if atom >= self.n_atoms {
            return Err(SimError::Layout(format!("atom index {atom} out of range for {} atoms", self.n_atoms)));
        }
        Ok(())
    }

    /// Lift a single-atom operator (dimension `2N`) onto `atom`.
    pub fn embed(&self, atom: usize, local: &CMatrix) -> Result<CMatrix> {
        self.check_atom(atom)?;
        let d = self.atom_dim();
        if local.nrows() != d || local.ncols() != d {
            return Err(SimError::Layout(format!(
                "local operator is {}x{}, expected {d}x{d}",
                local.nrows(),
                local.ncols()
            )));
        }
        let before = d.pow(atom as u32);
        let after = d.pow((self.n_atoms - atom - 1) as u32);
        let mut m = kron(&CMatrix::identity(before, before), local);
        m = kron(&m, &CMatrix::identity(after, after));
        Ok(m)
    }

    /// Local operator `spin ⊗ motion` for one atom.
    pub fn local(&self, spin: &CMatrix, motion: &CMatrix) -> CMatrix {
        kron(spin, motion)
    }
}

/// 2x2 spin matrices in the `(Down, Up)` basis.
pub mod spin {
    use super::*;

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }
    /// |↑⟩⟨↓|
    pub fn raising() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
    }
    /// |↓⟩⟨↑|
    pub fn lowering() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
    }
    pub fn projector(s: Spin) -> CMatrix {
        let mut m = CMatrix::zeros(2, 2);
        m[(s.index(), s.index())] = ONE;
        m
    }
    /// σz with the convention `σz|↑⟩ = +|↑⟩`.
    pub fn sigma_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[-ONE, ZERO, ZERO, ONE])
    }
    /// Rotation `exp(-i θ/2 (cos φ X + sin φ Y))`.
    pub fn rotation(theta: f64, phi: f64) -> CMatrix {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let e = C64::from_polar(1.0, phi);
        // X, Y act on (↓, ↑); the raising part |↑⟩⟨↓| carries e^{iφ}.
        CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), -I * s * e.conj(), -I * s * e, C64::new(c, 0.0)])
    }
}

/// N x N motional matrices.
pub mod motion {
    use super::*;

    pub fn annihilation(n: usize) -> CMatrix {
        let mut a = CMatrix::zeros(n, n);
        for k in 1..n {
            a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
        }
        a
    }

    pub fn number(n: usize) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_fn(n, |k, _| C64::new(k as f64, 0.0)))
    }

    /// `exp(i η (a + a†))` on an `n`-level truncated oscillator.
    pub fn displacement(n: usize, eta: f64) -> Result<CMatrix> {
        if !eta.is_finite() {
            return domain("Lamb-Dicke factor must be finite");
        }
        let a = annihilation(n);
        let x = &a + a.adjoint();
        expm(&(x * C64::new(0.0, eta)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub layout: HilbertLayout,
    pub m: CMatrix,
    pub label: String,
}

impl OperatorMatrix {
    pub fn new(layout: HilbertLayout, m: CMatrix, label: impl Into<String>) -> Result<Self> {
        let d = layout.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(SimError::Layout(format!("operator is {}x{}, layout dimension is {d}", m.nrows(), m.ncols())));
        }
        Ok(Self { layout, m, label: label.into() })
    }

    pub fn identity(layout: HilbertLayout) -> Self {
        let d = layout.dim();
        Self { layout, m: CMatrix::identity(d, d), label: "I".into() }
    }

    /// Single-atom operator `spin ⊗ motion` embedded at `atom`.
    pub fn on_atom(
        layout: HilbertLayout,
        atom: usize,
        spin: &CMatrix,
        motion: &CMatrix,
        label: impl Into<String>,
    ) -> Result<Self> {
        let m = layout.embed(atom, &layout.local(spin, motion))?;
        Self::new(layout, m, label)
    }

    pub fn adjoint(&self) -> Self {
        Self { layout: self.layout, m: self.m.adjoint(), label: format!("{}†", self.label) }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        same_layout(self.layout, other.layout)?;
        Ok(Self { layout: self.layout, m: &self.m * &other.m, label: format!("{}·{}", self.label, other.label) })
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { layout: self.layout, m: &self.m * s, label: self.label.clone() }
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.m - self.m.adjoint()))
    }
}

pub(crate) fn same_layout(a: HilbertLayout, b: HilbertLayout) -> Result<()> {
    if a != b {
        return Err(SimError::Layout(format!("layout mismatch: {a:?} vs {b:?}")));
    }
    Ok(())
}

pub struct FockOperators {
    pub a: OperatorMatrix,
    pub a_dagger: OperatorMatrix,
    pub number: OperatorMatrix,
}

pub fn build_fock_operators(layout: HilbertLayout, atom: usize) -> Result<FockOperators> {
    let n = layout.motional_levels();
    let id = spin::identity();
    let a = motion::annihilation(n);
    Ok(FockOperators {
        a: OperatorMatrix::on_atom(layout, atom, &id, &a, format!("a{atom}"))?,
        a_dagger: OperatorMatrix::on_atom(layout, atom, &id, &a.adjoint(), format!("a{atom}†"))?,
        number: OperatorMatrix::on_atom(layout, atom, &id, &motion::number(n), format!("n{atom}"))?,
    })
}

/// `exp(i η (a + a†))` acting on the motion of `atom`, identity elsewhere.
pub fn displacement_coupling(layout: HilbertLayout, atom: usize, eta: f64) -> Result<OperatorMatrix> {
    let d = motion::displacement(layout.motional_levels(), eta)?;
    OperatorMatrix::on_atom(layout, atom, &spin::identity(), &d, format!("D{atom}({eta})"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub layout: HilbertLayout,
    pub rho: CMatrix,
}

impl QuantumState {
    pub const HERMITICITY_TOL: f64 = 1e-10;

    pub fn new(layout: HilbertLayout, rho: CMatrix) -> Result<Self> {
        let d = layout.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(SimError::Layout(format!("density matrix dimension {} != {d}", rho.nrows())));
        }
        if !rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(SimError::Numerical("density matrix has non-finite entries".into()));
        }
        let herm = max_abs(&(&rho - rho.adjoint()));
        if herm > Self::HERMITICITY_TOL {
            return Err(SimError::Numerical(format!("density matrix not Hermitian ({herm:e})")));
        }
        Ok(Self { layout, rho })
    }

    pub fn pure(layout: HilbertLayout, psi: &DVector<C64>) -> Result<Self> {
        Self::new(layout, psi * psi.adjoint())
    }

    /// Product basis state `|s0,n0⟩⊗|s1,n1⟩⊗...`.
    pub fn basis(layout: HilbertLayout, atoms: &[(Spin, usize)]) -> Result<Self> {
        let idx = layout.index(atoms)?;
        let d = layout.dim();
        let mut rho = CMatrix::zeros(d, d);
        rho[(idx, idx)] = ONE;
        Ok(Self { layout, rho })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.rho - self.rho.adjoint()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> Result<C64> {
        same_layout(self.layout, op.layout)?;
        Ok((&op.m * &self.rho).trace())
    }

    /// `U ρ U†` for a raw matrix of the right dimension.
    pub fn conjugated(&self, u: &CMatrix) -> Self {
        let rho = u * &self.rho * u.adjoint();
        Self { layout: self.layout, rho: hermitize(rho) }
    }

    /// Divide by the trace. Fails when the trace is below 1e-12.
    pub fn renormalized(&self) -> Result<Self> {
        let t = self.trace();
        if t < 1e-12 {
            return Err(SimError::Protocol(format!("cannot renormalize state with trace {t:e}")));
        }
        Ok(Self { layout: self.layout, rho: &self.rho / C64::new(t, 0.0) })
    }

    /// Raw (unnormalised) motional populations of `atom`, summed over spin and other atoms.
    pub fn motional_populations(&self, atom: usize) -> Result<Vec<f64>> {
        let red = reduced_density(self, &[Factor::Motion(atom)])?;
        Ok((0..red.nrows()).map(|i| red[(i, i)].re).collect())
    }

    /// Raw population of `spin` on `atom`.
    pub fn spin_population(&self, atom: usize, s: Spin) -> Result<f64> {
        let red = reduced_density(self, &[Factor::Spin(atom)])?;
        Ok(red[(s.index(), s.index())].re)
    }

    /// Ground-state probability of `atom`, normalised by the trace.
    pub fn ground_probability(&self, atom: usize) -> Result<f64> {
        let p = self.motional_populations(atom)?;
        Ok(p[0] / self.trace())
    }
}

pub(crate) fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Geometric populations `n̄ⁿ/(1+n̄)ⁿ⁺¹`, renormalised over `levels`.
pub fn thermal_populations(levels: usize, n_bar: f64) -> Result<Vec<f64>> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return domain(format!("mean occupation must be finite and non-negative, got {n_bar}"));
    }
    let q = n_bar / (1.0 + n_bar);
    let mut p: Vec<f64> = (0..levels).map(|n| q.powi(n as i32)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    Ok(p)
}

/// Product of per-atom states `|s_i⟩⟨s_i| ⊗ thermal(n̄)`.
pub fn thermal_state(layout: HilbertLayout, spins: &[Spin], n_bar: f64) -> Result<QuantumState> {
    let pops = thermal_populations(layout.motional_levels(), n_bar)?;
    motional_mixture_state(layout, spins, &pops)
}

/// Product of per-atom states `|s_i⟩⟨s_i| ⊗ diag(pops)`.
pub fn motional_mixture_state(layout: HilbertLayout, spins: &[Spin], pops: &[f64]) -> Result<QuantumState> {
    if spins.len() != layout.n_atoms() {
        return Err(SimError::Layout(format!("expected {} spin labels, got {}", layout.n_atoms(), spins.len())));
    }
    if pops.len() != layout.motional_levels() {
        return Err(SimError::Layout("population vector length != motional levels".into()));
    }
    let local: Vec<CMatrix> = spins
        .iter()
        .map(|&s| {
            let m = CMatrix::from_diagonal(&DVector::from_iterator(pops.len(), pops.iter().map(|&p| C64::new(p, 0.0))));
            kron(&spin::projector(s), &m)
        })
        .collect();
    let rho = local[1..].iter().fold(local[0].clone(), |acc, m| kron(&acc, m));
    QuantumState::new(layout, rho)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    pub kraus_operators: Vec<OperatorMatrix>,
    pub trace_preserving: bool,
}

impl QuantumChannel {
    pub const COMPLETENESS_TOL: f64 = 1e-9;

    /// Validates `Σ K†K = 1` (trace preserving) or `Σ K†K ≼ 1` (otherwise).
    pub fn new(kraus_operators: Vec<OperatorMatrix>, trace_preserving: bool) -> Result<Self> {
        let first = kraus_operators
            .first()
            .ok_or_else(|| SimError::Domain("channel needs at least one Kraus operator".into()))?;
        let layout = first.layout;
        let d = layout.dim();
        let mut sum = CMatrix::zeros(d, d);
        for k in &kraus_operators {
            same_layout(layout, k.layout)?;
            sum += k.m.adjoint() * &k.m;
        }
        let gap = CMatrix::identity(d, d) - sum;
        if trace_preserving {
            let err = max_abs(&gap);
            if err > Self::COMPLETENESS_TOL {
                return domain(format!("Kraus set not complete (deviation {err:e})"));
            }
        } else {
            let min = hermitize(gap).symmetric_eigenvalues().min();
            if min < -Self::COMPLETENESS_TOL {
                return domain(format!("Kraus set increases trace (eigenvalue {min:e})"));
            }
        }
        Ok(Self { kraus_operators, trace_preserving })
    }

    pub fn layout(&self) -> HilbertLayout {
        self.kraus_operators[0].layout
    }

    pub fn identity(layout: HilbertLayout) -> Self {
        Self { kraus_operators: vec![OperatorMatrix::identity(layout)], trace_preserving: true }
    }

    /// Keep only the `spin` sector of `atom`; the complement is discarded.
    pub fn herald_keep(layout: HilbertLayout, atom: usize, keep: Spin) -> Result<Self> {
        let k = OperatorMatrix::on_atom(
            layout,
            atom,
            &spin::projector(keep),
            &CMatrix::identity(layout.motional_levels(), layout.motional_levels()),
            format!("P{atom}{keep:?}"),
        )?;
        Self::new(vec![k], false)
    }

    /// Full depolarising channel `ρ → (1-p)ρ + p Tr(ρ) 1/d`, as d² Weyl operators.
    pub fn depolarizing(layout: HilbertLayout, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("depolarizing probability {p} outside [0, 1]"));
        }
        let d = layout.dim();
        let mut ks = Vec::with_capacity(d * d);
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64);
        for a in 0..d {
            for b in 0..d {
                // X^a Z^b; the pair (0,0) absorbs the no-error weight.
                let scale =
                    if a == 0 && b == 0 { (1.0 - p + p / (d * d) as f64).sqrt() } else { (p / (d * d) as f64).sqrt() };
                if scale == 0.0 {
                    continue;
                }
                let mut m = CMatrix::zeros(d, d);
                for j in 0..d {
                    m[((j + a) % d, j)] = w.powu((b * j) as u32) * scale;
                }
                ks.push(OperatorMatrix::new(layout, m, format!("W{a},{b}"))?);
            }
        }
        Self::new(ks, true)
    }
}

pub fn apply_channel(state: &QuantumState, ch: &QuantumChannel) -> Result<QuantumState> {
    same_layout(state.layout, ch.layout())?;
    let d = state.dim();
    let mut out = CMatrix::zeros(d, d);
    for k in &ch.kraus_operators {
        out += &k.m * &state.rho * k.m.adjoint();
    }
    Ok(QuantumState { layout: state.layout, rho: hermitize(out) })
}

/// A tensor factor of a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Spin(usize),
    Motion(usize),
}

impl Factor {
    fn position(self) -> usize {
        match self {
            Factor::Spin(a) => 2 * a,
            Factor::Motion(a) => 2 * a + 1,
        }
    }
}

/// Partial trace keeping the listed factors, returned in layout order.
pub fn reduced_density(state: &QuantumState, keep: &[Factor]) -> Result<CMatrix> {
    let dims = state.layout.factor_dims();
    let mut kept: Vec<usize> = Vec::with_capacity(keep.len());
    for f in keep {
        let p = f.position();
        if p >= dims.len() {
            return Err(SimError::Layout(format!("factor {f:?} outside layout")));
        }
        if kept.contains(&p) {
            return Err(SimError::Layout(format!("factor {f:?} selected twice")));
        }
        kept.push(p);
    }
    kept.sort_unstable();
    Ok(partial_trace_raw(&state.rho, &dims, &kept))
}

/// Partial trace of a matrix over mixed-radix `dims`, keeping positions `kept` (sorted).
pub fn partial_trace_raw(rho: &CMatrix, dims: &[usize], kept: &[usize]) -> CMatrix {
    let d: usize = dims.iter().product();
    let dk: usize = kept.iter().map(|&p| dims[p]).product();
    let split = |mut idx: usize| -> (usize, usize) {
        // Returns (kept index, traced index) in mixed radix.
        let (mut k, mut t, mut kw, mut tw) = (0, 0, 1, 1);
        for p in (0..dims.len()).rev() {
            let digit = idx % dims[p];
            idx /= dims[p];
            if kept.contains(&p) {
                k += digit * kw;
                kw *= dims[p];
            } else {
                t += digit * tw;
                tw *= dims[p];
            }
        }
        (k, t)
    };
    let parts: Vec<(usize, usize)> = (0..d).map(split).collect();
    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..d {
        let (ki, ti) = parts[i];
        for j in 0..d {
            let (kj, tj) = parts[j];
            if ti == tj {
                out[(ki, kj)] += rho[(i, j)];
            }
        }
    }
    out
}

/// Partial trace keeping whole atoms; the result has an `keep.len()`-atom layout.
pub fn partial_trace(state: &QuantumState, keep_atoms: &[usize]) -> Result<QuantumState> {
    if keep_atoms.is_empty() {
        return Err(SimError::Layout("must keep at least one atom".into()));
    }
    let mut sorted = keep_atoms.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep_atoms.len() {
        return Err(SimError::Layout("duplicate atom in selection".into()));
    }
    let factors: Vec<Factor> = sorted.iter().flat_map(|&a| [Factor::Spin(a), Factor::Motion(a)]).collect();
    let rho = reduced_density(state, &factors)?;
    let layout = HilbertLayout::new(sorted.len(), state.layout.motional_levels())?;
    Ok(QuantumState { layout, rho })
}

/// Wootters concurrence of a two-qubit density matrix (4x4, normalised internally).
pub fn concurrence(rho: &CMatrix) -> Result<f64> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(SimError::Layout("concurrence needs a 4x4 matrix".into()));
    }
    let t = rho.trace().re;
    if t <= 1e-15 {
        return Err(SimError::Numerical("concurrence of a zero matrix".into()));
    }
    let rho = hermitize(rho / C64::new(t, 0.0));
    let yy = CMatrix::from_fn(4, 4, |i, j| {
        if i + j == 3 {
            if i == 0 || i == 3 {
                -ONE
            } else {
                ONE
            }
        } else {
            ZERO
        }
    });
    let tilde = &yy * rho.conjugate() * &yy;
    let sqrt_rho = psd_sqrt(&rho);
    let m = hermitize(&sqrt_rho * tilde * &sqrt_rho);
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().map(|&x| x.max(0.0).sqrt()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok((ev[0] - ev[1] - ev[2] - ev[3]).max(0.0))
}

/// Principal square root of a Hermitian positive semidefinite matrix.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let eig = hermitize(m.clone()).symmetric_eigen();
    let d = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&x| C64::new(x.max(0.0).sqrt(), 0.0)),
    );
    &eig.eigenvectors * CMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

/// Restrict a two-factor matrix with per-factor dimension `levels` to the
/// lowest two levels of each factor, giving a 4x4 (unnormalised) block.
pub fn two_qubit_block(rho: &CMatrix, levels: usize) -> CMatrix {
    let idx = [0, 1, levels, levels + 1];
    CMatrix::from_fn(4, 4, |i, j| rho[(idx[i], idx[j])])
}

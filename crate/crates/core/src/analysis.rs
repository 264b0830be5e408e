//! Spectroscopy emulation and least-squares fitting.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{local_hamiltonian, PhysicalParams};
use crate::error::{domain, Result, SimError};
use crate::linalg::expm;
use crate::quantum::{QuantumState, Spin};

pub const MAX_ITERATIONS: usize = 200;
pub const RELATIVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Sinusoid,
    PowerLaw,
    GaussianDecay,
    ExpDecay,
}

impl FitModel {
    pub fn name(self) -> &'static str {
        match self {
            FitModel::Sinusoid => "sinusoid",
            FitModel::PowerLaw => "power_law",
            FitModel::GaussianDecay => "gaussian_decay",
            FitModel::ExpDecay => "exp_decay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<FitParam>,
    pub residual_rms: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Value of a named parameter; panics on a name the model does not have.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name).unwrap_or_else(|| panic!("no parameter {name} in {:?} fit", self.model)).value
    }

    pub fn sigma(&self, name: &str) -> f64 {
        self.get(name).unwrap_or_else(|| panic!("no parameter {name} in {:?} fit", self.model)).sigma
    }

    fn new(model: FitModel, names: &[&str], values: &[f64], sigmas: &[f64], rms: f64, converged: bool) -> Self {
        let params = names
            .iter()
            .zip(values)
            .zip(sigmas)
            .map(|((n, &v), &s)| FitParam { name: n.to_string(), value: v, sigma: s })
            .collect();
        Self { model, params, residual_rms: rms, converged }
    }
}

fn split(xy: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<f64>)> {
    if xy.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return domain("fit data must be finite");
    }
    Ok(xy.iter().copied().unzip())
}

fn rms(r: &DVector<f64>) -> f64 {
    (r.norm_squared() / r.len().max(1) as f64).sqrt()
}

struct LmFit {
    p: Vec<f64>,
    sigma: Vec<f64>,
    rms: f64,
    converged: bool,
}

/// Damped Gauss-Newton with a central-difference Jacobian.
fn levenberg_marquardt(model: impl Fn(f64, &[f64]) -> f64, xs: &[f64], ys: &[f64], p0: &[f64]) -> LmFit {
    let (n, k) = (xs.len(), p0.len());
    let resid = |p: &[f64]| DVector::from_fn(n, |i, _| model(xs[i], p) - ys[i]);
    let jacobian = |p: &[f64]| {
        let mut j = DMatrix::zeros(n, k);
        let mut q = p.to_vec();
        for c in 0..k {
            let h = 1e-7 * p[c].abs().max(1e-7);
            q[c] = p[c] + h;
            let up = resid(&q);
            q[c] = p[c] - h;
            let dn = resid(&q);
            q[c] = p[c];
            j.set_column(c, &((up - dn) / (2.0 * h)));
        }
        j
    };
    let mut p = p0.to_vec();
    let mut r = resid(&p);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let j = jacobian(&p);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for d in 0..k {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = resid(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                let small_step = step.iter().zip(&p).all(|(s, v)| s.abs() <= RELATIVE_TOLERANCE * (v.abs() + 1e-12));
                let small_gain = cost - ct <= RELATIVE_TOLERANCE * cost;
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                converged = small_step || small_gain || cost == 0.0;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: at a minimum to machine precision.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    let j = jacobian(&p);
    let dof = n.saturating_sub(k).max(1) as f64;
    let s2 = cost / dof;
    let cov = (j.transpose() * &j).pseudo_inverse(1e-12).unwrap_or_else(|_| DMatrix::zeros(k, k));
    let sigma = (0..k).map(|i| (cov[(i, i)].max(0.0) * s2).sqrt()).collect();
    LmFit { p, sigma, rms: rms(&r), converged }
}

fn sinusoid(x: f64, p: &[f64]) -> f64 {
    p[3] + 0.5 * p[1] * (2.0 * PI * p[0] * x + p[2]).cos()
}

/// Linear least squares of `c + a cos(2πfx) + b sin(2πfx)` via the normal equations.
fn linear_sinusoid(xs: &[f64], ys: &[f64], f: f64) -> Option<([f64; 3], f64)> {
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut aty = nalgebra::Vector3::<f64>::zeros();
    let mut yy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let (s, c) = (2.0 * PI * f * x).sin_cos();
        let row = nalgebra::Vector3::new(1.0, c, s);
        ata += row * row.transpose();
        aty += row * *y;
        yy += y * y;
    }
    let sol = ata.cholesky()?.solve(&aty);
    let rss = yy - 2.0 * sol.dot(&aty) + (sol.transpose() * ata * sol)[0];
    Some(([sol[0], sol[1], sol[2]], rss))
}

/// Fit `y = c + (C/2) cos(2πfx + φ)`; frequency seeded from a spectral scan.
pub fn fit_sinusoid(xy: &[(f64, f64)]) -> Result<FitResult> {
    let (xs, ys) = split(xy)?;
    if xs.len() < 8 {
        return domain("sinusoid fit needs at least 8 points");
    }
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let span = sorted[sorted.len() - 1] - sorted[0];
    let min_dx = sorted.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    if !(span > 0.0) || !min_dx.is_finite() {
        return domain("sinusoid fit needs distinct x values");
    }
    // Scan from a quarter period across the window up to the Nyquist limit of the finest spacing.
    let f_lo = 0.25 / span;
    let f_hi = 0.5 / min_dx;
    let df = 0.1 / span;
    let steps = (((f_hi - f_lo) / df).ceil() as usize).clamp(1, 200_000);
    let mut best = (f_lo, f64::INFINITY);
    for s in 0..=steps {
        let f = f_lo + (f_hi - f_lo) * s as f64 / steps as f64;
        if let Some((_, rss)) = linear_sinusoid(&xs, &ys, f) {
            if rss < best.1 {
                best = (f, rss);
            }
        }
    }
    let f0 = best.0;
    let ([c, a, b], _) =
        linear_sinusoid(&xs, &ys, f0).ok_or_else(|| SimError::Numerical("sinusoid initialisation failed".into()))?;
    let p0 = [f0, 2.0 * a.hypot(b), (-b).atan2(a), c];
    let fit = levenberg_marquardt(sinusoid, &xs, &ys, &p0);
    let mut p = fit.p;
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] += PI;
    }
    if p[0] < 0.0 {
        p[0] = -p[0];
        p[2] = -p[2];
    }
    p[2] = (p[2] + PI).rem_euclid(2.0 * PI) - PI;
    Ok(FitResult::new(
        FitModel::Sinusoid,
        &["frequency", "contrast", "phase", "offset"],
        &p,
        &fit.sigma,
        fit.rms,
        fit.converged,
    ))
}

/// `y = A x^B` by linear regression of `ln y` on `ln x`; rms is in log space.
pub fn fit_power_law(xy: &[(f64, f64)]) -> Result<FitResult> {
    let (xs, ys) = split(xy)?;
    if xs.len() < 2 {
        return domain("power-law fit needs at least 2 points");
    }
    if xs.iter().chain(&ys).any(|v| *v <= 0.0) {
        return domain("power-law fit needs positive data");
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return domain("power-law fit needs distinct x values");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let ln_a = my - b * mx;
    let res = DVector::from_iterator(lx.len(), lx.iter().zip(&ly).map(|(x, y)| y - ln_a - b * x));
    let s2 = if lx.len() > 2 { res.norm_squared() / (n - 2.0) } else { 0.0 };
    let sb = (s2 / sxx).sqrt();
    let sln_a = (s2 * (1.0 / n + mx * mx / sxx)).sqrt();
    let a = ln_a.exp();
    Ok(FitResult::new(FitModel::PowerLaw, &["A", "B"], &[a, b], &[a * sln_a, sb], rms(&res), true))
}

fn decay_init(xs: &[f64], ys: &[f64], power: i32) -> Result<[f64; 2]> {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(_, y)| **y > 0.0).map(|(x, y)| (x.powi(power), y.ln())).collect();
    if pts.len() < 2 {
        return domain("decay fit needs at least two positive points");
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx } else { 0.0 };
    let c0 = (my - slope * mx).exp();
    let span = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let t = if slope < 0.0 { (-1.0 / slope).powf(1.0 / power as f64) } else { span.max(1e-300) };
    Ok([c0, t])
}

fn fit_decay(xy: &[(f64, f64)], power: i32, model: FitModel) -> Result<FitResult> {
    let (xs, ys) = split(xy)?;
    if xs.len() < 3 {
        return domain("decay fit needs at least 3 points");
    }
    let p0 = decay_init(&xs, &ys, power)?;
    let f = move |x: f64, p: &[f64]| p[0] * (-(x / p[1]).abs().powi(power)).exp();
    let fit = levenberg_marquardt(f, &xs, &ys, &p0);
    let mut p = fit.p;
    p[1] = p[1].abs();
    Ok(FitResult::new(model, &["C0", "T"], &p, &fit.sigma, fit.rms, fit.converged))
}

/// `y = C₀ exp(−(t/T)²)`; T is the 1/e time.
pub fn fit_gaussian_decay(xy: &[(f64, f64)]) -> Result<FitResult> {
    fit_decay(xy, 2, FitModel::GaussianDecay)
}

/// `y = C₀ exp(−t/T)`.
pub fn fit_exp_decay(xy: &[(f64, f64)]) -> Result<FitResult> {
    fit_decay(xy, 1, FitModel::ExpDecay)
}

/// Default weak probe Rabi frequency for thermometry.
pub const PROBE_RABI: f64 = 2.0 * PI * 1e3;

/// Probe settings: Ω = 2π·1 kHz, t = π/(ηΩ).
pub fn default_probe(params: &PhysicalParams) -> (PhysicalParams, f64) {
    let probe = PhysicalParams { rabi: PROBE_RABI, ..*params };
    (probe, PI / (params.eta * PROBE_RABI))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub points: Vec<(f64, f64)>,
    pub a_red: f64,
    pub a_blue: f64,
    pub a_carrier: f64,
    pub warnings: Vec<String>,
}

/// Transferred spin population after a square probe at each detuning.
///
/// The probe drives the spin out of whichever state it starts in; peaks are
/// read off at the grid maxima within ω/2 of each resonance.
pub fn sideband_spectroscopy(
    state: &QuantumState,
    params: &PhysicalParams,
    detuning_grid: &[f64],
    probe_time: f64,
) -> Result<Spectrum> {
    params.validate()?;
    if state.layout.n_atoms() != 1 {
        return domain("spectroscopy is single-atom");
    }
    if !(probe_time > 0.0) || detuning_grid.is_empty() {
        return domain("need a positive probe time and a non-empty grid");
    }
    let mut warnings = Vec::new();
    if params.rabi >= 0.1 * params.omega {
        warnings.push("probe Rabi frequency is not small compared with the trap frequency".to_string());
    }
    let n = state.layout.motional_levels();
    let start_up = state.spin_population(0, Spin::Up)? / state.trace();
    let points = detuning_grid
        .iter()
        .map(|&d| {
            let h = local_hamiltonian(params, n, d, 0.0)?;
            let u = expm(&(h * C64::new(0.0, -probe_time)))?;
            let after = state.conjugated(&u);
            let up = after.spin_population(0, Spin::Up)? / after.trace();
            Ok((d, (up - start_up).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let peak = |center: f64| {
        points
            .iter()
            .filter(|(d, _)| (d - center).abs() < 0.5 * params.omega)
            .map(|p| p.1)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let mut get = |center: f64, label: &str| {
        peak(center).unwrap_or_else(|| {
            warnings.push(format!("no grid points near the {label} resonance"));
            0.0
        })
    };
    let (a_red, a_blue, a_carrier) = (get(-params.omega, "red"), get(params.omega, "blue"), get(0.0, "carrier"));
    // Sideband feature width is about 1/t; require two points per width near each resonance.
    let width = PI / probe_time;
    let undersampled = [-params.omega, 0.0, params.omega].iter().any(|&c| {
        let mut near: Vec<f64> = detuning_grid.iter().copied().filter(|d| (d - c).abs() <= 2.0 * width).collect();
        near.sort_by(f64::total_cmp);
        near.len() < 2 || near.windows(2).any(|w| w[1] - w[0] > width)
    });
    if undersampled {
        warnings.push("detuning grid undersamples the probe linewidth".to_string());
    }
    Ok(Spectrum { points, a_red, a_blue, a_carrier, warnings })
}

/// Thermal-model ground-state estimate from sideband amplitudes.
pub fn p0_from_sidebands(a_red: f64, a_blue: f64) -> Result<f64> {
    if !(a_blue > 0.0) || !(a_red >= 0.0) {
        return domain("sideband amplitudes need A_blue > 0 and A_red ≥ 0");
    }
    let r = a_red / a_blue;
    if r >= 1.0 {
        return domain(format!("sideband ratio {r} ≥ 1: thermal estimate undefined"));
    }
    let n_bar = r / (1.0 - r);
    Ok(1.0 / (1.0 + n_bar))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    /// Exponent of `1 − P₀^EC` against `1/ω`.
    pub ecc_infidelity: FitResult,
    /// Exponent of `P₀^EC − P₀^SC` against `1/ω`.
    pub ecc_advantage: FitResult,
}

/// Power-law exponents in `1/ω` over points with `ω ≥ omega_min`.
pub fn fit_scaling(omega: &[f64], p0_sc: &[f64], p0_ec: &[f64], omega_min: f64) -> Result<ScalingFit> {
    if omega.len() != p0_sc.len() || omega.len() != p0_ec.len() {
        return domain("scaling data columns differ in length");
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..omega.len() {
        if omega[i] >= omega_min {
            a.push((1.0 / omega[i], 1.0 - p0_ec[i]));
            b.push((1.0 / omega[i], p0_ec[i] - p0_sc[i]));
        }
    }
    Ok(ScalingFit { ecc_infidelity: fit_power_law(&a)?, ecc_advantage: fit_power_law(&b)? })
}

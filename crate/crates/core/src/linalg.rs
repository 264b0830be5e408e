//! Dense matrix helpers: exponential, Kronecker product, norms.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Result, SimError};

// Padé coefficients and 1-norm thresholds from Higham (2005).
const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.53939833006323e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068)];
const THETA13: f64 = 5.371920351148152;

/// Maximum absolute column sum.
pub fn norm1<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.clone().modulus()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest elementwise modulus.
pub fn max_abs<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    a.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max)
}

/// Kronecker product `a ⊗ b` (first factor is the slow index).
pub fn kron<T: ComplexField>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a.kronecker(b)
}

fn scaled<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, s: f64) -> DMatrix<T> {
    m * T::from_real(s)
}

fn add_identity<T: ComplexField<RealField = f64>>(m: &mut DMatrix<T>, s: f64) {
    for i in 0..m.nrows() {
        m[(i, i)] += T::from_real(s);
    }
}

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant.
///
/// Works for real and complex element types. Fails only on non-finite input
/// or a singular Padé denominator (which cannot happen for finite input).
pub fn expm<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(SimError::Numerical("expm of a non-square matrix".into()));
    }
    if !a.iter().all(|x| x.clone().is_finite()) {
        return Err(SimError::Numerical("expm of a non-finite matrix".into()));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let nrm = norm1(a);
    let a2 = a * a;
    for &(m, theta) in &THETA {
        if nrm <= theta {
            let coeffs: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, &a2, coeffs);
            return solve_pade(&u, &v);
        }
    }
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil().max(0.0) as i32 } else { 0 };
    let f = 0.5f64.powi(s);
    let a1 = scaled(a, f);
    let a2 = scaled(&a2, f * f);
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;

    let mut inner = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    inner = &a6 * inner;
    let mut u_in = inner + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]);
    add_identity(&mut u_in, b[1]);
    let u = &a1 * u_in;

    let mut inner = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    inner = &a6 * inner;
    let mut v = inner + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]);
    add_identity(&mut v, b[0]);

    let mut r = solve_pade(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_low<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, a2: &DMatrix<T>, b: &[f64]) -> (DMatrix<T>, DMatrix<T>) {
    let n = a.nrows();
    let mut pow = DMatrix::<T>::identity(n, n);
    let mut u_in = DMatrix::<T>::zeros(n, n);
    let mut v = DMatrix::<T>::zeros(n, n);
    for k in (0..b.len()).step_by(2) {
        if k > 0 {
            pow = &pow * a2;
        }
        v += scaled(&pow, b[k]);
        u_in += scaled(&pow, b[k + 1]);
    }
    (a * u_in, v)
}

fn solve_pade<T: ComplexField<RealField = f64>>(u: &DMatrix<T>, v: &DMatrix<T>) -> Result<DMatrix<T>> {
    let p = v + u;
    let q = v - u;
    q.lu().solve(&p).ok_or_else(|| SimError::Numerical("singular Padé denominator".into()))
}

//! Collective spin operators and battery states in the Dicke basis.
//!
//! The basis is ordered by descending magnetic number, `m = N/2, N/2 - 1, ..., -N/2`,
//! so the fully charged state is the first basis vector and the uncharged state
//! the last one. Every file format in the crate uses the same order.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, I};

/// `J_x`, `J_y`, `J_z` and the ladder operators for `N` identical two-level units
/// (total spin `s = N/2`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperators {
    pub n_units: usize,
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
    pub jplus: CMatrix,
    pub jminus: CMatrix,
}

impl SpinOperators {
    pub fn dim(&self) -> usize {
        self.n_units + 1
    }

    pub fn spin(&self) -> f64 {
        self.n_units as f64 / 2.0
    }

    /// Magnetic number of basis element `k`.
    pub fn m(&self, k: usize) -> f64 {
        self.spin() - k as f64
    }

    /// `v . J` for a real coefficient vector.
    pub fn dot(&self, v: [f64; 3]) -> CMatrix {
        &self.jx * Complex64::from(v[0]) + &self.jy * Complex64::from(v[1]) + &self.jz * Complex64::from(v[2])
    }

    pub fn axis(&self, i: usize) -> &CMatrix {
        match i {
            0 => &self.jx,
            1 => &self.jy,
            2 => &self.jz,
            _ => panic!("spin axis index {i} out of range"),
        }
    }

    fn check(&self, state: &StateVector) -> Result<()> {
        if state.n_units != self.n_units || state.amplitudes.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: state.amplitudes.len() });
        }
        Ok(())
    }

    /// `<psi|J_z|psi>`, using the diagonal of `J_z` directly.
    pub fn expect_jz(&self, state: &StateVector) -> Result<f64> {
        self.check(state)?;
        Ok(state.amplitudes.iter().enumerate().map(|(k, a)| a.norm_sqr() * self.m(k)).sum())
    }
}

/// Builds the spin-`N/2` representation from the ladder rule
/// `J+ |s,m> = sqrt(s(s+1) - m(m+1)) |s,m+1>`.
pub fn build_operators(n_units: usize) -> Result<SpinOperators> {
    if n_units == 0 {
        return Err(Error::ZeroUnits);
    }
    let dim = n_units + 1;
    let s = n_units as f64 / 2.0;
    let mut jplus = CMatrix::zeros(dim, dim);
    let mut jz = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let m = s - k as f64;
        jz[(k, k)] = Complex64::from(m);
        if k > 0 {
            // basis k has m, basis k-1 has m+1
            jplus[(k - 1, k)] = Complex64::from((s * (s + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let jminus = jplus.adjoint();
    let jx = (&jplus + &jminus) * Complex64::from(0.5);
    let jy = (&jplus - &jminus) * (Complex64::from(0.5) / I);
    Ok(SpinOperators { n_units, jx, jy, jz, jplus, jminus })
}

/// Pure state of the battery pack as amplitudes over the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: CVector,
    pub n_units: usize,
}

impl StateVector {
    pub fn new(amplitudes: CVector, n_units: usize) -> Result<Self> {
        if n_units == 0 {
            return Err(Error::ZeroUnits);
        }
        if amplitudes.len() != n_units + 1 {
            return Err(Error::DimensionMismatch { expected: n_units + 1, found: amplitudes.len() });
        }
        Ok(Self { amplitudes, n_units })
    }

    /// Fully charged Dicke state `|N/2, N/2>`.
    pub fn charged(n_units: usize) -> Result<Self> {
        if n_units == 0 {
            return Err(Error::ZeroUnits);
        }
        let mut amplitudes = CVector::zeros(n_units + 1);
        amplitudes[0] = Complex64::from(1.0);
        Ok(Self { amplitudes, n_units })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        self.amplitudes /= Complex64::from(n);
    }
}

/// Uncharged state `|N/2, -N/2>`: all weight on the last basis vector.
pub fn uncharged_state(n_units: usize) -> Result<StateVector> {
    if n_units == 0 {
        return Err(Error::ZeroUnits);
    }
    let mut amplitudes = CVector::zeros(n_units + 1);
    amplitudes[n_units] = Complex64::from(1.0);
    Ok(StateVector { amplitudes, n_units })
}

/// Charge saturation `<J_z>/N + 1/2`, evaluated as the mean excitation
/// `sum |a_k|^2 (m_k + s) / (N |a|^2)` so that an uncharged state gives exactly 0.
pub fn saturation(state: &StateVector, ops: &SpinOperators) -> Result<f64> {
    ops.check(state)?;
    let s = ops.spin();
    let (excited, norm) = state
        .amplitudes
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(e, n), (k, a)| (e + a.norm_sqr() * (ops.m(k) + s), n + a.norm_sqr()));
    Ok(excited / (ops.n_units as f64 * norm))
}

/// Energy stored relative to `initial`: `omega0 * (<J_z>_state - <J_z>_initial)`.
pub fn stored_energy(state: &StateVector, initial: &StateVector, omega0: f64, ops: &SpinOperators) -> Result<f64> {
    let n = ops.n_units as f64;
    Ok(omega0 * n * (saturation(state, ops)? - saturation(initial, ops)?))
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Coefficients `b'` with `exp(i a.J) (b.J) exp(-i a.J) = b'.J`.
///
/// This is the summed adjoint series
/// `b' = b - (sin|a|/|a|) a x b - ((cos|a| - 1)/|a|^2) a x (a x b)`,
/// a rotation of `b` by angle `-|a|` about `a`. It holds in every
/// representation, so the result is independent of `N`.
pub fn rotate_generator(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    if norm == 0.0 {
        return b;
    }
    let axb = cross(a, b);
    let axaxb = cross(a, axb);
    let c1 = norm.sin() / norm;
    let c2 = (norm.cos() - 1.0) / (norm * norm);
    [
        b[0] - c1 * axb[0] - c2 * axaxb[0],
        b[1] - c1 * axb[1] - c2 * axaxb[1],
        b[2] - c1 * axb[2] - c2 * axaxb[2],
    ]
}

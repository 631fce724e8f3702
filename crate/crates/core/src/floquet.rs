//! Frequency-space Floquet treatment of a periodic drive.
//!
//! With `H(t) = sum_n H_n e^{i n omega t}` the Floquet Hamiltonian has blocks
//! `(H_F)[n', n] = H_{n'-n} + delta_{n'n} n omega`. Its eigenvalues in the first
//! zone `[-omega/2, omega/2)` are the quasienergies `eps_a`, and the Fourier blocks
//! `|Phi_a^n>` of each eigenvector give the periodic Floquet modes
//! `|Phi_a(t)> = sum_n |Phi_a^n> e^{i n omega t}`. The propagator is
//! `U(t) = sum_a e^{-i eps_a t} |Phi_a(t)><Phi_a(0)|`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csvfmt::sig12;
use crate::drive::FourierComponents;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::spin::{build_operators, SpinOperators, StateVector};

pub const DEFAULT_N_MAX: usize = 30;
/// Eigenvalues this close to the upper zone edge belong to the lower edge.
const ZONE_EDGE_TOL: f64 = 1e-12;
/// Minimum gap between the last selected and first rejected central weight.
const SELECTION_GAP: f64 = 1e-6;
/// Mode matrices with a larger condition number are treated as singular.
const MAX_CONDITION: f64 = 1e12;

pub fn build_floquet_hamiltonian(components: &FourierComponents, n_max: usize, ops: &SpinOperators) -> Result<CMatrix> {
    if n_max < components.max_harmonic {
        return Err(Error::TruncationTooSmall { n_max, needed: components.max_harmonic });
    }
    let dim = ops.dim();
    if components.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: components.dim() });
    }
    let blocks = 2 * n_max + 1;
    let mut hf = CMatrix::zeros(blocks * dim, blocks * dim);
    let omega = components.base_frequency;
    for row in 0..blocks {
        for col in 0..blocks {
            let diff = row as i64 - col as i64;
            if let Some(h) = components.get(diff) {
                hf.view_mut((row * dim, col * dim), (dim, dim)).copy_from(h);
            }
        }
        let n = row as f64 - n_max as f64;
        for k in 0..dim {
            hf[(row * dim + k, row * dim + k)] += Complex64::from(n * omega);
        }
    }
    Ok(hf)
}

/// Quasienergies and Fourier blocks of the `N+1` physical Floquet modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetDecomposition {
    pub n_units: usize,
    pub base_frequency: f64,
    pub period: f64,
    pub n_max: usize,
    /// Ascending, each in `[-omega/2, omega/2)`.
    pub quasi_energies: Vec<f64>,
    /// `modes[a][n + n_max] = |Phi_a^n>`.
    pub modes: Vec<Vec<CVector>>,
    /// Weight of each selected eigenvector in blocks `|n| <= n_max/2`.
    pub central_weights: Vec<f64>,
}

impl FloquetDecomposition {
    pub fn dim(&self) -> usize {
        self.n_units + 1
    }

    pub fn block(&self, alpha: usize, n: i64) -> Option<&CVector> {
        let idx = n + self.n_max as i64;
        if idx < 0 {
            return None;
        }
        self.modes[alpha].get(idx as usize)
    }

    fn harmonics(&self) -> impl Iterator<Item = i64> {
        let m = self.n_max as i64;
        -m..=m
    }

    /// `|Phi_a(t)> = sum_n |Phi_a^n> e^{i n omega t}`.
    pub fn mode_at(&self, alpha: usize, t: f64) -> CVector {
        let mut v = CVector::zeros(self.dim());
        for (blk, n) in self.modes[alpha].iter().zip(self.harmonics()) {
            v += blk * Complex64::from_polar(1.0, n as f64 * self.base_frequency * t);
        }
        v
    }

    /// Columns `sum_n |Phi_a^n>`.
    pub fn mode_matrix(&self) -> CMatrix {
        let cols: Vec<CVector> = (0..self.dim()).map(|a| self.mode_at(a, 0.0)).collect();
        CMatrix::from_columns(&cols)
    }

    /// `alpha,quasienergy,central_weight` (alpha counted from 1).
    pub fn quasienergy_csv(&self) -> String {
        let mut out = String::from("alpha,quasienergy,central_weight\n");
        for (a, (e, w)) in self.quasi_energies.iter().zip(&self.central_weights).enumerate() {
            let _ = writeln!(out, "{},{},{}", a + 1, sig12(*e), sig12(*w));
        }
        out
    }
}

/// Diagonalizes the truncated Floquet Hamiltonian and keeps one eigenvector per band.
///
/// Among the eigenvalues in the first zone, the `N+1` with the largest weight in the
/// central Fourier blocks are kept; eigenvectors piled against the truncation edge
/// carry little central weight and drop out.
pub fn decompose(components: &FourierComponents, n_max: usize, ops: &SpinOperators) -> Result<FloquetDecomposition> {
    let hf = build_floquet_hamiltonian(components, n_max, ops)?;
    let dim = ops.dim();
    let omega = components.base_frequency;
    let half = 0.5 * omega;
    let blocks = 2 * n_max + 1;
    let central = (n_max / 2) as i64;

    let eig = SymmetricEigen::new(hf);
    let mut candidates: Vec<(f64, f64, usize)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &lambda)| lambda >= -half - ZONE_EDGE_TOL && lambda < half - ZONE_EDGE_TOL)
        .map(|(j, &lambda)| {
            let col = eig.eigenvectors.column(j);
            let weight: f64 = (0..blocks)
                .filter(|&b| (b as i64 - n_max as i64).abs() <= central)
                .map(|b| col.rows(b * dim, dim).norm_squared())
                .sum();
            (lambda, weight, j)
        })
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));

    if candidates.len() < dim {
        return Err(Error::BandSelectionAmbiguous(format!(
            "only {} eigenvalues in [-omega/2, omega/2), need {dim}",
            candidates.len()
        )));
    }
    if candidates.len() > dim && candidates[dim - 1].1 - candidates[dim].1 < SELECTION_GAP {
        return Err(Error::BandSelectionAmbiguous(format!(
            "central weights {:e} and {:e} of bands {dim} and {} are indistinguishable",
            candidates[dim - 1].1,
            candidates[dim].1,
            dim + 1
        )));
    }
    let mut selected: Vec<(f64, f64, usize)> = candidates.into_iter().take(dim).collect();
    selected.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut quasi_energies = Vec::with_capacity(dim);
    let mut modes = Vec::with_capacity(dim);
    let mut central_weights = Vec::with_capacity(dim);
    for (lambda, weight, j) in selected {
        let col = eig.eigenvectors.column(j).into_owned();
        let col = &col / Complex64::from(col.norm());
        quasi_energies.push(lambda.max(-half));
        central_weights.push(weight);
        modes.push((0..blocks).map(|b| col.rows(b * dim, dim).into_owned()).collect());
    }
    Ok(FloquetDecomposition {
        n_units: ops.n_units,
        base_frequency: omega,
        period: 2.0 * PI / omega,
        n_max,
        quasi_energies,
        modes,
        central_weights,
    })
}

/// `U(t) = sum_a e^{-i eps_a t} |Phi_a(t)><Phi_a(0)|`.
pub fn floquet_propagator(decomp: &FloquetDecomposition, t: f64) -> CMatrix {
    let dim = decomp.dim();
    let mut u = CMatrix::zeros(dim, dim);
    for (a, &eps) in decomp.quasi_energies.iter().enumerate() {
        let now = decomp.mode_at(a, t) * Complex64::from_polar(1.0, -eps * t);
        let start = decomp.mode_at(a, 0.0);
        u += now * start.adjoint();
    }
    u
}

/// Saturation at time `t` from the uncharged state, via the Floquet propagator.
///
/// Not clamped: values outside `[0, 1]` signal truncation error.
pub fn eta_floquet(decomp: &FloquetDecomposition, t: f64) -> f64 {
    let ops = build_operators(decomp.n_units).expect("n_units >= 1 in a decomposition");
    let psi0 = crate::spin::uncharged_state(decomp.n_units).expect("n_units >= 1");
    let state = StateVector { amplitudes: floquet_propagator(decomp, t) * &psi0.amplitudes, n_units: decomp.n_units };
    // deliberately not renormalized, matching the literal sum below
    ops.expect_jz(&state).expect("dimensions agree") / decomp.n_units as f64 + 0.5
}

/// The same saturation as a literal sum over two band and four harmonic indices,
/// `(1/N) sum e^{-i (eps_a - eps_b + (m - n) omega) t} conj(Phi_{a,N}^{n'}) Phi_{b,N}^{m'}
/// <Phi_b^m|J_z|Phi_a^n> + 1/2`. Cost grows like `(2 n_max + 1)^4`; meant for
/// cross-checking on small truncations.
pub fn eta_floquet_literal(decomp: &FloquetDecomposition, t: f64) -> f64 {
    let ops = build_operators(decomp.n_units).expect("n_units >= 1");
    let last = decomp.dim() - 1;
    let omega = decomp.base_frequency;
    let harmonics: Vec<i64> = decomp.harmonics().collect();
    let mut total = Complex64::from(0.0);
    for a in 0..decomp.dim() {
        for b in 0..decomp.dim() {
            for &n in &harmonics {
                for &m in &harmonics {
                    let jz_elem = decomp.block(b, m).unwrap().dotc(&(&ops.jz * decomp.block(a, n).unwrap()));
                    let phase = decomp.quasi_energies[a] - decomp.quasi_energies[b] + (m - n) as f64 * omega;
                    let rot = Complex64::from_polar(1.0, -phase * t);
                    for &n1 in &harmonics {
                        let left = decomp.block(a, n1).unwrap()[last].conj();
                        for &m1 in &harmonics {
                            let right = decomp.block(b, m1).unwrap()[last];
                            total += rot * left * right * jz_elem;
                        }
                    }
                }
            }
        }
    }
    total.re / decomp.n_units as f64 + 0.5
}

/// Expansion coefficients of an initial state over the Floquet modes at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    pub coefficients: CVector,
    /// Condition number of the mode matrix.
    pub condition: f64,
}

/// Solves `|psi(0)> = sum_a c_a sum_n |Phi_a^n>` for `c`.
pub fn initial_coefficients(decomp: &FloquetDecomposition, initial: &StateVector) -> Result<ModeCoefficients> {
    if initial.amplitudes.len() != decomp.dim() {
        return Err(Error::DimensionMismatch { expected: decomp.dim(), found: initial.amplitudes.len() });
    }
    let m = decomp.mode_matrix();
    let sv = m.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularModeMatrix { condition });
    }
    let coefficients = m
        .lu()
        .solve(&initial.amplitudes)
        .ok_or(Error::SingularModeMatrix { condition })?;
    Ok(ModeCoefficients { coefficients, condition })
}

/// Single-unit stroboscopic cosine law.
///
/// With `a_k = <Phi_k(0)|psi(0)>` and `C_kl = a_k conj(a_l) <Phi_l(0)|J_z|Phi_k(0)>`,
/// `eta(kT) = 2|C_12| cos(k d_eps T + arg C_12) + C_11 + C_22 + 1/2`, where
/// `d_eps = eps_2 - eps_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StroboscopicLaw {
    pub c11: f64,
    pub c22: f64,
    pub c12_abs: f64,
    pub c12_arg: f64,
    pub delta_eps: f64,
    pub period: f64,
}

impl StroboscopicLaw {
    pub fn eta(&self, k: u64) -> f64 {
        2.0 * self.c12_abs * (k as f64 * self.delta_eps * self.period + self.c12_arg).cos() + self.c11 + self.c22 + 0.5
    }
}

pub fn stroboscopic_law(decomp: &FloquetDecomposition) -> Result<StroboscopicLaw> {
    if decomp.n_units != 1 {
        return Err(Error::WrongN(decomp.n_units));
    }
    let ops = build_operators(1)?;
    let last = 1;
    let modes: Vec<CVector> = (0..2).map(|a| decomp.mode_at(a, 0.0)).collect();
    let overlap: Vec<Complex64> = modes.iter().map(|m| m[last].conj()).collect();
    let c = |k: usize, l: usize| overlap[k] * overlap[l].conj() * modes[l].dotc(&(&ops.jz * &modes[k]));
    let c12 = c(0, 1);
    Ok(StroboscopicLaw {
        c11: c(0, 0).re,
        c22: c(1, 1).re,
        c12_abs: c12.norm(),
        c12_arg: c12.arg(),
        delta_eps: decomp.quasi_energies[1] - decomp.quasi_energies[0],
        period: decomp.period,
    })
}

pub fn stroboscopic_eta(decomp: &FloquetDecomposition, k: u64) -> Result<(f64, StroboscopicLaw)> {
    let law = stroboscopic_law(decomp)?;
    Ok((law.eta(k), law))
}

/// Largest `|eta_floquet - eta|` over the samples of a directly integrated trace.
pub fn max_deviation(decomp: &FloquetDecomposition, times: &[f64], eta: &[f64]) -> f64 {
    times.iter().zip(eta).map(|(&t, &e)| (eta_floquet(decomp, t) - e).abs()).fold(0.0, f64::max)
}

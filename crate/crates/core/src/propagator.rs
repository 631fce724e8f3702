//! Direct time integration of the Schrödinger equation.
//!
//! Each step applies `exp(-i H(t + dt/2) dt)` computed from the Hermitian
//! eigendecomposition of the midpoint Hamiltonian. The stepper is second order
//! and exactly unitary, so norm drift only comes from rounding.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csvfmt::sig12;
use crate::drive::{hamiltonian_at, DriveConfig};
use crate::error::{Error, Result};
use crate::linalg::{expi_hermitian, CMatrix};
use crate::spin::{build_operators, saturation, uncharged_state, SpinOperators, StateVector};

const NORM_DRIFT: f64 = 1e-10;
/// Largest accepted step, as a fraction of the fastest period.
const MAX_STEP_FRACTION: f64 = 1.0 / 50.0;

/// Sampled charging curve, one sample per integration step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationTrace {
    pub times: Vec<f64>,
    pub eta: Vec<f64>,
    pub energy: Vec<f64>,
    pub config_hash: String,
    /// Number of steps after which the state had to be renormalized.
    pub renormalizations: usize,
}

impl SaturationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_eta(&self) -> f64 {
        self.eta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Saturation at the sample nearest to `t`.
    pub fn eta_near(&self, t: f64) -> f64 {
        self.eta[self.nearest_index(t)]
    }

    pub fn nearest_index(&self, t: f64) -> usize {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(k) => k,
            Err(0) => 0,
            Err(k) if k == self.times.len() => k - 1,
            Err(k) => {
                if t - self.times[k - 1] <= self.times[k] - t {
                    k - 1
                } else {
                    k
                }
            }
        }
    }

    /// `t,eta,energy` with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,eta,energy\n");
        for k in 0..self.len() {
            let _ = writeln!(out, "{},{},{}", sig12(self.times[k]), sig12(self.eta[k]), sig12(self.energy[k]));
        }
        out
    }

    pub fn from_csv(text: &str, config_hash: impl Into<String>) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("t,eta,energy") {
            return Err(Error::InvalidConfig("trace CSV must start with `t,eta,energy`".into()));
        }
        let mut trace = SaturationTrace {
            times: vec![],
            eta: vec![],
            energy: vec![],
            config_hash: config_hash.into(),
            renormalizations: 0,
        };
        for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidConfig(format!("trace CSV line {}: {e}", lineno + 2)))?;
            let [t, eta, energy] = fields[..] else {
                return Err(Error::InvalidConfig(format!("trace CSV line {}: expected 3 fields", lineno + 2)));
            };
            trace.times.push(t);
            trace.eta.push(eta);
            trace.energy.push(energy);
        }
        Ok(trace)
    }
}

/// Midpoint-exponential stepper for one drive configuration.
pub struct Stepper<'a> {
    config: &'a DriveConfig,
    ops: SpinOperators,
}

impl<'a> Stepper<'a> {
    pub fn new(config: &'a DriveConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, ops: build_operators(config.n_units)? })
    }

    pub fn ops(&self) -> &SpinOperators {
        &self.ops
    }

    /// Propagator over `[t, t + h]`.
    pub fn step_operator(&self, t: f64, h: f64) -> CMatrix {
        let hmid = hamiltonian_at(self.config, &self.ops, t + 0.5 * h).expect("dimensions checked at construction");
        expi_hermitian(&hmid, -h)
    }
}

/// Uniform grid covering `[0, t_final]` with spacing at most `dt`.
fn grid(config: &DriveConfig, t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::domain("t_final", format!("must be finite and non-negative, got {t_final}")));
    }
    let max_dt = 2.0 * std::f64::consts::PI / config.max_rate() * MAX_STEP_FRACTION;
    if !(dt > 0.0 && dt <= max_dt) {
        return Err(Error::domain("dt", format!("must lie in (0, {max_dt}], got {dt}")));
    }
    let steps = ((t_final / dt) - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    Ok((steps, h))
}

fn renormalize_if_drifted(state: &mut StateVector) -> bool {
    if (state.norm() - 1.0).abs() > NORM_DRIFT {
        state.normalize();
        true
    } else {
        false
    }
}

/// Charging curve starting from the uncharged state.
pub fn evolve(config: &DriveConfig, t_final: f64, dt: f64) -> Result<SaturationTrace> {
    if !(t_final > 0.0) {
        return Err(Error::domain("t_final", format!("must be positive, got {t_final}")));
    }
    let stepper = Stepper::new(config)?;
    let (steps, h) = grid(config, t_final, dt)?;
    let ops = stepper.ops();
    let initial = uncharged_state(config.n_units)?;
    let full = config.n_units as f64 * config.omega0;
    let mut state = initial.clone();
    let mut trace = SaturationTrace {
        times: Vec::with_capacity(steps + 1),
        eta: Vec::with_capacity(steps + 1),
        energy: Vec::with_capacity(steps + 1),
        config_hash: config.config_hash(),
        renormalizations: 0,
    };
    let record = |state: &StateVector, t: f64, trace: &mut SaturationTrace| -> Result<()> {
        let eta = saturation(state, ops)?;
        trace.times.push(t);
        trace.eta.push(eta);
        trace.energy.push(full * eta);
        Ok(())
    };
    record(&state, 0.0, &mut trace)?;
    for k in 0..steps {
        let t = k as f64 * h;
        state.amplitudes = stepper.step_operator(t, h) * &state.amplitudes;
        if renormalize_if_drifted(&mut state) {
            trace.renormalizations += 1;
        }
        record(&state, (k + 1) as f64 * h, &mut trace)?;
    }
    Ok(trace)
}

/// Like [`evolve`], but also integrates at `dt/2` and `dt/4` and fails if the
/// final saturation moves by more than `tol`. Returns the finest trace.
pub fn evolve_checked(config: &DriveConfig, t_final: f64, dt: f64, tol: f64) -> Result<SaturationTrace> {
    let coarse = evolve(config, t_final, dt)?;
    let fine = evolve(config, t_final, dt / 4.0)?;
    let change = (coarse.eta[coarse.len() - 1] - fine.eta[fine.len() - 1]).abs();
    if change > tol {
        return Err(Error::NonConvergence { change, tol });
    }
    let mid = evolve(config, t_final, dt / 2.0)?;
    let change = (mid.eta[mid.len() - 1] - fine.eta[fine.len() - 1]).abs();
    if change > tol {
        return Err(Error::NonConvergence { change, tol });
    }
    Ok(fine)
}

/// Final state only, from an arbitrary initial state.
pub fn evolve_state(config: &DriveConfig, initial: &StateVector, t_final: f64, dt: f64) -> Result<StateVector> {
    let stepper = Stepper::new(config)?;
    if initial.n_units != config.n_units || initial.amplitudes.len() != config.n_units + 1 {
        return Err(Error::DimensionMismatch { expected: config.n_units + 1, found: initial.amplitudes.len() });
    }
    let (steps, h) = grid(config, t_final, dt)?;
    let mut state = initial.clone();
    for k in 0..steps {
        state.amplitudes = stepper.step_operator(k as f64 * h, h) * &state.amplitudes;
        renormalize_if_drifted(&mut state);
    }
    Ok(state)
}

/// Time-ordered propagator `U(t_final, 0)` built with the same stepper.
pub fn evolve_operator(config: &DriveConfig, t_final: f64, dt: f64) -> Result<CMatrix> {
    let stepper = Stepper::new(config)?;
    let (steps, h) = grid(config, t_final, dt)?;
    let dim = config.n_units + 1;
    let mut u = CMatrix::identity(dim, dim);
    for k in 0..steps {
        u = stepper.step_operator(k as f64 * h, h) * u;
    }
    Ok(u)
}

/// Applies `U^k` to the uncharged state for `k = 0..=count` and returns the saturations.
pub fn stroboscopic_samples(one_period: &CMatrix, n_units: usize, count: usize) -> Result<Vec<f64>> {
    let ops = build_operators(n_units)?;
    let mut state = uncharged_state(n_units)?;
    let mut out = Vec::with_capacity(count + 1);
    out.push(saturation(&state, &ops)?);
    for _ in 0..count {
        state.amplitudes = one_period * &state.amplitudes;
        out.push(saturation(&state, &ops)?);
    }
    Ok(out)
}

/// Phase factor `e^{-i m omega0 t}` of Dicke state `m` under the bare Hamiltonian.
pub fn free_phase(m: f64, omega0: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -m * omega0 * t)
}

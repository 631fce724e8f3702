//! Closed-form and semi-analytic charging curves.
//!
//! * parallel drive: the state only acquires a phase, so `eta = 0`;
//! * circular two-axis drive: exact solution in the rotating frame;
//! * single-axis drive: counter-rotating hybridized rotating-wave approximation
//!   (CHRWA), with the mixing weight `xi` fixed by the regulating equation
//!   `A (1 - xi) = 2 omega0 J_1(A xi / omega)`.

pub mod bessel;

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use bessel::bessel_j;

/// Grid spacing used to bracket the first sign change of the regulating equation.
const XI_SCAN_STEP: f64 = 1e-4;

pub fn eta_parallel(_t: f64) -> f64 {
    0.0
}

/// Circular drive `(A/sqrt 2)[cos(wt) J_x + sin(wt) J_y]`:
/// `eta = A^2/(4 W^2) (1 - cos W t)` with `W = sqrt((omega0 - omega)^2 + A^2/2)`.
/// Independent of the number of units and of a common drive phase.
pub fn eta_circular(a: f64, omega: f64, omega0: f64, t: f64) -> f64 {
    let w = circular_rabi_frequency(a, omega, omega0);
    if w == 0.0 {
        return 0.0;
    }
    a * a / (4.0 * w * w) * (1.0 - (w * t).cos())
}

pub fn circular_rabi_frequency(a: f64, omega: f64, omega0: f64) -> f64 {
    ((omega0 - omega).powi(2) + 0.5 * a * a).sqrt()
}

/// Full-charge time of the resonant circular drive, `sqrt(2) pi / A`.
pub fn circular_full_charge_time(a: f64) -> f64 {
    SQRT_2 * PI / a
}

/// Effective parameters of the CHRWA frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrwaParams {
    pub a: f64,
    pub omega: f64,
    pub omega0: f64,
    pub xi: f64,
    /// `A (1 - xi)`
    pub a_tilde: f64,
    /// `omega0 J_0(z) - omega`
    pub delta_tilde: f64,
    /// `sqrt(delta_tilde^2 + a_tilde^2)`
    pub omega_r: f64,
    /// `A xi / omega`
    pub z: f64,
}

impl ChrwaParams {
    pub fn regulating_residual(&self) -> f64 {
        regulating(self.a, self.omega, self.omega0, self.xi).unwrap_or(f64::NAN)
    }
}

fn regulating(a: f64, omega: f64, omega0: f64, xi: f64) -> Result<f64> {
    Ok(a * (1.0 - xi) - 2.0 * omega0 * bessel_j(1, a * xi / omega)?)
}

/// Bisection on a bracket with `f(lo) > 0 >= f(hi)`.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest root of the regulating equation on `[0, 1]`.
pub fn chrwa_solve_xi(a: f64, omega: f64, omega0: f64) -> Result<ChrwaParams> {
    if !(a > 0.0) {
        return Err(Error::domain("strength A", format!("must be positive, got {a}")));
    }
    if !(omega > 0.0) {
        return Err(Error::domain("frequency omega", format!("must be positive, got {omega}")));
    }
    let f = |xi: f64| regulating(a, omega, omega0, xi);
    let steps = (1.0 / XI_SCAN_STEP).round() as usize;
    let mut prev = 0.0;
    let mut root = None;
    for k in 1..=steps {
        let xi = k as f64 / steps as f64;
        let value = f(xi)?;
        if value == 0.0 {
            root = Some(xi);
            break;
        }
        if value < 0.0 {
            root = Some(bisect(prev, xi, f)?);
            break;
        }
        prev = xi;
    }
    let xi = root.ok_or(Error::NoRoot { lo: 0.0, hi: 1.0 })?;
    let z = a * xi / omega;
    let a_tilde = a * (1.0 - xi);
    let delta_tilde = omega0 * bessel_j(0, z)? - omega;
    let omega_r = (delta_tilde * delta_tilde + a_tilde * a_tilde).sqrt();
    Ok(ChrwaParams { a, omega, omega0, xi, a_tilde, delta_tilde, omega_r, z })
}

/// CHRWA saturation for `omega0 J_z + A cos(omega t) J_x` (zero drive phase).
pub fn eta_chrwa(a: f64, omega: f64, omega0: f64, t: f64) -> Result<f64> {
    Ok(eta_chrwa_with(&chrwa_solve_xi(a, omega, omega0)?, t))
}

pub fn eta_chrwa_with(p: &ChrwaParams, t: f64) -> f64 {
    let phase = p.z * (p.omega * t).sin();
    let (sin_p, cos_p) = phase.sin_cos();
    let (sin_r, cos_r) = (p.omega_r * t).sin_cos();
    let (sin_w, cos_w) = (p.omega * t).sin_cos();
    0.5 * (1.0 - cos_p
        + sin_r / p.omega_r * p.a_tilde * cos_w * sin_p
        + (cos_r - 1.0) / (p.omega_r * p.omega_r)
            * (p.a_tilde * p.delta_tilde * sin_w * sin_p - p.a_tilde * p.a_tilde * cos_p))
}

/// Drive parameters for the fastest full charge of the single-axis system on branch `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalChrwa {
    pub k: u32,
    /// First positive root of `J_0(z) = 2k J_1(z)`.
    pub z_root: f64,
    /// `omega0 J_0(z) (z + 1/k)`
    pub a_opt: f64,
    /// `omega0 J_0(z)`
    pub omega_opt: f64,
    /// `k pi / (omega0 J_0(z))`
    pub t_min: f64,
}

/// Upper end of the root bracket: the first zero of `J_0`.
const J0_FIRST_ZERO: f64 = 2.404825557695773;

pub fn optimal_chrwa_params(omega0: f64, k: u32) -> Result<OptimalChrwa> {
    if k == 0 {
        return Err(Error::domain("branch k", "must be at least 1"));
    }
    let g = |z: f64| Ok(bessel_j(0, z)? - 2.0 * k as f64 * bessel_j(1, z)?);
    // g(0) = 1 > 0 and g < 0 at the first zero of J_0, where J_1 > 0
    let z = bisect(0.0, J0_FIRST_ZERO, g)?;
    let j0 = bessel_j(0, z)?;
    Ok(OptimalChrwa {
        k,
        z_root: z,
        a_opt: omega0 * j0 * (z + 1.0 / k as f64),
        omega_opt: omega0 * j0,
        t_min: k as f64 * PI / (omega0 * j0),
    })
}

//! The tri-axial harmonic charging field
//! `H(t) = omega0 J_z + sum_i A_i cos(omega_i t + phi_i) J_i`.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::spin::SpinOperators;

/// Relative tolerance when checking `omega_i = n_i * omega`.
const MULTIPLIER_TOL: f64 = 1e-8;
const MAX_DENOMINATOR: u64 = 64;

/// Full parameterization of the charging field. Index 0, 1, 2 of the array
/// accessors correspond to the x, y, z axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDriveConfig")]
pub struct DriveConfig {
    pub n_units: usize,
    pub omega0: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
    pub phx: f64,
    pub phy: f64,
    pub phz: f64,
}

impl DriveConfig {
    /// Undriven pack: `H = omega0 J_z`.
    pub fn undriven(n_units: usize, omega0: f64) -> Self {
        Self {
            n_units,
            omega0,
            ax: 0.0,
            ay: 0.0,
            az: 0.0,
            wx: 0.0,
            wy: 0.0,
            wz: 0.0,
            phx: 0.0,
            phy: 0.0,
            phz: 0.0,
        }
    }

    /// Circularly polarized two-axis drive,
    /// `omega0 J_z + (A/sqrt 2)[cos(wt) J_x + sin(wt) J_y]`.
    pub fn h_system(n_units: usize, omega0: f64, a: f64, omega: f64) -> Self {
        Self {
            ax: FRAC_1_SQRT_2 * a,
            ay: FRAC_1_SQRT_2 * a,
            wx: omega,
            wy: omega,
            phy: -FRAC_PI_2,
            ..Self::undriven(n_units, omega0)
        }
    }

    /// Single-axis drive `omega0 J_z + A cos(wt + phi) J_x`.
    pub fn single_axis(n_units: usize, omega0: f64, a: f64, omega: f64, phase: f64) -> Self {
        Self { ax: a, wx: omega, phx: phase, ..Self::undriven(n_units, omega0) }
    }

    /// Drive along the quantization axis only.
    pub fn parallel(n_units: usize, omega0: f64, a: f64, omega: f64, phase: f64) -> Self {
        Self { az: a, wz: omega, phz: phase, ..Self::undriven(n_units, omega0) }
    }

    pub fn from_spherical(n_units: usize, omega0: f64, a: f64, theta: f64, phi: f64) -> Self {
        let [ax, ay, az] = spherical_to_cartesian(a, theta, phi);
        Self { ax, ay, az, ..Self::undriven(n_units, omega0) }
    }

    pub fn strengths(&self) -> [f64; 3] {
        [self.ax, self.ay, self.az]
    }

    pub fn frequencies(&self) -> [f64; 3] {
        [self.wx, self.wy, self.wz]
    }

    pub fn phases(&self) -> [f64; 3] {
        [self.phx, self.phy, self.phz]
    }

    pub fn total_strength(&self) -> f64 {
        self.strengths().iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Spherical form `(A, Theta, Phi)` with `Phi` in `[0, 2 pi)`.
    pub fn spherical(&self) -> (f64, f64, f64) {
        let a = self.total_strength();
        if a == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let theta = (self.az / a).clamp(-1.0, 1.0).asin();
        let phi = self.ay.atan2(self.ax).rem_euclid(2.0 * PI);
        (a, theta, phi)
    }

    /// Same field with frequencies and phases of switched-off axes zeroed.
    pub fn canonical(&self) -> Self {
        let mut c = self.clone();
        if c.ax == 0.0 {
            c.wx = 0.0;
            c.phx = 0.0;
        }
        if c.ay == 0.0 {
            c.wy = 0.0;
            c.phy = 0.0;
        }
        if c.az == 0.0 {
            c.wz = 0.0;
            c.phz = 0.0;
        }
        c
    }

    /// Hex identifier of the canonical form.
    pub fn config_hash(&self) -> String {
        let c = self.canonical();
        let mut h = DefaultHasher::new();
        c.n_units.hash(&mut h);
        for x in [c.omega0, c.ax, c.ay, c.az, c.wx, c.wy, c.wz, c.phx, c.phy, c.phz] {
            // normalize -0.0
            (x + 0.0).to_bits().hash(&mut h);
        }
        format!("{:016x}", h.finish())
    }

    /// Largest rate in the problem: `omega0`, active drive frequencies and `A`.
    pub fn max_rate(&self) -> f64 {
        let mut m = self.omega0.abs().max(self.total_strength());
        for (a, w) in self.strengths().iter().zip(self.frequencies()) {
            if *a != 0.0 {
                m = m.max(w);
            }
        }
        m
    }

    /// Default step: one two-hundredth of the fastest period.
    pub fn default_dt(&self) -> f64 {
        2.0 * PI / self.max_rate() / 200.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_units == 0 {
            return Err(Error::ZeroUnits);
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::InvalidConfig(format!("omega0 must be positive and finite, got {}", self.omega0)));
        }
        let all = [self.ax, self.ay, self.az, self.wx, self.wy, self.wz, self.phx, self.phy, self.phz];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("drive parameters must be finite".into()));
        }
        if self.frequencies().iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidConfig("drive frequencies must be non-negative".into()));
        }
        Ok(())
    }
}

/// Accepts either the Cartesian or the spherical strength form.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDriveConfig {
    n_units: usize,
    #[serde(default = "one")]
    omega0: f64,
    ax: Option<f64>,
    ay: Option<f64>,
    az: Option<f64>,
    a: Option<f64>,
    theta: Option<f64>,
    phi: Option<f64>,
    #[serde(default)]
    wx: f64,
    #[serde(default)]
    wy: f64,
    #[serde(default)]
    wz: f64,
    #[serde(default)]
    phx: f64,
    #[serde(default)]
    phy: f64,
    #[serde(default)]
    phz: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawDriveConfig> for DriveConfig {
    type Error = Error;

    fn try_from(raw: RawDriveConfig) -> Result<Self> {
        let cartesian = raw.ax.is_some() || raw.ay.is_some() || raw.az.is_some();
        let spherical = raw.a.is_some() || raw.theta.is_some() || raw.phi.is_some();
        let [ax, ay, az] = match (cartesian, spherical) {
            (true, true) => {
                return Err(Error::InvalidConfig("give either {ax, ay, az} or {a, theta, phi}, not both".into()))
            }
            (_, false) => [raw.ax.unwrap_or(0.0), raw.ay.unwrap_or(0.0), raw.az.unwrap_or(0.0)],
            (false, true) => {
                let a = raw.a.ok_or_else(|| Error::InvalidConfig("spherical form needs `a`".into()))?;
                let theta = raw.theta.unwrap_or(0.0);
                let phi = raw.phi.unwrap_or(0.0);
                if a < 0.0 {
                    return Err(Error::InvalidConfig(format!("total strength must be non-negative, got {a}")));
                }
                if !(-FRAC_PI_2..FRAC_PI_2).contains(&theta) {
                    return Err(Error::InvalidConfig(format!("theta must lie in [-pi/2, pi/2), got {theta}")));
                }
                spherical_to_cartesian(a, theta, phi)
            }
        };
        let config = DriveConfig {
            n_units: raw.n_units,
            omega0: raw.omega0,
            ax,
            ay,
            az,
            wx: raw.wx,
            wy: raw.wy,
            wz: raw.wz,
            phx: raw.phx,
            phy: raw.phy,
            phz: raw.phz,
        };
        config.validate()?;
        Ok(config)
    }
}

pub fn spherical_to_cartesian(a: f64, theta: f64, phi: f64) -> [f64; 3] {
    debug_assert!(a >= 0.0);
    [a * theta.cos() * phi.cos(), a * theta.cos() * phi.sin(), a * theta.sin()]
}

fn check_dim(config: &DriveConfig, ops: &SpinOperators) -> Result<()> {
    if config.n_units != ops.n_units {
        return Err(Error::DimensionMismatch { expected: ops.dim(), found: config.n_units + 1 });
    }
    Ok(())
}

pub fn hamiltonian_at(config: &DriveConfig, ops: &SpinOperators, t: f64) -> Result<CMatrix> {
    check_dim(config, ops)?;
    let mut h = &ops.jz * Complex64::from(config.omega0);
    for i in 0..3 {
        let a = config.strengths()[i];
        if a != 0.0 {
            let c = a * (config.frequencies()[i] * t + config.phases()[i]).cos();
            h += ops.axis(i) * Complex64::from(c);
        }
    }
    Ok(h)
}

/// Common base frequency with `omega_i = multipliers[i] * omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseFrequency {
    pub omega: f64,
    /// Zero for axes that carry no oscillating drive.
    pub multipliers: [u32; 3],
}

impl BaseFrequency {
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest-denominator fraction `p/q` (q <= 64) within `tol` of `r`.
fn rational_approx(r: f64, tol: f64) -> Option<(u64, u64)> {
    (1..=MAX_DENOMINATOR).find_map(|q| {
        let p = (r * q as f64).round();
        (p >= 1.0 && (r - p / q as f64).abs() <= tol).then_some((p as u64, q))
    })
}

/// Largest `omega` with every oscillating drive frequency an integer multiple of it.
///
/// Axes with zero strength are ignored unless no axis is driven at all, in which
/// case their declared frequencies are used so a static field can still be put
/// on a Floquet grid.
pub fn common_base_frequency(config: &DriveConfig, tol: f64) -> Result<BaseFrequency> {
    let strengths = config.strengths();
    let freqs = config.frequencies();
    let mut axes: Vec<usize> = (0..3).filter(|&i| strengths[i] != 0.0 && freqs[i] > 0.0).collect();
    if axes.is_empty() {
        axes = (0..3).filter(|&i| freqs[i] > 0.0).collect();
    }
    let Some(&reference) = axes.first() else {
        return Err(Error::InvalidConfig("no axis with a positive drive frequency".into()));
    };
    let w_ref = freqs[reference];
    let mut fracs = Vec::with_capacity(axes.len());
    for &i in &axes {
        match rational_approx(freqs[i] / w_ref, tol) {
            Some(f) => fracs.push((i, f)),
            None => return Err(Error::IncommensurateFrequencies(axes.iter().map(|&j| freqs[j]).collect())),
        }
    }
    let lcm = fracs.iter().fold(1u64, |l, &(_, (_, q))| l / gcd(l, q) * q);
    let raw: Vec<(usize, u64)> = fracs.iter().map(|&(i, (p, q))| (i, p * (lcm / q))).collect();
    let g = raw.iter().fold(0u64, |g, &(_, n)| gcd(g, n));
    let mut multipliers = [0u32; 3];
    for &(i, n) in &raw {
        multipliers[i] = (n / g) as u32;
    }
    let omega = w_ref / multipliers[reference] as f64;
    Ok(BaseFrequency { omega, multipliers })
}

/// Fourier coefficients `H_n` of a periodic Hamiltonian, `H(t) = sum_n H_n e^{i n omega t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierComponents {
    pub base_frequency: f64,
    pub harmonics: BTreeMap<i64, CMatrix>,
    pub max_harmonic: usize,
}

impl FourierComponents {
    pub fn get(&self, n: i64) -> Option<&CMatrix> {
        self.harmonics.get(&n)
    }

    pub fn dim(&self) -> usize {
        self.harmonics[&0].nrows()
    }

    /// Resummed `H(t)`.
    pub fn evaluate(&self, t: f64) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim(), self.dim());
        for (&n, hn) in &self.harmonics {
            h += hn * Complex64::from_polar(1.0, n as f64 * self.base_frequency * t);
        }
        h
    }
}

pub fn fourier_components(
    config: &DriveConfig,
    ops: &SpinOperators,
    base: f64,
    multipliers: [u32; 3],
) -> Result<FourierComponents> {
    check_dim(config, ops)?;
    if !(base > 0.0) {
        return Err(Error::InconsistentMultipliers { base, multipliers });
    }
    let strengths = config.strengths();
    let freqs = config.frequencies();
    let phases = config.phases();
    let dim = ops.dim();
    let mut harmonics = BTreeMap::new();
    harmonics.insert(0i64, &ops.jz * Complex64::from(config.omega0));
    for i in 0..3 {
        let a = strengths[i];
        if a == 0.0 {
            continue;
        }
        let n = multipliers[i] as i64;
        let expected = n as f64 * base;
        if (freqs[i] - expected).abs() > MULTIPLIER_TOL * freqs[i].max(1.0) {
            return Err(Error::InconsistentMultipliers { base, multipliers });
        }
        let up = Complex64::from_polar(0.5 * a, phases[i]);
        let entry_up = harmonics.entry(n).or_insert_with(|| CMatrix::zeros(dim, dim));
        *entry_up += ops.axis(i) * up;
        let entry_down = harmonics.entry(-n).or_insert_with(|| CMatrix::zeros(dim, dim));
        *entry_down += ops.axis(i) * up.conj();
    }
    let max_harmonic = harmonics.keys().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0);
    Ok(FourierComponents { base_frequency: base, harmonics, max_harmonic })
}

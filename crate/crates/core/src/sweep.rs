//! Parameter scans around the circular (H-system) drive and a grid optimizer
//! for the time needed to reach a saturation threshold.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csvfmt::sig12;
use crate::drive::DriveConfig;
use crate::error::{Error, Result};
use crate::propagator::{evolve, SaturationTrace};

/// Samples within this distance below a threshold count as reaching it, so that
/// full charge (`threshold = 1`) is detectable on a sampled trace.
pub const REACH_TOL: f64 = 1e-6;
/// Two threshold times closer than this are a tie.
const TIE_TOL: f64 = 1e-12;

/// How a scalar scan parameter enters the drive. Declaration order is the
/// tie-break order of [`grid_optimize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFamily {
    /// `A [cos p cos(wt) J_x + sin p sin(wt) J_y]`
    PhiDistribution,
    /// Circular drive with `(A/sqrt 2) cos p` per axis plus `A sin p cos(wt) J_z`.
    ThetaParallel,
    /// Parallel component with `Theta = arccos 0.8`, `omega_z = omega`, phase `p`.
    PhizScan,
    /// Parallel component with `Theta = arccos 0.8`, zero phase, frequency `p`.
    OmegazScan,
    PerturbWx,
    PerturbWy,
    /// `omega_x = omega + p`, `omega_y = omega - p`.
    PerturbWxyOpposite,
    PerturbPhx,
    PerturbPhy,
    /// `phi_x + p`, `phi_y - p`.
    PerturbPhxyOpposite,
}

impl SweepFamily {
    pub const ALL: [SweepFamily; 10] = [
        SweepFamily::PhiDistribution,
        SweepFamily::ThetaParallel,
        SweepFamily::PhizScan,
        SweepFamily::OmegazScan,
        SweepFamily::PerturbWx,
        SweepFamily::PerturbWy,
        SweepFamily::PerturbWxyOpposite,
        SweepFamily::PerturbPhx,
        SweepFamily::PerturbPhy,
        SweepFamily::PerturbPhxyOpposite,
    ];

    /// Parameter value at which the family reduces to the base circular drive.
    pub fn neutral(self) -> Option<f64> {
        match self {
            SweepFamily::PhiDistribution => Some(FRAC_PI_4),
            SweepFamily::ThetaParallel => Some(0.0),
            SweepFamily::PhizScan | SweepFamily::OmegazScan => None,
            _ => Some(0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepFamily::PhiDistribution => "phi_distribution",
            SweepFamily::ThetaParallel => "theta_parallel",
            SweepFamily::PhizScan => "phiz_scan",
            SweepFamily::OmegazScan => "omegaz_scan",
            SweepFamily::PerturbWx => "perturb_wx",
            SweepFamily::PerturbWy => "perturb_wy",
            SweepFamily::PerturbWxyOpposite => "perturb_wxy_opposite",
            SweepFamily::PerturbPhx => "perturb_phx",
            SweepFamily::PerturbPhy => "perturb_phy",
            SweepFamily::PerturbPhxyOpposite => "perturb_phxy_opposite",
        }
    }
}

/// Strength split used by the `phiz_scan` and `omegaz_scan` families.
pub fn parallel_scan_theta() -> f64 {
    0.8f64.acos()
}

/// Base drive frequency: the first driven transverse axis.
fn base_omega(base: &DriveConfig) -> f64 {
    if base.ax != 0.0 {
        base.wx
    } else if base.ay != 0.0 {
        base.wy
    } else {
        base.wz
    }
}

/// The circular drive the families are built around, keeping the base's own
/// per-axis strengths when it already is one.
fn circular_base(base: &DriveConfig) -> DriveConfig {
    let omega = base_omega(base);
    let (ax, ay) = if base.ax == base.ay && base.az == 0.0 {
        (base.ax, base.ay)
    } else {
        let s = FRAC_1_SQRT_2 * base.total_strength();
        (s, s)
    };
    DriveConfig { ax, ay, wx: omega, wy: omega, phy: -FRAC_PI_2, ..DriveConfig::undriven(base.n_units, base.omega0) }
}

fn check_domain(family: SweepFamily, p: f64, omega: f64) -> Result<()> {
    let ok = p.is_finite()
        && match family {
            SweepFamily::PhiDistribution => (-FRAC_PI_4..=3.0 * FRAC_PI_4).contains(&p),
            SweepFamily::ThetaParallel => (-FRAC_PI_2..FRAC_PI_2).contains(&p),
            SweepFamily::OmegazScan => p >= 0.0,
            SweepFamily::PerturbWx | SweepFamily::PerturbWy => omega + p >= 0.0,
            SweepFamily::PerturbWxyOpposite => p.abs() <= omega,
            SweepFamily::PhizScan
            | SweepFamily::PerturbPhx
            | SweepFamily::PerturbPhy
            | SweepFamily::PerturbPhxyOpposite => (-2.0 * PI..=2.0 * PI).contains(&p),
        };
    if ok {
        Ok(())
    } else {
        Err(Error::domain("scan parameter", format!("{p} not allowed for {}", family.name())))
    }
}

/// Member of `family` at parameter `p`. Perturbation families shift fields of
/// `base` in place, so `p = 0` returns `base` unchanged.
pub fn make_config(family: SweepFamily, base: &DriveConfig, p: f64) -> Result<DriveConfig> {
    let omega = base_omega(base);
    check_domain(family, p, omega)?;
    let a = base.total_strength();
    let circular = circular_base(base);
    let with_parallel = |theta: f64, wz: f64, phz: f64| {
        let s = FRAC_1_SQRT_2 * a * theta.cos();
        DriveConfig { ax: s, ay: s, az: a * theta.sin(), wz, phz, ..circular.clone() }
    };
    let config = match family {
        SweepFamily::PhiDistribution if p == FRAC_PI_4 => circular,
        SweepFamily::PhiDistribution => DriveConfig { ax: a * p.cos(), ay: a * p.sin(), ..circular },
        SweepFamily::ThetaParallel if p == 0.0 => circular,
        SweepFamily::ThetaParallel => with_parallel(p, omega, 0.0),
        SweepFamily::PhizScan => with_parallel(parallel_scan_theta(), omega, p),
        SweepFamily::OmegazScan => with_parallel(parallel_scan_theta(), p, 0.0),
        SweepFamily::PerturbWx => DriveConfig { wx: base.wx + p, ..base.clone() },
        SweepFamily::PerturbWy => DriveConfig { wy: base.wy + p, ..base.clone() },
        SweepFamily::PerturbWxyOpposite => DriveConfig { wx: base.wx + p, wy: base.wy - p, ..base.clone() },
        SweepFamily::PerturbPhx => DriveConfig { phx: base.phx + p, ..base.clone() },
        SweepFamily::PerturbPhy => DriveConfig { phy: base.phy + p, ..base.clone() },
        SweepFamily::PerturbPhxyOpposite => DriveConfig { phx: base.phx + p, phy: base.phy - p, ..base.clone() },
    };
    Ok(config.canonical())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: SweepFamily,
    pub base: DriveConfig,
    pub param_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.param_grid.is_empty() || self.t_grid.is_empty() {
            return Err(Error::InvalidConfig("param_grid and t_grid must be nonempty".into()));
        }
        if !strictly_increasing(&self.param_grid) || !strictly_increasing(&self.t_grid) {
            return Err(Error::InvalidConfig("param_grid and t_grid must be strictly increasing".into()));
        }
        if self.t_grid[0] < 0.0 || *self.t_grid.last().unwrap() <= 0.0 {
            return Err(Error::InvalidConfig("t_grid must be non-negative and end after t = 0".into()));
        }
        Ok(())
    }

    pub fn t_max(&self) -> f64 {
        *self.t_grid.last().expect("validated nonempty")
    }
}

/// `values[param][time]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationMap {
    pub spec: SweepSpec,
    pub values: Vec<Vec<f64>>,
}

impl SaturationMap {
    /// Long form `param,t,eta` in grid order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,t,eta\n");
        for (p, row) in self.spec.param_grid.iter().zip(&self.values) {
            for (t, eta) in self.spec.t_grid.iter().zip(row) {
                let _ = writeln!(out, "{},{},{}", sig12(*p), sig12(*t), sig12(*eta));
            }
        }
        out
    }

    pub fn from_csv(text: &str, spec: SweepSpec) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("param,t,eta") {
            return Err(Error::InvalidConfig("sweep CSV must start with `param,t,eta`".into()));
        }
        let nt = spec.t_grid.len();
        let mut values = vec![Vec::with_capacity(nt); spec.param_grid.len()];
        for (k, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let eta: f64 = line
                .rsplit(',')
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| Error::InvalidConfig(format!("sweep CSV row {}", k + 2)))?;
            let row = values
                .get_mut(k / nt)
                .ok_or_else(|| Error::InvalidConfig("sweep CSV has more rows than the grid".into()))?;
            row.push(eta);
        }
        Ok(Self { spec, values })
    }

    /// Sidecar JSON echoing the spec.
    pub fn spec_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("spec serializes")
    }
}

/// One evaluated row: the configuration and its full trace.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param: f64,
    pub config: DriveConfig,
    pub trace: SaturationTrace,
}

/// Integrates every row of the sweep; rows are independent and returned in grid order.
pub fn run_sweep_rows(spec: &SweepSpec, dt: f64) -> Result<Vec<Result<SweepRow>>> {
    spec.validate()?;
    let t_max = spec.t_max();
    Ok(spec
        .param_grid
        .par_iter()
        .enumerate()
        .map(|(row, &p)| {
            let wrap = |e: Error| Error::SweepRow { row, source: Box::new(e) };
            let config = make_config(spec.family, &spec.base, p).map_err(wrap)?;
            let trace = evolve(&config, t_max, dt).map_err(wrap)?;
            Ok(SweepRow { param: p, config, trace })
        })
        .collect())
}

/// Saturation on the spec's time grid (nearest integration step).
pub fn sample_row(trace: &SaturationTrace, t_grid: &[f64]) -> Vec<f64> {
    t_grid.iter().map(|&t| trace.eta_near(t)).collect()
}

pub fn run_sweep(spec: &SweepSpec, dt: f64) -> Result<SaturationMap> {
    let rows = run_sweep_rows(spec, dt)?;
    let values = rows
        .into_iter()
        .map(|r| r.map(|row| sample_row(&row.trace, &spec.t_grid)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SaturationMap { spec: spec.clone(), values })
}

/// First time the trace reaches `threshold`, interpolated linearly between samples.
pub fn time_to_threshold(trace: &SaturationTrace, threshold: f64) -> Result<Option<f64>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::domain("threshold", format!("must lie in (0, 1], got {threshold}")));
    }
    let level = threshold - REACH_TOL;
    let Some(k) = trace.eta.iter().position(|&e| e >= level) else {
        return Ok(None);
    };
    if k == 0 {
        return Ok(Some(trace.times[0]));
    }
    let (e0, e1) = (trace.eta[k - 1], trace.eta[k]);
    let target = threshold.min(e1);
    let frac = ((target - e0) / (e1 - e0)).clamp(0.0, 1.0);
    Ok(Some(trace.times[k - 1] + frac * (trace.times[k] - trace.times[k - 1])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub family: SweepFamily,
    pub p: f64,
    /// Time to threshold; `None` if never reached or the row failed.
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub best: Option<Candidate>,
    pub evaluated: Vec<Candidate>,
    /// `(family, p, message)` for rows that could not be integrated.
    pub failures: Vec<(SweepFamily, f64, String)>,
}

/// `a` beats `b`: earlier, then smaller `|p|`, then earlier family.
fn better(a: &Candidate, ta: f64, b: &Candidate, tb: f64) -> bool {
    if (ta - tb).abs() > TIE_TOL {
        return ta < tb;
    }
    if a.p.abs() != b.p.abs() {
        return a.p.abs() < b.p.abs();
    }
    a.family < b.family
}

/// Earliest candidate under the optimizer's tie-break rules.
pub fn select_best(evaluated: &[Candidate]) -> Option<Candidate> {
    let mut best: Option<(Candidate, f64)> = None;
    for c in evaluated {
        if let Some(t) = c.time {
            if best.as_ref().is_none_or(|(b, tb)| better(c, t, b, *tb)) {
                best = Some((*c, t));
            }
        }
    }
    best.map(|(c, _)| c)
}

/// Exhaustive search over `(family, p)` for the earliest time to `threshold`
/// within `[0, t_max]`.
pub fn grid_optimize(
    threshold: f64,
    base: &DriveConfig,
    grids: &[(SweepFamily, Vec<f64>)],
    t_max: f64,
    dt: f64,
) -> Result<OptimizeOutcome> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::domain("threshold", format!("must lie in (0, 1], got {threshold}")));
    }
    if grids.is_empty() || grids.iter().any(|(_, g)| g.is_empty()) {
        return Err(Error::InvalidConfig("optimizer needs at least one nonempty grid".into()));
    }
    let jobs: Vec<(SweepFamily, f64)> =
        grids.iter().flat_map(|(f, g)| g.iter().map(move |&p| (*f, p))).collect();
    let results: Vec<std::result::Result<Candidate, (SweepFamily, f64, String)>> = jobs
        .par_iter()
        .map(|&(family, p)| {
            let run = || -> Result<Option<f64>> {
                let config = make_config(family, base, p)?;
                let trace = evolve(&config, t_max, dt)?;
                time_to_threshold(&trace, threshold)
            };
            run().map(|time| Candidate { family, p, time }).map_err(|e| (family, p, e.to_string()))
        })
        .collect();
    let mut evaluated = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(c) => evaluated.push(c),
            Err(f) => failures.push(f),
        }
    }
    Ok(OptimizeOutcome { best: select_best(&evaluated), evaluated, failures })
}

/// `n` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

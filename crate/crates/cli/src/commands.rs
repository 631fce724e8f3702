use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use qbcharge::analytic::{chrwa_solve_xi, eta_chrwa_with, eta_circular, eta_parallel, optimal_chrwa_params};
use qbcharge::csvfmt::sig12;
use qbcharge::drive::{common_base_frequency, fourier_components};
use qbcharge::floquet::{decompose, eta_floquet, FloquetDecomposition};
use qbcharge::propagator::{evolve, evolve_checked};
use qbcharge::spin::build_operators;
use qbcharge::sweep::{make_config, run_sweep_rows, select_best, time_to_threshold, Candidate, SaturationMap, SweepFamily, SweepRow, SweepSpec};
use qbcharge::DriveConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::manifest::{core, Failure, Outputs, RowFailure, RunManifest};
use crate::Mode;

type Outcome = Result<Vec<String>, Failure>;

/// Tolerance for recognising commensurate drive frequencies.
const COMMENSURATE_TOL: f64 = 1e-9;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input("reading config", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input("parsing config", format!("{}: {e}", path.display())))
}

fn read_config(path: &Path) -> Result<DriveConfig, Failure> {
    let config: DriveConfig = read_json(path)?;
    config.validate().map_err(core("validating config"))?;
    Ok(config)
}

fn positive(stage: &'static str, name: &str, x: f64) -> Result<f64, Failure> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Failure::input(stage, format!("{name} must be positive and finite, got {x}")))
    }
}

pub fn simulate(config_path: &Path, t_max: f64, dt: Option<f64>, tol: Option<f64>, out: &Path) -> Outcome {
    let started = Instant::now();
    let config = read_config(config_path)?;
    positive("reading arguments", "--t-max", t_max)?;
    let dt = positive("reading arguments", "--dt", dt.unwrap_or_else(|| config.default_dt()))?;
    let trace = match tol {
        Some(tol) => evolve_checked(&config, t_max, dt, positive("reading arguments", "--tol", tol)?),
        None => evolve(&config, t_max, dt),
    }
    .map_err(core("integration"))?;

    let mut outputs = Outputs::create(out)?;
    outputs.write("trace.csv", &trace.to_csv())?;
    let mut manifest = RunManifest::new("simulate", Some(config_path)).with_config(&config);
    manifest.settings.dt = Some(dt);
    manifest.settings.t_max = Some(t_max);
    manifest.settings.tolerance = tol;
    outputs.finish(manifest, started)
}

#[derive(Debug, Serialize)]
pub struct AnalyticArgs {
    pub mode: Mode,
    pub a: Option<f64>,
    pub w: Option<f64>,
    pub omega0: f64,
    pub k: u32,
    pub t_max: f64,
    pub dt: f64,
}

#[derive(Serialize)]
struct OptimalReport {
    k: u32,
    z: f64,
    #[serde(rename = "A")]
    a: f64,
    omega: f64,
    t_min: f64,
}

pub fn analytic(args: AnalyticArgs, out: &Path) -> Outcome {
    let started = Instant::now();
    let stage = "reading arguments";
    positive(stage, "--omega0", args.omega0)?;
    let need = |name: &str, v: Option<f64>| v.ok_or_else(|| Failure::input(stage, format!("--mode {:?} needs {name}", args.mode)));

    let mut outputs;
    match args.mode {
        Mode::Optimal => {
            let o = optimal_chrwa_params(args.omega0, args.k).map_err(core("solving for the optimum"))?;
            let report = OptimalReport { k: o.k, z: o.z_root, a: o.a_opt, omega: o.omega_opt, t_min: o.t_min };
            outputs = Outputs::create(out)?;
            outputs.write("optimal.json", &(serde_json::to_string_pretty(&report).expect("serializes") + "\n"))?;
        }
        mode => {
            positive(stage, "--t-max", args.t_max)?;
            positive(stage, "--dt", args.dt)?;
            let curve: Box<dyn Fn(f64) -> f64> = match mode {
                Mode::Parallel => Box::new(eta_parallel),
                Mode::Circular => {
                    let (a, w, omega0) = (need("--A", args.a)?, need("--w", args.w)?, args.omega0);
                    Box::new(move |t| eta_circular(a, w, omega0, t))
                }
                _ => {
                    let p = chrwa_solve_xi(need("--A", args.a)?, need("--w", args.w)?, args.omega0)
                        .map_err(core("solving the regulating equation"))?;
                    Box::new(move |t| eta_chrwa_with(&p, t))
                }
            };
            let n = (args.t_max / args.dt - 1e-9).ceil() as usize;
            let mut csv = String::from("t,eta\n");
            for i in 0..=n {
                let t = if i == n { args.t_max } else { i as f64 * args.dt };
                let _ = writeln!(csv, "{},{}", sig12(t), sig12(curve(t)));
            }
            outputs = Outputs::create(out)?;
            outputs.write("analytic.csv", &csv)?;
        }
    }
    let mut manifest = RunManifest::new("analytic", None);
    manifest.arguments = Some(serde_json::to_value(&args).expect("serializes"));
    outputs.finish(manifest, started)
}

fn decomposition(config: &DriveConfig, n_max: usize) -> Result<FloquetDecomposition, Failure> {
    let ops = build_operators(config.n_units).map_err(core("building spin operators"))?;
    let base = common_base_frequency(config, COMMENSURATE_TOL).map_err(core("finding the common period"))?;
    let comps = fourier_components(config, &ops, base.omega, base.multipliers).map_err(core("Fourier decomposition"))?;
    decompose(&comps, n_max, &ops).map_err(core("Floquet diagonalization"))
}

#[derive(Serialize)]
struct FloquetReport {
    n_max: usize,
    base_frequency: f64,
    period: f64,
    quasi_energies: Vec<f64>,
    max_deviation: f64,
    /// Deviation with half the truncation order, when that order is allowed.
    max_deviation_half_n_max: Option<f64>,
    eta_floquet_min: f64,
    eta_floquet_max: f64,
    eta_floquet_out_of_range: bool,
}

pub fn floquet(config_path: &Path, n_max: usize, t_max: Option<f64>, dt: Option<f64>, out: &Path) -> Outcome {
    let started = Instant::now();
    let config = read_config(config_path)?;
    let decomp = decomposition(&config, n_max)?;
    let t_max = positive("reading arguments", "--t-max", t_max.unwrap_or(5.0 * decomp.period))?;
    let dt = positive("reading arguments", "--dt", dt.unwrap_or_else(|| config.default_dt() / 10.0))?;
    let direct = evolve(&config, t_max, dt).map_err(core("direct integration"))?;

    let eta_f: Vec<f64> = direct.times.iter().map(|&t| eta_floquet(&decomp, t)).collect();
    let deviation = |eta: &[f64]| eta.iter().zip(&direct.eta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let max_deviation = deviation(&eta_f);
    let half = match decomposition(&config, n_max / 2) {
        Ok(d) => Some(deviation(&direct.times.iter().map(|&t| eta_floquet(&d, t)).collect::<Vec<_>>())),
        Err(_) => None,
    };

    let energy_scale = config.omega0 * config.n_units as f64;
    let mut floquet_csv = String::from("t,eta,energy\n");
    for (t, e) in direct.times.iter().zip(&eta_f) {
        let _ = writeln!(floquet_csv, "{},{},{}", sig12(*t), sig12(*e), sig12(energy_scale * e));
    }
    let lo = eta_f.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eta_f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let report = FloquetReport {
        n_max,
        base_frequency: decomp.base_frequency,
        period: decomp.period,
        quasi_energies: decomp.quasi_energies.clone(),
        max_deviation,
        max_deviation_half_n_max: half,
        eta_floquet_min: lo,
        eta_floquet_max: hi,
        eta_floquet_out_of_range: lo < -1e-9 || hi > 1.0 + 1e-9,
    };

    let mut outputs = Outputs::create(out)?;
    outputs.write("quasienergies.csv", &decomp.quasienergy_csv())?;
    outputs.write("floquet_trace.csv", &floquet_csv)?;
    outputs.write("direct_trace.csv", &direct.to_csv())?;
    outputs.write("floquet_report.json", &(serde_json::to_string_pretty(&report).expect("serializes") + "\n"))?;
    let mut manifest = RunManifest::new("floquet", Some(config_path)).with_config(&config);
    manifest.settings.dt = Some(dt);
    manifest.settings.t_max = Some(t_max);
    manifest.settings.n_max = Some(n_max);
    outputs.finish(manifest, started)
}

/// Smallest default step over the rows that can be built.
fn sweep_dt(spec: &SweepSpec) -> f64 {
    spec.param_grid
        .iter()
        .filter_map(|&p| make_config(spec.family, &spec.base, p).ok())
        .map(|c| c.default_dt())
        .fold(spec.base.default_dt(), f64::min)
}

struct FamilyRun {
    map: Option<SaturationMap>,
    rows: Vec<SweepRow>,
    failures: Vec<RowFailure>,
}

fn run_family(spec: &SweepSpec, dt: f64) -> Result<FamilyRun, Failure> {
    let results = run_sweep_rows(spec, dt).map_err(core("validating sweep spec"))?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (row, r) in results.into_iter().enumerate() {
        match r {
            Ok(ok) => rows.push(ok),
            Err(e) => failures.push(RowFailure {
                family: spec.family.name().into(),
                row,
                param: spec.param_grid[row],
                error: e.to_string(),
            }),
        }
    }
    let map = (!rows.is_empty()).then(|| SaturationMap {
        spec: SweepSpec { param_grid: rows.iter().map(|r| r.param).collect(), ..spec.clone() },
        values: rows.iter().map(|r| qbcharge::sweep::sample_row(&r.trace, &spec.t_grid)).collect(),
    });
    Ok(FamilyRun { map, rows, failures })
}

pub fn sweep(config_path: &Path, dt: Option<f64>, out: &Path) -> Outcome {
    let started = Instant::now();
    let spec: SweepSpec = read_json(config_path)?;
    spec.validate().map_err(core("validating sweep spec"))?;
    let dt = positive("reading arguments", "--dt", dt.unwrap_or_else(|| sweep_dt(&spec)))?;
    let run = run_family(&spec, dt)?;
    let Some(map) = run.map else {
        let first = run.failures.first().map(|f| f.error.clone()).unwrap_or_default();
        return Err(Failure::numerical("sweep", format!("every row failed; first: {first}")));
    };

    let mut outputs = Outputs::create(out)?;
    outputs.write("sweep.csv", &map.to_csv())?;
    outputs.write("sweep_spec.json", &(serde_json::to_string_pretty(&spec).expect("serializes") + "\n"))?;
    let mut manifest = RunManifest::new("sweep", Some(config_path));
    manifest.spec = Some(serde_json::to_value(&spec).expect("serializes"));
    manifest.settings.dt = Some(dt);
    manifest.settings.t_max = Some(spec.t_max());
    manifest.row_failures = run.failures;
    outputs.finish(manifest, started)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyGrid {
    family: SweepFamily,
    param_grid: Vec<f64>,
}

/// Several families sharing one base drive and time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiSpec {
    base: DriveConfig,
    t_grid: Vec<f64>,
    families: Vec<FamilyGrid>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OptimizeInput {
    Multi(MultiSpec),
    Single(SweepSpec),
}

#[derive(Serialize)]
struct Winner {
    threshold: f64,
    family: Option<SweepFamily>,
    p: Option<f64>,
    time: Option<f64>,
}

pub fn optimize(config_path: &Path, threshold: f64, dt: Option<f64>, out: &Path) -> Outcome {
    let started = Instant::now();
    let input: OptimizeInput = read_json(config_path)?;
    let (specs, single) = match input {
        OptimizeInput::Single(s) => (vec![s], true),
        OptimizeInput::Multi(m) => {
            if m.families.is_empty() {
                return Err(Failure::input("validating sweep spec", "families must be nonempty"));
            }
            let specs = m
                .families
                .into_iter()
                .map(|f| SweepSpec { family: f.family, base: m.base.clone(), param_grid: f.param_grid, t_grid: m.t_grid.clone() })
                .collect();
            (specs, false)
        }
    };
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Failure::input("reading arguments", format!("--threshold must lie in (0, 1], got {threshold}")));
    }
    for spec in &specs {
        spec.validate().map_err(core("validating sweep spec"))?;
    }
    let dt = positive("reading arguments", "--dt", dt.unwrap_or_else(|| specs.iter().map(sweep_dt).fold(f64::INFINITY, f64::min)))?;

    let mut outputs = Outputs::create(out)?;
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut failures = Vec::new();
    for spec in &specs {
        let run = run_family(spec, dt)?;
        if let Some(map) = &run.map {
            let name = if single { "sweep.csv".to_string() } else { format!("sweep_{}.csv", spec.family.name()) };
            outputs.write(&name, &map.to_csv())?;
        }
        for row in &run.rows {
            let time = time_to_threshold(&row.trace, threshold).map_err(core("threshold search"))?;
            candidates.push(Candidate { family: spec.family, p: row.param, time });
        }
        failures.extend(run.failures);
    }
    if candidates.is_empty() {
        let first = failures.first().map(|f| f.error.clone()).unwrap_or_default();
        return Err(Failure::numerical("optimize", format!("every row failed; first: {first}")));
    }
    let best = select_best(&candidates);
    let winner = Winner { threshold, family: best.map(|b| b.family), p: best.map(|b| b.p), time: best.and_then(|b| b.time) };
    outputs.write("winner.json", &(serde_json::to_string_pretty(&winner).expect("serializes") + "\n"))?;

    let mut manifest = RunManifest::new("optimize", Some(config_path));
    manifest.spec = Some(serde_json::to_value(&specs).expect("serializes"));
    manifest.settings.dt = Some(dt);
    manifest.settings.threshold = Some(threshold);
    manifest.row_failures = failures;
    outputs.finish(manifest, started)
}

//! Single runs, epsilon sweeps and the dispersion table, with their artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bathymetry::BathymetryReport;
use crate::config::RunConfig;
use crate::energy::{initial_data_norm, monitor, EnergyRecord, CSV_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::fields::write_snapshot;
use crate::params::{dispersion_eigenvalues, CoefficientSet, RegimeReport};
use crate::timestepper::{model_dt, step_rk4};
use crate::verify::flat_bottom_wave_test;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub epsilon: f64,
    pub status: RunStatus,
    pub dt: f64,
    pub steps: usize,
    pub t_end: f64,
    pub t_reached: f64,
    pub blowup_time: Option<f64>,
    /// Data norm of the initial state.
    pub data_norm: f64,
    /// Monitored total functional at `t = 0`.
    pub energy0: f64,
    /// `max_t energy(t) / energy(0)`; absent for zero data.
    pub growth: Option<f64>,
    /// `energy(0) / data_norm`.
    pub initial_ratio: Option<f64>,
    #[serde(skip)]
    pub records: Vec<EnergyRecord>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    schema_version: u32,
    code_version: &'static str,
    config: &'a RunConfig,
    coefficients: CoefficientSet,
    regime_report: &'a RegimeReport,
    bathymetry_report: &'a BathymetryReport,
    summary: &'a RunSummary,
}

fn blow_up_time(e: &Error) -> Option<f64> {
    match e {
        Error::NonFinite { t } => Some(*t),
        Error::SolverDiverged { residual, .. } if !residual.is_finite() => Some(f64::NAN),
        _ => None,
    }
}

/// Integrate one configuration to `t_end_factor / epsilon`, sampling the
/// energy every `sample_stride` steps, and write artifacts into `out` if given.
///
/// A blow-up is not an error: the summary carries `RunStatus::BlowUp` and the
/// time it was detected.
pub fn run_experiment(cfg: &RunConfig, out: Option<&Path>) -> Result<RunSummary> {
    let prep = cfg.prepare()?;
    let model = &prep.model;
    let t_end = cfg.t_end();
    let dt_max = model_dt(model, cfg.dt_safety);
    let steps = if dt_max.is_finite() {
        (t_end / dt_max).ceil().max(1.0) as usize
    } else {
        1
    };
    let dt = t_end / steps as f64;
    log::info!(
        "{} eps={} dt={dt:.3e} steps={steps}",
        cfg.regime.name(),
        cfg.epsilon
    );

    let data_norm = initial_data_norm(&prep.state, cfg.epsilon)?;
    let first = monitor(model, &prep.state, cfg.s)?;
    let energy0 = first.total().unwrap_or(0.0);
    let mut records = vec![first];
    let mut state = prep.state.clone();
    let mut blowup_time = None;
    for i in 1..=steps {
        let stepped = step_rk4(model, &state, dt).and_then(|s| {
            if i % cfg.sample_stride == 0 || i == steps {
                let rec = monitor(model, &s, cfg.s)?;
                if !rec.is_finite() {
                    return Err(Error::NonFinite { t: s.t });
                }
                records.push(rec);
            }
            Ok(s)
        });
        match stepped {
            Ok(s) => state = s,
            Err(e) => match blow_up_time(&e) {
                Some(t) => {
                    blowup_time = Some(if t.is_finite() { t } else { state.t + dt });
                    break;
                }
                None => return Err(e),
            },
        }
    }
    let growth = if energy0 > 0.0 {
        Some(records.iter().filter_map(EnergyRecord::total).fold(0.0, f64::max) / energy0)
    } else {
        None
    };
    let summary = RunSummary {
        epsilon: cfg.epsilon,
        status: if blowup_time.is_some() {
            RunStatus::BlowUp
        } else {
            RunStatus::Completed
        },
        dt,
        steps,
        t_end,
        t_reached: state.t,
        blowup_time,
        data_norm,
        energy0,
        growth,
        initial_ratio: (data_norm > 0.0).then(|| energy0 / data_norm),
        records,
    };

    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_energy_csv(&dir.join("energy.csv"), &summary.records)?;
        let meta = Metadata {
            schema_version: CSV_SCHEMA_VERSION,
            code_version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            coefficients: model.coeffs,
            regime_report: &prep.regime_report,
            bathymetry_report: &prep.bathymetry_report,
            summary: &summary,
        };
        fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)?)?;
        let mut cols: Vec<(String, &crate::fields::ScalarField)> = state
            .v
            .components
            .iter()
            .enumerate()
            .map(|(a, c)| (format!("V{}", ["x", "y"][a]), c))
            .collect();
        cols.push(("eta".into(), &state.eta));
        let named: Vec<(&str, &crate::fields::ScalarField)> = cols.iter().map(|(n, f)| (n.as_str(), *f)).collect();
        write_snapshot(&dir.join("final_state.csv"), &named, Some(state.t))?;
        write_snapshot(&dir.join("bathymetry.csv"), &[("h", &prep.bathymetry.h)], None)?;
    }
    Ok(summary)
}

pub fn write_energy_csv(path: &Path, records: &[EnergyRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{}", EnergyRecord::csv_header())?;
    for r in records {
        writeln!(f, "{}", r.csv_row())?;
    }
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub status: String,
    pub growth: Option<f64>,
    pub energy0: Option<f64>,
    pub data_norm: Option<f64>,
    pub initial_ratio: Option<f64>,
    pub blowup_time: Option<f64>,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub regime: String,
    pub points: Vec<SweepPoint>,
    /// `max G / min G` over completed points.
    pub flatness: Option<f64>,
    pub all_completed: bool,
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "epsilon",
    "status",
    "G",
    "energy0",
    "data_norm",
    "initial_ratio",
    "blowup_time",
    "steps",
    "dt",
    "flatness",
];

fn run_dir(out: &Path, eps: f64) -> PathBuf {
    out.join(format!("eps_{eps}"))
}

/// Run the configuration at every epsilon concurrently. Per-run failures are
/// recorded and do not stop the sweep.
pub fn sweep_epsilon(cfg: &RunConfig, epsilons: &[f64], out: Option<&Path>) -> Result<SweepSummary> {
    if epsilons.is_empty() {
        return Err(Error::ConfigInvalid("sweep needs at least one epsilon".into()));
    }
    let points: Vec<SweepPoint> = epsilons
        .par_iter()
        .map(|&eps| {
            let mut c = cfg.clone();
            c.epsilon = eps;
            let dir = out.map(|o| run_dir(o, eps));
            match run_experiment(&c, dir.as_deref()) {
                Ok(s) => SweepPoint {
                    epsilon: eps,
                    status: match s.status {
                        RunStatus::Completed => "completed".into(),
                        RunStatus::BlowUp => "blow_up".into(),
                    },
                    growth: s.growth,
                    energy0: Some(s.energy0),
                    data_norm: Some(s.data_norm),
                    initial_ratio: s.initial_ratio,
                    blowup_time: s.blowup_time,
                    steps: Some(s.steps),
                    dt: Some(s.dt),
                    error: None,
                },
                Err(e) => SweepPoint {
                    epsilon: eps,
                    status: "error".into(),
                    growth: None,
                    energy0: None,
                    data_norm: None,
                    initial_ratio: None,
                    blowup_time: None,
                    steps: None,
                    dt: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let done: Vec<f64> = points
        .iter()
        .filter(|p| p.status == "completed")
        .filter_map(|p| p.growth)
        .collect();
    let flatness = (!done.is_empty()).then(|| {
        let hi = done.iter().copied().fold(f64::MIN, f64::max);
        let lo = done.iter().copied().fold(f64::MAX, f64::min);
        hi / lo
    });
    let summary = SweepSummary {
        regime: cfg.regime.name().into(),
        all_completed: points.iter().all(|p| p.status == "completed"),
        points,
        flatness,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_sweep_csv(&dir.join("sweep.csv"), &summary)?;
        fs::write(dir.join("sweep_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(summary)
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

pub fn write_sweep_csv(path: &Path, s: &SweepSummary) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{}", SWEEP_COLUMNS.join(","))?;
    for p in &s.points {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{}",
            p.epsilon,
            p.status,
            num(p.growth),
            num(p.energy0),
            num(p.data_norm),
            num(p.initial_ratio),
            num(p.blowup_time),
            cell(p.steps),
            num(p.dt),
            num(s.flatness),
        )?;
    }
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    pub xi: f64,
    pub epsilon: f64,
    pub re_lambda_plus: f64,
    /// `Im lambda_+`, the analytic frequency.
    pub omega_analytic: f64,
    pub ill_posed: bool,
    pub omega_measured: Option<f64>,
    pub rel_error: Option<f64>,
}

pub const DISPERSION_COLUMNS: [&str; 7] = [
    "xi",
    "epsilon",
    "re_lambda_plus",
    "omega_analytic",
    "ill_posed",
    "omega_measured",
    "rel_error",
];

/// Analytic flat-bottom eigenvalues, optionally with frequencies measured by
/// integrating each integer mode over `periods` periods on `n` points.
pub fn dispersion_table(
    c: &CoefficientSet,
    epsilons: &[f64],
    xis: &[u32],
    measure: Option<(usize, f64)>,
) -> Result<Vec<DispersionRow>> {
    let jobs: Vec<(f64, u32)> = epsilons.iter().flat_map(|&e| xis.iter().map(move |&x| (e, x))).collect();
    jobs.par_iter()
        .map(|&(eps, xi)| {
            let lam = dispersion_eigenvalues(c, eps, xi as f64);
            let measured = match measure {
                Some((n, periods)) if !lam.ill_posed && lam.lambda_plus.im > 0.0 => {
                    Some(flat_bottom_wave_test(c, eps, xi, periods, n)?)
                }
                _ => None,
            };
            Ok(DispersionRow {
                xi: xi as f64,
                epsilon: eps,
                re_lambda_plus: lam.lambda_plus.re,
                omega_analytic: lam.lambda_plus.im,
                ill_posed: lam.ill_posed,
                omega_measured: measured.as_ref().map(|w| w.omega_measured),
                rel_error: measured.as_ref().map(|w| w.rel_freq_error),
            })
        })
        .collect()
}

pub fn write_dispersion_csv(path: &Path, rows: &[DispersionRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{}", DISPERSION_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            f,
            "{},{},{:.12e},{:.12e},{},{},{}",
            r.xi,
            r.epsilon,
            r.re_lambda_plus,
            r.omega_analytic,
            r.ill_posed,
            num(r.omega_measured),
            num(r.rel_error)
        )?;
    }
    f.flush()?;
    Ok(())
}

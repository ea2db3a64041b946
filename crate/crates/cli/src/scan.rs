use std::collections::HashMap;
use std::fs;

use deltakick::asymptotics::{default_exp_window, default_tail_window};
use deltakick::kernel::kernel_moments_with;
use deltakick::volterra::simulate_with_moments;
use deltakick::{
    fit_exp_rate, fit_power_tail, plateau_ratio, DriveSpec, KernelMoments, RunOptions, RunResult,
    TimeGrid,
};
use rayon::prelude::*;

use crate::config::{FitConfig, FitKind, RunConfig, ScanParam};
use crate::error::CliError;
use crate::output::{num, write_csv, Manifest};

pub const SUMMARY: &str = "scan.csv";
pub const SUMMARY_HEADER: &str = "param,value,final_P,gamma_fit,plateau_ratio,status";
pub const REFERENCE: &str = "reference";

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub param: String,
    pub value: f64,
    pub final_p: f64,
    pub gamma_fit: f64,
    pub plateau_ratio: f64,
    pub status: String,
}

impl ScanRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.param,
            num(self.value),
            num(self.final_p),
            num(self.gamma_fit),
            num(self.plateau_ratio),
            self.status
        )
    }
}

struct Point {
    param: String,
    value: f64,
    config: Result<RunConfig, CliError>,
}

/// Applies one scan value to the template drive.
pub fn with_param(drive: &DriveSpec, param: ScanParam, value: f64) -> Result<DriveSpec, CliError> {
    let mut d = drive.clone();
    let field = match param {
        ScanParam::R => "drive.r",
        ScanParam::Omega => "drive.omega",
        ScanParam::Lambda => "drive.lambda",
    };
    match (&mut d, param) {
        (DriveSpec::Harmonic { r, .. } | DriveSpec::GeometricPole { r, .. }, ScanParam::R) => {
            *r = value
        }
        (DriveSpec::GeometricPole { lambda, .. }, ScanParam::Lambda) => *lambda = value,
        (
            DriveSpec::Harmonic { omega, .. }
            | DriveSpec::GeometricPole { omega, .. }
            | DriveSpec::TrigPoly { omega, .. }
            | DriveSpec::FourierTable { omega, .. },
            ScanParam::Omega,
        ) => *omega = value,
        _ => {
            return Err(CliError::config(
                "scan.param",
                format!("`{}` does not apply to this drive", param.name()),
            ))
        }
    }
    d.validate()
        .map_err(|e| CliError::config(field, e.to_string()))?;
    Ok(d)
}

/// Harmonic drive with the template's amplitude and frequency.
pub fn reference_drive(drive: &DriveSpec) -> Option<DriveSpec> {
    match *drive {
        DriveSpec::Harmonic { r, omega } | DriveSpec::GeometricPole { r, omega, .. } => {
            Some(DriveSpec::harmonic(r, omega))
        }
        _ => None,
    }
}

/// Runs every scan point on a pool of `threads` workers and writes the
/// summary CSV, one manifest per point and a scan manifest.
pub fn scan(config: &RunConfig, threads: usize) -> Result<Vec<ScanRow>, CliError> {
    let spec = config
        .scan
        .as_ref()
        .ok_or_else(|| CliError::config("scan", "missing [scan] table"))?;
    let values = spec.resolved_values()?;
    let out = config.out_dir()?;
    // a parameter that does not fit the drive is a configuration error, not a failed point
    with_param(&config.drive, spec.param, values[0])
        .map(|_| ())
        .or_else(|e| match e.field() {
            Some("scan.param") => Err(e),
            _ => Ok(()),
        })?;

    let mut points: Vec<Point> = values
        .iter()
        .map(|&v| Point {
            param: spec.param.name().to_string(),
            value: v,
            config: with_param(&config.drive, spec.param, v)
                .map(|drive| point_config(config, drive)),
        })
        .collect();
    if spec.reference {
        let drive = reference_drive(&config.drive).ok_or_else(|| {
            CliError::config(
                "scan.reference",
                "needs a harmonic or geometric_pole template",
            )
        })?;
        let value = match drive {
            DriveSpec::Harmonic { r, .. } => r,
            _ => unreachable!(),
        };
        points.push(Point {
            param: REFERENCE.to_string(),
            value,
            config: Ok(point_config(config, drive)),
        });
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let rows: Vec<(ScanRow, Option<Manifest>)> = pool.install(|| {
        let tables = moment_tables(&points);
        points.par_iter().map(|p| run_point(p, &tables)).collect()
    });

    let point_dir = out.join("points");
    fs::create_dir_all(&point_dir)?;
    let mut manifest = Manifest::new("scan", config.clone());
    let mut listing = Vec::new();
    for (i, (row, point_manifest)) in rows.iter().enumerate() {
        if let Some(m) = point_manifest {
            let name = format!("point_{i:03}.json");
            m.write(&point_dir.join(&name))?;
            listing.push(serde_json::json!({ "file": format!("points/{name}"), "param": row.param, "value": row.value }));
        }
    }
    manifest.note("points", listing);
    let rows: Vec<ScanRow> = rows.into_iter().map(|(r, _)| r).collect();
    manifest.outputs.push(write_csv(
        &out,
        SUMMARY,
        SUMMARY_HEADER,
        rows.iter().map(ScanRow::csv),
    )?);
    manifest.note("threads", threads);
    manifest.write(&out.join("manifest.json"))?;

    if rows.iter().all(|r| !r.ok()) {
        return Err(CliError::runtime("every scan point failed"));
    }
    Ok(rows)
}

fn point_config(template: &RunConfig, drive: DriveSpec) -> RunConfig {
    let mut c = template.clone();
    c.drive = drive;
    c.scan = None;
    c.output.snapshots.clear();
    c.output.spectrum = false;
    c
}

type MomentKey = (u64, usize);

fn key(g: &TimeGrid) -> MomentKey {
    (g.step.to_bits(), g.count)
}

/// One moment table per distinct time grid.
fn moment_tables(points: &[Point]) -> HashMap<MomentKey, Result<KernelMoments, String>> {
    let mut grids: Vec<(MomentKey, TimeGrid, deltakick::KernelSettings)> = Vec::new();
    for p in points {
        if let Ok(c) = &p.config {
            if let Ok(g) = c.time_grid() {
                if !grids.iter().any(|(k, _, _)| *k == key(&g)) {
                    grids.push((key(&g), g, c.kernel));
                }
            }
        }
    }
    grids
        .par_iter()
        .map(|(k, g, s)| {
            (
                *k,
                kernel_moments_with(g.step, g.count, *s).map_err(|e| e.to_string()),
            )
        })
        .collect()
}

fn run_point(
    p: &Point,
    tables: &HashMap<MomentKey, Result<KernelMoments, String>>,
) -> (ScanRow, Option<Manifest>) {
    let failed = |status: String| ScanRow {
        param: p.param.clone(),
        value: p.value,
        final_p: f64::NAN,
        gamma_fit: f64::NAN,
        plateau_ratio: f64::NAN,
        status,
    };
    let config = match &p.config {
        Ok(c) => c,
        Err(e) => return (failed(status_text(&e.to_string())), None),
    };
    let outcome = (|| -> Result<(RunResult, TimeGrid), CliError> {
        let tgrid = config.time_grid()?;
        let kgrid = config.momentum_grid()?;
        let initial = config.initial_state(&kgrid)?;
        let moments = match tables.get(&key(&tgrid)) {
            Some(Ok(m)) => m,
            Some(Err(e)) => return Err(CliError::runtime(e.clone())),
            None => return Err(CliError::runtime("missing moment table")),
        };
        let options = RunOptions {
            snapshot_times: Vec::new(),
            track_spectrum: false,
            kernel: config.kernel,
        };
        Ok((
            simulate_with_moments(&config.drive, &initial, &tgrid, &kgrid, moments, &options)?,
            tgrid,
        ))
    })();
    let (result, tgrid) = match outcome {
        Ok(r) => r,
        Err(e) => {
            let mut m = Manifest::new("scan-point", config.clone());
            m.note("error", e.to_string());
            return (failed(status_text(&e.to_string())), Some(m));
        }
    };
    let period = config.drive.period();
    let ratio = plateau_ratio(&result.times, &result.survival, period).unwrap_or(f64::NAN);
    let mut manifest = Manifest::new("scan-point", config.clone());
    let gamma = match fit_rate(&result, period, &config.fit) {
        Ok(est) => {
            manifest.note("fit_window", vec![est.window.0, est.window.1]);
            est.value
        }
        Err(e) => {
            manifest.note("fit_error", e.to_string());
            f64::NAN
        }
    };
    manifest.note("steps", tgrid.count);
    manifest.note("h", tgrid.step);
    manifest.note("final_P", result.final_survival());
    manifest.note("plateau_ratio", ratio);
    let row = ScanRow {
        param: p.param.clone(),
        value: p.value,
        final_p: result.final_survival(),
        gamma_fit: gamma,
        plateau_ratio: ratio,
        status: "ok".to_string(),
    };
    (row, Some(manifest))
}

/// Exponential rate or tail exponent according to `fit`, over the configured
/// window or a detected one.
pub fn fit_rate(
    result: &RunResult,
    period: f64,
    fit: &FitConfig,
) -> deltakick::Result<deltakick::RateEstimate> {
    let average = fit.average.then_some(period);
    match fit.kind {
        FitKind::Exp => {
            let window = match fit.window {
                Some(w) => (w[0], w[1]),
                None => default_exp_window(&result.times, &result.survival, period)?,
            };
            fit_exp_rate(&result.survival, &result.times, window, average)
        }
        FitKind::Power => {
            let window = match fit.window {
                Some(w) => (w[0], w[1]),
                None => default_tail_window(&result.times, &result.survival, period)
                    .ok_or_else(|| deltakick::Error::Fit("no power-law tail detected".into()))?,
            };
            fit_power_tail(&result.survival, &result.times, window, average)
        }
    }
}

/// Keeps the status on one CSV field.
fn status_text(message: &str) -> String {
    let clean: String = message
        .chars()
        .map(|c| if c == ',' || c == '\n' { ';' } else { c })
        .collect();
    format!("error: {clean}")
}

use std::path::{Path, PathBuf};

use deltakick::volterra::SpectrumSnapshot;
use deltakick::{simulate, unitarity_defect, RunOptions, RunResult};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, write_csv, Manifest, OutputFile};

pub const TIMESERIES: &str = "timeseries.csv";
pub const TIMESERIES_HEADER: &str = "t,re_Y,im_Y,re_theta,im_theta,P,ionized,defect";
pub const SPECTRUM_HEADER: &str = "k,abs2_Theta";
pub const MANIFEST: &str = "manifest.json";

pub fn run_options(config: &RunConfig) -> Result<RunOptions, CliError> {
    if !config.output.spectrum && !config.output.snapshots.is_empty() {
        return Err(CliError::config(
            "output.snapshots",
            "snapshots need output.spectrum = true",
        ));
    }
    Ok(RunOptions {
        snapshot_times: config.output.snapshots.clone(),
        track_spectrum: config.output.spectrum,
        kernel: config.kernel,
    })
}

/// Runs the solver and writes the time series, the spectra and the manifest
/// into the output directory. Returns the manifest and its path.
pub fn solve(config: &RunConfig) -> Result<(Manifest, PathBuf), CliError> {
    let out = config.out_dir()?;
    let tgrid = config.time_grid()?;
    let kgrid = config.momentum_grid()?;
    let initial = config.initial_state(&kgrid)?;
    let options = run_options(config)?;
    let result = simulate(&config.drive, &initial, &tgrid, &kgrid, &options)?;

    let mut manifest = Manifest::new("solve", config.clone());
    manifest.outputs.push(write_timeseries(&out, &result)?);
    for (i, snapshot) in result.spectra.iter().enumerate() {
        let name = format!("spectrum_{i:03}.csv");
        manifest
            .outputs
            .push(write_spectrum(&out, &name, snapshot, &kgrid.nodes)?);
    }
    manifest.note("steps", tgrid.count);
    manifest.note("h", tgrid.step);
    manifest.note("final_P", result.final_survival());
    if result.defect.is_some() {
        manifest.note("max_defect", unitarity_defect(&result)?);
    }
    if !result.spectra.is_empty() {
        let times: Vec<f64> = result.spectra.iter().map(|s| s.time).collect();
        manifest.note("snapshot_times", times);
    }
    let path = out.join(MANIFEST);
    manifest.write(&path)?;
    Ok((manifest, path))
}

fn write_timeseries(out: &Path, r: &RunResult) -> Result<OutputFile, CliError> {
    let rows = (0..r.times.len()).map(|n| {
        let (ionized, defect) = match (&r.ionized, &r.defect) {
            (Some(i), Some(d)) => (i[n], d[n]),
            _ => (f64::NAN, f64::NAN),
        };
        [
            r.times[n],
            r.y[n].re,
            r.y[n].im,
            r.theta[n].re,
            r.theta[n].im,
            r.survival[n],
            ionized,
            defect,
        ]
        .iter()
        .map(|&x| num(x))
        .collect::<Vec<_>>()
        .join(",")
    });
    write_csv(out, TIMESERIES, TIMESERIES_HEADER, rows)
}

fn write_spectrum(
    out: &Path,
    name: &str,
    s: &SpectrumSnapshot,
    nodes: &[f64],
) -> Result<OutputFile, CliError> {
    let negative = s.negative_or_positive();
    let rows = (0..nodes.len())
        .rev()
        .map(|j| (-nodes[j], negative[j].norm_sqr()))
        .chain(
            nodes
                .iter()
                .zip(&s.positive)
                .map(|(&k, a)| (k, a.norm_sqr())),
        )
        .map(|(k, a)| format!("{},{}", num(k), num(a)));
    write_csv(out, name, SPECTRUM_HEADER, rows)
}

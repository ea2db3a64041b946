use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{solve, spectrum_series, InitialState, MomentumGrid, SpectrumSnapshot, TimeGrid};
use crate::drive::DriveSpec;
use crate::error::{Error, Result};
use crate::kernel::{kernel_moments_with, KernelMoments, KernelSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Times at which to keep `Θ(k, t)`; snapped to the nearest grid time.
    pub snapshot_times: Vec<f64>,
    /// Track the continuum (ionized fraction and unitarity defect).
    pub track_spectrum: bool,
    pub kernel: KernelSettings,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            snapshot_times: Vec::new(),
            track_spectrum: true,
            kernel: KernelSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub drive: DriveSpec,
    pub tgrid: TimeGrid,
    pub kmax: f64,
    pub nk: usize,
    pub kernel: KernelSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub times: Vec<f64>,
    pub y: Vec<Complex64>,
    pub theta: Vec<Complex64>,
    /// `P(t) = |θ(t)|²`
    pub survival: Vec<f64>,
    /// `∫|Θ(k, t)|² dk`, when the spectrum was tracked.
    pub ionized: Option<Vec<f64>>,
    /// `|1 - P - ionized|`, when the spectrum was tracked.
    pub defect: Option<Vec<f64>>,
    pub spectra: Vec<SpectrumSnapshot>,
    pub meta: RunMeta,
}

impl RunResult {
    pub fn final_survival(&self) -> f64 {
        *self
            .survival
            .last()
            .expect("runs have at least two samples")
    }
}

/// Builds the moment table and runs [`simulate_with_moments`].
pub fn simulate(
    drive: &DriveSpec,
    initial: &InitialState,
    tgrid: &TimeGrid,
    kgrid: &MomentumGrid,
    options: &RunOptions,
) -> Result<RunResult> {
    tgrid.check_resolution(drive)?;
    let moments = kernel_moments_with(tgrid.step, tgrid.count, options.kernel)?;
    simulate_with_moments(drive, initial, tgrid, kgrid, &moments, options)
}

pub fn simulate_with_moments(
    drive: &DriveSpec,
    initial: &InitialState,
    tgrid: &TimeGrid,
    kgrid: &MomentumGrid,
    moments: &KernelMoments,
    options: &RunOptions,
) -> Result<RunResult> {
    tgrid.check_resolution(drive)?;
    let solution = solve(drive, initial, tgrid, kgrid, moments)?;
    let survival: Vec<f64> = solution.theta.iter().map(|t| t.norm_sqr()).collect();
    let (ionized, defect, spectra) = if options.track_spectrum {
        let series = spectrum_series(&solution.y, initial, tgrid, kgrid, &options.snapshot_times)?;
        let defect = survival
            .iter()
            .zip(&series.ionized)
            .map(|(p, q)| (1.0 - p - q).abs())
            .collect();
        (Some(series.ionized), Some(defect), series.snapshots)
    } else {
        (None, None, Vec::new())
    };
    Ok(RunResult {
        times: tgrid.times(),
        y: solution.y,
        theta: solution.theta,
        survival,
        ionized,
        defect,
        spectra,
        meta: RunMeta {
            drive: drive.clone(),
            tgrid: *tgrid,
            kmax: kgrid.kmax,
            nk: kgrid.len(),
            kernel: options.kernel,
        },
    })
}

/// `max_t |1 - P(t) - ionized(t)|`.
pub fn unitarity_defect(result: &RunResult) -> Result<f64> {
    let defect = result
        .defect
        .as_ref()
        .ok_or_else(|| Error::Validation("run did not track the continuum".into()))?;
    Ok(defect.iter().copied().fold(0.0, f64::max))
}

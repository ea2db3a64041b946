use deltakick::{
    gamma_resonance, gamma_smallr, simulate, DriveSpec, RateEstimate, RateKind, RunOptions,
};
use serde::Serialize;

use crate::config::{FitKind, RunConfig};
use crate::error::CliError;
use crate::scan::fit_rate;

#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub kind: &'static str,
    pub value: f64,
    pub window: (f64, f64),
    pub rms_residual: f64,
    pub n_points: usize,
    pub averaged: bool,
    pub final_p: f64,
    /// Small-r prediction for a harmonic drive, when one applies.
    pub theory: Option<f64>,
    pub theory_source: Option<&'static str>,
}

/// Runs the configured drive and fits the survival curve.
pub fn gamma(config: &RunConfig) -> Result<GammaReport, CliError> {
    let tgrid = config.time_grid()?;
    let kgrid = config.momentum_grid()?;
    let initial = config.initial_state(&kgrid)?;
    let options = RunOptions {
        snapshot_times: Vec::new(),
        track_spectrum: false,
        kernel: config.kernel,
    };
    let result = simulate(&config.drive, &initial, &tgrid, &kgrid, &options)?;
    let est: RateEstimate = fit_rate(&result, config.drive.period(), &config.fit)
        .map_err(|e| CliError::runtime(format!("fit failed: {e}")))?;
    let (theory, theory_source) = match (config.fit.kind, &config.drive) {
        (FitKind::Exp, DriveSpec::Harmonic { r, omega }) => predicted_rate(*r, *omega),
        (FitKind::Power, _) => (Some(-3.0), Some("tail exponent")),
        _ => (None, None),
    };
    Ok(GammaReport {
        kind: match est.kind {
            RateKind::Rate => "rate",
            RateKind::Exponent => "exponent",
        },
        value: est.value,
        window: est.window,
        rms_residual: est.rms_residual,
        n_points: est.n_points,
        averaged: est.averaged,
        final_p: result.final_survival(),
        theory,
        theory_source,
    })
}

fn predicted_rate(r: f64, omega: f64) -> (Option<f64>, Option<&'static str>) {
    let r = r.abs();
    if let Ok(res) = gamma_resonance(r) {
        if (omega - res.omega).abs() <= 1e-9 * omega {
            return (Some(res.rate), Some("threshold resonance"));
        }
    }
    match gamma_smallr(omega, r) {
        Ok(rate) => (Some(rate.gamma), Some("small r")),
        Err(_) => (None, None),
    }
}

impl GammaReport {
    pub fn lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("kind={}", self.kind),
            format!("value={:.10e}", self.value),
            format!("window={},{}", self.window.0, self.window.1),
            format!("rms_residual={:.3e}", self.rms_residual),
            format!("points={}", self.n_points),
            format!("averaged={}", self.averaged),
            format!("final_P={:.10e}", self.final_p),
        ];
        if let (Some(t), Some(src)) = (self.theory, self.theory_source) {
            v.push(format!("theory={t:.10e} ({src})"));
            v.push(format!("ratio={:.6}", self.value / t));
        }
        v
    }
}

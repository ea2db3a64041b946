use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::drive::DriveSpec;
use crate::error::{Error, Result};

pub const DEFAULT_KMAX: f64 = 6.0;
pub const DEFAULT_NK: usize = 2048;
pub const MIN_SAMPLES_PER_PERIOD: f64 = 20.0;

/// Uniform time grid `t_n = n h`, `n = 0..=count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub step: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Validation(format!(
                "time step must be positive, got {step}"
            )));
        }
        if count == 0 {
            return Err(Error::Validation(
                "time grid needs at least one step".into(),
            ));
        }
        Ok(TimeGrid { step, count })
    }

    /// Grid with `count = T / h`; rejects horizons that are not a whole
    /// number of steps.
    pub fn from_horizon(step: f64, horizon: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Validation(format!(
                "time step must be positive, got {step}"
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Validation(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let count = (horizon / step).round();
        if count < 1.0 || (count * step - horizon).abs() > 1e-9 * horizon {
            return Err(Error::Validation(format!(
                "horizon {horizon} is not an integer multiple of step {step}"
            )));
        }
        TimeGrid::new(step, count as usize)
    }

    pub fn horizon(&self) -> f64 {
        self.count as f64 * self.step
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.count).map(|n| self.time(n)).collect()
    }

    /// Nearest grid index to `t`, or `None` outside `[0, T]`.
    pub fn nearest_index(&self, t: f64) -> Option<usize> {
        let slack = 1e-9 * self.step;
        if !(t >= -slack && t <= self.horizon() + slack) {
            return None;
        }
        Some(((t / self.step).round() as usize).min(self.count))
    }

    /// Index of `t` if it is a grid time.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.nearest_index(t)
            .filter(|&n| (self.time(n) - t).abs() <= 1e-9 * self.step.max(t.abs()))
    }

    /// Requires at least [`MIN_SAMPLES_PER_PERIOD`] steps per period of the
    /// fastest drive component.
    pub fn check_resolution(&self, drive: &DriveSpec) -> Result<()> {
        let samples = 2.0 * PI / (drive.max_frequency() * self.step);
        if samples < MIN_SAMPLES_PER_PERIOD {
            return Err(Error::Validation(format!(
                "time step {} gives {samples:.1} samples per drive period (need {MIN_SAMPLES_PER_PERIOD})",
                self.step
            )));
        }
        Ok(())
    }
}

/// Midpoint nodes `k_i = (i - 1/2) Δk` on `(0, kmax)` with weights `Δk`.
///
/// The quantities integrated over `k` are smooth even functions, so the
/// midpoint rule converges spectrally at the `k = 0` end.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub kmax: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MomentumGrid {
    pub fn uniform(kmax: f64, nk: usize) -> Result<Self> {
        if !(kmax > 0.0 && kmax.is_finite()) {
            return Err(Error::Validation(format!(
                "kmax must be positive, got {kmax}"
            )));
        }
        if nk == 0 {
            return Err(Error::Validation(
                "momentum grid needs at least one node".into(),
            ));
        }
        let dk = kmax / nk as f64;
        let nodes = (0..nk).map(|i| (i as f64 + 0.5) * dk).collect();
        Ok(MomentumGrid {
            kmax,
            nodes,
            weights: vec![dk; nk],
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.kmax / self.len() as f64
    }
}

impl Default for MomentumGrid {
    fn default() -> Self {
        MomentumGrid::uniform(DEFAULT_KMAX, DEFAULT_NK).expect("default grid is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_arithmetic() {
        let g = TimeGrid::from_horizon(0.01, 100.0).unwrap();
        assert_eq!(g.count, 10_000);
        assert_eq!(g.times().len(), 10_001);
        assert!(TimeGrid::from_horizon(0.3, 1.0).is_err());
        assert!(TimeGrid::new(0.0, 5).is_err());
        assert_eq!(g.index_of(50.0), Some(5000));
        assert_eq!(g.index_of(50.005), None);
        assert_eq!(g.nearest_index(101.0), None);
    }

    #[test]
    fn resolution_guard() {
        let drive = DriveSpec::harmonic(0.1, 2.0);
        assert!(TimeGrid::new(0.1, 10)
            .unwrap()
            .check_resolution(&drive)
            .is_ok());
        assert!(TimeGrid::new(0.2, 10)
            .unwrap()
            .check_resolution(&drive)
            .is_err());
    }

    #[test]
    fn gaussian_quadrature_accuracy() {
        let g = MomentumGrid::default();
        assert!(g.weights.iter().all(|&w| w > 0.0));
        assert!(g.nodes.windows(2).all(|w| w[1] > w[0]) && g.nodes[0] > 0.0);
        let sum: f64 = g
            .nodes
            .iter()
            .zip(&g.weights)
            .map(|(k, w)| w * (-k * k).exp())
            .sum();
        assert!((sum - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-8);
    }
}

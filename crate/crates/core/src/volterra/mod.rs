//! Time stepping of the reduced integral equation
//! `Y(t) = η(t) [ I(t) + ∫_0^t (2i + M(t - t')) Y(t') dt' ]`
//! and reconstruction of the observables that follow from `Y`:
//! the bound amplitude `θ(t)`, the continuum amplitudes `Θ(k, t)`, the
//! survival and ionized probabilities, and `|ψ|²` on a finite interval.

mod grid;
mod localization;
mod picard;
mod run;
mod solver;
mod spectrum;
mod state;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use grid::{MomentumGrid, TimeGrid, DEFAULT_KMAX, DEFAULT_NK, MIN_SAMPLES_PER_PERIOD};
pub use localization::{localization_probability, psi_at};
pub use picard::picard_y;
pub use run::{simulate, simulate_with_moments, unitarity_defect, RunMeta, RunOptions, RunResult};
pub use solver::{consistency_residual, solve, solve_y, theta_series, Solution};
pub use spectrum::{spectrum_series, SpectrumSeries, SpectrumSnapshot};
pub use state::{Continuum, InitialState, NORM_TOL};

/// Bound state of the unperturbed well, `e^{-|x|}`, energy -1.
pub fn bound_state(x: f64) -> f64 {
    (-x.abs()).exp()
}

/// Generalized eigenfunction `u(k, x)` of energy `k²`.
pub fn continuum_state(k: f64, x: f64) -> Complex64 {
    let scattered = Complex64::from_polar(1.0, k.abs() * x.abs()) / Complex64::new(1.0, k.abs());
    (Complex64::from_polar(1.0, k * x) - scattered) / (2.0 * PI).sqrt()
}

/// Coupling of `Θ(k)` to `Y`: `dΘ/dt = c(k) Y(t) e^{i(1+k²)t}` with
/// `c(k) = 2|k| / (√2π (1 - i|k|))`.
pub fn emission_coefficient(k: f64) -> Complex64 {
    2.0 * k.abs() / ((2.0 * PI).sqrt() * Complex64::new(1.0, -k.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contact_value_matches_emission_coefficient() {
        // c(k) u(k, 0) summed over ±k reproduces the momentum-space kernel
        // density (2i/π) k²/(1+k²)
        for &k in &[0.1, 1.0, 3.7] {
            let density = emission_coefficient(k) * continuum_state(k, 0.0) * 2.0;
            let expected = Complex64::new(0.0, 2.0 / PI * k * k / (1.0 + k * k));
            assert!((density - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn continuum_states_are_orthogonal_to_bound_state() {
        // ∫ e^{-|x|} u(k, x) dx = 0
        for &k in &[0.3, 1.0, 2.5] {
            let rule = crate::quad::GaussLegendre::new(64);
            let mut total = Complex64::new(0.0, 0.0);
            for j in 0..200 {
                let (a, b) = (0.2 * j as f64, 0.2 * (j + 1) as f64);
                total += rule.integrate(a, b, |x| {
                    bound_state(x) * (continuum_state(k, x) + continuum_state(k, -x))
                });
            }
            assert!(total.norm() < 1e-12, "k={k}");
        }
    }
}

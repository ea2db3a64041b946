//! Numerical laboratory for a particle bound by an attractive delta well
//! whose strength is periodically modulated.
//!
//! The Schrödinger dynamics reduce to a scalar Volterra equation for the
//! contact amplitude `Y(t)`. [`kernel`] evaluates its memory kernel,
//! [`drive`] describes the forcing, [`volterra`] solves the equation and
//! reconstructs the observables, and [`asymptotics`] extracts decay rates
//! and compares them with the small-amplitude closed forms.

pub mod asymptotics;
pub mod drive;
pub mod error;
pub mod kernel;
pub mod quad;
pub mod special;
pub mod volterra;

pub use asymptotics::{
    default_exp_window, default_tail_window, fit_exp_rate, fit_power_tail, gamma_resonance,
    gamma_smallr, period_average, plateau_ratio, RateEstimate, RateKind, ResonanceRate, SmallRRate,
};
pub use drive::{
    eta_eval, fourier_of, genericity_residual, is_generic, DriveSpec, GenericityCertificate,
};
pub use error::{Error, Result};
pub use kernel::{inhom_i, kernel_moments, m_kernel, m_kernel_quad, KernelMoments, KernelSettings};
pub use volterra::{
    simulate, solve_y, unitarity_defect, InitialState, MomentumGrid, RunOptions, RunResult,
    TimeGrid,
};

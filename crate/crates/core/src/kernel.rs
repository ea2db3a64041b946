//! The memory kernel `M(s)`, its product-integration moments, and the
//! inhomogeneous term `I(t)` of the reduced integral equation.
//!
//! `M(s) = (1+i)/(2√2π) ∫_s^∞ e^{-iu} u^{-3/2} du`. Rotating `u = -i w`
//! turns the tail integral into an incomplete gamma function, which gives
//! the compact closed form `M(s) = (i / 2π) Γ(-1/2, i s)`; integrating by
//! parts once more shows this is the Fresnel integral `Γ(1/2, i s)` plus an
//! elementary term.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, GaussLegendre};
use crate::special::{lower_gamma_imag, upper_gamma_imag};
use crate::volterra::{InitialState, MomentumGrid};

pub const DEFAULT_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Gauss–Legendre points per regular moment panel.
const PANEL_POINTS: usize = 10;
/// Points for the desingularized first panel.
const SINGULAR_POINTS: usize = 20;

/// Kernel evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSettings {
    /// Relative convergence tolerance of the special-function evaluations.
    pub tol: f64,
}

impl Default for KernelSettings {
    fn default() -> Self {
        KernelSettings { tol: DEFAULT_TOL }
    }
}

/// Coefficient of the `s^{-1/2}` singularity: `M(s) ~ a s^{-1/2}` as `s -> 0+`.
pub fn singular_coefficient() -> Complex64 {
    Complex64::new(1.0, 1.0) / (2.0 * PI).sqrt()
}

fn check_positive(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "kernel argument must be positive and finite, got {s}"
        )))
    }
}

/// `M(s)` at the default tolerance.
pub fn m_kernel(s: f64) -> Result<Complex64> {
    m_kernel_with_tol(s, DEFAULT_TOL)
}

pub fn m_kernel_with_tol(s: f64, tol: f64) -> Result<Complex64> {
    check_positive(s)?;
    Ok(eval_m(s, tol))
}

#[inline]
fn eval_m(s: f64, tol: f64) -> Complex64 {
    I / (2.0 * PI.sqrt()) * upper_gamma_imag(-0.5, s, tol)
}

/// `∫_0^s M(u) du` in closed form.
pub fn m_kernel_integral(s: f64, tol: f64) -> Result<Complex64> {
    if s == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    check_positive(s)?;
    let upper = upper_gamma_imag(-0.5, s, tol);
    let lower = lower_gamma_imag(0.5, s, tol);
    Ok(I / (2.0 * PI.sqrt()) * (s * upper - I * lower))
}

/// `∫_0^s u M(u) du` in closed form.
pub fn m_kernel_first_integral(s: f64, tol: f64) -> Result<Complex64> {
    if s == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    check_positive(s)?;
    let upper = upper_gamma_imag(-0.5, s, tol);
    let lower = lower_gamma_imag(1.5, s, tol);
    Ok(I / (2.0 * PI.sqrt()) * (0.5 * s * s * upper - 0.5 * lower))
}

/// Independent evaluation of `M(s)` by adaptive quadrature of
/// `∫_s^∞ e^{-iu} u^{-3/2} du`.
///
/// The real-axis part runs over `[s, s + 40π]` with geometric break points
/// near the endpoint; the remainder is taken along the steepest-descent ray
/// `u = U - i y`, where the integrand decays like `e^{-y}`.
pub fn m_kernel_quad(s: f64, tol: f64) -> Result<Complex64> {
    check_positive(s)?;
    if !(tol > 0.0) {
        return Err(Error::Validation(format!(
            "quadrature tolerance must be positive, got {tol}"
        )));
    }
    let upper = s + 40.0 * PI;
    let mut breaks = vec![s];
    let mut x = 2.0 * s;
    while x < s + 1.0 {
        breaks.push(x);
        x *= 2.0;
    }
    let mut x = s + 1.0;
    while x < upper {
        breaks.push(x);
        x += PI;
    }
    breaks.push(upper);

    let scale = s.powf(-0.5);
    let real_axis = quad::adaptive(
        |u| Complex64::from_polar(u.powf(-1.5), -u),
        &breaks,
        0.05 * tol * scale,
        0.05 * tol,
        200_000,
    )?;
    // ∫_U^∞ e^{-iu} u^{-3/2} du = -i e^{-iU} ∫_0^∞ e^{-y} (U - i y)^{-3/2} dy
    let tail = quad::adaptive(
        |y| (-y).exp() * Complex64::new(upper, -y).powf(-1.5),
        &[0.0, 1.0, 4.0, 10.0, 25.0, 45.0, 80.0],
        0.05 * tol * scale,
        0.05 * tol,
        200_000,
    )?;
    let tail = -I * Complex64::from_polar(1.0, -upper) * tail.value;
    let prefactor = Complex64::new(1.0, 1.0) / (2.0 * SQRT_2 * PI.sqrt());
    Ok(prefactor * (real_axis.value + tail))
}

/// `M(s)` from the momentum-space representation
/// `(2i/π) ∫_0^∞ u² e^{-is(1+u²)} / (1+u²) du`.
///
/// That integral is only conditionally convergent on the real axis; it is
/// evaluated on the rotated contour `u = e^{-iπ/4} v`, which no pole crosses
/// and on which the integrand decays like `e^{-s v²}`.
pub fn m_kernel_spectral(s: f64, tol: f64) -> Result<Complex64> {
    check_positive(s)?;
    let reach = (60.0 / s).sqrt();
    let mut breaks: Vec<f64> = (0..=40).map(|j| reach * j as f64 / 40.0).collect();
    breaks.dedup();
    let value = quad::adaptive(
        |v| {
            let v2 = v * v;
            Complex64::new(0.0, -v2) / Complex64::new(1.0, -v2) * (-s * v2).exp()
        },
        &breaks,
        0.05 * tol,
        0.05 * tol,
        200_000,
    )?;
    let rotation = Complex64::from_polar(1.0, -0.25 * PI);
    Ok(2.0 * I / PI * rotation * Complex64::from_polar(1.0, -s) * value.value)
}

/// Product-integration moments of `M` over uniform panels `[jh, (j+1)h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMoments {
    pub step: f64,
    /// `∫_{jh}^{(j+1)h} M(s) ds`
    pub mu0: Vec<Complex64>,
    /// `∫_{jh}^{(j+1)h} (s - jh) M(s) ds`
    pub mu1: Vec<Complex64>,
}

impl KernelMoments {
    pub fn count(&self) -> usize {
        self.mu0.len()
    }
}

pub fn kernel_moments(h: f64, count: usize) -> Result<KernelMoments> {
    kernel_moments_with(h, count, KernelSettings::default())
}

pub fn kernel_moments_with(
    h: f64,
    count: usize,
    settings: KernelSettings,
) -> Result<KernelMoments> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Validation(format!(
            "moment step must be positive, got {h}"
        )));
    }
    let tol = settings.tol;
    let mut mu0 = Vec::with_capacity(count);
    let mut mu1 = Vec::with_capacity(count);
    if count == 0 {
        return Ok(KernelMoments { step: h, mu0, mu1 });
    }

    // First panel: split off a s^{-1/2}, integrate it exactly, and map the
    // bounded remainder through s = h v² so the quadrature sees a smooth
    // integrand.
    let a = singular_coefficient();
    let singular = GaussLegendre::new(SINGULAR_POINTS);
    let mut rem0 = Complex64::new(0.0, 0.0);
    let mut rem1 = Complex64::new(0.0, 0.0);
    for (&x, &w) in singular.nodes.iter().zip(&singular.weights) {
        let v = 0.5 * (x + 1.0);
        let s = h * v * v;
        let remainder = eval_m(s, tol) - a / s.sqrt();
        let jac = 0.5 * w * 2.0 * h * v;
        rem0 += remainder * jac;
        rem1 += remainder * s * jac;
    }
    mu0.push(a * 2.0 * h.sqrt() + rem0);
    mu1.push(a * (2.0 / 3.0) * h.powf(1.5) + rem1);

    let panel = GaussLegendre::new(PANEL_POINTS);
    for j in 1..count {
        let lo = j as f64 * h;
        let mut m0 = Complex64::new(0.0, 0.0);
        let mut m1 = Complex64::new(0.0, 0.0);
        for (&x, &w) in panel.nodes.iter().zip(&panel.weights) {
            let offset = 0.5 * h * (x + 1.0);
            let value = eval_m(lo + offset, tol) * (0.5 * h * w);
            m0 += value;
            m1 += value * offset;
        }
        mu0.push(m0);
        mu1.push(m1);
    }
    Ok(KernelMoments { step: h, mu0, mu1 })
}

/// The inhomogeneous term
/// `I(t) = θ_0 + (1/√2π) ∫_0^∞ [Θ_0(k) + Θ_0(-k)] ik/(1+ik) e^{-i(k²+1)t} dk`
/// on the momentum grid. Returns `θ_0` exactly when the continuum is empty.
pub fn inhom_i(t: f64, initial: &InitialState, kgrid: &MomentumGrid) -> Result<Complex64> {
    initial.validate(kgrid)?;
    Ok(inhom_i_unchecked(t, initial, kgrid))
}

pub(crate) fn inhom_i_unchecked(t: f64, initial: &InitialState, kgrid: &MomentumGrid) -> Complex64 {
    let Some(even) = initial.even_part() else {
        return initial.theta0;
    };
    let norm = (2.0 * PI).sqrt().recip();
    let sum: Complex64 = kgrid
        .nodes
        .iter()
        .zip(&kgrid.weights)
        .zip(even.iter())
        .map(|((&k, &w), &amp)| {
            let contact = Complex64::new(0.0, k) / Complex64::new(1.0, k);
            amp * contact * Complex64::from_polar(w, -(k * k + 1.0) * t)
        })
        .sum();
    initial.theta0 + norm * sum
}

use num_complex::Complex64;

use super::{InitialState, MomentumGrid, TimeGrid};
use crate::drive::{eta_eval, DriveSpec};
use crate::error::{Error, Result};
use crate::kernel::{inhom_i_unchecked, KernelMoments};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Smallest admissible `|1 - η_n w_0|` in the implicit step.
const CONDITIONING_FLOOR: f64 = 1e-12;

/// Output of the time stepper.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// `Y(t_n)`
    pub y: Vec<Complex64>,
    /// `θ(t_n) = θ_0 + 2i ∫_0^{t_n} Y`, trapezoidal on the same nodes.
    pub theta: Vec<Complex64>,
    /// `η(t_n)`
    pub eta: Vec<f64>,
}

/// Convolution weights for piecewise-linear `Y` against the moment table:
/// `(M * Y)(t_n) = Σ_{d=0}^{n-1} w_d Y_{n-d} + tail_{n-1} Y_0`.
pub(crate) struct ConvolutionWeights {
    pub w: Vec<Complex64>,
    pub tail: Vec<Complex64>,
}

impl ConvolutionWeights {
    pub fn new(moments: &KernelMoments, count: usize) -> Self {
        let h = moments.step;
        let alpha = |j: usize| moments.mu0[j] - moments.mu1[j] / h;
        let beta = |j: usize| moments.mu1[j] / h;
        let mut w = Vec::with_capacity(count);
        w.push(alpha(0));
        for d in 1..count {
            w.push(alpha(d) + beta(d - 1));
        }
        let tail = (0..count).map(beta).collect();
        ConvolutionWeights { w, tail }
    }

    /// `(M * Y)(t_n)` from `Y_0..=Y_n`.
    pub fn convolve(&self, y: &[Complex64], n: usize) -> Complex64 {
        history(&self.w, y, n) + self.w[0] * y[n] + self.tail[n - 1] * y[0]
    }
}

/// `Σ_{k=1}^{n-1} w_{n-k} Y_k`, the part of the convolution fixed before step n.
///
/// Four independent accumulators give the compiler room to vectorize while
/// keeping the summation order (and so the result) fixed.
#[inline]
fn history(w: &[Complex64], y: &[Complex64], n: usize) -> Complex64 {
    if n < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let ys = &y[1..n];
    let ws = &w[1..n];
    let len = ys.len();
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let chunks = len / 4;
    for c in 0..chunks {
        for lane in 0..4 {
            let k = 4 * c + lane;
            let a = ws[len - 1 - k];
            let b = ys[k];
            re[lane] += a.re * b.re - a.im * b.im;
            im[lane] += a.re * b.im + a.im * b.re;
        }
    }
    let mut sum = Complex64::new(
        (re[0] + re[1]) + (re[2] + re[3]),
        (im[0] + im[1]) + (im[2] + im[3]),
    );
    for k in 4 * chunks..len {
        sum += ws[len - 1 - k] * ys[k];
    }
    sum
}

fn check_inputs(
    initial: &InitialState,
    tgrid: &TimeGrid,
    kgrid: &MomentumGrid,
    moments: &KernelMoments,
) -> Result<()> {
    if (moments.step - tgrid.step).abs() > 1e-12 * tgrid.step {
        return Err(Error::Validation(format!(
            "moment step {} does not match time step {}",
            moments.step, tgrid.step
        )));
    }
    if moments.count() < tgrid.count {
        return Err(Error::Validation(format!(
            "moment table has {} panels, time grid needs {}",
            moments.count(),
            tgrid.count
        )));
    }
    initial.validate(kgrid)
}

/// Product-integration solve of the integral equation on `tgrid`.
///
/// `Y` is piecewise linear between nodes and integrated exactly against the
/// kernel moments; the constant part `2i` of the kernel is the trapezoidal
/// rule on the same reconstruction. The unknown `Y_n` enters step `n`
/// linearly through the self-weight, so each step is a scalar solve.
pub fn solve(
    drive: &DriveSpec,
    initial: &InitialState,
    tgrid: &TimeGrid,
    kgrid: &MomentumGrid,
    moments: &KernelMoments,
) -> Result<Solution> {
    drive.validate()?;
    check_inputs(initial, tgrid, kgrid, moments)?;
    let h = tgrid.step;
    let count = tgrid.count;
    let eta: Vec<f64> = (0..=count)
        .map(|n| eta_eval(drive, tgrid.time(n)))
        .collect();
    let weights = ConvolutionWeights::new(moments, count);
    let constant_source = matches!(initial.continuum, super::Continuum::Zero);
    let source = |n: usize| {
        if constant_source {
            initial.theta0
        } else {
            inhom_i_unchecked(tgrid.time(n), initial, kgrid)
        }
    };

    let mut y = vec![Complex64::new(0.0, 0.0); count + 1];
    let mut theta = vec![initial.theta0; count + 1];
    y[0] = eta[0] * source(0);
    let self_weight = I * h + weights.w[0];
    let mut integral = Complex64::new(0.0, 0.0);
    for n in 1..=count {
        if eta[n] != 0.0 {
            let denom = 1.0 - eta[n] * self_weight;
            if denom.norm() < CONDITIONING_FLOOR {
                return Err(Error::StepConditioning {
                    step: n,
                    magnitude: denom.norm(),
                });
            }
            let fixed = source(n)
                + 2.0 * I * (integral + 0.5 * h * y[n - 1])
                + history(&weights.w, &y, n)
                + weights.tail[n - 1] * y[0];
            y[n] = eta[n] * fixed / denom;
        }
        integral += 0.5 * h * (y[n - 1] + y[n]);
        theta[n] = initial.theta0 + 2.0 * I * integral;
    }
    Ok(Solution { y, theta, eta })
}

pub fn solve_y(
    drive: &DriveSpec,
    initial: &InitialState,
    tgrid: &TimeGrid,
    kgrid: &MomentumGrid,
    moments: &KernelMoments,
) -> Result<Vec<Complex64>> {
    solve(drive, initial, tgrid, kgrid, moments).map(|s| s.y)
}

/// `θ(t_n) = θ_0 + 2i ∫_0^{t_n} Y` by the trapezoidal rule, which is exact
/// for the piecewise-linear reconstruction used by the solver.
pub fn theta_series(
    y: &[Complex64],
    theta0: Complex64,
    tgrid: &TimeGrid,
) -> Result<Vec<Complex64>> {
    if y.len() != tgrid.count + 1 {
        return Err(Error::Validation(format!(
            "series has {} samples, grid has {}",
            y.len(),
            tgrid.count + 1
        )));
    }
    let h = tgrid.step;
    let mut out = Vec::with_capacity(y.len());
    let mut integral = Complex64::new(0.0, 0.0);
    out.push(theta0);
    for pair in y.windows(2) {
        integral += 0.5 * h * (pair[0] + pair[1]);
        out.push(theta0 + 2.0 * I * integral);
    }
    Ok(out)
}

/// Largest `|Y/η - I - (θ - θ_0) - M*Y|` over nodes with `|η| > eta_floor`.
pub fn consistency_residual(
    solution: &Solution,
    initial: &InitialState,
    tgrid: &TimeGrid,
    kgrid: &MomentumGrid,
    moments: &KernelMoments,
    eta_floor: f64,
) -> Result<f64> {
    check_inputs(initial, tgrid, kgrid, moments)?;
    let weights = ConvolutionWeights::new(moments, tgrid.count);
    let mut worst = 0.0f64;
    for n in 0..=tgrid.count {
        if solution.eta[n].abs() <= eta_floor {
            continue;
        }
        let memory = if n == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            weights.convolve(&solution.y, n)
        };
        let lhs = solution.y[n] / solution.eta[n];
        let rhs = inhom_i_unchecked(tgrid.time(n), initial, kgrid)
            + (solution.theta[n] - initial.theta0)
            + memory;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

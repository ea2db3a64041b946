use std::f64::consts::PI;

use num_complex::Complex64;

use super::{bound_state, continuum_state, MomentumGrid, RunResult, SpectrumSnapshot};
use crate::error::{Error, Result};

/// `ψ(x, t) = θ u_b(x) e^{it} + ∫ Θ(k, t) u(k, x) e^{-ik²t} dk`.
pub fn psi_at(
    x: f64,
    theta: Complex64,
    snapshot: &SpectrumSnapshot,
    kgrid: &MomentumGrid,
) -> Complex64 {
    let t = snapshot.time;
    let mut psi = theta * bound_state(x) * Complex64::from_polar(1.0, t);
    let negative = snapshot.negative_or_positive();
    for (i, (&k, &w)) in kgrid.nodes.iter().zip(&kgrid.weights).enumerate() {
        let amp =
            snapshot.positive[i] * continuum_state(k, x) + negative[i] * continuum_state(-k, x);
        psi += amp * Complex64::from_polar(w, -k * k * t);
    }
    psi
}

/// Composite Simpson rule with spacing at most `max_step`.
fn simpson<F: FnMut(f64) -> f64>(lo: f64, hi: f64, max_step: f64, mut f: F) -> f64 {
    let mut panels = ((hi - lo) / max_step).ceil() as usize;
    panels += panels % 2;
    let panels = panels.max(2);
    let dx = (hi - lo) / panels as f64;
    let mut sum = f(lo) + f(hi);
    for j in 1..panels {
        sum += if j % 2 == 1 { 4.0 } else { 2.0 } * f(lo + j as f64 * dx);
    }
    sum * dx / 3.0
}

/// `∫_lo^hi |ψ(x, t)|² dx` from the stored snapshot at time `t`.
pub fn localization_probability(
    result: &RunResult,
    kgrid: &MomentumGrid,
    lo: f64,
    hi: f64,
    t: f64,
) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Validation(format!(
            "degenerate interval [{lo}, {hi}]"
        )));
    }
    if kgrid.len() != result.meta.nk || kgrid.kmax != result.meta.kmax {
        return Err(Error::Validation(
            "momentum grid differs from the one used by the run".into(),
        ));
    }
    let index = result
        .meta
        .tgrid
        .index_of(t)
        .ok_or_else(|| Error::Validation(format!("t = {t} is not a grid time")))?;
    let snapshot = result
        .spectra
        .iter()
        .find(|s| s.index == index)
        .ok_or_else(|| Error::Validation(format!("no spectrum snapshot stored at t = {t}")))?;
    let theta = result.theta[index];
    let max_step = 0.05f64.min(PI / (4.0 * kgrid.kmax));
    let density = |x: f64| psi_at(x, theta, snapshot, kgrid).norm_sqr();
    // |ψ|² has a cusp at the well, keep x = 0 on a panel edge
    let total = if lo < 0.0 && hi > 0.0 {
        simpson(lo, 0.0, max_step, density) + simpson(0.0, hi, max_step, density)
    } else {
        simpson(lo, hi, max_step, density)
    };
    Ok(total)
}

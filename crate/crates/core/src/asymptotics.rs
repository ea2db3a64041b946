//! Decay-rate and tail-exponent extraction from survival series, and the
//! closed-form small-amplitude rates they are compared against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest samples accepted in a fit window.
pub const MIN_FIT_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// Exponential rate `Γ` in `P ~ e^{-Γt}`.
    Rate,
    /// Power `α` in `P ~ t^{α}`.
    Exponent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub kind: RateKind,
    pub value: f64,
    pub window: (f64, f64),
    pub rms_residual: f64,
    pub n_points: usize,
    pub averaged: bool,
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Fit("series needs at least two samples".into()));
    }
    let h = times[1] - times[0];
    let span = times[times.len() - 1] - times[0];
    let expected = h * (times.len() - 1) as f64;
    if !(h > 0.0) || (span - expected).abs() > 1e-8 * span {
        return Err(Error::Fit(
            "period averaging needs a uniform time grid".into(),
        ));
    }
    Ok(h)
}

/// Running mean over one `period`, centred on each sample:
/// `(1/p) ∫_{t-p/2}^{t+p/2} P`, with `P` linear between samples. Only
/// samples whose full window lies inside the series are returned.
pub fn period_average(times: &[f64], values: &[f64], period: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if times.len() != values.len() {
        return Err(Error::Fit("times and values differ in length".into()));
    }
    if !(period > 0.0) {
        return Err(Error::Fit(format!(
            "averaging period must be positive, got {period}"
        )));
    }
    let h = uniform_step(times)?;
    let t0 = times[0];
    let mut cumulative = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        cumulative.push(acc);
    }
    let last = values.len() - 1;
    let integral_to = |t: f64| -> f64 {
        let x = (t - t0) / h;
        let j = (x.floor() as usize).min(last - 1);
        let tau = (x - j as f64) * h;
        cumulative[j] + tau * values[j] + tau * tau / (2.0 * h) * (values[j + 1] - values[j])
    };
    let half = 0.5 * period;
    let (lo, hi) = (t0 + half, times[last] - half);
    let mut out_t = Vec::new();
    let mut out_v = Vec::new();
    for (&t, _) in times.iter().zip(values) {
        if t >= lo && t <= hi {
            out_t.push(t);
            out_v.push((integral_to(t + half) - integral_to(t - half)) / period);
        }
    }
    if out_t.is_empty() {
        return Err(Error::Fit(
            "series is shorter than one averaging period".into(),
        ));
    }
    Ok((out_t, out_v))
}

/// Weighted least-squares line; returns (slope, intercept, weighted rms residual).
fn line_fit(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        sxx += wi * (xi - mx) * (xi - mx);
        sxy += wi * (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| wi * (yi - intercept - slope * xi).powi(2))
        .sum();
    (slope, intercept, (ss / sw).sqrt())
}

fn window_samples(
    p: &[f64],
    times: &[f64],
    window: (f64, f64),
    average_period: Option<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if p.len() != times.len() {
        return Err(Error::Fit("times and values differ in length".into()));
    }
    if !(window.0 < window.1) {
        return Err(Error::Fit(format!(
            "empty fit window [{}, {}]",
            window.0, window.1
        )));
    }
    let (t, v) = match average_period {
        Some(period) => period_average(times, p, period)?,
        None => (times.to_vec(), p.to_vec()),
    };
    let slack = 1e-9 * window.1.abs().max(1.0);
    let (t, v): (Vec<f64>, Vec<f64>) = t
        .into_iter()
        .zip(v)
        .filter(|(ti, _)| *ti >= window.0 - slack && *ti <= window.1 + slack)
        .unzip();
    if t.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "window [{}, {}] holds {} samples, need {MIN_FIT_POINTS}",
            window.0,
            window.1,
            t.len()
        )));
    }
    if let Some(bad) = v.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Fit(format!(
            "nonpositive survival {} at t = {}",
            v[bad], t[bad]
        )));
    }
    Ok((t, v))
}

/// Fits `ln P = c - Γ t` on `window`. With `average_period` set, `P` is
/// first replaced by its running mean over that period.
pub fn fit_exp_rate(
    p: &[f64],
    times: &[f64],
    window: (f64, f64),
    average_period: Option<f64>,
) -> Result<RateEstimate> {
    let (t, v) = window_samples(p, times, window, average_period)?;
    let logs: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let (slope, _, rms) = line_fit(&t, &logs, &vec![1.0; t.len()]);
    Ok(RateEstimate {
        kind: RateKind::Rate,
        value: -slope,
        window,
        rms_residual: rms,
        n_points: t.len(),
        averaged: average_period.is_some(),
    })
}

/// Fits `ln P = c + α ln t` on `window`. Samples are weighted by `1/t` so
/// each decade counts equally on a uniform time grid.
pub fn fit_power_tail(
    p: &[f64],
    times: &[f64],
    window: (f64, f64),
    average_period: Option<f64>,
) -> Result<RateEstimate> {
    if !(window.0 > 0.0) {
        return Err(Error::Fit("power-law window must start at t > 0".into()));
    }
    let (t, v) = window_samples(p, times, window, average_period)?;
    let x: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let y: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let w: Vec<f64> = t.iter().map(|x| 1.0 / x).collect();
    let (slope, _, rms) = line_fit(&x, &y, &w);
    Ok(RateEstimate {
        kind: RateKind::Exponent,
        value: slope,
        window,
        rms_residual: rms,
        n_points: t.len(),
        averaged: average_period.is_some(),
    })
}

/// Tail window: the earliest `t_lo` after which the local log-log slope of
/// the period-averaged series stays within 0.2 of its mean over a full
/// decade, with that mean below -1. `None` if the run holds no such decade.
pub fn default_tail_window(times: &[f64], p: &[f64], period: f64) -> Option<(f64, f64)> {
    let (t, v) = period_average(times, p, period).ok()?;
    let t_end = *t.last()?;
    let start = t.iter().copied().find(|&x| x > 0.0)?.max(3.0 * period);
    if t_end < 10.0 * start {
        return None;
    }
    // log-spaced probes, 20 per decade
    let per_decade = 20.0;
    let n = ((t_end / start).log10() * per_decade).floor() as usize;
    let at = |x: f64| -> f64 {
        let j = t.partition_point(|&ti| ti < x).min(t.len() - 1);
        v[j]
    };
    let probes: Vec<(f64, f64)> = (0..=n)
        .map(|j| start * 10f64.powf(j as f64 / per_decade))
        .map(|x| (x.ln(), at(x)))
        .collect();
    if probes.iter().any(|&(_, y)| !(y > 0.0)) {
        return None;
    }
    let slopes: Vec<f64> = probes
        .windows(2)
        .map(|w| (w[1].1.ln() - w[0].1.ln()) / (w[1].0 - w[0].0))
        .collect();
    let decade = per_decade as usize;
    for lo in 0..slopes.len().saturating_sub(decade - 1) {
        let run = &slopes[lo..lo + decade];
        let mean = run.iter().sum::<f64>() / run.len() as f64;
        if mean < -1.0 && run.iter().all(|s| (s - mean).abs() <= 0.2) {
            return Some((probes[lo].0.exp(), t_end));
        }
    }
    None
}

/// `P(T) / P(3T/4)`, each end replaced by the mean of `P` over the drive
/// period that ends there.
pub fn plateau_ratio(times: &[f64], p: &[f64], period: f64) -> Result<f64> {
    let (t, v) = period_average(times, p, period)?;
    let (first, last) = match (t.first(), t.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::Fit("run shorter than one drive period".into())),
    };
    let t_end = times[times.len() - 1];
    let slack = times[1] - times[0];
    let at = |centre: f64| -> Result<f64> {
        if centre < first - slack || centre > last + slack {
            return Err(Error::Fit(format!(
                "no full averaging window ends at {}",
                centre + 0.5 * period
            )));
        }
        let j = t.partition_point(|&x| x < centre).min(t.len() - 1);
        let j = if j > 0 && (t[j - 1] - centre).abs() < (t[j] - centre).abs() {
            j - 1
        } else {
            j
        };
        Ok(v[j])
    };
    let start = times[0];
    let late = at(t_end - 0.5 * period)?;
    let early = at(start + 0.75 * (t_end - start) - 0.5 * period)?;
    if !(early > 0.0) {
        return Err(Error::Fit("survival vanished before 3T/4".into()));
    }
    Ok(late / early)
}

/// Exponential window: from three drive periods until the averaged survival
/// drops below `max(10 * tail floor, 1e-8)`, the floor being the survival at
/// the start of the detected power-law tail (zero when there is none).
pub fn default_exp_window(times: &[f64], p: &[f64], period: f64) -> Result<(f64, f64)> {
    let (t, v) = period_average(times, p, period)?;
    let lo = (3.0 * period).max(t[0]);
    let floor = match default_tail_window(times, p, period) {
        Some((tail_start, _)) => {
            let j = t.partition_point(|&x| x < tail_start).min(t.len() - 1);
            v[j]
        }
        None => 0.0,
    };
    let threshold = (10.0 * floor).max(1e-8);
    let hi = t
        .iter()
        .zip(&v)
        .find(|(ti, vi)| **ti > lo && **vi < threshold)
        .map_or(*t.last().expect("nonempty"), |(ti, _)| *ti);
    if hi <= lo {
        return Err(Error::Fit("run too short for an exponential window".into()));
    }
    Ok((lo, hi))
}

/// Small-amplitude rate away from resonances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallRRate {
    /// Photon order: the integer part of `1/ω + 1`.
    pub n: u32,
    /// Rate in the scaled time `T = r^{2n} t`.
    pub gamma_hat: f64,
    /// Implied rate in unscaled time, `r^{2n} gamma_hat`.
    pub gamma: f64,
}

pub fn gamma_smallr(omega: f64, r: f64) -> Result<SmallRRate> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Validation(format!(
            "omega must be positive, got {omega}"
        )));
    }
    if r == 0.0 || !r.is_finite() {
        return Err(Error::Validation(format!(
            "r must be finite and nonzero, got {r}"
        )));
    }
    let inverse = 1.0 / omega;
    let nearest = inverse.round();
    if nearest >= 1.0 && (inverse - nearest).abs() <= 1e-12 * inverse.max(1.0) {
        return Err(Error::Resonance { inverse });
    }
    let n = inverse.floor() as u32 + 1;
    let nw = n as f64 * omega;
    let product: f64 = (1..n)
        .map(|m| (1.0 - (1.0 - m as f64 * omega).sqrt()).powi(2))
        .product();
    let gamma_hat = 2f64.powi(2 - 2 * n as i32) * (nw - 1.0).sqrt() / (nw * product);
    Ok(SmallRRate {
        n,
        gamma_hat,
        gamma: r.abs().powi(2 * n as i32) * gamma_hat,
    })
}

/// Rate on the resonance track `ω = 1 + r²/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRate {
    pub omega: f64,
    /// Rate in the scaled time `T = r³ t`.
    pub scaled_rate: f64,
    /// Implied rate in unscaled time, `r³ scaled_rate`.
    pub rate: f64,
}

pub fn resonance_constant() -> f64 {
    2f64.powf(0.25) / 8.0 - 2f64.powf(0.75) / 16.0
}

pub fn gamma_resonance(r: f64) -> Result<ResonanceRate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Validation(format!("r must be positive, got {r}")));
    }
    let scaled_rate = resonance_constant();
    Ok(ResonanceRate {
        omega: 1.0 + r * r / std::f64::consts::SQRT_2,
        scaled_rate,
        rate: r.powi(3) * scaled_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(h: f64, t: f64) -> Vec<f64> {
        (0..=(t / h).round() as usize)
            .map(|n| n as f64 * h)
            .collect()
    }

    #[test]
    fn exact_exponential() {
        let t = grid(0.1, 300.0);
        let p: Vec<f64> = t.iter().map(|x| (-0.01 * x).exp()).collect();
        let est = fit_exp_rate(&p, &t, (10.0, 290.0), None).unwrap();
        assert!((est.value - 0.01).abs() < 1e-12);
        assert!(est.rms_residual < 1e-12);
        let avg = fit_exp_rate(&p, &t, (10.0, 290.0), Some(std::f64::consts::PI)).unwrap();
        assert!((avg.value - 0.01).abs() < 1e-9);
    }

    #[test]
    fn modulated_exponential_with_averaging() {
        let t = grid(0.01, 400.0);
        let p: Vec<f64> = t
            .iter()
            .map(|x| (-0.01 * x).exp() * (1.0 + 0.05 * (2.0 * x).sin()))
            .collect();
        let est = fit_exp_rate(&p, &t, (20.0, 380.0), Some(std::f64::consts::PI)).unwrap();
        assert!((est.value - 0.01).abs() < 5e-4, "{}", est.value);
        assert!((est.value - 0.01).abs() / 0.01 < 0.05);
    }

    #[test]
    fn exact_power_law() {
        let t = grid(0.5, 2000.0);
        let p: Vec<f64> = t
            .iter()
            .map(|x| if *x > 0.0 { x.powi(-3) } else { 1.0 })
            .collect();
        let est = fit_power_tail(&p, &t, (200.0, 2000.0), None).unwrap();
        assert!((est.value + 3.0).abs() < 1e-10);
        assert!(est.rms_residual < 1e-10);
    }

    #[test]
    fn modulated_power_law_with_averaging() {
        let period = 2.0 * std::f64::consts::PI;
        let t = grid(0.05, 2000.0);
        let p: Vec<f64> = t
            .iter()
            .map(|x| {
                if *x > 0.0 {
                    x.powi(-3) * (1.0 + 0.1 * x.cos())
                } else {
                    1.0
                }
            })
            .collect();
        let est = fit_power_tail(&p, &t, (200.0, 1990.0), Some(period)).unwrap();
        assert!((est.value + 3.0).abs() < 0.2, "{}", est.value);
    }

    #[test]
    fn fit_errors() {
        let t = grid(1.0, 100.0);
        let mut p: Vec<f64> = t.iter().map(|x| (-0.1 * x).exp()).collect();
        assert!(fit_exp_rate(&p, &t, (0.0, 10.0), None).is_err());
        p[50] = 0.0;
        assert!(fit_exp_rate(&p, &t, (10.0, 90.0), None).is_err());
        assert!(fit_power_tail(&p, &t, (0.0, 90.0), None).is_err());
    }

    #[test]
    fn default_windows_on_synthetic_decay() {
        let period = std::f64::consts::PI;
        let t = grid(0.05, 2000.0);
        // exponential until ~t = 80, then a t^{-3} floor
        let p: Vec<f64> = t
            .iter()
            .map(|&x| (-0.25 * x).exp() + 1e-3 * (x + 1.0).powi(-3))
            .collect();
        let tail = default_tail_window(&t, &p, period).unwrap();
        assert!(tail.0 > 80.0 && tail.0 < 200.0, "{tail:?}");
        let exp = default_exp_window(&t, &p, period).unwrap();
        assert!((exp.0 - 3.0 * period).abs() < 1e-9);
        assert!(exp.1 < tail.0, "{exp:?}");
        let est = fit_exp_rate(&p, &t, exp, Some(period)).unwrap();
        assert!((est.value - 0.25).abs() < 0.01);
    }

    #[test]
    fn plateau_ratio_of_known_curves() {
        let period = 2.0;
        let t = grid(0.01, 100.0);
        let flat: Vec<f64> = t.iter().map(|&x| 0.6 + 0.1 * (PI * x).sin()).collect();
        assert!((plateau_ratio(&t, &flat, period).unwrap() - 1.0).abs() < 1e-9);
        let decay: Vec<f64> = t
            .iter()
            .map(|&x| (-0.01 * x).exp() * (1.0 + 0.2 * (PI * x).cos()))
            .collect();
        // window means of e^{-γt} over [T-p, T] and [3T/4-p, 3T/4]
        let expected = (-0.01f64 * 25.0).exp();
        assert!((plateau_ratio(&t, &decay, period).unwrap() - expected).abs() < 1e-3);
        let short = grid(0.01, 2.0);
        assert!(plateau_ratio(&short, &vec![1.0; short.len()], period).is_err());
        let off_grid: Vec<f64> = t.iter().map(|&x| 0.5 + 0.1 * (2.0 * x).sin()).collect();
        assert!((plateau_ratio(&t, &off_grid, PI).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn small_r_rates() {
        let two = gamma_smallr(2.0, 0.1).unwrap();
        assert_eq!(two.n, 1);
        assert!((two.gamma_hat - 0.5).abs() < 1e-15);
        assert!((two.gamma - 5.0e-3).abs() < 1e-15);
        let sub = gamma_smallr(0.7, 0.1).unwrap();
        assert_eq!(sub.n, 2);
        let expected = 0.25 * 0.4f64.sqrt() / (1.4 * (1.0 - 0.3f64.sqrt()).powi(2));
        assert!((sub.gamma_hat - expected).abs() < 1e-14);
        assert!((sub.gamma_hat - 0.55212).abs() < 1e-4);
        assert!((sub.gamma - 1e-4 * expected).abs() < 1e-15);
        assert!(matches!(
            gamma_smallr(0.5, 0.1),
            Err(Error::Resonance { .. })
        ));
        assert!(matches!(
            gamma_smallr(1.0, 0.1),
            Err(Error::Resonance { .. })
        ));
        assert!(gamma_smallr(2.0, 0.0).is_err());
    }

    #[test]
    fn resonance_rate() {
        let res = gamma_resonance(0.3).unwrap();
        assert!((res.scaled_rate - 0.043539).abs() < 1e-6);
        assert!(res.scaled_rate > 0.0);
        assert!((res.omega - (1.0 + 0.09 / std::f64::consts::SQRT_2)).abs() < 1e-15);
        assert!((res.rate - 0.027 * res.scaled_rate).abs() < 1e-15);
        assert!(gamma_resonance(0.0).is_err());
    }

    proptest! {
        #[test]
        fn gamma_hat_positive_off_resonance(omega in 0.05f64..5.0) {
            let inverse = 1.0 / omega;
            prop_assume!((inverse - inverse.round()).abs() > 1e-6);
            let rate = gamma_smallr(omega, 0.1).unwrap();
            prop_assert!(rate.gamma_hat > 0.0 && rate.gamma_hat.is_finite());
            if omega > 1.0 {
                prop_assert_eq!(rate.n, 1);
                prop_assert!((rate.gamma_hat - (omega - 1.0).sqrt() / omega).abs() < 1e-14);
            }
        }

        #[test]
        fn planted_rates_are_recovered(rate in 1e-4f64..0.1) {
            let t = grid(0.5, 200.0);
            let p: Vec<f64> = t.iter().map(|x| 0.7 * (-rate * x).exp()).collect();
            let est = fit_exp_rate(&p, &t, (5.0, 195.0), None).unwrap();
            prop_assert!((est.value - rate).abs() < 1e-12 * rate.max(1.0));
            prop_assert!(est.rms_residual < 1e-12);
        }
    }
}

use num_complex::Complex64;
use rayon::prelude::*;

use super::{emission_coefficient, Continuum, InitialState, MomentumGrid, TimeGrid};
use crate::error::{Error, Result};

/// Momentum nodes handled by one worker.
const CHUNK: usize = 64;
/// Phase recurrences are re-anchored to a direct evaluation this often.
const REANCHOR: usize = 512;

/// Continuum amplitudes `Θ(k, t)` at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSnapshot {
    pub time: f64,
    pub index: usize,
    /// `Θ(k_i, t)` at the positive nodes.
    pub positive: Vec<Complex64>,
    /// `Θ(-k_i, t)`, present only for a general (non-even) initial continuum.
    pub negative: Option<Vec<Complex64>>,
}

impl SpectrumSnapshot {
    /// `|Θ(k, t)|²` at the positive nodes.
    pub fn abs2(&self) -> Vec<f64> {
        self.positive.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `Θ(-k_i, t)`.
    pub fn negative_or_positive(&self) -> &[Complex64] {
        self.negative.as_deref().unwrap_or(&self.positive)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    /// `∫ |Θ(k, t_n)|² dk` over the whole real line: the grid sum plus the
    /// leading-order estimate of the weight above `kmax`.
    pub ionized: Vec<f64>,
    pub snapshots: Vec<SpectrumSnapshot>,
}

/// `∫_kmax^∞ k² / (1+k²)³ dk`.
pub(crate) fn tail_moment(kmax: f64) -> f64 {
    // antiderivative of k²/(1+k²)³ is (atan k)/8 + k(k² - 1)/(8(1+k²)²)
    let at = |k: f64| k.atan() / 8.0 + k * (k * k - 1.0) / (8.0 * (1.0 + k * k).powi(2));
    std::f64::consts::PI / 16.0 - at(kmax)
}

/// `∫_0^h e^{iντ} dτ` and `(1/h) ∫_0^h τ e^{iντ} dτ`.
fn panel_factors(nu: f64, h: f64) -> (Complex64, Complex64) {
    let x = nu * h;
    if x < 0.1 {
        let ix = Complex64::new(0.0, x);
        let mut power = Complex64::new(1.0, 0.0);
        let mut factorial = 1.0;
        let mut e0 = Complex64::new(0.0, 0.0);
        let mut e1 = Complex64::new(0.0, 0.0);
        for n in 0..14 {
            if n > 0 {
                power *= ix;
                factorial *= n as f64;
            }
            e0 += power / (factorial * (n + 1) as f64);
            e1 += power / (factorial * (n + 2) as f64);
        }
        (e0 * h, e1 * h)
    } else {
        let i_nu = Complex64::new(0.0, nu);
        let rot = Complex64::from_polar(1.0, x);
        let e0 = (rot - 1.0) / i_nu;
        let e1 = (rot * h / i_nu - e0 / i_nu) / h;
        (e0, e1)
    }
}

/// Integrates `dΘ/dt = c(k) Y(t) e^{i(1+k²)t}` exactly against the
/// piecewise-linear `Y`, node by node, and accumulates the ionized fraction.
pub fn spectrum_series(
    y: &[Complex64],
    initial: &InitialState,
    tgrid: &TimeGrid,
    kgrid: &MomentumGrid,
    snapshot_times: &[f64],
) -> Result<SpectrumSeries> {
    if y.len() != tgrid.count + 1 {
        return Err(Error::Validation(format!(
            "series has {} samples, grid has {}",
            y.len(),
            tgrid.count + 1
        )));
    }
    initial.validate(kgrid)?;
    let mut snapshot_index = Vec::with_capacity(snapshot_times.len());
    for &t in snapshot_times {
        let n = tgrid.nearest_index(t).ok_or_else(|| {
            Error::Validation(format!(
                "snapshot time {t} is outside [0, {}]",
                tgrid.horizon()
            ))
        })?;
        snapshot_index.push(n);
    }

    let h = tgrid.step;
    let count = tgrid.count;
    let zero = Complex64::new(0.0, 0.0);
    let (start_pos, start_neg): (Vec<Complex64>, Option<Vec<Complex64>>) = match &initial.continuum
    {
        Continuum::Zero => (vec![zero; kgrid.len()], None),
        Continuum::Even(v) => (v.clone(), None),
        Continuum::General { positive, negative } => (positive.clone(), Some(negative.clone())),
    };
    let even = start_neg.is_none();

    struct ChunkOut {
        ionized: Vec<f64>,
        snaps: Vec<Vec<(Complex64, Complex64)>>,
    }

    let node_ids: Vec<usize> = (0..kgrid.len()).collect();
    let chunks: Vec<ChunkOut> = node_ids
        .par_chunks(CHUNK)
        .map(|ids| {
            let mut ionized = vec![0.0; count + 1];
            let mut snaps = vec![Vec::with_capacity(ids.len()); snapshot_index.len()];
            for &i in ids {
                let k = kgrid.nodes[i];
                let w = kgrid.weights[i];
                let nu = 1.0 + k * k;
                let c = emission_coefficient(k);
                let (e0, e1) = panel_factors(nu, h);
                let rot = Complex64::from_polar(1.0, nu * h);
                let p0 = start_pos[i];
                let m0 = start_neg.as_ref().map_or(p0, |v| v[i]);
                let mut acc = zero;
                let mut phase = Complex64::new(1.0, 0.0);
                let mut record = |n: usize, acc: Complex64| {
                    let plus = p0 + c * acc;
                    let minus = m0 + c * acc;
                    ionized[n] += if even {
                        2.0 * w * plus.norm_sqr()
                    } else {
                        w * (plus.norm_sqr() + minus.norm_sqr())
                    };
                    for (slot, &target) in snapshot_index.iter().enumerate() {
                        if target == n {
                            snaps[slot].push((plus, minus));
                        }
                    }
                };
                record(0, acc);
                for m in 0..count {
                    if m % REANCHOR == 0 {
                        phase = Complex64::from_polar(1.0, nu * tgrid.time(m));
                    }
                    acc += phase * (y[m] * (e0 - e1) + y[m + 1] * e1);
                    phase *= rot;
                    record(m + 1, acc);
                }
            }
            ChunkOut { ionized, snaps }
        })
        .collect();

    // Beyond kmax, integration by parts gives Θ(k, t) ≈ c(k) [Y(t) e^{iνt} - Y(0)] / (iν);
    // the non-oscillatory part of its weight closes the momentum integral.
    let closure = 4.0 / std::f64::consts::PI * tail_moment(kgrid.kmax);
    let mut ionized: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(n, yn)| {
            if n == 0 {
                0.0
            } else {
                closure * (yn.norm_sqr() + y[0].norm_sqr())
            }
        })
        .collect();
    let mut snapshots: Vec<SpectrumSnapshot> = snapshot_index
        .iter()
        .map(|&n| SpectrumSnapshot {
            time: tgrid.time(n),
            index: n,
            positive: Vec::with_capacity(kgrid.len()),
            negative: if even {
                None
            } else {
                Some(Vec::with_capacity(kgrid.len()))
            },
        })
        .collect();
    for chunk in chunks {
        for (total, part) in ionized.iter_mut().zip(&chunk.ionized) {
            *total += part;
        }
        for (snap, values) in snapshots.iter_mut().zip(chunk.snaps) {
            for (plus, minus) in values {
                snap.positive.push(plus);
                if let Some(neg) = snap.negative.as_mut() {
                    neg.push(minus);
                }
            }
        }
    }
    Ok(SpectrumSeries { ionized, snapshots })
}

//! Periodic forcing `η(t) = Σ_{j≥1} (C_j e^{iωjt} + conj(C_j) e^{-iωjt})`
//! and the shift-genericity test on its Fourier coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A zero-mean, real, bounded periodic drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriveSpec {
    /// `r sin(ωt)`
    Harmonic { r: f64, omega: f64 },
    /// Finite Fourier series with coefficients `C_1..C_J`.
    TrigPoly { omega: f64, coeffs: Vec<Complex64> },
    /// `2rλ (λ - cos ωt) / (1 + λ² - 2λ cos ωt)`, with `C_n = -r λ^n`.
    GeometricPole { r: f64, lambda: f64, omega: f64 },
    /// Tabulated coefficients `C_1..C_N` of a drive known only through its
    /// Fourier series (possibly truncated).
    FourierTable { omega: f64, coeffs: Vec<Complex64> },
}

impl DriveSpec {
    pub fn harmonic(r: f64, omega: f64) -> Self {
        DriveSpec::Harmonic { r, omega }
    }

    pub fn geometric_pole(r: f64, lambda: f64, omega: f64) -> Self {
        DriveSpec::GeometricPole { r, lambda, omega }
    }

    pub fn omega(&self) -> f64 {
        match *self {
            DriveSpec::Harmonic { omega, .. }
            | DriveSpec::TrigPoly { omega, .. }
            | DriveSpec::GeometricPole { omega, .. }
            | DriveSpec::FourierTable { omega, .. } => omega,
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega()
    }

    /// Checks the parameter ranges. A drive with all coefficients zero is
    /// accepted here (it is the trivial, conserving case).
    pub fn validate(&self) -> Result<()> {
        let omega = self.omega();
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Validation(format!(
                "drive omega must be positive, got {omega}"
            )));
        }
        match self {
            DriveSpec::Harmonic { r, .. } => finite("drive r", *r),
            DriveSpec::GeometricPole { r, lambda, .. } => {
                finite("drive r", *r)?;
                if !(*lambda > 0.0 && *lambda < 1.0) {
                    return Err(Error::Validation(format!(
                        "drive lambda must lie in (0, 1), got {lambda}"
                    )));
                }
                Ok(())
            }
            DriveSpec::TrigPoly { coeffs, .. } | DriveSpec::FourierTable { coeffs, .. } => {
                if coeffs
                    .iter()
                    .any(|c| !c.re.is_finite() || !c.im.is_finite())
                {
                    return Err(Error::Validation(
                        "drive coefficients must be finite".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Highest angular frequency that the time grid has to resolve. For the
    /// geometric pole the spectrum decays like `λ^n`, so the effective
    /// bandwidth is about `ω / (1 - λ)`.
    pub fn max_frequency(&self) -> f64 {
        match self {
            DriveSpec::Harmonic { omega, .. } => *omega,
            DriveSpec::TrigPoly { omega, coeffs } | DriveSpec::FourierTable { omega, coeffs } => {
                let top = coeffs
                    .iter()
                    .rposition(|c| c.norm() > 0.0)
                    .map_or(1, |j| j + 1);
                omega * top as f64
            }
            DriveSpec::GeometricPole { lambda, omega, .. } => omega / (1.0 - lambda),
        }
    }

    /// True when every coefficient vanishes.
    pub fn is_trivial(&self) -> bool {
        match self {
            DriveSpec::Harmonic { r, .. } | DriveSpec::GeometricPole { r, .. } => *r == 0.0,
            DriveSpec::TrigPoly { coeffs, .. } | DriveSpec::FourierTable { coeffs, .. } => {
                coeffs.iter().all(|c| c.norm() == 0.0)
            }
        }
    }

    /// Genericity certificate. Harmonic drives and trigonometric polynomials
    /// are decided without numerical work: the top coefficient `C_J` is shifted
    /// onto `e_1` after `J - 1` applications of the shift.
    pub fn genericity(
        &self,
        trunc: usize,
        shifts: usize,
        tol: f64,
    ) -> Result<GenericityCertificate> {
        match self {
            DriveSpec::Harmonic { r, .. } if *r != 0.0 => {
                Ok(GenericityCertificate::exact(trunc, shifts))
            }
            DriveSpec::TrigPoly { coeffs, .. } if coeffs.iter().any(|c| c.norm() > 0.0) => {
                Ok(GenericityCertificate::exact(trunc, shifts))
            }
            _ => {
                let coeffs = fourier_of(self, trunc + shifts)?;
                is_generic(&coeffs, trunc, shifts, tol)
            }
        }
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must be finite, got {x}")))
    }
}

fn series(omega: f64, coeffs: &[Complex64], t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| 2.0 * (c * Complex64::from_polar(1.0, omega * (j + 1) as f64 * t)).re)
        .sum()
}

pub fn eta_eval(spec: &DriveSpec, t: f64) -> f64 {
    match spec {
        DriveSpec::Harmonic { r, omega } => r * (omega * t).sin(),
        DriveSpec::TrigPoly { omega, coeffs } | DriveSpec::FourierTable { omega, coeffs } => {
            series(*omega, coeffs, t)
        }
        DriveSpec::GeometricPole { r, lambda, omega } => {
            let c = (omega * t).cos();
            2.0 * r * lambda * (lambda - c) / (1.0 + lambda * lambda - 2.0 * lambda * c)
        }
    }
}

/// Coefficients `C_1..C_{n_max}` (zero-padded past the end of a finite table).
pub fn fourier_of(spec: &DriveSpec, n_max: usize) -> Result<Vec<Complex64>> {
    if n_max == 0 {
        return Err(Error::Validation("n_max must be at least 1".into()));
    }
    let zero = Complex64::new(0.0, 0.0);
    Ok(match spec {
        DriveSpec::Harmonic { r, .. } => {
            let mut c = vec![zero; n_max];
            c[0] = Complex64::new(0.0, -0.5 * r);
            c
        }
        DriveSpec::TrigPoly { coeffs, .. } | DriveSpec::FourierTable { coeffs, .. } => (0..n_max)
            .map(|j| coeffs.get(j).copied().unwrap_or(zero))
            .collect(),
        DriveSpec::GeometricPole { r, lambda, .. } => {
            let mut power = 1.0;
            (0..n_max)
                .map(|_| {
                    power *= lambda;
                    Complex64::new(-r * power, 0.0)
                })
                .collect()
        }
    })
}

/// Coefficients `C_1..C_{n_max}` of one period of samples
/// `η(2π m / (ω · samples.len()))` by a discrete Fourier transform.
pub fn fourier_from_samples(samples: &[f64], n_max: usize) -> Result<Vec<Complex64>> {
    let n = samples.len();
    if n_max == 0 || n < 2 * n_max + 1 {
        return Err(Error::Validation(format!(
            "{n} samples cannot resolve {n_max} harmonics"
        )));
    }
    let mut buffer: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    let scale = 1.0 / n as f64;
    Ok(buffer[1..=n_max].iter().map(|c| c * scale).collect())
}

/// Samples of one drive period on a uniform grid of `count` points.
pub fn sample_period(spec: &DriveSpec, count: usize) -> Vec<f64> {
    let period = spec.period();
    (0..count)
        .map(|m| eta_eval(spec, period * m as f64 / count as f64))
        .collect()
}

/// Evidence for or against shift-genericity at a finite truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericityCertificate {
    pub generic: bool,
    pub residual: f64,
    pub trunc: usize,
    pub shifts: usize,
    /// Residual after each additional shift was admitted, `curve[n]` using
    /// `T^0 C .. T^n C`. Empty for exact decisions.
    pub curve: Vec<f64>,
    pub exact: bool,
}

impl GenericityCertificate {
    fn exact(trunc: usize, shifts: usize) -> Self {
        GenericityCertificate {
            generic: true,
            residual: 0.0,
            trunc,
            shifts,
            curve: Vec::new(),
            exact: true,
        }
    }
}

/// Relative size below which a projected shift is treated as dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn project_out(basis: &[Vec<Complex64>], v: &mut [Complex64]) {
    // two passes of modified Gram–Schmidt
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
    }
}

fn residual_curve(coeffs: &[Complex64], trunc: usize, shifts: usize) -> Result<Vec<f64>> {
    if shifts == 0 || trunc < shifts {
        return Err(Error::Validation(format!(
            "need trunc >= shifts >= 1, got trunc={trunc}, shifts={shifts}"
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    let window = |n: usize| -> Vec<Complex64> {
        (0..trunc)
            .map(|i| coeffs.get(n + i).copied().unwrap_or(zero))
            .collect()
    };
    if norm(&window(0)) == 0.0 {
        return Err(Error::Validation(
            "coefficient window is identically zero".into(),
        ));
    }
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut curve = Vec::with_capacity(shifts);
    let mut e1 = vec![zero; trunc];
    e1[0] = Complex64::new(1.0, 0.0);
    for n in 0..shifts {
        let mut v = window(n);
        let original = norm(&v);
        if original > 0.0 {
            project_out(&basis, &mut v);
            let remaining = norm(&v);
            if remaining > DEPENDENCE_TOL * original {
                v.iter_mut().for_each(|x| *x /= remaining);
                basis.push(v);
            }
        }
        let mut r = e1.clone();
        project_out(&basis, &mut r);
        curve.push(norm(&r).min(1.0));
    }
    Ok(curve)
}

/// Norm of the component of `e_1` orthogonal to `span{T^n C : n < shifts}`,
/// all vectors cut to their first `trunc` entries.
pub fn genericity_residual(coeffs: &[Complex64], trunc: usize, shifts: usize) -> Result<f64> {
    let curve = residual_curve(coeffs, trunc, shifts)?;
    Ok(*curve.last().expect("shifts >= 1"))
}

pub fn is_generic(
    coeffs: &[Complex64],
    trunc: usize,
    shifts: usize,
    tol: f64,
) -> Result<GenericityCertificate> {
    let curve = residual_curve(coeffs, trunc, shifts)?;
    let residual = *curve.last().expect("shifts >= 1");
    Ok(GenericityCertificate {
        generic: residual < tol,
        residual,
        trunc,
        shifts,
        curve,
        exact: false,
    })
}

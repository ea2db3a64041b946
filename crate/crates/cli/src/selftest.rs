use deltakick::kernel::{
    kernel_moments_with, m_kernel_integral, m_kernel_spectral, m_kernel_with_tol,
};
use deltakick::volterra::picard_y;
use deltakick::{
    genericity_residual, m_kernel_quad, simulate, DriveSpec, InitialState, KernelSettings,
    MomentumGrid, RunOptions, TimeGrid,
};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Measured discrepancy, NaN when the check could not be evaluated.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

fn check(name: &'static str, threshold: f64, outcome: deltakick::Result<f64>) -> Check {
    match outcome {
        Ok(value) => Check {
            name,
            passed: value <= threshold,
            value,
            threshold,
            detail: String::new(),
        },
        Err(e) => Check {
            name,
            passed: false,
            value: f64::NAN,
            threshold,
            detail: e.to_string(),
        },
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| lo * (hi / lo).powf(j as f64 / (n - 1) as f64))
}

/// Kernel, moment, conservation, short-horizon oracle and genericity checks.
/// `kernel_tol` is the tolerance requested from the kernel evaluations and
/// the quadrature oracle.
pub fn selftest(kernel_tol: f64) -> Vec<Check> {
    let settings = KernelSettings { tol: kernel_tol };
    let mut checks = Vec::new();

    checks.push(check(
        "kernel_vs_quadrature",
        1e-8,
        log_grid(1e-3, 1e3, 50).try_fold(0.0f64, |worst, s| {
            let fast = m_kernel_with_tol(s, kernel_tol)?;
            let slow = m_kernel_quad(s, kernel_tol)?;
            Ok(worst.max((fast - slow).norm() / slow.norm()))
        }),
    ));

    checks.push(check(
        "kernel_representations",
        1e-6,
        [0.5, 2.0, 10.0].iter().try_fold(0.0f64, |worst, &s| {
            let a = m_kernel_spectral(s, kernel_tol.max(1e-12))?;
            let b = m_kernel_quad(s, kernel_tol.max(1e-12))?;
            Ok(worst.max((a - b).norm()))
        }),
    ));

    checks.push(check("moment_sum", 1e-8, {
        let (h, n) = (0.05, 200);
        kernel_moments_with(h, n, settings).and_then(|m| {
            let sum: Complex64 = m.mu0.iter().sum();
            let exact = m_kernel_integral(h * n as f64, 1e-15)?;
            Ok((sum - exact).norm())
        })
    }));

    checks.push(check("zero_drive_conservation", 1e-12, {
        let options = RunOptions {
            snapshot_times: Vec::new(),
            track_spectrum: false,
            kernel: settings,
        };
        TimeGrid::from_horizon(0.01, 50.0).and_then(|tg| {
            let r = simulate(
                &DriveSpec::harmonic(0.0, 2.0),
                &InitialState::bound(),
                &tg,
                &MomentumGrid::default(),
                &options,
            )?;
            Ok(r.survival
                .iter()
                .map(|p| (p - 1.0).abs())
                .fold(0.0, f64::max))
        })
    }));

    checks.push(check("picard_oracle", 1e-4, {
        let drive = DriveSpec::harmonic(0.2, 2.0);
        let kgrid = MomentumGrid::default();
        let options = RunOptions {
            snapshot_times: Vec::new(),
            track_spectrum: false,
            kernel: settings,
        };
        (|| {
            let coarse = TimeGrid::from_horizon(1e-3, 2.0)?;
            let fine = TimeGrid::from_horizon(2.5e-4, 2.0)?;
            let y = simulate(&drive, &InitialState::bound(), &coarse, &kgrid, &options)?.y;
            let oracle = picard_y(&drive, &InitialState::bound(), &fine, &kgrid, 1e-13, 200)?;
            Ok(y.iter()
                .enumerate()
                .map(|(n, v)| (v - oracle[4 * n]).norm())
                .fold(0.0, f64::max))
        })()
    }));

    checks.push(check("genericity_closed_form", 1e-6, {
        let lambda: f64 = 0.6;
        let geometric: Vec<Complex64> = (1..=200)
            .map(|n| Complex64::new(-lambda.powi(n), 0.0))
            .collect();
        let trig = vec![
            Complex64::new(0.3, -0.1),
            Complex64::new(0.0, 0.2),
            Complex64::new(-0.05, 0.0),
        ];
        (|| {
            let g = genericity_residual(&geometric, 64, 8)?;
            let t = genericity_residual(&trig, 64, 8)?;
            Ok((g - lambda).abs().max(t.abs()))
        })()
    }));

    checks
}

pub fn table(checks: &[Check]) -> String {
    let mut s = format!(
        "{:<26} {:<6} {:>12} {:>10}\n",
        "check", "status", "value", "threshold"
    );
    for c in checks {
        s += &format!(
            "{:<26} {:<6} {:>12.3e} {:>10.1e}",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.value,
            c.threshold
        );
        if !c.detail.is_empty() {
            s += &format!("  {}", c.detail);
        }
        s.push('\n');
    }
    s
}

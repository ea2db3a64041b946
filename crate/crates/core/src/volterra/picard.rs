use num_complex::Complex64;

use super::{InitialState, MomentumGrid, TimeGrid};
use crate::drive::{eta_eval, DriveSpec};
use crate::error::{Error, Result};
use crate::kernel::{inhom_i, m_kernel_first_integral, m_kernel_integral};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Fixed-point iteration `Y ← η [I + ∫(2i + M) Y]` on a uniform grid.
///
/// Every sweep re-integrates the full history of the piecewise-linear
/// iterate against panel moments taken from the closed-form antiderivatives
/// of `M`. Much slower than [`super::solve`], and meant as a cross-check on
/// short horizons where the iteration contracts quickly.
pub fn picard_y(
    drive: &DriveSpec,
    initial: &InitialState,
    tgrid: &TimeGrid,
    kgrid: &MomentumGrid,
    tol: f64,
    max_sweeps: usize,
) -> Result<Vec<Complex64>> {
    drive.validate()?;
    let h = tgrid.step;
    let count = tgrid.count;
    let eta: Vec<f64> = (0..=count)
        .map(|n| eta_eval(drive, tgrid.time(n)))
        .collect();
    let source = (0..=count)
        .map(|n| inhom_i(tgrid.time(n), initial, kgrid))
        .collect::<Result<Vec<_>>>()?;

    let f0 = (0..=count)
        .map(|j| m_kernel_integral(j as f64 * h, 1e-15))
        .collect::<Result<Vec<_>>>()?;
    let f1 = (0..=count)
        .map(|j| m_kernel_first_integral(j as f64 * h, 1e-15))
        .collect::<Result<Vec<_>>>()?;
    // panel j: a_j = ∫ M, b_j = ∫ (s - jh) M / h over [jh, (j+1)h]
    let a: Vec<Complex64> = (0..count).map(|j| f0[j + 1] - f0[j]).collect();
    let b: Vec<Complex64> = (0..count)
        .map(|j| (f1[j + 1] - f1[j] - j as f64 * h * a[j]) / h)
        .collect();

    let mut y: Vec<Complex64> = eta.iter().zip(&source).map(|(e, s)| e * s).collect();
    for _ in 0..max_sweeps {
        let mut next = vec![Complex64::new(0.0, 0.0); count + 1];
        let mut integral = Complex64::new(0.0, 0.0);
        for n in 0..=count {
            if n > 0 {
                integral += 0.5 * h * (y[n - 1] + y[n]);
            }
            let mut conv = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let (near, far) = (y[n - j], y[n - j - 1]);
                conv += a[j] * near + b[j] * (far - near);
            }
            next[n] = eta[n] * (source[n] + 2.0 * I * integral + conv);
        }
        let change = y
            .iter()
            .zip(&next)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max);
        y = next;
        if change <= tol {
            return Ok(y);
        }
    }
    Err(Error::Validation(format!(
        "picard iteration did not reach {tol:e} in {max_sweeps} sweeps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_drive_is_immediate() {
        let tg = TimeGrid::new(0.1, 10).unwrap();
        let y = picard_y(
            &DriveSpec::harmonic(0.0, 2.0),
            &InitialState::bound(),
            &tg,
            &MomentumGrid::default(),
            1e-14,
            3,
        )
        .unwrap();
        assert!(y.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn nonconvergence_is_reported() {
        let tg = TimeGrid::new(0.01, 100).unwrap();
        let err = picard_y(
            &DriveSpec::harmonic(0.5, 2.0),
            &InitialState::bound(),
            &tg,
            &MomentumGrid::default(),
            1e-15,
            2,
        );
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn refinement_is_second_order() {
        let drive = DriveSpec::harmonic(0.3, 2.0);
        let kg = MomentumGrid::default();
        let coarse = picard_y(
            &drive,
            &InitialState::bound(),
            &TimeGrid::new(0.02, 50).unwrap(),
            &kg,
            1e-13,
            60,
        )
        .unwrap();
        let fine = picard_y(
            &drive,
            &InitialState::bound(),
            &TimeGrid::new(0.01, 100).unwrap(),
            &kg,
            1e-13,
            60,
        )
        .unwrap();
        let finer = picard_y(
            &drive,
            &InitialState::bound(),
            &TimeGrid::new(0.005, 200).unwrap(),
            &kg,
            1e-13,
            60,
        )
        .unwrap();
        let e1 = (coarse[50] - fine[100]).norm();
        let e2 = (fine[100] - finer[200]).norm();
        assert!(e1 / e2 > 3.0, "{e1:e} {e2:e}");
    }
}

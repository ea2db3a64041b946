use deltakick::GenericityCertificate;

use crate::config::RunConfig;
use crate::error::CliError;

pub const DEFAULT_TRUNC: usize = 64;
pub const DEFAULT_SHIFTS: usize = 8;
pub const DEFAULT_TOL: f64 = 1e-10;

pub fn genericity(
    config: &RunConfig,
    trunc: usize,
    shifts: usize,
    tol: f64,
) -> Result<GenericityCertificate, CliError> {
    if trunc == 0 {
        return Err(CliError::config("trunc", "must be positive"));
    }
    if !(tol > 0.0) {
        return Err(CliError::config("tol", "must be positive"));
    }
    Ok(config.drive.genericity(trunc, shifts, tol)?)
}

pub fn lines(c: &GenericityCertificate) -> Vec<String> {
    let mut v = vec![
        format!("generic={}", c.generic),
        format!("residual={:.10e}", c.residual),
        format!("trunc={}", c.trunc),
        format!("shifts={}", c.shifts),
        format!("exact={}", c.exact),
    ];
    if !c.curve.is_empty() {
        let curve: Vec<String> = c.curve.iter().map(|x| format!("{x:.6e}")).collect();
        v.push(format!("curve={}", curve.join(",")));
    }
    v
}

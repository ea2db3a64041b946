//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::f64::consts::SQRT_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use deltakick::kernel::m_kernel_spectral;
use deltakick::volterra::picard_y;
use deltakick::{
    fit_exp_rate, fit_power_tail, genericity_residual, m_kernel, m_kernel_quad, period_average,
    simulate, unitarity_defect, DriveSpec, InitialState, KernelSettings, MomentumGrid, RunOptions,
    RunResult, TimeGrid,
};
use deltakick_cli::output::{sha256_file, Manifest};
use num_complex::Complex64;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn options(spectrum: bool) -> RunOptions {
    RunOptions {
        snapshot_times: Vec::new(),
        track_spectrum: spectrum,
        kernel: KernelSettings::default(),
    }
}

fn run(
    drive: &DriveSpec,
    h: f64,
    horizon: f64,
    kgrid: &MomentumGrid,
    spectrum: bool,
) -> Result<RunResult, String> {
    let tg = TimeGrid::from_horizon(h, horizon).map_err(|e| e.to_string())?;
    simulate(
        drive,
        &InitialState::bound(),
        &tg,
        kgrid,
        &options(spectrum),
    )
    .map_err(|e| e.to_string())
}

fn kernel() -> Outcome {
    let mut worst = 0.0f64;
    for j in 0..50 {
        let s = 1e-3 * 1e6f64.powf(j as f64 / 49.0);
        let fast = m_kernel(s).map_err(|e| e.to_string())?;
        let slow = m_kernel_quad(s, 1e-12).map_err(|e| e.to_string())?;
        worst = worst.max((fast - slow).norm() / slow.norm());
    }
    let mut rep = 0.0f64;
    for s in [0.5, 2.0, 10.0] {
        let a = m_kernel_spectral(s, 1e-12).map_err(|e| e.to_string())?;
        let b = m_kernel_quad(s, 1e-12).map_err(|e| e.to_string())?;
        rep = rep.max((a - b).norm());
    }
    Ok((
        worst <= 1e-8 && rep <= 1e-6,
        format!("max rel err {worst:.2e} (<= 1e-8), representations {rep:.2e} (<= 1e-6)"),
    ))
}

fn conservation() -> Outcome {
    let r = run(
        &DriveSpec::harmonic(0.0, 2.0),
        0.01,
        50.0,
        &MomentumGrid::default(),
        false,
    )?;
    let dev = r
        .survival
        .iter()
        .map(|p| (p - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((dev <= 1e-12, format!("max |P-1| = {dev:.2e} (<= 1e-12)")))
}

fn oracle() -> Outcome {
    let drive = DriveSpec::harmonic(0.2, 2.0);
    let kg = MomentumGrid::default();
    let y = run(&drive, 1e-3, 2.0, &kg, false)?.y;
    let fine = TimeGrid::from_horizon(2.5e-4, 2.0).map_err(|e| e.to_string())?;
    let reference = picard_y(&drive, &InitialState::bound(), &fine, &kg, 1e-13, 200)
        .map_err(|e| e.to_string())?;
    let diff = y
        .iter()
        .enumerate()
        .map(|(n, v)| (v - reference[4 * n]).norm())
        .fold(0.0, f64::max);
    Ok((diff <= 1e-4, format!("max |dY| = {diff:.2e} (<= 1e-4)")))
}

fn unitarity() -> Outcome {
    let drive = DriveSpec::harmonic(0.2, 2.0);
    let base = MomentumGrid::uniform(6.0, 2048).map_err(|e| e.to_string())?;
    let fine = MomentumGrid::uniform(6.0, 4096).map_err(|e| e.to_string())?;
    let d1 =
        unitarity_defect(&run(&drive, 0.01, 100.0, &base, true)?).map_err(|e| e.to_string())?;
    let d2 =
        unitarity_defect(&run(&drive, 0.005, 100.0, &fine, true)?).map_err(|e| e.to_string())?;
    let gain = d1 / d2;
    Ok((
        d1 <= 1e-2 && gain >= 2.0,
        format!("defect {d1:.2e} (<= 1e-2), refined {d2:.2e}, reduction {gain:.2}x (>= 2x)"),
    ))
}

fn small_r_rate(r: f64) -> Result<f64, String> {
    let drive = DriveSpec::harmonic(r, 2.0);
    let res = run(&drive, 0.01, 400.0, &MomentumGrid::default(), false)?;
    let fit = fit_exp_rate(
        &res.survival,
        &res.times,
        (50.0, 400.0),
        Some(drive.period()),
    )
    .map_err(|e| e.to_string())?;
    Ok(fit.value)
}

fn small_r() -> Outcome {
    let g1 = small_r_rate(0.1)?;
    let g2 = small_r_rate(0.05)?;
    let expected = 0.5 * 0.1 * 0.1;
    let rel = (g1 - expected).abs() / expected;
    let ratio = g1 / g2;
    Ok((
        rel <= 0.15 && (ratio - 4.0).abs() <= 0.8,
        format!(
            "rate {g1:.4e} vs {expected:.1e} ({:.1}% off, <= 15%), ratio {ratio:.3} (4 +- 0.8)",
            100.0 * rel
        ),
    ))
}

/// Exponential fit from three periods until the averaged survival first
/// drops below 1e-3.
fn resonance_rate(r: f64) -> Result<f64, String> {
    let drive = DriveSpec::harmonic(r, 1.0 + r * r / SQRT_2);
    let period = drive.period();
    let res = run(&drive, 0.02, 2500.0, &MomentumGrid::default(), false)?;
    let (t, v) = period_average(&res.times, &res.survival, period).map_err(|e| e.to_string())?;
    let end = t
        .iter()
        .zip(&v)
        .find(|(_, &p)| p < 1e-3)
        .map_or(*t.last().unwrap(), |(&t, _)| t);
    let fit = fit_exp_rate(&res.survival, &res.times, (3.0 * period, end), Some(period))
        .map_err(|e| e.to_string())?;
    Ok(fit.value)
}

fn resonance() -> Outcome {
    let rs = [0.3, 0.4, 0.5];
    let gammas = rs
        .iter()
        .map(|&r| resonance_rate(r))
        .collect::<Result<Vec<_>, _>>()?;
    let x: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = gammas.iter().map(|g| g.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / 3.0, y.iter().sum::<f64>() / 3.0);
    let slope = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    // prefactor of the cubic law: geometric mean of rate / r^3
    let prefactor = (y.iter().zip(&x).map(|(b, a)| b - 3.0 * a).sum::<f64>() / 3.0).exp();
    let expected = 2f64.powf(0.25) / 8.0 - 2f64.powf(0.75) / 16.0;
    let rel = (prefactor - expected).abs() / expected;
    Ok((
        (slope - 3.0).abs() <= 0.4 && rel <= 0.5,
        format!(
            "rates {:.3e} {:.3e} {:.3e}, slope {slope:.3} (3 +- 0.4), prefactor {prefactor:.4} vs {expected:.4} ({:.0}% off, <= 50%)",
            gammas[0],
            gammas[1],
            gammas[2],
            100.0 * rel
        ),
    ))
}

fn tail() -> Outcome {
    let drive = DriveSpec::harmonic(0.5, 2.0);
    let res = run(&drive, 0.02, 2000.0, &MomentumGrid::default(), false)?;
    let fit = fit_power_tail(
        &res.survival,
        &res.times,
        (200.0, 2000.0),
        Some(drive.period()),
    )
    .map_err(|e| e.to_string())?;
    Ok((
        (fit.value + 3.0).abs() <= 0.7,
        format!(
            "tail exponent {:.3} over [200, 2000] (-3 +- 0.7)",
            fit.value
        ),
    ))
}

/// Classical Gram–Schmidt on the shifted windows, then the distance of e_1
/// from their span.
fn brute_force_residual(coeffs: &[Complex64], trunc: usize, shifts: usize) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for n in 0..shifts {
        let w: Vec<Complex64> = (0..trunc)
            .map(|i| coeffs.get(n + i).copied().unwrap_or(zero))
            .collect();
        let mut v = w.clone();
        for q in &basis {
            let c: Complex64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
        let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let nw = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if nv > 1e-10 * nw {
            basis.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    let captured: f64 = basis.iter().map(|q| q[0].norm_sqr()).sum();
    (1.0 - captured).max(0.0).sqrt()
}

fn genericity() -> Outcome {
    let lambda = 0.6f64;
    let geometric: Vec<Complex64> = (1..=200)
        .map(|n| Complex64::new(-0.3 * lambda.powi(n), 0.0))
        .collect();
    let trig = vec![
        Complex64::new(0.2, 0.1),
        Complex64::new(0.0, -0.3),
        Complex64::new(0.05, 0.0),
    ];
    let g = genericity_residual(&geometric, 64, 8).map_err(|e| e.to_string())?;
    let t = genericity_residual(&trig, 64, 8).map_err(|e| e.to_string())?;
    let (go, to) = (
        brute_force_residual(&geometric, 64, 8),
        brute_force_residual(&trig, 64, 8),
    );
    let cert = DriveSpec::geometric_pole(0.3, lambda, 1.0)
        .genericity(64, 8, 1e-10)
        .map_err(|e| e.to_string())?;
    let passed = (g - lambda).abs() <= 1e-6
        && t <= 1e-12
        && (g - go).abs() <= 1e-10
        && (t - to).abs() <= 1e-10
        && (cert.residual - lambda).abs() <= 1e-6;
    Ok((
        passed,
        format!("geometric {g:.9} (0.6 +- 1e-6), trig {t:.1e}, oracle {go:.9} / {to:.1e}"),
    ))
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_deltakick")
}

fn scratch(name: &str) -> Result<PathBuf, String> {
    let dir = std::env::temp_dir().join(format!(
        "deltakick-acceptance-{}-{name}",
        std::process::id()
    ));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    Ok(dir)
}

fn deltakick(args: &[&str]) -> Result<(), String> {
    let out = Command::new(binary())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).trim().to_string())
    }
}

fn stabilization() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments/stabilization.toml");
    let dir = scratch("scan")?;
    deltakick(&[
        "scan",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ])?;
    let horizon = Manifest::read(&dir.join("manifest.json"))
        .map_err(|e| e.to_string())?
        .config
        .time
        .horizon;
    let text = fs::read_to_string(dir.join("scan.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    let f = |row: &Vec<String>, i: usize| row[i].parse::<f64>().unwrap_or(f64::NAN);
    let best = rows
        .iter()
        .filter(|r| r[0] != "reference" && f(r, 4) > 0.9 && f(r, 2) > 0.05)
        .max_by(|a, b| f(a, 4).total_cmp(&f(b, 4)));
    let reference = rows.iter().find(|r| r[0] == "reference").map(|r| f(r, 2));
    let _ = fs::remove_dir_all(&dir);
    match (best, reference) {
        (Some(b), Some(p_ref)) => Ok((
            horizon >= 500.0 && p_ref < 0.01,
            format!(
                "T = {horizon}, lambda = {:.2}: P(T) = {:.3}, plateau ratio {:.4}; harmonic reference P(T) = {p_ref:.2e}",
                f(b, 1),
                f(b, 2),
                f(b, 4)
            ),
        )),
        _ => Ok((false, "no plateau point or no reference row".into())),
    }
}

fn determinism() -> Outcome {
    let first = scratch("first")?;
    let second = scratch("second")?;
    deltakick(&[
        "solve",
        "--set",
        "drive.kind=harmonic",
        "--set",
        "drive.r=0.3",
        "--set",
        "drive.omega=2",
        "--set",
        "time.h=0.01",
        "--set",
        "time.T=30",
        "--set",
        "output.snapshots=[15.0, 30.0]",
        "--out",
        first.to_str().unwrap(),
    ])?;
    let manifest = first.join("manifest.json");
    deltakick(&[
        "solve",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ])?;
    let recorded = Manifest::read(&manifest)
        .map_err(|e| e.to_string())?
        .outputs;
    let mut identical = !recorded.is_empty();
    for f in &recorded {
        let a = sha256_file(&first.join(&f.file)).map_err(|e| e.to_string())?;
        let b = sha256_file(&second.join(&f.file)).map_err(|e| e.to_string())?;
        identical &= a == b && a == f.sha256;
    }
    let _ = fs::remove_dir_all(&first);
    let _ = fs::remove_dir_all(&second);
    Ok((
        identical,
        format!(
            "{} files, sha256 {}",
            recorded.len(),
            if identical { "identical" } else { "differ" }
        ),
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("kernel correctness", kernel),
        ("conservation", conservation),
        ("oracle equivalence", oracle),
        ("unitarity", unitarity),
        ("small-r rate", small_r),
        ("resonance scaling", resonance),
        ("power-law tail", tail),
        ("genericity diagnostics", genericity),
        ("incomplete ionization", stabilization),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        failures += usize::from(!passed);
        println!(
            "criterion {:>2} {:<24} {}  {detail}  [{:.1}s]",
            i + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{self, RunConfig};
use crate::error::{CliError, EXIT_RUNTIME};
use crate::output::Manifest;
use crate::{gamma, genericity, scan, selftest, solve};

pub const THREADS_ENV: &str = "DELTAKICK_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "deltakick",
    version,
    about = "Ionization of a delta-well bound state under periodic forcing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one configuration and write the time series, spectra and manifest.
    Solve(SolveArgs),
    /// Run a configuration over a list of parameter values.
    Scan(ScanArgs),
    /// Fit the decay rate (or tail exponent) of one configuration.
    Gamma(ReportArgs),
    /// Shift-genericity certificate of the configured drive.
    Genericity(GenericityArgs),
    /// Built-in numerical checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML configuration file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set drive.r=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory (`output.out`).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Re-run the configuration recorded in a manifest.
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Worker threads (`scan.threads`); capped by DELTAKICK_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GenericityArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Number of Fourier coefficients kept.
    #[arg(long, default_value_t = genericity::DEFAULT_TRUNC)]
    pub trunc: usize,
    /// Number of shifted copies spanning the test space.
    #[arg(long, default_value_t = genericity::DEFAULT_SHIFTS)]
    pub shifts: usize,
    #[arg(long, default_value_t = genericity::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Tolerance requested from the kernel evaluations.
    #[arg(long, default_value_t = deltakick::kernel::DEFAULT_TOL)]
    pub kernel_tol: f64,
    #[arg(long)]
    pub json: bool,
}

impl ConfigArgs {
    fn resolve(&self, base: Option<RunConfig>) -> Result<RunConfig, CliError> {
        let mut overrides = self.set.clone();
        if let Some(out) = &self.out {
            overrides.push(format!(
                "output.out={}",
                toml::Value::String(out.display().to_string())
            ));
        }
        match base {
            Some(base) => {
                let mut table = match toml::Value::try_from(&base) {
                    Ok(toml::Value::Table(t)) => t,
                    _ => return Err(CliError::config("manifest", "config is not a table")),
                };
                for item in &overrides {
                    config::apply_override(&mut table, item)?;
                }
                config::from_table(table)
            }
            None => config::load(self.config.as_deref(), &overrides),
        }
    }
}

/// `DELTAKICK_THREADS`, when set.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config(
                THREADS_ENV,
                format!("expected a positive integer, got `{v}`"),
            )),
        },
        Err(_) => Ok(None),
    }
}

fn worker_count(requested: Option<usize>) -> Result<usize, CliError> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let wanted = requested.unwrap_or(available);
    if wanted == 0 {
        return Err(CliError::config("scan.threads", "must be positive"));
    }
    Ok(match thread_cap()? {
        Some(cap) => wanted.min(cap),
        None => wanted,
    })
}

fn in_pool<T>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::runtime(e.to_string()))?;
    Ok(pool.install(f))
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::runtime(e.to_string()))
}

/// Executes one command, printing its report on stdout.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => {
            let base = match &args.manifest {
                Some(path) => Some(Manifest::read(path)?.config),
                None => None,
            };
            let config = args.config.resolve(base)?;
            let threads = worker_count(None)?;
            let (manifest, path) = in_pool(threads, || solve::solve(&config))??;
            for o in &manifest.outputs {
                println!("{}  {}", o.sha256, o.file);
            }
            println!("manifest: {}", path.display());
        }
        Command::Scan(args) => {
            let config = args.config.resolve(None)?;
            let requested = args
                .threads
                .or(config.scan.as_ref().and_then(|s| s.threads));
            let rows = scan::scan(&config, worker_count(requested)?)?;
            println!("{}", scan::SUMMARY_HEADER);
            for r in &rows {
                println!(
                    "{},{},{:.6e},{:.6e},{:.6},{}",
                    r.param, r.value, r.final_p, r.gamma_fit, r.plateau_ratio, r.status
                );
            }
        }
        Command::Gamma(args) => {
            let config = args.config.resolve(None)?;
            let threads = worker_count(None)?;
            let report = in_pool(threads, || gamma::gamma(&config))??;
            if args.json {
                println!("{}", json(&report)?);
            } else {
                report.lines().iter().for_each(|l| println!("{l}"));
            }
        }
        Command::Genericity(args) => {
            let config = args.config.resolve(None)?;
            let cert = genericity::genericity(&config, args.trunc, args.shifts, args.tol)?;
            if args.json {
                println!("{}", json(&cert)?);
            } else {
                genericity::lines(&cert)
                    .iter()
                    .for_each(|l| println!("{l}"));
            }
        }
        Command::Selftest(args) => {
            if !(args.kernel_tol > 0.0) {
                return Err(CliError::config("kernel-tol", "must be positive"));
            }
            let threads = worker_count(None)?;
            let checks = in_pool(threads, || selftest::selftest(args.kernel_tol))?;
            if args.json {
                println!("{}", json(&checks)?);
            } else {
                print!("{}", selftest::table(&checks));
            }
            let failed: Vec<&str> = checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name)
                .collect();
            if !failed.is_empty() {
                return Err(CliError::runtime(format!(
                    "failed checks: {}",
                    failed.join(", ")
                )));
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code().clamp(0, 255) as u8;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("deltakick: {e}");
            e.exit_code().max(EXIT_RUNTIME)
        }
    }
}

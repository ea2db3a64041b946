//! Run configuration: a TOML document with one table per concern, plus
//! dotted-key overrides from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use deltakick::volterra::{Continuum, DEFAULT_KMAX, DEFAULT_NK};
use deltakick::{DriveSpec, InitialState, KernelSettings, MomentumGrid, TimeGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub drive: DriveSpec,
    #[serde(default)]
    pub initial: InitialConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub momentum: MomentumConfig,
    #[serde(default)]
    pub kernel: KernelSettings,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Bound-state amplitude `θ_0` as `[re, im]`.
    #[serde(default = "unit")]
    pub theta0: [f64; 2],
    /// CSV `k,re_Theta0,im_Theta0` sampled on the momentum grid nodes.
    /// Positive nodes only means an even continuum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuum: Option<PathBuf>,
}

fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            theta0: unit(),
            continuum: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Shrink `h` (keeping `T` a whole number of steps) until the drive is
    /// resolved.
    #[serde(default)]
    pub auto_step: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumConfig {
    #[serde(default = "default_kmax")]
    pub kmax: f64,
    #[serde(default = "default_nk")]
    pub nk: usize,
}

fn default_kmax() -> f64 {
    DEFAULT_KMAX
}

fn default_nk() -> usize {
    DEFAULT_NK
}

impl Default for MomentumConfig {
    fn default() -> Self {
        MomentumConfig {
            kmax: DEFAULT_KMAX,
            nk: DEFAULT_NK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Existing directory receiving every output file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Times at which `|Θ(k, t)|²` is written.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    /// Track the continuum (ionized fraction, defect, snapshots).
    #[serde(default = "yes")]
    pub spectrum: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            out: None,
            snapshots: Vec::new(),
            spectrum: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    #[default]
    Exp,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub kind: FitKind,
    /// `[t0, t1]`; detected from the data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Average over one drive period before fitting.
    #[serde(default = "yes")]
    pub average: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            kind: FitKind::Exp,
            window: None,
            average: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParam {
    R,
    Omega,
    Lambda,
}

impl ScanParam {
    pub fn name(self) -> &'static str {
        match self {
            ScanParam::R => "r",
            ScanParam::Omega => "omega",
            ScanParam::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub param: ScanParam,
    /// Explicit values; alternatively `start`, `stop`, `step`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Also run `r sin(ωt)` with the template's `r` and `ω`.
    #[serde(default)]
    pub reference: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ScanConfig {
    pub fn resolved_values(&self) -> Result<Vec<f64>, CliError> {
        let mut values = if !self.values.is_empty() {
            if self.start.is_some() || self.stop.is_some() || self.step.is_some() {
                return Err(CliError::config(
                    "scan.values",
                    "give either values or start/stop/step, not both",
                ));
            }
            self.values.clone()
        } else {
            match (self.start, self.stop, self.step) {
                (Some(a), Some(b), Some(d)) => {
                    if !(d > 0.0) || !(b >= a) {
                        return Err(CliError::config(
                            "scan.step",
                            "need step > 0 and stop >= start",
                        ));
                    }
                    let n = ((b - a) / d + 1e-9).floor() as usize;
                    (0..=n).map(|j| round_to_12(a + d * j as f64)).collect()
                }
                (None, None, None) => Vec::new(),
                _ => {
                    return Err(CliError::config(
                        "scan.start",
                        "start, stop and step go together",
                    ))
                }
            }
        };
        if values.is_empty() {
            return Err(CliError::config("scan.values", "empty value list"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config("scan.values", "values must be finite"));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(values)
    }
}

/// Drops the accumulated rounding of `start + j*step`.
fn round_to_12(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Reads a TOML file and applies `key=value` overrides.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                CliError::config("config", format!("cannot read {}: {e}", p.display()))
            })?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::config("config", format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    from_table(table)
}

pub fn from_table(table: toml::Table) -> Result<RunConfig, CliError> {
    check_section::<DriveSpec>(&table, "drive")?;
    check_section::<InitialConfig>(&table, "initial")?;
    check_section::<TimeConfig>(&table, "time")?;
    check_section::<MomentumConfig>(&table, "momentum")?;
    check_section::<KernelSettings>(&table, "kernel")?;
    check_section::<OutputConfig>(&table, "output")?;
    check_section::<FitConfig>(&table, "fit")?;
    check_section::<ScanConfig>(&table, "scan")?;
    let config: RunConfig =
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| {
                CliError::config(&field_of(&e).unwrap_or("config".into()), e.message())
            })?;
    config.validate()?;
    Ok(config)
}

/// Deserializes one section alone so that errors carry a `section.key` path.
fn check_section<T: serde::de::DeserializeOwned>(
    table: &toml::Table,
    name: &str,
) -> Result<(), CliError> {
    let Some(value) = table.get(name) else {
        return Ok(());
    };
    value.clone().try_into::<T>().map(|_| ()).map_err(|e| {
        let field = match field_of(&e) {
            Some(key) => format!("{name}.{key}"),
            None => name.to_string(),
        };
        CliError::config(&field, e.message())
    })
}

fn field_of(e: &toml::de::Error) -> Option<String> {
    let msg = e.message();
    // serde reports missing and unknown keys by name
    for marker in ["missing field `", "unknown field `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return Some(name.to_string());
            }
        }
    }
    None
}

/// `section.key=value`; the value is parsed as TOML and kept as a string
/// when that fails.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::config("set", format!("expected key=value, got `{item}`")))?;
    let key = key.trim();
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config("set", format!("malformed key `{key}`")));
    }
    let mut cursor = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(key, format!("`{part}` is not a table")))?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.drive
            .validate()
            .map_err(|e| CliError::config("drive", e.to_string()))?;
        let t = &self.time;
        if !(t.h > 0.0 && t.h.is_finite()) {
            return Err(CliError::config(
                "time.h",
                format!("must be positive, got {}", t.h),
            ));
        }
        if !(t.horizon > 0.0 && t.horizon.is_finite()) {
            return Err(CliError::config(
                "time.T",
                format!("must be positive, got {}", t.horizon),
            ));
        }
        if !(self.momentum.kmax > 0.0 && self.momentum.kmax.is_finite()) {
            return Err(CliError::config("momentum.kmax", "must be positive"));
        }
        if self.momentum.nk == 0 {
            return Err(CliError::config("momentum.nk", "must be positive"));
        }
        if !(self.kernel.tol > 0.0) {
            return Err(CliError::config("kernel.tol", "must be positive"));
        }
        if let Some(w) = self.fit.window {
            if !(w[0] >= 0.0 && w[1] > w[0]) {
                return Err(CliError::config("fit.window", "need 0 <= t0 < t1"));
            }
        }
        if self
            .output
            .snapshots
            .iter()
            .any(|&s| !(s >= 0.0 && s <= t.horizon))
        {
            return Err(CliError::config(
                "output.snapshots",
                "snapshot times must lie in [0, T]",
            ));
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        let t = &self.time;
        let mut h = t.h;
        if t.auto_step {
            let needed = 2.0 * std::f64::consts::PI
                / (self.drive.max_frequency() * deltakick::volterra::MIN_SAMPLES_PER_PERIOD);
            h = h.min(needed);
        }
        let grid = if t.auto_step {
            let count = (t.horizon / h - 1e-9).ceil().max(1.0);
            TimeGrid::new(t.horizon / count, count as usize)
        } else {
            TimeGrid::from_horizon(h, t.horizon)
        };
        let grid = grid.map_err(|e| CliError::config("time.h", e.to_string()))?;
        grid.check_resolution(&self.drive)
            .map_err(|e| CliError::config("time.h", e.to_string()))?;
        Ok(grid)
    }

    pub fn momentum_grid(&self) -> Result<MomentumGrid, CliError> {
        MomentumGrid::uniform(self.momentum.kmax, self.momentum.nk)
            .map_err(|e| CliError::config("momentum", e.to_string()))
    }

    pub fn initial_state(&self, kgrid: &MomentumGrid) -> Result<InitialState, CliError> {
        let theta0 = Complex64::new(self.initial.theta0[0], self.initial.theta0[1]);
        let continuum = match &self.initial.continuum {
            None => Continuum::Zero,
            Some(path) => read_continuum(path, kgrid)?,
        };
        let state = InitialState { theta0, continuum };
        state
            .validate(kgrid)
            .map_err(|e| CliError::config("initial", e.to_string()))?;
        Ok(state)
    }

    /// The output directory, which has to exist already.
    pub fn out_dir(&self) -> Result<PathBuf, CliError> {
        let out = self
            .output
            .out
            .clone()
            .ok_or_else(|| CliError::config("out", "no output directory given"))?;
        if !out.is_dir() {
            return Err(CliError::config(
                "out",
                format!("output directory {} does not exist", out.display()),
            ));
        }
        Ok(out)
    }
}

fn read_continuum(path: &Path, kgrid: &MomentumGrid) -> Result<Continuum, CliError> {
    let field = "initial.continuum";
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(field, format!("{}: {e}", path.display())))?;
    let mut positive = vec![None; kgrid.len()];
    let mut negative = vec![None; kgrid.len()];
    let spacing = kgrid.spacing();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('k') {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::config(field, format!("line {}: {e}", line_no + 1)))?;
        if cols.len() != 3 {
            return Err(CliError::config(
                field,
                format!("line {}: expected k,re,im", line_no + 1),
            ));
        }
        let k = cols[0];
        let j = kgrid
            .nodes
            .partition_point(|&node| node < k.abs() - 0.5 * spacing);
        if j >= kgrid.len() || (kgrid.nodes[j] - k.abs()).abs() > 1e-9 * kgrid.kmax.max(1.0) {
            return Err(CliError::config(
                field,
                format!("line {}: k = {k} is not a grid node", line_no + 1),
            ));
        }
        let slot = if k > 0.0 {
            &mut positive[j]
        } else {
            &mut negative[j]
        };
        *slot = Some(Complex64::new(cols[1], cols[2]));
    }
    let complete = |v: &[Option<Complex64>]| v.iter().all(Option::is_some);
    let unwrap = |v: Vec<Option<Complex64>>| {
        v.into_iter()
            .map(|a| a.unwrap_or_default())
            .collect::<Vec<_>>()
    };
    let any_negative = negative.iter().any(Option::is_some);
    if !complete(&positive) || (any_negative && !complete(&negative)) {
        return Err(CliError::config(field, "every grid node needs a sample"));
    }
    Ok(if any_negative {
        Continuum::General {
            positive: unwrap(positive),
            negative: unwrap(negative),
        }
    } else {
        Continuum::Even(unwrap(positive))
    })
}

//! Study configuration: a TOML file plus command-line overrides.
//!
//! Paths in the file are resolved against the file's directory; paths given
//! as flags are used as given.

use std::fmt;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use gridres::grid::{Day, MAX_DAY};
use gridres::hazard::HazardType;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    network: PathBuf,
    regions: PathBuf,
    outages: PathBuf,
    storms: PathBuf,
    demand_profile: PathBuf,
    plan: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    scenarios_per_day: Option<u32>,
    alpha: Option<f64>,
    beta: Option<f64>,
    hazards: Option<Vec<HazardType>>,
    days: Option<String>,
    parallel: Option<usize>,
    trace: Option<bool>,
    enforce_gen_min: Option<bool>,
    lp_tol: Option<f64>,
}

/// Values given on the command line. Unset fields leave the file's value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub scenarios: Option<u32>,
    pub hazards: Vec<HazardType>,
    pub days: Option<String>,
    pub plan: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub parallel: Option<usize>,
    pub trace: bool,
    pub enforce_gen_min: bool,
    pub lp_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub network: PathBuf,
    pub regions: PathBuf,
    pub outages: PathBuf,
    pub storms: PathBuf,
    pub demand_profile: PathBuf,
    pub plan: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub base_seed: u64,
    pub scenarios_per_day: u32,
    pub alpha: f64,
    pub beta: f64,
    /// Sorted, duplicate-free.
    pub hazards: Vec<HazardType>,
    /// Inclusive; `None` studies every day of the demand profile.
    pub days: Option<RangeInclusive<Day>>,
    pub parallel: usize,
    pub trace: bool,
    pub enforce_gen_min: bool,
    pub lp_tol: f64,
}

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_SCENARIOS: u32 = 100;

/// Parses `A..B` (inclusive) or a single day `A`.
pub fn parse_day_range(text: &str) -> Result<RangeInclusive<Day>, ConfigError> {
    let bad = || ConfigError(format!("day range `{text}` is not `A..B` with 1 <= A <= B <= {MAX_DAY}"));
    let (a, b) = match text.split_once("..") {
        Some((a, b)) => (a.trim(), b.trim().trim_start_matches('=')),
        None => (text.trim(), text.trim()),
    };
    let a: Day = a.parse().map_err(|_| bad())?;
    let b: Day = b.parse().map_err(|_| bad())?;
    if a < 1 || a > b || b > MAX_DAY {
        return Err(bad());
    }
    Ok(a..=b)
}

impl StudyConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text =
            fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base, overrides).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str, base: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError(e.message().to_string()))?;
        let rel = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let mut hazards = if !overrides.hazards.is_empty() {
            overrides.hazards.clone()
        } else {
            file.hazards.unwrap_or_else(|| HazardType::ALL.to_vec())
        };
        hazards.sort();
        hazards.dedup();
        if hazards.is_empty() {
            return Err(ConfigError("hazard filter is empty".into()));
        }
        let days = match overrides.days.as_deref().or(file.days.as_deref()) {
            Some(s) => Some(parse_day_range(s)?),
            None => None,
        };
        let scenarios_per_day = overrides.scenarios.or(file.scenarios_per_day).unwrap_or(DEFAULT_SCENARIOS);
        if scenarios_per_day == 0 {
            return Err(ConfigError("scenarios_per_day must be at least 1".into()));
        }
        let parallel = overrides.parallel.or(file.parallel).unwrap_or(1);
        if parallel == 0 {
            return Err(ConfigError("parallel must be at least 1".into()));
        }
        let lp_tol = overrides.lp_tol.or(file.lp_tol).unwrap_or(1e-6);
        if !(lp_tol > 0.0 && lp_tol.is_finite()) {
            return Err(ConfigError(format!("lp_tol must be positive, got {lp_tol}")));
        }
        Ok(Self {
            network: rel(file.network),
            regions: rel(file.regions),
            outages: rel(file.outages),
            storms: rel(file.storms),
            demand_profile: rel(file.demand_profile),
            plan: overrides.plan.clone().or(file.plan.map(rel)),
            out_dir: overrides.out.clone().unwrap_or_else(|| rel(file.out_dir.unwrap_or_else(|| "out".into()))),
            base_seed: overrides.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            scenarios_per_day,
            alpha: file.alpha.unwrap_or(0.02),
            beta: file.beta.unwrap_or(3.0),
            hazards,
            days,
            parallel,
            trace: overrides.trace || file.trace.unwrap_or(false),
            enforce_gen_min: overrides.enforce_gen_min || file.enforce_gen_min.unwrap_or(false),
            lp_tol,
        })
    }

    /// Input files with their config keys, plan included when set.
    pub fn input_paths(&self) -> Vec<(&'static str, &Path)> {
        let mut paths = vec![
            ("network", self.network.as_path()),
            ("regions", self.regions.as_path()),
            ("outages", self.outages.as_path()),
            ("storms", self.storms.as_path()),
            ("demand_profile", self.demand_profile.as_path()),
        ];
        if let Some(plan) = &self.plan {
            paths.push(("plan", plan.as_path()));
        }
        paths
    }
}

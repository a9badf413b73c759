//! Monte Carlo line-outage scenarios.
//!
//! Every line gets one beta-prime draw `o` per (hazard, day, scenario). The
//! line is outaged when `o < rho` for any county it crosses, i.e. when `o` is
//! below the largest risk among its counties.
//!
//! # Random streams
//!
//! Each scenario owns a ChaCha20 stream. The 256-bit key is the base seed in
//! little-endian order followed by 24 zero bytes, and the 64-bit stream id is
//!
//! ```text
//! hazard_tag << 56 | day << 24 | k
//! ```
//!
//! with hazard tags wildfire = 1, hurricane = 2, wind = 3. Draws are taken in
//! ascending line id order. Streams are addressed, never shared, so output
//! does not depend on evaluation order or thread count.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::LineRegionIndex;
use crate::grid::{Day, Network};
use crate::hazard::{HazardType, RiskSlice};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("beta-prime parameters need alpha > 0 and beta > 1, got alpha={alpha}, beta={beta}")]
    InvalidParams { alpha: f64, beta: f64 },
    #[error("scenarios_per_day must be at least 1")]
    NoScenarios,
    #[error("line `{0}` in the county index is not in the network")]
    UnknownLine(String),
    #[error("scenario index {k} out of range for {per_day} scenarios per day")]
    IndexOutOfRange { k: u32, per_day: u32 },
    #[error("scenario record {line}: {message}")]
    Record { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrimeParams {
    alpha: f64,
    beta: f64,
}

impl BetaPrimeParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ScenarioError> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 1.0 && beta.is_finite()) {
            return Err(ScenarioError::InvalidParams { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// alpha / (beta - 1)
    pub fn mean(&self) -> f64 {
        self.alpha / (self.beta - 1.0)
    }
}

impl Default for BetaPrimeParams {
    /// Mean 0.01.
    fn default() -> Self {
        Self {
            alpha: 0.02,
            beta: 3.0,
        }
    }
}

/// Beta-prime variates as a ratio of two unit-scale gamma variates.
#[derive(Debug, Clone, Copy)]
pub struct BetaPrime {
    numerator: Gamma<f64>,
    denominator: Gamma<f64>,
}

impl BetaPrime {
    pub fn new(params: BetaPrimeParams) -> Self {
        Self {
            numerator: Gamma::new(params.alpha, 1.0).expect("validated shape"),
            denominator: Gamma::new(params.beta, 1.0).expect("validated shape"),
        }
    }
}

impl Distribution<f64> for BetaPrime {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g1 = self.numerator.sample(rng);
        let g2 = self.denominator.sample(rng);
        g1 / g2
    }
}

/// One beta-prime draw, `G1 / G2` with `G1 ~ Gamma(alpha)` and `G2 ~ Gamma(beta)`.
pub fn sample_beta_prime<R: Rng + ?Sized>(rng: &mut R, params: BetaPrimeParams) -> f64 {
    BetaPrime::new(params).sample(rng)
}

/// The random stream for scenario `k` of `hazard` on `day`.
pub fn scenario_stream(base_seed: u64, hazard: HazardType, day: Day, k: u32) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&base_seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    let k = u64::from(k) & 0xFF_FFFF;
    rng.set_stream(hazard.tag() << 56 | u64::from(day) << 24 | k);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub base_seed: u64,
    pub scenarios_per_day: u32,
    pub params: BetaPrimeParams,
}

impl ScenarioConfig {
    pub fn new(base_seed: u64, scenarios_per_day: u32, params: BetaPrimeParams) -> Result<Self, ScenarioError> {
        if scenarios_per_day == 0 {
            return Err(ScenarioError::NoScenarios);
        }
        Ok(Self {
            base_seed,
            scenarios_per_day,
            params,
        })
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            base_seed: 0,
            scenarios_per_day: 100,
            params: BetaPrimeParams::default(),
        }
    }
}

/// The outaged lines of one (hazard, day, k) scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageScenario {
    pub hazard: HazardType,
    pub day: Day,
    pub k: u32,
    pub outaged_lines: Vec<String>,
    /// Every line's draw, present when tracing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<BTreeMap<String, f64>>,
}

impl OutageScenario {
    pub fn key(&self) -> (HazardType, Day, u32) {
        (self.hazard, self.day, self.k)
    }
}

/// Highest risk among a line's counties; 0 when it crosses none.
fn line_risk(counties: &[String], risk: &RiskSlice) -> f64 {
    counties
        .iter()
        .filter_map(|c| risk.get(c))
        .fold(0.0, |acc: f64, &r| acc.max(r))
}

/// Draws outage sets against a fixed county index.
#[derive(Debug, Clone)]
pub struct ScenarioGenerator<'a> {
    index: &'a LineRegionIndex,
    config: ScenarioConfig,
    law: BetaPrime,
}

impl<'a> ScenarioGenerator<'a> {
    pub fn new(network: &Network, index: &'a LineRegionIndex, config: ScenarioConfig) -> Result<Self, ScenarioError> {
        if config.scenarios_per_day == 0 {
            return Err(ScenarioError::NoScenarios);
        }
        if let Some((line, _)) = index.iter().find(|(l, _)| network.line_idx(l).is_none()) {
            return Err(ScenarioError::UnknownLine(line.to_string()));
        }
        Ok(Self {
            index,
            config,
            law: BetaPrime::new(config.params),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn generate(
        &self,
        hazard: HazardType,
        day: Day,
        k: u32,
        risk: &RiskSlice,
        trace: bool,
    ) -> Result<OutageScenario, ScenarioError> {
        if k >= self.config.scenarios_per_day {
            return Err(ScenarioError::IndexOutOfRange {
                k,
                per_day: self.config.scenarios_per_day,
            });
        }
        let mut rng = scenario_stream(self.config.base_seed, hazard, day, k);
        let mut outaged = Vec::new();
        let mut draws = trace.then(BTreeMap::new);
        for (line, counties) in self.index.iter() {
            let o = self.law.sample(&mut rng);
            if o < line_risk(counties, risk) {
                outaged.push(line.to_string());
            }
            if let Some(d) = draws.as_mut() {
                d.insert(line.to_string(), o);
            }
        }
        Ok(OutageScenario {
            hazard,
            day,
            k,
            outaged_lines: outaged,
            draws,
        })
    }
}

/// Draws the outage set for one scenario. See [`ScenarioGenerator`] to reuse
/// validation across many scenarios.
pub fn generate_outage_set(
    network: &Network,
    hazard: HazardType,
    day: Day,
    k: u32,
    risk: &RiskSlice,
    index: &LineRegionIndex,
    config: &ScenarioConfig,
) -> Result<OutageScenario, ScenarioError> {
    ScenarioGenerator::new(network, index, *config)?.generate(hazard, day, k, risk, false)
}

/// Re-applies the outage rule to recorded draws. Lines without a draw are
/// never outaged.
pub fn replay_outage_set(draws: &BTreeMap<String, f64>, risk: &RiskSlice, index: &LineRegionIndex) -> Vec<String> {
    index
        .iter()
        .filter(|(line, counties)| draws.get(*line).is_some_and(|&o| o < line_risk(counties, risk)))
        .map(|(line, _)| line.to_string())
        .collect()
}

/// Outage statistics for one hazard. Averages exclude scenarios with no
/// outages.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct HazardOutageStats {
    pub avg_outages: f64,
    pub max_outages: usize,
    pub days_with_outages: usize,
    pub scenarios_with_outages: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutageSummary {
    pub per_hazard: BTreeMap<HazardType, HazardOutageStats>,
}

impl OutageSummary {
    pub fn get(&self, hazard: HazardType) -> HazardOutageStats {
        self.per_hazard.get(&hazard).copied().unwrap_or_default()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("hazard,avg_outages,max_outages,days_with_outages,scenarios_with_outages\n");
        for (h, s) in &self.per_hazard {
            out.push_str(&format!(
                "{h},{},{},{},{}\n",
                s.avg_outages, s.max_outages, s.days_with_outages, s.scenarios_with_outages
            ));
        }
        out
    }
}

/// Per-hazard outage counts; every hazard gets a row, zero when absent.
pub fn summarize_outages(scenarios: &[OutageScenario]) -> OutageSummary {
    let mut per_hazard = BTreeMap::new();
    for hazard in HazardType::ALL {
        let mut total = 0usize;
        let mut stats = HazardOutageStats::default();
        let mut days = BTreeSet::new();
        for s in scenarios.iter().filter(|s| s.hazard == hazard) {
            let n = s.outaged_lines.len();
            if n == 0 {
                continue;
            }
            total += n;
            stats.scenarios_with_outages += 1;
            stats.max_outages = stats.max_outages.max(n);
            days.insert(s.day);
        }
        stats.days_with_outages = days.len();
        if stats.scenarios_with_outages > 0 {
            stats.avg_outages = total as f64 / stats.scenarios_with_outages as f64;
        }
        per_hazard.insert(hazard, stats);
    }
    OutageSummary { per_hazard }
}

/// One JSON object per line.
pub fn scenarios_to_jsonl(scenarios: &[OutageScenario]) -> String {
    let mut out = String::new();
    for s in scenarios {
        out.push_str(&serde_json::to_string(s).expect("scenario serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_scenarios_jsonl(text: &str) -> Result<Vec<OutageScenario>, ScenarioError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ScenarioError::Record {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

//! Pre/post undergrounding evaluation and study-level shed statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use serde::Deserialize;
use thiserror::Error;

use crate::dcopf::{solve_day_indexed, DcopfError, SolveOptions};
use crate::grid::{Day, DemandProfile, Network, TopologyError};
use crate::hazard::HazardType;
use crate::scenario::OutageScenario;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResilienceError {
    #[error("malformed plan document: {0}")]
    PlanSyntax(String),
    #[error("plan `{plan}` lists unknown line `{line}`")]
    UnknownPlanLine { plan: String, line: String },
    #[error("unknown line id `{0}`")]
    UnknownLine(String),
    #[error("{hazard} day {day} scenario {k}: {source}")]
    Solve {
        hazard: HazardType,
        day: Day,
        k: u32,
        source: DcopfError,
    },
}

impl From<TopologyError> for ResilienceError {
    fn from(e: TopologyError) -> Self {
        match e {
            TopologyError::UnknownLine(id) => ResilienceError::UnknownLine(id),
        }
    }
}

/// Lines that stay energized under every hazard.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UndergroundPlan {
    pub plan_id: String,
    lines: BTreeSet<String>,
}

#[derive(Deserialize)]
struct PlanDocument {
    plan_id: String,
    lines: Vec<String>,
}

impl UndergroundPlan {
    pub fn new(plan_id: impl Into<String>, lines: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            plan_id: plan_id.into(),
            lines: lines.into_iter().map(Into::into).collect(),
        }
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().map(String::as_str)
    }

    pub fn contains(&self, line: &str) -> bool {
        self.lines.contains(line)
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// First plan line missing from the network, if any.
    pub fn validate(&self, network: &Network) -> Result<(), ResilienceError> {
        match self.lines().find(|l| network.line_idx(l).is_none()) {
            Some(line) => Err(ResilienceError::UnknownPlanLine {
                plan: self.plan_id.clone(),
                line: line.to_string(),
            }),
            None => Ok(()),
        }
    }
}

/// Parses `{"plan_id": "...", "lines": [...]}`.
pub fn parse_plan(text: &str) -> Result<UndergroundPlan, ResilienceError> {
    let doc: PlanDocument =
        serde_json::from_str(text).map_err(|e| ResilienceError::PlanSyntax(e.to_string()))?;
    Ok(UndergroundPlan::new(doc.plan_id, doc.lines))
}

/// Outaged lines the plan does not protect, sorted.
pub fn apply_plan<S: AsRef<str>>(
    network: &Network,
    outaged: &[S],
    plan: &UndergroundPlan,
) -> Result<Vec<String>, ResilienceError> {
    plan.validate(network)?;
    let mut kept = Vec::with_capacity(outaged.len());
    for line in outaged.iter().map(AsRef::as_ref) {
        if network.line_idx(line).is_none() {
            return Err(ResilienceError::UnknownLine(line.to_string()));
        }
        if !plan.contains(line) {
            kept.push(line.to_string());
        }
    }
    kept.sort();
    kept.dedup();
    Ok(kept)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub hazard: HazardType,
    pub day: Day,
    pub k: u32,
    /// MWh.
    pub pre_shed: f64,
    /// MWh; `None` when no plan was evaluated.
    pub post_shed: Option<f64>,
    pub pre_outage_count: usize,
    pub post_outage_count: usize,
    pub overlap_count: usize,
}

impl ScenarioResult {
    pub fn key(&self) -> (HazardType, Day, u32) {
        (self.hazard, self.day, self.k)
    }

    /// Every outaged line was undergrounded.
    pub fn fully_prevented(&self) -> bool {
        self.pre_outage_count > 0 && self.overlap_count == self.pre_outage_count
    }
}

fn evaluate_with<F>(
    network: &Network,
    scenario: &OutageScenario,
    plan: Option<&UndergroundPlan>,
    mut daily_shed: F,
) -> Result<ScenarioResult, ResilienceError>
where
    F: FnMut(&[usize]) -> Result<f64, DcopfError>,
{
    let tag = |source| ResilienceError::Solve {
        hazard: scenario.hazard,
        day: scenario.day,
        k: scenario.k,
        source,
    };
    let outaged = network.resolve_lines(scenario.outaged_lines.iter().map(String::as_str))?;
    let pre_shed = daily_shed(&outaged).map_err(tag)?;
    let (post_shed, post) = match plan {
        None => (None, outaged.clone()),
        Some(plan) => {
            plan.validate(network)?;
            let post: Vec<usize> = outaged
                .iter()
                .copied()
                .filter(|&l| !plan.contains(&network.lines()[l].id))
                .collect();
            let shed = if post.len() == outaged.len() {
                pre_shed
            } else {
                daily_shed(&post).map_err(tag)?
            };
            (Some(shed), post)
        }
    };
    Ok(ScenarioResult {
        hazard: scenario.hazard,
        day: scenario.day,
        k: scenario.k,
        pre_shed,
        post_shed,
        pre_outage_count: outaged.len(),
        post_outage_count: post.len(),
        overlap_count: outaged.len() - post.len(),
    })
}

/// Daily shed before and, with a plan, after undergrounding. A scenario with no
/// undergrounded line among its outages reuses the pre-plan value unsolved.
pub fn evaluate_scenario(
    network: &Network,
    profile: &DemandProfile,
    scenario: &OutageScenario,
    plan: Option<&UndergroundPlan>,
    options: &SolveOptions,
) -> Result<ScenarioResult, ResilienceError> {
    evaluate_with(network, scenario, plan, |outaged| {
        solve_day_indexed(network, scenario.day, profile, outaged, options).map(|d| d.shed_mwh)
    })
}

/// Memoizes daily shed by (day, outage set). Identical outage sets recur
/// often, most of all the empty one, and the LP result only depends on them.
#[derive(Debug)]
pub struct ShedEvaluator<'a> {
    network: &'a Network,
    profile: &'a DemandProfile,
    options: SolveOptions,
    cache: Mutex<HashMap<(Day, Vec<usize>), f64>>,
}

impl<'a> ShedEvaluator<'a> {
    pub fn new(network: &'a Network, profile: &'a DemandProfile, options: SolveOptions) -> Self {
        Self {
            network,
            profile,
            options,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn daily_shed(&self, day: Day, outaged: &[usize]) -> Result<f64, DcopfError> {
        let key = (day, outaged.to_vec());
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let shed = solve_day_indexed(self.network, day, self.profile, outaged, &self.options)?.shed_mwh;
        self.cache.lock().expect("cache lock").insert(key, shed);
        Ok(shed)
    }

    pub fn evaluate(
        &self,
        scenario: &OutageScenario,
        plan: Option<&UndergroundPlan>,
    ) -> Result<ScenarioResult, ResilienceError> {
        evaluate_with(self.network, scenario, plan, |outaged| {
            self.daily_shed(scenario.day, outaged)
        })
    }

    pub fn cached_cases(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

/// Order statistics of a sample. Quartiles interpolate linearly between
/// closest ranks (inclusive method).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Distribution {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Inclusive linear-interpolation quantile of sorted data, `p` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

impl Distribution {
    /// All zero for an empty sample.
    pub fn of(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayStats {
    pub hazard: HazardType,
    pub day: Day,
    pub scenarios: usize,
    pub pre: Distribution,
    pub post: Option<Distribution>,
    /// Mean of `pre - post`, MWh, signed.
    pub mean_delta: Option<f64>,
    /// Total demand of the day over all buses and hours, MWh.
    pub daily_demand: f64,
    pub pre_shed_fraction: f64,
    pub post_shed_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HazardOverlap {
    pub scenarios: usize,
    pub scenarios_with_outages: usize,
    pub scenarios_with_overlap: usize,
    pub fully_prevented: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudySummary {
    pub days: Vec<DayStats>,
    pub hazards: BTreeMap<HazardType, HazardOverlap>,
}

/// Total demand of a day, MWh. Zero when the profile lacks the day.
pub fn daily_demand(network: &Network, profile: &DemandProfile, day: Day) -> f64 {
    let base: f64 = network.base_demand().iter().sum();
    profile
        .multipliers(day)
        .map_or(0.0, |m| m.iter().map(|x| x * base).sum())
}

fn fraction(shed: f64, demand: f64) -> f64 {
    if demand > 0.0 {
        (shed / demand).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Per-(hazard, day) shed distributions and per-hazard overlap counts.
pub fn summarize_study(results: &[ScenarioResult], network: &Network, profile: &DemandProfile) -> StudySummary {
    let mut groups: BTreeMap<(HazardType, Day), Vec<&ScenarioResult>> = BTreeMap::new();
    let mut hazards: BTreeMap<HazardType, HazardOverlap> = BTreeMap::new();
    for r in results {
        groups.entry((r.hazard, r.day)).or_default().push(r);
        let h = hazards.entry(r.hazard).or_default();
        h.scenarios += 1;
        h.scenarios_with_outages += usize::from(r.pre_outage_count > 0);
        h.scenarios_with_overlap += usize::from(r.overlap_count > 0);
        h.fully_prevented += usize::from(r.fully_prevented());
    }

    let days = groups
        .into_iter()
        .map(|((hazard, day), group)| {
            let pre: Vec<f64> = group.iter().map(|r| r.pre_shed).collect();
            let post: Option<Vec<f64>> = group.iter().map(|r| r.post_shed).collect();
            let pre = Distribution::of(&pre);
            let post_dist = post.as_deref().map(Distribution::of);
            let mean_delta = post.as_ref().map(|post| {
                group
                    .iter()
                    .zip(post)
                    .map(|(r, p)| r.pre_shed - p)
                    .sum::<f64>()
                    / group.len() as f64
            });
            let demand = daily_demand(network, profile, day);
            DayStats {
                hazard,
                day,
                scenarios: group.len(),
                pre,
                post: post_dist,
                mean_delta,
                daily_demand: demand,
                pre_shed_fraction: fraction(pre.mean, demand),
                post_shed_fraction: post_dist.map(|d| fraction(d.mean, demand)),
            }
        })
        .collect();
    StudySummary { days, hazards }
}

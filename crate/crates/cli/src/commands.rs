//! The `validate`, `risk`, `scenarios`, `run` and `report` commands.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use gridres::dcopf::SolveOptions;
use gridres::geo::{map_lines_to_counties, parse_regions, LineRegionIndex, RegionError, RegionSet};
use gridres::grid::{parse_demand_profile, parse_network, Day, DemandProfile, Network, NetworkError};
use gridres::hazard::{
    compute_risk_table, parse_outage_records, parse_storm_events, HazardCalendar, HazardDataError, HazardType,
    OutageRecord, RiskTable,
};
use gridres::report::{
    parse_results_csv, record_results, render_distribution_chart, ChartSeries, ChartSpec, Manifest, ReportError,
};
use gridres::resilience::{
    parse_plan, summarize_study, ResilienceError, ScenarioResult, ShedEvaluator, UndergroundPlan,
};
use gridres::scenario::{
    scenarios_to_jsonl, summarize_outages, BetaPrimeParams, OutageScenario, ScenarioConfig, ScenarioGenerator,
};
use log::info;
use rayon::prelude::*;

use crate::config::StudyConfig;

/// One validation problem: which file, which entity in it, which rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub file: String,
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.file, self.entity, self.rule)
    }
}

#[derive(Debug)]
pub enum Failure {
    /// Inputs break a rule. Exit code 1.
    Invalid(Vec<Finding>),
    /// A pipeline stage failed at run time. Exit code 2.
    Stage { stage: &'static str, message: String },
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Stage { .. } => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(findings) => {
                write!(f, "validation failed with {} finding(s)", findings.len())?;
                for finding in findings {
                    write!(f, "\n  {finding}")?;
                }
                Ok(())
            }
            Failure::Stage { stage, message } => write!(f, "stage `{stage}` failed: {message}"),
        }
    }
}

impl std::error::Error for Failure {}

fn stage<E: fmt::Display>(stage: &'static str) -> impl Fn(E) -> Failure {
    move |e| Failure::Stage {
        stage,
        message: e.to_string(),
    }
}

/// Every input of a study, parsed and checked.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub network: Network,
    pub regions: RegionSet,
    pub outages: Vec<OutageRecord>,
    pub calendar: HazardCalendar,
    pub profile: DemandProfile,
    pub plan: Option<UndergroundPlan>,
    /// Study days, ascending.
    pub days: Vec<Day>,
}

fn finding(file: &Path, entity: impl Into<String>, rule: impl fmt::Display) -> Finding {
    Finding {
        file: file.display().to_string(),
        entity: entity.into(),
        rule: rule.to_string(),
    }
}

fn network_finding(file: &Path, e: &NetworkError) -> Finding {
    let entity = match e {
        NetworkError::Syntax(_) => "document".to_string(),
        NetworkError::Schema { locator, .. }
        | NetworkError::DuplicateId { locator, .. }
        | NetworkError::UnknownBus { locator, .. }
        | NetworkError::Invariant { locator, .. } => locator.clone(),
    };
    finding(file, entity, e)
}

fn hazard_finding(file: &Path, e: &HazardDataError) -> Finding {
    let row = match e {
        HazardDataError::Malformed { row, .. }
        | HazardDataError::FractionOutOfRange { row, .. }
        | HazardDataError::Duplicate { row, .. }
        | HazardDataError::UnknownHazard { row, .. } => *row,
    };
    finding(file, format!("row {row}"), e)
}

fn region_finding(file: &Path, e: &RegionError) -> Finding {
    let entity = match e {
        RegionError::MissingFips { index }
        | RegionError::Geometry { index, .. }
        | RegionError::DuplicateFips { index, .. } => format!("features[{index}]"),
        RegionError::Syntax(_) => "document".into(),
    };
    finding(file, entity, e)
}

fn read(file: &Path, findings: &mut Vec<Finding>) -> Option<String> {
    match fs::read_to_string(file) {
        Ok(text) => Some(text),
        Err(e) => {
            findings.push(finding(file, "file", e));
            None
        }
    }
}

/// Parses every input and cross-checks them. Collects all findings rather
/// than stopping at the first.
pub fn load_inputs(config: &StudyConfig) -> Result<Inputs, Vec<Finding>> {
    let mut findings = Vec::new();
    let network = read(&config.network, &mut findings).and_then(|t| {
        parse_network(&t)
            .map_err(|e| findings.push(network_finding(&config.network, &e)))
            .ok()
    });
    let regions = read(&config.regions, &mut findings).and_then(|t| {
        parse_regions(&t)
            .map_err(|e| findings.push(region_finding(&config.regions, &e)))
            .ok()
    });
    let outages = read(&config.outages, &mut findings).and_then(|t| {
        parse_outage_records(&t)
            .map_err(|e| findings.push(hazard_finding(&config.outages, &e)))
            .ok()
    });
    let calendar = read(&config.storms, &mut findings).and_then(|t| {
        parse_storm_events(&t)
            .map_err(|e| findings.push(hazard_finding(&config.storms, &e)))
            .ok()
    });
    let profile = read(&config.demand_profile, &mut findings).and_then(|t| {
        parse_demand_profile(&t)
            .map_err(|e| findings.push(finding(&config.demand_profile, "document", e)))
            .ok()
    });
    let plan = match &config.plan {
        None => None,
        Some(path) => read(path, &mut findings).and_then(|t| {
            parse_plan(&t).map_err(|e| findings.push(finding(path, "document", e))).ok()
        }),
    };

    if let (Some(plan), Some(network), Some(path)) = (&plan, &network, &config.plan) {
        for line in plan.lines().filter(|l| network.line_idx(l).is_none()) {
            findings.push(finding(
                path,
                format!("lines `{line}`"),
                ResilienceError::UnknownPlanLine {
                    plan: plan.plan_id.clone(),
                    line: line.to_string(),
                },
            ));
        }
    }
    if let Err(e) = BetaPrimeParams::new(config.alpha, config.beta) {
        findings.push(finding(Path::new("config"), "alpha/beta", e));
    }

    let mut days = Vec::new();
    if let Some(profile) = &profile {
        days = match &config.days {
            Some(range) => {
                for day in range.clone().filter(|d| profile.multipliers(*d).is_none()) {
                    findings.push(finding(
                        &config.demand_profile,
                        format!("day {day}"),
                        "study day has no demand multipliers",
                    ));
                }
                range.clone().collect()
            }
            None => profile.days().collect(),
        };
        if days.is_empty() {
            findings.push(finding(&config.demand_profile, "document", "no study days"));
        }
    }

    match (network, regions, outages, calendar, profile) {
        (Some(network), Some(regions), Some(outages), Some(calendar), Some(profile)) if findings.is_empty() => {
            Ok(Inputs {
                network,
                regions,
                outages,
                calendar,
                profile,
                plan,
                days,
            })
        }
        _ => Err(findings),
    }
}

/// Checks every input without solving anything. Empty means clean.
pub fn cmd_validate(config: &StudyConfig) -> Vec<Finding> {
    match load_inputs(config) {
        Ok(_) => Vec::new(),
        Err(findings) => findings,
    }
}

/// Risk restricted to the configured hazards and study days.
pub fn study_risk(config: &StudyConfig, inputs: &Inputs) -> RiskTable {
    let full = compute_risk_table(&inputs.outages, &inputs.calendar);
    let mut risk = RiskTable::default();
    for (hazard, day, fips, rho) in full.iter() {
        if config.hazards.contains(&hazard) && inputs.days.binary_search(&day).is_ok() {
            risk.set(hazard, day, fips, rho);
        }
    }
    risk
}

fn pool(config: &StudyConfig) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallel)
        .build()
        .map_err(stage("setup"))
}

/// All scenarios of the study in sorted (hazard, day, k) order.
pub fn generate_scenarios(
    config: &StudyConfig,
    inputs: &Inputs,
    index: &LineRegionIndex,
    risk: &RiskTable,
) -> Result<Vec<OutageScenario>, Failure> {
    let params = BetaPrimeParams::new(config.alpha, config.beta).map_err(stage("scenarios"))?;
    let scenario_config = ScenarioConfig::new(config.base_seed, config.scenarios_per_day, params).map_err(stage("scenarios"))?;
    let generator = ScenarioGenerator::new(&inputs.network, index, scenario_config).map_err(stage("scenarios"))?;
    let mut tasks = Vec::new();
    for &hazard in &config.hazards {
        for &day in &inputs.days {
            for k in 0..config.scenarios_per_day {
                tasks.push((hazard, day, k));
            }
        }
    }
    pool(config)?.install(|| {
        tasks
            .par_iter()
            .map(|&(h, d, k)| generator.generate(h, d, k, risk.slice(h, d), config.trace))
            .collect::<Result<Vec<_>, _>>()
            .map_err(stage("scenarios"))
    })
}

/// Pre- and post-plan daily shed for every scenario, in input order.
pub fn evaluate_scenarios(
    config: &StudyConfig,
    inputs: &Inputs,
    scenarios: &[OutageScenario],
) -> Result<Vec<ScenarioResult>, Failure> {
    let options = SolveOptions {
        tolerance: config.lp_tol,
        enforce_gen_min: config.enforce_gen_min,
        ..SolveOptions::default()
    };
    let evaluator = ShedEvaluator::new(&inputs.network, &inputs.profile, options);
    let results = pool(config)?.install(|| {
        scenarios
            .par_iter()
            .map(|s| evaluator.evaluate(s, inputs.plan.as_ref()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(stage("solve"))
    })?;
    info!("solved {} distinct daily cases", evaluator.cached_cases());
    Ok(results)
}

fn charts(results: &[ScenarioResult]) -> Result<Vec<(String, String)>, ReportError> {
    let mut by_hazard: BTreeMap<HazardType, BTreeMap<Day, Vec<&ScenarioResult>>> = BTreeMap::new();
    for r in results {
        by_hazard.entry(r.hazard).or_default().entry(r.day).or_default().push(r);
    }
    let mut out = Vec::new();
    for (hazard, days) in by_hazard {
        let labels: Vec<String> = days.keys().map(|d| d.to_string()).collect();
        let with_plan = days.values().flatten().any(|r| r.post_shed.is_some());
        let series = |name: &str, f: &dyn Fn(&ScenarioResult) -> f64| ChartSeries {
            name: name.into(),
            samples: days.values().map(|rs| rs.iter().map(|r| f(r)).collect()).collect(),
        };

        let mut shed = vec![series("pre", &|r| r.pre_shed)];
        let mut outages = vec![series("pre", &|r| r.pre_outage_count as f64)];
        if with_plan {
            shed.push(series("post", &|r| r.post_shed.unwrap_or(r.pre_shed)));
            outages.push(series("post", &|r| r.post_outage_count as f64));
        }
        let spec = ChartSpec::new(format!("Daily load shed, {hazard}"), "MWh", labels.clone(), shed)?;
        out.push((format!("charts/shed_{hazard}.svg"), render_distribution_chart(&spec)));
        let spec = ChartSpec::new(format!("Outaged lines, {hazard}"), "lines", labels, outages)?;
        out.push((format!("charts/outages_{hazard}.svg"), render_distribution_chart(&spec)));
    }
    Ok(out)
}

fn record_report(
    manifest: &mut Manifest,
    out_dir: &Path,
    results: &[ScenarioResult],
    inputs: &Inputs,
) -> Result<(), Failure> {
    let summary = summarize_study(results, &inputs.network, &inputs.profile);
    record_results(manifest, results, &summary, out_dir).map_err(stage("report"))?;
    for (rel, svg) in charts(results).map_err(stage("report"))? {
        manifest.record(out_dir, &rel, svg.as_bytes()).map_err(stage("report"))?;
    }
    Ok(())
}

fn inputs(config: &StudyConfig) -> Result<Inputs, Failure> {
    load_inputs(config).map_err(Failure::Invalid)
}

fn finish(manifest: Manifest, config: &StudyConfig) -> Result<Manifest, Failure> {
    manifest.write(&config.out_dir).map_err(stage("report"))?;
    info!("wrote {} files to {}", manifest.files.len(), config.out_dir.display());
    Ok(manifest)
}

/// Writes `risk.csv`.
pub fn cmd_risk(config: &StudyConfig) -> Result<Manifest, Failure> {
    let inputs = inputs(config)?;
    let risk = study_risk(config, &inputs);
    let mut manifest = Manifest::default();
    manifest
        .record(&config.out_dir, "risk.csv", risk.to_csv().as_bytes())
        .map_err(stage("risk"))?;
    finish(manifest, config)
}

/// Writes `risk.csv`, `scenarios.jsonl` and `outage_summary.csv`.
pub fn cmd_scenarios(config: &StudyConfig) -> Result<Manifest, Failure> {
    let inputs = inputs(config)?;
    let mut manifest = Manifest::default();
    record_scenarios(config, &inputs, &mut manifest)?;
    finish(manifest, config)
}

fn record_scenarios(
    config: &StudyConfig,
    inputs: &Inputs,
    manifest: &mut Manifest,
) -> Result<Vec<OutageScenario>, Failure> {
    let out = &config.out_dir;
    let risk = study_risk(config, inputs);
    manifest.record(out, "risk.csv", risk.to_csv().as_bytes()).map_err(stage("risk"))?;
    let index = map_lines_to_counties(&inputs.network, &inputs.regions);
    let scenarios = generate_scenarios(config, inputs, &index, &risk)?;
    info!("generated {} scenarios", scenarios.len());
    manifest
        .record(out, "scenarios.jsonl", scenarios_to_jsonl(&scenarios).as_bytes())
        .map_err(stage("scenarios"))?;
    manifest
        .record(out, "outage_summary.csv", summarize_outages(&scenarios).to_csv().as_bytes())
        .map_err(stage("scenarios"))?;
    Ok(scenarios)
}

/// The whole pipeline: risk, scenarios, solves, tables and charts.
pub fn cmd_run(config: &StudyConfig) -> Result<Manifest, Failure> {
    let inputs = inputs(config)?;
    let mut manifest = Manifest::default();
    let scenarios = record_scenarios(config, &inputs, &mut manifest)?;
    let results = evaluate_scenarios(config, &inputs, &scenarios)?;
    record_report(&mut manifest, &config.out_dir, &results, &inputs)?;
    finish(manifest, config)
}

/// Rebuilds summaries and charts from an existing `results.csv`.
pub fn cmd_report(config: &StudyConfig) -> Result<Manifest, Failure> {
    let inputs = inputs(config)?;
    let path = config.out_dir.join("results.csv");
    let text = fs::read_to_string(&path).map_err(|e| Failure::Stage {
        stage: "report",
        message: format!("{}: {e}", path.display()),
    })?;
    let results = parse_results_csv(&text).map_err(stage("report"))?;
    let mut manifest = Manifest::default();
    record_report(&mut manifest, &config.out_dir, &results, &inputs)?;
    finish(manifest, config)
}

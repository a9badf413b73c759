//! Multi-hazard grid resilience evaluation.
//!
//! The pipeline runs hazard data → county risk → line-outage scenarios →
//! minimum-load-shed DC-OPF → pre/post undergrounding comparison:
//!
//! - [`grid`]: network model, demand profiles, connectivity
//! - [`geo`]: county polygons and the line-to-county index
//! - [`hazard`]: outage records, storm calendars, daily risk
//! - [`scenario`]: seeded beta-prime outage draws and outage summaries
//! - [`dcopf`]: hourly B-theta DC-OPF minimizing load shed
//! - [`resilience`]: undergrounding plans, scenario evaluation, study statistics
//! - [`report`]: CSV tables, manifests and SVG box plots

pub mod dcopf;
pub mod geo;
pub mod grid;
pub mod hazard;
pub mod report;
pub mod resilience;
pub mod scenario;

pub use dcopf::{
    build_hourly_case, solve_day, solve_min_load_shed, DailyDispatch, DcopfError, HourlyCase,
    HourlyDispatch, SolveOptions, SolveReport, SolveStatus,
};
pub use geo::{map_lines_to_counties, parse_regions, segment_intersects_region, LineRegionIndex, Region, RegionSet};
pub use grid::{
    connected_components, parse_demand_profile, parse_network, Bus, Day, DemandProfile, Generator, Line,
    LoadPoint, Network,
};
pub use hazard::{
    compute_risk_table, parse_outage_records, parse_storm_events, HazardCalendar, HazardType, OutageRecord,
    RiskTable,
};
pub use report::{render_distribution_chart, write_results, ChartSeries, ChartSpec, Manifest};
pub use resilience::{
    apply_plan, evaluate_scenario, parse_plan, summarize_study, ScenarioResult, StudySummary, UndergroundPlan,
};
pub use scenario::{
    generate_outage_set, sample_beta_prime, summarize_outages, BetaPrimeParams, OutageScenario, OutageSummary,
    ScenarioConfig, ScenarioGenerator,
};

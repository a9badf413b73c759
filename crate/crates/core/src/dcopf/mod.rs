//! Minimum-load-shed B-theta DC optimal power flow.
//!
//! Each hour is an independent LP:
//!
//! ```text
//! min  sum_n shed_n
//! s.t. pmin_i <= p_i <= pmax_i                     generators
//!      0 <= shed_n <= demand_n                      buses
//!      f_l = 0                                      outaged lines
//!      -fmax_l <= f_l <= fmax_l                     surviving lines
//!      dmin_l <= theta_fr - theta_to <= dmax_l      surviving lines
//!      f_l = -b_l (theta_fr - theta_to)             surviving lines
//!      sum_{l from n} f_l - sum_{l to n} f_l = sum_{i at n} p_i - demand_n + shed_n
//! ```
//!
//! One bus per connected component of the post-outage graph, the smallest bus
//! id, has its angle fixed at 0. Generator minimums are relaxed to 0 unless
//! [`SolveOptions::enforce_gen_min`] is set, which keeps every case feasible.

pub mod lp;

use std::time::Duration;

use thiserror::Error;

use crate::grid::{Day, DemandProfile, Network, HOURS_PER_DAY};
use lp::{LpBackend, LpError, LpModel, Sense, SimplexBackend};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DcopfError {
    #[error("demand profile has no entry for day {0}")]
    MissingDay(Day),
    #[error("hour {0} outside 0..=23")]
    BadHour(usize),
    #[error("unknown line id `{0}`")]
    UnknownLine(String),
    #[error("hour {hour}: {status:?} ({detail})")]
    Solve {
        hour: usize,
        status: SolveStatus,
        detail: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Absolute residual allowed on every constraint of the returned point, MW
    /// or radians. Power balance is checked against this times total demand.
    pub tolerance: f64,
    pub enforce_gen_min: bool,
    /// Attach an equation listing of the LP to the report.
    pub debug_listing: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            enforce_gen_min: false,
            debug_listing: false,
        }
    }
}

/// Problem data for one hour.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyCase<'a> {
    pub network: &'a Network,
    pub day: Day,
    pub hour: usize,
    /// MW per bus index.
    pub demand: Vec<f64>,
    /// Sorted outaged line indexes.
    pub outaged: Vec<usize>,
}

impl HourlyCase<'_> {
    pub fn total_demand(&self) -> f64 {
        self.demand.iter().sum()
    }
}

/// Demand per bus is base demand times the profile multiplier for the hour.
pub fn build_hourly_case<'a, S: AsRef<str>>(
    network: &'a Network,
    day: Day,
    hour: usize,
    profile: &DemandProfile,
    outaged: &[S],
) -> Result<HourlyCase<'a>, DcopfError> {
    let outaged = network
        .resolve_lines(outaged.iter().map(AsRef::as_ref))
        .map_err(|e| match e {
            crate::grid::TopologyError::UnknownLine(id) => DcopfError::UnknownLine(id),
        })?;
    case_from_indexes(network, day, hour, profile, outaged)
}

fn case_from_indexes<'a>(
    network: &'a Network,
    day: Day,
    hour: usize,
    profile: &DemandProfile,
    outaged: Vec<usize>,
) -> Result<HourlyCase<'a>, DcopfError> {
    if hour >= HOURS_PER_DAY {
        return Err(DcopfError::BadHour(hour));
    }
    let multiplier = profile.multipliers(day).ok_or(DcopfError::MissingDay(day))?[hour];
    Ok(HourlyCase {
        network,
        day,
        hour,
        demand: network.base_demand().iter().map(|d| d * multiplier).collect(),
        outaged,
    })
}

/// Optimal operating point for one hour. Outaged lines carry exactly zero flow.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyDispatch {
    pub generation: Vec<f64>,
    pub angle: Vec<f64>,
    pub flow: Vec<f64>,
    pub shed: Vec<f64>,
    /// Sum of `shed`, MW (equivalently MWh over the hour).
    pub total_shed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: u64,
    pub elapsed: Duration,
    pub tolerance: f64,
    /// Largest constraint violation of the returned point.
    pub max_residual: f64,
    pub detail: String,
    pub listing: Option<String>,
    pub solution: Option<HourlyDispatch>,
}

/// Column positions of each variable family in the hourly LP.
#[derive(Debug, Clone)]
pub struct HourlyModel {
    pub model: LpModel,
    pub generation: Vec<usize>,
    pub shed: Vec<usize>,
    pub angle: Vec<usize>,
    /// `None` for outaged lines.
    pub flow: Vec<Option<usize>>,
}

/// Angle reference per component: the bus with the smallest id.
fn reference_buses(network: &Network, outaged_mask: &[bool]) -> Vec<bool> {
    let labels = network.component_labels(outaged_mask);
    let count = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut best: Vec<Option<usize>> = vec![None; count];
    for (bus, &c) in labels.iter().enumerate() {
        let id = &network.buses()[bus].id;
        if best[c].is_none_or(|b| id < &network.buses()[b].id) {
            best[c] = Some(bus);
        }
    }
    let mut is_ref = vec![false; labels.len()];
    for b in best.into_iter().flatten() {
        is_ref[b] = true;
    }
    is_ref
}

pub fn build_model(case: &HourlyCase<'_>, options: &SolveOptions) -> HourlyModel {
    let net = case.network;
    let mut outaged_mask = vec![false; net.lines().len()];
    for &l in &case.outaged {
        outaged_mask[l] = true;
    }
    let is_ref = reference_buses(net, &outaged_mask);

    let mut model = LpModel::default();
    let generation: Vec<usize> = net
        .generators()
        .iter()
        .map(|g| {
            let lower = if options.enforce_gen_min { g.p_min } else { 0.0 };
            model.add_var(format!("p[{}]", g.id), lower, g.p_max, 0.0)
        })
        .collect();
    let shed: Vec<usize> = net
        .buses()
        .iter()
        .zip(&case.demand)
        .map(|(b, &d)| model.add_var(format!("shed[{}]", b.id), 0.0, d, 1.0))
        .collect();
    let angle: Vec<usize> = net
        .buses()
        .iter()
        .zip(&is_ref)
        .map(|(b, &r)| {
            let (lo, hi) = if r { (0.0, 0.0) } else { (f64::NEG_INFINITY, f64::INFINITY) };
            model.add_var(format!("theta[{}]", b.id), lo, hi, 0.0)
        })
        .collect();
    let flow: Vec<Option<usize>> = net
        .lines()
        .iter()
        .zip(&outaged_mask)
        .map(|(l, &out)| (!out).then(|| model.add_var(format!("f[{}]", l.id), -l.flow_limit, l.flow_limit, 0.0)))
        .collect();

    for (l, line) in net.lines().iter().enumerate() {
        let Some(f) = flow[l] else { continue };
        let (fr, to) = net.endpoints(l);
        let b = line.susceptance;
        model.add_row(
            format!("flow[{}]", line.id),
            vec![(f, 1.0), (angle[fr], b), (angle[to], -b)],
            Sense::Eq,
            0.0,
        );
        let diff = vec![(angle[fr], 1.0), (angle[to], -1.0)];
        model.add_row(format!("angle_min[{}]", line.id), diff.clone(), Sense::Ge, line.angle_min);
        model.add_row(format!("angle_max[{}]", line.id), diff, Sense::Le, line.angle_max);
    }

    for (n, bus) in net.buses().iter().enumerate() {
        let mut terms = Vec::new();
        terms.extend(net.lines_from(n).iter().filter_map(|&l| flow[l]).map(|f| (f, 1.0)));
        terms.extend(net.lines_to(n).iter().filter_map(|&l| flow[l]).map(|f| (f, -1.0)));
        terms.extend(net.generators_at(n).iter().map(|&g| (generation[g], -1.0)));
        terms.push((shed[n], -1.0));
        model.add_row(format!("balance[{}]", bus.id), terms, Sense::Eq, -case.demand[n]);
    }

    HourlyModel {
        model,
        generation,
        shed,
        angle,
        flow,
    }
}

/// Solves one hour with the default simplex backend.
pub fn solve_min_load_shed(case: &HourlyCase<'_>, options: &SolveOptions) -> SolveReport {
    solve_min_load_shed_with(&SimplexBackend, case, options)
}

pub fn solve_min_load_shed_with(
    backend: &dyn LpBackend,
    case: &HourlyCase<'_>,
    options: &SolveOptions,
) -> SolveReport {
    let hourly = build_model(case, options);
    let listing = options.debug_listing.then(|| hourly.model.listing());
    let failed = |status, detail: String| SolveReport {
        status,
        iterations: 0,
        elapsed: Duration::ZERO,
        tolerance: options.tolerance,
        max_residual: f64::NAN,
        detail,
        listing: listing.clone(),
        solution: None,
    };
    let sol = match backend.solve(&hourly.model) {
        Ok(sol) => sol,
        Err(LpError::Infeasible) if options.enforce_gen_min => {
            return failed(SolveStatus::Infeasible, "forced generation cannot be absorbed".into())
        }
        Err(e) => return failed(SolveStatus::NumericalFailure, e.to_string()),
    };

    let x = &sol.values;
    let max_residual = hourly.model.max_violation(x);
    let pick = |cols: &[usize]| cols.iter().map(|&j| x[j]).collect::<Vec<f64>>();
    let shed = pick(&hourly.shed);
    let dispatch = HourlyDispatch {
        generation: pick(&hourly.generation),
        angle: pick(&hourly.angle),
        flow: hourly.flow.iter().map(|f| f.map_or(0.0, |j| x[j])).collect(),
        total_shed: shed.iter().sum(),
        shed,
    };
    let balance_scale = case.total_demand().max(1.0);
    let status = if max_residual.is_finite() && max_residual <= options.tolerance * balance_scale {
        SolveStatus::Optimal
    } else {
        SolveStatus::NumericalFailure
    };
    SolveReport {
        status,
        iterations: sol.iterations,
        elapsed: sol.elapsed,
        tolerance: options.tolerance,
        max_residual,
        detail: String::new(),
        listing,
        solution: (status == SolveStatus::Optimal).then_some(dispatch),
    }
}

/// 24 independent hourly solves for one day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyDispatch {
    pub day: Day,
    pub hours: Vec<HourlyDispatch>,
    /// Total shed over the day, MWh.
    pub shed_mwh: f64,
}

/// Runs the 24 hours of `day`; the daily objective is the hourly shed summed
/// over one-hour periods.
pub fn solve_day<S: AsRef<str>>(
    network: &Network,
    day: Day,
    profile: &DemandProfile,
    outaged: &[S],
    options: &SolveOptions,
) -> Result<DailyDispatch, DcopfError> {
    let outaged = network
        .resolve_lines(outaged.iter().map(AsRef::as_ref))
        .map_err(|e| match e {
            crate::grid::TopologyError::UnknownLine(id) => DcopfError::UnknownLine(id),
        })?;
    solve_day_indexed(network, day, profile, &outaged, options)
}

/// [`solve_day`] with pre-resolved, sorted line indexes.
pub fn solve_day_indexed(
    network: &Network,
    day: Day,
    profile: &DemandProfile,
    outaged: &[usize],
    options: &SolveOptions,
) -> Result<DailyDispatch, DcopfError> {
    let mut hours = Vec::with_capacity(HOURS_PER_DAY);
    for hour in 0..HOURS_PER_DAY {
        let case = case_from_indexes(network, day, hour, profile, outaged.to_vec())?;
        let report = solve_min_load_shed(&case, options);
        match report.solution {
            Some(dispatch) => hours.push(dispatch),
            None => {
                return Err(DcopfError::Solve {
                    hour,
                    status: report.status,
                    detail: if report.detail.is_empty() {
                        format!("max residual {}", report.max_residual)
                    } else {
                        report.detail
                    },
                })
            }
        }
    }
    let shed_mwh = hours.iter().map(|h| h.total_shed).sum();
    Ok(DailyDispatch { day, hours, shed_mwh })
}

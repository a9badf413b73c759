//! Transmission network data model.
//!
//! Powers are in MW, angles in radians and susceptances are pre-scaled to
//! MW/radian, so a line flow is `f = -b * (theta_from - theta_to)` in MW with
//! no per-unit conversion. Converting per-unit case data is left to whoever
//! prepares the network file.
//!
//! A [`Network`] is immutable once built and all queries are pure, so it can be
//! shared freely between worker threads.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Angle-difference bound applied when a line omits `angle_min`/`angle_max`.
pub const DEFAULT_ANGLE_LIMIT: f64 = PI / 6.0;

/// Hours in a demand day.
pub const HOURS_PER_DAY: usize = 24;

/// Day-of-year index, 1-based.
pub type Day = u16;

/// Largest accepted day index.
pub const MAX_DAY: Day = 365;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("malformed network document: {0}")]
    Syntax(String),
    #[error("{locator}: {message}")]
    Schema { locator: String, message: String },
    #[error("{locator}: duplicate {kind} id `{id}`")]
    DuplicateId {
        locator: String,
        kind: &'static str,
        id: String,
    },
    #[error("{locator}: {kind} `{id}` references unknown bus `{bus}`")]
    UnknownBus {
        locator: String,
        kind: &'static str,
        id: String,
        bus: String,
    },
    #[error("{locator}: {kind} `{id}` violates {rule}")]
    Invariant {
        locator: String,
        kind: &'static str,
        id: String,
        rule: String,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("unknown line id `{0}`")]
    UnknownLine(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("malformed demand profile: {0}")]
    Syntax(String),
    #[error("demand profile day `{0}` is not an integer in 1..=365")]
    BadDay(String),
    #[error("demand profile day {day}: expected 24 multipliers, found {found}")]
    WrongLength { day: Day, found: usize },
    #[error("demand profile day {day} hour {hour}: multiplier {value} is negative or not finite")]
    BadMultiplier { day: Day, hour: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub latitude: f64,
    pub longitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    /// MW per radian.
    pub susceptance: f64,
    /// MW.
    pub flow_limit: f64,
    #[serde(default = "default_angle_min")]
    pub angle_min: f64,
    #[serde(default = "default_angle_max")]
    pub angle_max: f64,
}

fn default_angle_min() -> f64 {
    -DEFAULT_ANGLE_LIMIT
}

fn default_angle_max() -> f64 {
    DEFAULT_ANGLE_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub p_min: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadPoint {
    pub bus: String,
    pub base_demand: f64,
}

#[derive(Debug, Serialize)]
struct NetworkDocument<'a> {
    buses: &'a [Bus],
    lines: &'a [Line],
    generators: &'a [Generator],
    loads: &'a [LoadPoint],
}

/// Buses, lines, generators and loads with the adjacency indexes the power
/// flow model needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    generators: Vec<Generator>,
    loads: Vec<LoadPoint>,
    bus_index: HashMap<String, usize>,
    line_index: HashMap<String, usize>,
    // Resolved endpoints, (from, to) as bus indexes.
    endpoints: Vec<(usize, usize)>,
    lines_from: Vec<Vec<usize>>,
    lines_to: Vec<Vec<usize>>,
    generators_at: Vec<Vec<usize>>,
    generator_bus: Vec<usize>,
    base_demand: Vec<f64>,
}

impl Network {
    /// Validates the collections and builds the indexes. Load points sharing a
    /// bus are summed into one.
    pub fn new(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        generators: Vec<Generator>,
        loads: Vec<LoadPoint>,
    ) -> Result<Self, NetworkError> {
        let mut bus_index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            let locator = format!("buses[{i}]");
            if bus.id.is_empty() {
                return Err(NetworkError::Invariant {
                    locator,
                    kind: "bus",
                    id: bus.id.clone(),
                    rule: "nonempty id".into(),
                });
            }
            if !(-90.0..=90.0).contains(&bus.latitude) {
                return Err(invariant(locator, "bus", &bus.id, "latitude in [-90, 90]"));
            }
            if !(-180.0..=180.0).contains(&bus.longitude) {
                return Err(invariant(locator, "bus", &bus.id, "longitude in [-180, 180]"));
            }
            if bus_index.insert(bus.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateId {
                    locator,
                    kind: "bus",
                    id: bus.id.clone(),
                });
            }
        }

        let n = buses.len();
        let resolve = |locator: &str, kind: &'static str, id: &str, bus: &str| {
            bus_index
                .get(bus)
                .copied()
                .ok_or_else(|| NetworkError::UnknownBus {
                    locator: locator.to_string(),
                    kind,
                    id: id.to_string(),
                    bus: bus.to_string(),
                })
        };

        let mut line_index = HashMap::with_capacity(lines.len());
        let mut endpoints = Vec::with_capacity(lines.len());
        let mut lines_from = vec![Vec::new(); n];
        let mut lines_to = vec![Vec::new(); n];
        for (i, line) in lines.iter().enumerate() {
            let locator = format!("lines[{i}]");
            if line.id.is_empty() {
                return Err(invariant(locator, "line", &line.id, "nonempty id"));
            }
            let from = resolve(&locator, "line", &line.id, &line.from_bus)?;
            let to = resolve(&locator, "line", &line.id, &line.to_bus)?;
            if from == to {
                return Err(invariant(locator, "line", &line.id, "from_bus != to_bus"));
            }
            if !(line.susceptance > 0.0 && line.susceptance.is_finite()) {
                return Err(invariant(locator, "line", &line.id, "susceptance > 0"));
            }
            if !(line.flow_limit >= 0.0 && line.flow_limit.is_finite()) {
                return Err(invariant(locator, "line", &line.id, "flow_limit >= 0"));
            }
            if !(line.angle_min <= 0.0 && line.angle_max >= 0.0)
                || !line.angle_min.is_finite()
                || !line.angle_max.is_finite()
            {
                return Err(invariant(
                    locator,
                    "line",
                    &line.id,
                    "angle_min <= 0 <= angle_max",
                ));
            }
            if line_index.insert(line.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateId {
                    locator,
                    kind: "line",
                    id: line.id.clone(),
                });
            }
            endpoints.push((from, to));
            lines_from[from].push(i);
            lines_to[to].push(i);
        }

        let mut generator_ids = HashMap::with_capacity(generators.len());
        let mut generators_at = vec![Vec::new(); n];
        let mut generator_bus = Vec::with_capacity(generators.len());
        for (i, gen) in generators.iter().enumerate() {
            let locator = format!("generators[{i}]");
            if gen.id.is_empty() {
                return Err(invariant(locator, "generator", &gen.id, "nonempty id"));
            }
            let bus = resolve(&locator, "generator", &gen.id, &gen.bus)?;
            if !(gen.p_min >= 0.0 && gen.p_min <= gen.p_max && gen.p_max.is_finite()) {
                return Err(invariant(
                    locator,
                    "generator",
                    &gen.id,
                    "0 <= p_min <= p_max",
                ));
            }
            if generator_ids.insert(gen.id.as_str(), i).is_some() {
                return Err(NetworkError::DuplicateId {
                    locator,
                    kind: "generator",
                    id: gen.id.clone(),
                });
            }
            generators_at[bus].push(i);
            generator_bus.push(bus);
        }

        let mut base_demand = vec![0.0; n];
        let mut aggregated: Vec<LoadPoint> = Vec::new();
        let mut load_slot: HashMap<usize, usize> = HashMap::new();
        for (i, load) in loads.iter().enumerate() {
            let locator = format!("loads[{i}]");
            let bus = resolve(&locator, "load", &load.bus, &load.bus)?;
            if !(load.base_demand >= 0.0 && load.base_demand.is_finite()) {
                return Err(invariant(locator, "load", &load.bus, "base_demand >= 0"));
            }
            base_demand[bus] += load.base_demand;
            match load_slot.get(&bus) {
                Some(&slot) => aggregated[slot].base_demand += load.base_demand,
                None => {
                    load_slot.insert(bus, aggregated.len());
                    aggregated.push(load.clone());
                }
            }
        }

        Ok(Self {
            buses,
            lines,
            generators,
            loads: aggregated,
            bus_index,
            line_index,
            endpoints,
            lines_from,
            lines_to,
            generators_at,
            generator_bus,
            base_demand,
        })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Aggregated load points, at most one per bus.
    pub fn loads(&self) -> &[LoadPoint] {
        &self.loads
    }

    pub fn bus_idx(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    pub fn line_idx(&self, id: &str) -> Option<usize> {
        self.line_index.get(id).copied()
    }

    /// `(from, to)` bus indexes of a line.
    pub fn endpoints(&self, line: usize) -> (usize, usize) {
        self.endpoints[line]
    }

    /// Lines whose `from_bus` is the given bus.
    pub fn lines_from(&self, bus: usize) -> &[usize] {
        &self.lines_from[bus]
    }

    /// Lines whose `to_bus` is the given bus.
    pub fn lines_to(&self, bus: usize) -> &[usize] {
        &self.lines_to[bus]
    }

    pub fn generators_at(&self, bus: usize) -> &[usize] {
        &self.generators_at[bus]
    }

    pub fn generator_bus(&self, gen: usize) -> usize {
        self.generator_bus[gen]
    }

    /// Base demand per bus index, MW.
    pub fn base_demand(&self) -> &[f64] {
        &self.base_demand
    }

    /// Resolves line ids to sorted, duplicate-free line indexes.
    pub fn resolve_lines<'a, I>(&self, ids: I) -> Result<Vec<usize>, TopologyError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut out = ids
            .into_iter()
            .map(|id| {
                self.line_idx(id)
                    .ok_or_else(|| TopologyError::UnknownLine(id.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Component label per bus index for the graph without the removed lines.
    /// Labels are dense, assigned in order of each component's first bus index.
    pub fn component_labels(&self, removed: &[bool]) -> Vec<usize> {
        let n = self.buses.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (l, &(a, b)) in self.endpoints.iter().enumerate() {
            if removed.get(l).copied().unwrap_or(false) {
                continue;
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut label_of_root = HashMap::new();
        (0..n)
            .map(|i| {
                let root = find(&mut parent, i);
                let next = label_of_root.len();
                *label_of_root.entry(root).or_insert(next)
            })
            .collect()
    }

    /// Serializes back to the network file schema.
    pub fn to_json(&self) -> String {
        let doc = NetworkDocument {
            buses: &self.buses,
            lines: &self.lines,
            generators: &self.generators,
            loads: &self.loads,
        };
        serde_json::to_string_pretty(&doc).expect("network serializes")
    }
}

fn invariant(locator: String, kind: &'static str, id: &str, rule: &str) -> NetworkError {
    NetworkError::Invariant {
        locator,
        kind,
        id: id.to_string(),
        rule: rule.to_string(),
    }
}

fn records<T: for<'de> Deserialize<'de>>(
    doc: &mut serde_json::Map<String, Value>,
    key: &str,
) -> Result<Vec<T>, NetworkError> {
    let value = doc.remove(key).ok_or_else(|| NetworkError::Schema {
        locator: key.to_string(),
        message: "missing top-level array".into(),
    })?;
    let Value::Array(items) = value else {
        return Err(NetworkError::Schema {
            locator: key.to_string(),
            message: "expected an array".into(),
        });
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            serde_json::from_value(item).map_err(|e| NetworkError::Schema {
                locator: format!("{key}[{i}]"),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Parses a network document with top-level `buses`, `lines`, `generators`
/// and `loads` arrays.
pub fn parse_network(text: &str) -> Result<Network, NetworkError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| NetworkError::Syntax(e.to_string()))?;
    let Value::Object(mut doc) = value else {
        return Err(NetworkError::Syntax("expected a JSON object".into()));
    };
    let buses = records(&mut doc, "buses")?;
    let lines = records(&mut doc, "lines")?;
    let generators = records(&mut doc, "generators")?;
    let loads = records(&mut doc, "loads")?;
    Network::new(buses, lines, generators, loads)
}

/// Partitions bus ids into connected components after removing `removed`.
///
/// Each component is sorted, and components are ordered by their smallest id.
pub fn connected_components<'a, I>(
    network: &Network,
    removed: I,
) -> Result<Vec<Vec<String>>, TopologyError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut mask = vec![false; network.lines().len()];
    for l in network.resolve_lines(removed)? {
        mask[l] = true;
    }
    let labels = network.component_labels(&mask);
    let count = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut components = vec![Vec::new(); count];
    for (bus, &label) in network.buses().iter().zip(&labels) {
        components[label].push(bus.id.clone());
    }
    for c in &mut components {
        c.sort();
    }
    components.sort();
    Ok(components)
}

/// Hourly multipliers on every bus's base demand, keyed by day.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandProfile {
    days: BTreeMap<Day, [f64; HOURS_PER_DAY]>,
}

impl DemandProfile {
    pub fn new(days: BTreeMap<Day, [f64; HOURS_PER_DAY]>) -> Result<Self, ProfileError> {
        for (&day, values) in &days {
            if day == 0 || day > MAX_DAY {
                return Err(ProfileError::BadDay(day.to_string()));
            }
            if let Some((hour, &value)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
            {
                return Err(ProfileError::BadMultiplier { day, hour, value });
            }
        }
        Ok(Self { days })
    }

    /// The same 24 multipliers on every listed day.
    pub fn flat(days: impl IntoIterator<Item = Day>, multiplier: f64) -> Result<Self, ProfileError> {
        Self::new(days.into_iter().map(|d| (d, [multiplier; HOURS_PER_DAY])).collect())
    }

    pub fn multipliers(&self, day: Day) -> Option<&[f64; HOURS_PER_DAY]> {
        self.days.get(&day)
    }

    pub fn days(&self) -> impl Iterator<Item = Day> + '_ {
        self.days.keys().copied()
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<String, &[f64; HOURS_PER_DAY]> =
            self.days.iter().map(|(d, v)| (d.to_string(), v)).collect();
        serde_json::to_string_pretty(&map).expect("profile serializes")
    }
}

/// Parses `{"1": [24 multipliers], "2": [...], ...}`.
pub fn parse_demand_profile(text: &str) -> Result<DemandProfile, ProfileError> {
    let raw: BTreeMap<String, Vec<f64>> =
        serde_json::from_str(text).map_err(|e| ProfileError::Syntax(e.to_string()))?;
    let mut days = BTreeMap::new();
    for (key, values) in raw {
        let day: Day = key
            .trim()
            .parse()
            .ok()
            .filter(|d| (1..=MAX_DAY).contains(d))
            .ok_or_else(|| ProfileError::BadDay(key.clone()))?;
        let found = values.len();
        let values: [f64; HOURS_PER_DAY] = values
            .try_into()
            .map_err(|_| ProfileError::WrongLength { day, found })?;
        days.insert(day, values);
    }
    DemandProfile::new(days)
}

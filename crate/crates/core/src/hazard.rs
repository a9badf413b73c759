//! County outage time series, storm-event calendars and the daily outage
//! probability proxy.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Day, MAX_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HazardType {
    Wildfire,
    Hurricane,
    Wind,
}

impl HazardType {
    pub const ALL: [HazardType; 3] = [HazardType::Wildfire, HazardType::Hurricane, HazardType::Wind];

    pub fn label(self) -> &'static str {
        match self {
            HazardType::Wildfire => "wildfire",
            HazardType::Hurricane => "hurricane",
            HazardType::Wind => "wind",
        }
    }

    /// Stable numeric tag used when deriving random streams.
    pub fn tag(self) -> u64 {
        match self {
            HazardType::Wildfire => 1,
            HazardType::Hurricane => 2,
            HazardType::Wind => 3,
        }
    }
}

impl fmt::Display for HazardType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown hazard label `{0}` (expected wildfire, hurricane or wind)")]
pub struct UnknownHazard(pub String);

impl FromStr for HazardType {
    type Err = UnknownHazard;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wildfire" => Ok(HazardType::Wildfire),
            "hurricane" => Ok(HazardType::Hurricane),
            "wind" => Ok(HazardType::Wind),
            _ => Err(UnknownHazard(s.trim().to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HazardDataError {
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("row {row}: fraction_out {value} outside [0, 1]")]
    FractionOutOfRange { row: usize, value: f64 },
    #[error("row {row}: duplicate record for day {day} hour {hour} fips {fips} (first at row {first})")]
    Duplicate {
        row: usize,
        first: usize,
        day: Day,
        hour: u8,
        fips: String,
    },
    #[error("row {row}: {source}")]
    UnknownHazard { row: usize, source: UnknownHazard },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutageRecord {
    pub day: Day,
    pub hour: u8,
    pub fips: String,
    pub fraction_out: f64,
}

#[derive(Deserialize)]
struct OutageRow {
    day: String,
    hour: String,
    fips: String,
    fraction_out: String,
}

#[derive(Deserialize)]
struct StormRow {
    day: String,
    fips: String,
    hazard: String,
}

fn parse_day(row: usize, raw: &str) -> Result<Day, HazardDataError> {
    raw.trim()
        .parse::<Day>()
        .ok()
        .filter(|d| (1..=MAX_DAY).contains(d))
        .ok_or_else(|| HazardDataError::Malformed {
            row,
            message: format!("day `{raw}` is not an integer in 1..=365"),
        })
}

fn parse_fips(row: usize, raw: &str) -> Result<String, HazardDataError> {
    let fips = raw.trim();
    if fips.is_empty() {
        return Err(HazardDataError::Malformed {
            row,
            message: "empty fips".into(),
        });
    }
    Ok(fips.to_string())
}

// Row numbers are 1-based file lines; the header is line 1.
fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn csv_error(row: usize, err: csv::Error) -> HazardDataError {
    let row = err
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(row);
    HazardDataError::Malformed {
        row,
        message: err.to_string(),
    }
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), HazardDataError> {
    let headers = rdr.headers().map_err(|e| csv_error(1, e))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(HazardDataError::Malformed {
            row: 1,
            message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

/// Parses `day,hour,fips,fraction_out` rows. Out-of-range fractions are
/// rejected rather than clamped.
pub fn parse_outage_records(text: &str) -> Result<Vec<OutageRecord>, HazardDataError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &["day", "hour", "fips", "fraction_out"])?;
    let mut seen: HashMap<(Day, u8, String), usize> = HashMap::new();
    let mut out = Vec::new();
    for (i, result) in rdr.deserialize::<OutageRow>().enumerate() {
        let row = i + 2;
        let raw = result.map_err(|e| csv_error(row, e))?;
        let day = parse_day(row, &raw.day)?;
        let hour = raw
            .hour
            .trim()
            .parse::<u8>()
            .ok()
            .filter(|h| *h < 24)
            .ok_or_else(|| HazardDataError::Malformed {
                row,
                message: format!("hour `{}` is not an integer in 0..=23", raw.hour),
            })?;
        let fips = parse_fips(row, &raw.fips)?;
        let value: f64 = raw
            .fraction_out
            .trim()
            .parse()
            .map_err(|_| HazardDataError::Malformed {
                row,
                message: format!("fraction_out `{}` is not a number", raw.fraction_out),
            })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(HazardDataError::FractionOutOfRange { row, value });
        }
        if let Some(&first) = seen.get(&(day, hour, fips.clone())) {
            return Err(HazardDataError::Duplicate {
                row,
                first,
                day,
                hour,
                fips,
            });
        }
        seen.insert((day, hour, fips.clone()), row);
        out.push(OutageRecord {
            day,
            hour,
            fips,
            fraction_out: value,
        });
    }
    Ok(out)
}

/// Binary storm indicators per (day, county, hazard).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HazardCalendar {
    flags: BTreeSet<(Day, String, HazardType)>,
}

impl HazardCalendar {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when the flag was already present.
    pub fn insert(&mut self, day: Day, fips: impl Into<String>, hazard: HazardType) -> bool {
        self.flags.insert((day, fips.into(), hazard))
    }

    pub fn contains(&self, day: Day, fips: &str, hazard: HazardType) -> bool {
        self.flags.contains(&(day, fips.to_string(), hazard))
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Day, &str, HazardType)> {
        self.flags.iter().map(|(d, f, h)| (*d, f.as_str(), *h))
    }

    /// Keeps only flags for the given hazard.
    pub fn only(&self, hazard: HazardType) -> Self {
        Self {
            flags: self.flags.iter().filter(|f| f.2 == hazard).cloned().collect(),
        }
    }
}

/// Parses `day,fips,hazard` rows; repeated rows collapse to one flag.
pub fn parse_storm_events(text: &str) -> Result<HazardCalendar, HazardDataError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &["day", "fips", "hazard"])?;
    let mut calendar = HazardCalendar::new();
    for (i, result) in rdr.deserialize::<StormRow>().enumerate() {
        let row = i + 2;
        let raw = result.map_err(|e| csv_error(row, e))?;
        let day = parse_day(row, &raw.day)?;
        let fips = parse_fips(row, &raw.fips)?;
        let hazard = raw
            .hazard
            .parse()
            .map_err(|source| HazardDataError::UnknownHazard { row, source })?;
        calendar.insert(day, fips, hazard);
    }
    Ok(calendar)
}

/// County risk values for one (hazard, day).
pub type RiskSlice = BTreeMap<String, f64>;

/// rho per (hazard, day, county): the day's summed hourly outage fractions,
/// kept only where the county-day carries that hazard's flag.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RiskTable {
    slices: BTreeMap<(HazardType, Day), RiskSlice>,
}

static EMPTY_SLICE: RiskSlice = BTreeMap::new();

impl RiskTable {
    pub fn slice(&self, hazard: HazardType, day: Day) -> &RiskSlice {
        self.slices.get(&(hazard, day)).unwrap_or(&EMPTY_SLICE)
    }

    /// Absent entries read as 0.
    pub fn get(&self, hazard: HazardType, day: Day, fips: &str) -> f64 {
        self.slice(hazard, day).get(fips).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, hazard: HazardType, day: Day, fips: impl Into<String>, rho: f64) {
        assert!(rho >= 0.0, "risk must be nonnegative");
        self.slices.entry((hazard, day)).or_default().insert(fips.into(), rho);
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// `(hazard, day, fips, rho)` in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (HazardType, Day, &str, f64)> {
        self.slices
            .iter()
            .flat_map(|(&(h, d), s)| s.iter().map(move |(f, &r)| (h, d, f.as_str(), r)))
    }

    /// Keeps only one hazard's slices.
    pub fn only(&self, hazard: HazardType) -> Self {
        Self {
            slices: self
                .slices
                .iter()
                .filter(|((h, _), _)| *h == hazard)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("hazard,day,fips,rho\n");
        for (h, d, f, r) in self.iter() {
            out.push_str(&format!("{h},{d},{f},{r}\n"));
        }
        out
    }
}

/// Sums each flagged county-day's hourly fractions into every hazard it is
/// flagged with. County-days without a flag contribute nothing.
pub fn compute_risk_table(outages: &[OutageRecord], calendar: &HazardCalendar) -> RiskTable {
    let mut daily: BTreeMap<(Day, &str), f64> = BTreeMap::new();
    for rec in outages {
        *daily.entry((rec.day, rec.fips.as_str())).or_insert(0.0) += rec.fraction_out;
    }
    let mut table = RiskTable::default();
    for (day, fips, hazard) in calendar.iter() {
        if let Some(&rho) = daily.get(&(day, fips)) {
            table.set(hazard, day, fips, rho);
        }
    }
    table
}

//! County polygons and the line-to-county intersection index.
//!
//! Geometry is planar in raw longitude/latitude degrees. A line is the straight
//! segment between its endpoint buses. Boundary contact counts as intersecting
//! and holes are handled with the even-odd rule.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::grid::Network;

/// `(longitude, latitude)` in decimal degrees.
pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("malformed region document: {0}")]
    Syntax(String),
    #[error("feature {index}: missing string property `fips`")]
    MissingFips { index: usize },
    #[error("feature {index} ({fips}): {message}")]
    Geometry {
        index: usize,
        fips: String,
        message: String,
    },
    #[error("feature {index}: duplicate fips `{fips}`")]
    DuplicateFips { index: usize, fips: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    fn of_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut bb = BoundingBox {
            min: [f64::INFINITY; 2],
            max: [f64::NEG_INFINITY; 2],
        };
        for p in points {
            for (axis, &v) in p.iter().enumerate() {
                bb.min[axis] = bb.min[axis].min(v);
                bb.max[axis] = bb.max[axis].max(v);
            }
        }
        bb
    }

    pub fn contains(&self, p: Point) -> bool {
        (0..2).all(|a| self.min[a] <= p[a] && p[a] <= self.max[a])
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        (0..2).all(|a| self.min[a] <= other.max[a] && other.min[a] <= self.max[a])
    }
}

/// One polygon: outer ring first, holes after. Rings are implicitly closed.
pub type Polygon = Vec<Vec<Point>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    fips: String,
    polygons: Vec<Polygon>,
    bbox: BoundingBox,
}

impl Region {
    /// Builds a region, dropping an explicit closing vertex from each ring.
    /// Rings with fewer than three distinct vertices are rejected.
    pub fn new(fips: impl Into<String>, polygons: Vec<Polygon>) -> Result<Self, String> {
        let fips = fips.into();
        if polygons.is_empty() {
            return Err("region has no polygons".into());
        }
        let mut cleaned = Vec::with_capacity(polygons.len());
        for polygon in polygons {
            if polygon.is_empty() {
                return Err("polygon has no rings".into());
            }
            let mut rings = Vec::with_capacity(polygon.len());
            for mut ring in polygon {
                if ring.len() > 1 && ring.first() == ring.last() {
                    ring.pop();
                }
                if ring.len() < 3 {
                    return Err(format!("ring has {} vertices, need at least 3", ring.len()));
                }
                if ring.iter().flatten().any(|c| !c.is_finite()) {
                    return Err("ring has a non-finite coordinate".into());
                }
                rings.push(ring);
            }
            cleaned.push(rings);
        }
        let bbox = BoundingBox::of_points(cleaned.iter().flatten().flatten());
        Ok(Self {
            fips,
            polygons: cleaned,
            bbox,
        })
    }

    pub fn fips(&self) -> &str {
        &self.fips
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    /// Even-odd containment per polygon; boundary points count as inside.
    pub fn contains(&self, p: Point) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        self.polygons.iter().any(|polygon| {
            if polygon.iter().any(|ring| on_ring_boundary(ring, p)) {
                return true;
            }
            polygon.iter().filter(|ring| ring_crossing_odd(ring, p)).count() % 2 == 1
        })
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.polygons
            .iter()
            .flatten()
            .flat_map(|ring| (0..ring.len()).map(move |i| (ring[i], ring[(i + 1) % ring.len()])))
    }
}

fn ring_crossing_odd(ring: &[Point], p: Point) -> bool {
    let mut inside = false;
    let mut j = ring.len() - 1;
    for i in 0..ring.len() {
        let (a, b) = (ring[i], ring[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn on_ring_boundary(ring: &[Point], p: Point) -> bool {
    (0..ring.len()).any(|i| on_segment(ring[i], ring[(i + 1) % ring.len()], p))
}

fn orientation(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn within_box(a: Point, b: Point, p: Point) -> bool {
    a[0].min(b[0]) <= p[0] && p[0] <= a[0].max(b[0]) && a[1].min(b[1]) <= p[1] && p[1] <= a[1].max(b[1])
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    orientation(a, b, p) == 0.0 && within_box(a, b, p)
}

/// Closed-segment intersection test, touching and collinear overlap included.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && within_box(q1, q2, p1))
        || (d2 == 0.0 && within_box(q1, q2, p2))
        || (d3 == 0.0 && within_box(p1, p2, q1))
        || (d4 == 0.0 && within_box(p1, p2, q2))
}

/// True iff the closed segment `p1`–`p2` touches the region: an endpoint lies
/// inside (or on the boundary) or the segment meets any ring edge.
pub fn segment_intersects_region(p1: Point, p2: Point, region: &Region) -> bool {
    let seg_box = BoundingBox::of_points([&p1, &p2]);
    if !seg_box.intersects(&region.bbox) {
        return false;
    }
    if region.contains(p1) || region.contains(p2) {
        return true;
    }
    region
        .edges()
        .any(|(a, b)| segments_intersect(p1, p2, a, b))
}

/// Regions keyed by fips.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegionSet {
    regions: BTreeMap<String, Region>,
}

impl RegionSet {
    pub fn new(regions: impl IntoIterator<Item = Region>) -> Result<Self, RegionError> {
        let mut map = BTreeMap::new();
        for (index, region) in regions.into_iter().enumerate() {
            let fips = region.fips.clone();
            if map.insert(fips.clone(), region).is_some() {
                return Err(RegionError::DuplicateFips { index, fips });
            }
        }
        Ok(Self { regions: map })
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn get(&self, fips: &str) -> Option<&Region> {
        self.regions.get(fips)
    }

    /// Regions in ascending fips order.
    pub fn iter(&self) -> impl Iterator<Item = &Region> {
        self.regions.values()
    }
}

#[derive(Deserialize)]
struct Geometry {
    #[serde(rename = "type")]
    kind: String,
    coordinates: Value,
}

fn parse_polygon(value: Value) -> Result<Polygon, String> {
    let rings: Vec<Vec<Vec<f64>>> =
        serde_json::from_value(value).map_err(|e| format!("bad polygon coordinates: {e}"))?;
    rings
        .into_iter()
        .map(|ring| {
            ring.into_iter()
                .map(|pos| match pos.as_slice() {
                    [lon, lat, ..] => Ok([*lon, *lat]),
                    _ => Err("position needs at least two numbers".to_string()),
                })
                .collect()
        })
        .collect()
}

/// Parses a GeoJSON FeatureCollection of Polygon/MultiPolygon features, each
/// carrying a string `fips` property.
pub fn parse_regions(text: &str) -> Result<RegionSet, RegionError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| RegionError::Syntax(e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(RegionError::Syntax("expected a FeatureCollection".into()));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| RegionError::Syntax("missing `features` array".into()))?;

    let mut regions = Vec::with_capacity(features.len());
    let mut seen = BTreeMap::new();
    for (index, feature) in features.iter().enumerate() {
        let fips = feature
            .get("properties")
            .and_then(|p| p.get("fips"))
            .and_then(Value::as_str)
            .ok_or(RegionError::MissingFips { index })?
            .to_string();
        let geometry_err = |message: String| RegionError::Geometry {
            index,
            fips: fips.clone(),
            message,
        };
        let geometry: Geometry = feature
            .get("geometry")
            .cloned()
            .ok_or_else(|| geometry_err("missing geometry".into()))
            .and_then(|g| serde_json::from_value(g).map_err(|e| geometry_err(e.to_string())))?;
        let polygons = match geometry.kind.as_str() {
            "Polygon" => vec![parse_polygon(geometry.coordinates).map_err(&geometry_err)?],
            "MultiPolygon" => {
                let parts: Vec<Value> = serde_json::from_value(geometry.coordinates)
                    .map_err(|e| geometry_err(e.to_string()))?;
                parts
                    .into_iter()
                    .map(parse_polygon)
                    .collect::<Result<_, _>>()
                    .map_err(&geometry_err)?
            }
            other => return Err(geometry_err(format!("unsupported geometry type `{other}`"))),
        };
        if seen.insert(fips.clone(), index).is_some() {
            return Err(RegionError::DuplicateFips { index, fips });
        }
        regions.push(Region::new(fips.clone(), polygons).map_err(geometry_err)?);
    }
    RegionSet::new(regions)
}

/// Counties intersected by each line, keyed by line id. Every network line is
/// present; county lists are sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineRegionIndex {
    counties: BTreeMap<String, Vec<String>>,
}

impl LineRegionIndex {
    pub fn from_map(map: impl IntoIterator<Item = (String, Vec<String>)>) -> Self {
        let counties = map
            .into_iter()
            .map(|(line, mut fips)| {
                fips.sort();
                fips.dedup();
                (line, fips)
            })
            .collect();
        Self { counties }
    }

    pub fn counties(&self, line: &str) -> Option<&[String]> {
        self.counties.get(line).map(Vec::as_slice)
    }

    /// `(line id, counties)` in ascending line id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.counties.iter().map(|(l, c)| (l.as_str(), c.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.counties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counties.is_empty()
    }
}

/// Segment endpoints of a line as `(longitude, latitude)` pairs.
pub fn line_segment(network: &Network, line: usize) -> (Point, Point) {
    let (from, to) = network.endpoints(line);
    let at = |b: usize| {
        let bus = &network.buses()[b];
        [bus.longitude, bus.latitude]
    };
    (at(from), at(to))
}

/// Builds C_l for every line: the fips of every region its segment touches.
pub fn map_lines_to_counties(network: &Network, regions: &RegionSet) -> LineRegionIndex {
    let counties = network
        .lines()
        .iter()
        .enumerate()
        .map(|(l, line)| {
            let (p1, p2) = line_segment(network, l);
            let hits = regions
                .iter()
                .filter(|r| segment_intersects_region(p1, p2, r))
                .map(|r| r.fips.clone())
                .collect();
            (line.id.clone(), hits)
        })
        .collect();
    LineRegionIndex { counties }
}

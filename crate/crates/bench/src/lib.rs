//! Synthetic studies for the benchmarks.

use gridres::geo::{LineRegionIndex, Region, RegionSet};
use gridres::grid::{Bus, DemandProfile, Generator, Line, LoadPoint, Network, HOURS_PER_DAY};
use gridres::hazard::RiskSlice;
use gridres::map_lines_to_counties;

/// A square mesh of buses half a degree apart, tiled by one-degree counties.
pub struct SyntheticStudy {
    pub network: Network,
    pub regions: RegionSet,
    pub index: LineRegionIndex,
    pub profile: DemandProfile,
}

fn bus_id(r: usize, c: usize) -> String {
    format!("b{r}_{c}")
}

pub fn mesh_network(side: usize) -> Network {
    let mut buses = Vec::new();
    let mut lines = Vec::new();
    let mut gens = Vec::new();
    let mut loads = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let i = r * side + c;
            buses.push(Bus {
                id: bus_id(r, c),
                longitude: -100.0 + 0.5 * c as f64 + 0.1,
                latitude: 30.0 + 0.5 * r as f64 + 0.1,
            });
            let mut link = |to: String, n: usize| {
                lines.push(Line {
                    id: format!("L{i}_{n}"),
                    from_bus: bus_id(r, c),
                    to_bus: to,
                    susceptance: 80.0 + (i * 37 % 120) as f64,
                    flow_limit: 40.0 + (i * 13 % 50) as f64,
                    angle_min: -0.5,
                    angle_max: 0.5,
                });
            };
            if c + 1 < side {
                link(bus_id(r, c + 1), 0);
            }
            if r + 1 < side {
                link(bus_id(r + 1, c), 1);
            }
            if i.is_multiple_of(3) {
                gens.push(Generator {
                    id: format!("G{i}"),
                    bus: bus_id(r, c),
                    p_min: 0.0,
                    p_max: 90.0 + (i * 7 % 40) as f64,
                });
            }
            loads.push(LoadPoint {
                bus: bus_id(r, c),
                base_demand: 15.0 + (i * 11 % 20) as f64,
            });
        }
    }
    Network::new(buses, lines, gens, loads).expect("mesh is valid")
}

pub fn county_tiles(side: usize) -> RegionSet {
    let tiles = side.div_ceil(2);
    let regions = (0..tiles).flat_map(|r| {
        (0..tiles).map(move |c| {
            let (x, y) = (-100.0 + c as f64, 30.0 + r as f64);
            let ring = vec![[x, y], [x + 1.0, y], [x + 1.0, y + 1.0], [x, y + 1.0]];
            Region::new(county_fips(r * tiles + c), vec![vec![ring]]).expect("tile is valid")
        })
    });
    RegionSet::new(regions).expect("tiles are distinct")
}

pub fn county_fips(i: usize) -> String {
    format!("{:05}", 48001 + i)
}

/// Hourly multipliers following a daily cycle peaking late afternoon.
pub fn cyclic_profile(days: u16) -> DemandProfile {
    let hours: [f64; HOURS_PER_DAY] =
        std::array::from_fn(|h| 0.85 + 0.3 * ((h as f64 - 11.0) * std::f64::consts::PI / 12.0).sin());
    DemandProfile::new((1..=days).map(|d| (d, hours)).collect()).expect("profile is valid")
}

/// Every county at `rho`.
pub fn uniform_risk(regions: &RegionSet, rho: f64) -> RiskSlice {
    regions.iter().map(|r| (r.fips().to_string(), rho)).collect()
}

impl SyntheticStudy {
    pub fn new(side: usize, days: u16) -> Self {
        let network = mesh_network(side);
        let regions = county_tiles(side);
        let index = map_lines_to_counties(&network, &regions);
        Self {
            network,
            regions,
            index,
            profile: cyclic_profile(days),
        }
    }
}

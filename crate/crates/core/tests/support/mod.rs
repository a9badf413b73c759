#![allow(dead_code)]

pub mod oracle;

use gridres::grid::{Bus, Generator, Line, LoadPoint, Network};

pub fn bus(id: &str, lon: f64, lat: f64) -> Bus {
    Bus {
        id: id.into(),
        latitude: lat,
        longitude: lon,
    }
}

pub fn line(id: &str, from: &str, to: &str, susceptance: f64, flow_limit: f64, angle: f64) -> Line {
    Line {
        id: id.into(),
        from_bus: from.into(),
        to_bus: to.into(),
        susceptance,
        flow_limit,
        angle_min: -angle,
        angle_max: angle,
    }
}

pub fn gen(id: &str, bus: &str, p_min: f64, p_max: f64) -> Generator {
    Generator {
        id: id.into(),
        bus: bus.into(),
        p_min,
        p_max,
    }
}

pub fn load(bus: &str, base_demand: f64) -> LoadPoint {
    LoadPoint {
        bus: bus.into(),
        base_demand,
    }
}

/// Triangle A-B-C with generation at A, load at C and a tight A-C line.
pub fn triangle() -> Network {
    Network::new(
        vec![bus("A", 0.0, 0.0), bus("B", 1.0, 0.0), bus("C", 0.5, 1.0)],
        vec![
            line("AB", "A", "B", 100.0, 200.0, 0.5),
            line("BC", "B", "C", 100.0, 200.0, 0.5),
            line("AC", "A", "C", 100.0, 10.0, 0.5),
        ],
        vec![gen("G", "A", 0.0, 300.0)],
        vec![load("C", 100.0)],
    )
    .unwrap()
}

/// Four buses, five lines (ring plus a chord), two generators.
pub fn four_bus() -> Network {
    Network::new(
        vec![
            bus("N1", 0.0, 0.0),
            bus("N2", 1.0, 0.0),
            bus("N3", 1.0, 1.0),
            bus("N4", 0.0, 1.0),
        ],
        vec![
            line("L12", "N1", "N2", 150.0, 60.0, 0.4),
            line("L23", "N2", "N3", 80.0, 45.0, 0.4),
            line("L34", "N3", "N4", 120.0, 70.0, 0.3),
            line("L41", "N4", "N1", 90.0, 35.0, 0.5),
            line("L13", "N1", "N3", 60.0, 25.0, 0.35),
        ],
        vec![gen("G1", "N1", 10.0, 120.0), gen("G3", "N3", 0.0, 40.0)],
        vec![load("N2", 55.0), load("N3", 30.0), load("N4", 50.0), load("N1", 10.0)],
    )
    .unwrap()
}

/// Five buses with generators co-located with some loads.
pub fn five_bus() -> Network {
    Network::new(
        vec![
            bus("A", 0.2, 0.2),
            bus("B", 1.5, 0.4),
            bus("C", 2.6, 0.5),
            bus("D", 1.2, 1.6),
            bus("E", 2.4, 1.5),
        ],
        vec![
            line("AB", "A", "B", 200.0, 80.0, 0.5),
            line("BC", "B", "C", 180.0, 60.0, 0.5),
            line("AD", "A", "D", 150.0, 70.0, 0.5),
            line("BD", "B", "D", 120.0, 50.0, 0.5),
            line("DE", "D", "E", 160.0, 60.0, 0.5),
            line("CE", "C", "E", 140.0, 40.0, 0.5),
        ],
        vec![
            gen("GA", "A", 0.0, 150.0),
            gen("GB", "B", 0.0, 30.0),
            gen("GC1", "C", 0.0, 20.0),
            gen("GC2", "C", 0.0, 25.0),
            gen("GE", "E", 0.0, 80.0),
        ],
        vec![
            load("A", 20.0),
            load("B", 60.0),
            load("C", 40.0),
            load("D", 35.0),
            load("E", 50.0),
        ],
    )
    .unwrap()
}

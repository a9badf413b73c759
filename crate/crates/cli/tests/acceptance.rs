//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gridres::dcopf::{build_hourly_case, solve_day, solve_day_indexed, SolveOptions};
use gridres::geo::{map_lines_to_counties, Region, RegionSet};
use gridres::grid::{Bus, DemandProfile, Line, Network};
use gridres::hazard::{HazardType, RiskSlice};
use gridres::report::{parse_results_csv, sha256_hex, Manifest};
use gridres::resilience::ScenarioResult;
use gridres::scenario::{
    sample_beta_prime, scenario_stream, summarize_outages, BetaPrimeParams, OutageScenario, ScenarioConfig,
    ScenarioGenerator,
};
use gridres_cli::commands::{evaluate_scenarios, generate_scenarios, load_inputs, study_risk, Inputs};
use gridres_cli::{cmd_run, Overrides, StudyConfig};
use support::oracle::{beta_prime_cdf, oracle_min_shed};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/study")
}

fn study(overrides: Overrides) -> StudyConfig {
    StudyConfig::load(&fixtures().join("study.toml"), &overrides).expect("fixture config loads")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn beta_prime_mean() -> Outcome {
    let start = Instant::now();
    let params = BetaPrimeParams::default();
    let mut rng = scenario_stream(2024, HazardType::Wind, 1, 0);
    let n = 1_000_000;
    let mut sum = 0.0;
    for _ in 0..n {
        sum += sample_beta_prime(&mut rng, params);
    }
    let mean = sum / n as f64;
    let elapsed = start.elapsed();
    check(
        (mean - 0.01).abs() <= 0.001 && elapsed < Duration::from_secs(10),
        format!("mean {mean:.6} over 1e6 draws (target 0.01 +/- 0.001), {:.2} s (limit 10 s)", elapsed.as_secs_f64()),
    )
}

fn outage_rule_calibration() -> Outcome {
    let region = Region::new("48999", vec![vec![vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]]]).unwrap();
    let bus = |id: &str, x: f64| Bus {
        id: id.into(),
        longitude: x,
        latitude: 0.5,
    };
    let network = Network::new(
        vec![bus("W", -0.5), bus("E", 1.5)],
        vec![Line {
            id: "WE".into(),
            from_bus: "W".into(),
            to_bus: "E".into(),
            susceptance: 10.0,
            flow_limit: 10.0,
            angle_min: -0.5,
            angle_max: 0.5,
        }],
        vec![],
        vec![],
    )
    .unwrap();
    let index = map_lines_to_counties(&network, &RegionSet::new([region]).unwrap());
    if index.counties("WE") != Some(&["48999".to_string()][..]) {
        return Err(format!("line should cross exactly one county, got {:?}", index.counties("WE")));
    }
    let n = 100_000u32;
    let config = ScenarioConfig::new(31, n, BetaPrimeParams::default()).unwrap();
    let generator = ScenarioGenerator::new(&network, &index, config).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for rho in [0.005, 0.05, 0.5] {
        let risk: RiskSlice = [("48999".to_string(), rho)].into_iter().collect();
        let hits = (0..n)
            .filter(|&k| !generator.generate(HazardType::Wildfire, 100, k, &risk, false).unwrap().outaged_lines.is_empty())
            .count();
        let freq = hits as f64 / f64::from(n);
        let cdf = beta_prime_cdf(rho, 0.02, 3.0);
        ok &= (freq - cdf).abs() <= 0.01;
        parts.push(format!("rho {rho}: freq {freq:.4} vs cdf {cdf:.4}"));
    }
    check(ok, format!("{} (tolerance 0.01)", parts.join("; ")))
}

fn run_into(dir: &Path, parallel: usize) -> Result<(Manifest, Vec<u8>), String> {
    let config = study(Overrides {
        out: Some(dir.to_path_buf()),
        parallel: Some(parallel),
        ..Overrides::default()
    });
    let manifest = cmd_run(&config).map_err(|e| e.to_string())?;
    let bytes = fs::read(dir.join("manifest.json")).map_err(|e| e.to_string())?;
    Ok((manifest, bytes))
}

fn determinism() -> Outcome {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let (a, a_bytes) = run_into(dirs[0].path(), 4)?;
    let (b, b_bytes) = run_into(dirs[1].path(), 4)?;
    let (one, one_bytes) = run_into(dirs[2].path(), 1)?;
    let (eight, eight_bytes) = run_into(dirs[0].path(), 8)?;
    let same = a == b && a == one && a == eight && a_bytes == b_bytes && a_bytes == one_bytes && a_bytes == eight_bytes;
    check(
        same && a.files.len() >= 9,
        format!("{} files; repeat run, --parallel 1 and --parallel 8 manifests identical: {same}", a.files.len()),
    )
}

/// Every distinct (day, outage set) the fixture study solves, plan applied or not.
fn fixture_cases(inputs: &Inputs, scenarios: &[OutageScenario]) -> BTreeSet<(u16, Vec<usize>)> {
    let mut cases = BTreeSet::new();
    for s in scenarios {
        let pre = inputs.network.resolve_lines(s.outaged_lines.iter().map(String::as_str)).unwrap();
        let post: Vec<usize> = pre
            .iter()
            .copied()
            .filter(|&l| !inputs.plan.as_ref().unwrap().contains(&inputs.network.lines()[l].id))
            .collect();
        cases.insert((s.day, pre));
        cases.insert((s.day, post));
    }
    cases
}

fn conservation() -> Outcome {
    let config = study(Overrides::default());
    let inputs = load_inputs(&config).map_err(|f| format!("{f:?}"))?;
    let risk = study_risk(&config, &inputs);
    let index = map_lines_to_counties(&inputs.network, &inputs.regions);
    let scenarios = generate_scenarios(&config, &inputs, &index, &risk).map_err(|e| e.to_string())?;
    let net = &inputs.network;
    let (mut hours, mut worst_balance, mut worst_residual) = (0, 0.0f64, 0.0f64);
    for (day, outaged) in fixture_cases(&inputs, &scenarios) {
        let daily = solve_day_indexed(net, day, &inputs.profile, &outaged, &SolveOptions::default()).map_err(|e| e.to_string())?;
        let mut down = vec![false; net.lines().len()];
        for &l in &outaged {
            down[l] = true;
        }
        for (hour, d) in daily.hours.iter().enumerate() {
            let case = build_hourly_case::<&str>(net, day, hour, &inputs.profile, &[]).unwrap();
            let demand: f64 = case.demand.iter().sum();
            let served: f64 = case.demand.iter().zip(&d.shed).map(|(x, s)| x - s).sum();
            let generated: f64 = d.generation.iter().sum();
            worst_balance = worst_balance.max((generated - served).abs() / demand);

            let mut r = 0.0f64;
            let mut viol = |v: f64| r = r.max(v);
            for (g, p) in net.generators().iter().zip(&d.generation) {
                viol(-p);
                viol(p - g.p_max);
            }
            for (x, s) in case.demand.iter().zip(&d.shed) {
                viol(-s);
                viol(s - x);
            }
            for (l, line) in net.lines().iter().enumerate() {
                let (fr, to) = net.endpoints(l);
                if down[l] {
                    viol(d.flow[l].abs());
                    continue;
                }
                let dtheta = d.angle[fr] - d.angle[to];
                viol((d.flow[l] + line.susceptance * dtheta).abs());
                viol(d.flow[l].abs() - line.flow_limit);
                viol(line.angle_min - dtheta);
                viol(dtheta - line.angle_max);
            }
            for b in 0..net.buses().len() {
                let out: f64 = net.lines_from(b).iter().map(|&l| d.flow[l]).sum::<f64>()
                    - net.lines_to(b).iter().map(|&l| d.flow[l]).sum::<f64>();
                let inj: f64 = net.generators_at(b).iter().map(|&g| d.generation[g]).sum::<f64>() - case.demand[b] + d.shed[b];
                viol((out - inj).abs());
            }
            worst_residual = worst_residual.max(r);
            hours += 1;
        }
    }
    check(
        worst_balance <= 1e-6 && worst_residual <= 1e-6,
        format!("{hours} hours; worst |gen - served| / demand {worst_balance:.2e}, worst residual {worst_residual:.2e} (limit 1e-6)"),
    )
}

fn all_lines_out() -> Outcome {
    let inputs = load_inputs(&study(Overrides::default())).map_err(|f| format!("{f:?}"))?;
    let net = &inputs.network;
    let colocated = (0..net.buses().len()).any(|b| net.generators_at(b).len() > 1);
    let all: Vec<&str> = net.lines().iter().map(|l| l.id.as_str()).collect();
    let mut worst = 0.0f64;
    for day in inputs.profile.days() {
        let shed = solve_day(net, day, &inputs.profile, &all, &SolveOptions::default()).map_err(|e| e.to_string())?.shed_mwh;
        let mut expected = 0.0;
        for &m in inputs.profile.multipliers(day).unwrap() {
            for (b, &base) in net.base_demand().iter().enumerate() {
                let local: f64 = net.generators_at(b).iter().map(|&g| net.generators()[g].p_max).sum();
                expected += (base * m - local).max(0.0);
            }
        }
        worst = worst.max((shed - expected).abs());
    }
    check(
        colocated && worst <= 1e-6,
        format!("{} days, co-located generation {colocated}; worst |engine - analytic| {worst:.2e} MWh (limit 1e-6)", inputs.profile.days().count()),
    )
}

fn small_lp_oracle() -> Outcome {
    let start = Instant::now();
    let net = support::four_bus();
    let mut mult = [0.0; 24];
    for (h, m) in mult.iter_mut().enumerate() {
        *m = 0.55 + 0.05 * h as f64;
    }
    let profile = DemandProfile::new([(200, mult)].into_iter().collect()).unwrap();
    let ids: Vec<&str> = net.lines().iter().map(|l| l.id.as_str()).collect();
    let subsets = 1u32 << ids.len();
    let mut worst = 0.0f64;
    let mut shedding = 0;
    for bits in 0..subsets {
        let mask: Vec<bool> = (0..ids.len()).map(|i| bits >> i & 1 == 1).collect();
        let outaged: Vec<&str> = ids.iter().zip(&mask).filter(|(_, m)| **m).map(|(id, _)| *id).collect();
        let engine = solve_day(&net, 200, &profile, &outaged, &SolveOptions::default()).map_err(|e| e.to_string())?.shed_mwh;
        let mut oracle = 0.0;
        for hour in 0..24 {
            let case = build_hourly_case(&net, 200, hour, &profile, &outaged).unwrap();
            oracle += oracle_min_shed(&net, &case.demand, &mask, false).ok_or("oracle infeasible")?;
        }
        worst = worst.max((engine - oracle).abs());
        shedding += usize::from(oracle > 1e-6);
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-5 && elapsed < Duration::from_secs(60),
        format!(
            "{subsets} subsets ({shedding} with shed); worst |engine - oracle| {worst:.2e} MWh (limit 1e-5), {:.2} s (limit 60 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn study_results(plan: Option<&str>) -> Result<(Inputs, Vec<ScenarioResult>), String> {
    let config = study(Overrides {
        plan: plan.map(|p| fixtures().join(p)),
        ..Overrides::default()
    });
    let inputs = load_inputs(&config).map_err(|f| format!("{f:?}"))?;
    let risk = study_risk(&config, &inputs);
    let index = map_lines_to_counties(&inputs.network, &inputs.regions);
    let scenarios = generate_scenarios(&config, &inputs, &index, &risk).map_err(|e| e.to_string())?;
    let results = evaluate_scenarios(&config, &inputs, &scenarios).map_err(|e| e.to_string())?;
    Ok((inputs, results))
}

fn zero_overlap() -> Outcome {
    let (_, results) = study_results(Some("plan_offshore.json"))?;
    let with_outages = results.iter().filter(|r| r.pre_outage_count > 0).count();
    let overlapping = results.iter().filter(|r| r.overlap_count > 0).count();
    let identical = results.iter().all(|r| {
        r.post_shed.map(f64::to_bits) == Some(r.pre_shed.to_bits()) && r.post_outage_count == r.pre_outage_count
    });
    check(
        overlapping == 0 && identical && with_outages > 0,
        format!("{} results, {with_outages} with outages, {overlapping} overlapping; post == pre bitwise: {identical}", results.len()),
    )
}

fn full_prevention() -> Outcome {
    let (inputs, results) = study_results(Some("plan.json"))?;
    let prevented: Vec<_> = results.iter().filter(|r| r.fully_prevented()).collect();
    let mut ok = !prevented.is_empty();
    for r in &prevented {
        let baseline = solve_day::<&str>(&inputs.network, r.day, &inputs.profile, &[], &SolveOptions::default())
            .map_err(|e| e.to_string())?
            .shed_mwh;
        ok &= r.post_outage_count == 0 && r.post_shed == Some(baseline);
    }
    check(
        ok,
        format!("{} fully prevented scenarios; all report post_outages 0 and post_shed equal to the no-outage baseline: {ok}", prevented.len()),
    )
}

fn outage_summary_semantics() -> Outcome {
    let sc = |hazard, day, k, n: usize| OutageScenario {
        hazard,
        day,
        k,
        outaged_lines: (0..n).map(|i| format!("L{i}")).collect(),
        draws: None,
    };
    use HazardType::*;
    let list = vec![
        sc(Wildfire, 1, 0, 0),
        sc(Wildfire, 1, 1, 4),
        sc(Wildfire, 2, 0, 6),
        sc(Wildfire, 2, 1, 0),
        sc(Hurricane, 5, 0, 1),
        sc(Hurricane, 5, 1, 2),
        sc(Hurricane, 6, 0, 0),
        sc(Wind, 9, 0, 0),
    ];
    let s = summarize_outages(&list);
    let got = |h| {
        let x = s.get(h);
        (x.avg_outages, x.max_outages, x.days_with_outages, x.scenarios_with_outages)
    };
    let expected = [(Wildfire, (5.0, 6, 2, 2)), (Hurricane, (1.5, 2, 1, 2)), (Wind, (0.0, 0, 0, 0))];
    let ok = expected.iter().all(|(h, e)| got(*h) == *e);
    check(
        ok,
        format!("wildfire {:?}, hurricane {:?}, wind {:?} (avg, max, days, scenarios)", got(Wildfire), got(Hurricane), got(Wind)),
    )
}

fn end_to_end() -> Outcome {
    let out = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_gridres"))
        .args(["run", "--config"])
        .arg(fixtures().join("study.toml"))
        .arg("--out")
        .arg(out.path())
        .env("RUST_LOG", "warn")
        .status()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let code = status.code();

    let results = parse_results_csv(&fs::read_to_string(out.path().join("results.csv")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let summary_rows = csv::Reader::from_path(out.path().join("summary.csv"))
        .map_err(|e| e.to_string())?
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?
        .len();
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(out.path().join("manifest.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let mut digests_ok = true;
    let mut glyphs = 0;
    for (rel, entry) in &manifest.files {
        let bytes = fs::read(out.path().join(rel)).map_err(|e| e.to_string())?;
        digests_ok &= sha256_hex(&bytes) == entry.sha256;
        if rel.ends_with(".svg") {
            let text = String::from_utf8(bytes).map_err(|e| e.to_string())?;
            let doc = roxmltree::Document::parse(&text).map_err(|e| format!("{rel}: {e}"))?;
            glyphs += doc.descendants().filter(|n| n.attribute("class") == Some("box")).count();
        }
    }
    let charts = manifest.files.keys().filter(|k| k.ends_with(".svg")).count();
    // 3 hazards x 2 charts, 10 days x pre/post glyphs each.
    let ok = code == Some(0)
        && elapsed < Duration::from_secs(60)
        && results.len() == 3000
        && summary_rows == 30
        && charts == 6
        && glyphs == 6 * 10 * 2
        && digests_ok;
    check(
        ok,
        format!(
            "exit {code:?} in {:.2} s (limit 60 s); {} result rows, {summary_rows} summary rows, {charts} SVGs with {glyphs} glyphs, digests match: {digests_ok}",
            elapsed.as_secs_f64(),
            results.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("beta-prime mean", beta_prime_mean),
        ("outage-rule calibration", outage_rule_calibration),
        ("determinism", determinism),
        ("DC-OPF conservation", conservation),
        ("all-lines-out oracle", all_lines_out),
        ("small-LP oracle equivalence", small_lp_oracle),
        ("zero-overlap exactness", zero_overlap),
        ("full prevention", full_prevention),
        ("outage summary semantics", outage_summary_semantics),
        ("end-to-end fixture study", end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Regenerates the bundled sample data under data/ and verifies every
//! file actually shows what it is meant to show before it ships:
//! officer files that merge into one summary, an anonymizer demo set
//! with zero discards, and the six-trajectory micro instances that
//! exercise each clustering outcome. Run from the workspace root.

use std::fmt::Write as _;
use std::path::Path;

use patrol_core::aggregator::{aggregate_zone, Report};
use patrol_core::anonymizer::{anonymize, verify, AnonError, AnonParams};
use patrol_core::model::{
    classify_ids, parse_registry_file, parse_trajectory_file, Rfid, Tick, Zone,
};

const EPS: f64 = 0.010;
const TAU: Tick = 5;

fn main() {
    let data = Path::new("data");
    assert!(
        data.is_dir(),
        "data/ not found; run from the workspace root"
    );
    let micro = data.join("micro");
    std::fs::create_dir_all(&micro).expect("create data/micro");

    let registry = "999\n501\n502\n503\n";
    write(&data.join("registry.txt"), registry);

    for (name, officer, offset) in [
        ("p1.txt", 501u64, 0.000),
        ("p2.txt", 502u64, 0.002),
        ("p3.txt", 503u64, 0.004),
    ] {
        write(&data.join(name), &officer_file(officer, offset));
    }

    write(&data.join("patrol40.txt"), &patrol40());
    write(&data.join("synthetic200.txt"), &synthetic200());

    for (name, text) in micro_files() {
        write(&micro.join(name), &text);
    }

    write(&data.join("sample.cfg"), sample_cfg());

    check_registry(registry);
    check_officer_files(data);
    check_patrol40(data);
    check_synthetic200(data);
    check_micro(&micro);
    println!("all fixtures written and verified");
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap_or_else(|e| panic!("write {}: {e}", path.display()));
    println!("wrote {}", path.display());
}

fn point_line(out: &mut String, id: u64, t: Tick, x: f64, y: f64) {
    writeln!(out, "{id} {t} {x:.6} {y:.6}").unwrap();
}

/// One officer patrolling near (10, 10) plus criminal 701 walking east
/// of them. The criminal track is offset per file by less than the
/// aggregation tolerance, so the three files merge to one summary.
fn officer_file(officer: u64, offset: f64) -> String {
    let mut out = String::new();
    writeln!(out, "# zone 0 patrol log, officer {officer}").unwrap();
    for t in 0..=10 {
        point_line(&mut out, officer, t, 10.0 + 0.01 * t as f64, 10.0);
    }
    for t in 0..=10 {
        point_line(&mut out, 701, t, 12.0 + offset + 0.005 * t as f64, 10.0);
    }
    out
}

/// Forty trajectories in twenty tight pairs strung a unit apart, all
/// drifting east together: anonymizes at k=2 with nothing discarded.
fn patrol40() -> String {
    let mut out = String::from("# twenty patrol pairs, one unit apart\n");
    for pair in 0..20u64 {
        for (member, dy) in [(0u64, 0.0002), (1, -0.0002)] {
            let id = 100 + 2 * pair + member;
            for t in 0..=10 {
                let x = pair as f64 + 0.01 * t as f64;
                point_line(&mut out, id, t, x, dy);
            }
        }
    }
    out
}

/// The five fixed member offsets of every synthetic group: a center and
/// four arms, at most 0.004 apart pairwise.
const STAR: [(f64, f64); 5] = [
    (0.0, 0.0),
    (0.002, 0.0),
    (-0.002, 0.0),
    (0.0, 0.002),
    (0.0, -0.002),
];

/// Two hundred trajectories in two disjoint time windows; each window
/// holds twenty far-apart groups of five co-moving members, so k=5
/// anonymization yields forty clusters and discards nothing.
fn synthetic200() -> String {
    let mut out = String::from("# two windows x twenty groups x five members\n");
    for group in 0..20u64 {
        for (member, (dx, dy)) in STAR.iter().enumerate() {
            let id = 2000 + 5 * group + member as u64;
            for t in 0..=10 {
                let x = 2.0 * group as f64 + dx + 0.01 * t as f64;
                let y = dy + 0.005 * t as f64;
                point_line(&mut out, id, t, x, y);
            }
        }
    }
    for group in 0..20u64 {
        for (member, (dx, dy)) in STAR.iter().enumerate() {
            let id = 2100 + 5 * group + member as u64;
            for t in 15..=30 {
                let x = 2.0 * group as f64 + dx - 0.008 * t as f64;
                let y = 10.0 + dy + 0.004 * t as f64;
                point_line(&mut out, id, t, x, y);
            }
        }
    }
    out
}

/// A six-trajectory instance: static positions over t = 0..5, except
/// entries flagged short, which span only t = 1..4 and therefore have
/// no aligned window.
fn micro_instance(header: &str, members: &[(u64, f64, f64, bool)]) -> String {
    let mut out = format!("# {header}\n");
    for &(id, x, y, short) in members {
        let (t0, t1) = if short { (1, 4) } else { (0, 5) };
        for t in t0..=t1 {
            point_line(&mut out, id, t, x, y);
        }
    }
    out
}

fn micro_files() -> Vec<(&'static str, String)> {
    vec![
        (
            "m01.txt",
            micro_instance(
                "three tight pairs, k=2 clusters them with nothing discarded",
                &[
                    (11, 0.0, 0.0, false),
                    (12, 0.002, 0.0, false),
                    (13, 1.0, 0.0, false),
                    (14, 1.002, 0.0, false),
                    (15, 2.5, 0.0, false),
                    (16, 2.502, 0.0, false),
                ],
            ),
        ),
        (
            "m02.txt",
            micro_instance(
                "two collinear triples; k=3 needs the radius bound doubled once",
                &[
                    (21, 0.0, 0.0, false),
                    (22, 0.0049, 0.0, false),
                    (23, 0.0098, 0.0, false),
                    (24, 1.0, 0.0, false),
                    (25, 1.0049, 0.0, false),
                    (26, 1.0098, 0.0, false),
                ],
            ),
        ),
        (
            "m03.txt",
            micro_instance(
                "six scattered loners; k=3 is infeasible at any allowed radius",
                &[
                    (31, 0.0, 0.0, false),
                    (32, 0.5, 0.0, false),
                    (33, 1.0, 0.0, false),
                    (34, 1.5, 0.0, false),
                    (35, 2.0, 0.0, false),
                    (36, 2.5, 0.0, false),
                ],
            ),
        ),
        (
            "m04.txt",
            micro_instance(
                "two pairs plus two loners; k=2 succeeds by discarding the loners",
                &[
                    (41, 0.0, 0.0, false),
                    (42, 0.002, 0.0, false),
                    (43, 1.0, 0.0, false),
                    (44, 1.002, 0.0, false),
                    (45, 3.0, 0.0, false),
                    (46, 7.0, 0.0, false),
                ],
            ),
        ),
        (
            "m05.txt",
            micro_instance(
                "one tight and two wide pairs; the wide ones need the doubled bound",
                &[
                    (51, 0.0, 0.0, false),
                    (52, 0.003, 0.0, false),
                    (53, 1.0, 0.0, false),
                    (54, 1.008, 0.0, false),
                    (55, 2.0, 0.0, false),
                    (56, 2.0098, 0.0, false),
                ],
            ),
        ),
        (
            "m06.txt",
            micro_instance(
                "two pairs, a loner and a track too short to align to pi",
                &[
                    (61, 0.0, 0.0, false),
                    (62, 0.002, 0.0, false),
                    (63, 1.0, 0.0, false),
                    (64, 1.002, 0.0, false),
                    (65, 3.0, 0.0, false),
                    (66, 5.0, 0.0, true),
                ],
            ),
        ),
    ]
}

fn sample_cfg() -> &'static str {
    "# Bundled demo configuration. Paths resolve relative to this file.\n\
     registry = registry.txt\n\
     data = patrol40.txt\n\
     topology = topology50.txt\n\
     sources = 6 20 22 23 24 43 44\n\
     zone.0 = 501 502 503\n"
}

fn check_registry(text: &str) {
    let registry = parse_registry_file(text).expect("registry parses");
    assert_eq!(registry.aggregator_id, Rfid(999));
    let (officers, criminals) = classify_ids(
        &[Rfid(501), Rfid(502), Rfid(701), Rfid(503), Rfid(702)],
        &registry,
    );
    assert_eq!(officers, vec![Rfid(501), Rfid(502), Rfid(503)]);
    assert_eq!(criminals, vec![Rfid(701), Rfid(702)]);
    println!("registry: officers 501 502 503, aggregator 999");
}

fn check_officer_files(data: &Path) {
    let registry =
        parse_registry_file(&std::fs::read_to_string(data.join("registry.txt")).unwrap()).unwrap();
    let zone = Zone {
        zone_id: 0,
        officer_ids: [Rfid(501), Rfid(502), Rfid(503)].into(),
    };
    let mut reports = Vec::new();
    for name in ["p1.txt", "p2.txt", "p3.txt"] {
        let text = std::fs::read_to_string(data.join(name)).unwrap();
        let dataset = parse_trajectory_file(&text).expect("officer file parses");
        let mut officer = None;
        for traj in dataset.trajectories() {
            if registry.is_officer(traj.id()) {
                assert!(officer.is_none(), "{name}: more than one officer");
                officer = Some(traj.id());
            } else {
                reports.push(
                    Report::new(
                        officer.expect("officer listed before criminals"),
                        0,
                        traj.id(),
                        traj.points().to_vec(),
                        0,
                    )
                    .unwrap(),
                );
            }
        }
    }
    assert_eq!(reports.len(), 3);
    let summaries = aggregate_zone(&zone, &reports, EPS, TAU).unwrap();
    assert_eq!(summaries.len(), 1, "p1-p3 must merge to one summary");
    assert_eq!(summaries[0].support, 3);
    assert_eq!(summaries[0].criminal, Rfid(701));
    assert_eq!(summaries[0].officers.len(), 3);
    println!("officer files: one summary for criminal 701, support 3");
}

fn anon_params(k: usize, delta: f64, trash_max: f64) -> AnonParams {
    AnonParams {
        k,
        delta,
        pi: 5,
        max_radius: 0.005,
        delta_max: 0.010,
        trash_max,
    }
}

fn check_patrol40(data: &Path) {
    let text = std::fs::read_to_string(data.join("patrol40.txt")).unwrap();
    let dataset = parse_trajectory_file(&text).unwrap();
    assert_eq!(dataset.len(), 40);
    let params = anon_params(2, 0.001, 0.10);
    let out = anonymize(&dataset, &params, 42).expect("patrol40 anonymizes");
    assert_eq!(out.stats.removed_trajectories, 0);
    assert_eq!(out.stats.class_count, 1);
    assert_eq!(out.stats.cluster_count, 20);
    let violations = verify::check(&dataset, &out, &params);
    assert!(violations.is_empty(), "patrol40: {violations:?}");
    println!(
        "patrol40: 20 clusters, diameter {:.3}, nothing removed",
        out.stats.diameter
    );
}

fn check_synthetic200(data: &Path) {
    let text = std::fs::read_to_string(data.join("synthetic200.txt")).unwrap();
    let dataset = parse_trajectory_file(&text).unwrap();
    assert_eq!(dataset.len(), 200);
    assert_eq!(dataset.point_count(), 2700);
    let params = anon_params(5, 0.01, 0.10);
    let out = anonymize(&dataset, &params, 42).expect("synthetic200 anonymizes");
    assert_eq!(out.stats.removed_trajectories, 0);
    assert_eq!(out.stats.class_count, 2);
    assert_eq!(out.stats.cluster_count, 40);
    let violations = verify::check(&dataset, &out, &params);
    assert!(violations.is_empty(), "synthetic200: {violations:?}");
    println!("synthetic200: 40 clusters across 2 windows, nothing removed");
}

/// Expected outcome per micro instance under its pinned parameters.
enum Expect {
    Clusters { clusters: usize, removed: usize },
    Infeasible,
}

fn check_micro(micro: &Path) {
    let table: [(&str, usize, f64, Expect); 6] = [
        ("m01.txt", 2, 0.10, Expect::Clusters { clusters: 3, removed: 0 }),
        ("m02.txt", 3, 0.10, Expect::Clusters { clusters: 2, removed: 0 }),
        ("m03.txt", 3, 0.10, Expect::Infeasible),
        ("m04.txt", 2, 0.34, Expect::Clusters { clusters: 2, removed: 2 }),
        ("m05.txt", 2, 0.10, Expect::Clusters { clusters: 3, removed: 0 }),
        ("m06.txt", 2, 0.34, Expect::Clusters { clusters: 2, removed: 2 }),
    ];
    for (name, k, trash_max, expect) in table {
        let text = std::fs::read_to_string(micro.join(name)).unwrap();
        let dataset = parse_trajectory_file(&text).unwrap();
        assert_eq!(dataset.len(), 6, "{name}");
        let params = anon_params(k, 0.020, trash_max);
        match (anonymize(&dataset, &params, 42), expect) {
            (Ok(out), Expect::Clusters { clusters, removed }) => {
                assert_eq!(out.stats.cluster_count, clusters, "{name} clusters");
                assert_eq!(out.stats.removed_trajectories, removed, "{name} removed");
                let violations = verify::check(&dataset, &out, &params);
                assert!(violations.is_empty(), "{name}: {violations:?}");
                println!("{name}: {clusters} clusters, {removed} removed");
            }
            (Err(AnonError::Infeasible { .. }), Expect::Infeasible) => {
                println!("{name}: infeasible as intended");
            }
            (outcome, _) => panic!("{name}: unexpected outcome {outcome:?}"),
        }
    }
}

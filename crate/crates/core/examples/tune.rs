//! Dev harness for picking the bundled benchmark topology and config.
//! Not part of the library API. Run with --release; prints win tables
//! for randomized vs shortest-path routing across load levels.

use std::collections::BTreeMap;

use patrol_core::netsim::{
    build_topology, run_comparison, ComparisonCell, NodeId, RoutingMode, SimConfig, Simulator,
    Topology,
};

const TAU: f64 = std::f64::consts::TAU;

/// Nodes on the angular grid of an n-slot ring, slots taken from `idx`.
fn ring_slots(nodes: &mut Vec<(u64, f64, f64)>, next_id: &mut u64, r: f64, n: usize, idx: &[i64]) -> Vec<u64> {
    let mut ids = Vec::new();
    for &i in idx {
        let theta = (i as f64 / n as f64) * TAU;
        nodes.push((*next_id, r * theta.cos(), r * theta.sin()));
        ids.push(*next_id);
        *next_id += 1;
    }
    ids
}

fn full(n: usize) -> Vec<i64> {
    (0..n as i64).collect()
}

/// Sink behind four capacity-1 mouths at the compass points and two
/// concentric relay rings (16 and 24 slots) too far apart to touch
/// except at the compass: single bridges at 90/180/270 degrees and a
/// ramp pair at +-15 degrees. The slot counts keep every bridge off
/// the rings' neighboring slots, so between compass zones both rings
/// are plain corridors and walks sweep them instead of dithering.
/// Sources cluster around angle 0 on both rings, strictly inside
/// mouth-0's min-hop catchment: shortest-path traffic serializes
/// through mouth 0 while walks drain toward the other mouths.
fn wheel50(_unused: i64) -> (Vec<(u64, f64, f64)>, Vec<NodeId>) {
    let mut nodes = vec![(999u64, 0.0, 0.0)];
    let mut id = 1u64;
    ring_slots(&mut nodes, &mut id, 0.9, 4, &full(4));
    let inner = ring_slots(&mut nodes, &mut id, 1.85, 16, &full(16));
    // stacked second feeder on the axis: descents from either side tie
    // across {inner slot 0, stack} instead of serializing on slot 0
    nodes.push((id, 1.3, 0.0));
    id += 1;
    let outer_slots: Vec<i64> = (0..24).filter(|&s| s != 12).collect();
    let outer = ring_slots(&mut nodes, &mut id, 3.05, 24, &outer_slots);
    ring_slots(&mut nodes, &mut id, 2.45, 16, &[1, -1]);
    ring_slots(&mut nodes, &mut id, 2.45, 4, &[1, 2, 3]);
    let mut sources = vec![inner[15], inner[1]];
    for s in [-2i64, -1, 0, 1, 2] {
        let slot = s.rem_euclid(24);
        let pos = outer_slots.iter().position(|&v| v == slot).unwrap();
        sources.push(outer[pos]);
    }
    sources.sort_unstable();
    (nodes, sources)
}

fn classify(cells: &[ComparisonCell]) -> Vec<(f64, String)> {
    let mut loads: Vec<f64> = cells.iter().map(|c| c.load).collect();
    loads.dedup();
    let mut rows = Vec::new();
    for load in loads {
        let rnd = cells
            .iter()
            .find(|c| c.load == load && c.mode == RoutingMode::Randomized)
            .unwrap();
        let sp = cells
            .iter()
            .find(|c| c.load == load && c.mode == RoutingMode::ShortestPath)
            .unwrap();
        let mut wins = 0usize;
        let mut pairs = 0usize;
        for (a, b) in rnd.per_seed.iter().zip(sp.per_seed.iter()) {
            if let (Some(x), Some(y)) = (a.mean_delivery_ticks, b.mean_delivery_ticks) {
                pairs += 1;
                if x < y {
                    wins += 1;
                }
            }
        }
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:9.2}")).unwrap_or_else(|| "       NA".into());
        rows.push((
            load,
            format!(
                "load {load:6}: rnd mean {} ratio {:.2} | sp mean {} ratio {:.2} | rnd wins {wins}/{pairs}",
                fmt(rnd.mean_latency),
                rnd.delivery_ratio,
                fmt(sp.mean_latency),
                sp.delivery_ratio
            ),
        ));
    }
    rows
}

/// Entry gateway histogram: second-to-last trace hop of each absorbed
/// share under light randomized load. Measures walk dispersion.
fn entry_histogram(topo: &Topology, sources: &[NodeId], cfg: &SimConfig) -> BTreeMap<NodeId, usize> {
    let mut sim = Simulator::new(topo, cfg).expect("sim");
    sim.restrict_sources(sources).expect("sources");
    sim.run_loaded();
    let mut hist = BTreeMap::new();
    for share in sim.absorbed_shares() {
        let n = share.trace.len();
        if n >= 2 {
            *hist.entry(share.trace[n - 2]).or_insert(0) += 1;
        }
    }
    hist
}

/// Deepest queues under a given load, with each node's forwarding work
/// split walk/descent (as per-tick utilization); exposes the choke and
/// what traffic class feeds it.
fn hotspots(topo: &Topology, sources: &[NodeId], cfg: &SimConfig) -> Vec<String> {
    let mut sim = Simulator::new(topo, cfg).expect("sim");
    sim.restrict_sources(sources).expect("sources");
    let metrics = sim.run_loaded();
    let mut peaks: Vec<(NodeId, usize)> = metrics.queue_peaks.into_iter().collect();
    peaks.sort_by(|a, b| b.1.cmp(&a.1));
    peaks.truncate(8);
    let ticks = cfg.duration as f64;
    peaks
        .into_iter()
        .map(|(n, p)| {
            let t = metrics.relay_tally[&n];
            format!(
                "{n}:{p} w{:.2}+d{:.2}",
                t.walk as f64 / ticks,
                t.descent as f64 / ticks
            )
        })
        .collect()
}

fn report(name: &str, topo: &Topology, sources: &[NodeId], base: SimConfig, loads: &[f64], seeds: &[u64]) {
    let diam = topo.hop_diameter();
    println!("=== {name} (nodes {} diameter {diam}) ===", topo.nodes().len());
    let mut probe = base.clone();
    probe.load = 0.2;
    probe.routing_mode = RoutingMode::Randomized;
    let hist = entry_histogram(topo, sources, &probe);
    let total: usize = hist.values().sum();
    let spread: Vec<String> = hist
        .iter()
        .map(|(n, c)| format!("{n}:{:.2}", *c as f64 / total as f64))
        .collect();
    println!("gateway share entry: {}", spread.join(" "));
    let mut crit = base.clone();
    crit.load = 1.0;
    crit.routing_mode = RoutingMode::Randomized;
    let peaks = hotspots(topo, sources, &crit);
    println!("rnd queue peaks at load 1.0: {}", peaks.join(" "));
    let cells = run_comparison(topo, &base, sources, loads, seeds).expect("comparison");
    for (_, line) in classify(&cells) {
        println!("{line}");
    }
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).collect();
    let want = |name: &str| filter.is_empty() || filter.iter().any(|f| name.contains(f));

    if filter.iter().any(|f| f == "dump") {
        let (nodes, sources) = wheel50(0);
        println!("range 1.0");
        println!("aggregator 999");
        for (id, x, y) in &nodes {
            println!("{id} {x:.6} {y:.6}");
        }
        eprintln!("# sources: {sources:?}");
        return;
    }

    let seeds: Vec<u64> = (0..20).collect();
    let loads = [0.25, 0.5, 0.75, 1.0, 1.25];

    let mut candidates: Vec<(String, Vec<(u64, f64, f64)>, Vec<NodeId>)> = Vec::new();
    let (nodes, sources) = wheel50(0);
    candidates.push(("wheel50c2".into(), nodes, sources));

    for (name, nodes, srcs) in &candidates {
        if !want(name) {
            continue;
        }
        let topo = match build_topology(nodes, 1.0, 999, false) {
            Ok(t) => t,
            Err(e) => {
                println!("=== {name}: rejected ({e}) ===");
                continue;
            }
        };
        for &ttl in &[8u32] {
            for &(t, m) in &[(2u8, 2u8)] {
                let base = SimConfig {
                    seed: 0,
                    ttl_init: ttl,
                    threshold: t,
                    shares: m,
                    mac_service_rate: 1,
                    load: 1.0,
                    duration: 400,
                    routing_mode: RoutingMode::Randomized,
                };
                report(
                    &format!("{name} ttl {ttl} t{t}/m{m}"),
                    &topo,
                    srcs,
                    base,
                    &loads,
                    &seeds,
                );
            }
        }
    }
}

//! Load sweeps pitting randomized share routing against the plain
//! shortest-path baseline, with paired seeds per cell so both modes see
//! the same injection schedule.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::netsim::sim::{Metrics, Simulator};
use crate::netsim::{NetError, NodeId, RoutingMode, SimConfig, Topology};

/// Pooled result of one (load, mode) cell across all seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCell {
    pub load: f64,
    pub mode: RoutingMode,
    /// None when nothing was delivered: the cell is unmeasurable.
    pub mean_latency: Option<f64>,
    pub delivery_ratio: f64,
    pub delivered: usize,
    pub injected: usize,
    /// Per-seed metrics in seed order, for paired significance checks.
    pub per_seed: Vec<Metrics>,
}

/// Runs every (load, mode, seed) combination and pools the results per
/// (load, mode). Cells run in parallel; the outcome is a pure function
/// of (topology, base config, sources, loads, seeds). An empty source
/// slice means every connected non-aggregator node generates reports.
pub fn run_comparison(
    topology: &Topology,
    base: &SimConfig,
    sources: &[NodeId],
    loads: &[f64],
    seeds: &[u64],
) -> Result<Vec<ComparisonCell>, NetError> {
    base.validate()?;
    if !sources.is_empty() {
        // fail fast instead of inside a worker thread
        Simulator::new(topology, base)?.restrict_sources(sources)?;
    }
    let modes = [RoutingMode::Randomized, RoutingMode::ShortestPath];
    let mut jobs = Vec::new();
    for (li, &load) in loads.iter().enumerate() {
        for &mode in &modes {
            for (si, &seed) in seeds.iter().enumerate() {
                jobs.push((li, load, mode, si, seed));
            }
        }
    }
    let mut results: Vec<((usize, RoutingMode, usize), Metrics)> = jobs
        .into_par_iter()
        .map(|(li, load, mode, si, seed)| {
            let cfg = SimConfig {
                seed,
                load,
                routing_mode: mode,
                ..base.clone()
            };
            let mut sim = Simulator::new(topology, &cfg).expect("config validated up front");
            if !sources.is_empty() {
                sim.restrict_sources(sources).expect("sources validated up front");
            }
            ((li, mode, si), sim.run_loaded())
        })
        .collect();
    results.sort_by_key(|&((li, mode, si), _)| (li, mode, si));

    let mut cells = Vec::new();
    for (li, &load) in loads.iter().enumerate() {
        for &mode in &modes {
            let per_seed: Vec<Metrics> = results
                .iter()
                .filter(|((l, m, _), _)| *l == li && *m == mode)
                .map(|(_, metrics)| metrics.clone())
                .collect();
            let delivered: usize = per_seed.iter().map(|m| m.delivered_reports).sum();
            let injected: usize = per_seed.iter().map(|m| m.injected_reports).sum();
            let total_latency: i64 = per_seed
                .iter()
                .flat_map(|m| m.latencies.iter())
                .sum();
            cells.push(ComparisonCell {
                load,
                mode,
                mean_latency: (delivered > 0)
                    .then(|| total_latency as f64 / delivered as f64),
                delivery_ratio: if injected == 0 {
                    0.0
                } else {
                    delivered as f64 / injected as f64
                },
                delivered,
                injected,
                per_seed,
            });
        }
    }
    Ok(cells)
}

/// Tab-separated plot data, one row per cell; unmeasurable cells write
/// `NA` for the latency.
pub fn write_plot_data(cells: &[ComparisonCell], path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "load\tmode\tmean_latency\tdelivery_ratio")?;
    for c in cells {
        let latency = c
            .mean_latency
            .map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
        writeln!(f, "{}\t{}\t{}\t{:.4}", c.load, c.mode.label(), latency, c.delivery_ratio)?;
    }
    Ok(())
}

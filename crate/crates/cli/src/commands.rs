//! Flag-driven subcommands. Each one funnels into the same operation
//! layer as the interactive menu, so repository and file effects are
//! identical either way.

use std::path::PathBuf;

use patrol_core::anonymizer::AnonParams;
use patrol_core::model::{Rfid, Tick, Zone};
use patrol_core::netsim::NodeId;
use patrol_core::patterns::Query;

use crate::config::{self, Config, DEFAULT_ANON_OUT};
use crate::ops::{self, Failure};

/// The frozen benchmark: the bundled 50-node wheel with the patrol
/// sector on its east side, swept across the standard load grid.
pub const BENCH_TOPOLOGY: &str = "data/topology50.txt";
pub const BENCH_SOURCES: [NodeId; 7] = [6, 20, 22, 23, 24, 43, 44];
pub const BENCH_LOADS: [f64; 5] = [0.25, 0.5, 0.75, 1.0, 1.25];
pub const BENCH_SEEDS: std::ops::RangeInclusive<u64> = 0..=19;
pub const BENCH_TTL: u32 = 8;
pub const BENCH_THRESHOLD: u8 = 2;
pub const BENCH_SHARES: u8 = 2;
pub const BENCH_DURATION: Tick = 400;

pub fn detect(config: &Config, ids: &[u64]) -> Result<(), Failure> {
    if ids.is_empty() {
        return Err(Failure::Usage("detect needs at least one id".into()));
    }
    let registry_path = config
        .registry
        .as_deref()
        .ok_or_else(|| Failure::Usage("detect needs a registry (--registry or config)".into()))?;
    let registry = ops::load_registry(registry_path)?;
    let ids: Vec<Rfid> = ids.iter().copied().map(Rfid).collect();
    let (officers, criminals) = ops::detect(&ids, &registry);
    let (officers_line, criminals_line) = ops::detection_lines(&officers, &criminals);
    println!("{officers_line}");
    println!("{criminals_line}");
    Ok(())
}

pub fn process(
    config: &Config,
    zone_id: u32,
    files: &[PathBuf],
    guard: bool,
) -> Result<(), Failure> {
    let registry_path = config
        .registry
        .as_deref()
        .ok_or_else(|| Failure::Usage("process needs a registry (--registry or config)".into()))?;
    let registry = ops::load_registry(registry_path)?;
    let officers = config.zones.get(&zone_id).ok_or_else(|| {
        Failure::Data(anyhow::anyhow!("no officers assigned to zone {zone_id}"))
    })?;
    let zone = Zone {
        zone_id,
        officer_ids: officers.iter().copied().collect(),
    };
    let mut repo = ops::open_repository(config.repo.as_deref())?;
    let outcome = ops::process_files(
        &zone,
        files,
        &registry,
        &mut repo,
        config.eps,
        config.tau,
        guard || config.guard,
    )?;
    println!("Data is aggregated.");
    if outcome.skipped_duplicate {
        println!("duplicate batch, skipped");
    } else {
        println!("Records stored: {}", outcome.stored);
    }
    Ok(())
}

pub fn obfuscate(
    config: &Config,
    k: usize,
    delta: f64,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let data = data
        .or_else(|| config.data.clone())
        .ok_or_else(|| Failure::Usage("obfuscate needs a dataset (--data or config)".into()))?;
    let out = out
        .or_else(|| config.anon_out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_ANON_OUT));
    let params = AnonParams {
        k,
        delta,
        pi: config.pi,
        max_radius: config.max_radius(),
        delta_max: config.delta_max,
        trash_max: config.trash_max,
    };
    println!("Parameters:");
    println!(
        "K={k}, delta={delta}, pi={}, delta_max={:.3}, trash_max={:.1}%",
        params.pi,
        params.delta_max,
        params.trash_max * 100.0
    );
    println!("Loading data...");
    let result = ops::obfuscate_file(&data, &out, &params, config.seed)?;
    println!("Loading objects... Done.");
    let stats = result.stats;
    println!(
        "-> Trajectories: {}, Points: {}, Diameter: {:.3}",
        stats.trajectories_in, stats.points_in, stats.diameter
    );
    println!(
        "-> Removed Trajectories: {}, Removed Points: {}",
        stats.removed_trajectories, stats.removed_points
    );
    println!("Creating equivalence classes...Done.");
    println!(
        "Processing equivalence classes: Done! [ {} equiv. classes ]",
        stats.class_count
    );
    Ok(())
}

pub struct SimulateArgs {
    pub topology: Option<PathBuf>,
    pub seeds: String,
    pub loads: String,
    pub ttl: u32,
    pub shares: u8,
    pub threshold: u8,
    pub duration: Tick,
    pub sources: Option<String>,
    pub out: Option<PathBuf>,
}

pub fn simulate(config: &Config, args: &SimulateArgs) -> Result<(), Failure> {
    let topology = args
        .topology
        .clone()
        .or_else(|| config.topology.clone())
        .ok_or_else(|| Failure::Usage("simulate needs --topology or config topology=".into()))?;
    let sources = match &args.sources {
        Some(text) => parse_sources(text)?,
        None => config.sources.clone(),
    };
    let spec = ops::SimSpec {
        topology,
        seeds: parse_seeds(&args.seeds)?,
        loads: parse_loads(&args.loads)?,
        ttl: args.ttl,
        shares: args.shares,
        threshold: args.threshold,
        duration: args.duration,
        mac_service_rate: 1,
        sources,
        out: args.out.clone(),
    };
    let cells = ops::run_simulation(&spec)?;
    print!("{}", ops::comparison_table(&cells));
    Ok(())
}

pub fn bench(config: &Config, topology: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), Failure> {
    let topology = topology
        .or_else(|| config.topology.clone())
        .unwrap_or_else(|| PathBuf::from(BENCH_TOPOLOGY));
    let sources = if config.sources.is_empty() {
        BENCH_SOURCES.to_vec()
    } else {
        config.sources.clone()
    };
    let spec = ops::SimSpec {
        topology,
        seeds: BENCH_SEEDS.collect(),
        loads: BENCH_LOADS.to_vec(),
        ttl: BENCH_TTL,
        shares: BENCH_SHARES,
        threshold: BENCH_THRESHOLD,
        duration: BENCH_DURATION,
        mac_service_rate: 1,
        sources,
        out,
    };
    let cells = ops::run_simulation(&spec)?;
    print!("{}", ops::comparison_table(&cells));
    for &load in &[BENCH_LOADS[0], BENCH_LOADS[BENCH_LOADS.len() - 1]] {
        if let Some((wins, pairs)) = paired_wins(&cells, load) {
            println!("randomized wins {wins}/{pairs} paired seeds at load {load}");
        }
    }
    Ok(())
}

/// Seeds where randomized mean delivery beat shortest path at `load`,
/// over seeds where both modes delivered.
pub fn paired_wins(
    cells: &[patrol_core::netsim::ComparisonCell],
    load: f64,
) -> Option<(usize, usize)> {
    use patrol_core::netsim::RoutingMode;
    let rnd = cells
        .iter()
        .find(|c| c.load == load && c.mode == RoutingMode::Randomized)?;
    let sp = cells
        .iter()
        .find(|c| c.load == load && c.mode == RoutingMode::ShortestPath)?;
    let mut wins = 0;
    let mut pairs = 0;
    for (a, b) in rnd.per_seed.iter().zip(sp.per_seed.iter()) {
        if let (Some(x), Some(y)) = (a.mean_delivery_ticks, b.mean_delivery_ticks) {
            pairs += 1;
            if x < y {
                wins += 1;
            }
        }
    }
    Some((wins, pairs))
}

pub struct QueryArgs {
    pub criminal: Option<u64>,
    pub zone: Option<u32>,
    pub count: Option<u64>,
    pub window: Option<String>,
    pub tsv: bool,
}

pub fn query(config: &Config, args: &QueryArgs) -> Result<(), Failure> {
    let repo_path = config
        .repo
        .as_deref()
        .ok_or_else(|| Failure::Usage("query needs a repository (--repo or config)".into()))?;
    let repo = ops::open_repository(Some(repo_path))?;
    let mut picked = Vec::new();
    if let Some(id) = args.criminal {
        picked.push(Query::ByCriminal(Rfid(id)));
    }
    if let Some(z) = args.zone {
        picked.push(Query::ByZone(z));
    }
    if let Some(id) = args.count {
        picked.push(Query::CountCrimes(Rfid(id)));
    }
    if let Some(w) = &args.window {
        let (t0, t1) = parse_window(w)?;
        picked.push(Query::InWindow(t0, t1));
    }
    let q = match picked.as_slice() {
        [one] => one.clone(),
        [] => {
            return Err(Failure::Usage(
                "query needs one of --criminal, --zone, --count, --window".into(),
            ))
        }
        _ => return Err(Failure::Usage("query takes exactly one selector".into())),
    };
    let answer = ops::run_query(&repo, &q);
    print!("{}", ops::render_answer(&answer, args.tsv));
    Ok(())
}

/// `a..b` (inclusive on both ends) or a single seed value.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Usage(format!("invalid seed range `{text}`; use a..b or a single seed"));
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else {
        let one: u64 = text.trim().parse().map_err(|_| bad())?;
        Ok(vec![one])
    }
}

pub fn parse_loads(text: &str) -> Result<Vec<f64>, Failure> {
    let loads: Result<Vec<f64>, _> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect();
    let loads =
        loads.map_err(|_| Failure::Usage(format!("invalid load list `{text}`; use l1,l2,…")))?;
    if loads.is_empty() || loads.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Failure::Usage("loads must be positive numbers".into()));
    }
    Ok(loads)
}

fn parse_sources(text: &str) -> Result<Vec<NodeId>, Failure> {
    config::split_ids(text).map_err(|e| Failure::Usage(format!("invalid sources: {e}")))
}

fn parse_window(text: &str) -> Result<(Tick, Tick), Failure> {
    let bad = || Failure::Usage(format!("invalid window `{text}`; use t0..t1"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let t0: Tick = a.trim().parse().map_err(|_| bad())?;
    let t1: Tick = b.trim().parse().map_err(|_| bad())?;
    if t0 > t1 {
        return Err(bad());
    }
    Ok((t0, t1))
}

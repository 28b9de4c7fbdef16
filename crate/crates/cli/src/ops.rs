//! Effectful operations shared by the interactive console and the
//! flag-driven subcommands, so both paths produce identical repository
//! and file effects.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use patrol_core::aggregator::{aggregate_zone, Report};
use patrol_core::anonymizer::{anonymize, AnonError, AnonParams, AnonymizedDataset};
use patrol_core::model::{
    classify_ids, parse_registry_file, parse_trajectory_file, Registry, Rfid, Tick, Zone,
};
use patrol_core::netsim::{
    parse_topology_file, run_comparison, write_plot_data, ComparisonCell, NodeId, RoutingMode,
    SimConfig,
};
use patrol_core::patterns::{identify_pattern, PatternRecord, Query, QueryAnswer, Repository};
use sha2::{Digest, Sha256};

/// Failure classified by exit code: 1 usage, 2 data, 3 infeasible.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
    Infeasible(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Infeasible(m) => m.clone(),
            Failure::Data(e) => format!("{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

pub fn load_registry(path: &Path) -> Result<Registry, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read registry {}", path.display()))?;
    let reg = parse_registry_file(&text)
        .map_err(|e| anyhow!("registry {}: {e}", path.display()))?;
    Ok(reg)
}

pub fn open_repository(path: Option<&Path>) -> Result<Repository, Failure> {
    match path {
        Some(p) => {
            Repository::open(p).map_err(|e| anyhow!("repository {}: {e}", p.display()).into())
        }
        None => Ok(Repository::in_memory()),
    }
}

/// Officer classification for the detect step, preserving input order.
pub fn detect(ids: &[Rfid], registry: &Registry) -> (Vec<Rfid>, Vec<Rfid>) {
    classify_ids(ids, registry)
}

/// The two detection printout lines. Ids sit in width-9 columns after
/// the label; the criminals label carries three extra pad spaces.
pub fn detection_lines(officers: &[Rfid], criminals: &[Rfid]) -> (String, String) {
    let fields = |ids: &[Rfid]| {
        let mut s = String::new();
        for id in ids {
            write!(s, "{:>9}", id.0).unwrap();
        }
        s
    };
    let officers_line = format!("Police Officers detected:{}", fields(officers));
    let criminals_line = if criminals.is_empty() {
        "Criminals detected:".to_string()
    } else {
        format!("Criminals detected:   {}", fields(criminals))
    };
    (officers_line, criminals_line)
}

pub struct ProcessOutcome {
    pub stored: usize,
    /// True when the replay guard skipped an already-stored batch.
    pub skipped_duplicate: bool,
}

/// Ingests one trajectory file per officer, extracts criminal sighting
/// reports, deduplicates them for the zone and stores the resulting
/// pattern records. The repository is written once, at the end, so an
/// error anywhere leaves it untouched.
pub fn process_files(
    zone: &Zone,
    files: &[PathBuf],
    registry: &Registry,
    repo: &mut Repository,
    eps: f64,
    tau: Tick,
    guard: bool,
) -> Result<ProcessOutcome, Failure> {
    if files.is_empty() {
        return Err(Failure::Usage("process needs at least one officer file".into()));
    }
    let mut reports = Vec::new();
    let mut texts = Vec::new();
    for path in files {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read officer file {}", path.display()))?;
        let dataset = parse_trajectory_file(&text)
            .map_err(|e| anyhow!("officer file {}: {e}", path.display()))?;
        let mut officers = Vec::new();
        let mut criminals = Vec::new();
        for traj in dataset.trajectories() {
            if registry.is_officer(traj.id()) {
                officers.push(traj.id());
            } else {
                criminals.push(traj);
            }
        }
        let officer = match officers.as_slice() {
            [one] => *one,
            [] => {
                return Err(Failure::Data(anyhow!(
                    "officer file {}: no registered officer trajectory",
                    path.display()
                )))
            }
            many => {
                return Err(Failure::Data(anyhow!(
                    "officer file {}: {} officer trajectories, expected one",
                    path.display(),
                    many.len()
                )))
            }
        };
        if !zone.officer_ids.contains(&officer) {
            return Err(Failure::Data(anyhow!(
                "officer file {}: officer {} is not assigned to zone {}",
                path.display(),
                officer.0,
                zone.zone_id
            )));
        }
        criminals.sort_by_key(|t| t.id());
        for traj in criminals {
            let report = Report::new(officer, zone.zone_id, traj.id(), traj.points().to_vec(), 0)
                .map_err(|e| anyhow!("officer file {}: {e}", path.display()))?;
            reports.push(report);
        }
        texts.push(text);
    }
    let summaries =
        aggregate_zone(zone, &reports, eps, tau).map_err(|e| Failure::Data(anyhow!("{e}")))?;
    let records = identify_pattern(zone, &summaries, repo);
    let stored = records.len();
    if guard {
        let hash = batch_hash(zone.zone_id, &texts);
        let fresh = repo
            .store_guarded(records, &hash)
            .map_err(|e| anyhow!("storing records: {e}"))?;
        if !fresh {
            return Ok(ProcessOutcome {
                stored: 0,
                skipped_duplicate: true,
            });
        }
    } else {
        repo.store(records).map_err(|e| anyhow!("storing records: {e}"))?;
    }
    Ok(ProcessOutcome {
        stored,
        skipped_duplicate: false,
    })
}

/// Replay-guard identity of a process batch: zone plus file contents.
fn batch_hash(zone_id: u32, texts: &[String]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(zone_id.to_le_bytes());
    for text in texts {
        hasher.update((text.len() as u64).to_le_bytes());
        hasher.update(text.as_bytes());
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        write!(hex, "{b:02x}").unwrap();
    }
    hex
}

/// Anonymizes the dataset at `data` and writes the published
/// trajectories to `out` through a temporary sibling file, so a failed
/// run leaves no partial output.
pub fn obfuscate_file(
    data: &Path,
    out: &Path,
    params: &AnonParams,
    seed: u64,
) -> Result<AnonymizedDataset, Failure> {
    let text = std::fs::read_to_string(data)
        .with_context(|| format!("cannot read dataset {}", data.display()))?;
    let dataset =
        parse_trajectory_file(&text).map_err(|e| anyhow!("dataset {}: {e}", data.display()))?;
    let result = anonymize(&dataset, params, seed).map_err(classify_anon_error)?;
    let rendered = result.to_dataset().to_text();
    let tmp = out.with_extension("tmp");
    std::fs::write(&tmp, rendered)
        .with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, out)
        .with_context(|| format!("cannot move output into {}", out.display()))?;
    Ok(result)
}

fn classify_anon_error(e: AnonError) -> Failure {
    match e {
        AnonError::InvalidParams { .. } => Failure::Usage(e.to_string()),
        AnonError::Infeasible { .. } | AnonError::TrashBound { .. } => {
            Failure::Infeasible(e.to_string())
        }
    }
}

pub struct SimSpec {
    pub topology: PathBuf,
    pub seeds: Vec<u64>,
    pub loads: Vec<f64>,
    pub ttl: u32,
    pub shares: u8,
    pub threshold: u8,
    pub duration: Tick,
    pub mac_service_rate: usize,
    pub sources: Vec<NodeId>,
    pub out: Option<PathBuf>,
}

/// Paired-seed comparison of both routing modes over the load grid;
/// optionally writes the tab-separated plot file.
pub fn run_simulation(spec: &SimSpec) -> Result<Vec<ComparisonCell>, Failure> {
    let text = std::fs::read_to_string(&spec.topology)
        .with_context(|| format!("cannot read topology {}", spec.topology.display()))?;
    let topology = parse_topology_file(&text, false)
        .map_err(|e| anyhow!("topology {}: {e}", spec.topology.display()))?;
    if spec.seeds.is_empty() {
        return Err(Failure::Usage("need at least one seed".into()));
    }
    if spec.loads.is_empty() {
        return Err(Failure::Usage("need at least one load".into()));
    }
    let base = SimConfig {
        seed: 0,
        ttl_init: spec.ttl,
        threshold: spec.threshold,
        shares: spec.shares,
        mac_service_rate: spec.mac_service_rate,
        load: spec.loads[0],
        duration: spec.duration,
        routing_mode: RoutingMode::Randomized,
    };
    let cells = run_comparison(&topology, &base, &spec.sources, &spec.loads, &spec.seeds)
        .map_err(|e| match e {
            patrol_core::netsim::NetError::BadConfig { .. } => Failure::Usage(e.to_string()),
            other => Failure::Data(anyhow!("{other}")),
        })?;
    if let Some(out) = &spec.out {
        write_plot_data(&cells, out)
            .with_context(|| format!("cannot write plot data {}", out.display()))?;
    }
    Ok(cells)
}

/// Comparison table rendered for the console, one line per (load, mode).
pub fn comparison_table(cells: &[ComparisonCell]) -> String {
    let mut out = String::from("load      mode        mean_latency  delivery_ratio\n");
    for c in cells {
        let latency = c
            .mean_latency
            .map_or_else(|| "NA".to_string(), |v| format!("{v:.2}"));
        writeln!(
            out,
            "{:<9} {:<11} {:>12}  {:>14.4}",
            c.load,
            c.mode.label(),
            latency,
            c.delivery_ratio
        )
        .unwrap();
    }
    out
}

/// Query answers as aligned columns, or tab-separated when `tsv`.
pub fn render_answer(answer: &QueryAnswer, tsv: bool) -> String {
    match answer {
        QueryAnswer::Count(n) => format!("{n}\n"),
        QueryAnswer::Records(records) => render_records(records, tsv),
    }
}

fn render_records(records: &[PatternRecord], tsv: bool) -> String {
    let mut out = String::new();
    if tsv {
        out.push_str("criminal\tcrime_number\tzone\twindow_start\twindow_end\tbbox\tcentroid\n");
        for r in records {
            let (t0, t1) = r.window;
            let (x0, y0, x1, y1) = r.bbox;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{} {} {} {}\t{} {}",
                r.criminal.0, r.crime_number, r.zone_id, t0, t1, x0, y0, x1, y1, r.centroid.0, r.centroid.1
            )
            .unwrap();
        }
    } else {
        out.push_str(
            "criminal  crime#  zone  window        centroid\n",
        );
        for r in records {
            let (t0, t1) = r.window;
            writeln!(
                out,
                "{:<9} {:<7} {:<5} [{t0}, {t1}]      ({:.4}, {:.4})",
                r.criminal.0, r.crime_number, r.zone_id, r.centroid.0, r.centroid.1
            )
            .unwrap();
        }
    }
    out
}

pub fn run_query(repo: &Repository, q: &Query) -> QueryAnswer {
    repo.run_query(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_lines_match_console_layout() {
        let officers = [Rfid(501), Rfid(502), Rfid(503)];
        let criminals = [Rfid(701), Rfid(702)];
        let (o, c) = detection_lines(&officers, &criminals);
        assert_eq!(o, "Police Officers detected:      501      502      503");
        assert_eq!(c, "Criminals detected:         701      702");
    }

    #[test]
    fn empty_criminals_line_is_just_the_label() {
        let (o, c) = detection_lines(&[Rfid(7)], &[]);
        assert_eq!(o, "Police Officers detected:        7");
        assert_eq!(c, "Criminals detected:");
    }

    #[test]
    fn batch_hash_distinguishes_zone_and_order() {
        let a = batch_hash(0, &["x".into(), "y".into()]);
        let b = batch_hash(1, &["x".into(), "y".into()]);
        let c = batch_hash(0, &["y".into(), "x".into()]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, batch_hash(0, &["x".into(), "y".into()]));
    }
}

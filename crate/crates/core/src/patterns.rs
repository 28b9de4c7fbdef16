//! Crime pattern repository: compact per-incident records extracted from
//! zone summaries, persisted to an append-only flat file and answered
//! from in-memory indices so queries never rescan raw trajectories.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::aggregator::SummarySegment;
use crate::model::{Rfid, Tick, Zone};

/// One stored incident: where and when a criminal was seen, compactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternRecord {
    pub criminal: Rfid,
    /// Per-criminal incident counter, starting at 1.
    pub crime_number: u64,
    pub zone_id: u32,
    pub window: (Tick, Tick),
    /// Axis-aligned bounding box: (min_x, min_y, max_x, max_y).
    pub bbox: (f64, f64, f64, f64),
    pub centroid: (f64, f64),
}

impl PatternRecord {
    fn to_line(&self) -> String {
        let (t0, t1) = self.window;
        let (x0, y0, x1, y1) = self.bbox;
        let (cx, cy) = self.centroid;
        format!(
            "{} {} {} {} {} {} {} {} {} {} {}",
            self.criminal, self.crime_number, self.zone_id, t0, t1, x0, y0, x1, y1, cx, cy
        )
    }

    fn from_line(line: &str, lineno: usize) -> Result<Self, RepoError> {
        let corrupt = |msg: String| RepoError::Corrupt { line: lineno, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 11 {
            return Err(corrupt(format!("expected 11 fields, found {}", fields.len())));
        }
        fn num<T: std::str::FromStr>(s: &str, what: &str, lineno: usize) -> Result<T, RepoError> {
            s.parse().map_err(|_| RepoError::Corrupt {
                line: lineno,
                msg: format!("invalid {what}: `{s}`"),
            })
        }
        Ok(PatternRecord {
            criminal: Rfid(num(fields[0], "criminal id", lineno)?),
            crime_number: num(fields[1], "crime number", lineno)?,
            zone_id: num(fields[2], "zone id", lineno)?,
            window: (
                num(fields[3], "window start", lineno)?,
                num(fields[4], "window end", lineno)?,
            ),
            bbox: (
                num(fields[5], "bbox min x", lineno)?,
                num(fields[6], "bbox min y", lineno)?,
                num(fields[7], "bbox max x", lineno)?,
                num(fields[8], "bbox max y", lineno)?,
            ),
            centroid: (
                num(fields[9], "centroid x", lineno)?,
                num(fields[10], "centroid y", lineno)?,
            ),
        })
    }
}

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("line {line}: corrupt repository record: {msg}")]
    Corrupt { line: usize, msg: String },
    #[error("repository io: {0}")]
    Io(#[from] std::io::Error),
}

/// Append-only record store with indices rebuilt on load.
#[derive(Debug)]
pub struct Repository {
    path: Option<PathBuf>,
    records: Vec<PatternRecord>,
    by_criminal: BTreeMap<Rfid, Vec<usize>>,
    by_zone: BTreeMap<u32, Vec<usize>>,
    batch_hashes: BTreeSet<String>,
}

/// Supported lookups; all answered from stored records alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    ByCriminal(Rfid),
    ByZone(u32),
    CountCrimes(Rfid),
    InWindow(Tick, Tick),
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryAnswer {
    Records(Vec<PatternRecord>),
    Count(usize),
}

impl Repository {
    /// Unpersisted repository, useful for tests and dry runs.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            records: Vec::new(),
            by_criminal: BTreeMap::new(),
            by_zone: BTreeMap::new(),
            batch_hashes: BTreeSet::new(),
        }
    }

    /// Opens (or prepares to create) the repository at `path`, rebuilding
    /// indices from the record lines. `# batch:<hex>` comment lines
    /// restore the replay guard; other comments are ignored.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, RepoError> {
        let path = path.as_ref();
        let mut repo = Self::in_memory();
        repo.path = Some(path.to_path_buf());
        if path.exists() {
            let text = fs::read_to_string(path)?;
            for (idx, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() {
                    continue;
                }
                if let Some(rest) = line.strip_prefix('#') {
                    if let Some(hash) = rest.trim().strip_prefix("batch:") {
                        repo.batch_hashes.insert(hash.trim().to_string());
                    }
                    continue;
                }
                let record = PatternRecord::from_line(line, idx + 1)?;
                repo.index_record(record);
            }
        }
        Ok(repo)
    }

    fn index_record(&mut self, record: PatternRecord) {
        let pos = self.records.len();
        self.by_criminal.entry(record.criminal).or_default().push(pos);
        self.by_zone.entry(record.zone_id).or_default().push(pos);
        self.records.push(record);
    }

    pub fn records(&self) -> &[PatternRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Rewrites the whole repository file through a temporary sibling and
    /// an atomic rename, so a failed write cannot leave a torn file.
    fn persist(&self, lines: &[String]) -> Result<(), RepoError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            for line in lines {
                writeln!(f, "{line}")?;
            }
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Every persisted line in file order: replayed batch markers come
    /// before the records of their batch.
    fn render_lines(&self, extra_hash: Option<&str>, extra: &[PatternRecord]) -> Vec<String> {
        let mut lines = Vec::new();
        for hash in &self.batch_hashes {
            lines.push(format!("# batch:{hash}"));
        }
        if let Some(h) = extra_hash {
            lines.push(format!("# batch:{h}"));
        }
        for r in self.records.iter().chain(extra) {
            lines.push(r.to_line());
        }
        lines
    }

    /// Appends a batch of records durably; on any persistence failure the
    /// in-memory state is left untouched.
    pub fn store(&mut self, records: Vec<PatternRecord>) -> Result<(), RepoError> {
        self.persist(&self.render_lines(None, &records))?;
        for r in records {
            self.index_record(r);
        }
        Ok(())
    }

    /// [`store`](Self::store) with a replay guard: a batch whose hash was
    /// already stored is skipped, returning false.
    pub fn store_guarded(
        &mut self,
        records: Vec<PatternRecord>,
        batch_hash: &str,
    ) -> Result<bool, RepoError> {
        if self.batch_hashes.contains(batch_hash) {
            return Ok(false);
        }
        self.persist(&self.render_lines(Some(batch_hash), &records))?;
        self.batch_hashes.insert(batch_hash.to_string());
        for r in records {
            self.index_record(r);
        }
        Ok(true)
    }

    pub fn count_crimes(&self, criminal: Rfid) -> usize {
        self.by_criminal.get(&criminal).map_or(0, Vec::len)
    }

    /// Records for one criminal, ordered by crime number.
    pub fn by_criminal(&self, criminal: Rfid) -> Vec<PatternRecord> {
        let mut out: Vec<PatternRecord> = self
            .by_criminal
            .get(&criminal)
            .map(|ps| ps.iter().map(|&p| self.records[p].clone()).collect())
            .unwrap_or_default();
        out.sort_by_key(|r| r.crime_number);
        out
    }

    /// Records for one zone, ordered by crime number then criminal.
    pub fn by_zone(&self, zone_id: u32) -> Vec<PatternRecord> {
        let mut out: Vec<PatternRecord> = self
            .by_zone
            .get(&zone_id)
            .map(|ps| ps.iter().map(|&p| self.records[p].clone()).collect())
            .unwrap_or_default();
        out.sort_by_key(|r| (r.crime_number, r.criminal));
        out
    }

    /// Records whose window intersects [t0, t1], ordered by crime number
    /// then criminal.
    pub fn in_window(&self, t0: Tick, t1: Tick) -> Vec<PatternRecord> {
        let mut out: Vec<PatternRecord> = self
            .records
            .iter()
            .filter(|r| r.window.0 <= t1 && r.window.1 >= t0)
            .cloned()
            .collect();
        out.sort_by_key(|r| (r.crime_number, r.criminal));
        out
    }

    pub fn run_query(&self, q: &Query) -> QueryAnswer {
        match *q {
            Query::ByCriminal(id) => QueryAnswer::Records(self.by_criminal(id)),
            Query::ByZone(z) => QueryAnswer::Records(self.by_zone(z)),
            Query::CountCrimes(id) => QueryAnswer::Count(self.count_crimes(id)),
            Query::InWindow(t0, t1) => QueryAnswer::Records(self.in_window(t0, t1)),
        }
    }
}

/// Turns zone summaries into pattern records, continuing each criminal's
/// incident counter from what the repository already holds. Records are
/// produced in summary order and numbered accordingly.
pub fn identify_pattern(
    zone: &Zone,
    summaries: &[SummarySegment],
    repo: &Repository,
) -> Vec<PatternRecord> {
    let mut counters: BTreeMap<Rfid, u64> = BTreeMap::new();
    summaries
        .iter()
        .map(|s| {
            debug_assert_eq!(s.zone_id, zone.zone_id, "summaries must come from this zone");
            let counter = counters
                .entry(s.criminal)
                .or_insert_with(|| repo.count_crimes(s.criminal) as u64);
            *counter += 1;
            let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
            let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            let (mut sx, mut sy) = (0.0, 0.0);
            for p in &s.representative {
                x0 = x0.min(p.x);
                y0 = y0.min(p.y);
                x1 = x1.max(p.x);
                y1 = y1.max(p.y);
                sx += p.x;
                sy += p.y;
            }
            let n = s.representative.len() as f64;
            PatternRecord {
                criminal: s.criminal,
                crime_number: *counter,
                zone_id: s.zone_id,
                window: s.window(),
                bbox: (x0, y0, x1, y1),
                centroid: (sx / n, sy / n),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrajPoint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zone(id: u32) -> Zone {
        Zone {
            zone_id: id,
            officer_ids: BTreeSet::new(),
        }
    }

    fn summary(criminal: u64, zone_id: u32, t0: Tick, x: f64) -> SummarySegment {
        SummarySegment {
            criminal: Rfid(criminal),
            zone_id,
            representative: vec![
                TrajPoint::new(t0, x, 0.0),
                TrajPoint::new(t0 + 3, x + 1.0, 2.0),
            ],
            support: 1,
            officers: [Rfid(500)].into_iter().collect(),
        }
    }

    #[test]
    fn first_incident_numbered_one() {
        let repo = Repository::in_memory();
        let records = identify_pattern(&zone(0), &[summary(701, 0, 0, 1.0)], &repo);
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].crime_number, 1);
        assert_eq!(records[0].window, (0, 3));
        assert_eq!(records[0].bbox, (1.0, 0.0, 2.0, 2.0));
        assert_eq!(records[0].centroid, (1.5, 1.0));
    }

    #[test]
    fn counter_continues_across_batches() {
        let mut repo = Repository::in_memory();
        let first = identify_pattern(&zone(0), &[summary(701, 0, 0, 1.0)], &repo);
        repo.store(first).unwrap();
        let second = identify_pattern(&zone(0), &[summary(701, 0, 10, 5.0)], &repo);
        assert_eq!(second[0].crime_number, 2);
    }

    #[test]
    fn counter_increments_within_batch() {
        let repo = Repository::in_memory();
        let records = identify_pattern(
            &zone(0),
            &[summary(701, 0, 0, 1.0), summary(701, 0, 10, 5.0)],
            &repo,
        );
        assert_eq!(records[0].crime_number, 1);
        assert_eq!(records[1].crime_number, 2);
    }

    #[test]
    fn counters_are_per_criminal() {
        let repo = Repository::in_memory();
        let records = identify_pattern(
            &zone(0),
            &[summary(701, 0, 0, 1.0), summary(702, 0, 0, 2.0)],
            &repo,
        );
        assert_eq!(records[0].crime_number, 1);
        assert_eq!(records[1].crime_number, 1);
    }

    #[test]
    fn persistence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("repo.txt");
        let mut repo = Repository::open(&path).unwrap();
        let z = zone(3);
        let records = identify_pattern(
            &z,
            &[summary(701, 3, 0, 1.0), summary(702, 3, 5, -2.5)],
            &repo,
        );
        repo.store(records.clone()).unwrap();

        let reloaded = Repository::open(&path).unwrap();
        assert_eq!(reloaded.records(), repo.records());
        assert_eq!(reloaded.records(), &records[..]);
    }

    #[test]
    fn corrupt_line_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("repo.txt");
        fs::write(&path, "# fine\n701 1 0 0 3 1 0 2 2 1.5 1\nnot a record\n").unwrap();
        let err = Repository::open(&path).unwrap_err();
        assert!(matches!(err, RepoError::Corrupt { line: 3, .. }), "{err}");
    }

    #[test]
    fn replay_guard_skips_duplicate_batches() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("repo.txt");
        let mut repo = Repository::open(&path).unwrap();
        let records = identify_pattern(&zone(0), &[summary(701, 0, 0, 1.0)], &repo);

        assert!(repo.store_guarded(records.clone(), "abc123").unwrap());
        assert_eq!(repo.len(), 1);
        let again = identify_pattern(&zone(0), &[summary(701, 0, 0, 1.0)], &repo);
        assert!(!repo.store_guarded(again, "abc123").unwrap());
        assert_eq!(repo.len(), 1, "duplicate batch must not add records");

        // the guard survives a reload
        let mut reloaded = Repository::open(&path).unwrap();
        let third = identify_pattern(&zone(0), &[summary(701, 0, 0, 1.0)], &reloaded);
        assert!(!reloaded.store_guarded(third, "abc123").unwrap());
        assert!(reloaded.store_guarded(Vec::new(), "def456").unwrap());
    }

    #[test]
    fn failed_persist_leaves_memory_unchanged() {
        let mut repo = Repository {
            path: Some(PathBuf::from("/nonexistent-dir-xyz/repo.txt")),
            records: Vec::new(),
            by_criminal: BTreeMap::new(),
            by_zone: BTreeMap::new(),
            batch_hashes: BTreeSet::new(),
        };
        let records = identify_pattern(&zone(0), &[summary(701, 0, 0, 1.0)], &repo);
        assert!(repo.store(records).is_err());
        assert!(repo.is_empty());
        assert_eq!(repo.count_crimes(Rfid(701)), 0);
    }

    #[test]
    fn unknown_ids_answer_empty() {
        let repo = Repository::in_memory();
        assert_eq!(repo.count_crimes(Rfid(999)), 0);
        assert!(repo.by_criminal(Rfid(999)).is_empty());
        assert!(repo.by_zone(42).is_empty());
        assert!(repo.in_window(0, 100).is_empty());
    }

    /// Full-scan oracle: every query must agree with a plain filter over
    /// the accumulated record list, on randomized incident streams.
    #[test]
    fn queries_match_full_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(777);
        for _case in 0..10 {
            let mut repo = Repository::in_memory();
            let mut oracle: Vec<PatternRecord> = Vec::new();
            let batches = rng.gen_range(1..6);
            for _ in 0..batches {
                let z = rng.gen_range(0..3u32);
                let summaries: Vec<SummarySegment> = (0..rng.gen_range(1..8))
                    .map(|_| {
                        summary(
                            700 + rng.gen_range(0..4u64),
                            z,
                            rng.gen_range(0..40),
                            rng.gen_range(-5.0..5.0),
                        )
                    })
                    .collect();
                let records = identify_pattern(&zone(z), &summaries, &repo);
                oracle.extend(records.clone());
                repo.store(records).unwrap();
            }

            for criminal in 700..705u64 {
                let id = Rfid(criminal);
                let mut expect: Vec<PatternRecord> =
                    oracle.iter().filter(|r| r.criminal == id).cloned().collect();
                expect.sort_by_key(|r| r.crime_number);
                assert_eq!(repo.by_criminal(id), expect);
                assert_eq!(repo.count_crimes(id), expect.len());
                // counters are exactly 1..n
                let numbers: Vec<u64> = expect.iter().map(|r| r.crime_number).collect();
                assert_eq!(numbers, (1..=numbers.len() as u64).collect::<Vec<_>>());
            }
            for z in 0..4u32 {
                let mut expect: Vec<PatternRecord> =
                    oracle.iter().filter(|r| r.zone_id == z).cloned().collect();
                expect.sort_by_key(|r| (r.crime_number, r.criminal));
                assert_eq!(repo.by_zone(z), expect);
            }
            for (t0, t1) in [(0, 5), (10, 20), (0, 100), (43, 43)] {
                let mut expect: Vec<PatternRecord> = oracle
                    .iter()
                    .filter(|r| r.window.0 <= t1 && r.window.1 >= t0)
                    .cloned()
                    .collect();
                expect.sort_by_key(|r| (r.crime_number, r.criminal));
                assert_eq!(repo.in_window(t0, t1), expect);
            }
        }
    }
}

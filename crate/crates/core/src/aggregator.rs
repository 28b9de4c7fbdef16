//! Zone-level redundancy elimination. Several officers frequently report
//! the same criminal sighting; nearly overlapping report segments are
//! clustered per (zone, criminal) and each group is retained as a single
//! summary segment.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{position_on, Rfid, Tick, TrajPoint, Zone};

/// One officer's sighting of one criminal inside one zone.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub officer: Rfid,
    pub zone_id: u32,
    pub criminal: Rfid,
    /// Criminal sighting track, non-empty with strictly increasing ticks.
    pub segment: Vec<TrajPoint>,
    /// When the commissioner received it (transport metadata).
    pub received_tick: Tick,
}

impl Report {
    pub fn new(
        officer: Rfid,
        zone_id: u32,
        criminal: Rfid,
        segment: Vec<TrajPoint>,
        received_tick: Tick,
    ) -> Result<Self, AggError> {
        validate_segment(&segment)?;
        Ok(Self {
            officer,
            zone_id,
            criminal,
            segment,
            received_tick,
        })
    }

    fn window(&self) -> (Tick, Tick) {
        (self.segment[0].t, self.segment[self.segment.len() - 1].t)
    }
}

/// The single retained segment standing in for a group of merged reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SummarySegment {
    pub criminal: Rfid,
    pub zone_id: u32,
    /// Pointwise centroid of the merged segments.
    pub representative: Vec<TrajPoint>,
    /// How many reports were merged into this summary.
    pub support: usize,
    pub officers: BTreeSet<Rfid>,
}

impl SummarySegment {
    pub fn window(&self) -> (Tick, Tick) {
        (
            self.representative[0].t,
            self.representative[self.representative.len() - 1].t,
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AggError {
    #[error("tolerances must be non-negative (eps={eps}, tau={tau})")]
    InvalidTolerance { eps: f64, tau: Tick },
    #[error("report from officer {officer} carries zone {found}, expected zone {expected}")]
    ForeignZone {
        officer: Rfid,
        found: u32,
        expected: u32,
    },
    #[error("report segment is empty")]
    EmptySegment,
    #[error("report segment not strictly time-ordered at t={t}")]
    UnorderedSegment { t: Tick },
    #[error("report segment has a non-finite coordinate at t={t}")]
    BadCoordinate { t: Tick },
    #[error("line {line}: malformed report: {msg}")]
    Malformed { line: usize, msg: String },
}

fn validate_segment(segment: &[TrajPoint]) -> Result<(), AggError> {
    if segment.is_empty() {
        return Err(AggError::EmptySegment);
    }
    let mut prev = None;
    for p in segment {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(AggError::BadCoordinate { t: p.t });
        }
        if let Some(q) = prev {
            if p.t <= q {
                return Err(AggError::UnorderedSegment { t: p.t });
            }
        }
        prev = Some(p.t);
    }
    Ok(())
}

/// Two segments merge when their windows come within `tau` ticks and
/// they stay within `eps` of each other: over the common ticks when the
/// windows overlap, or between the facing endpoints when a gap of at
/// most `tau` separates them.
fn mergeable(a: &[TrajPoint], b: &[TrajPoint], eps: f64, tau: Tick) -> bool {
    let (a0, a1) = (a[0].t, a[a.len() - 1].t);
    let (b0, b1) = (b[0].t, b[b.len() - 1].t);
    let lo = a0.max(b0);
    let hi = a1.min(b1);
    if lo <= hi {
        for t in lo..=hi {
            let (ax, ay) = position_on(a, t).expect("t inside both windows");
            let (bx, by) = position_on(b, t).expect("t inside both windows");
            if ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt() > eps {
                return false;
            }
        }
        true
    } else {
        if lo - hi > tau {
            return false;
        }
        let (pa, pb) = if a1 < b0 {
            (a[a.len() - 1], b[0])
        } else {
            (b[b.len() - 1], a[0])
        };
        ((pa.x - pb.x).powi(2) + (pa.y - pb.y).powi(2)).sqrt() <= eps
    }
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let root = self.find(self.0[x]);
            self.0[x] = root;
        }
        self.0[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Pointwise centroid: at every tick covered by at least one member, the
/// mean of the positions of the members whose windows cover that tick.
fn representative(members: &[&Report]) -> Vec<TrajPoint> {
    let lo = members.iter().map(|r| r.window().0).min().expect("non-empty group");
    let hi = members.iter().map(|r| r.window().1).max().expect("non-empty group");
    let mut pts = Vec::new();
    for t in lo..=hi {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0u32);
        for r in members {
            if let Some((x, y)) = position_on(&r.segment, t) {
                sx += x;
                sy += y;
                n += 1;
            }
        }
        if n > 0 {
            pts.push(TrajPoint::new(t, sx / n as f64, sy / n as f64));
        }
    }
    pts
}

/// Groups reports by (zone, criminal), merges nearly overlapping
/// segments by transitive closure of the pairwise predicate, and emits
/// one summary per merge group, sorted by zone, criminal and start tick.
pub fn dedupe(reports: &[Report], eps: f64, tau: Tick) -> Result<Vec<SummarySegment>, AggError> {
    if !(eps >= 0.0) || tau < 0 {
        return Err(AggError::InvalidTolerance { eps, tau });
    }
    for r in reports {
        validate_segment(&r.segment)?;
    }

    let mut groups: BTreeMap<(u32, Rfid), Vec<&Report>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.zone_id, r.criminal)).or_default().push(r);
    }

    let mut summaries = Vec::new();
    for ((zone_id, criminal), members) in groups {
        let n = members.len();
        let mut dsu = Dsu::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if mergeable(&members[i].segment, &members[j].segment, eps, tau) {
                    dsu.union(i, j);
                }
            }
        }
        let mut components: BTreeMap<usize, Vec<&Report>> = BTreeMap::new();
        for i in 0..n {
            let root = dsu.find(i);
            components.entry(root).or_default().push(members[i]);
        }
        for group in components.values() {
            summaries.push(SummarySegment {
                criminal,
                zone_id,
                representative: representative(group),
                support: group.len(),
                officers: group.iter().map(|r| r.officer).collect(),
            });
        }
    }
    summaries.sort_by_key(|s| (s.zone_id, s.criminal, s.window().0));
    Ok(summaries)
}

/// Zone-checked aggregation: every report must belong to `zone`.
pub fn aggregate_zone(
    zone: &Zone,
    reports: &[Report],
    eps: f64,
    tau: Tick,
) -> Result<Vec<SummarySegment>, AggError> {
    for r in reports {
        if r.zone_id != zone.zone_id {
            return Err(AggError::ForeignZone {
                officer: r.officer,
                found: r.zone_id,
                expected: zone.zone_id,
            });
        }
    }
    dedupe(reports, eps, tau)
}

/// Text form carried inside shares: a `officer zone criminal` header
/// line followed by one `ID timestamp X Y` line per segment point, the
/// ID repeating the criminal's.
pub fn encode_report(report: &Report) -> String {
    let mut out = format!("{} {} {}\n", report.officer, report.zone_id, report.criminal);
    for p in &report.segment {
        out.push_str(&format!("{} {} {} {}\n", report.criminal, p.t, p.x, p.y));
    }
    out
}

/// Inverse of [`encode_report`]. The receive tick is transport metadata
/// supplied by the caller.
pub fn decode_report(text: &str, received_tick: Tick) -> Result<Report, AggError> {
    let malformed = |line: usize, msg: String| AggError::Malformed { line, msg };
    let mut header: Option<(Rfid, u32, Rfid)> = None;
    let mut segment = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match header {
            None => {
                if fields.len() != 3 {
                    return Err(malformed(
                        line,
                        format!("header needs `officer zone criminal`, found {} fields", fields.len()),
                    ));
                }
                let nums: Vec<u64> = fields
                    .iter()
                    .map(|f| f.parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| malformed(line, "non-numeric header field".into()))?;
                let zone = u32::try_from(nums[1])
                    .map_err(|_| malformed(line, format!("zone id {} out of range", nums[1])))?;
                header = Some((Rfid(nums[0]), zone, Rfid(nums[2])));
            }
            Some((_, _, criminal)) => {
                if fields.len() != 4 {
                    return Err(malformed(
                        line,
                        format!("point needs `ID timestamp X Y`, found {} fields", fields.len()),
                    ));
                }
                let id: u64 = fields[0]
                    .parse()
                    .map_err(|_| malformed(line, "non-numeric point id".into()))?;
                if Rfid(id) != criminal {
                    return Err(malformed(
                        line,
                        format!("point id {id} does not match criminal {criminal}"),
                    ));
                }
                let t: Tick = fields[1]
                    .parse()
                    .map_err(|_| malformed(line, "non-numeric timestamp".into()))?;
                let x: f64 = fields[2]
                    .parse()
                    .map_err(|_| malformed(line, "non-numeric x".into()))?;
                let y: f64 = fields[3]
                    .parse()
                    .map_err(|_| malformed(line, "non-numeric y".into()))?;
                segment.push(TrajPoint::new(t, x, y));
            }
        }
    }
    let (officer, zone_id, criminal) =
        header.ok_or_else(|| malformed(1, "empty report".into()))?;
    Report::new(officer, zone_id, criminal, segment, received_tick)
}

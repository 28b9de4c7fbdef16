//! Shared domain types: tags, trajectories, datasets, the officer registry,
//! and the time-synchronized trajectory geometry everything else builds on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Discrete timestamp in ticks.
pub type Tick = i64;

/// Tag identity of an actor (officer or criminal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rfid(pub u64);

impl fmt::Display for Rfid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One sampled position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajPoint {
    pub t: Tick,
    pub x: f64,
    pub y: f64,
}

impl TrajPoint {
    pub fn new(t: Tick, x: f64, y: f64) -> Self {
        Self { t, x, y }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("trajectory {0} has no points")]
    EmptyTrajectory(Rfid),
    #[error("trajectory {id}: timestamps not strictly increasing at t={t}")]
    NonIncreasingTimestamps { id: Rfid, t: Tick },
    #[error("trajectory {id}: negative timestamp {t}")]
    NegativeTimestamp { id: Rfid, t: Tick },
    #[error("trajectory {id}: non-finite coordinate at t={t}")]
    NonFiniteCoordinate { id: Rfid, t: Tick },
    #[error("duplicate trajectory id {0} in dataset")]
    DuplicateId(Rfid),
    #[error("t={t} outside trajectory span [{start}, {end}]")]
    OutOfRange { t: Tick, start: Tick, end: Tick },
    #[error("trajectory {id} does not cover window [{t0}, {t1}]")]
    Coverage { id: Rfid, t0: Tick, t1: Tick },
    #[error("invalid window [{t0}, {t1}]")]
    BadWindow { t0: Tick, t1: Tick },
}

/// Time-ordered sequence of positions for one tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    id: Rfid,
    points: Vec<TrajPoint>,
}

impl Trajectory {
    /// Builds a trajectory, enforcing non-emptiness, strictly increasing
    /// non-negative timestamps and finite coordinates.
    pub fn new(id: Rfid, points: Vec<TrajPoint>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::EmptyTrajectory(id));
        }
        let mut prev: Option<Tick> = None;
        for p in &points {
            if p.t < 0 {
                return Err(ModelError::NegativeTimestamp { id, t: p.t });
            }
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(ModelError::NonFiniteCoordinate { id, t: p.t });
            }
            if let Some(q) = prev {
                if p.t <= q {
                    return Err(ModelError::NonIncreasingTimestamps { id, t: p.t });
                }
            }
            prev = Some(p.t);
        }
        Ok(Self { id, points })
    }

    pub fn id(&self) -> Rfid {
        self.id
    }

    pub fn points(&self) -> &[TrajPoint] {
        &self.points
    }

    /// First sampled tick.
    pub fn start(&self) -> Tick {
        self.points[0].t
    }

    /// Last sampled tick.
    pub fn end(&self) -> Tick {
        self.points[self.points.len() - 1].t
    }

    /// Position at tick `t`: the stored point if sampled, otherwise linear
    /// interpolation between the bracketing samples.
    pub fn position_at(&self, t: Tick) -> Result<(f64, f64), ModelError> {
        position_on(&self.points, t).ok_or(ModelError::OutOfRange {
            t,
            start: self.start(),
            end: self.end(),
        })
    }
}

/// Interpolated position over a sorted point slice; `None` outside the span.
pub(crate) fn position_on(points: &[TrajPoint], t: Tick) -> Option<(f64, f64)> {
    let first = points.first()?;
    let last = points.last()?;
    if t < first.t || t > last.t {
        return None;
    }
    match points.binary_search_by_key(&t, |p| p.t) {
        Ok(i) => Some((points[i].x, points[i].y)),
        Err(i) => {
            // t is strictly between points[i-1] and points[i]
            let a = points[i - 1];
            let b = points[i];
            let frac = (t - a.t) as f64 / (b.t - a.t) as f64;
            Some((a.x + frac * (b.x - a.x), a.y + frac * (b.y - a.y)))
        }
    }
}

/// Collection of trajectories with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    trajectories: Vec<Trajectory>,
}

impl Dataset {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for t in &trajectories {
            if !seen.insert(t.id()) {
                return Err(ModelError::DuplicateId(t.id()));
            }
        }
        Ok(Self { trajectories })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn get(&self, id: Rfid) -> Option<&Trajectory> {
        self.trajectories.iter().find(|t| t.id() == id)
    }

    /// Total number of sampled points across all trajectories.
    pub fn point_count(&self) -> usize {
        self.trajectories.iter().map(|t| t.points().len()).sum()
    }

    /// Diagonal of the bounding box of all points; 0 for degenerate inputs.
    pub fn diameter(&self) -> f64 {
        let mut min_x = f64::INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        let mut any = false;
        for t in &self.trajectories {
            for p in t.points() {
                any = true;
                min_x = min_x.min(p.x);
                min_y = min_y.min(p.y);
                max_x = max_x.max(p.x);
                max_y = max_y.max(p.y);
            }
        }
        if !any {
            return 0.0;
        }
        ((max_x - min_x).powi(2) + (max_y - min_y).powi(2)).sqrt()
    }

    /// Plain-text form, one `ID timestamp X Y` line per point.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.trajectories {
            for p in t.points() {
                out.push_str(&format!("{} {} {} {}\n", t.id(), p.t, p.x, p.y));
            }
        }
        out
    }
}

/// Officers known to the commissioner plus the aggregator's own id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    pub officers: BTreeSet<Rfid>,
    pub aggregator_id: Rfid,
}

impl Registry {
    pub fn is_officer(&self, id: Rfid) -> bool {
        self.officers.contains(&id)
    }
}

/// Administrative cluster of officers; the unit of aggregation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Zone {
    pub zone_id: u32,
    pub officer_ids: BTreeSet<Rfid>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: expected 4 fields `ID timestamp X Y`, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: invalid {what}: `{token}`")]
    BadToken {
        line: usize,
        what: &'static str,
        token: String,
    },
    #[error("line {line}: duplicate timestamp {t} for id {id}")]
    DuplicateTimestamp { line: usize, id: Rfid, t: Tick },
    #[error("no data lines in input")]
    Empty,
}

fn parse_field<T: std::str::FromStr>(
    token: &str,
    what: &'static str,
    line: usize,
) -> Result<T, ParseError> {
    token.parse().map_err(|_| ParseError::BadToken {
        line,
        what,
        token: token.to_string(),
    })
}

/// Parses trajectory text: one `ID timestamp X Y` point per line, lines
/// starting with `#` ignored. Points are grouped by id and sorted by
/// timestamp; trajectories keep first-appearance order.
pub fn parse_trajectory_file(text: &str) -> Result<Dataset, ParseError> {
    let mut order: Vec<Rfid> = Vec::new();
    let mut by_id: BTreeMap<Rfid, Vec<(usize, TrajPoint)>> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(ParseError::FieldCount {
                line,
                found: fields.len(),
            });
        }
        let id = Rfid(parse_field::<u64>(fields[0], "id", line)?);
        let t: u64 = parse_field(fields[1], "timestamp", line)?;
        let t = Tick::try_from(t).map_err(|_| ParseError::BadToken {
            line,
            what: "timestamp",
            token: fields[1].to_string(),
        })?;
        let x: f64 = parse_field(fields[2], "x coordinate", line)?;
        let y: f64 = parse_field(fields[3], "y coordinate", line)?;
        if !x.is_finite() {
            return Err(ParseError::BadToken {
                line,
                what: "x coordinate",
                token: fields[2].to_string(),
            });
        }
        if !y.is_finite() {
            return Err(ParseError::BadToken {
                line,
                what: "y coordinate",
                token: fields[3].to_string(),
            });
        }
        let entry = by_id.entry(id).or_insert_with(|| {
            order.push(id);
            Vec::new()
        });
        if entry.iter().any(|(_, p)| p.t == t) {
            return Err(ParseError::DuplicateTimestamp { line, id, t });
        }
        entry.push((line, TrajPoint::new(t, x, y)));
    }

    if order.is_empty() {
        return Err(ParseError::Empty);
    }

    let mut trajectories = Vec::with_capacity(order.len());
    for id in order {
        let mut pts: Vec<TrajPoint> = by_id.remove(&id).unwrap().into_iter().map(|(_, p)| p).collect();
        pts.sort_by_key(|p| p.t);
        // invariants hold: per-id timestamps are deduplicated and sorted
        trajectories.push(Trajectory::new(id, pts).expect("validated during parse"));
    }
    Ok(Dataset { trajectories })
}

/// Parses a registry file: first data line is the aggregator id, every
/// following line one officer id. `#` comments and blank lines are skipped.
pub fn parse_registry_file(text: &str) -> Result<Registry, ParseError> {
    let mut aggregator_id = None;
    let mut officers = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let id = Rfid(parse_field::<u64>(trimmed, "id", line)?);
        if aggregator_id.is_none() {
            aggregator_id = Some(id);
        } else {
            officers.insert(id);
        }
    }
    match aggregator_id {
        Some(aggregator_id) => Ok(Registry {
            officers,
            aggregator_id,
        }),
        None => Err(ParseError::Empty),
    }
}

/// Splits the requesting ids into (registered officers, everyone else),
/// preserving input order in both halves.
pub fn classify_ids(requesting: &[Rfid], registry: &Registry) -> (Vec<Rfid>, Vec<Rfid>) {
    let mut officers = Vec::new();
    let mut criminals = Vec::new();
    for &id in requesting {
        if registry.is_officer(id) {
            officers.push(id);
        } else {
            criminals.push(id);
        }
    }
    (officers, criminals)
}

/// Maximum over the integer ticks of `window` of the Euclidean distance
/// between the two trajectories' interpolated positions.
///
/// Both trajectories must cover the window. Symmetric and non-negative;
/// zero exactly on pointwise-identical inputs.
pub fn traj_distance(
    a: &Trajectory,
    b: &Trajectory,
    window: (Tick, Tick),
) -> Result<f64, ModelError> {
    let (t0, t1) = window;
    if t0 > t1 {
        return Err(ModelError::BadWindow { t0, t1 });
    }
    for traj in [a, b] {
        if traj.start() > t0 || traj.end() < t1 {
            return Err(ModelError::Coverage {
                id: traj.id(),
                t0,
                t1,
            });
        }
    }
    let mut max = 0.0f64;
    for t in t0..=t1 {
        let (ax, ay) = a.position_at(t).expect("coverage checked");
        let (bx, by) = b.position_at(t).expect("coverage checked");
        let d = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
        if d > max {
            max = d;
        }
    }
    Ok(max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(id: u64, pts: &[(Tick, f64, f64)]) -> Trajectory {
        Trajectory::new(
            Rfid(id),
            pts.iter().map(|&(t, x, y)| TrajPoint::new(t, x, y)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn parse_single_point() {
        let d = parse_trajectory_file("501 0 0.0 0.0").unwrap();
        assert_eq!(d.len(), 1);
        let t = &d.trajectories()[0];
        assert_eq!(t.id(), Rfid(501));
        assert_eq!(t.points(), &[TrajPoint::new(0, 0.0, 0.0)]);
    }

    #[test]
    fn parse_groups_by_id() {
        let text = "1 0 0 0\n2 0 1 1\n3 0 2 2\n1 5 0 1\n2 5 1 2\n3 5 2 3\n";
        let d = parse_trajectory_file(text).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.point_count(), 6);
        for t in d.trajectories() {
            assert_eq!(t.points().len(), 2);
        }
    }

    #[test]
    fn parse_rejects_short_line() {
        let err = parse_trajectory_file("501 0 0.0").unwrap_err();
        assert_eq!(err, ParseError::FieldCount { line: 1, found: 3 });
    }

    #[test]
    fn parse_rejects_duplicate_timestamp() {
        let err = parse_trajectory_file("7 3 0 0\n7 3 1 1\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::DuplicateTimestamp {
                line: 2,
                id: Rfid(7),
                t: 3
            }
        );
    }

    #[test]
    fn parse_rejects_empty_input() {
        assert_eq!(parse_trajectory_file("# only a comment\n").unwrap_err(), ParseError::Empty);
    }

    #[test]
    fn parse_skips_comments_and_blanks() {
        let d = parse_trajectory_file("# header\n\n9 1 2.5 -3.5\n").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.trajectories()[0].points()[0], TrajPoint::new(1, 2.5, -3.5));
    }

    #[test]
    fn parse_sorts_out_of_order_points() {
        let d = parse_trajectory_file("4 9 1 1\n4 2 0 0\n").unwrap();
        assert_eq!(d.trajectories()[0].start(), 2);
        assert_eq!(d.trajectories()[0].end(), 9);
    }

    #[test]
    fn classify_matches_console_session() {
        let registry = Registry {
            officers: [501, 502, 503].iter().map(|&i| Rfid(i)).collect(),
            aggregator_id: Rfid(999),
        };
        let ids: Vec<Rfid> = [501, 502, 701, 503, 702].iter().map(|&i| Rfid(i)).collect();
        let (officers, criminals) = classify_ids(&ids, &registry);
        assert_eq!(officers, vec![Rfid(501), Rfid(502), Rfid(503)]);
        assert_eq!(criminals, vec![Rfid(701), Rfid(702)]);
    }

    #[test]
    fn classify_all_registered() {
        let registry = Registry {
            officers: [1, 2].iter().map(|&i| Rfid(i)).collect(),
            aggregator_id: Rfid(0),
        };
        let (officers, criminals) = classify_ids(&[Rfid(1), Rfid(2)], &registry);
        assert_eq!(officers.len(), 2);
        assert!(criminals.is_empty());
    }

    #[test]
    fn classify_empty_registry() {
        let registry = Registry {
            officers: BTreeSet::new(),
            aggregator_id: Rfid(0),
        };
        let (officers, criminals) = classify_ids(&[Rfid(5), Rfid(6)], &registry);
        assert!(officers.is_empty());
        assert_eq!(criminals.len(), 2);
    }

    #[test]
    fn position_interpolates() {
        let t = traj(1, &[(0, 0.0, 0.0), (2, 2.0, 0.0)]);
        assert_eq!(t.position_at(1).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn position_exact_sample() {
        let t = traj(1, &[(0, 0.0, 0.0), (2, 2.0, 0.0), (4, 0.0, 4.0)]);
        assert_eq!(t.position_at(2).unwrap(), (2.0, 0.0));
    }

    #[test]
    fn position_out_of_range() {
        let t = traj(1, &[(0, 0.0, 0.0), (2, 2.0, 0.0)]);
        assert!(matches!(
            t.position_at(-1),
            Err(ModelError::OutOfRange { t: -1, .. })
        ));
        assert!(t.position_at(3).is_err());
    }

    #[test]
    fn distance_identical_is_zero() {
        let a = traj(1, &[(0, 1.0, 2.0), (4, 3.0, 4.0)]);
        let b = traj(2, &[(0, 1.0, 2.0), (4, 3.0, 4.0)]);
        assert_eq!(traj_distance(&a, &b, (0, 4)).unwrap(), 0.0);
    }

    #[test]
    fn distance_constant_offset() {
        let a = traj(1, &[(0, 0.0, 0.0), (5, 0.0, 0.0)]);
        let b = traj(2, &[(0, 3.0, 4.0), (5, 3.0, 4.0)]);
        assert!((traj_distance(&a, &b, (0, 5)).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn distance_with_interpolation() {
        let a = traj(1, &[(0, 0.0, 0.0), (2, 2.0, 0.0)]);
        let b = traj(2, &[(0, 0.0, 1.0), (1, 1.0, 1.0), (2, 2.0, 1.0)]);
        assert!((traj_distance(&a, &b, (0, 2)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_requires_coverage() {
        let a = traj(1, &[(0, 0.0, 0.0), (2, 2.0, 0.0)]);
        let b = traj(2, &[(1, 0.0, 0.0), (2, 2.0, 0.0)]);
        assert!(matches!(
            traj_distance(&a, &b, (0, 2)),
            Err(ModelError::Coverage { id: Rfid(2), .. })
        ));
    }

    #[test]
    fn trajectory_rejects_unsorted_points() {
        let r = Trajectory::new(
            Rfid(1),
            vec![TrajPoint::new(2, 0.0, 0.0), TrajPoint::new(1, 0.0, 0.0)],
        );
        assert!(matches!(r, Err(ModelError::NonIncreasingTimestamps { .. })));
    }

    #[test]
    fn dataset_rejects_duplicate_ids() {
        let a = traj(1, &[(0, 0.0, 0.0)]);
        let b = traj(1, &[(0, 1.0, 1.0)]);
        assert!(matches!(Dataset::new(vec![a, b]), Err(ModelError::DuplicateId(Rfid(1)))));
    }

    #[test]
    fn registry_parse_first_line_is_aggregator() {
        let r = parse_registry_file("999\n501\n502\n503\n").unwrap();
        assert_eq!(r.aggregator_id, Rfid(999));
        assert_eq!(r.officers.len(), 3);
        assert!(r.is_officer(Rfid(502)));
    }
}

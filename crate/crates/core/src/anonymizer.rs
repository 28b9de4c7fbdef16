//! Trajectory k-anonymization in three steps: partition trajectories
//! into timestamp-aligned equivalence classes, greedily cluster each
//! class into groups of exactly `k`, then republish every member as a
//! jittered copy of its cluster pivot so any published point could
//! belong to any of the k members.

pub mod verify;

use std::collections::BTreeSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{position_on, traj_distance, Dataset, Rfid, Tick, TrajPoint, Trajectory};

/// Tuning knobs for the anonymization pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct AnonParams {
    /// Cluster size: every published group hides exactly k trajectories.
    pub k: usize,
    /// Uncertainty diameter; published points are jittered within a disk
    /// of radius `delta / 2` around the pivot.
    pub delta: f64,
    /// Window alignment granularity in ticks.
    pub pi: Tick,
    /// Initial bound on the cluster radius.
    pub max_radius: f64,
    /// Hard cap the radius bound may grow to when too much is discarded.
    pub delta_max: f64,
    /// Largest tolerable fraction of discarded trajectories.
    pub trash_max: f64,
}

impl AnonParams {
    pub fn validate(&self) -> Result<(), AnonError> {
        let fail = |reason| Err(AnonError::InvalidParams { reason });
        if self.k < 2 {
            return fail("k must be at least 2");
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return fail("delta must be positive and finite");
        }
        if self.pi < 1 {
            return fail("pi must be at least 1");
        }
        if !(self.max_radius > 0.0) || !self.max_radius.is_finite() {
            return fail("max_radius must be positive and finite");
        }
        if !(self.delta_max >= self.max_radius) || !self.delta_max.is_finite() {
            return fail("delta_max must be at least max_radius");
        }
        if !(0.0..=1.0).contains(&self.trash_max) {
            return fail("trash_max must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AnonError {
    #[error("invalid anonymization parameters: {reason}")]
    InvalidParams { reason: &'static str },
    #[error(
        "anonymity infeasible for window [{t0}, {t1}]: {trashed} of {total} \
         trajectories still discarded at the radius cap {cap}"
    )]
    Infeasible {
        t0: Tick,
        t1: Tick,
        trashed: usize,
        total: usize,
        cap: f64,
    },
    #[error(
        "anonymity infeasible: {removed} of {total} trajectories discarded, \
         above the allowed fraction {max}"
    )]
    TrashBound {
        removed: usize,
        total: usize,
        max: f64,
    },
}

/// Trajectories sharing the same aligned time window, trimmed to it.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceClass {
    pub window: (Tick, Tick),
    /// Sorted by id; every member spans exactly the window.
    pub members: Vec<Trajectory>,
}

/// A pivot and its k-1 nearest neighbors within one equivalence class.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCluster {
    pub window: (Tick, Tick),
    pub pivot_id: Rfid,
    /// Max distance from the pivot to any member.
    pub radius: f64,
    /// Exactly k trajectories including the pivot, sorted by id.
    pub members: Vec<Trajectory>,
}

/// One published cluster: every member rewritten onto the pivot's path.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedCluster {
    pub window: (Tick, Tick),
    pub pivot_id: Rfid,
    pub radius: f64,
    /// One point per tick of the window, per member, sorted by id.
    pub members: Vec<Trajectory>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnonStats {
    pub trajectories_in: usize,
    pub points_in: usize,
    /// Bounding-box diagonal of the input dataset.
    pub diameter: f64,
    pub removed_trajectories: usize,
    /// Input points belonging to removed trajectories.
    pub removed_points: usize,
    pub class_count: usize,
    pub cluster_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnonymizedDataset {
    pub clusters: Vec<TranslatedCluster>,
    /// Ids of discarded trajectories, sorted.
    pub trash: Vec<Rfid>,
    pub stats: AnonStats,
}

impl AnonymizedDataset {
    /// Flattens the published clusters back into a plain dataset.
    pub fn to_dataset(&self) -> Dataset {
        let mut trajectories = Vec::new();
        for c in &self.clusters {
            trajectories.extend(c.members.iter().cloned());
        }
        Dataset::new(trajectories).expect("cluster members have unique ids")
    }
}

/// Widest window [i, j] inside the trajectory span with both endpoints
/// multiples of `pi`; `None` when no such window of positive length fits.
fn aligned_window(start: Tick, end: Tick, pi: Tick) -> Option<(Tick, Tick)> {
    let i = (start + pi - 1).div_euclid(pi) * pi;
    let j = end.div_euclid(pi) * pi;
    (i < j).then_some((i, j))
}

/// Restriction of a trajectory to [t0, t1], interpolating boundary
/// points when the window edges fall between samples.
fn trim(traj: &Trajectory, t0: Tick, t1: Tick) -> Trajectory {
    let mut pts: Vec<TrajPoint> = Vec::new();
    let (x0, y0) = traj.position_at(t0).expect("window inside span");
    pts.push(TrajPoint::new(t0, x0, y0));
    for p in traj.points() {
        if p.t > t0 && p.t < t1 {
            pts.push(*p);
        }
    }
    let (x1, y1) = traj.position_at(t1).expect("window inside span");
    pts.push(TrajPoint::new(t1, x1, y1));
    Trajectory::new(traj.id(), pts).expect("trimming preserves ordering")
}

/// Step 1: group trajectories by their widest aligned window and trim
/// them to it. Trajectories with no aligned window of positive length
/// are returned in `removed`.
pub fn partition(d: &Dataset, pi: Tick) -> (Vec<EquivalenceClass>, Vec<Rfid>) {
    assert!(pi >= 1, "pi must be at least 1");
    let mut removed = Vec::new();
    let mut classes: Vec<EquivalenceClass> = Vec::new();
    for traj in d.trajectories() {
        match aligned_window(traj.start(), traj.end(), pi) {
            Some((i, j)) => {
                let trimmed = trim(traj, i, j);
                match classes.iter_mut().find(|c| c.window == (i, j)) {
                    Some(c) => c.members.push(trimmed),
                    None => classes.push(EquivalenceClass {
                        window: (i, j),
                        members: vec![trimmed],
                    }),
                }
            }
            None => removed.push(traj.id()),
        }
    }
    classes.sort_by_key(|c| c.window);
    for c in &mut classes {
        c.members.sort_by_key(|m| m.id());
    }
    removed.sort();
    (classes, removed)
}

/// Pointwise mean of the member positions at every tick of the window.
fn centroid_trajectory(members: &[&Trajectory], window: (Tick, Tick)) -> Trajectory {
    let n = members.len() as f64;
    let pts = (window.0..=window.1)
        .map(|t| {
            let (mut sx, mut sy) = (0.0, 0.0);
            for m in members {
                let (x, y) = m.position_at(t).expect("members span the window");
                sx += x;
                sy += y;
            }
            TrajPoint::new(t, sx / n, sy / n)
        })
        .collect();
    Trajectory::new(Rfid(u64::MAX), pts).expect("one point per tick")
}

/// One greedy sweep over `active` (indices into `members`, ascending by
/// id). Returns the emitted clusters and the indices left unclustered.
fn greedy_pass(
    members: &[Trajectory],
    active: &[usize],
    window: (Tick, Tick),
    k: usize,
    bound: f64,
) -> (Vec<TrajectoryCluster>, Vec<usize>) {
    let dist =
        |a: usize, b: usize| traj_distance(&members[a], &members[b], window).expect("same window");

    let mut active: BTreeSet<usize> = active.iter().copied().collect();
    let mut clusters = Vec::new();
    let mut trashed: Vec<usize> = Vec::new();
    let mut prev_pivot: Option<usize> = None;

    // seed the first pivot search at the average trajectory
    let centroid = {
        let refs: Vec<&Trajectory> = active.iter().map(|&i| &members[i]).collect();
        centroid_trajectory(&refs, window)
    };

    while active.len() >= k {
        let pivot = match prev_pivot {
            None => {
                let d = |i: usize| {
                    traj_distance(&members[i], &centroid, window).expect("same window")
                };
                farthest(active.iter().copied(), d)
            }
            Some(p) => farthest(active.iter().copied(), |i| dist(p, i)),
        };
        prev_pivot = Some(pivot);

        let mut neighbors: Vec<(f64, usize)> = active
            .iter()
            .copied()
            .filter(|&i| i != pivot)
            .map(|i| (dist(pivot, i), i))
            .collect();
        neighbors.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        neighbors.truncate(k - 1);
        let radius = neighbors.last().map_or(0.0, |&(d, _)| d);

        if radius <= bound {
            let mut idxs: Vec<usize> = neighbors.iter().map(|&(_, i)| i).collect();
            idxs.push(pivot);
            idxs.sort();
            for &i in &idxs {
                active.remove(&i);
            }
            clusters.push(TrajectoryCluster {
                window,
                pivot_id: members[pivot].id(),
                radius,
                members: idxs.iter().map(|&i| members[i].clone()).collect(),
            });
        } else {
            active.remove(&pivot);
            trashed.push(pivot);
        }
    }
    trashed.extend(active);
    trashed.sort();
    (clusters, trashed)
}

/// Index maximizing `d`, smallest index on ties.
fn farthest(candidates: impl Iterator<Item = usize>, d: impl Fn(usize) -> f64) -> usize {
    let mut best: Option<(f64, usize)> = None;
    for i in candidates {
        let di = d(i);
        if best.map_or(true, |(bd, _)| di > bd) {
            best = Some((di, i));
        }
    }
    best.expect("at least one candidate").1
}

/// Step 2: cover one equivalence class with clusters of exactly k.
///
/// Runs greedy sweeps starting at radius bound `max_radius`; whenever
/// the discarded fraction of the class exceeds `trash_max` the bound
/// doubles (capped at `delta_max`) and only the discards are swept
/// again. Fails if the cap is reached with the bound still violated.
pub fn cluster_class(
    class: &EquivalenceClass,
    params: &AnonParams,
) -> Result<(Vec<TrajectoryCluster>, Vec<Rfid>), AnonError> {
    params.validate()?;
    let total = class.members.len();
    let mut bound = params.max_radius;
    let mut clusters = Vec::new();
    let mut active: Vec<usize> = (0..total).collect();
    loop {
        let (emitted, trash) = greedy_pass(&class.members, &active, class.window, params.k, bound);
        clusters.extend(emitted);
        if trash.len() as f64 <= params.trash_max * total as f64 {
            let ids = trash.iter().map(|&i| class.members[i].id()).collect();
            return Ok((clusters, ids));
        }
        if bound >= params.delta_max {
            return Err(AnonError::Infeasible {
                t0: class.window.0,
                t1: class.window.1,
                trashed: trash.len(),
                total,
                cap: params.delta_max,
            });
        }
        bound = (bound * 2.0).min(params.delta_max);
        active = trash;
    }
}

/// Uniform point in the closed disk of radius `r`.
fn disk_offset(r: f64, rng: &mut dyn RngCore) -> (f64, f64) {
    let mut draw = || {
        let mut b = [0u8; 8];
        rng.fill_bytes(&mut b);
        (u64::from_le_bytes(b) >> 11) as f64 / (1u64 << 53) as f64
    };
    let radius = r * draw().sqrt();
    let theta = 2.0 * std::f64::consts::PI * draw();
    (radius * theta.cos(), radius * theta.sin())
}

/// Step 3: republish every cluster member as the pivot's path plus an
/// independent jitter within the disk of radius `delta / 2`, one point
/// per tick of the window.
pub fn translate(
    clusters: &[TrajectoryCluster],
    delta: f64,
    rng: &mut dyn RngCore,
) -> Vec<TranslatedCluster> {
    clusters
        .iter()
        .map(|cluster| {
            let pivot = cluster
                .members
                .iter()
                .find(|m| m.id() == cluster.pivot_id)
                .expect("pivot is a member");
            let pivot_points = pivot.points().to_vec();
            let members = cluster
                .members
                .iter()
                .map(|m| {
                    let pts = (cluster.window.0..=cluster.window.1)
                        .map(|t| {
                            let (px, py) = position_on(&pivot_points, t).expect("pivot spans window");
                            let (dx, dy) = disk_offset(delta / 2.0, rng);
                            TrajPoint::new(t, px + dx, py + dy)
                        })
                        .collect();
                    Trajectory::new(m.id(), pts).expect("one point per tick")
                })
                .collect();
            TranslatedCluster {
                window: cluster.window,
                pivot_id: cluster.pivot_id,
                radius: cluster.radius,
                members,
            }
        })
        .collect()
}

/// Derives an independent stream seed per equivalence class.
fn class_seed(base: u64, window: (Tick, Tick)) -> u64 {
    let mut z = base
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(window.0 as u64 ^ (window.1 as u64) << 32));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Full pipeline: partition, cluster every class, translate.
///
/// Classes run in parallel, each on its own derived random stream, so
/// the result depends only on (dataset, params, seed).
pub fn anonymize(d: &Dataset, params: &AnonParams, seed: u64) -> Result<AnonymizedDataset, AnonError> {
    params.validate()?;
    let (classes, removed) = partition(d, params.pi);

    let per_class: Vec<(Vec<TranslatedCluster>, Vec<Rfid>)> = classes
        .par_iter()
        .map(|class| -> Result<_, AnonError> {
            let (clusters, trash) = cluster_class(class, params)?;
            let mut rng = ChaCha8Rng::seed_from_u64(class_seed(seed, class.window));
            Ok((translate(&clusters, params.delta, &mut rng), trash))
        })
        .collect::<Result<_, _>>()?;

    let mut clusters = Vec::new();
    let mut trash: Vec<Rfid> = removed;
    for (translated, class_trash) in per_class {
        clusters.extend(translated);
        trash.extend(class_trash);
    }
    trash.sort();

    let total = d.len();
    if total > 0 && trash.len() as f64 > params.trash_max * total as f64 {
        return Err(AnonError::TrashBound {
            removed: trash.len(),
            total,
            max: params.trash_max,
        });
    }

    let removed_points = trash
        .iter()
        .map(|&id| d.get(id).map_or(0, |t| t.points().len()))
        .sum();
    let stats = AnonStats {
        trajectories_in: total,
        points_in: d.point_count(),
        diameter: d.diameter(),
        removed_trajectories: trash.len(),
        removed_points,
        class_count: classes.len(),
        cluster_count: clusters.len(),
    };
    Ok(AnonymizedDataset {
        clusters,
        trash,
        stats,
    })
}

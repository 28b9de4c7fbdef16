//! Independent checker for the anonymization guarantees. It inspects an
//! output against the original dataset and parameters and reports every
//! violated invariant, so tests and operators never have to trust the
//! pipeline's own bookkeeping.

use std::collections::BTreeSet;

use crate::anonymizer::{AnonParams, AnonymizedDataset};
use crate::model::Dataset;

const SLACK: f64 = 1e-9;

/// Returns a description of every violated invariant; empty means the
/// output upholds all published guarantees.
pub fn check(input: &Dataset, output: &AnonymizedDataset, params: &AnonParams) -> Vec<String> {
    let mut violations = Vec::new();
    let mut push = |msg: String| violations.push(msg);

    // every input id must land in exactly one cluster or in the trash
    let mut seen = BTreeSet::new();
    for id in output
        .clusters
        .iter()
        .flat_map(|c| c.members.iter().map(|m| m.id()))
        .chain(output.trash.iter().copied())
    {
        if !seen.insert(id) {
            push(format!("id {id} published or trashed more than once"));
        }
        if input.get(id).is_none() {
            push(format!("id {id} does not exist in the input"));
        }
    }
    for t in input.trajectories() {
        if !seen.contains(&t.id()) {
            push(format!("input id {} unaccounted for", t.id()));
        }
    }

    if input.len() > 0 && output.trash.len() as f64 > params.trash_max * input.len() as f64 + SLACK
    {
        push(format!(
            "{} of {} trajectories discarded, above trash_max {}",
            output.trash.len(),
            input.len(),
            params.trash_max
        ));
    }

    for (ci, cluster) in output.clusters.iter().enumerate() {
        let (t0, t1) = cluster.window;
        if t0 % params.pi != 0 || t1 % params.pi != 0 || t0 >= t1 {
            push(format!("cluster {ci}: window [{t0}, {t1}] not aligned to pi={}", params.pi));
        }
        if cluster.members.len() != params.k {
            push(format!(
                "cluster {ci}: {} members, expected exactly k={}",
                cluster.members.len(),
                params.k
            ));
        }
        if cluster.radius > params.delta_max + SLACK {
            push(format!(
                "cluster {ci}: radius {} exceeds the cap {}",
                cluster.radius, params.delta_max
            ));
        }
        let Some(pivot_in) = input.get(cluster.pivot_id) else {
            push(format!("cluster {ci}: pivot {} missing from input", cluster.pivot_id));
            continue;
        };
        for member in &cluster.members {
            if member.start() != t0 || member.end() != t1 {
                push(format!(
                    "cluster {ci}: member {} does not span the window",
                    member.id()
                ));
                continue;
            }
            if member.points().len() != (t1 - t0 + 1) as usize {
                push(format!(
                    "cluster {ci}: member {} missing per-tick points",
                    member.id()
                ));
            }
            let member_in = match input.get(member.id()) {
                Some(t) => t,
                None => continue,
            };
            for p in member.points() {
                // published points huddle around the pivot's true path...
                let (px, py) = match pivot_in.position_at(p.t) {
                    Ok(pos) => pos,
                    Err(_) => {
                        push(format!(
                            "cluster {ci}: pivot does not cover tick {}",
                            p.t
                        ));
                        break;
                    }
                };
                let d_pivot = ((p.x - px).powi(2) + (p.y - py).powi(2)).sqrt();
                if d_pivot > params.delta / 2.0 + SLACK {
                    push(format!(
                        "cluster {ci}: member {} at t={} sits {} from the pivot, over delta/2 = {}",
                        member.id(),
                        p.t,
                        d_pivot,
                        params.delta / 2.0
                    ));
                }
                // ...and never stray far from the member's own true path
                if let Ok((mx, my)) = member_in.position_at(p.t) {
                    let d_self = ((p.x - mx).powi(2) + (p.y - my).powi(2)).sqrt();
                    let bound = cluster.radius + params.delta / 2.0;
                    if d_self > bound + SLACK {
                        push(format!(
                            "cluster {ci}: member {} at t={} displaced {} from itself, over {}",
                            member.id(),
                            p.t,
                            d_self,
                            bound
                        ));
                    }
                }
            }
        }
    }
    violations
}

//! Pairwise conflict detection over joint plans.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{first_collision_time, segment_of, Action, ActionKind, MotionSegment, TimedAction};
use crate::map_graph::{Agent, Graph};
use crate::sipp::Plan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cardinality {
    Cardinal,
    SemiCardinal,
    NonCardinal,
    Unknown,
}

/// Agent `i` executing `a_i` and agent `j` executing `a_j` collide.
///
/// A wait taking part in a conflict is trimmed to start at the moment of
/// first contact, so `a_i.t_start` is the conflict time `t_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub i: usize,
    pub a_i: TimedAction,
    pub j: usize,
    pub a_j: TimedAction,
    /// Earliest instant at which the two disks overlap.
    pub time: f64,
    pub cardinality: Cardinality,
}

impl Conflict {
    pub fn t_i(&self) -> f64 {
        self.a_i.t_start
    }

    pub fn t_j(&self) -> f64 {
        self.a_j.t_start
    }
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<agent {} {} ({},{}) at {:.4}, agent {} {} ({},{}) at {:.4}>",
            self.i,
            self.a_i.kind(),
            self.a_i.from(),
            self.a_i.to(),
            self.a_i.t_start,
            self.j,
            self.a_j.kind(),
            self.a_j.from(),
            self.a_j.to(),
            self.a_j.t_start
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectionMode {
    /// Stop at the first agent pair (in the given order) that has a conflict
    /// and report that pair's earliest conflict.
    FirstOnly,
    /// Report every conflicting action pair.
    All,
}

#[derive(Clone, Debug, Default)]
pub struct Detection {
    pub conflicts: Vec<Conflict>,
    /// Number of closed-form collision tests that survived the prefilters.
    pub geometry_calls: usize,
}

struct Swept {
    action: TimedAction,
    segment: MotionSegment,
    lo: (f64, f64),
    hi: (f64, f64),
}

fn sweep(plan: &Plan, graph: &Graph, radius: f64) -> Vec<Swept> {
    plan.actions_with_terminal()
        .map(|action| {
            let segment = segment_of(&action.action, action.t_start, graph)
                .expect("plans only reference graph vertices");
            let (lo, hi) = segment.bounds();
            Swept {
                action,
                segment,
                lo: (lo.x - radius, lo.y - radius),
                hi: (hi.x + radius, hi.y + radius),
            }
        })
        .collect()
}

fn boxes_overlap(a: &Swept, b: &Swept) -> bool {
    a.lo.0 < b.hi.0 && b.lo.0 < a.hi.0 && a.lo.1 < b.hi.1 && b.lo.1 < a.hi.1
}

fn trim(action: TimedAction, at: f64) -> TimedAction {
    if action.kind() != ActionKind::Wait || at <= action.t_start {
        return action;
    }
    Action::wait(action.from(), action.t_end() - at).at(at)
}

/// Conflicts between agents `i` and `j`, in order of collision time.
fn pair_conflicts(
    i: usize,
    a: &[Swept],
    j: usize,
    b: &[Swept],
    radius_sum: f64,
    first_only: bool,
    calls: &mut usize,
) -> Vec<Conflict> {
    let mut found = Vec::new();
    let mut earliest = f64::INFINITY;
    let (mut p, mut q) = (0, 0);
    while p < a.len() && q < b.len() {
        let (sa, sb) = (&a[p], &b[q]);
        let overlap_start = sa.segment.t_start.max(sb.segment.t_start);
        if first_only && overlap_start >= earliest {
            break;
        }
        if overlap_start < sa.segment.t_end.min(sb.segment.t_end) && boxes_overlap(sa, sb) {
            *calls += 1;
            if let Some(t) = first_collision_time(&sa.segment, &sb.segment, radius_sum) {
                earliest = earliest.min(t);
                found.push(Conflict {
                    i,
                    a_i: trim(sa.action, t),
                    j,
                    a_j: trim(sb.action, t),
                    time: t,
                    cardinality: Cardinality::Unknown,
                });
            }
        }
        if sa.segment.t_end <= sb.segment.t_end {
            p += 1;
        } else {
            q += 1;
        }
    }
    found.sort_by(|x, y| x.time.total_cmp(&y.time));
    if first_only {
        found.truncate(1);
    }
    found
}

/// Finds conflicts among `plans`, checking agent pairs in `pair_order`.
///
/// Only action pairs that overlap in time and whose radius-inflated bounding
/// boxes intersect reach the closed-form test.
pub fn detect_conflicts(
    graph: &Graph,
    agents: &[Agent],
    plans: &[Arc<Plan>],
    mode: DetectionMode,
    pair_order: &[(usize, usize)],
) -> Detection {
    let swept: Vec<Vec<Swept>> = plans
        .iter()
        .zip(agents)
        .map(|(plan, agent)| sweep(plan, graph, agent.radius))
        .collect();
    let mut detection = Detection::default();
    for &(i, j) in pair_order {
        let radius_sum = agents[i].radius + agents[j].radius;
        let first_only = mode == DetectionMode::FirstOnly;
        let found = pair_conflicts(
            i,
            &swept[i],
            j,
            &swept[j],
            radius_sum,
            first_only,
            &mut detection.geometry_calls,
        );
        if first_only && !found.is_empty() {
            detection.conflicts = found;
            return detection;
        }
        detection.conflicts.extend(found);
    }
    detection
}

/// All agent pairs `(i, j)` with `i < j` in lexicographic order.
pub fn default_pair_order(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

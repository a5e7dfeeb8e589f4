//! Single-agent safe-interval planner that honors move and wait constraints.
//!
//! The search runs A* over `(vertex, safe interval)` states, keeping only the
//! earliest arrival per state. Wait constraints remove time from a vertex's
//! safe intervals; move constraints forbid starting a particular edge
//! traversal inside a half-open window, so the planner instead waits until
//! the window closes.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::geometry::{Action, ActionKind, Interval, TimedAction, VertexId, EPSILON};
use crate::map_graph::{Agent, Graph};

/// Forbids `agent` from starting the given action inside `interval`.
///
/// For waits the meaning is occupancy: the agent may not be at `from`
/// anywhere strictly inside the interval, though it may still be there at
/// `interval.lo` and leave.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub agent: usize,
    pub kind: ActionKind,
    pub from: VertexId,
    pub to: VertexId,
    pub interval: Interval,
}

impl Constraint {
    pub fn on_move(agent: usize, from: VertexId, to: VertexId, interval: Interval) -> Self {
        Self {
            agent,
            kind: ActionKind::Move,
            from,
            to,
            interval,
        }
    }

    pub fn on_wait(agent: usize, at: VertexId, interval: Interval) -> Self {
        Self {
            agent,
            kind: ActionKind::Wait,
            from: at,
            to: at,
            interval,
        }
    }

    /// The constraint forbidding `action` in `interval`.
    pub fn for_action(agent: usize, action: &Action, interval: Interval) -> Self {
        Self {
            agent,
            kind: action.kind,
            from: action.from,
            to: action.to,
            interval,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{}, {} ({},{}), {}>",
            self.agent, self.kind, self.from, self.to, self.interval
        )
    }
}

/// A closed interval `[start, end]` during which a vertex may be occupied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafeInterval {
    pub start: f64,
    pub end: f64,
}

impl SafeInterval {
    pub const UNBOUNDED: SafeInterval = SafeInterval {
        start: 0.0,
        end: f64::INFINITY,
    };

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

static UNBOUNDED: [SafeInterval; 1] = [SafeInterval::UNBOUNDED];

/// Per-vertex sorted, disjoint safe intervals. Vertices never split keep `[0, inf)`.
#[derive(Clone, Debug, Default)]
pub struct SafeIntervalTable {
    split: HashMap<VertexId, Vec<SafeInterval>>,
}

impl SafeIntervalTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intervals(&self, v: VertexId) -> &[SafeInterval] {
        self.split.get(&v).map(Vec::as_slice).unwrap_or(&UNBOUNDED)
    }

    /// Removes the open window `(lo, hi)` from `v`'s safe intervals.
    ///
    /// The left piece stays closed at `lo`: an agent may still arrive at or
    /// leave `v` exactly then.
    pub fn split(&mut self, v: VertexId, window: Interval) {
        if window.is_empty() {
            return;
        }
        let current = self.intervals(v).to_vec();
        let mut next = Vec::with_capacity(current.len() + 1);
        for s in current {
            if s.start >= window.hi || s.end <= window.lo {
                next.push(s);
                continue;
            }
            if s.start <= window.lo {
                next.push(SafeInterval {
                    start: s.start,
                    end: window.lo,
                });
            }
            if window.hi <= s.end {
                next.push(SafeInterval {
                    start: window.hi,
                    end: s.end,
                });
            }
        }
        self.split.insert(v, next);
    }

    /// Applies a wait constraint; move constraints are ignored.
    pub fn apply(&mut self, constraint: &Constraint) {
        if constraint.kind == ActionKind::Wait {
            self.split(constraint.from, constraint.interval);
        }
    }
}

/// Forbidden departure windows per directed edge, sorted and merged.
#[derive(Clone, Debug, Default)]
pub struct MoveWindows {
    windows: HashMap<(VertexId, VertexId), Vec<Interval>>,
}

impl MoveWindows {
    pub fn from_constraints<'a>(constraints: impl IntoIterator<Item = &'a Constraint>) -> Self {
        let mut windows: HashMap<(VertexId, VertexId), Vec<Interval>> = HashMap::new();
        for c in constraints {
            if c.kind == ActionKind::Move && !c.interval.is_empty() {
                windows.entry((c.from, c.to)).or_default().push(c.interval);
            }
        }
        for list in windows.values_mut() {
            list.sort_by(|a, b| a.lo.total_cmp(&b.lo));
            let mut merged: Vec<Interval> = Vec::with_capacity(list.len());
            for iv in list.drain(..) {
                match merged.last_mut() {
                    Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                    _ => merged.push(iv),
                }
            }
            *list = merged;
        }
        Self { windows }
    }

    pub fn get(&self, from: VertexId, to: VertexId) -> &[Interval] {
        self.windows.get(&(from, to)).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Whether a departure at `t` falls inside a forbidden window. The lower end
/// is widened by [`EPSILON`] so a recomputed departure a rounding error before
/// `lo` still counts.
fn forbidden(window: &Interval, t: f64) -> bool {
    t >= window.lo - EPSILON && t < window.hi
}

/// Earliest departure along an edge of traversal time `duration`.
///
/// The agent is ready at `ready` and may wait at its vertex until
/// `latest_departure` (the end of its current safe interval). Departure must
/// avoid every window in `windows` (sorted, disjoint) and the arrival must
/// land inside `arrival`.
pub fn earliest_departure(
    windows: &[Interval],
    ready: f64,
    latest_departure: f64,
    duration: f64,
    arrival: SafeInterval,
) -> Option<f64> {
    let mut t = ready.max(arrival.start - duration);
    for w in windows {
        if forbidden(w, t) {
            t = w.hi;
        } else if w.lo - EPSILON > t {
            break;
        }
    }
    if t > latest_departure || t + duration > arrival.end || !t.is_finite() {
        return None;
    }
    Some(t)
}

/// A timed action sequence taking an agent from its start to its goal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub agent: usize,
    pub start: VertexId,
    pub actions: Vec<TimedAction>,
    /// Arrival time at the goal, i.e. the sum of action durations.
    pub cost: f64,
}

impl Plan {
    pub fn final_vertex(&self) -> VertexId {
        self.actions.last().map(|a| a.to()).unwrap_or(self.start)
    }

    /// The implicit stay at the goal from arrival onward.
    pub fn terminal_wait(&self) -> TimedAction {
        Action::wait(self.final_vertex(), f64::INFINITY).at(self.cost)
    }

    /// Every action including the terminal wait.
    pub fn actions_with_terminal(&self) -> impl Iterator<Item = TimedAction> + '_ {
        self.actions.iter().copied().chain(std::iter::once(self.terminal_wait()))
    }

    /// Whether this plan breaks `constraint`.
    pub fn violates(&self, constraint: &Constraint) -> bool {
        if constraint.agent != self.agent {
            return false;
        }
        let iv = constraint.interval;
        match constraint.kind {
            ActionKind::Move => self.actions.iter().any(|a| {
                a.kind() == ActionKind::Move
                    && a.from() == constraint.from
                    && a.to() == constraint.to
                    && a.t_start >= iv.lo - EPSILON
                    && a.t_start < iv.hi - EPSILON
            }),
            ActionKind::Wait => {
                let v = constraint.from;
                let inside = |t0: f64, t1: f64| t0 < iv.hi - EPSILON && t1 > iv.lo + EPSILON;
                let mut presence = Vec::new();
                if self.start == v {
                    presence.push((0.0, 0.0));
                }
                for a in self.actions_with_terminal() {
                    match a.kind() {
                        ActionKind::Wait if a.from() == v => presence.push((a.t_start, a.t_end())),
                        ActionKind::Move if a.from() == v => presence.push((a.t_start, a.t_start)),
                        ActionKind::Move if a.to() == v => presence.push((a.t_end(), a.t_end())),
                        _ => {}
                    }
                }
                presence.into_iter().any(|(t0, t1)| inside(t0, t1))
            }
        }
    }
}

/// Exact shortest travel time from every vertex to a goal.
#[derive(Clone, Debug)]
pub struct Heuristic {
    to_goal: Vec<f64>,
}

impl Heuristic {
    pub fn get(&self, v: VertexId) -> f64 {
        self.to_goal.get(v.0).copied().unwrap_or(f64::INFINITY)
    }
}

/// Reverse uniform-cost sweep from `goal`; unreachable vertices get `+inf`.
pub fn precompute_heuristic(graph: &Graph, goal: VertexId, speed: f64) -> Heuristic {
    let mut dist = vec![f64::INFINITY; graph.vertex_count()];
    let mut heap = BinaryHeap::new();
    if graph.contains(goal) {
        dist[goal.0] = 0.0;
        heap.push((std::cmp::Reverse(OrderedFloat(0.0)), goal));
    }
    while let Some((std::cmp::Reverse(OrderedFloat(d)), v)) = heap.pop() {
        if d > dist[v.0] {
            continue;
        }
        for e in graph.neighbors(v) {
            let nd = d + e.length / speed;
            if nd < dist[e.to.0] {
                dist[e.to.0] = nd;
                heap.push((std::cmp::Reverse(OrderedFloat(nd)), e.to));
            }
        }
    }
    Heuristic { to_goal: dist }
}

struct SearchNode {
    vertex: VertexId,
    interval: usize,
    arrival: f64,
    departure: f64,
    parent: Option<usize>,
}

#[derive(PartialEq, Eq)]
struct OpenEntry {
    f: OrderedFloat<f64>,
    g: OrderedFloat<f64>,
    node: usize,
}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: smaller f first, then larger g, then older node.
        other
            .f
            .cmp(&self.f)
            .then(self.g.cmp(&other.g))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lowest-cost plan for `agent` satisfying every constraint addressed to it,
/// or `None` if the goal cannot be reached and held forever.
pub fn plan(graph: &Graph, agent: &Agent, constraints: &[Constraint], heuristic: &Heuristic) -> Option<Plan> {
    let own = constraints.iter().filter(|c| c.agent == agent.id);
    let mut table = SafeIntervalTable::new();
    for c in own.clone() {
        table.apply(c);
    }
    let moves = MoveWindows::from_constraints(own);

    let start_interval = table.intervals(agent.start).iter().position(|s| s.contains(0.0))?;
    if heuristic.get(agent.start).is_infinite() {
        return None;
    }

    let mut nodes = vec![SearchNode {
        vertex: agent.start,
        interval: start_interval,
        arrival: 0.0,
        departure: 0.0,
        parent: None,
    }];
    let mut best: HashMap<(VertexId, usize), f64> = HashMap::new();
    best.insert((agent.start, start_interval), 0.0);
    let mut open = BinaryHeap::new();
    open.push(OpenEntry {
        f: OrderedFloat(heuristic.get(agent.start)),
        g: OrderedFloat(0.0),
        node: 0,
    });

    while let Some(OpenEntry { node, .. }) = open.pop() {
        let (vertex, interval_idx, arrival) = {
            let n = &nodes[node];
            (n.vertex, n.interval, n.arrival)
        };
        if best.get(&(vertex, interval_idx)).is_some_and(|b| arrival > *b) {
            continue;
        }
        let here = table.intervals(vertex)[interval_idx];
        if vertex == agent.goal && here.end.is_infinite() {
            return Some(reconstruct(&nodes, node, agent));
        }

        for edge in graph.neighbors(vertex) {
            let duration = edge.length / agent.speed;
            let h = heuristic.get(edge.to);
            if h.is_infinite() {
                continue;
            }
            let windows = moves.get(vertex, edge.to);
            for (idx, target) in table.intervals(edge.to).iter().enumerate() {
                if target.start > here.end + duration {
                    break;
                }
                if target.end < arrival + duration {
                    continue;
                }
                let Some(departure) = earliest_departure(windows, arrival, here.end, duration, *target) else {
                    continue;
                };
                let reached = departure + duration;
                let key = (edge.to, idx);
                if best.get(&key).is_some_and(|b| reached >= *b - 1e-12) {
                    continue;
                }
                best.insert(key, reached);
                nodes.push(SearchNode {
                    vertex: edge.to,
                    interval: idx,
                    arrival: reached,
                    departure,
                    parent: Some(node),
                });
                open.push(OpenEntry {
                    f: OrderedFloat(reached + h),
                    g: OrderedFloat(reached),
                    node: nodes.len() - 1,
                });
            }
        }
    }
    None
}

fn reconstruct(nodes: &[SearchNode], goal_node: usize, agent: &Agent) -> Plan {
    let mut chain = Vec::new();
    let mut cursor = Some(goal_node);
    while let Some(i) = cursor {
        chain.push(i);
        cursor = nodes[i].parent;
    }
    chain.reverse();

    let mut actions = Vec::new();
    for pair in chain.windows(2) {
        let (prev, next) = (&nodes[pair[0]], &nodes[pair[1]]);
        let wait = next.departure - prev.arrival;
        if wait > 0.0 {
            actions.push(Action::wait(prev.vertex, wait).at(prev.arrival));
        }
        let duration = next.arrival - next.departure;
        actions.push(Action::movement(prev.vertex, next.vertex, duration).at(next.departure));
    }
    Plan {
        agent: agent.id,
        start: agent.start,
        actions,
        cost: nodes[goal_node].arrival,
    }
}

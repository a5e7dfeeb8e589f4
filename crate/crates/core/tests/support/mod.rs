//! Reference searches used as oracles. They share no code with the solver
//! beyond the graph and instance types.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use ccbs_core::map_graph::{build_graph, Agent, GridMap, Instance};
use ccbs_core::{ActionKind, Constraint, Graph, Point2, VertexId};

/// Constraint-respecting single-agent search over a time lattice.
///
/// Departures happen on arrival, at multiples of `dt`, when a move window
/// closes, or just in time to reach a vertex as one of its wait constraints
/// ends. Constraint bounds are
/// expected to lie on the `dt` lattice, which makes the search exact.
pub fn lattice_single_agent(graph: &Graph, agent: &Agent, constraints: &[Constraint], dt: f64) -> Option<f64> {
    let waits: Vec<&Constraint> = constraints.iter().filter(|c| c.kind == ActionKind::Wait).collect();
    let moves: Vec<&Constraint> = constraints.iter().filter(|c| c.kind == ActionKind::Move).collect();
    let occupied_ok = |v: VertexId, t0: f64, t1: f64| {
        waits
            .iter()
            .filter(|c| c.from == v)
            // 1e-9 absorbs rounding in `hi - d + d`.
            .all(|c| !(t0 < c.interval.hi - 1e-9 && t1 > c.interval.lo + 1e-9))
    };
    let departure_ok = |u: VertexId, v: VertexId, t: f64| {
        moves
            .iter()
            .filter(|c| c.from == u && c.to == v)
            .all(|c| !(t >= c.interval.lo - 1e-9 && t < c.interval.hi))
    };
    let goal_free_after = waits
        .iter()
        .filter(|c| c.from == agent.goal)
        .map(|c| c.interval.hi)
        .fold(0.0, f64::max);
    let span: f64 = graph
        .vertices()
        .flat_map(|v| graph.neighbors(v).iter().map(|e| e.length))
        .sum::<f64>()
        / agent.speed;
    let horizon = constraints.iter().map(|c| c.interval.hi).filter(|h| h.is_finite()).fold(0.0, f64::max) + span + 1.0;

    let key = |v: VertexId, t: f64| (v, (t * 1e6).round() as i64);
    let mut seen = HashSet::new();
    let mut heap = BinaryHeap::new();
    if !occupied_ok(agent.start, 0.0, 0.0) {
        return None;
    }
    heap.push(Reverse((ordered(0.0), agent.start)));
    while let Some(Reverse((t, v))) = heap.pop() {
        let t = t.0;
        if !seen.insert(key(v, t)) {
            continue;
        }
        if v == agent.goal && t >= goal_free_after - 1e-9 && occupied_ok(v, t, f64::INFINITY) {
            return Some(t);
        }
        if t > horizon {
            continue;
        }
        // Nudge before flooring: 0.29 / 0.01 is 28.999...
        let next_tick = ((t / dt + 1e-7).floor() + 1.0) * dt;
        if occupied_ok(v, t, next_tick) {
            heap.push(Reverse((ordered(next_tick), v)));
        }
        for e in graph.neighbors(v) {
            let duration = e.length / agent.speed;
            // Leave now, as a move window on this edge closes, or late enough
            // to arrive just as a blocked target frees up.
            let late = waits
                .iter()
                .filter(|c| c.from == e.to)
                .map(|c| c.interval.hi - duration)
                .chain(moves.iter().filter(|c| c.from == v && c.to == e.to).map(|c| c.interval.hi));
            for depart in std::iter::once(t).chain(late.filter(|&d| d > t)) {
                let arrive = depart + duration;
                if departure_ok(v, e.to, depart) && occupied_ok(e.to, arrive, arrive) && occupied_ok(v, t, depart) {
                    heap.push(Reverse((ordered(arrive), e.to)));
                }
            }
        }
    }
    None
}

fn ordered(x: f64) -> Ord64 {
    Ord64(x)
}

#[derive(Clone, Copy, PartialEq)]
pub struct Ord64(pub f64);
impl Eq for Ord64 {}
impl PartialOrd for Ord64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ord64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Ticks of the joint oracle's time lattice (0.01 time units).
const TICK: f64 = 0.01;
const UNIT: i64 = 100;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
struct Track {
    at: usize,
    /// Time (ticks) from which the agent is free at `at`.
    free: i64,
    /// Last move as (from, start tick), if still relevant.
    moved: Option<(usize, i64)>,
    /// Start of the wait at `at` that ends at `free`.
    wait_from: i64,
    done: bool,
}

#[derive(Clone, Copy)]
struct Seg {
    from: Point2,
    to: Point2,
    t0: f64,
    t1: f64,
}

impl Seg {
    fn pos(&self, t: f64) -> Point2 {
        if self.t1 <= self.t0 || !self.t1.is_finite() || self.from == self.to {
            return self.from;
        }
        let s = (t - self.t0) / (self.t1 - self.t0);
        Point2::new(self.from.x + (self.to.x - self.from.x) * s, self.from.y + (self.to.y - self.from.y) * s)
    }
}

/// Exact overlap test for two linear segments: minimum center distance over
/// their common open time span, compared against `limit`.
fn segs_collide(a: &Seg, b: &Seg, limit: f64) -> bool {
    let lo = a.t0.max(b.t0);
    let hi = a.t1.min(b.t1);
    if lo >= hi || lo.is_nan() || hi.is_nan() {
        return false;
    }
    // A finite window suffices: both segments are stationary past any finite end.
    let hi_eff = if hi.is_finite() { hi } else { lo + 1.0 };
    let p0 = a.pos(lo) - b.pos(lo);
    let p1 = a.pos(hi_eff) - b.pos(hi_eff);
    let d = p1 - p0;
    let dd = d.x * d.x + d.y * d.y;
    let s = if dd > 0.0 { (-(p0.x * d.x + p0.y * d.y) / dd).clamp(0.0, 1.0) } else { 0.0 };
    let m = p0 + d * s;
    m.x * m.x + m.y * m.y < limit * limit - 1e-9
}

struct Joint<'a> {
    graph: &'a Graph,
    agents: &'a [Agent],
    dist: Vec<Vec<i64>>,
}

impl Joint<'_> {
    fn p(&self, v: usize) -> Point2 {
        self.graph.position(VertexId(v)).unwrap()
    }

    fn segments(&self, tr: &Track) -> Vec<Seg> {
        let mut out = Vec::new();
        let at = self.p(tr.at);
        if let Some((from, start)) = tr.moved {
            out.push(Seg { from: self.p(from), to: at, t0: start as f64 * TICK, t1: tr.wait_from as f64 * TICK });
        }
        let end = if tr.done { f64::INFINITY } else { tr.free as f64 * TICK };
        out.push(Seg { from: at, to: at, t0: tr.wait_from as f64 * TICK, t1: end });
        out
    }

    fn clear(&self, new: &[Seg], other: &Track) -> bool {
        let limit = self.agents[0].radius + self.agents[1].radius;
        let theirs = self.segments(other);
        new.iter().all(|a| theirs.iter().all(|b| !segs_collide(a, b, limit)))
    }

    fn h(&self, k: usize, tr: &Track) -> i64 {
        if tr.done { 0 } else { self.dist[k][tr.at] }
    }
}

/// Trim history the other agent can no longer overlap with.
fn normalize(mut tr: Track, other_free: i64) -> Track {
    if let Some((_, _)) = tr.moved {
        if tr.wait_from <= other_free {
            tr.moved = None;
        }
    }
    if tr.moved.is_none() {
        tr.wait_from = tr.wait_from.max(other_free.min(tr.free));
    }
    tr
}

/// Minimum sum of costs for a two-agent instance on a graph with unit-length
/// edges, with departures restricted to a 0.01 lattice. Returns `None` if no
/// joint plan exists within `max_ticks`.
pub fn joint_two_agent(instance: &Instance, max_ticks: i64) -> Option<f64> {
    let graph = instance.graph.as_ref();
    let agents = &instance.agents;
    assert_eq!(agents.len(), 2);
    for v in graph.vertices() {
        for e in graph.neighbors(v) {
            assert!((e.length - 1.0).abs() < 1e-12, "joint oracle needs unit edges");
        }
    }
    let dist: Vec<Vec<i64>> = agents
        .iter()
        .map(|a| {
            let mut d = vec![i64::MAX / 4; graph.vertex_count()];
            d[a.goal.0] = 0;
            let mut q = VecDeque::from([a.goal]);
            while let Some(v) = q.pop_front() {
                for e in graph.neighbors(v) {
                    if d[e.to.0] > d[v.0] + UNIT {
                        d[e.to.0] = d[v.0] + UNIT;
                        q.push_back(e.to);
                    }
                }
            }
            d
        })
        .collect();
    let joint = Joint { graph, agents, dist };

    let start = [0, 1].map(|k| Track { at: agents[k].start.0, free: 0, moved: None, wait_from: 0, done: false });
    let mut best: HashMap<[Track; 2], i64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let f0 = joint.h(0, &start[0]) + joint.h(1, &start[1]);
    best.insert(start, 0);
    heap.push(Reverse((f0, 0i64, start)));

    while let Some(Reverse((_, g, state))) = heap.pop() {
        if best.get(&state).is_some_and(|b| *b < g) {
            continue;
        }
        if state[0].done && state[1].done {
            return Some(g as f64 * TICK);
        }
        // Expand the agent that is free earliest and not yet parked.
        let k = match (state[0].done, state[1].done) {
            (true, _) => 1,
            (_, true) => 0,
            _ => usize::from(state[1].free < state[0].free),
        };
        let me = state[k];
        let other = state[1 - k];
        if me.free > max_ticks {
            continue;
        }
        let here = joint.p(me.at);
        let t = me.free as f64 * TICK;
        let mut succ: Vec<Track> = Vec::new();

        // Park for good.
        if me.at == agents[k].goal.0 {
            let park = Seg { from: here, to: here, t0: t, t1: f64::INFINITY };
            if joint.clear(&[park], &other) {
                succ.push(Track { done: true, ..me });
            }
        }
        // Wait one tick.
        let tick = Seg { from: here, to: here, t0: t, t1: t + TICK };
        if joint.clear(&[tick], &other) {
            succ.push(Track { free: me.free + 1, ..me });
        }
        // Move along an edge.
        for e in graph.neighbors(VertexId(me.at)) {
            let there = joint.p(e.to.0);
            let mv = Seg { from: here, to: there, t0: t, t1: t + 1.0 };
            if joint.clear(&[mv], &other) {
                succ.push(Track {
                    at: e.to.0,
                    free: me.free + UNIT,
                    moved: Some((me.at, me.free)),
                    wait_from: me.free + UNIT,
                    done: false,
                });
            }
        }

        for next in succ {
            let mut s = state;
            s[k] = next;
            let other_free = |x: &Track| if x.done { i64::MAX / 4 } else { x.free };
            let (f0, f1) = (other_free(&s[0]), other_free(&s[1]));
            s[0] = normalize(s[0], f1);
            s[1] = normalize(s[1], f0);
            let ng = s[0].free + s[1].free;
            if best.get(&s).is_some_and(|b| *b <= ng) {
                continue;
            }
            best.insert(s, ng);
            let f = ng + joint.h(0, &s[0]) + joint.h(1, &s[1]);
            heap.push(Reverse((f, ng, s)));
        }
    }
    None
}

/// `n`×`n` open grid graph with the given neighborhood level.
pub fn open_grid(n: usize, k: u32, radius: f64) -> Arc<Graph> {
    Arc::new(build_graph(&GridMap::open(n, n), k, radius).unwrap())
}

/// Three agents on the small roadmap in `fixtures/crossing.roadmap`, radius 0.5.
pub fn crossing() -> Instance {
    let doc = ccbs_core::map_graph::parse_roadmap(include_str!("../fixtures/crossing.roadmap")).unwrap();
    let graph = Arc::new(doc.graph);
    let agents = doc
        .tasks
        .iter()
        .enumerate()
        .map(|(id, &(s, g))| Agent::new(id, s, g).with_radius(0.5))
        .collect();
    Instance::new(graph, agents).unwrap()
}

pub fn vertex(instance: &Instance, label: &str) -> VertexId {
    instance.graph.find_label(label).unwrap()
}

/// A corridor crossed by a one-cell passage. Two agents queue in the
/// corridor while a third passes through the crossing; the one at the back
/// can start moving before the one in front does.
pub const QUEUE_MAP: &str = "type octile\nheight 3\nwidth 5\nmap\n@@.@@\n.....\n@@.@@\n";

pub fn queue_tasks() -> Vec<(ccbs_core::map_graph::Cell, ccbs_core::map_graph::Cell)> {
    use ccbs_core::map_graph::Cell;
    vec![
        (Cell::new(1, 1), Cell::new(4, 1)),
        (Cell::new(0, 1), Cell::new(3, 1)),
        (Cell::new(2, 0), Cell::new(2, 2)),
    ]
}

/// Instance on `graph` (built from a grid) for cell-based tasks.
pub fn grid_instance(
    graph: Arc<Graph>,
    tasks: &[(ccbs_core::map_graph::Cell, ccbs_core::map_graph::Cell)],
    radius: f64,
) -> Instance {
    let agents = tasks
        .iter()
        .enumerate()
        .map(|(id, &(s, g))| Agent::new(id, graph.vertex_at(s).unwrap(), graph.vertex_at(g).unwrap()).with_radius(radius))
        .collect();
    Instance::new(graph, agents).unwrap()
}

//! Best-first search over a constraint tree of joint plans.
//!
//! Each tree node holds one plan per agent. Expanding a node picks one
//! conflict and creates two children, each forbidding one of the two
//! conflicting actions for its unsafe interval and replanning that agent.

mod conflicts;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unsafe_interval, Interval, BISECTION_TOLERANCE, DEFAULT_SWEEP_RESOLUTION};
use crate::map_graph::Instance;
use crate::sipp::{self, Constraint, Heuristic, Plan};

pub use conflicts::{default_pair_order, detect_conflicts, Cardinality, Conflict, Detection, DetectionMode};

/// SOC differences below this are treated as ties.
pub const COST_EPSILON: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictHeuristic {
    Vanilla,
    PastConflicts,
    Cardinals,
    Hybrid,
}

impl ConflictHeuristic {
    pub const ALL: [ConflictHeuristic; 4] = [
        ConflictHeuristic::Vanilla,
        ConflictHeuristic::PastConflicts,
        ConflictHeuristic::Cardinals,
        ConflictHeuristic::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConflictHeuristic::Vanilla => "vanilla",
            ConflictHeuristic::PastConflicts => "past",
            ConflictHeuristic::Cardinals => "cardinals",
            ConflictHeuristic::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for ConflictHeuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConflictHeuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vanilla" => Ok(ConflictHeuristic::Vanilla),
            "past" | "past_conflicts" | "past-conflicts" => Ok(ConflictHeuristic::PastConflicts),
            "cardinals" | "cardinal" => Ok(ConflictHeuristic::Cardinals),
            "hybrid" => Ok(ConflictHeuristic::Hybrid),
            other => Err(Error::Config(format!("unknown conflict heuristic `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub heuristic: ConflictHeuristic,
    pub timeout: Duration,
    /// Delay step of the unsafe-interval sweep.
    pub sweep_resolution: f64,
    pub cost_epsilon: f64,
    /// Keep a per-node record of the search in [`SolveOutcome::trace`].
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            heuristic: ConflictHeuristic::Vanilla,
            timeout: Duration::from_secs(60),
            sweep_resolution: DEFAULT_SWEEP_RESOLUTION,
            cost_epsilon: COST_EPSILON,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn with_heuristic(mut self, heuristic: ConflictHeuristic) -> Self {
        self.heuristic = heuristic;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.timeout.is_zero() {
            return Err(Error::Config("timeout must be positive".into()));
        }
        if !(self.sweep_resolution > 0.0) {
            return Err(Error::Config(format!(
                "sweep resolution must be positive, got {}",
                self.sweep_resolution
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub success: bool,
    pub soc: f64,
    pub makespan: f64,
    pub hl_expanded: u64,
    pub ll_calls: u64,
    /// Wall-clock seconds.
    pub runtime: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    Timeout,
    /// Some agent cannot reach its goal, or the tree ran out of nodes.
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub plans: Vec<Plan>,
    pub soc: f64,
    pub makespan: f64,
}

impl Solution {
    pub fn from_plans(plans: Vec<Plan>) -> Self {
        let soc = plans.iter().map(|p| p.cost).sum();
        let makespan = plans.iter().map(|p| p.cost).fold(0.0, f64::max);
        Self { plans, soc, makespan }
    }
}

/// One expanded tree node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub node: usize,
    pub parent: Option<usize>,
    pub cost: f64,
    pub conflicts: usize,
    pub chosen: Option<Conflict>,
    pub children: Vec<(usize, Constraint, f64)>,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub solution: Option<Solution>,
    pub stats: Stats,
    pub trace: Vec<TraceEvent>,
}

struct ConstraintLink {
    constraint: Constraint,
    next: Option<Arc<ConstraintLink>>,
}

struct Node {
    parent: Option<usize>,
    constraints: Option<Arc<ConstraintLink>>,
    plans: Vec<Arc<Plan>>,
    cost: f64,
    conflicts: Vec<Conflict>,
    past_mode: bool,
}

impl Node {
    fn constraints_for(&self, agent: usize) -> Vec<Constraint> {
        let mut out = Vec::new();
        let mut link = self.constraints.as_deref();
        while let Some(l) = link {
            if l.constraint.agent == agent {
                out.push(l.constraint);
            }
            link = l.next.as_deref();
        }
        out
    }
}

#[derive(PartialEq, Eq)]
struct OpenEntry {
    cost: OrderedFloat<f64>,
    conflicts: usize,
    node: usize,
}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: lowest cost, then fewest conflicts, then newest node.
        other
            .cost
            .cmp(&self.cost)
            .then(other.conflicts.cmp(&self.conflicts))
            .then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

type ReplanCache = HashMap<usize, Option<Arc<Plan>>>;

struct Search<'a> {
    instance: &'a Instance,
    config: &'a SolverConfig,
    heuristics: Vec<Heuristic>,
    nodes: Vec<Node>,
    past_counts: Vec<Vec<u64>>,
    stats: Stats,
    deadline: Instant,
}

impl<'a> Search<'a> {
    fn replan(&mut self, agent: usize, constraints: &[Constraint]) -> Option<Arc<Plan>> {
        self.stats.ll_calls += 1;
        let a = &self.instance.agents[agent];
        sipp::plan(&self.instance.graph, a, constraints, &self.heuristics[agent]).map(Arc::new)
    }

    fn pair_order(&self, past_mode: bool) -> Vec<(usize, usize)> {
        let mut order = default_pair_order(self.instance.len());
        if past_mode {
            order.sort_by_key(|&(i, j)| std::cmp::Reverse(self.past_counts[i][j]));
        }
        order
    }

    fn uses_past_detection(&self, past_mode: bool) -> bool {
        match self.config.heuristic {
            ConflictHeuristic::PastConflicts => true,
            ConflictHeuristic::Hybrid => past_mode,
            _ => false,
        }
    }

    fn detect(&self, plans: &[Arc<Plan>], past_mode: bool) -> Vec<Conflict> {
        let (mode, order) = if self.uses_past_detection(past_mode) {
            (DetectionMode::FirstOnly, self.pair_order(true))
        } else {
            (DetectionMode::All, self.pair_order(false))
        };
        detect_conflicts(&self.instance.graph, &self.instance.agents, plans, mode, &order).conflicts
    }

    /// The constraint that forbids `agent`'s side of `conflict`.
    fn constraint_for(&self, conflict: &Conflict, agent: usize) -> Constraint {
        let (mine, other, other_agent) = if agent == conflict.i {
            (conflict.a_i, conflict.a_j, conflict.j)
        } else {
            (conflict.a_j, conflict.a_i, conflict.i)
        };
        let radius_sum = self.instance.agents[agent].radius + self.instance.agents[other_agent].radius;
        let interval = unsafe_interval(
            &mine.action,
            mine.t_start,
            &other.action,
            other.t_start,
            self.instance.graph.as_ref(),
            radius_sum,
            self.config.sweep_resolution,
        )
        .unwrap_or_else(|err| {
            // Only reachable through rounding at a grazing contact; a minimal
            // window still forbids the offending start time.
            tracing::warn!(%err, %conflict, "falling back to a minimal unsafe interval");
            Interval::new(mine.t_start, mine.t_start + BISECTION_TOLERANCE)
        });
        Constraint::for_action(agent, &mine.action, interval)
    }

    fn child_plan(
        &mut self,
        node: usize,
        constraint: &Constraint,
        cache: &mut ReplanCache,
        slot: usize,
    ) -> Option<Arc<Plan>> {
        if let Some(hit) = cache.get(&slot) {
            return hit.clone();
        }
        let mut constraints = self.nodes[node].constraints_for(constraint.agent);
        constraints.push(*constraint);
        let plan = self.replan(constraint.agent, &constraints);
        if let Some(p) = &plan {
            debug_assert!(
                constraints.iter().all(|c| !p.violates(c)),
                "replan for agent {} breaks its constraints",
                constraint.agent
            );
        }
        cache.insert(slot, plan.clone());
        plan
    }

    fn classify(&mut self, node: usize, index: usize, cache: &mut ReplanCache) -> Cardinality {
        let conflict = self.nodes[node].conflicts[index];
        let mut rises = 0;
        for (side, agent) in [(0, conflict.i), (1, conflict.j)] {
            let constraint = self.constraint_for(&conflict, agent);
            let before = self.nodes[node].plans[agent].cost;
            let after = self
                .child_plan(node, &constraint, cache, 2 * index + side)
                .map_or(f64::INFINITY, |p| p.cost);
            if after > before + self.config.cost_epsilon {
                rises += 1;
            }
        }
        let c = match rises {
            2 => Cardinality::Cardinal,
            1 => Cardinality::SemiCardinal,
            _ => Cardinality::NonCardinal,
        };
        self.nodes[node].conflicts[index].cardinality = c;
        c
    }

    /// Index of the conflict to split on, plus whether the node's subtree
    /// switches to past-conflict selection.
    fn select(&mut self, node: usize, cache: &mut ReplanCache) -> Option<(usize, bool)> {
        let past_mode = self.nodes[node].past_mode;
        let heuristic = self.config.heuristic;
        let by_order = |conflicts: &[Conflict]| -> usize {
            let mut best = 0;
            for (k, c) in conflicts.iter().enumerate() {
                let b = &conflicts[best];
                if (c.i, c.j, OrderedFloat(c.time)) < (b.i, b.j, OrderedFloat(b.time)) {
                    best = k;
                }
            }
            best
        };
        let chosen = match heuristic {
            ConflictHeuristic::Vanilla => (by_order(&self.nodes[node].conflicts), false),
            ConflictHeuristic::PastConflicts => (self.by_past_counts(node), false),
            ConflictHeuristic::Hybrid if past_mode => (self.by_past_counts(node), true),
            ConflictHeuristic::Cardinals | ConflictHeuristic::Hybrid => {
                let mut order: Vec<usize> = (0..self.nodes[node].conflicts.len()).collect();
                {
                    let cs = &self.nodes[node].conflicts;
                    order.sort_by(|&x, &y| {
                        let (a, b) = (&cs[x], &cs[y]);
                        (a.i, a.j, OrderedFloat(a.time)).cmp(&(b.i, b.j, OrderedFloat(b.time)))
                    });
                }
                let mut semi = None;
                let mut cardinal = None;
                for &k in &order {
                    if Instant::now() >= self.deadline {
                        return None;
                    }
                    match self.classify(node, k, cache) {
                        Cardinality::Cardinal => {
                            cardinal = Some(k);
                            break;
                        }
                        Cardinality::SemiCardinal if semi.is_none() => semi = Some(k),
                        _ => {}
                    }
                }
                match (cardinal.or(semi), heuristic) {
                    (Some(k), _) => (k, false),
                    (None, ConflictHeuristic::Hybrid) => (self.by_past_counts(node), true),
                    (None, _) => (order[0], false),
                }
            }
        };
        let c = self.nodes[node].conflicts[chosen.0];
        self.past_counts[c.i][c.j] += 1;
        Some(chosen)
    }

    fn by_past_counts(&self, node: usize) -> usize {
        let cs = &self.nodes[node].conflicts;
        let key = |c: &Conflict| {
            (
                std::cmp::Reverse(self.past_counts[c.i][c.j]),
                c.i,
                c.j,
                OrderedFloat(c.time),
            )
        };
        (0..cs.len()).min_by_key(|&k| key(&cs[k])).unwrap_or(0)
    }

    fn push_node(&mut self, node: Node, open: &mut BinaryHeap<OpenEntry>) -> usize {
        let id = self.nodes.len();
        open.push(OpenEntry {
            cost: OrderedFloat(node.cost),
            conflicts: node.conflicts.len(),
            node: id,
        });
        self.nodes.push(node);
        id
    }

    fn finish(mut self, status: SolveStatus, solution: Option<Solution>, started: Instant, trace: Vec<TraceEvent>) -> SolveOutcome {
        self.stats.success = status == SolveStatus::Solved;
        if let Some(s) = &solution {
            self.stats.soc = s.soc;
            self.stats.makespan = s.makespan;
        }
        self.stats.runtime = started.elapsed().as_secs_f64();
        SolveOutcome {
            status,
            solution,
            stats: self.stats,
            trace,
        }
    }
}

/// Finds a minimum sum-of-costs conflict-free joint plan, or reports why not.
pub fn solve(instance: &Instance, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    let started = Instant::now();
    let n = instance.len();
    let mut search = Search {
        instance,
        config,
        heuristics: instance
            .agents
            .iter()
            .map(|a| sipp::precompute_heuristic(&instance.graph, a.goal, a.speed))
            .collect(),
        nodes: Vec::new(),
        past_counts: vec![vec![0; n]; n],
        stats: Stats::default(),
        deadline: started + config.timeout,
    };
    let mut trace = Vec::new();

    let mut root_plans = Vec::with_capacity(n);
    for agent in 0..n {
        match search.replan(agent, &[]) {
            Some(p) => root_plans.push(p),
            None => return Ok(search.finish(SolveStatus::Infeasible, None, started, trace)),
        }
    }
    let root_conflicts = search.detect(&root_plans, false);
    let mut open = BinaryHeap::new();
    search.push_node(
        Node {
            parent: None,
            constraints: None,
            cost: root_plans.iter().map(|p| p.cost).sum(),
            plans: root_plans,
            conflicts: root_conflicts,
            past_mode: false,
        },
        &mut open,
    );

    while let Some(OpenEntry { node, .. }) = open.pop() {
        if Instant::now() >= search.deadline {
            return Ok(search.finish(SolveStatus::Timeout, None, started, trace));
        }
        if search.nodes[node].conflicts.is_empty() {
            let plans = search.nodes[node].plans.iter().map(|p| (**p).clone()).collect();
            let solution = Solution::from_plans(plans);
            return Ok(search.finish(SolveStatus::Solved, Some(solution), started, trace));
        }

        let mut cache = ReplanCache::new();
        let Some((index, past_mode)) = search.select(node, &mut cache) else {
            return Ok(search.finish(SolveStatus::Timeout, None, started, trace));
        };
        search.nodes[node].past_mode = past_mode;
        search.stats.hl_expanded += 1;
        let conflict = search.nodes[node].conflicts[index];

        let mut children = Vec::new();
        for (side, agent) in [(0, conflict.i), (1, conflict.j)] {
            let constraint = search.constraint_for(&conflict, agent);
            let Some(plan) = search.child_plan(node, &constraint, &mut cache, 2 * index + side) else {
                continue;
            };
            let parent = &search.nodes[node];
            let mut plans = parent.plans.clone();
            let cost = parent.cost - plans[agent].cost + plan.cost;
            plans[agent] = plan;
            let constraints = Some(Arc::new(ConstraintLink {
                constraint,
                next: parent.constraints.clone(),
            }));
            let conflicts = search.detect(&plans, past_mode);
            let child = search.push_node(
                Node {
                    parent: Some(node),
                    constraints,
                    plans,
                    cost,
                    conflicts,
                    past_mode,
                },
                &mut open,
            );
            children.push((child, constraint, cost));
        }

        if config.record_trace {
            let n = &search.nodes[node];
            trace.push(TraceEvent {
                node,
                parent: n.parent,
                cost: n.cost,
                conflicts: n.conflicts.len(),
                chosen: Some(conflict),
                children,
            });
        }
        // Expanded nodes only need their plans and constraint links while
        // children reference them; drop the conflict list to bound memory.
        search.nodes[node].conflicts = Vec::new();
    }
    Ok(search.finish(SolveStatus::Infeasible, None, started, trace))
}

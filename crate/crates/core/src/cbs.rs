//! Classical discrete CBS on a 4-connected grid with unit-time steps.
//!
//! Used as a reference point: every discrete solution is also a valid
//! continuous one, so the continuous solver can never do worse.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::ccbs::Stats;
use crate::error::{Error, Result};
use crate::geometry::Action;
use crate::map_graph::{Cell, GridMap, Graph};
use crate::sipp::Plan;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscretePlan {
    pub agent: usize,
    /// Cell occupied at each timestep; the agent stays at the last one.
    pub cells: Vec<Cell>,
}

impl DiscretePlan {
    /// Arrival timestep at the goal.
    pub fn cost(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }

    pub fn at(&self, t: usize) -> Cell {
        self.cells[t.min(self.cells.len() - 1)]
    }

    /// The same motion as a continuous plan over `graph`, which must contain
    /// a vertex for every visited cell and the 4-connected edges between them.
    pub fn to_plan(&self, graph: &Graph) -> Result<Plan> {
        let vertex = |c: Cell| {
            graph
                .vertex_at(c)
                .ok_or_else(|| Error::Input(format!("cell {c} is not a graph vertex")))
        };
        let start = vertex(self.cells[0])?;
        let mut actions = Vec::new();
        let mut t = 0usize;
        while t + 1 < self.cells.len() {
            let (a, b) = (self.cells[t], self.cells[t + 1]);
            if a == b {
                let mut end = t + 1;
                while end + 1 < self.cells.len() && self.cells[end + 1] == a {
                    end += 1;
                }
                actions.push(Action::wait(vertex(a)?, (end - t) as f64).at(t as f64));
                t = end;
            } else {
                actions.push(Action::movement(vertex(a)?, vertex(b)?, 1.0).at(t as f64));
                t += 1;
            }
        }
        Ok(Plan {
            agent: self.agent,
            start,
            actions,
            cost: self.cost() as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum DiscreteConstraint {
    /// Agent may not be in `cell` at time `t`.
    Vertex { cell: Cell, t: usize },
    /// Agent may not move `from -> to` between `t` and `t + 1`.
    Edge { from: Cell, to: Cell, t: usize },
}

#[derive(Clone, Debug)]
enum DiscreteConflict {
    Vertex { i: usize, j: usize, cell: Cell, t: usize },
    Edge { i: usize, j: usize, a: Cell, b: Cell, t: usize },
}

const STEPS: [(i64, i64); 5] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)];

fn goal_distances(grid: &GridMap, goal: Cell) -> HashMap<Cell, usize> {
    let mut dist = HashMap::from([(goal, 0)]);
    let mut queue = std::collections::VecDeque::from([goal]);
    while let Some(c) = queue.pop_front() {
        let d = dist[&c];
        for &(dx, dy) in &STEPS[1..] {
            let (x, y) = (c.x as i64 + dx, c.y as i64 + dy);
            if !grid.in_bounds(x, y) {
                continue;
            }
            let n = Cell::new(x as usize, y as usize);
            if !grid.is_blocked(n) && !dist.contains_key(&n) {
                dist.insert(n, d + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}

fn low_level(
    grid: &GridMap,
    agent: usize,
    start: Cell,
    goal: Cell,
    h: &HashMap<Cell, usize>,
    constraints: &HashSet<DiscreteConstraint>,
) -> Option<DiscretePlan> {
    h.get(&start)?;
    let last_goal_block = constraints
        .iter()
        .filter_map(|c| match c {
            DiscreteConstraint::Vertex { cell, t } if *cell == goal => Some(*t),
            _ => None,
        })
        .max();
    let latest_constraint = constraints
        .iter()
        .map(|c| match c {
            DiscreteConstraint::Vertex { t, .. } | DiscreteConstraint::Edge { t, .. } => *t,
        })
        .max()
        .unwrap_or(0);
    let horizon = latest_constraint + grid.width() * grid.height() + 1;

    let mut parent: HashMap<(Cell, usize), Cell> = HashMap::new();
    let mut seen: HashSet<(Cell, usize)> = HashSet::from([(start, 0)]);
    // (f, reverse g for deeper-first ties, cell, t)
    let mut open = BinaryHeap::new();
    open.push(Reverse((h[&start], Reverse(0usize), start, 0usize)));
    while let Some(Reverse((_, _, cell, t))) = open.pop() {
        if cell == goal && last_goal_block.is_none_or(|b| t > b) {
            let mut cells = vec![cell];
            let mut key = (cell, t);
            while let Some(&p) = parent.get(&key) {
                cells.push(p);
                key = (p, key.1 - 1);
            }
            cells.reverse();
            return Some(DiscretePlan { agent, cells });
        }
        if t >= horizon {
            continue;
        }
        for &(dx, dy) in &STEPS {
            let (x, y) = (cell.x as i64 + dx, cell.y as i64 + dy);
            if !grid.in_bounds(x, y) {
                continue;
            }
            let next = Cell::new(x as usize, y as usize);
            let Some(&hn) = h.get(&next) else { continue };
            if constraints.contains(&DiscreteConstraint::Vertex { cell: next, t: t + 1 })
                || constraints.contains(&DiscreteConstraint::Edge { from: cell, to: next, t })
            {
                continue;
            }
            if seen.insert((next, t + 1)) {
                parent.insert((next, t + 1), cell);
                open.push(Reverse((t + 1 + hn, Reverse(t + 1), next, t + 1)));
            }
        }
    }
    None
}

fn first_conflict(plans: &[DiscretePlan]) -> (Option<DiscreteConflict>, usize) {
    let horizon = plans.iter().map(|p| p.cells.len()).max().unwrap_or(0);
    let mut first = None;
    let mut count = 0;
    for t in 0..horizon {
        for i in 0..plans.len() {
            for j in i + 1..plans.len() {
                let found = if plans[i].at(t) == plans[j].at(t) {
                    Some(DiscreteConflict::Vertex {
                        i,
                        j,
                        cell: plans[i].at(t),
                        t,
                    })
                } else if t + 1 < horizon
                    && plans[i].at(t) == plans[j].at(t + 1)
                    && plans[i].at(t + 1) == plans[j].at(t)
                {
                    Some(DiscreteConflict::Edge {
                        i,
                        j,
                        a: plans[i].at(t),
                        b: plans[i].at(t + 1),
                        t,
                    })
                } else {
                    None
                };
                if let Some(c) = found {
                    count += 1;
                    first.get_or_insert(c);
                }
            }
        }
    }
    (first, count)
}

struct CtNode {
    constraints: Vec<HashSet<DiscreteConstraint>>,
    plans: Vec<DiscretePlan>,
    cost: usize,
    conflict: Option<DiscreteConflict>,
}

#[derive(PartialEq, Eq)]
struct Entry(usize, usize, usize);

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.cmp(&self.0).then(other.1.cmp(&self.1)).then(self.2.cmp(&other.2))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Optimal sum-of-costs discrete solution for `tasks` (start, goal) on the
/// 4-connected grid, or `None` on infeasibility or timeout.
pub fn cbs_solve(grid: &GridMap, tasks: &[(Cell, Cell)], timeout: Duration) -> (Option<Vec<DiscretePlan>>, Stats) {
    let started = Instant::now();
    let mut stats = Stats::default();
    let heuristics: Vec<_> = tasks.iter().map(|&(_, g)| goal_distances(grid, g)).collect();
    let finish = |mut stats: Stats, plans: Option<Vec<DiscretePlan>>| {
        if let Some(p) = &plans {
            stats.success = true;
            stats.soc = p.iter().map(|p| p.cost() as f64).sum();
            stats.makespan = p.iter().map(|p| p.cost() as f64).fold(0.0, f64::max);
        }
        stats.runtime = started.elapsed().as_secs_f64();
        (plans, stats)
    };

    let mut root_plans = Vec::new();
    for (agent, &(s, g)) in tasks.iter().enumerate() {
        stats.ll_calls += 1;
        match low_level(grid, agent, s, g, &heuristics[agent], &HashSet::new()) {
            Some(p) => root_plans.push(p),
            None => return finish(stats, None),
        }
    }
    let (conflict, conflicts) = first_conflict(&root_plans);
    let mut nodes = vec![CtNode {
        constraints: vec![HashSet::new(); tasks.len()],
        cost: root_plans.iter().map(DiscretePlan::cost).sum(),
        plans: root_plans,
        conflict,
    }];
    let mut open = BinaryHeap::from([Entry(nodes[0].cost, conflicts, 0)]);

    while let Some(Entry(_, _, id)) = open.pop() {
        if started.elapsed() >= timeout {
            return finish(stats, None);
        }
        let Some(conflict) = nodes[id].conflict.clone() else {
            let plans = std::mem::take(&mut nodes[id].plans);
            return finish(stats, Some(plans));
        };
        stats.hl_expanded += 1;
        let branches = match conflict {
            DiscreteConflict::Vertex { i, j, cell, t } => [
                (i, DiscreteConstraint::Vertex { cell, t }),
                (j, DiscreteConstraint::Vertex { cell, t }),
            ],
            DiscreteConflict::Edge { i, j, a, b, t } => [
                (i, DiscreteConstraint::Edge { from: a, to: b, t }),
                (j, DiscreteConstraint::Edge { from: b, to: a, t }),
            ],
        };
        for (agent, constraint) in branches {
            let mut constraints = nodes[id].constraints.clone();
            constraints[agent].insert(constraint);
            stats.ll_calls += 1;
            let (s, g) = tasks[agent];
            let Some(plan) = low_level(grid, agent, s, g, &heuristics[agent], &constraints[agent]) else {
                continue;
            };
            let mut plans = nodes[id].plans.clone();
            plans[agent] = plan;
            let cost = plans.iter().map(DiscretePlan::cost).sum();
            let (conflict, conflicts) = first_conflict(&plans);
            open.push(Entry(cost, conflicts, nodes.len()));
            nodes.push(CtNode {
                constraints,
                plans,
                cost,
                conflict,
            });
        }
        nodes[id].plans = Vec::new();
        nodes[id].constraints = Vec::new();
    }
    finish(stats, None)
}

use std::collections::VecDeque;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Agent, Graph, Instance, ScenarioEntry};
use crate::error::{Error, Result};
use crate::geometry::VertexId;

const MAX_ATTEMPTS: usize = 1_000;

fn components(graph: &Graph) -> Vec<usize> {
    let mut comp = vec![usize::MAX; graph.vertex_count()];
    let mut next = 0;
    for root in graph.vertices() {
        if comp[root.0] != usize::MAX {
            continue;
        }
        comp[root.0] = next;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for e in graph.neighbors(v) {
                if comp[e.to.0] == usize::MAX {
                    comp[e.to.0] = next;
                    queue.push_back(e.to);
                }
            }
        }
        next += 1;
    }
    comp
}

fn clear_of(graph: &Graph, v: VertexId, taken: &[VertexId], clearance: f64) -> bool {
    let p = graph.position(v).expect("vertex in graph");
    taken
        .iter()
        .all(|t| *t != v && graph.position(*t).unwrap().distance(p) >= clearance)
}

/// Draws `n_agents` random start/goal pairs, reproducibly for a given seed.
///
/// Starts are pairwise at least `2 * radius` apart, as are goals, and every
/// goal is connected to its start.
pub fn generate_scenario(graph: Arc<Graph>, n_agents: usize, seed: u64, radius: f64) -> Result<Instance> {
    if n_agents > graph.vertex_count() {
        return Err(Error::Generation(format!(
            "{n_agents} agents do not fit on {} vertices",
            graph.vertex_count()
        )));
    }
    let comp = components(&graph);
    let clearance = 2.0 * radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<VertexId> = graph.vertices().collect();

    'attempt: for _ in 0..MAX_ATTEMPTS {
        let mut starts = Vec::with_capacity(n_agents);
        let mut shuffled = vertices.clone();
        shuffled.shuffle(&mut rng);
        for v in shuffled {
            if starts.len() == n_agents {
                break;
            }
            if clear_of(&graph, v, &starts, clearance) {
                starts.push(v);
            }
        }
        if starts.len() < n_agents {
            continue;
        }

        let mut goals: Vec<VertexId> = Vec::with_capacity(n_agents);
        for &s in &starts {
            let candidates: Vec<VertexId> = vertices
                .iter()
                .copied()
                .filter(|g| comp[g.0] == comp[s.0] && clear_of(&graph, *g, &goals, clearance))
                .collect();
            if candidates.is_empty() {
                continue 'attempt;
            }
            // Prefer a goal different from the start when one exists.
            let moving: Vec<VertexId> = candidates.iter().copied().filter(|g| *g != s).collect();
            let pool = if moving.is_empty() { &candidates } else { &moving };
            goals.push(pool[rng.gen_range(0..pool.len())]);
        }

        let agents = starts
            .into_iter()
            .zip(goals)
            .enumerate()
            .map(|(id, (s, g))| Agent::new(id, s, g).with_radius(radius))
            .collect();
        return Instance::new(graph, agents);
    }
    Err(Error::Generation(format!(
        "could not place {n_agents} agents after {MAX_ATTEMPTS} attempts"
    )))
}

/// Instance from the first `n_agents` entries of a `.scen` file on a grid graph.
pub fn instance_from_scen(
    graph: Arc<Graph>,
    entries: &[ScenarioEntry],
    n_agents: usize,
    radius: f64,
) -> Result<Instance> {
    if entries.len() < n_agents {
        return Err(Error::Input(format!(
            "scenario has {} entries, {n_agents} requested",
            entries.len()
        )));
    }
    let mut agents = Vec::with_capacity(n_agents);
    for (id, e) in entries.iter().take(n_agents).enumerate() {
        let start = graph
            .vertex_at(e.start)
            .ok_or_else(|| Error::Input(format!("start {} is not a free cell", e.start)))?;
        let goal = graph
            .vertex_at(e.goal)
            .ok_or_else(|| Error::Input(format!("goal {} is not a free cell", e.goal)))?;
        agents.push(Agent::new(id, start, goal).with_radius(radius));
    }
    Instance::new(graph, agents)
}

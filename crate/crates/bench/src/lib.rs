//! Instances shared by the criterion benchmarks.

use std::sync::Arc;

use ccbs_core::map_graph::{build_graph, generate_scenario, parse_roadmap, Agent, GridMap, DEFAULT_AGENT_RADIUS};
use ccbs_core::Instance;

/// Random agents on an obstacle-free `n`×`n` grid with 2^k move directions.
pub fn open_instance(n: usize, k: u32, agents: usize, seed: u64) -> Instance {
    let graph = Arc::new(build_graph(&GridMap::open(n, n), k, DEFAULT_AGENT_RADIUS).expect("valid grid"));
    generate_scenario(graph, agents, seed, DEFAULT_AGENT_RADIUS).expect("agents fit")
}

/// The three-agent roadmap from the core test fixtures, radius 0.5.
pub fn crossing() -> Instance {
    let doc = parse_roadmap(include_str!("../../core/tests/fixtures/crossing.roadmap")).expect("fixture parses");
    let agents = doc
        .tasks
        .iter()
        .enumerate()
        .map(|(id, &(s, g))| Agent::new(id, s, g).with_radius(0.5))
        .collect();
    Instance::new(Arc::new(doc.graph), agents).expect("fixture is valid")
}

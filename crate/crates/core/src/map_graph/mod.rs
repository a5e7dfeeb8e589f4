//! Problem inputs: grid maps, roadmaps, agents and instances.

mod grid;
mod roadmap;
mod scen;
mod scenario;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, VertexId, VertexPositions};

pub use grid::{build_graph, edge_valid, neighborhood_offsets, parse_map, Cell, GridMap};
pub use roadmap::{load_roadmap, parse_roadmap, RoadmapDocument};
pub use scen::{parse_scen, ScenarioEntry};
pub use scenario::{generate_scenario, instance_from_scen};

/// Agent radius used by the grid experiments: the largest radius at which
/// agents can follow each other through adjacent unit cells.
pub const DEFAULT_AGENT_RADIUS: f64 = std::f64::consts::SQRT_2 / 4.0;
pub const DEFAULT_AGENT_SPEED: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub to: VertexId,
    pub length: f64,
}

/// Undirected graph embedded in the plane.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    positions: Vec<Point2>,
    adjacency: Vec<Vec<Edge>>,
    cells: Option<Vec<Cell>>,
    cell_lookup: BTreeMap<Cell, VertexId>,
    labels: Vec<Option<String>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, position: Point2) -> VertexId {
        let id = VertexId(self.positions.len());
        self.positions.push(position);
        self.adjacency.push(Vec::new());
        self.labels.push(None);
        id
    }

    pub(crate) fn add_cell_vertex(&mut self, cell: Cell, position: Point2) -> VertexId {
        let id = self.add_vertex(position);
        self.cells.get_or_insert_with(Vec::new).push(cell);
        self.cell_lookup.insert(cell, id);
        id
    }

    pub fn set_label(&mut self, v: VertexId, label: impl Into<String>) {
        if let Some(slot) = self.labels.get_mut(v.0) {
            *slot = Some(label.into());
        }
    }

    pub fn label(&self, v: VertexId) -> Option<&str> {
        self.labels.get(v.0).and_then(|l| l.as_deref())
    }

    /// Vertex carrying `label`, if any.
    pub fn find_label(&self, label: &str) -> Option<VertexId> {
        self.labels
            .iter()
            .position(|l| l.as_deref() == Some(label))
            .map(VertexId)
    }

    /// Adds the undirected edge `{u, v}` with Euclidean length. Returns false
    /// if it already existed.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<bool> {
        let pu = self.position(u).ok_or(Error::UnknownVertex(u))?;
        let pv = self.position(v).ok_or(Error::UnknownVertex(v))?;
        if u == v {
            return Err(Error::Input(format!("self-loop at vertex {u}")));
        }
        if self.edge_length(u, v).is_some() {
            return Ok(false);
        }
        let length = pu.distance(pv);
        if !(length > 0.0) {
            return Err(Error::Input(format!("zero-length edge {u}-{v}")));
        }
        self.adjacency[u.0].push(Edge { to: v, length });
        self.adjacency[v.0].push(Edge { to: u, length });
        Ok(true)
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.positions.len()).map(VertexId)
    }

    pub fn position(&self, v: VertexId) -> Option<Point2> {
        self.positions.get(v.0).copied()
    }

    pub fn positions(&self) -> &[Point2] {
        &self.positions
    }

    pub fn neighbors(&self, v: VertexId) -> &[Edge] {
        self.adjacency.get(v.0).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edge_length(&self, u: VertexId, v: VertexId) -> Option<f64> {
        self.neighbors(u).iter().find(|e| e.to == v).map(|e| e.length)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.0 < self.positions.len()
    }

    /// Grid cell of a vertex, for graphs built from a [`GridMap`].
    pub fn cell_of(&self, v: VertexId) -> Option<Cell> {
        self.cells.as_ref().and_then(|c| c.get(v.0)).copied()
    }

    pub fn vertex_at(&self, cell: Cell) -> Option<VertexId> {
        self.cell_lookup.get(&cell).copied()
    }

    pub fn is_grid(&self) -> bool {
        self.cells.is_some()
    }
}

impl VertexPositions for Graph {
    fn vertex_position(&self, v: VertexId) -> Option<Point2> {
        self.position(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub start: VertexId,
    pub goal: VertexId,
    pub radius: f64,
    pub speed: f64,
}

impl Agent {
    pub fn new(id: usize, start: VertexId, goal: VertexId) -> Self {
        Self {
            id,
            start,
            goal,
            radius: DEFAULT_AGENT_RADIUS,
            speed: DEFAULT_AGENT_SPEED,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: Arc<Graph>,
    pub agents: Vec<Agent>,
}

impl Instance {
    /// Builds an instance, checking ids, distinct goals, and that no two
    /// agents overlap at their starts or at their goals.
    pub fn new(graph: Arc<Graph>, agents: Vec<Agent>) -> Result<Self> {
        for (idx, a) in agents.iter().enumerate() {
            if a.id != idx {
                return Err(Error::Input(format!(
                    "agent ids must be 0..n in order, found {} at position {idx}",
                    a.id
                )));
            }
            if !graph.contains(a.start) {
                return Err(Error::UnknownVertex(a.start));
            }
            if !graph.contains(a.goal) {
                return Err(Error::UnknownVertex(a.goal));
            }
            if !(a.radius > 0.0) || !(a.speed > 0.0) {
                return Err(Error::Input(format!(
                    "agent {idx} needs positive radius and speed"
                )));
            }
        }
        for i in 0..agents.len() {
            for j in i + 1..agents.len() {
                let (a, b) = (&agents[i], &agents[j]);
                let clearance = a.radius + b.radius;
                let starts = graph.position(a.start).unwrap().distance(graph.position(b.start).unwrap());
                if starts < clearance {
                    return Err(Error::Input(format!(
                        "agents {i} and {j} overlap at their starts"
                    )));
                }
                if a.goal == b.goal {
                    return Err(Error::Input(format!("agents {i} and {j} share a goal")));
                }
                let goals = graph.position(a.goal).unwrap().distance(graph.position(b.goal).unwrap());
                if goals < clearance {
                    return Err(Error::Input(format!(
                        "agents {i} and {j} overlap at their goals"
                    )));
                }
            }
        }
        Ok(Self { graph, agents })
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }
}

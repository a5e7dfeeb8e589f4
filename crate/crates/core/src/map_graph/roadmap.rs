use std::collections::HashMap;

use super::Graph;
use crate::error::{Error, Result};
use crate::geometry::{Point2, VertexId};

/// A parsed roadmap file: the graph, plus any `a <start> <goal>` task lines.
#[derive(Clone, Debug)]
pub struct RoadmapDocument {
    pub graph: Graph,
    pub tasks: Vec<(VertexId, VertexId)>,
    /// Ids exactly as written in the file, indexed by vertex.
    pub file_ids: Vec<String>,
}

/// Loads a roadmap: `v <id> <x> <y>` vertex lines, then `e <id> <id>`
/// undirected edges. Blank lines and `#` comments are skipped. Edge
/// clearance is taken as given.
pub fn load_roadmap(text: &str) -> Result<Graph> {
    parse_roadmap(text).map(|doc| doc.graph)
}

/// Like [`load_roadmap`], also accepting `a <start id> <goal id>` lines that
/// define agents in order.
pub fn parse_roadmap(text: &str) -> Result<RoadmapDocument> {
    let mut graph = Graph::new();
    let mut ids: HashMap<String, VertexId> = HashMap::new();
    let mut file_ids = Vec::new();
    let mut tasks = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let n = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let lookup = |name: &str| {
            ids.get(name)
                .copied()
                .ok_or_else(|| Error::parse(n, format!("unknown vertex id `{name}`")))
        };
        match parts.as_slice() {
            ["v", id, x, y] => {
                let x: f64 = x.parse().map_err(|_| Error::parse(n, "bad x coordinate"))?;
                let y: f64 = y.parse().map_err(|_| Error::parse(n, "bad y coordinate"))?;
                let p = Point2::new(x, y);
                if !p.is_finite() {
                    return Err(Error::parse(n, "non-finite coordinate"));
                }
                if ids.contains_key(*id) {
                    return Err(Error::parse(n, format!("duplicate vertex id `{id}`")));
                }
                let v = graph.add_vertex(p);
                graph.set_label(v, *id);
                ids.insert(id.to_string(), v);
                file_ids.push(id.to_string());
            }
            ["e", a, b] => {
                let (u, v) = (lookup(a)?, lookup(b)?);
                graph
                    .add_edge(u, v)
                    .map_err(|e| Error::parse(n, e.to_string()))?;
            }
            ["a", s, g] => tasks.push((lookup(s)?, lookup(g)?)),
            _ => return Err(Error::parse(n, format!("unrecognized line `{line}`"))),
        }
    }
    Ok(RoadmapDocument {
        graph,
        tasks,
        file_ids,
    })
}

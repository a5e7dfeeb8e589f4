use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context, Result};

use ccbs_core::map_graph::{
    build_graph, generate_scenario, instance_from_scen, parse_map, parse_roadmap, Agent, Cell, GridMap,
    RoadmapDocument, ScenarioEntry,
};
use ccbs_core::{Graph, Instance};

/// Where agents live: a movingai grid, a roadmap file, or a generated open grid.
#[derive(Clone, Debug)]
pub enum Source {
    Grid {
        name: String,
        grid: GridMap,
        scen: Option<Vec<ScenarioEntry>>,
    },
    Roadmap {
        name: String,
        doc: RoadmapDocument,
    },
}

impl Source {
    pub fn load(map: Option<&Path>, roadmap: Option<&Path>, open: Option<&str>, scen: Option<&Path>) -> Result<Self> {
        let read = |p: &Path| fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()));
        let scen = match scen {
            Some(p) => Some(ccbs_core::map_graph::parse_scen(&read(p)?).with_context(|| format!("in {}", p.display()))?),
            None => None,
        };
        match (map, roadmap, open) {
            (Some(p), None, None) => Ok(Source::Grid {
                name: file_name(p),
                grid: parse_map(&read(p)?).with_context(|| format!("in {}", p.display()))?,
                scen,
            }),
            (None, Some(p), None) => {
                if scen.is_some() {
                    bail!("--scen only applies to grid maps");
                }
                Ok(Source::Roadmap {
                    name: file_name(p),
                    doc: parse_roadmap(&read(p)?).with_context(|| format!("in {}", p.display()))?,
                })
            }
            (None, None, Some(spec)) => {
                let (w, h) = parse_open(spec)?;
                Ok(Source::Grid {
                    name: format!("open{w}x{h}"),
                    grid: GridMap::open(w, h),
                    scen,
                })
            }
            (None, None, None) => bail!("one of --map, --roadmap or --open is required"),
            _ => bail!("--map, --roadmap and --open are mutually exclusive"),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Source::Grid { name, .. } | Source::Roadmap { name, .. } => name,
        }
    }

    pub fn grid(&self) -> Option<&GridMap> {
        match self {
            Source::Grid { grid, .. } => Some(grid),
            Source::Roadmap { .. } => None,
        }
    }

    /// The motion graph; `k` selects the grid neighborhood and is ignored for roadmaps.
    pub fn graph(&self, k: u32, radius: f64) -> Result<Arc<Graph>> {
        Ok(Arc::new(match self {
            Source::Grid { grid, .. } => build_graph(grid, k, radius)?,
            Source::Roadmap { doc, .. } => doc.graph.clone(),
        }))
    }

    /// Builds the instance for one run.
    ///
    /// Scenario files provide `agents` consecutive entries starting at entry
    /// `seed * agents` (wrapping around); roadmap task lines are used as
    /// written. Without either, start/goal pairs are drawn from `seed`.
    pub fn instance(&self, graph: Arc<Graph>, agents: Option<usize>, seed: u64, radius: f64) -> Result<Instance> {
        match self {
            Source::Grid { scen: Some(entries), .. } => {
                let n = agents.unwrap_or(entries.len());
                if entries.is_empty() || n > entries.len() {
                    bail!("scenario has {} entries, {n} agents requested", entries.len());
                }
                let offset = (seed as usize).wrapping_mul(n) % entries.len();
                let picked: Vec<ScenarioEntry> = entries.iter().cycle().skip(offset).take(n).cloned().collect();
                Ok(instance_from_scen(graph, &picked, n, radius)?)
            }
            Source::Roadmap { doc, .. } if !doc.tasks.is_empty() => {
                let n = agents.unwrap_or(doc.tasks.len());
                if n > doc.tasks.len() {
                    bail!("roadmap defines {} agents, {n} requested", doc.tasks.len());
                }
                let list = doc.tasks[..n]
                    .iter()
                    .enumerate()
                    .map(|(id, &(s, g))| Agent::new(id, s, g).with_radius(radius))
                    .collect();
                Ok(Instance::new(graph, list)?)
            }
            _ => {
                let n = agents.context("--agents is required when the input defines no agents")?;
                Ok(generate_scenario(graph, n, seed, radius)?)
            }
        }
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Cells of every agent's start and goal, for the discrete solver.
pub fn grid_tasks(instance: &Instance) -> Result<Vec<(Cell, Cell)>> {
    instance
        .agents
        .iter()
        .map(|a| {
            let cell = |v| instance.graph.cell_of(v).context("discrete CBS needs a grid map");
            Ok((cell(a.start)?, cell(a.goal)?))
        })
        .collect()
}

/// `WxH`, e.g. `10x10`.
pub fn parse_open(spec: &str) -> Result<(usize, usize)> {
    let (w, h) = spec
        .split_once(['x', 'X'])
        .with_context(|| format!("expected WIDTHxHEIGHT, got `{spec}`"))?;
    let w: usize = w.trim().parse().with_context(|| format!("bad width in `{spec}`"))?;
    let h: usize = h.trim().parse().with_context(|| format!("bad height in `{spec}`"))?;
    if w == 0 || h == 0 {
        bail!("grid `{spec}` is empty");
    }
    Ok((w, h))
}

/// Comma-separated values, e.g. `2,3,4`.
pub fn parse_list<T>(spec: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("bad value `{s}`: {e}")))
        .collect()
}

/// Seeds as a comma-separated mix of numbers and ranges: `0..25`, `1..=3,9`.
/// An empty string gives no seeds.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let num = |s: &str| s.trim().parse::<u64>().with_context(|| format!("bad seed `{s}`"));
        if let Some((a, b)) = part.split_once("..=") {
            seeds.extend(num(a)?..=num(b)?);
        } else if let Some((a, b)) = part.split_once("..") {
            seeds.extend(num(a)?..num(b)?);
        } else {
            seeds.push(num(part)?);
        }
    }
    Ok(seeds)
}

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Duration;

use anyhow::Result;
use rayon::prelude::*;

use ccbs_core::cbs::cbs_solve;
use ccbs_core::{solve, ConflictHeuristic, Graph, SolverConfig, Stats};

use crate::input::{grid_tasks, Source};
use crate::output::Record;

/// Which solver a batch row runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchSolver {
    Ccbs(ConflictHeuristic),
    /// Discrete CBS on the 4-connected grid; `k` is ignored.
    Cbs,
}

impl BatchSolver {
    pub fn name(self) -> &'static str {
        match self {
            BatchSolver::Ccbs(h) => h.name(),
            BatchSolver::Cbs => "cbs",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BatchJob {
    pub agents: Vec<usize>,
    pub ks: Vec<u32>,
    pub solvers: Vec<BatchSolver>,
    pub seeds: Vec<u64>,
    pub timeout: Duration,
    pub delta: f64,
    pub radius: f64,
    pub with_runtime: bool,
}

/// Runs every (agents, k, solver, seed) combination, in parallel, and
/// returns the records in that nested order whatever the completion order.
pub fn run_batch(source: &Source, job: &BatchJob) -> Result<Vec<Record>> {
    let graphs: BTreeMap<u32, Arc<Graph>> = job
        .ks
        .iter()
        .map(|&k| Ok((k, source.graph(k, job.radius)?)))
        .collect::<Result<_>>()?;

    let mut runs = Vec::new();
    for &agents in &job.agents {
        for &k in &job.ks {
            for &solver in &job.solvers {
                for &seed in &job.seeds {
                    runs.push((agents, k, solver, seed));
                }
            }
        }
    }

    Ok(runs
        .par_iter()
        .map(|&(agents, k, solver, seed)| {
            let stats = run_one(source, &graphs[&k], job, agents, solver, seed);
            Record::new(source.name(), k, agents, solver.name(), seed, &stats, job.with_runtime)
        })
        .collect())
}

fn run_one(source: &Source, graph: &Arc<Graph>, job: &BatchJob, agents: usize, solver: BatchSolver, seed: u64) -> Stats {
    let instance = match source.instance(graph.clone(), Some(agents), seed, job.radius) {
        Ok(i) => i,
        Err(err) => {
            tracing::warn!(seed, agents, "skipping instance: {err:#}");
            return Stats::default();
        }
    };
    let result = match solver {
        BatchSolver::Ccbs(heuristic) => {
            let config = SolverConfig {
                heuristic,
                timeout: job.timeout,
                sweep_resolution: job.delta,
                ..SolverConfig::default()
            };
            solve(&instance, &config).map(|o| o.stats).map_err(anyhow::Error::from)
        }
        BatchSolver::Cbs => match (source.grid(), grid_tasks(&instance)) {
            (Some(grid), Ok(tasks)) => Ok(cbs_solve(grid, &tasks, job.timeout).1),
            (None, _) => Err(anyhow::anyhow!("discrete CBS needs a grid map")),
            (_, Err(e)) => Err(e),
        },
    };
    result.unwrap_or_else(|err| {
        tracing::warn!(seed, agents, "run failed: {err:#}");
        Stats::default()
    })
}

/// Aggregate for one (agents, k, solver) configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigSummary {
    pub agents: usize,
    pub k: u32,
    pub heuristic: String,
    pub runs: usize,
    pub success_rate: f64,
    /// Over seeds solved by every qualifying configuration with the same
    /// agent count; `None` below the success threshold.
    pub mean_soc: Option<f64>,
    pub mean_hl_expanded: Option<f64>,
    pub common: usize,
}

/// Success rates per configuration, plus means over the seeds that every
/// configuration at or above `threshold` solved.
pub fn summarize(records: &[Record], threshold: f64) -> Vec<ConfigSummary> {
    let mut groups: BTreeMap<(usize, u32, String), Vec<&Record>> = BTreeMap::new();
    for r in records {
        groups.entry((r.agents, r.k, r.heuristic.clone())).or_default().push(r);
    }
    let rate = |rs: &[&Record]| rs.iter().filter(|r| r.success).count() as f64 / rs.len() as f64;

    let mut common: BTreeMap<usize, BTreeSet<u64>> = BTreeMap::new();
    for ((agents, _, _), rs) in &groups {
        if rate(rs) < threshold {
            continue;
        }
        let solved: BTreeSet<u64> = rs.iter().filter(|r| r.success).map(|r| r.seed).collect();
        common
            .entry(*agents)
            .and_modify(|s| *s = s.intersection(&solved).copied().collect())
            .or_insert(solved);
    }

    groups
        .iter()
        .map(|((agents, k, heuristic), rs)| {
            let success_rate = rate(rs);
            let shared = common.get(agents).filter(|_| success_rate >= threshold);
            let picked: Vec<&&Record> = rs.iter().filter(|r| shared.is_some_and(|s| s.contains(&r.seed))).collect();
            let mean = |f: &dyn Fn(&Record) -> f64| {
                (!picked.is_empty()).then(|| picked.iter().map(|r| f(r)).sum::<f64>() / picked.len() as f64)
            };
            ConfigSummary {
                agents: *agents,
                k: *k,
                heuristic: heuristic.clone(),
                runs: rs.len(),
                success_rate,
                mean_soc: mean(&|r| r.soc.unwrap_or(0.0)),
                mean_hl_expanded: mean(&|r| r.hl_expanded as f64),
                common: picked.len(),
            }
        })
        .collect()
}

use std::io::Write;

use anyhow::Result;
use serde::Serialize;

use ccbs_core::{Graph, Solution, Stats, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One solver run, as written to CSV and JSON.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub map: String,
    pub k: u32,
    pub agents: usize,
    pub heuristic: String,
    pub seed: u64,
    pub success: bool,
    pub soc: Option<f64>,
    pub makespan: Option<f64>,
    pub hl_expanded: u64,
    pub ll_calls: u64,
    /// Left out when byte-stable output is wanted.
    pub runtime: Option<f64>,
}

impl Record {
    pub fn new(map: &str, k: u32, agents: usize, heuristic: &str, seed: u64, stats: &Stats, with_runtime: bool) -> Self {
        Self {
            map: map.to_string(),
            k,
            agents,
            heuristic: heuristic.to_string(),
            seed,
            success: stats.success,
            soc: stats.success.then_some(stats.soc),
            makespan: stats.success.then_some(stats.makespan),
            hl_expanded: stats.hl_expanded,
            ll_calls: stats.ll_calls,
            runtime: with_runtime.then_some(stats.runtime),
        }
    }
}

pub fn write_records(records: &[Record], format: Format, out: &mut impl Write) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut *out);
            w.write_record(["map", "k", "agents", "heuristic", "seed", "success", "soc", "makespan", "hl_expanded", "ll_calls", "runtime"])?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, records)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn vertex_name(graph: &Graph, v: VertexId) -> String {
    if let Some(label) = graph.label(v) {
        label.to_string()
    } else if let Some(cell) = graph.cell_of(v) {
        cell.to_string()
    } else {
        v.0.to_string()
    }
}

/// Plain-text solution: a `soc .. makespan ..` header, then one block per
/// agent listing `move|wait from to t_start duration`.
pub fn write_solution(graph: &Graph, solution: &Solution, out: &mut impl Write) -> Result<()> {
    writeln!(out, "soc {:.4} makespan {:.4}", solution.soc, solution.makespan)?;
    for plan in &solution.plans {
        writeln!(out, "agent {}", plan.agent)?;
        for a in &plan.actions {
            let kind = if a.action.is_wait() { "wait" } else { "move" };
            writeln!(
                out,
                "{kind} {} {} {:.6} {:.6}",
                vertex_name(graph, a.from()),
                vertex_name(graph, a.to()),
                a.t_start,
                a.action.duration
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(seed: u64, success: bool) -> Record {
        let stats = Stats {
            success,
            soc: 12.5,
            makespan: 4.25,
            hl_expanded: 3,
            ll_calls: 7,
            runtime: 0.5,
        };
        Record::new("open4x4", 2, 3, "hybrid", seed, &stats, false)
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        write_records(&[record(0, true), record(1, false)], Format::Csv, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "map,k,agents,heuristic,seed,success,soc,makespan,hl_expanded,ll_calls,runtime\n\
             open4x4,2,3,hybrid,0,true,12.5,4.25,3,7,\n\
             open4x4,2,3,hybrid,1,false,,,3,7,\n"
        );
    }

    #[test]
    fn empty_csv_has_header() {
        let mut buf = Vec::new();
        write_records(&[], Format::Csv, &mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1);
    }

    #[test]
    fn json_array() {
        let mut buf = Vec::new();
        write_records(&[record(4, true)], Format::Json, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["seed"], 4);
        assert_eq!(v[0]["runtime"], serde_json::Value::Null);
    }
}

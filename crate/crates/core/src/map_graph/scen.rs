use serde::{Deserialize, Serialize};

use super::Cell;
use crate::error::{Error, Result};

/// One line of a movingai `.scen` (version 1) file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub bucket: u32,
    pub map: String,
    pub width: usize,
    pub height: usize,
    pub start: Cell,
    pub goal: Cell,
    pub optimal_length: f64,
}

impl ScenarioEntry {
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.bucket,
            self.map,
            self.width,
            self.height,
            self.start.x,
            self.start.y,
            self.goal.x,
            self.goal.y,
            self.optimal_length
        )
    }
}

fn field<T: std::str::FromStr>(raw: &str, name: &str, line: usize) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {name} `{raw}`")))
}

/// Parses a movingai `.scen` file into its entries, in file order.
pub fn parse_scen(text: &str) -> Result<Vec<ScenarioEntry>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let version = lines.by_ref().find(|(_, l)| !l.trim().is_empty());
    match version {
        Some((_, l)) if l.split_whitespace().collect::<Vec<_>>() == ["version", "1"]
            || l.split_whitespace().collect::<Vec<_>>() == ["version", "1.0"] => {}
        Some((n, l)) => return Err(Error::parse(n, format!("expected `version 1`, found `{l}`"))),
        None => return Err(Error::parse(1, "empty scenario file")),
    }

    let mut entries = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').collect()
        } else {
            line.split_whitespace().collect()
        };
        if fields.len() != 9 {
            return Err(Error::parse(n, format!("expected 9 fields, found {}", fields.len())));
        }
        entries.push(ScenarioEntry {
            bucket: field(fields[0], "bucket", n)?,
            map: fields[1].to_string(),
            width: field(fields[2], "width", n)?,
            height: field(fields[3], "height", n)?,
            start: Cell::new(field(fields[4], "start x", n)?, field(fields[5], "start y", n)?),
            goal: Cell::new(field(fields[6], "goal x", n)?, field(fields[7], "goal y", n)?),
            optimal_length: field(fields[8], "optimal length", n)?,
        });
    }
    Ok(entries)
}

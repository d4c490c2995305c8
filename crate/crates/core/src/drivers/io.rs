use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use super::path::DriverPath;
use super::sample::{sample_driver_detailed, DriverKind, DriverSample};
use crate::error::{LabError, Result};

/// JSON driver spec: the driver kind plus seed and grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverSpecFile {
    #[serde(flatten)]
    pub kind: DriverKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n: usize,
}

impl DriverSpecFile {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.n)
    }

    pub fn sample(&self) -> Result<DriverSample> {
        sample_driver_detailed(&self.kind, self.grid()?, self.seed)
    }
}

/// Writes `t,u` rows, LF-terminated, shortest round-trip decimal form.
pub fn write_driver_csv<W: Write>(path: &DriverPath, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,u")?;
    for (i, u) in path.values().iter().enumerate() {
        writeln!(w, "{},{}", path.grid().time(i), u)?;
    }
    Ok(())
}

pub fn read_driver_csv<R: BufRead>(r: R) -> Result<DriverPath> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| LabError::Parse("empty driver file".into()))?
        .map_err(|e| LabError::Parse(e.to_string()))?;
    if header.trim() != "t,u" {
        return Err(LabError::Parse(format!("expected header `t,u`, got `{header}`")));
    }
    let mut ts = Vec::new();
    let mut us = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| LabError::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| LabError::Parse(format!("line {}: missing column", lineno + 2)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| LabError::Parse(format!("line {}: {e}", lineno + 2)))
        };
        ts.push(parse(it.next())?);
        us.push(parse(it.next())?);
        if it.next().is_some() {
            return Err(LabError::Parse(format!("line {}: expected two columns", lineno + 2)));
        }
    }
    if ts.len() < 2 {
        return Err(LabError::Parse("driver file needs at least two rows".into()));
    }
    let grid = TimeGrid::new(*ts.last().unwrap(), ts.len() - 1)?;
    for (i, t) in ts.iter().enumerate() {
        if (t - grid.time(i)).abs() > 1e-9 * grid.dt() {
            return Err(LabError::InvalidGrid(format!("row {i}: t = {t} is not on a uniform grid")));
        }
    }
    DriverPath::new(grid, us)
}

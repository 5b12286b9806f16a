//! Column tables and their CSV and JSON files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};
use crate::scenario::Run;

/// Named columns of equal length.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        debug_assert!(self.columns.first().is_none_or(|c| c.len() == values.len()));
        self.headers.push(name.into());
        self.columns.push(values);
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|k| self.columns[k].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// `t`, `tau`, `omega_t`, then every series of the trajectory.
    pub fn from_run(run: &Run) -> Self {
        let mut table = Table::default();
        let traj = &run.trajectory;
        table.push("t", traj.times.clone());
        if let Some(tau) = &traj.tau {
            table.push("tau", tau.clone());
        }
        if let Some(wt) = &run.omega_t {
            table.push("omega_t", wt.clone());
        }
        for s in &traj.series {
            table.push(s.name.clone(), s.values.clone());
        }
        table
    }

    /// Comma separated, shortest round-trip floats, one header row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(&self.headers).map_err(|e| csv_error(path, e))?;
        for r in 0..self.rows() {
            let row: Vec<f64> = self.columns.iter().map(|c| c[r]).collect();
            w.serialize(row).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::config(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_shortest_round_trip_floats() {
        let mut table = Table::default();
        table.push("t", vec![0.0, 0.1, 1e-17]);
        table.push("x", vec![-1.5, 1.0 / 3.0, 2e300]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        table.write_csv(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,x\n0.0,-1.5\n0.1,0.3333333333333333\n1e-17,2e300\n");
        for line in text.lines().skip(1) {
            for (cell, col) in line.split(',').zip(&table.columns) {
                assert!(col.contains(&cell.parse::<f64>().unwrap()));
            }
        }
    }

    #[test]
    fn column_lookup() {
        let mut table = Table::default();
        table.push("a", vec![1.0]);
        assert_eq!(table.column("a"), Some(&[1.0][..]));
        assert_eq!(table.column("b"), None);
        assert_eq!(table.rows(), 1);
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut table = Table::default();
        table.push("a", vec![1.0]);
        let err = table.write_csv(&dir.path().join("missing").join("x.csv")).unwrap_err();
        assert!(matches!(err, CliError::Io { .. }));
        assert_eq!(err.exit_code(), 2);
    }
}

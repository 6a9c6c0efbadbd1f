//! Result tables, written as JSON with a CSV mirror.

use anyhow::Result;
use serde::{Deserialize, Serialize};

use crate::manifest::{Artifact, StageWriter};

pub const TABLE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
pub struct Table<R> {
    pub schema: String,
    pub version: u32,
    pub rows: R,
}

/// Per-qubit outcome of the identity-circuit check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub qubit: usize,
    pub value: f64,
    pub stderr: f64,
    pub deviation: f64,
    pub flagged: bool,
    pub model: String,
    pub fit_residual: f64,
}

/// Writes `<stem>.json` and `<stem>.csv`.
pub fn write_table<T: Serialize>(w: &mut StageWriter, stem: &str, schema: &str, rows: &[T]) -> Result<(Artifact, Artifact)> {
    let json = w.write_json(&format!("{}.json", stem), &Table { schema: schema.to_string(), version: TABLE_VERSION, rows })?;
    let mut csv = csv::Writer::from_writer(Vec::new());
    for r in rows {
        csv.serialize(r)?;
    }
    let bytes = csv.into_inner().map_err(|e| anyhow::anyhow!("csv: {}", e))?;
    let csv = w.write(&format!("{}.csv", stem), &bytes)?;
    Ok((json, csv))
}

pub fn read_table<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Table<Vec<T>>> {
    Ok(serde_json::from_str(text)?)
}

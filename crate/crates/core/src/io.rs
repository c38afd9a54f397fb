//! Matrix serialization: the JSON format `{"n": <int>, "entries": [[..]]}`
//! shared by every tool in this workspace, and the CSV alternative of n lines
//! of n comma-separated floats. Parsers reject NaN and infinities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrices::{DistanceMatrix, GaugeMatrix};

/// Wire form of a square matrix: point count plus row-major entries.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub n: usize,
    pub entries: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_gauge(g: &GaugeMatrix) -> Self {
        Self {
            n: g.n(),
            entries: g.rows(),
        }
    }

    pub fn to_gauge(&self) -> Result<GaugeMatrix> {
        if self.entries.len() != self.n {
            return Err(Error::Parse(format!(
                "declared n = {} but found {} rows",
                self.n,
                self.entries.len()
            )));
        }
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != self.n {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    self.n
                )));
            }
        }
        GaugeMatrix::from_rows(&self.entries)
    }

    pub fn to_distance(&self) -> Result<DistanceMatrix> {
        DistanceMatrix::new(self.to_gauge()?)
    }
}

impl From<&GaugeMatrix> for MatrixJson {
    fn from(g: &GaugeMatrix) -> Self {
        Self::from_gauge(g)
    }
}

impl From<&DistanceMatrix> for MatrixJson {
    fn from(d: &DistanceMatrix) -> Self {
        Self::from_gauge(d.as_gauge())
    }
}

pub fn gauge_to_json(g: &GaugeMatrix) -> String {
    // serialization of a well-formed struct cannot fail
    serde_json::to_string_pretty(&MatrixJson::from_gauge(g)).expect("matrix serialization")
}

pub fn gauge_from_json(s: &str) -> Result<GaugeMatrix> {
    let m: MatrixJson = serde_json::from_str(s)?;
    m.to_gauge()
}

pub fn metric_from_json(s: &str) -> Result<DistanceMatrix> {
    let m: MatrixJson = serde_json::from_str(s)?;
    m.to_distance()
}

pub fn gauge_to_csv(g: &GaugeMatrix) -> String {
    let mut out = String::new();
    for i in 0..g.n() {
        let row: Vec<String> = (0..g.n()).map(|j| format!("{}", g.entry(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn gauge_from_csv(s: &str) -> Result<GaugeMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in s.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|field| {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Parse(format!(
                        "line {}: cannot parse '{}'",
                        lineno + 1,
                        field.trim()
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!(
                        "line {}: non-finite value '{}'",
                        lineno + 1,
                        field.trim()
                    )));
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty CSV input".into()));
    }
    GaugeMatrix::from_rows(&rows)
}

pub fn metric_from_csv(s: &str) -> Result<DistanceMatrix> {
    DistanceMatrix::new(gauge_from_csv(s)?)
}

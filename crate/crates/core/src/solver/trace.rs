//! Iteration traces and their line-delimited JSON and CSV forms.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Manifold, ManifoldDescriptor, ManifoldPoint};

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid trace: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TerminationStatus {
    StoppedAtEquilibrium,
    MaxIters,
    FiniteTermination(usize),
    Aborted(String),
    /// Trace assembled from externally supplied points.
    Supplied,
}

/// One iterate. The last record of a solver trace holds the final point and
/// leaves the step columns empty.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub point: ManifoldPoint,
    /// `lambda_k`, used for the step to `x^{k+1}`.
    pub lambda: Option<f64>,
    /// `d(x^k, x^{k+1})`.
    pub step_dist: Option<f64>,
    pub gap: Option<f64>,
    pub dist_to_s: Option<f64>,
    /// `max_{s in S} d(x^{k+1}, s) - d(x^k, s)`.
    pub fejer_slack: Option<f64>,
    pub inner_residual: Option<f64>,
}

impl IterationRecord {
    pub(crate) fn terminal(k: usize, x: &ManifoldPoint, gap: f64, dist_to_s: Option<f64>) -> Self {
        Self {
            k,
            point: x.clone(),
            lambda: None,
            step_dist: None,
            gap: Some(gap),
            dist_to_s,
            fejer_slack: None,
            inner_residual: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub manifold: ManifoldDescriptor,
    pub records: Vec<IterationRecord>,
    pub status: TerminationStatus,
    /// Set for runs on curved manifolds, where convergence is not guaranteed.
    pub experimental: bool,
}

impl IterationTrace {
    pub(crate) fn new(manifold: ManifoldDescriptor) -> Self {
        Self { manifold, records: Vec::new(), status: TerminationStatus::MaxIters, experimental: false }
    }

    /// Trace with only the point column filled in.
    pub fn from_points(points: Vec<ManifoldPoint>) -> Result<Self, TraceIoError> {
        let first = points.first().ok_or_else(|| TraceIoError::Invalid("no points".into()))?;
        let m = first.manifold().clone();
        if points.iter().any(|p| p.manifold() != &m) {
            return Err(TraceIoError::Invalid("points on different manifolds".into()));
        }
        let records = points
            .into_iter()
            .enumerate()
            .map(|(k, point)| IterationRecord {
                k,
                point,
                lambda: None,
                step_dist: None,
                gap: None,
                dist_to_s: None,
                fejer_slack: None,
                inner_residual: None,
            })
            .collect();
        Ok(Self {
            manifold: m.descriptor().clone(),
            records,
            status: TerminationStatus::Supplied,
            experimental: !m.is_flat(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn points(&self) -> Vec<&ManifoldPoint> {
        self.records.iter().map(|r| &r.point).collect()
    }

    pub fn last_point(&self) -> Option<&ManifoldPoint> {
        self.records.last().map(|r| &r.point)
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    k: usize,
    coords: Vec<f64>,
    lambda: Option<f64>,
    step_dist: Option<f64>,
    gap: Option<f64>,
    dist_to_s: Option<f64>,
    fejer_slack: Option<f64>,
    inner_residual: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct Summary {
    status: TerminationStatus,
    manifold: ManifoldDescriptor,
    iterations: usize,
    experimental: bool,
}

#[derive(Serialize, Deserialize)]
struct Footer {
    summary: Summary,
}

impl From<&IterationRecord> for Row {
    fn from(r: &IterationRecord) -> Self {
        Row {
            k: r.k,
            coords: r.point.coords().to_vec(),
            lambda: r.lambda,
            step_dist: r.step_dist,
            gap: r.gap,
            dist_to_s: r.dist_to_s,
            fejer_slack: r.fejer_slack,
            inner_residual: r.inner_residual,
        }
    }
}

/// One JSON object per record, then a `{"summary": ...}` footer line.
pub fn write_jsonl<W: Write>(trace: &IterationTrace, mut w: W) -> Result<(), TraceIoError> {
    for r in &trace.records {
        let line = serde_json::to_string(&Row::from(r)).map_err(|e| TraceIoError::Json { line: r.k, source: e })?;
        writeln!(w, "{line}")?;
    }
    let footer = Footer {
        summary: Summary {
            status: trace.status.clone(),
            manifold: trace.manifold.clone(),
            iterations: trace.records.len(),
            experimental: trace.experimental,
        },
    };
    let line =
        serde_json::to_string(&footer).map_err(|e| TraceIoError::Json { line: trace.records.len(), source: e })?;
    writeln!(w, "{line}")?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<IterationTrace, TraceIoError> {
    let mut rows = Vec::new();
    let mut summary = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if summary.is_some() {
            return Err(TraceIoError::Invalid(format!("line {}: content after the summary", i + 1)));
        }
        let v: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| TraceIoError::Json { line: i + 1, source: e })?;
        if v.get("summary").is_some() {
            let f: Footer = serde_json::from_value(v).map_err(|e| TraceIoError::Json { line: i + 1, source: e })?;
            summary = Some(f.summary);
        } else {
            let row: Row = serde_json::from_value(v).map_err(|e| TraceIoError::Json { line: i + 1, source: e })?;
            rows.push(row);
        }
    }
    let summary = summary.ok_or_else(|| TraceIoError::Invalid("missing summary line".into()))?;
    let m = Manifold::new(summary.manifold.clone())?;
    let records = rows
        .into_iter()
        .map(|row| {
            Ok(IterationRecord {
                k: row.k,
                point: m.point(row.coords)?,
                lambda: row.lambda,
                step_dist: row.step_dist,
                gap: row.gap,
                dist_to_s: row.dist_to_s,
                fejer_slack: row.fejer_slack,
                inner_residual: row.inner_residual,
            })
        })
        .collect::<Result<Vec<_>, TraceIoError>>()?;
    if records.windows(2).any(|w| w[1].k <= w[0].k) {
        return Err(TraceIoError::Invalid("records are not ordered by k".into()));
    }
    Ok(IterationTrace {
        manifold: summary.manifold,
        records,
        status: summary.status,
        experimental: summary.experimental,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Same columns as the JSON form; coordinates joined with `;`.
pub fn write_csv<W: Write>(trace: &IterationTrace, w: W) -> Result<(), TraceIoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "coords", "lambda", "step_dist", "gap", "dist_to_s", "fejer_slack", "inner_residual"])?;
    for r in &trace.records {
        let coords: Vec<String> = r.point.coords().iter().map(|c| c.to_string()).collect();
        out.write_record([
            r.k.to_string(),
            coords.join(";"),
            cell(r.lambda),
            cell(r.step_dist),
            cell(r.gap),
            cell(r.dist_to_s),
            cell(r.fejer_slack),
            cell(r.inner_residual),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let m = Manifold::euclidean(1);
        let pts = vec![m.point(vec![0.5]).unwrap(), m.point(vec![0.75]).unwrap()];
        let mut t = IterationTrace::from_points(pts).unwrap();
        t.records[0].lambda = Some(7.0);
        t.status = TerminationStatus::FiniteTermination(1);
        let mut buf = Vec::new();
        write_jsonl(&t, &mut buf).unwrap();
        let back = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, t);
        let mut csv_buf = Vec::new();
        write_csv(&t, &mut csv_buf).unwrap();
        let text = String::from_utf8(csv_buf).unwrap();
        assert!(text.starts_with("k,coords,lambda"));
        assert!(text.contains("0,0.5,7,"));
    }

    #[test]
    fn missing_summary_is_an_error() {
        let text = "{\"k\":0,\"coords\":[0.5],\"lambda\":null,\"step_dist\":null,\"gap\":null,\"dist_to_s\":null,\"fejer_slack\":null,\"inner_residual\":null}\n";
        assert!(matches!(read_jsonl(text.as_bytes()), Err(TraceIoError::Invalid(_))));
    }
}

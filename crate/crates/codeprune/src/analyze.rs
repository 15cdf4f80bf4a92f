//! Corruption shift analysis.
//!
//! Measures how corruption moves embeddings relative to a model fit on the
//! original data: which cluster each vector falls in before and after, the
//! distance to that centroid, and the sizes of the clusters involved. The
//! model is frozen; corrupted vectors are assigned into it, never clustered
//! anew, so the comparison is not confounded by a refit.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterError, ClusterModel};
use crate::corrupt::CorruptionKind;
use crate::embed::EmbeddingSet;

/// Exclusion threshold on |distance change| used throughout: pairs that stay
/// in their cluster and move less than this are treated as unchanged.
pub const DEFAULT_SHIFT_THRESHOLD: f64 = 0.01;

/// Number of uniform histogram bins per statistic.
pub const HISTOGRAM_BINS: usize = 50;

/// Before/after placement of one original/corrupted pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRecord {
    pub doc_id: String,
    pub kind: CorruptionKind,
    pub cluster_before: usize,
    pub cluster_after: usize,
    pub dist_before: f64,
    pub dist_after: f64,
    pub size_before: usize,
    pub size_after: usize,
}

impl ShiftRecord {
    /// dist_after - dist_before.
    pub fn delta_distance(&self) -> f64 {
        self.dist_after - self.dist_before
    }

    /// size_after - size_before, negative when the pair moved to a smaller
    /// cluster.
    pub fn delta_size(&self) -> i64 {
        self.size_after as i64 - self.size_before as i64
    }

    pub fn changed_cluster(&self) -> bool {
        self.cluster_before != self.cluster_after
    }
}

/// Counts over uniform bins spanning the observed range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn build(values: &[f64]) -> Option<Histogram> {
        if values.is_empty() {
            return None;
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0u64; HISTOGRAM_BINS];
        for &v in values {
            let bin = if hi > lo {
                (((v - lo) / (hi - lo)) * HISTOGRAM_BINS as f64) as usize
            } else {
                0
            };
            counts[bin.min(HISTOGRAM_BINS - 1)] += 1;
        }
        Some(Histogram { lo, hi, counts })
    }
}

/// Aggregates over a record list for one operator kind.
///
/// Fractions count all pairs; means and histograms cover only the pairs that
/// changed non-negligibly (cluster changed, or |distance change| at or above
/// the threshold).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSummary {
    pub kind: CorruptionKind,
    pub n_pairs: usize,
    pub threshold: f64,
    pub frac_changed_cluster: f64,
    pub frac_changed_distance: f64,
    pub n_filtered: usize,
    pub mean_delta_distance: Option<f64>,
    pub mean_delta_cluster_size: Option<f64>,
    pub delta_distance_hist: Option<Histogram>,
    pub delta_size_hist: Option<Histogram>,
}

#[derive(Debug)]
pub enum AnalyzeError {
    /// Original and corrupted sets carry different ids.
    IdMismatch { detail: String },
    Cluster(ClusterError),
    EmptyRecords,
    InvalidThreshold { threshold: f64 },
    Io(std::io::Error),
    MalformedRecord { line: usize, detail: String },
}

impl fmt::Display for AnalyzeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyzeError::IdMismatch { detail } => write!(f, "id-mismatch: {detail}"),
            AnalyzeError::Cluster(e) => write!(f, "{e}"),
            AnalyzeError::EmptyRecords => write!(f, "empty-records"),
            AnalyzeError::InvalidThreshold { threshold } => {
                write!(f, "invalid-threshold: {threshold} must be > 0")
            }
            AnalyzeError::Io(e) => write!(f, "io: {e}"),
            AnalyzeError::MalformedRecord { line, detail } => {
                write!(f, "malformed-record: line {line}: {detail}")
            }
        }
    }
}

impl std::error::Error for AnalyzeError {}

impl From<ClusterError> for AnalyzeError {
    fn from(e: ClusterError) -> Self {
        AnalyzeError::Cluster(e)
    }
}

impl From<std::io::Error> for AnalyzeError {
    fn from(e: std::io::Error) -> Self {
        AnalyzeError::Io(e)
    }
}

/// Assign original and corrupted vectors into the frozen model, one record
/// per shared id, in id order.
pub fn shift_analysis(
    model: &ClusterModel,
    originals: &EmbeddingSet,
    corrupted: &EmbeddingSet,
    kind: CorruptionKind,
) -> Result<Vec<ShiftRecord>, AnalyzeError> {
    if originals.len() != corrupted.len() || originals.ids() != corrupted.ids() {
        let only_orig = originals
            .ids()
            .iter()
            .find(|id| corrupted.get(id).is_none());
        let only_corr = corrupted
            .ids()
            .iter()
            .find(|id| originals.get(id).is_none());
        return Err(AnalyzeError::IdMismatch {
            detail: format!(
                "sets differ (example only in originals: {only_orig:?}, only in corrupted: {only_corr:?})"
            ),
        });
    }
    let records: Vec<ShiftRecord> = (0..originals.len())
        .into_par_iter()
        .map(|i| -> Result<ShiftRecord, AnalyzeError> {
            let id = &originals.ids()[i];
            let before = model.assign_vector(originals.vector(i))?;
            let after = model.assign_vector(corrupted.get(id).expect("ids checked equal"))?;
            Ok(ShiftRecord {
                doc_id: id.clone(),
                kind,
                cluster_before: before.cluster,
                cluster_after: after.cluster,
                dist_before: before.distance,
                dist_after: after.distance,
                size_before: model.sizes()[before.cluster],
                size_after: model.sizes()[after.cluster],
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(records)
}

/// Fold a record list into fractions, filtered means, and histograms.
pub fn summarize(records: &[ShiftRecord], threshold: f64) -> Result<ShiftSummary, AnalyzeError> {
    if records.is_empty() {
        return Err(AnalyzeError::EmptyRecords);
    }
    if !(threshold > 0.0) {
        return Err(AnalyzeError::InvalidThreshold { threshold });
    }
    let n = records.len();
    let changed_cluster = records.iter().filter(|r| r.changed_cluster()).count();
    let changed_distance = records
        .iter()
        .filter(|r| r.delta_distance().abs() >= threshold)
        .count();
    let filtered: Vec<&ShiftRecord> = records
        .iter()
        .filter(|r| r.changed_cluster() || r.delta_distance().abs() >= threshold)
        .collect();

    let delta_distances: Vec<f64> = filtered.iter().map(|r| r.delta_distance()).collect();
    let delta_sizes: Vec<f64> = filtered.iter().map(|r| r.delta_size() as f64).collect();
    let mean = |xs: &[f64]| {
        if xs.is_empty() {
            None
        } else {
            Some(xs.iter().sum::<f64>() / xs.len() as f64)
        }
    };

    Ok(ShiftSummary {
        kind: records[0].kind,
        n_pairs: n,
        threshold,
        frac_changed_cluster: changed_cluster as f64 / n as f64,
        frac_changed_distance: changed_distance as f64 / n as f64,
        n_filtered: filtered.len(),
        mean_delta_distance: mean(&delta_distances),
        mean_delta_cluster_size: mean(&delta_sizes),
        delta_distance_hist: Histogram::build(&delta_distances),
        delta_size_hist: Histogram::build(&delta_sizes),
    })
}

/// Render summaries as a fraction table, one column per operator.
pub fn render_summary_table(summaries: &[ShiftSummary]) -> String {
    let label_width = 42;
    let mut out = String::new();
    out.push_str(&format!("{:label_width$}", ""));
    for s in summaries {
        out.push_str(&format!(" {:>24}", s.kind.name()));
    }
    out.push('\n');
    out.push_str(&format!("{:label_width$}", "Changed cluster"));
    for s in summaries {
        out.push_str(&format!(" {:>24.2}", s.frac_changed_cluster));
    }
    out.push('\n');
    out.push_str(&format!(
        "{:label_width$}",
        "Changed distance from cluster centroid"
    ));
    for s in summaries {
        out.push_str(&format!(" {:>24.2}", s.frac_changed_distance));
    }
    out.push('\n');
    out
}

pub fn write_records<W: Write>(records: &[ShiftRecord], writer: W) -> Result<(), AnalyzeError> {
    let mut w = BufWriter::new(writer);
    for record in records {
        serde_json::to_writer(&mut w, record).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<ShiftRecord>, AnalyzeError> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ShiftRecord =
            serde_json::from_str(&line).map_err(|e| AnalyzeError::MalformedRecord {
                line: i + 1,
                detail: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_records_path<P: AsRef<Path>>(
    records: &[ShiftRecord],
    path: P,
) -> Result<(), AnalyzeError> {
    write_records(records, File::create(path)?)
}

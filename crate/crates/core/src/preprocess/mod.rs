//! From annotated sessions to a clean labeled dataset: annotation
//! averaging, label discretization, outlier deletion, median imputation,
//! standardization statistics, stratified splits, and rebalancing.

mod isolation;

pub use isolation::{detect_outliers, OutlierParams, OutlierReport};

use crate::features::{FeatureId, FeatureVector};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::BufRead;

/// The 4-grade session satisfaction label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum SessionLabel {
    Low = 0,
    Medium = 1,
    High = 2,
    VeryHigh = 3,
}

impl SessionLabel {
    pub const ALL: [SessionLabel; 4] = [
        SessionLabel::Low,
        SessionLabel::Medium,
        SessionLabel::High,
        SessionLabel::VeryHigh,
    ];

    pub fn value(self) -> usize {
        self as usize
    }

    pub fn from_value(v: usize) -> Option<SessionLabel> {
        SessionLabel::ALL.get(v).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SessionLabel::Low => "Low",
            SessionLabel::Medium => "Medium",
            SessionLabel::High => "High",
            SessionLabel::VeryHigh => "Very High",
        }
    }
}

impl From<SessionLabel> for u8 {
    fn from(l: SessionLabel) -> u8 {
        l as u8
    }
}

impl TryFrom<u8> for SessionLabel {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        SessionLabel::from_value(v as usize).ok_or_else(|| format!("label out of range: {v}"))
    }
}

/// Discretize a mean session score in [0, 3] into the 4-grade label.
///
/// Boundaries are inclusive on the lower bucket: 0.67 is still Low,
/// 1.67 still Medium, 2.67 still High.
pub fn discretize_session_label(s: f64) -> Result<SessionLabel> {
    if !s.is_finite() || !(0.0..=3.0).contains(&s) {
        return Err(Error::OutOfRange {
            what: "session score",
            value: s,
        });
    }
    Ok(if s <= 0.67 {
        SessionLabel::Low
    } else if s <= 1.67 {
        SessionLabel::Medium
    } else if s <= 2.67 {
        SessionLabel::High
    } else {
        SessionLabel::VeryHigh
    })
}

/// Discretize a mean search score in [0, 2] into 3 grades.
///
/// Thresholds mirror the session rule over thirds of the range.
pub fn discretize_search_label(q: f64) -> Result<u8> {
    if !q.is_finite() || !(0.0..=2.0).contains(&q) {
        return Err(Error::OutOfRange {
            what: "search score",
            value: q,
        });
    }
    Ok(if q <= 0.67 {
        0
    } else if q <= 1.33 {
        1
    } else {
        2
    })
}

/// Averaged annotator judgments for one session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotatedSession {
    pub goal_id: String,
    pub annotator_scores: Vec<f64>,
    /// One list of per-query scores per annotator.
    pub per_query_scores: Vec<Vec<f64>>,
    /// Mean session score.
    pub s: f64,
    /// Mean search score per query.
    pub q: Vec<f64>,
}

/// Read the annotation CSV: `goal_id,annotator_id,session_score,q1,q2,...`
///
/// Rows are grouped by goal id (first-appearance order); every annotator
/// of a goal must score the same number of queries. Any annotator count
/// >= 1 is accepted.
pub fn read_annotations<R: BufRead>(reader: R) -> Result<Vec<AnnotatedSession>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, (Vec<f64>, Vec<Vec<f64>>)> = HashMap::new();

    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(Error::InconsistentAnnotation {
                goal_id: rec.get(0).unwrap_or("?").to_string(),
                reason: "need at least goal_id, annotator_id, session_score".into(),
            });
        }
        let goal_id = rec[0].to_string();
        let parse = |field: &str, what: &str| -> Result<f64> {
            field.trim().parse::<f64>().map_err(|_| Error::InconsistentAnnotation {
                goal_id: goal_id.clone(),
                reason: format!("bad {what}: {field:?}"),
            })
        };
        let s = parse(&rec[2], "session_score")?;
        if !(0.0..=3.0).contains(&s) {
            return Err(Error::InconsistentAnnotation {
                goal_id,
                reason: format!("session_score {s} outside [0,3]"),
            });
        }
        let mut qs = Vec::new();
        for i in 3..rec.len() {
            if rec[i].trim().is_empty() {
                continue;
            }
            let q = parse(&rec[i], "search score")?;
            if !(0.0..=2.0).contains(&q) {
                return Err(Error::InconsistentAnnotation {
                    goal_id,
                    reason: format!("search score {q} outside [0,2]"),
                });
            }
            qs.push(q);
        }
        if !groups.contains_key(&goal_id) {
            order.push(goal_id.clone());
        }
        let entry = groups.entry(goal_id.clone()).or_default();
        if let Some(first) = entry.1.first() {
            if first.len() != qs.len() {
                return Err(Error::InconsistentAnnotation {
                    goal_id,
                    reason: format!(
                        "annotators disagree on query count ({} vs {})",
                        first.len(),
                        qs.len()
                    ),
                });
            }
        }
        entry.0.push(s);
        entry.1.push(qs);
    }

    Ok(order
        .into_iter()
        .map(|goal_id| {
            let (scores, per_query) = groups.remove(&goal_id).expect("group present");
            let s = scores.iter().sum::<f64>() / scores.len() as f64;
            let n_q = per_query[0].len();
            let q: Vec<f64> = (0..n_q)
                .map(|i| {
                    per_query.iter().map(|a| a[i]).sum::<f64>() / per_query.len() as f64
                })
                .collect();
            AnnotatedSession {
                goal_id,
                annotator_scores: scores,
                per_query_scores: per_query,
                s,
                q,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Matrix utilities
// ---------------------------------------------------------------------------

/// Median of an ascending-sorted non-empty slice.
pub(crate) fn sorted_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Replace missing cells with per-slot medians.
///
/// Returns the dense matrix and the median used per slot; fails when a
/// slot has no observed value at all.
pub fn impute_missing(
    matrix: &[Vec<Option<f64>>],
    slot_names: &[&str],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if matrix.is_empty() {
        return Err(Error::EmptyData);
    }
    let dim = matrix[0].len();
    let mut medians = Vec::with_capacity(dim);
    for f in 0..dim {
        let mut vals: Vec<f64> = matrix.iter().filter_map(|r| r[f]).collect();
        if vals.is_empty() {
            return Err(Error::AllMissingSlot(
                slot_names.get(f).copied().unwrap_or("?").to_string(),
            ));
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push(sorted_median(&vals));
    }
    let dense = matrix
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(f, v)| v.unwrap_or(medians[f]))
                .collect()
        })
        .collect();
    Ok((dense, medians))
}

/// Per-slot mean and (sample) standard deviation of a dense matrix.
pub fn standardization_stats(matrix: &[Vec<f64>]) -> Vec<(f64, f64)> {
    if matrix.is_empty() {
        return Vec::new();
    }
    let n = matrix.len() as f64;
    let dim = matrix[0].len();
    (0..dim)
        .map(|f| {
            let mean = matrix.iter().map(|r| r[f]).sum::<f64>() / n;
            let var = if matrix.len() > 1 {
                matrix.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            (mean, var.sqrt())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Labeled dataset
// ---------------------------------------------------------------------------

/// Dense feature rows with labels and provenance ids.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub goal_ids: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            goal_ids: idx.iter().map(|&i| self.goal_ids[i].clone()).collect(),
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn label_counts(&self, n_labels: usize) -> Vec<usize> {
        let mut counts = vec![0usize; n_labels];
        for &y in &self.y {
            counts[y] += 1;
        }
        counts
    }
}

/// A removed outlier row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemovedRow {
    pub goal_id: String,
    pub score: f64,
}

/// The cleaned dataset plus the statistics needed at prediction time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub data: Dataset,
    /// Per-slot imputation medians, recorded for reuse at prediction time.
    pub imputation: Vec<f64>,
    /// Per-slot (mean, stddev), computed post-imputation.
    pub standardization: Vec<(f64, f64)>,
    pub removed_outliers: Vec<RemovedRow>,
}

/// Build the clean labeled dataset from extracted feature rows.
///
/// Order of operations: outlier deletion on the raw (missing-tolerant)
/// matrix, then median imputation, then standardization statistics.
pub fn build_labeled_dataset(
    rows: Vec<(String, FeatureVector, SessionLabel)>,
    outlier_params: &OutlierParams,
) -> Result<LabeledDataset> {
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    let matrix: Vec<Vec<Option<f64>>> = rows
        .iter()
        .map(|(_, fv, _)| fv.slots().to_vec())
        .collect();
    let report = detect_outliers(&matrix, outlier_params);
    let removed: Vec<RemovedRow> = report
        .flagged
        .iter()
        .map(|&i| RemovedRow {
            goal_id: rows[i].0.clone(),
            score: report.scores[i],
        })
        .collect();

    let keep: Vec<usize> = (0..rows.len())
        .filter(|i| !report.flagged.contains(i))
        .collect();
    let kept_matrix: Vec<Vec<Option<f64>>> = keep.iter().map(|&i| matrix[i].clone()).collect();
    let names: Vec<&str> = FeatureId::ALL.iter().map(|f| f.name()).collect();
    let (dense, medians) = impute_missing(&kept_matrix, &names)?;
    let standardization = standardization_stats(&dense);

    Ok(LabeledDataset {
        data: Dataset {
            goal_ids: keep.iter().map(|&i| rows[i].0.clone()).collect(),
            x: dense,
            y: keep.iter().map(|&i| rows[i].2.value()).collect(),
        },
        imputation: medians,
        standardization,
        removed_outliers: removed,
    })
}

/// Oversample the minority side until `target_label` and the rest are 1:1.
///
/// The original rows are kept in order; sampled duplicates are appended.
pub fn rebalance(dataset: &Dataset, target_label: usize, seed: u64) -> Result<Dataset> {
    let pos: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.y[i] == target_label).collect();
    let neg: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.y[i] != target_label).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let mut idx: Vec<usize> = (0..dataset.len()).collect();
    let (minority, deficit) = if pos.len() < neg.len() {
        (&pos, neg.len() - pos.len())
    } else {
        (&neg, pos.len() - neg.len())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..deficit {
        idx.push(minority[rng.gen_range(0..minority.len())]);
    }
    Ok(dataset.select(&idx))
}

/// Deterministic stratified split into train/valid/test.
pub fn split(
    dataset: &Dataset,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let (r1, r2, r3) = ratios;
    let sum = r1 + r2 + r3;
    if r1 < 0.0 || r2 < 0.0 || r3 < 0.0 || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::BadSplitRatios(sum));
    }
    let max_label = dataset.y.iter().copied().max().unwrap_or(0);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for label in 0..=max_label {
        let mut idx: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.y[i] == label).collect();
        if idx.is_empty() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(seed, label as u64));
        for i in (1..idx.len()).rev() {
            let j = rng.gen_range(0..=i);
            idx.swap(i, j);
        }
        let n = idx.len() as f64;
        let cut1 = (r1 * n).round() as usize;
        let cut2 = ((r1 + r2) * n).round() as usize;
        train.extend_from_slice(&idx[..cut1.min(idx.len())]);
        valid.extend_from_slice(&idx[cut1.min(idx.len())..cut2.min(idx.len())]);
        test.extend_from_slice(&idx[cut2.min(idx.len())..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    test.sort_unstable();
    Ok((
        dataset.select(&train),
        dataset.select(&valid),
        dataset.select(&test),
    ))
}

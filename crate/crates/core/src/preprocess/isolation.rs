//! Isolation forest for unsupervised outlier deletion.
//!
//! Plain axis-parallel isolation trees over a seeded subsample; anomaly
//! score follows the usual 2^(-E[h]/c(psi)) normalization. Rows with
//! missing slots are scored after per-column median substitution, so the
//! detector can run before imputation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Isolation forest parameters.
#[derive(Debug, Clone, Serialize)]
pub struct OutlierParams {
    pub trees: usize,
    pub subsample: usize,
    /// Fraction of rows to flag (top scores).
    pub contamination: f64,
    pub seed: u64,
}

impl Default for OutlierParams {
    fn default() -> Self {
        OutlierParams {
            trees: 100,
            subsample: 256,
            contamination: 0.02,
            seed: 0,
        }
    }
}

/// Flagged rows and the anomaly score of every row.
#[derive(Debug, Clone, Default, Serialize)]
pub struct OutlierReport {
    /// Row indices flagged as outliers, ascending.
    pub flagged: Vec<usize>,
    /// Anomaly score per input row, in input order.
    pub scores: Vec<f64>,
}

enum Node {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    External {
        size: usize,
    },
}

fn harmonic(n: f64) -> f64 {
    n.ln() + 0.577_215_664_901_532_9
}

/// Average unsuccessful-search path length in a BST of n nodes.
fn c_factor(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => 2.0 * harmonic((n - 1) as f64) - 2.0 * (n - 1) as f64 / n as f64,
    }
}

fn build(data: &[Vec<f64>], rows: &mut Vec<usize>, depth: usize, limit: usize, rng: &mut ChaCha8Rng) -> Node {
    if rows.len() <= 1 || depth >= limit {
        return Node::External { size: rows.len() };
    }
    let dim = data[0].len();
    // features that still vary within this node
    let mut candidates = Vec::new();
    for f in 0..dim {
        let first = data[rows[0]][f];
        if rows.iter().any(|&r| data[r][f] != first) {
            candidates.push(f);
        }
    }
    if candidates.is_empty() {
        return Node::External { size: rows.len() };
    }
    let feature = candidates[rng.gen_range(0..candidates.len())];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &r in rows.iter() {
        lo = lo.min(data[r][feature]);
        hi = hi.max(data[r][feature]);
    }
    let threshold = rng.gen_range(lo..hi);
    let mut left_rows: Vec<usize> = rows.iter().copied().filter(|&r| data[r][feature] < threshold).collect();
    let mut right_rows: Vec<usize> = rows.iter().copied().filter(|&r| data[r][feature] >= threshold).collect();
    Node::Internal {
        feature,
        threshold,
        left: Box::new(build(data, &mut left_rows, depth + 1, limit, rng)),
        right: Box::new(build(data, &mut right_rows, depth + 1, limit, rng)),
    }
}

fn path_length(node: &Node, x: &[f64], depth: usize) -> f64 {
    match node {
        Node::External { size } => depth as f64 + c_factor(*size),
        Node::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            if x[*feature] < *threshold {
                path_length(left, x, depth + 1)
            } else {
                path_length(right, x, depth + 1)
            }
        }
    }
}

/// Score rows and flag the top `contamination` fraction.
///
/// Missing cells are substituted with the column median (of observed
/// values) for scoring only. A degenerate matrix where every row scores
/// identically flags nothing.
pub fn detect_outliers(matrix: &[Vec<Option<f64>>], params: &OutlierParams) -> OutlierReport {
    let n = matrix.len();
    if n == 0 {
        return OutlierReport::default();
    }
    let dim = matrix[0].len();

    // median substitution for scoring
    let mut medians = vec![0.0f64; dim];
    for f in 0..dim {
        let mut vals: Vec<f64> = matrix.iter().filter_map(|r| r[f]).collect();
        if !vals.is_empty() {
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians[f] = super::sorted_median(&vals);
        }
    }
    let dense: Vec<Vec<f64>> = matrix
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(f, v)| v.unwrap_or(medians[f]))
                .collect()
        })
        .collect();

    let psi = params.subsample.min(n).max(2);
    let limit = (psi as f64).log2().ceil() as usize;
    let trees: Vec<Node> = crate::par::map_range(params.trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(params.seed, t as u64));
        // subsample without replacement (partial Fisher-Yates)
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..psi {
            let j = rng.gen_range(i..n);
            idx.swap(i, j);
        }
        let mut rows = idx[..psi].to_vec();
        build(&dense, &mut rows, 0, limit, &mut rng)
    });

    let denom = c_factor(psi);
    let scores: Vec<f64> = crate::par::map_slice(&dense, |x| {
        let avg: f64 =
            trees.iter().map(|t| path_length(t, x, 0)).sum::<f64>() / trees.len() as f64;
        2f64.powf(-avg / denom)
    });

    let spread = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let k = (params.contamination * n as f64).floor() as usize;
    let mut flagged = Vec::new();
    if spread > 1e-12 && k > 0 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        flagged = order[..k.min(n)].to_vec();
        flagged.sort_unstable();
    }
    OutlierReport { flagged, scores }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn params(contamination: f64, seed: u64) -> OutlierParams {
        OutlierParams {
            contamination,
            seed,
            ..OutlierParams::default()
        }
    }

    #[test]
    fn planted_outlier_is_flagged() {
        // 100 rows in a tight cluster plus one far point on three slots
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut matrix: Vec<Vec<Option<f64>>> = (0..100)
            .map(|_| {
                (0..6)
                    .map(|_| Some(rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let mut outlier = vec![Some(0.0); 6];
        outlier[0] = Some(50.0);
        outlier[2] = Some(-50.0);
        outlier[4] = Some(50.0);
        matrix.push(outlier);

        let report = detect_outliers(&matrix, &params(0.01, 7));
        assert_eq!(report.flagged, vec![100]);
    }

    #[test]
    fn identical_rows_flag_nothing() {
        let matrix: Vec<Vec<Option<f64>>> = (0..50).map(|_| vec![Some(1.0); 4]).collect();
        let report = detect_outliers(&matrix, &params(0.1, 3));
        assert!(report.flagged.is_empty());
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let matrix: Vec<Vec<Option<f64>>> = (0..80)
            .map(|_| (0..5).map(|_| Some(rng.gen::<f64>())).collect())
            .collect();
        let a = detect_outliers(&matrix, &params(0.05, 11));
        let b = detect_outliers(&matrix, &params(0.05, 11));
        assert_eq!(a.flagged, b.flagged);
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn never_flags_more_than_contamination_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let matrix: Vec<Vec<Option<f64>>> = (0..73)
            .map(|_| (0..4).map(|_| Some(rng.gen::<f64>())).collect())
            .collect();
        let report = detect_outliers(&matrix, &params(0.1, 1));
        assert!(report.flagged.len() <= (0.1f64 * 73.0).ceil() as usize);
    }

    #[test]
    fn missing_cells_tolerated() {
        let mut matrix: Vec<Vec<Option<f64>>> = (0..40)
            .map(|i| vec![Some(i as f64 % 3.0), None, Some(1.0)])
            .collect();
        matrix[10][1] = Some(4.0);
        let report = detect_outliers(&matrix, &params(0.02, 2));
        assert_eq!(report.scores.len(), 40);
    }
}

//! CART classification tree with Gini split search.

use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Classifier;

/// CART parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_depth: 6,
            min_leaf: 2,
            seed: 0,
        }
    }
}

/// Tree node: internal split or leaf distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        dist: Vec<f64>,
        samples: usize,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// A trained classification tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    pub classes: Vec<usize>,
    pub n_features: usize,
}

impl Classifier for TreeModel {
    fn classes(&self) -> &[usize] {
        &self.classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { dist, .. } => return dist.clone(),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

pub(super) struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Best Gini split over the candidate features, or `None` when no split
/// satisfies the leaf-size constraint. Candidates are midpoints between
/// consecutive distinct values; replacement needs strictly higher gain,
/// so ties resolve to the lowest feature then lowest threshold.
pub(super) fn best_gini_split(
    x: &[Vec<f64>],
    y: &[usize],
    rows: &[usize],
    k: usize,
    features: &[usize],
    min_leaf: usize,
) -> Option<BestSplit> {
    let n = rows.len();
    let mut parent = vec![0usize; k];
    for &r in rows {
        parent[y[r]] += 1;
    }
    let parent_gini = gini(&parent, n);
    let mut best: Option<BestSplit> = None;

    for &f in features {
        let mut vals: Vec<(f64, usize)> = rows.iter().map(|&r| (x[r][f], y[r])).collect();
        vals.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
        let mut left = vec![0usize; k];
        let mut n_left = 0usize;
        for i in 0..n - 1 {
            left[vals[i].1] += 1;
            n_left += 1;
            if vals[i].0 == vals[i + 1].0 {
                continue;
            }
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let mut right = vec![0usize; k];
            for c in 0..k {
                right[c] = parent[c] - left[c];
            }
            let weighted = (n_left as f64 * gini(&left, n_left)
                + n_right as f64 * gini(&right, n_right))
                / n as f64;
            let gain = parent_gini - weighted;
            if best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(BestSplit {
                    feature: f,
                    threshold: (vals[i].0 + vals[i + 1].0) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}

fn leaf(y: &[usize], rows: &[usize], k: usize) -> TreeNode {
    let mut counts = vec![0usize; k];
    for &r in rows {
        counts[y[r]] += 1;
    }
    let n = rows.len().max(1) as f64;
    TreeNode::Leaf {
        dist: counts.iter().map(|&c| c as f64 / n).collect(),
        samples: rows.len(),
    }
}

fn is_pure(y: &[usize], rows: &[usize]) -> bool {
    rows.windows(2).all(|w| y[w[0]] == y[w[1]])
}

/// Grow a Gini tree. `mtry` samples that many candidate features per
/// split (forest mode); `None` considers them all.
pub(super) fn grow_gini_tree(
    x: &[Vec<f64>],
    y: &[usize],
    rows: Vec<usize>,
    k: usize,
    depth: usize,
    max_depth: usize,
    min_leaf: usize,
    mtry: Option<usize>,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> TreeNode {
    if rows.is_empty() || depth >= max_depth || is_pure(y, &rows) || rows.len() < 2 * min_leaf {
        return leaf(y, &rows, k);
    }
    let d = x[0].len();
    let features: Vec<usize> = match (mtry, rng.as_deref_mut()) {
        (Some(m), Some(rng)) if m < d => {
            // partial Fisher-Yates, then sort for deterministic scan order
            let mut all: Vec<usize> = (0..d).collect();
            for i in 0..m {
                let j = rng.gen_range(i..d);
                all.swap(i, j);
            }
            let mut chosen = all[..m].to_vec();
            chosen.sort_unstable();
            chosen
        }
        _ => (0..d).collect(),
    };
    match best_gini_split(x, y, &rows, k, &features, min_leaf) {
        None => leaf(y, &rows, k),
        Some(split) => {
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| x[r][split.feature] <= split.threshold);
            let left = grow_gini_tree(
                x, y, left_rows, k, depth + 1, max_depth, min_leaf, mtry, rng,
            );
            let right = grow_gini_tree(
                x, y, right_rows, k, depth + 1, max_depth, min_leaf, mtry, rng,
            );
            TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: Box::new(left),
                right: Box::new(right),
            }
        }
    }
}

/// Train a CART classifier.
///
/// Greedy binary Gini splits; stops on depth, leaf size, or purity. An
/// impure node still splits at zero gain (the gain-maximizing candidate
/// with the lowest feature/threshold), which is what lets depth-2 trees
/// solve parity-style problems.
pub fn train_cart(
    x: &[Vec<f64>],
    y: &[usize],
    k: usize,
    classes: Vec<usize>,
    params: &CartParams,
) -> Result<TreeModel> {
    if x.is_empty() {
        return Err(Error::EmptyData);
    }
    let rows: Vec<usize> = (0..x.len()).collect();
    let root = grow_gini_tree(
        x,
        y,
        rows,
        k,
        0,
        params.max_depth,
        params.min_leaf.max(1),
        None,
        &mut None,
    );
    Ok(TreeModel {
        root,
        classes,
        n_features: x[0].len(),
    })
}

//! Random forest: bagged Gini trees with per-split feature subsampling.

use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow_gini_tree, TreeNode};
use super::Classifier;

/// Per-split feature subsampling rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mtry {
    /// Consider every feature (no subsampling).
    All,
    /// ceil(sqrt(d)) features per split.
    Sqrt,
    Fixed(usize),
}

/// Random forest parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub feature_subsample: Mtry,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 80,
            max_depth: 12,
            min_leaf: 1,
            feature_subsample: Mtry::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

/// A trained forest; prediction averages the tree distributions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub classes: Vec<usize>,
    pub n_features: usize,
}

impl Classifier for ForestModel {
    fn classes(&self) -> &[usize] {
        &self.classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let k = self.classes.len();
        let mut acc = vec![0.0; k];
        for tree in &self.trees {
            let mut node = tree;
            loop {
                match node {
                    TreeNode::Leaf { dist, .. } => {
                        for (a, d) in acc.iter_mut().zip(dist) {
                            *a += d;
                        }
                        break;
                    }
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
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

/// Train a bagged forest. Trees are grown from per-tree seeds derived
/// from `params.seed`, so the ensemble is identical whether trees are
/// built in parallel or sequentially.
pub fn train_forest(
    x: &[Vec<f64>],
    y: &[usize],
    k: usize,
    classes: Vec<usize>,
    params: &ForestParams,
) -> Result<ForestModel> {
    if x.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = x.len();
    let d = x[0].len();
    let mtry = match params.feature_subsample {
        Mtry::All => None,
        Mtry::Sqrt => Some((d as f64).sqrt().ceil() as usize),
        Mtry::Fixed(m) => Some(m.clamp(1, d)),
    };
    let trees: Vec<TreeNode> = crate::par::map_range(params.n_trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(params.seed, t as u64));
        let rows: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        grow_gini_tree(
            x,
            y,
            rows,
            k,
            0,
            params.max_depth,
            params.min_leaf.max(1),
            mtry,
            &mut Some(&mut rng),
        )
    });
    Ok(ForestModel {
        trees,
        classes,
        n_features: d,
    })
}

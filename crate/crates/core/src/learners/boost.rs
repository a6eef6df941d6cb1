//! Regularized second-order gradient-boosted trees with a multiclass
//! softmax objective: per round, one regression tree per class is fit to
//! first/second-order gradients; leaf values are -G/(H+lambda) and splits
//! must clear the gamma penalty.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

use super::Classifier;

/// Boosting parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbtParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Split gain penalty; a split is kept only if gain - gamma > 0.
    pub gamma: f64,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            rounds: 200,
            learning_rate: 0.1,
            max_depth: 4,
            lambda: 1.0,
            gamma: 0.0,
            min_leaf: 1,
            seed: 0,
        }
    }
}

/// Regression tree node with scalar leaf scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum RegNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<RegNode>,
        right: Box<RegNode>,
    },
    Leaf {
        value: f64,
    },
}

impl RegNode {
    fn score(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                RegNode::Leaf { value } => return *value,
                RegNode::Split {
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

/// A trained boosted model.
///
/// `trees[m][k]` is round m's tree for class k; prediction is
/// softmax(base + learning_rate * sum of tree scores).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostedModel {
    pub classes: Vec<usize>,
    pub base_scores: Vec<f64>,
    pub trees: Vec<Vec<RegNode>>,
    pub learning_rate: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Training log-loss after the base round and after every boosting
    /// round, for diagnostics.
    pub round_losses: Vec<f64>,
    pub n_features: usize,
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

impl BoostedModel {
    fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut scores = self.base_scores.clone();
        for round in &self.trees {
            for (k, tree) in round.iter().enumerate() {
                scores[k] += self.learning_rate * tree.score(x);
            }
        }
        scores
    }
}

impl Classifier for BoostedModel {
    fn classes(&self) -> &[usize] {
        &self.classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.raw_scores(x))
    }
}

struct GradSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Best second-order split: max over candidates of
/// 0.5 * (GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)) - gamma, kept only when
/// positive. Ties resolve to the lowest feature then threshold.
fn best_grad_split(
    x: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    rows: &[usize],
    lambda: f64,
    gamma: f64,
    min_leaf: usize,
) -> Option<GradSplit> {
    let n = rows.len();
    if n < 2 * min_leaf {
        return None;
    }
    let g_total: f64 = rows.iter().map(|&r| g[r]).sum();
    let h_total: f64 = rows.iter().map(|&r| h[r]).sum();
    let parent_obj = g_total * g_total / (h_total + lambda);
    let d = x[0].len();
    let mut best: Option<GradSplit> = None;

    for f in 0..d {
        let mut vals: Vec<(f64, f64, f64)> =
            rows.iter().map(|&r| (x[r][f], g[r], h[r])).collect();
        vals.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
        let mut gl = 0.0;
        let mut hl = 0.0;
        for i in 0..n - 1 {
            gl += vals[i].1;
            hl += vals[i].2;
            if vals[i].0 == vals[i + 1].0 {
                continue;
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let gr = g_total - gl;
            let hr = h_total - hl;
            let gain =
                0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_obj) - gamma;
            if gain > 0.0 && best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(GradSplit {
                    feature: f,
                    threshold: (vals[i].0 + vals[i + 1].0) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}

fn grow_reg_tree(
    x: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    rows: Vec<usize>,
    depth: usize,
    params: &GbtParams,
) -> RegNode {
    let make_leaf = |rows: &[usize]| {
        let gs: f64 = rows.iter().map(|&r| g[r]).sum();
        let hs: f64 = rows.iter().map(|&r| h[r]).sum();
        RegNode::Leaf {
            value: -gs / (hs + params.lambda),
        }
    };
    if depth >= params.max_depth || rows.len() <= 1 {
        return make_leaf(&rows);
    }
    match best_grad_split(x, g, h, &rows, params.lambda, params.gamma, params.min_leaf) {
        None => make_leaf(&rows),
        Some(split) => {
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| x[r][split.feature] <= split.threshold);
            RegNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: Box::new(grow_reg_tree(x, g, h, left_rows, depth + 1, params)),
                right: Box::new(grow_reg_tree(x, g, h, right_rows, depth + 1, params)),
            }
        }
    }
}

/// Train the boosted model.
///
/// `y` holds compact class indices in `0..k`; `classes` maps them back
/// to original labels. The base score is the log class prior, so an
/// untrained model (rounds = 0) predicts the empirical distribution.
pub fn train_gbt(
    x: &[Vec<f64>],
    y: &[usize],
    k: usize,
    classes: Vec<usize>,
    params: &GbtParams,
) -> Result<BoostedModel> {
    if x.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = x.len();
    let mut counts = vec![0usize; k];
    for &yi in y {
        counts[yi] += 1;
    }
    let base_scores: Vec<f64> = counts
        .iter()
        .map(|&c| ((c as f64).max(1e-9) / n as f64).ln())
        .collect();

    let mut scores: Vec<Vec<f64>> = vec![base_scores.clone(); n];
    let log_loss = |scores: &[Vec<f64>]| -> f64 {
        let mut total = 0.0;
        for (i, s) in scores.iter().enumerate() {
            let p = softmax(s);
            total -= p[y[i]].max(1e-300).ln();
        }
        total / n as f64
    };
    let mut round_losses = vec![log_loss(&scores)];
    let mut trees: Vec<Vec<RegNode>> = Vec::with_capacity(params.rounds);

    for round in 0..params.rounds {
        // gradients at the round's start, shared by all class trees
        let probs: Vec<Vec<f64>> = crate::par::map_slice(&scores, |s| softmax(s));
        for p in probs.iter().flatten() {
            if !p.is_finite() {
                return Err(Error::NonFiniteGradient {
                    round,
                    detail: "softmax produced a non-finite probability".into(),
                });
            }
        }
        let round_trees: Vec<RegNode> = crate::par::map_range(k, |class| {
            let g: Vec<f64> = (0..n)
                .map(|i| probs[i][class] - f64::from(y[i] == class))
                .collect();
            let h: Vec<f64> = (0..n)
                .map(|i| (probs[i][class] * (1.0 - probs[i][class])).max(1e-16))
                .collect();
            grow_reg_tree(x, &g, &h, (0..n).collect(), 0, params)
        });
        for (i, xi) in x.iter().enumerate() {
            for (class, tree) in round_trees.iter().enumerate() {
                scores[i][class] += params.learning_rate * tree.score(xi);
            }
        }
        trees.push(round_trees);
        round_losses.push(log_loss(&scores));
    }

    Ok(BoostedModel {
        classes,
        base_scores,
        trees,
        learning_rate: params.learning_rate,
        lambda: params.lambda,
        gamma: params.gamma,
        round_losses,
        n_features: x[0].len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rounds: usize) -> GbtParams {
        GbtParams {
            rounds,
            ..GbtParams::default()
        }
    }

    #[test]
    fn zero_rounds_returns_prior() {
        // exact paper-style prior: 182/182/413/223 over 1000 rows
        let mut y = Vec::new();
        for (label, count) in [(0usize, 182), (1, 182), (2, 413), (3, 223)] {
            y.extend(std::iter::repeat(label).take(count));
        }
        let x: Vec<Vec<f64>> = (0..1000).map(|i| vec![i as f64]).collect();
        let m = train_gbt(&x, &y, 4, vec![0, 1, 2, 3], &params(0)).unwrap();
        let p = m.predict_proba(&[55.0]);
        for (got, want) in p.iter().zip([0.182, 0.182, 0.413, 0.223]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn single_class_probability_monotone() {
        // all rows labeled 0 in a 2-class space: p(0) climbs toward 1
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y = vec![0usize; 20];
        let m = train_gbt(&x, &y, 2, vec![0, 1], &params(8)).unwrap();
        let mut prev = 0.0;
        for rounds_used in 0..=8 {
            let partial = BoostedModel {
                trees: m.trees[..rounds_used].to_vec(),
                ..m.clone()
            };
            let p0 = partial.predict_proba(&[5.0])[0];
            assert!(p0 >= prev, "p0 regressed at round {rounds_used}");
            prev = p0;
        }
        assert!(prev > 0.99);
    }

    #[test]
    fn log_loss_strictly_decreases() {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64 / 10.0]).collect();
        let y: Vec<usize> = (0..60).map(|i| usize::from(i >= 30)).collect();
        let m = train_gbt(
            &x,
            &y,
            2,
            vec![0, 1],
            &GbtParams {
                rounds: 10,
                learning_rate: 0.3,
                ..GbtParams::default()
            },
        )
        .unwrap();
        assert_eq!(m.round_losses.len(), 11);
        for w in m.round_losses.windows(2) {
            assert!(w[1] < w[0], "loss did not decrease: {:?}", m.round_losses);
        }
    }

    #[test]
    fn learns_threshold_rule() {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<usize> = (0..100).map(|i| usize::from(i >= 50)).collect();
        let m = train_gbt(&x, &y, 2, vec![0, 1], &params(20)).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(xi, yi)| m.predict(xi) == **yi)
            .count();
        assert_eq!(correct, 100);
    }

    #[test]
    fn deterministic() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![(i % 11) as f64]).collect();
        let y: Vec<usize> = (0..50).map(|i| i % 3).collect();
        let a = serde_json::to_string(&train_gbt(&x, &y, 3, vec![0, 1, 2], &params(5)).unwrap())
            .unwrap();
        let b = serde_json::to_string(&train_gbt(&x, &y, 3, vec![0, 1, 2], &params(5)).unwrap())
            .unwrap();
        assert_eq!(a, b);
    }
}

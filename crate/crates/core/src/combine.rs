//! Multi-class combination of binary classifiers: one-vs-one voting,
//! one-vs-rest, and DAG walks (classic label elimination plus the
//! satisfied-vs-dissatisfied variant whose root separates {0,1} from
//! {2,3}).

use crate::learners::{AnyModel, Classifier, LearnerSpec};
use crate::preprocess::{rebalance, Dataset};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// One trained pairwise classifier with its validation quality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseEntry {
    pub i: usize,
    pub j: usize,
    pub model: AnyModel,
    pub val_precision: f64,
    pub val_recall: f64,
    pub val_f1: f64,
}

/// All C(N,2) pairwise classifiers, ordered by (i, j).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseBank {
    pub n_classes: usize,
    pub entries: Vec<PairwiseEntry>,
}

impl PairwiseBank {
    pub fn entry(&self, i: usize, j: usize) -> &PairwiseEntry {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.entries
            .iter()
            .find(|e| e.i == a && e.j == b)
            .expect("pair present in bank")
    }

    /// Probability the (i, j) classifier assigns to label `want`.
    pub fn pair_prob(&self, i: usize, j: usize, want: usize, x: &[f64]) -> f64 {
        self.entry(i, j).model.prob_of(x, want)
    }
}

fn binary_pair_metrics(model: &AnyModel, x: &[Vec<f64>], y: &[usize], j: usize) -> (f64, f64, f64) {
    // macro precision/recall/F1 over the two sides
    let mut tp = [0usize; 2];
    let mut fp = [0usize; 2];
    let mut fnn = [0usize; 2];
    for (xi, &yi) in x.iter().zip(y) {
        let pred = model.predict(xi);
        let truth_side = usize::from(yi == j);
        let pred_side = usize::from(pred == j);
        if pred_side == truth_side {
            tp[truth_side] += 1;
        } else {
            fp[pred_side] += 1;
            fnn[truth_side] += 1;
        }
    }
    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut f1 = 0.0;
    for side in 0..2 {
        let p = if tp[side] + fp[side] > 0 {
            tp[side] as f64 / (tp[side] + fp[side]) as f64
        } else {
            0.0
        };
        let r = if tp[side] + fnn[side] > 0 {
            tp[side] as f64 / (tp[side] + fnn[side]) as f64
        } else {
            0.0
        };
        precision += p / 2.0;
        recall += r / 2.0;
        f1 += if p + r > 0.0 { 2.0 * p * r / (p + r) / 2.0 } else { 0.0 };
    }
    (precision, recall, f1)
}

/// Train one calibrated binary classifier per label pair.
///
/// Every pair needs at least `min_pair_rows` training rows on each side.
/// Validation precision/recall/F1 are recorded per pair; the classic DAG
/// uses them to pick its root.
pub fn train_pairwise_bank(
    train: &Dataset,
    valid: &Dataset,
    n_classes: usize,
    learner: &LearnerSpec,
    min_pair_rows: usize,
) -> Result<PairwiseBank> {
    let mut pairs = Vec::new();
    for i in 0..n_classes {
        for j in i + 1..n_classes {
            pairs.push((i, j));
        }
    }
    let entries: Vec<Result<PairwiseEntry>> = crate::par::map_slice(&pairs, |&(i, j)| {
        let idx: Vec<usize> = (0..train.len())
            .filter(|&r| train.y[r] == i || train.y[r] == j)
            .collect();
        let count_i = idx.iter().filter(|&&r| train.y[r] == i).count();
        let count_j = idx.len() - count_i;
        let got = count_i.min(count_j);
        if got < min_pair_rows {
            return Err(Error::InsufficientPairData {
                i,
                j,
                min: min_pair_rows,
                got,
            });
        }
        let x: Vec<Vec<f64>> = idx.iter().map(|&r| train.x[r].clone()).collect();
        let y: Vec<usize> = idx.iter().map(|&r| train.y[r]).collect();
        let model = learner.fit(&x, &y)?;

        let vidx: Vec<usize> = (0..valid.len())
            .filter(|&r| valid.y[r] == i || valid.y[r] == j)
            .collect();
        let vx: Vec<Vec<f64>> = vidx.iter().map(|&r| valid.x[r].clone()).collect();
        let vy: Vec<usize> = vidx.iter().map(|&r| valid.y[r]).collect();
        let (val_precision, val_recall, val_f1) = if vx.is_empty() {
            (0.0, 0.0, 0.0)
        } else {
            binary_pair_metrics(&model, &vx, &vy, j)
        };
        Ok(PairwiseEntry {
            i,
            j,
            model,
            val_precision,
            val_recall,
            val_f1,
        })
    });
    let entries: Vec<PairwiseEntry> = entries.into_iter().collect::<Result<_>>()?;
    Ok(PairwiseBank { n_classes, entries })
}

/// One-vs-one voting: every pairwise classifier casts a vote for its
/// favored side; ties break by summed probability mass, then lowest
/// label. Returns the winner and the vote tally.
pub fn predict_ovo(bank: &PairwiseBank, x: &[f64]) -> (usize, Vec<u32>) {
    let n = bank.n_classes;
    let mut votes = vec![0u32; n];
    let mut mass = vec![0.0f64; n];
    for e in &bank.entries {
        let p = e.model.predict_proba(x);
        // classes ascending, so p[0] belongs to e.i
        mass[e.i] += p[0];
        mass[e.j] += p[1];
        if p[0] >= p[1] {
            votes[e.i] += 1;
        } else {
            votes[e.j] += 1;
        }
    }
    let mut winner = 0;
    for c in 1..n {
        if votes[c] > votes[winner]
            || (votes[c] == votes[winner] && mass[c] > mass[winner])
        {
            winner = c;
        }
    }
    (winner, votes)
}

/// One-vs-rest models, one per class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OvrModel {
    /// (class, binary model over {0 rest, 1 class}).
    pub models: Vec<(usize, AnyModel)>,
}

/// Train one-vs-rest with oversampling so each binary problem is 1:1.
pub fn train_ovr(
    train: &Dataset,
    n_classes: usize,
    learner: &LearnerSpec,
    seed: u64,
) -> Result<OvrModel> {
    let classes: Vec<usize> = (0..n_classes).collect();
    let models: Vec<Result<(usize, AnyModel)>> = crate::par::map_slice(&classes, |&c| {
        let binary = Dataset {
            goal_ids: train.goal_ids.clone(),
            x: train.x.clone(),
            y: train.y.iter().map(|&y| usize::from(y == c)).collect(),
        };
        let balanced = rebalance(&binary, 1, crate::seed::mix(seed, c as u64))?;
        let model = learner.fit(&balanced.x, &balanced.y)?;
        Ok((c, model))
    });
    Ok(OvrModel {
        models: models.into_iter().collect::<Result<_>>()?,
    })
}

/// One-vs-rest prediction: the positive label with maximum probability.
pub fn predict_ovr(ovr: &OvrModel, x: &[f64]) -> usize {
    let mut best = ovr.models[0].0;
    let mut best_p = f64::NEG_INFINITY;
    for (c, model) in &ovr.models {
        let p = model.prob_of(x, 1);
        if p > best_p {
            best_p = p;
            best = *c;
        }
    }
    best
}

/// DAG structure over the pairwise bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DagVariant {
    Classic,
    SatDissat,
}

/// Trained DAG combiner. The classic variant walks the bank, at each
/// step consulting the remaining pair with the best validation F1 and
/// eliminating the losing label. The sat-vs-dissat variant first decides
/// {0,1} vs {2,3} with a dedicated grouped-root classifier, then hands
/// off to the matching pairwise classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DagModel {
    pub variant: DagVariant,
    /// Grouped root for the sat-vs-dissat variant (classes {0 dissat, 1 sat}).
    pub root: Option<AnyModel>,
    pub n_classes: usize,
}

/// One decision on the DAG walk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceStep {
    pub node: String,
    pub chosen: String,
    pub prob: f64,
}

/// Train a DAG combiner over an existing bank.
pub fn train_dag(
    train: &Dataset,
    n_classes: usize,
    variant: DagVariant,
    learner: &LearnerSpec,
) -> Result<DagModel> {
    let root = match variant {
        DagVariant::Classic => None,
        DagVariant::SatDissat => {
            if n_classes != 4 {
                return Err(Error::InvalidConfig(
                    "sat-vs-dissat DAG needs exactly 4 classes".into(),
                ));
            }
            let y: Vec<usize> = train.y.iter().map(|&y| usize::from(y >= 2)).collect();
            Some(learner.fit(&train.x, &y)?)
        }
    };
    Ok(DagModel {
        variant,
        root,
        n_classes,
    })
}

/// Walk the DAG for one input. Returns the label and the decision trace.
pub fn predict_dag(dag: &DagModel, bank: &PairwiseBank, x: &[f64]) -> (usize, Vec<TraceStep>) {
    let mut trace = Vec::new();
    match dag.variant {
        DagVariant::SatDissat => {
            let root = dag.root.as_ref().expect("trained sat-dissat root");
            let p_sat = root.prob_of(x, 1);
            let satisfied = p_sat > 0.5;
            trace.push(TraceStep {
                node: "{0,1} vs {2,3}".into(),
                chosen: if satisfied { "{2,3}".into() } else { "{0,1}".into() },
                prob: if satisfied { p_sat } else { 1.0 - p_sat },
            });
            let (i, j) = if satisfied { (2, 3) } else { (0, 1) };
            let p = bank.entry(i, j).model.predict_proba(x);
            let label = if p[0] >= p[1] { i } else { j };
            trace.push(TraceStep {
                node: format!("{i} vs {j}"),
                chosen: label.to_string(),
                prob: p[0].max(p[1]),
            });
            (label, trace)
        }
        DagVariant::Classic => {
            let mut candidates: Vec<usize> = (0..dag.n_classes).collect();
            while candidates.len() > 1 {
                // remaining pair with the best validation F1, lexicographic on ties
                let mut best: Option<&PairwiseEntry> = None;
                for e in &bank.entries {
                    if candidates.contains(&e.i) && candidates.contains(&e.j) {
                        let better = match best {
                            None => true,
                            Some(b) => {
                                e.val_f1 > b.val_f1
                                    || (e.val_f1 == b.val_f1 && (e.i, e.j) < (b.i, b.j))
                            }
                        };
                        if better {
                            best = Some(e);
                        }
                    }
                }
                let e = best.expect("bank covers candidate pairs");
                let p = e.model.predict_proba(x);
                let (keep, drop, prob) = if p[0] >= p[1] {
                    (e.i, e.j, p[0])
                } else {
                    (e.j, e.i, p[1])
                };
                trace.push(TraceStep {
                    node: format!("{} vs {}", e.i, e.j),
                    chosen: keep.to_string(),
                    prob,
                });
                candidates.retain(|&c| c != drop);
            }
            (candidates[0], trace)
        }
    }
}

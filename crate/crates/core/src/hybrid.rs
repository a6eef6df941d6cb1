//! The two-layer hybrid model, the single-query rule+tree model, and the
//! final dispatcher over both.
//!
//! The hybrid layer scores label i as
//! `w_i * sum_j P_j(x; boosted) * P(i | j, x)`, where the conditional
//! comes from the pairwise bank: for i != j it is the (i, j) classifier's
//! probability of i; for i == j it is the mean probability the pair
//! classifiers involving j still give to j. Pruned pairs fall back to the
//! identity conditional. Scores are not renormalized; only the argmax is
//! meaningful.

use crate::combine::PairwiseBank;
use crate::eval;
use crate::features::{
    extract_features, extract_single_query_features, FeatureConfig, QueryStatsTable, ReducedId,
    ReducedFeatureVector, NUM_REDUCED,
};
use crate::learners::{argmax, BoostedModel, Classifier, TreeModel};
use crate::session::Session;
use crate::{Error, Result, NUM_LABELS};
use serde::{Deserialize, Serialize};

/// The two-layer combination model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridModel {
    pub multiclass: BoostedModel,
    pub bank: PairwiseBank,
    /// Per-target-label weights, each in [0, 1], not all zero.
    pub weights: Vec<f64>,
    /// Unordered pairs (i < j) whose conditional is replaced by identity.
    pub pruned: Vec<(usize, usize)>,
}

impl HybridModel {
    pub fn n_classes(&self) -> usize {
        self.bank.n_classes
    }

    fn is_pruned(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.pruned.contains(&key)
    }

    /// Multiclass layer probabilities expanded over 0..n_classes.
    pub fn multiclass_probs(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_classes();
        (0..n).map(|label| self.multiclass.prob_of(x, label)).collect()
    }

    /// Conditional matrix `cond[i][j]` = P(label i | layer one said j).
    pub fn cond_matrix(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n_classes();
        let mut cond = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                cond[i][j] = if i == j {
                    let mut sum = 0.0;
                    for k in (0..n).filter(|&k| k != j) {
                        sum += if self.is_pruned(j, k) {
                            1.0
                        } else {
                            self.bank.pair_prob(j, k, j, x)
                        };
                    }
                    sum / (n - 1) as f64
                } else if self.is_pruned(i, j) {
                    0.0
                } else {
                    self.bank.pair_prob(i, j, i, x)
                };
            }
        }
        cond
    }
}

/// Combine cached layers into per-label scores.
pub fn score_from_parts(
    mc_probs: &[f64],
    cond: &[Vec<f64>],
    weights: &[f64],
) -> Result<Vec<f64>> {
    if weights.iter().all(|w| *w == 0.0) {
        return Err(Error::AllWeightsZero);
    }
    Ok((0..weights.len())
        .map(|i| {
            weights[i]
                * mc_probs
                    .iter()
                    .enumerate()
                    .map(|(j, p)| p * cond[i][j])
                    .sum::<f64>()
        })
        .collect())
}

/// Per-label hybrid scores for one input.
pub fn score_hybrid(model: &HybridModel, x: &[f64]) -> Result<Vec<f64>> {
    let mc = model.multiclass_probs(x);
    let cond = model.cond_matrix(x);
    score_from_parts(&mc, &cond, &model.weights)
}

/// Final hybrid label: argmax of the scores, lowest label on ties.
pub fn predict_hybrid(model: &HybridModel, x: &[f64]) -> Result<usize> {
    Ok(argmax(&score_hybrid(model, x)?))
}

/// Probability adapter over the hybrid layer.
///
/// Hybrid scores are argmax-only; for perturbation-based explanation the
/// surrogate needs a response in [0, 1], so this normalizes the raw
/// scores by their sum. The argmax is unchanged.
pub struct HybridScorer<'a> {
    model: &'a HybridModel,
    classes: Vec<usize>,
}

impl<'a> HybridScorer<'a> {
    pub fn new(model: &'a HybridModel) -> Self {
        HybridScorer {
            classes: (0..model.n_classes()).collect(),
            model,
        }
    }
}

impl Classifier for HybridScorer<'_> {
    fn classes(&self) -> &[usize] {
        &self.classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let n = self.classes.len();
        let scores = score_hybrid(self.model, x).unwrap_or_else(|_| vec![1.0; n]);
        let sum: f64 = scores.iter().sum();
        if sum > 0.0 {
            scores.iter().map(|s| s / sum).collect()
        } else {
            vec![1.0 / n as f64; n]
        }
    }
}

/// Result of the weight grid search.
#[derive(Debug, Clone, Serialize)]
pub struct WeightSearch {
    pub weights: Vec<f64>,
    pub macro_f1: f64,
    /// Number of grid points evaluated.
    pub candidates: usize,
}

/// The weight-independent part of the score: `base[i] = sum_j P_j * cond[i][j]`.
pub fn score_bases(model: &HybridModel, x: &[f64]) -> Vec<f64> {
    let mc = model.multiclass_probs(x);
    let cond = model.cond_matrix(x);
    (0..model.n_classes())
        .map(|i| mc.iter().enumerate().map(|(j, p)| p * cond[i][j]).sum())
        .collect()
}

fn macro_f1_from_confusion(conf: &[u32], n: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..n {
        let tp = conf[c * n + c] as f64;
        let pred: f64 = (0..n).map(|t| conf[t * n + c] as f64).sum();
        let truth: f64 = (0..n).map(|p| conf[c * n + p] as f64).sum();
        let precision = if pred > 0.0 { tp / pred } else { 0.0 };
        let recall = if truth > 0.0 { tp / truth } else { 0.0 };
        if precision + recall > 0.0 {
            total += 2.0 * precision * recall / (precision + recall);
        }
    }
    total / n as f64
}

/// Exhaustive weight search over `{0, step, ..., 1}^N` minus the all-zero
/// point, on precomputed score bases. Maximizes macro-F1; ties take the
/// lexicographically smallest weight vector.
pub fn search_weights(
    bases: &[Vec<f64>],
    truth: &[usize],
    n_classes: usize,
    grid_step: f64,
) -> Result<WeightSearch> {
    if bases.is_empty() || !(1e-6..=1.0).contains(&grid_step) {
        return Err(Error::InvalidConfig(format!(
            "weight search needs rows and a grid step in (0, 1], got step {grid_step}"
        )));
    }
    for label in 0..n_classes {
        if !truth.contains(&label) {
            return Err(Error::MissingLabel(label));
        }
    }
    let ticks = (1.0 / grid_step).round() as usize + 1;
    let total = ticks.pow(n_classes as u32);

    // combo index maps to weights with w_0 as the most significant digit,
    // so ascending index order is lexicographic order of w
    let decode = |combo: usize| -> Vec<f64> {
        let mut w = vec![0.0; n_classes];
        let mut rem = combo;
        for i in (0..n_classes).rev() {
            w[i] = (rem % ticks) as f64 * grid_step;
            rem /= ticks;
        }
        w
    };

    let best = crate::par::min_by_range(
        total - 1,
        |raw| {
            let combo = raw + 1; // skip the all-zero point
            let w = decode(combo);
            let mut conf = vec![0u32; n_classes * n_classes];
            for (base, &t) in bases.iter().zip(truth) {
                let mut best_i = 0;
                let mut best_s = w[0] * base[0];
                for i in 1..n_classes {
                    let s = w[i] * base[i];
                    if s > best_s {
                        best_s = s;
                        best_i = i;
                    }
                }
                conf[t * n_classes + best_i] += 1;
            }
            (macro_f1_from_confusion(&conf, n_classes), combo)
        },
        // total order: best f1 first, then lowest combo (lexicographic w)
        |a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)),
    )
    .expect("grid is nonempty");

    Ok(WeightSearch {
        weights: decode(best.1),
        macro_f1: best.0,
        candidates: total - 1,
    })
}

/// Grid-search hybrid weights on a validation set.
pub fn fit_weights(
    model: &HybridModel,
    valid_x: &[Vec<f64>],
    valid_y: &[usize],
    grid_step: f64,
) -> Result<WeightSearch> {
    let bases: Vec<Vec<f64>> = crate::par::map_slice(valid_x, |x| score_bases(model, x));
    search_weights(&bases, valid_y, model.n_classes(), grid_step)
}

/// Keep only the pairwise conditionals carrying most of the confusion.
///
/// Unordered pairs are ranked by off-diagonal confusion mass
/// `C[i][j] + C[j][i]`; the smallest prefix covering at least
/// `keep_fraction` of the total mass survives, everything else becomes an
/// identity conditional. A `keep_fraction` of 1.0 or more keeps every
/// pair (a prediction no-op); rerun `fit_weights` after pruning.
pub fn prune_paths(
    model: &HybridModel,
    confusion: &[Vec<usize>],
    keep_fraction: f64,
) -> HybridModel {
    let n = model.n_classes();
    let mut out = model.clone();
    if keep_fraction >= 1.0 {
        out.pruned = Vec::new();
        return out;
    }
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    let mut total = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let mass = confusion[i][j] + confusion[j][i];
            pairs.push((i, j, mass));
            total += mass;
        }
    }
    pairs.sort_by(|a, b| b.2.cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let target = keep_fraction * total as f64;
    let mut kept = Vec::new();
    let mut cum = 0usize;
    for (i, j, mass) in &pairs {
        if cum as f64 >= target {
            break;
        }
        kept.push((*i, *j));
        cum += mass;
    }
    let mut pruned: Vec<(usize, usize)> = pairs
        .iter()
        .filter(|(i, j, _)| !kept.contains(&(*i, *j)))
        .map(|(i, j, _)| (*i, *j))
        .collect();
    pruned.sort_unstable();
    out.pruned = pruned;
    out
}

// ---------------------------------------------------------------------------
// Single-query model
// ---------------------------------------------------------------------------

/// Thresholds for the single-query rules.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingleQueryThresholds {
    /// A query at least this frequent counts as hot.
    pub hot_frequency: f64,
    /// A query below this frequency counts as cold.
    pub cold_frequency: f64,
    pub short_duration_ms: f64,
}

impl SingleQueryThresholds {
    /// Derive thresholds from the sidecar table: hot = top 1% of
    /// frequencies, cold = bottom 50%, short = 10 s.
    pub fn from_stats(stats: &QueryStatsTable) -> Self {
        SingleQueryThresholds {
            hot_frequency: stats.frequency_quantile(0.99),
            cold_frequency: stats.frequency_quantile(0.50),
            short_duration_ms: 10_000.0,
        }
    }
}

/// Rule list plus fallback tree for single-query sessions.
///
/// R1: hot query, no click, short session -> Very High (answered by the
/// result page itself). R2: cold query, no click, short session -> Low
/// (gave up). Everything else goes to the tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingleQueryModel {
    pub thresholds: SingleQueryThresholds,
    pub fallback: TreeModel,
    /// Median imputation for the reduced slots, for the fallback path.
    pub imputation: Vec<f64>,
}

/// Which rule (if any) fired for a reduced vector.
fn rule_label(rv: &ReducedFeatureVector, t: &SingleQueryThresholds) -> Option<usize> {
    let freq = rv.get(ReducedId::QueryFrequency).unwrap_or(0.0);
    let no_click = rv.get(ReducedId::NoClick).unwrap_or(0.0) >= 0.5;
    let duration_ms = rv.get(ReducedId::SessionDuration).unwrap_or(f64::MAX) * 1000.0;
    let short = duration_ms <= t.short_duration_ms;
    if freq >= t.hot_frequency && no_click && short {
        return Some(3);
    }
    if no_click && freq < t.cold_frequency && short {
        return Some(0);
    }
    None
}

/// Train the single-query model: fixed rules first, CART on the rows the
/// rules leave over (or on everything if they cover the whole set).
pub fn train_single_query(
    rows: &[ReducedFeatureVector],
    labels: &[usize],
    thresholds: SingleQueryThresholds,
    cart: &crate::learners::CartParams,
) -> Result<SingleQueryModel> {
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    let matrix: Vec<Vec<Option<f64>>> = rows.iter().map(|r| r.slots().to_vec()).collect();
    let names: Vec<&str> = ReducedId::ALL.iter().map(|r| r.name()).collect();
    let (dense, medians) = crate::preprocess::impute_missing(&matrix, &names)?;

    let remaining: Vec<usize> = (0..rows.len())
        .filter(|&i| rule_label(&rows[i], &thresholds).is_none())
        .collect();
    let tree_rows: Vec<usize> = if remaining.is_empty() {
        (0..rows.len()).collect()
    } else {
        remaining
    };
    let x: Vec<Vec<f64>> = tree_rows.iter().map(|&i| dense[i].clone()).collect();
    let y_raw: Vec<usize> = tree_rows.iter().map(|&i| labels[i]).collect();
    let (y, classes) = crate::learners::compact_labels(&y_raw);
    let fallback = crate::learners::train_cart(&x, &y, classes.len(), classes, cart)?;

    Ok(SingleQueryModel {
        thresholds,
        fallback,
        imputation: medians,
    })
}

/// Predict a single-query session's label and per-label scores.
pub fn predict_single_query(model: &SingleQueryModel, rv: &ReducedFeatureVector) -> (usize, Vec<f64>) {
    if let Some(label) = rule_label(rv, &model.thresholds) {
        let mut scores = vec![0.0; NUM_LABELS];
        scores[label] = 1.0;
        return (label, scores);
    }
    let dense: Vec<f64> = rv
        .slots()
        .iter()
        .enumerate()
        .map(|(i, v)| v.unwrap_or(model.imputation[i]))
        .collect();
    debug_assert_eq!(dense.len(), NUM_REDUCED);
    let probs = model.fallback.predict_proba(&dense);
    let mut scores = vec![0.0; NUM_LABELS];
    for (slot, &class) in model.fallback.classes().iter().enumerate() {
        scores[class] = probs[slot];
    }
    (argmax(&scores), scores)
}

// ---------------------------------------------------------------------------
// Final dispatcher
// ---------------------------------------------------------------------------

/// Which sub-model produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Single,
    Hybrid,
}

impl ModelTag {
    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Single => "single",
            ModelTag::Hybrid => "hybrid",
        }
    }
}

/// The deployed model: hybrid for multi-query sessions, rules+tree for
/// single-query ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalModel {
    pub hybrid: HybridModel,
    pub single: SingleQueryModel,
}

/// Everything prediction needs besides the model itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictContext {
    pub feature_config: FeatureConfig,
    /// Median imputation for the 38 full slots.
    pub imputation: Vec<f64>,
    pub query_stats: QueryStatsTable,
}

/// One prediction row.
#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub goal_id: String,
    pub label: usize,
    pub tag: ModelTag,
    pub scores: Vec<f64>,
}

/// Dispatch one session to the right sub-model.
pub fn predict_final(
    model: &FinalModel,
    ctx: &PredictContext,
    session: &Session,
) -> Result<Prediction> {
    if session.is_single_query() {
        let rv = extract_single_query_features(session, &ctx.query_stats, &ctx.feature_config)?;
        let (label, scores) = predict_single_query(&model.single, &rv);
        Ok(Prediction {
            goal_id: session.goal_id.clone(),
            label,
            tag: ModelTag::Single,
            scores,
        })
    } else {
        let fv = extract_features(session, &ctx.feature_config)?;
        let x: Vec<f64> = fv
            .slots()
            .iter()
            .enumerate()
            .map(|(i, v)| v.unwrap_or(ctx.imputation[i]))
            .collect();
        let scores = score_hybrid(&model.hybrid, &x)?;
        Ok(Prediction {
            goal_id: session.goal_id.clone(),
            label: argmax(&scores),
            tag: ModelTag::Hybrid,
            scores,
        })
    }
}

/// Predict a batch of sessions, in order. Parallel when enabled.
pub fn predict_sessions(
    model: &FinalModel,
    ctx: &PredictContext,
    sessions: &[Session],
) -> Result<Vec<Prediction>> {
    crate::par::map_slice(sessions, |s| predict_final(model, ctx, s))
        .into_iter()
        .collect()
}

/// Per-tag and total metrics over a labeled session set, mirroring the
/// single/multiple/total report shape.
#[derive(Debug, Clone, Serialize)]
pub struct DispatchReport {
    pub multi: Option<eval::ClassMetrics>,
    pub single: Option<eval::ClassMetrics>,
    pub total: eval::ClassMetrics,
}

/// Evaluate the dispatcher, reporting metrics per sub-model and overall.
pub fn evaluate_dispatch(
    model: &FinalModel,
    ctx: &PredictContext,
    sessions: &[Session],
    truth: &[usize],
) -> Result<DispatchReport> {
    let preds = predict_sessions(model, ctx, sessions)?;
    let mut m_truth = Vec::new();
    let mut m_pred = Vec::new();
    let mut s_truth = Vec::new();
    let mut s_pred = Vec::new();
    for (p, &t) in preds.iter().zip(truth) {
        match p.tag {
            ModelTag::Hybrid => {
                m_truth.push(t);
                m_pred.push(p.label);
            }
            ModelTag::Single => {
                s_truth.push(t);
                s_pred.push(p.label);
            }
        }
    }
    let all_pred: Vec<usize> = preds.iter().map(|p| p.label).collect();
    Ok(DispatchReport {
        multi: if m_truth.is_empty() {
            None
        } else {
            Some(eval::class_metrics(&m_truth, &m_pred, NUM_LABELS))
        },
        single: if s_truth.is_empty() {
            None
        } else {
            Some(eval::class_metrics(&s_truth, &s_pred, NUM_LABELS))
        },
        total: eval::class_metrics(truth, &all_pred, NUM_LABELS),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combine::{PairwiseBank, PairwiseEntry};
    use crate::learners::{AnyModel, ConstantModel};

    fn constant_bank(n: usize, probs: &[((usize, usize), f64)]) -> PairwiseBank {
        let entries = probs
            .iter()
            .map(|&((i, j), p_i)| PairwiseEntry {
                i,
                j,
                model: AnyModel::Constant(ConstantModel {
                    classes: vec![i, j],
                    probs: vec![p_i, 1.0 - p_i],
                }),
                val_precision: 0.0,
                val_recall: 0.0,
                val_f1: 0.0,
            })
            .collect();
        PairwiseBank {
            n_classes: n,
            entries,
        }
    }

    fn identity_cond(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| f64::from(i == j)).collect())
            .collect()
    }

    #[test]
    fn identity_conditionals_reduce_to_multiclass() {
        let mc = vec![0.1, 0.5, 0.3, 0.1];
        let scores = score_from_parts(&mc, &identity_cond(4), &[1.0; 4]).unwrap();
        for (s, p) in scores.iter().zip(&mc) {
            assert!((s - p).abs() < 1e-12);
        }
        assert_eq!(argmax(&scores), 1);
    }

    #[test]
    fn two_class_stub_scores() {
        // layer one says (0.6, 0.4); the (0,1) classifier gives 0.7 to
        // label 0: score_0 = 0.6*0.7 + 0.4*0.7 = 0.70, score_1 = 0.30
        let bank = constant_bank(2, &[((0, 1), 0.7)]);
        let model = HybridModel {
            multiclass: BoostedModel {
                classes: vec![0, 1],
                base_scores: vec![0.6f64.ln(), 0.4f64.ln()],
                trees: vec![],
                learning_rate: 0.1,
                lambda: 1.0,
                gamma: 0.0,
                round_losses: vec![],
                n_features: 1,
            },
            bank,
            weights: vec![1.0, 1.0],
            pruned: vec![],
        };
        let scores = score_hybrid(&model, &[0.0]).unwrap();
        assert!((scores[0] - 0.70).abs() < 1e-9, "{scores:?}");
        assert!((scores[1] - 0.30).abs() < 1e-9, "{scores:?}");
        assert_eq!(predict_hybrid(&model, &[0.0]).unwrap(), 0);
    }

    #[test]
    fn all_zero_weights_rejected() {
        let err = score_from_parts(&[0.5, 0.5], &identity_cond(2), &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::AllWeightsZero));
    }

    #[test]
    fn argmax_tie_breaks_low() {
        let scores = vec![0.3, 0.3, 0.2, 0.2];
        assert_eq!(argmax(&scores), 0);
        assert_eq!(argmax(&[0.1, 0.2, 0.5, 0.2]), 2);
    }

    #[test]
    fn weight_scaling_keeps_argmax() {
        let bases = [vec![0.3, 0.5, 0.1, 0.6], vec![0.9, 0.2, 0.4, 0.1]];
        let w = [0.4, 0.8, 0.3, 0.5];
        for scale in [0.1, 2.0, 37.5] {
            let ws: Vec<f64> = w.iter().map(|v| v * scale).collect();
            for base in &bases {
                let s1: Vec<f64> = w.iter().zip(base).map(|(a, b)| a * b).collect();
                let s2: Vec<f64> = ws.iter().zip(base).map(|(a, b)| a * b).collect();
                assert_eq!(argmax(&s1), argmax(&s2));
            }
        }
    }

    #[test]
    fn search_weights_perfect_layer_picks_smallest_uniform() {
        // bases equal to a one-hot of the truth: any all-positive uniform
        // w is optimal; lexicographic tie-break lands on (0.1, ..., 0.1)
        let truth = vec![0, 1, 2, 3, 0, 1, 2, 3, 2, 2];
        let bases: Vec<Vec<f64>> = truth
            .iter()
            .map(|&t| (0..4).map(|i| if i == t { 0.9 } else { 0.05 }).collect())
            .collect();
        let ws = search_weights(&bases, &truth, 4, 0.1).unwrap();
        assert!((ws.macro_f1 - 1.0).abs() < 1e-12);
        for w in &ws.weights {
            assert!((w - 0.1).abs() < 1e-9, "weights {:?}", ws.weights);
        }
    }

    #[test]
    fn search_weights_candidate_count() {
        let truth = vec![0, 1, 2, 3];
        let bases: Vec<Vec<f64>> = truth
            .iter()
            .map(|&t| (0..4).map(|i| f64::from(i == t)).collect())
            .collect();
        let ws = search_weights(&bases, &truth, 4, 0.5).unwrap();
        assert_eq!(ws.candidates, 80); // 3^4 - 1
    }

    #[test]
    fn search_weights_missing_label_errors() {
        let truth = vec![0, 1, 2, 2];
        let bases = vec![vec![1.0, 0.0, 0.0, 0.0]; 4];
        let err = search_weights(&bases, &truth, 4, 0.5).unwrap_err();
        assert!(matches!(err, Error::MissingLabel(3)));
    }

    #[test]
    fn search_weights_never_below_uniform() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let truth: Vec<usize> = (0..60).map(|_| rng.gen_range(0..4)).collect();
        let bases: Vec<Vec<f64>> = truth
            .iter()
            .map(|&t| {
                (0..4)
                    .map(|i| rng.gen::<f64>() * 0.5 + if i == t { 0.4 } else { 0.0 })
                    .collect()
            })
            .collect();
        let ws = search_weights(&bases, &truth, 4, 0.25).unwrap();
        // uniform weights are in the grid, so the optimum cannot be worse
        let uniform_pred: Vec<usize> = bases.iter().map(|b| argmax(b)).collect();
        let uniform_f1 = eval::macro_f1(&truth, &uniform_pred, 4);
        assert!(ws.macro_f1 >= uniform_f1 - 1e-12);
    }

    fn dummy_model(pruned: Vec<(usize, usize)>) -> HybridModel {
        HybridModel {
            multiclass: BoostedModel {
                classes: vec![0, 1, 2, 3],
                base_scores: vec![0.25f64.ln(); 4],
                trees: vec![],
                learning_rate: 0.1,
                lambda: 1.0,
                gamma: 0.0,
                round_losses: vec![],
                n_features: 1,
            },
            bank: constant_bank(
                4,
                &[
                    ((0, 1), 0.5),
                    ((0, 2), 0.5),
                    ((0, 3), 0.5),
                    ((1, 2), 0.5),
                    ((1, 3), 0.5),
                    ((2, 3), 0.5),
                ],
            ),
            weights: vec![1.0; 4],
            pruned,
        }
    }

    #[test]
    fn prune_diagonal_confusion_prunes_everything() {
        let model = dummy_model(vec![]);
        let confusion = vec![
            vec![10, 0, 0, 0],
            vec![0, 10, 0, 0],
            vec![0, 0, 10, 0],
            vec![0, 0, 0, 10],
        ];
        let pruned = prune_paths(&model, &confusion, 0.8);
        assert_eq!(pruned.pruned.len(), 6);
        // identity conditionals: reduces to the multiclass layer
        let scores = score_hybrid(&pruned, &[0.0]).unwrap();
        let mc = pruned.multiclass_probs(&[0.0]);
        for (s, p) in scores.iter().zip(&mc) {
            assert!((s - p).abs() < 1e-12);
        }
    }

    #[test]
    fn prune_keeps_only_confused_pair() {
        let model = dummy_model(vec![]);
        let confusion = vec![
            vec![10, 0, 0, 0],
            vec![0, 8, 5, 0],
            vec![0, 4, 9, 0],
            vec![0, 0, 0, 10],
        ];
        let pruned = prune_paths(&model, &confusion, 0.8);
        assert!(!pruned.pruned.contains(&(1, 2)));
        assert_eq!(pruned.pruned.len(), 5);
    }

    #[test]
    fn prune_keep_all_is_noop() {
        let model = dummy_model(vec![(0, 1), (2, 3)]);
        let confusion = vec![vec![0; 4]; 4];
        let pruned = prune_paths(&model, &confusion, 1.0);
        assert!(pruned.pruned.is_empty());
    }

    fn reduced(freq: f64, no_click: bool, duration_s: f64, dwell: f64) -> ReducedFeatureVector {
        let mut rv = ReducedFeatureVector::empty();
        rv.set(ReducedId::QueryFrequency, freq);
        rv.set(ReducedId::QueryClickRatio, 0.3);
        rv.set(ReducedId::NoClick, if no_click { 1.0 } else { 0.0 });
        rv.set(ReducedId::SessionDuration, duration_s);
        rv.set(ReducedId::SumClickDwell, dwell);
        rv.set(ReducedId::NumClick, if no_click { 0.0 } else { 1.0 });
        rv.set(ReducedId::NumClickGe40, 0.0);
        rv.set(ReducedId::NumClickGe60, f64::from(dwell >= 60.0));
        rv.set(ReducedId::NumClickLt20, 0.0);
        rv.set(ReducedId::NumClickLt5, 0.0);
        rv.set(ReducedId::NumClickGe185, 0.0);
        rv.set(ReducedId::NumClickLt10, 0.0);
        rv.set(ReducedId::Qlength, 5.0);
        if !no_click {
            rv.set(ReducedId::ClickDwell, dwell);
            rv.set(ReducedId::AvgClickPos, 2.0);
            rv.set(ReducedId::MinClickPos, 1.0);
            rv.set(ReducedId::MaxClickPos, 3.0);
        }
        rv
    }

    fn thresholds() -> SingleQueryThresholds {
        SingleQueryThresholds {
            hot_frequency: 1000.0,
            cold_frequency: 10.0,
            short_duration_ms: 10_000.0,
        }
    }

    fn single_model() -> SingleQueryModel {
        let rows: Vec<ReducedFeatureVector> = (0..20)
            .map(|i| reduced(50.0, false, 30.0, if i % 2 == 0 { 80.0 } else { 3.0 }))
            .collect();
        let labels: Vec<usize> = (0..20).map(|i| if i % 2 == 0 { 2 } else { 1 }).collect();
        train_single_query(
            &rows,
            &labels,
            thresholds(),
            &crate::learners::CartParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn rule_one_hot_query() {
        let m = single_model();
        let (label, scores) = predict_single_query(&m, &reduced(5000.0, true, 4.0, 0.0));
        assert_eq!(label, 3);
        assert_eq!(scores[3], 1.0);
    }

    #[test]
    fn rule_two_cold_query() {
        let m = single_model();
        let (label, _) = predict_single_query(&m, &reduced(2.0, true, 3.0, 0.0));
        assert_eq!(label, 0);
    }

    #[test]
    fn clicked_session_falls_to_tree() {
        let m = single_model();
        let (label, _) = predict_single_query(&m, &reduced(5000.0, false, 30.0, 80.0));
        assert_eq!(label, 2); // learned from the fixture
        let (label2, _) = predict_single_query(&m, &reduced(50.0, false, 30.0, 3.0));
        assert_eq!(label2, 1);
    }
}

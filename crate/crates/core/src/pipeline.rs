//! End-to-end training orchestration: join annotated sessions, build the
//! labeled dataset, train the boosted layer and the pairwise bank, search
//! hybrid weights, prune by confusion, train the single-query model, and
//! assemble the persisted artifact.

use crate::artifact::{ModelArtifact, FORMAT_VERSION};
use crate::combine::train_pairwise_bank;
use crate::eval::{self, page_cuts_from_training, ClassMetrics};
use crate::explain::TrainMarginals;
use crate::features::{
    extract_all, extract_single_query_features, FeatureConfig, QueryStatsTable,
    ReducedFeatureVector,
};
use crate::hybrid::{
    fit_weights, prune_paths, score_hybrid, FinalModel, HybridModel, SingleQueryModel,
    SingleQueryThresholds,
};
use crate::learners::{
    argmax, compact_labels, train_cart, train_forest, train_gbt, train_logreg, CartParams,
    Classifier, ForestParams, GbtParams, LearnerSpec, LogRegParams, SvmParams, TreeModel,
    TreeNode,
};
use crate::preprocess::{
    build_labeled_dataset, split, AnnotatedSession, Dataset, LabeledDataset, OutlierParams,
    SessionLabel,
};
use crate::session::{derive_dwells, Session, DEFAULT_DWELL_CAP_MS};
use crate::{Error, Result, NUM_LABELS};
use serde::Serialize;
use std::collections::BTreeMap;

// Stage tags for deriving independent substreams from the master seed.
const SEED_OUTLIER: u64 = 0x101;
const SEED_SPLIT: u64 = 0x202;
const SEED_BANK: u64 = 0x303;
const SEED_GBT: u64 = 0x404;
const SEED_SINGLE: u64 = 0x505;

/// Everything `train` needs, with workable defaults.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub seed: u64,
    pub split: (f64, f64, f64),
    pub feature_config: FeatureConfig,
    pub dwell_cap_ms: i64,
    pub outlier: OutlierParams,
    pub gbt: GbtParams,
    pub bank_learner: LearnerSpec,
    pub min_pair_rows: usize,
    pub grid_step: f64,
    pub keep_fraction: f64,
    pub single_cart: CartParams,
    /// None derives thresholds from the query-stats table.
    pub single_thresholds: Option<SingleQueryThresholds>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            split: (0.6, 0.2, 0.2),
            feature_config: FeatureConfig::default(),
            dwell_cap_ms: DEFAULT_DWELL_CAP_MS,
            outlier: OutlierParams::default(),
            gbt: GbtParams::default(),
            // the kept conditionals sit on the most-confused label pairs,
            // which are not linearly separable; small boosted trees hold
            // up there where a linear bank underperforms
            bank_learner: LearnerSpec::Gbt(GbtParams {
                rounds: 60,
                max_depth: 3,
                ..GbtParams::default()
            }),
            min_pair_rows: 5,
            grid_step: 0.1,
            keep_fraction: 0.8,
            single_cart: CartParams::default(),
            single_thresholds: None,
        }
    }
}

/// Training summary written next to the artifact.
#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub n_annotated: usize,
    pub n_multi: usize,
    pub n_single: usize,
    pub outliers_removed: usize,
    pub multiclass_valid_macro_f1: f64,
    pub hybrid_valid_macro_f1: f64,
    pub weights: Vec<f64>,
    pub pruned_pairs: Vec<(usize, usize)>,
    pub grid_candidates: usize,
    pub valid_metrics: ClassMetrics,
    pub test_metrics: Option<ClassMetrics>,
}

/// goal_id -> discretized session label.
pub fn label_map(annotations: &[AnnotatedSession]) -> Result<BTreeMap<String, SessionLabel>> {
    let mut map = BTreeMap::new();
    for a in annotations {
        map.insert(a.goal_id.clone(), crate::preprocess::discretize_session_label(a.s)?);
    }
    Ok(map)
}

/// Build the cleaned multi-query dataset from labeled sessions.
pub fn build_multi_dataset(
    sessions: &[&Session],
    labels: &[SessionLabel],
    cfg: &FeatureConfig,
    outlier: &OutlierParams,
) -> Result<LabeledDataset> {
    let owned: Vec<Session> = sessions.iter().map(|s| (*s).clone()).collect();
    let fvs = extract_all(&owned, cfg);
    let mut rows = Vec::with_capacity(owned.len());
    for ((session, fv), &label) in owned.iter().zip(fvs).zip(labels) {
        rows.push((session.goal_id.clone(), fv?, label));
    }
    build_labeled_dataset(rows, outlier)
}

fn multiclass_confusion(model: &impl Classifier, data: &Dataset, n: usize) -> Vec<Vec<usize>> {
    let mut conf = vec![vec![0usize; n]; n];
    for (x, &y) in data.x.iter().zip(&data.y) {
        let pred = model.predict(x);
        conf[y][pred] += 1;
    }
    conf
}

fn hybrid_predictions(model: &HybridModel, data: &Dataset) -> Result<Vec<usize>> {
    crate::par::map_slice(&data.x, |x| score_hybrid(model, x).map(|s| argmax(&s)))
        .into_iter()
        .collect()
}

/// A single-leaf fallback tree for corpora without single-query sessions.
fn prior_leaf_tree(labels: &[SessionLabel]) -> TreeModel {
    let mut counts = vec![0usize; NUM_LABELS];
    for l in labels {
        counts[l.value()] += 1;
    }
    let total = labels.len().max(1) as f64;
    TreeModel {
        root: TreeNode::Leaf {
            dist: counts.iter().map(|&c| c as f64 / total).collect(),
            samples: labels.len(),
        },
        classes: (0..NUM_LABELS).collect(),
        n_features: crate::features::NUM_REDUCED,
    }
}

/// Train the full final model from ingested sessions, annotations, and
/// the query-stats sidecar. Sessions may arrive with or without derived
/// dwells; derivation is idempotent and applied here.
pub fn train_final_model(
    sessions: &[Session],
    annotations: &[AnnotatedSession],
    stats: &QueryStatsTable,
    cfg: &TrainConfig,
) -> Result<(ModelArtifact, TrainReport)> {
    let labels = label_map(annotations)?;
    let derived: Vec<Session> = crate::par::map_slice(sessions, |s| {
        derive_dwells(s.clone(), cfg.dwell_cap_ms)
    });

    let mut multi: Vec<&Session> = Vec::new();
    let mut multi_labels: Vec<SessionLabel> = Vec::new();
    let mut single: Vec<&Session> = Vec::new();
    let mut single_labels: Vec<SessionLabel> = Vec::new();
    for s in &derived {
        if let Some(&label) = labels.get(&s.goal_id) {
            if s.is_single_query() {
                single.push(s);
                single_labels.push(label);
            } else {
                multi.push(s);
                multi_labels.push(label);
            }
        }
    }
    if multi.is_empty() {
        return Err(Error::EmptyData);
    }

    // labeled multi-query dataset: outliers deleted, imputed
    let mut outlier = cfg.outlier.clone();
    outlier.seed = crate::seed::mix(cfg.seed, SEED_OUTLIER);
    let labeled = build_multi_dataset(&multi, &multi_labels, &cfg.feature_config, &outlier)?;
    let (train, valid, test) = split(&labeled.data, cfg.split, crate::seed::mix(cfg.seed, SEED_SPLIT))?;

    // layer one: boosted multiclass
    let mut gbt_params = cfg.gbt.clone();
    gbt_params.seed = crate::seed::mix(cfg.seed, SEED_GBT);
    let (y_compact, classes) = compact_labels(&train.y);
    let multiclass = train_gbt(&train.x, &y_compact, classes.len(), classes, &gbt_params)?;

    // layer two: pairwise bank
    let mut bank_learner = cfg.bank_learner.clone();
    set_learner_seed(&mut bank_learner, crate::seed::mix(cfg.seed, SEED_BANK));
    let bank = train_pairwise_bank(&train, &valid, NUM_LABELS, &bank_learner, cfg.min_pair_rows)?;

    let mut hybrid = HybridModel {
        multiclass,
        bank,
        weights: vec![1.0; NUM_LABELS],
        pruned: Vec::new(),
    };
    let ws = fit_weights(&hybrid, &valid.x, &valid.y, cfg.grid_step)?;
    hybrid.weights = ws.weights;

    // prune by the multiclass layer's validation confusion, then refit
    let confusion = multiclass_confusion(&hybrid.multiclass, &valid, NUM_LABELS);
    let mut hybrid = prune_paths(&hybrid, &confusion, cfg.keep_fraction);
    let ws = fit_weights(&hybrid, &valid.x, &valid.y, cfg.grid_step)?;
    hybrid.weights = ws.weights.clone();

    // single-query model
    let thresholds = cfg
        .single_thresholds
        .clone()
        .unwrap_or_else(|| SingleQueryThresholds::from_stats(stats));
    let single_model = if single.is_empty() {
        SingleQueryModel {
            thresholds,
            fallback: prior_leaf_tree(&multi_labels),
            imputation: vec![0.0; crate::features::NUM_REDUCED],
        }
    } else {
        let rows: Vec<ReducedFeatureVector> = single
            .iter()
            .map(|s| extract_single_query_features(s, stats, &cfg.feature_config))
            .collect::<Result<_>>()?;
        let y: Vec<usize> = single_labels.iter().map(|l| l.value()).collect();
        let mut cart = cfg.single_cart.clone();
        cart.seed = crate::seed::mix(cfg.seed, SEED_SINGLE);
        crate::hybrid::train_single_query(&rows, &y, thresholds, &cart)?
    };

    // report metrics
    let mc_pred: Vec<usize> = valid.x.iter().map(|x| hybrid.multiclass.predict(x)).collect();
    let mc_f1 = eval::macro_f1(&valid.y, &mc_pred, NUM_LABELS);
    let hybrid_pred = hybrid_predictions(&hybrid, &valid)?;
    let valid_metrics = eval::class_metrics(&valid.y, &hybrid_pred, NUM_LABELS);
    let test_metrics = if test.is_empty() {
        None
    } else {
        let pred = hybrid_predictions(&hybrid, &test)?;
        Some(eval::class_metrics(&test.y, &pred, NUM_LABELS))
    };

    // page-metric quantile cuts over every labeled training session
    let all_sessions: Vec<Session> = multi
        .iter()
        .chain(single.iter())
        .map(|s| (*s).clone())
        .collect();
    let all_labels: Vec<usize> = multi_labels
        .iter()
        .chain(single_labels.iter())
        .map(|l| l.value())
        .collect();
    let page_cuts = page_cuts_from_training(&all_sessions, &all_labels);

    let report = TrainReport {
        n_annotated: labels.len(),
        n_multi: multi.len(),
        n_single: single.len(),
        outliers_removed: labeled.removed_outliers.len(),
        multiclass_valid_macro_f1: mc_f1,
        hybrid_valid_macro_f1: valid_metrics.macro_f1,
        weights: hybrid.weights.clone(),
        pruned_pairs: hybrid.pruned.clone(),
        grid_candidates: ws.candidates,
        valid_metrics,
        test_metrics,
    };

    let artifact = ModelArtifact {
        format_version: FORMAT_VERSION,
        model_kind: "final_session_model".into(),
        class_list: (0..NUM_LABELS).collect(),
        feature_schema: ModelArtifact::schema_names(),
        reduced_schema: ModelArtifact::reduced_names(),
        feature_config: cfg.feature_config.clone(),
        dwell_cap_ms: cfg.dwell_cap_ms,
        imputation_stats: labeled.imputation.clone(),
        standardization_stats: labeled.standardization.clone(),
        marginals: TrainMarginals::from_matrix(&train.x),
        query_stats: stats.clone(),
        page_cuts,
        model: FinalModel {
            hybrid,
            single: single_model,
        },
    };
    Ok((artifact, report))
}

fn set_learner_seed(spec: &mut LearnerSpec, seed: u64) {
    match spec {
        LearnerSpec::Cart(p) => p.seed = seed,
        LearnerSpec::Forest(p) => p.seed = seed,
        LearnerSpec::Gbt(p) => p.seed = seed,
        LearnerSpec::LogReg(p) => p.seed = seed,
        LearnerSpec::LinSvm(p) => p.seed = seed,
    }
}

/// Per-family validation macro-F1 on a fixed split: the boosted trees,
/// random forest, and CART against multinomial logistic regression and
/// one-vs-rest linear SVM.
pub fn model_comparison(train: &Dataset, valid: &Dataset, seed: u64) -> Result<Vec<(String, f64)>> {
    let (y, classes) = compact_labels(&train.y);
    let k = classes.len();
    let mut out = Vec::new();

    let gbt = train_gbt(&train.x, &y, k, classes.clone(), &GbtParams {
        seed: crate::seed::mix(seed, 1),
        ..GbtParams::default()
    })?;
    let pred: Vec<usize> = valid.x.iter().map(|x| gbt.predict(x)).collect();
    out.push(("gbt".to_string(), eval::macro_f1(&valid.y, &pred, NUM_LABELS)));

    let forest = train_forest(&train.x, &y, k, classes.clone(), &ForestParams {
        seed: crate::seed::mix(seed, 2),
        ..ForestParams::default()
    })?;
    let pred: Vec<usize> = valid.x.iter().map(|x| forest.predict(x)).collect();
    out.push(("forest".to_string(), eval::macro_f1(&valid.y, &pred, NUM_LABELS)));

    let cart = train_cart(&train.x, &y, k, classes.clone(), &CartParams::default())?;
    let pred: Vec<usize> = valid.x.iter().map(|x| cart.predict(x)).collect();
    out.push(("cart".to_string(), eval::macro_f1(&valid.y, &pred, NUM_LABELS)));

    let logreg = train_logreg(&train.x, &y, k, classes, &LogRegParams {
        seed: crate::seed::mix(seed, 3),
        ..LogRegParams::default()
    })?;
    let pred: Vec<usize> = valid.x.iter().map(|x| logreg.predict(x)).collect();
    out.push(("logreg".to_string(), eval::macro_f1(&valid.y, &pred, NUM_LABELS)));

    let ovr = crate::combine::train_ovr(
        train,
        NUM_LABELS,
        &LearnerSpec::LinSvm(SvmParams::default()),
        crate::seed::mix(seed, 4),
    )?;
    let pred: Vec<usize> = valid.x.iter().map(|x| crate::combine::predict_ovr(&ovr, x)).collect();
    out.push(("linsvm_ovr".to_string(), eval::macro_f1(&valid.y, &pred, NUM_LABELS)));

    Ok(out)
}

/// Convenience glue used by the CLI and the test harness: generate a
/// synthetic corpus and hand back sessions plus supporting tables.
pub struct SynthCorpus {
    pub sessions: Vec<Session>,
    pub annotations: Vec<AnnotatedSession>,
    pub truth: Vec<(String, usize)>,
    pub stats: QueryStatsTable,
}

pub fn synth_corpus(cfg: &crate::synth::SynthConfig, cap_ms: i64) -> Result<SynthCorpus> {
    let out = crate::synth::synth_generate(cfg)?;
    let outcome = crate::session::sessionize(out.events);
    let sessions: Vec<Session> = outcome
        .sessions
        .into_iter()
        .map(|s| derive_dwells(s, cap_ms))
        .collect();
    // round-trip the annotation rows through the CSV model
    let mut csv_buf = Vec::new();
    {
        let synth_out = crate::synth::SynthOutput {
            events: Vec::new(),
            truth: out.truth.clone(),
            annotations: out.annotations,
            stats: QueryStatsTable::default(),
        };
        synth_out.write_annotations(&mut csv_buf)?;
    }
    let annotations = crate::preprocess::read_annotations(std::io::Cursor::new(csv_buf))?;
    Ok(SynthCorpus {
        sessions,
        annotations,
        truth: out.truth,
        stats: out.stats,
    })
}

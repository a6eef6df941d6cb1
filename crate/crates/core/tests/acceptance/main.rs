//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured values once its assertions hold.

mod oracle;

use sesseval::combine::{
    predict_dag, predict_ovo, train_dag, train_ovr, train_pairwise_bank, DagVariant,
    PairwiseBank, PairwiseEntry,
};
use sesseval::eval::{
    ab_compare, gsb_judge_predictions, page_cuts_from_training, PageMetricKind,
};
use sesseval::explain::{
    abstract_rules, fit_local_surrogate, Bin, Direction, ExplainParams,
    Explanation, SignalFeature, TrainMarginals,
};
use sesseval::features::{extract_all, FeatureConfig, FeatureId};
use sesseval::hybrid::{predict_hybrid, score_hybrid, HybridModel};
use sesseval::learners::{
    argmax, compact_labels, logreg_loss_and_grad, train_cart, train_gbt, AnyModel, CartParams,
    Classifier, ConstantModel, GbtParams, LearnerSpec, SvmParams,
};
use sesseval::pipeline::{
    build_multi_dataset, label_map, model_comparison, synth_corpus, train_final_model,
    TrainConfig,
};
use sesseval::preprocess::{discretize_session_label, split, Dataset, OutlierParams};
use sesseval::stats::{correlation_report, Group};
use sesseval::synth::SynthConfig;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const BENCH_SEED: u64 = 7;

fn multi_corpus(n: usize, seed: u64) -> sesseval::pipeline::SynthCorpus {
    synth_corpus(
        &SynthConfig {
            n_sessions: n,
            seed,
            single_query_fraction: 0.0,
            ..SynthConfig::default()
        },
        600_000,
    )
    .expect("generator")
}

#[test]
fn criterion_01_feature_oracle_equivalence() {
    let start = Instant::now();
    let corpus = multi_corpus(1000, 13);
    assert_eq!(corpus.sessions.len(), 1000);
    let cfg = FeatureConfig::default();
    let fvs = extract_all(&corpus.sessions, &cfg);
    let mut compared = 0usize;
    for (session, fv) in corpus.sessions.iter().zip(fvs) {
        let fv = fv.expect("multi-query extraction");
        let want = oracle::reference_features(session);
        for (slot, (got, want)) in fv.slots().iter().zip(&want).enumerate() {
            match (got, want) {
                (None, None) => {}
                (Some(g), Some(w)) => {
                    if oracle::EXACT_SLOTS.contains(&slot) {
                        assert_eq!(g, w, "slot {slot} {} on {}", FeatureId::ALL[slot].name(), session.goal_id);
                    } else {
                        assert!(
                            (g - w).abs() <= 1e-9,
                            "slot {slot} {}: {g} vs {w} on {}",
                            FeatureId::ALL[slot].name(),
                            session.goal_id
                        );
                    }
                    compared += 1;
                }
                _ => panic!(
                    "slot {slot} {} missingness mismatch on {}: {got:?} vs {want:?}",
                    FeatureId::ALL[slot].name(),
                    session.goal_id,
                    got = got,
                    want = want
                ),
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 5.0,
        "oracle comparison took {elapsed:?}"
    );
    println!(
        "[acceptance] criterion 1 PASS: 1000 sessions x 38 slots match brute force ({compared} values, {elapsed:?})"
    );
}

#[test]
fn criterion_02_label_discretization_boundaries() {
    let cases = [(0.67, 0usize), (1.67, 1), (2.67, 2), (3.0, 3)];
    for (s, want) in cases {
        assert_eq!(discretize_session_label(s).unwrap().value(), want, "s = {s}");
    }
    // interior points for completeness
    assert_eq!(discretize_session_label(0.0).unwrap().value(), 0);
    assert_eq!(discretize_session_label(2.0).unwrap().value(), 2);
    println!("[acceptance] criterion 2 PASS: boundary set {{0.67, 1.67, 2.67, 3.0}} -> {{0, 1, 2, 3}}");
}

#[test]
fn criterion_03_learner_sanity() {
    // XOR at depth 2
    let x = vec![
        vec![0.0, 0.0],
        vec![0.0, 1.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
    ];
    let y = vec![0usize, 1, 1, 0];
    let tree = train_cart(
        &x,
        &y,
        2,
        vec![0, 1],
        &CartParams {
            max_depth: 2,
            min_leaf: 1,
            seed: 0,
        },
    )
    .unwrap();
    let xor_correct = x.iter().zip(&y).filter(|(xi, yi)| tree.predict(xi) == **yi).count();
    assert_eq!(xor_correct, 4, "XOR accuracy must be 1.0");

    // GBT log-loss strictly decreases per round on a 2-class fixture
    let bx: Vec<Vec<f64>> = (0..80).map(|i| vec![i as f64 / 8.0, (i % 5) as f64]).collect();
    let by: Vec<usize> = (0..80).map(|i| usize::from(i >= 40)).collect();
    let gbt = train_gbt(
        &bx,
        &by,
        2,
        vec![0, 1],
        &GbtParams {
            rounds: 10,
            learning_rate: 0.3,
            ..GbtParams::default()
        },
    )
    .unwrap();
    for w in gbt.round_losses.windows(2) {
        assert!(w[1] < w[0], "log-loss not strictly decreasing: {:?}", gbt.round_losses);
    }

    // logistic-regression gradient vs central finite differences
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (n, d, k) = (30, 5, 3);
    let z: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let weights: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect())
        .collect();
    let bias: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let (_, grad_w, grad_b) = logreg_loss_and_grad(&weights, &bias, &z, &y, 0.01);
    let eps = 1e-6;
    let mut max_rel: f64 = 0.0;
    for c in 0..k {
        for f in 0..d {
            let mut plus = weights.clone();
            plus[c][f] += eps;
            let mut minus = weights.clone();
            minus[c][f] -= eps;
            let (lp, _, _) = logreg_loss_and_grad(&plus, &bias, &z, &y, 0.01);
            let (lm, _, _) = logreg_loss_and_grad(&minus, &bias, &z, &y, 0.01);
            let fd = (lp - lm) / (2.0 * eps);
            max_rel = max_rel.max((grad_w[c][f] - fd).abs() / fd.abs().max(1e-8));
        }
        let mut bp = bias.clone();
        bp[c] += eps;
        let mut bm = bias.clone();
        bm[c] -= eps;
        let (lp, _, _) = logreg_loss_and_grad(&weights, &bp, &z, &y, 0.01);
        let (lm, _, _) = logreg_loss_and_grad(&weights, &bm, &z, &y, 0.01);
        let fd = (lp - lm) / (2.0 * eps);
        max_rel = max_rel.max((grad_b[c] - fd).abs() / fd.abs().max(1e-8));
    }
    assert!(max_rel <= 1e-5, "gradient relative error {max_rel}");
    println!(
        "[acceptance] criterion 3 PASS: XOR depth-2 accuracy 1.0; GBT loss strictly decreasing over 10 rounds; logreg gradient rel err {max_rel:.2e}"
    );
}

fn blobs_dataset(seed: u64, n_per_class: usize, spread: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [
        [0.0, 0.0, 1.0],
        [6.0, 0.0, -1.0],
        [0.0, 6.0, 2.0],
        [6.0, 6.0, -2.0],
    ];
    let mut d = Dataset::default();
    for label in 0..4 {
        for i in 0..n_per_class {
            d.goal_ids.push(format!("g{label}_{i}"));
            d.x.push(
                centers[label]
                    .iter()
                    .map(|c| c + rng.gen_range(-spread..spread))
                    .collect(),
            );
            d.y.push(label);
        }
    }
    d
}

#[test]
fn criterion_04_combiner_invariants() {
    let data = blobs_dataset(3, 40, 1.0);
    let learner = LearnerSpec::LinSvm(SvmParams::default());
    let bank = train_pairwise_bank(&data, &data, 4, &learner, 5).unwrap();
    assert_eq!(bank.entries.len(), 6);

    // tally always sums to C(4,2) = 6
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..8.0)).collect();
        let (_, votes) = predict_ovo(&bank, &x);
        assert_eq!(votes.iter().sum::<u32>(), 6);
    }

    // DAG path lengths: classic walks N-1 nodes, sat-dissat exactly 2
    let classic = train_dag(&data, 4, DagVariant::Classic, &learner).unwrap();
    let sat = train_dag(&data, 4, DagVariant::SatDissat, &learner).unwrap();
    for row in data.x.iter().take(20) {
        let (_, trace) = predict_dag(&classic, &bank, row);
        assert_eq!(trace.len(), 3);
        let (_, trace) = predict_dag(&sat, &bank, row);
        assert_eq!(trace.len(), 2);
    }

    // relabeling equivariance over 50 random permutations
    let test_points: Vec<Vec<f64>> = data.x.iter().step_by(7).cloned().collect();
    let base_ovo: Vec<usize> = test_points.iter().map(|x| predict_ovo(&bank, x).0).collect();
    let ovr = train_ovr(&data, 4, &learner, 11).unwrap();
    let base_ovr: Vec<usize> =
        test_points.iter().map(|x| sesseval::combine::predict_ovr(&ovr, x)).collect();
    let mut perm_rng = ChaCha8Rng::seed_from_u64(23);
    for round in 0..50 {
        let mut perm = [0usize, 1, 2, 3];
        for i in (1..4).rev() {
            let j = perm_rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let permuted = Dataset {
            goal_ids: data.goal_ids.clone(),
            x: data.x.clone(),
            y: data.y.iter().map(|&y| perm[y]).collect(),
        };
        let p_bank = train_pairwise_bank(&permuted, &permuted, 4, &learner, 5).unwrap();
        for (x, want) in test_points.iter().zip(&base_ovo) {
            let (got, _) = predict_ovo(&p_bank, x);
            assert_eq!(perm[*want], got, "OvO equivariance broke at round {round}");
        }
        let p_ovr = train_ovr(&permuted, 4, &learner, 11).unwrap();
        for (x, want) in test_points.iter().zip(&base_ovr) {
            let got = sesseval::combine::predict_ovr(&p_ovr, x);
            assert_eq!(perm[*want], got, "OvR equivariance broke at round {round}");
        }
    }
    println!(
        "[acceptance] criterion 4 PASS: OvO tallies sum to 6; DAG paths 3 (classic) / 2 (sat-dissat); equivariance over 50 permutations"
    );
}

fn constant_bank(n: usize) -> PairwiseBank {
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            entries.push(PairwiseEntry {
                i,
                j,
                model: AnyModel::Constant(ConstantModel {
                    classes: vec![i, j],
                    probs: vec![0.5, 0.5],
                }),
                val_precision: 0.0,
                val_recall: 0.0,
                val_f1: 0.0,
            });
        }
    }
    PairwiseBank {
        n_classes: n,
        entries,
    }
}

#[test]
fn criterion_05_hybrid_reduction_and_scaling() {
    // a real boosted layer over random 4-class data
    let data = blobs_dataset(9, 60, 2.5);
    let (y, classes) = compact_labels(&data.y);
    let mc = train_gbt(
        &data.x,
        &y,
        4,
        classes,
        &GbtParams {
            rounds: 25,
            ..GbtParams::default()
        },
    )
    .unwrap();
    let all_pairs: Vec<(usize, usize)> = (0..4)
        .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
        .collect();
    let model = HybridModel {
        multiclass: mc,
        bank: constant_bank(4),
        weights: vec![1.0; 4],
        pruned: all_pairs,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let inputs: Vec<Vec<f64>> = (0..500)
        .map(|_| (0..3).map(|_| rng.gen_range(-3.0..9.0)).collect())
        .collect();
    let mut agree = 0usize;
    for x in &inputs {
        let hybrid_label = predict_hybrid(&model, x).unwrap();
        let mc_label = model.multiclass.predict(x);
        if hybrid_label == mc_label {
            agree += 1;
        }
    }
    assert_eq!(agree, 500, "reduction must agree on every input");

    // positive rescaling never flips the argmax
    let mut scaled = model.clone();
    scaled.weights = vec![0.25; 4];
    let mut rescale_agree = 0usize;
    for x in &inputs {
        let a = argmax(&score_hybrid(&model, x).unwrap());
        let b = argmax(&score_hybrid(&scaled, x).unwrap());
        if a == b {
            rescale_agree += 1;
        }
    }
    assert_eq!(rescale_agree, 500);
    println!(
        "[acceptance] criterion 5 PASS: identity conditionals + uniform weights reproduce the multiclass argmax on 500/500 inputs; rescaling is argmax-invariant"
    );
}

#[test]
fn criterion_06_benchmark_ordering() {
    let start = Instant::now();
    let corpus = synth_corpus(
        &SynthConfig {
            n_sessions: 5000,
            seed: BENCH_SEED,
            ..SynthConfig::default()
        },
        600_000,
    )
    .unwrap();
    let cfg = TrainConfig {
        seed: BENCH_SEED,
        ..TrainConfig::default()
    };
    let (artifact, report) = train_final_model(
        &corpus.sessions,
        &corpus.annotations,
        &corpus.stats,
        &cfg,
    )
    .unwrap();

    assert!(
        report.hybrid_valid_macro_f1 >= report.multiclass_valid_macro_f1,
        "hybrid {:.4} must be >= multiclass {:.4}",
        report.hybrid_valid_macro_f1,
        report.multiclass_valid_macro_f1
    );
    assert!(
        report.multiclass_valid_macro_f1 >= 0.80 && report.hybrid_valid_macro_f1 >= 0.80,
        "both layers must reach 0.80 macro-F1 (mc {:.4}, hybrid {:.4})",
        report.multiclass_valid_macro_f1,
        report.hybrid_valid_macro_f1
    );

    // family ordering on the same labeled data
    let labels = label_map(&corpus.annotations).unwrap();
    let multi: Vec<&sesseval::session::Session> = corpus
        .sessions
        .iter()
        .filter(|s| !s.is_single_query() && labels.contains_key(&s.goal_id))
        .collect();
    let ls: Vec<_> = multi.iter().map(|s| labels[&s.goal_id]).collect();
    let labeled =
        build_multi_dataset(&multi, &ls, &cfg.feature_config, &OutlierParams::default()).unwrap();
    let (train, valid, _) = split(&labeled.data, (0.6, 0.2, 0.2), 4242).unwrap();
    let scores = model_comparison(&train, &valid, BENCH_SEED).unwrap();
    let f1_of = |name: &str| scores.iter().find(|(n, _)| n == name).unwrap().1;
    let (gbt, forest) = (f1_of("gbt"), f1_of("forest"));
    let (logreg, linsvm) = (f1_of("logreg"), f1_of("linsvm_ovr"));
    for (ens_name, ens) in [("gbt", gbt), ("forest", forest)] {
        for (lin_name, lin) in [("logreg", logreg), ("linsvm_ovr", linsvm)] {
            assert!(
                ens >= lin,
                "{ens_name} ({ens:.4}) must be >= {lin_name} ({lin:.4})"
            );
        }
    }

    // evaluate the final dispatcher on everything
    let ctx = artifact.predict_context();
    let truth: Vec<usize> = corpus
        .sessions
        .iter()
        .map(|s| labels[&s.goal_id].value())
        .collect();
    let dispatch =
        sesseval::hybrid::evaluate_dispatch(&artifact.model, &ctx, &corpus.sessions, &truth)
            .unwrap();
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "train + evaluate took {elapsed:?}"
    );
    println!(
        "[acceptance] criterion 6 PASS: hybrid {:.4} >= multiclass {:.4} >= 0.80; ensembles (gbt {gbt:.4}, forest {forest:.4}) >= linear (logreg {logreg:.4}, svm {linsvm:.4}); dispatch total {:.4}; {elapsed:?} < 60s",
        report.hybrid_valid_macro_f1,
        report.multiclass_valid_macro_f1,
        dispatch.total.macro_f1
    );
}

#[test]
fn criterion_07_correlation_structure() {
    let corpus = synth_corpus(
        &SynthConfig {
            n_sessions: 4000,
            seed: BENCH_SEED,
            ..SynthConfig::default()
        },
        600_000,
    )
    .unwrap();
    let labels = label_map(&corpus.annotations).unwrap();
    let multi: Vec<&sesseval::session::Session> = corpus
        .sessions
        .iter()
        .filter(|s| !s.is_single_query())
        .collect();
    let ls: Vec<_> = multi.iter().map(|s| labels[&s.goal_id]).collect();
    let labeled = build_multi_dataset(
        &multi,
        &ls,
        &FeatureConfig::default(),
        &OutlierParams::default(),
    )
    .unwrap();
    let report = correlation_report(&labeled.data, 0.05);

    // monotone outcome signals are significantly positive overall
    for feature in [FeatureId::QNumClickGe60, FeatureId::SSumClickDwell] {
        let cell = report
            .entry(feature, Group::All)
            .unwrap_or_else(|| panic!("{} must be significant in All", feature.name()));
        assert!(cell.r > 0.0, "{} should be positive in All", feature.name());
    }
    // V-shaped cost features flip sign between adjacent groups
    let lm = report
        .entry(FeatureId::SNumQuery, Group::LowMedium)
        .expect("S_num_query significant in L/M");
    let mh = report
        .entry(FeatureId::SNumQuery, Group::MediumHigh)
        .expect("S_num_query significant in M/H");
    assert!(lm.r > 0.0 && mh.r < 0.0, "S_num_query L/M {} vs M/H {}", lm.r, mh.r);
    let lm_click = report
        .entry(FeatureId::SNumClick, Group::LowMedium)
        .expect("S_num_click significant in L/M");
    let hvh_click = report
        .entry(FeatureId::SNumClick, Group::HighVeryHigh)
        .expect("S_num_click significant in H/VH");
    assert!(
        lm_click.r > 0.0 && hvh_click.r < 0.0,
        "S_num_click L/M {} vs H/VH {}",
        lm_click.r,
        hvh_click.r
    );
    println!(
        "[acceptance] criterion 7 PASS: outcome positive in All (Q_num_click_ge60 r={:.3}); S_num_query flips {:.3} -> {:.3}; S_num_click flips {:.3} -> {:.3}",
        report.entry(FeatureId::QNumClickGe60, Group::All).unwrap().r,
        lm.r,
        mh.r,
        lm_click.r,
        hvh_click.r
    );
}

#[test]
fn criterion_08_explanation_fidelity_and_rules() {
    // planted linear model: probability exactly linear in three slots
    struct LinearProbe {
        classes: Vec<usize>,
        coef: Vec<f64>,
        base: f64,
    }
    impl Classifier for LinearProbe {
        fn classes(&self) -> &[usize] {
            &self.classes
        }
        fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
            let p = (self.base + self.coef.iter().zip(x).map(|(c, v)| c * v).sum::<f64>())
                .clamp(0.0, 1.0);
            vec![1.0 - p, p]
        }
    }
    let d = 38;
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let train: Vec<Vec<f64>> = (0..500)
        .map(|_| (0..d).map(|_| rng.gen_range(0.0..10.0)).collect())
        .collect();
    let marginals = TrainMarginals::from_matrix(&train);
    let mut coef = vec![0.0; d];
    coef[4] = 0.02;
    coef[17] = -0.018;
    coef[30] = 0.015;
    let model = LinearProbe {
        classes: vec![0, 1],
        coef: coef.clone(),
        base: 0.6 - (0.02 - 0.018 + 0.015) * 5.0,
    };
    let x = vec![5.0; d];
    let expl = fit_local_surrogate(
        &model,
        &x,
        "probe",
        &marginals,
        &ExplainParams {
            k: 3,
            seed: 77,
            ..ExplainParams::default()
        },
    );
    let found: Vec<usize> = expl.signals.iter().map(|s| s.feature).collect();
    for slot in [4usize, 17, 30] {
        assert!(found.contains(&slot), "missing signal slot {slot}: {found:?}");
    }
    for s in &expl.signals {
        let want = if coef[s.feature] >= 0.0 {
            Direction::Positive
        } else {
            Direction::Negative
        };
        assert_eq!(s.direction, want, "sign of slot {}", s.feature);
    }
    assert!(expl.fidelity >= 0.99, "fidelity {}", expl.fidelity);

    // rule abstraction over a 500-explanation corpus
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bins = [Bin::VeryLow, Bin::Low, Bin::Medium, Bin::High, Bin::VeryHigh];
    let corpus: Vec<Explanation> = (0..500)
        .map(|i| {
            let n_signals = rng.gen_range(1..=3);
            let signals = (0..n_signals)
                .map(|_| {
                    let feature = rng.gen_range(0..d);
                    let weight: f64 = rng.gen_range(-1.0..1.0);
                    SignalFeature {
                        feature,
                        name: FeatureId::ALL[feature].name().to_string(),
                        weight,
                        direction: if weight >= 0.0 {
                            Direction::Positive
                        } else {
                            Direction::Negative
                        },
                        value: rng.gen_range(0.0..10.0),
                        bin: Some(bins[rng.gen_range(0..5)]),
                    }
                })
                .collect();
            Explanation {
                goal_id: format!("e{i}"),
                label: rng.gen_range(0..4),
                signals,
                fidelity: 1.0,
            }
        })
        .collect();
    let rules = abstract_rules(&corpus, 0.98);
    assert!(rules.coverage >= 0.98, "coverage {}", rules.coverage);
    assert!(
        rules.rules.len() <= rules.distinct_signatures,
        "{} rules vs {} signatures",
        rules.rules.len(),
        rules.distinct_signatures
    );
    println!(
        "[acceptance] criterion 8 PASS: 3/3 planted signals with correct signs, fidelity {:.4}; {} rules cover {:.3} of 500 (<= {} signatures)",
        expl.fidelity,
        rules.rules.len(),
        rules.coverage,
        rules.distinct_signatures
    );
}

#[test]
fn criterion_09_ab_and_gsb_harness() {
    // a trained model for scoring
    let corpus = synth_corpus(
        &SynthConfig {
            n_sessions: 1500,
            seed: 3,
            ..SynthConfig::default()
        },
        600_000,
    )
    .unwrap();
    let (artifact, _) = train_final_model(
        &corpus.sessions,
        &corpus.annotations,
        &corpus.stats,
        &TrainConfig {
            seed: 3,
            gbt: GbtParams {
                rounds: 80,
                ..GbtParams::default()
            },
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let ctx = artifact.predict_context();

    // identical groups: all deltas zero, CIs contain zero
    let same = ab_compare(
        &corpus.sessions,
        &corpus.sessions,
        &artifact.model,
        &ctx,
        200,
        5,
    )
    .unwrap();
    assert_eq!(same.deltas.model_score, 0.0);
    assert_eq!(same.deltas.click_ratio, 0.0);
    assert!(same.ci95.model_score.0 <= 0.0 && same.ci95.model_score.1 >= 0.0);

    // treatment with the prior shifted toward Very High
    let control = synth_corpus(
        &SynthConfig {
            n_sessions: 2000,
            seed: 19,
            ..SynthConfig::default()
        },
        600_000,
    )
    .unwrap();
    let treatment = synth_corpus(
        &SynthConfig {
            n_sessions: 2000,
            seed: 23,
            label_prior: [0.05, 0.10, 0.25, 0.60],
            ..SynthConfig::default()
        },
        600_000,
    )
    .unwrap();
    let shifted = ab_compare(
        &control.sessions,
        &treatment.sessions,
        &artifact.model,
        &ctx,
        1000,
        5,
    )
    .unwrap();
    assert!(
        shifted.deltas.model_score > 0.0,
        "shifted delta {}",
        shifted.deltas.model_score
    );
    assert!(
        shifted.ci95.model_score.0 > 0.0,
        "CI must exclude zero: {:?}",
        shifted.ci95.model_score
    );

    // bootstrap determinism
    let again = ab_compare(
        &control.sessions,
        &treatment.sessions,
        &artifact.model,
        &ctx,
        1000,
        5,
    )
    .unwrap();
    assert_eq!(
        serde_json::to_string(&shifted.ci95).unwrap(),
        serde_json::to_string(&again.ci95).unwrap()
    );

    // a perfect model is never strictly worse than the page metric
    let labels = label_map(&control.annotations).unwrap();
    let truth: Vec<usize> = control
        .sessions
        .iter()
        .map(|s| labels[&s.goal_id].value())
        .collect();
    let cuts = page_cuts_from_training(&control.sessions, &truth);
    for kind in PageMetricKind::ALL {
        let tally = gsb_judge_predictions(&control.sessions, &truth, &truth, kind, &cuts);
        assert_eq!(tally.bad, 0, "{}: perfect model judged worse", kind.name());
        assert_eq!(tally.good + tally.same + tally.bad, control.sessions.len());
    }
    println!(
        "[acceptance] criterion 9 PASS: identical groups delta 0; shifted-prior delta {:+.4} with CI ({:+.4}, {:+.4}) excluding 0; perfect-model GSB has Bad = 0",
        shifted.deltas.model_score, shifted.ci95.model_score.0, shifted.ci95.model_score.1
    );
}

#[test]
fn criterion_10_pipeline_determinism() {
    let run = || -> (String, String, String, String) {
        let corpus = synth_corpus(
            &SynthConfig {
                n_sessions: 600,
                seed: 21,
                ..SynthConfig::default()
            },
            600_000,
        )
        .unwrap();
        let (artifact, report) = train_final_model(
            &corpus.sessions,
            &corpus.annotations,
            &corpus.stats,
            &TrainConfig {
                seed: 21,
                gbt: GbtParams {
                    rounds: 60,
                    ..GbtParams::default()
                },
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let ctx = artifact.predict_context();
        let labels = label_map(&corpus.annotations).unwrap();
        let truth: Vec<usize> = corpus
            .sessions
            .iter()
            .map(|s| labels[&s.goal_id].value())
            .collect();
        let metrics =
            sesseval::hybrid::evaluate_dispatch(&artifact.model, &ctx, &corpus.sessions, &truth)
                .unwrap();
        let preds =
            sesseval::hybrid::predict_sessions(&artifact.model, &ctx, &corpus.sessions).unwrap();
        (
            serde_json::to_string(&artifact).unwrap(),
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&metrics).unwrap(),
            serde_json::to_string(&preds).unwrap(),
        )
    };
    let a = run();
    let b = run();
    assert_eq!(a.0, b.0, "model artifacts differ");
    assert_eq!(a.1, b.1, "train reports differ");
    assert_eq!(a.2, b.2, "metric files differ");
    assert_eq!(a.3, b.3, "prediction reports differ");
    println!(
        "[acceptance] criterion 10 PASS: two pipeline runs produced byte-identical artifact ({} bytes), report, metrics, and predictions",
        a.0.len()
    );
}

//! `sesseval` - session-level search satisfaction evaluation pipeline.
//!
//! Subcommands: synth, ingest, extract, analyze, train, predict, explain,
//! abtest, gsb, evaluate. All outputs land under `--out` with fixed file
//! names; reruns overwrite. One master `--seed` drives every stochastic
//! stage, so identical invocations produce identical bytes.

mod settings;

use anyhow::Context;
use clap::{Parser, Subcommand};
use sesseval::artifact::ModelArtifact;
use sesseval::eval::{ab_compare, gsb_judge, write_gsb_csv, GsbTally, PageMetricKind};
use sesseval::explain::{
    abstract_rules, discretize_explanation, fit_local_surrogate, write_explanations_jsonl,
    write_rules_csv, ExplainParams,
};
use sesseval::features::{
    extract_single_query_features, write_feature_csv, write_reduced_csv,
    FeatureConfig, JaccardTokens, QueryStatsTable,
};
use sesseval::hybrid::{predict_sessions, HybridScorer, SingleQueryThresholds};
use sesseval::learners::GbtParams;
use sesseval::pipeline::{
    build_multi_dataset, label_map, train_final_model, TrainConfig,
};
use sesseval::preprocess::{read_annotations, OutlierParams};
use sesseval::session::{ingest, read_sessions, write_sessions, Session, DEFAULT_DWELL_CAP_MS};
use sesseval::stats::correlation_report;
use sesseval::synth::{read_truth, synth_generate, SynthConfig};
use settings::{pick, FileConfig};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "sesseval", version, about = "Session-level search satisfaction evaluation")]
struct Cli {
    /// Flat TOML config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed threaded through every stochastic stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus: events.jsonl, annotations.csv,
    /// truth.csv, query_stats.tsv.
    Synth {
        /// Number of sessions.
        #[arg(long)]
        n: Option<usize>,
        /// Fraction of single-query sessions.
        #[arg(long)]
        single_fraction: Option<f64>,
        /// Probability of drawing behavior from an adjacent label.
        #[arg(long)]
        adjacent_confusion: Option<f64>,
    },
    /// Parse an event log and sessionize it into sessions.jsonl.
    Ingest {
        /// Event log (JSON Lines).
        #[arg(long)]
        input: PathBuf,
        /// Fail on malformed lines instead of reporting them.
        #[arg(long)]
        strict: bool,
        /// Dwell cap in milliseconds.
        #[arg(long)]
        cap_ms: Option<i64>,
    },
    /// Export feature matrices (features.csv, single_features.csv).
    Extract {
        /// Session store (sessions.jsonl from ingest).
        #[arg(long)]
        input: PathBuf,
        /// Query stats sidecar TSV for single-query features.
        #[arg(long)]
        query_stats: Option<PathBuf>,
    },
    /// Correlation study against annotated satisfaction labels.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        /// Significance level for omitting cells.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Train the full model and write the artifact plus a report.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        query_stats: Option<PathBuf>,
        /// Artifact output path (default <out>/model.json).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Weight grid step.
        #[arg(long)]
        grid_step: Option<f64>,
        /// Confusion mass fraction kept by pruning.
        #[arg(long)]
        keep_fraction: Option<f64>,
        #[arg(long)]
        gbt_rounds: Option<usize>,
    },
    /// Predict labels for a session store.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Explain predictions and abstract rules over the corpus.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Rule coverage target.
        #[arg(long)]
        coverage_target: Option<f64>,
        /// Perturbation sample size.
        #[arg(long)]
        lime_samples: Option<usize>,
        /// Signals kept per explanation.
        #[arg(long)]
        lime_top_k: Option<usize>,
    },
    /// Compare a treatment group against a control group.
    Abtest {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        control: PathBuf,
        #[arg(long)]
        treatment: PathBuf,
        #[arg(long)]
        bootstrap_n: Option<usize>,
    },
    /// Good/Same/Bad adjudication against page-level metrics.
    Gsb {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// One of has_click_ratio, click_ratio, long_click_ratio;
        /// default judges all three.
        #[arg(long)]
        metric: Option<String>,
    },
    /// Metrics of the trained model against a truth file.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        let code = err
            .downcast_ref::<sesseval::Error>()
            .map(|e| e.code())
            .unwrap_or("cli.Error");
        let payload = serde_json::json!({
            "error": { "code": code, "message": format!("{err:#}") }
        });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}

fn open_reader(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

fn create_writer(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn load_sessions(path: &Path) -> anyhow::Result<Vec<Session>> {
    Ok(read_sessions(open_reader(path)?)?)
}

fn load_stats(path: Option<&PathBuf>) -> anyhow::Result<QueryStatsTable> {
    match path {
        None => Ok(QueryStatsTable::default()),
        Some(p) => Ok(QueryStatsTable::read_tsv(open_reader(p)?)?),
    }
}

fn load_artifact(path: &Path) -> anyhow::Result<ModelArtifact> {
    Ok(ModelArtifact::load(path)?)
}

fn feature_config(file: &FileConfig) -> FeatureConfig {
    let mut cfg = FeatureConfig::default();
    if let Some(t) = file.short_dwell_lt {
        cfg.dwell.q_click_lt20 = t;
    }
    if let Some(tokens) = &file.jaccard_tokens {
        cfg.jaccard_tokens = match tokens.as_str() {
            "whitespace" => JaccardTokens::Whitespace,
            _ => JaccardTokens::Chars,
        };
    }
    cfg
}

fn truth_map(path: &Path) -> anyhow::Result<BTreeMap<String, usize>> {
    Ok(read_truth(open_reader(path)?)?.into_iter().collect())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("cannot create output dir {}", cli.out.display()))?;
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = pick(cli.seed, file.seed, 0);
    let out = cli.out.clone();

    match cli.command {
        Command::Synth {
            n,
            single_fraction,
            adjacent_confusion,
        } => {
            let mut cfg = SynthConfig {
                n_sessions: pick(n, file.n, 1000),
                seed,
                ..SynthConfig::default()
            };
            cfg.single_query_fraction =
                pick(single_fraction, file.single_fraction, cfg.single_query_fraction);
            cfg.adjacent_confusion =
                pick(adjacent_confusion, file.adjacent_confusion, cfg.adjacent_confusion);
            let output = synth_generate(&cfg)?;
            output.write_events(create_writer(&out.join("events.jsonl"))?)?;
            output.write_annotations(create_writer(&out.join("annotations.csv"))?)?;
            output.write_truth(create_writer(&out.join("truth.csv"))?)?;
            output.stats.write_tsv(create_writer(&out.join("query_stats.tsv"))?)?;
            eprintln!(
                "synth: {} sessions, {} events -> {}",
                cfg.n_sessions,
                output.events.len(),
                out.display()
            );
        }

        Command::Ingest { input, strict, cap_ms } => {
            let strict = strict || file.strict.unwrap_or(false);
            let cap = pick(cap_ms, file.cap_ms, DEFAULT_DWELL_CAP_MS);
            let (sessions, report) = ingest(open_reader(&input)?, strict, cap)?;
            write_sessions(create_writer(&out.join("sessions.jsonl"))?, &sessions)?;
            let mut w = create_writer(&out.join("ingest_report.json"))?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            w.write_all(b"\n")?;
            eprintln!(
                "ingest: {} events -> {} sessions ({} malformed, {} orphans, {} queryless goals)",
                report.events,
                sessions.len(),
                report.malformed.len(),
                report.orphans.len(),
                report.dropped_goals.len()
            );
        }

        Command::Extract { input, query_stats } => {
            let sessions = load_sessions(&input)?;
            let stats = load_stats(query_stats.as_ref())?;
            let cfg = feature_config(&file);
            let mut full = Vec::new();
            let mut reduced = Vec::new();
            for s in &sessions {
                if s.is_single_query() {
                    reduced.push((
                        s.goal_id.clone(),
                        extract_single_query_features(s, &stats, &cfg)?,
                    ));
                } else {
                    full.push((s.goal_id.clone(), sesseval::features::extract_features(s, &cfg)?));
                }
            }
            write_feature_csv(create_writer(&out.join("features.csv"))?, &full)?;
            write_reduced_csv(create_writer(&out.join("single_features.csv"))?, &reduced)?;
            eprintln!(
                "extract: {} multi-query rows, {} single-query rows",
                full.len(),
                reduced.len()
            );
        }

        Command::Analyze {
            input,
            annotations,
            alpha,
        } => {
            let sessions = load_sessions(&input)?;
            let anns = read_annotations(open_reader(&annotations)?)?;
            let labels = label_map(&anns)?;
            let alpha = pick(alpha, file.alpha, 0.05);
            let mut multi = Vec::new();
            let mut multi_labels = Vec::new();
            for s in &sessions {
                if let Some(&l) = labels.get(&s.goal_id) {
                    if !s.is_single_query() {
                        multi.push(s);
                        multi_labels.push(l);
                    }
                }
            }
            let outlier = OutlierParams {
                seed,
                ..OutlierParams::default()
            };
            let labeled =
                build_multi_dataset(&multi, &multi_labels, &feature_config(&file), &outlier)?;
            let report = correlation_report(&labeled.data, alpha);
            report.write_csv(create_writer(&out.join("correlation.csv"))?)?;
            report.write_table(create_writer(&out.join("correlation.txt"))?)?;
            eprintln!(
                "analyze: {} labeled multi-query sessions ({} outliers removed), alpha {alpha}",
                labeled.data.len(),
                labeled.removed_outliers.len()
            );
        }

        Command::Train {
            input,
            annotations,
            query_stats,
            model,
            grid_step,
            keep_fraction,
            gbt_rounds,
        } => {
            let sessions = load_sessions(&input)?;
            let anns = read_annotations(open_reader(&annotations)?)?;
            let stats = load_stats(query_stats.as_ref())?;
            let mut cfg = TrainConfig {
                seed,
                feature_config: feature_config(&file),
                dwell_cap_ms: pick(None, file.cap_ms, DEFAULT_DWELL_CAP_MS),
                ..TrainConfig::default()
            };
            cfg.grid_step = pick(grid_step, file.grid_step, cfg.grid_step);
            cfg.keep_fraction = pick(keep_fraction, file.keep_fraction, cfg.keep_fraction);
            cfg.min_pair_rows = pick(None, file.min_pair_rows, cfg.min_pair_rows);
            cfg.gbt = GbtParams {
                rounds: pick(gbt_rounds, file.gbt_rounds, cfg.gbt.rounds),
                max_depth: pick(None, file.gbt_depth, cfg.gbt.max_depth),
                learning_rate: pick(None, file.gbt_eta, cfg.gbt.learning_rate),
                lambda: pick(None, file.gbt_lambda, cfg.gbt.lambda),
                gamma: pick(None, file.gbt_gamma, cfg.gbt.gamma),
                ..cfg.gbt
            };
            if let (Some(hot), Some(cold)) = (file.hot_frequency, file.cold_frequency) {
                cfg.single_thresholds = Some(SingleQueryThresholds {
                    hot_frequency: hot,
                    cold_frequency: cold,
                    short_duration_ms: file.short_duration_ms.unwrap_or(10_000.0),
                });
            }
            let (artifact, report) = train_final_model(&sessions, &anns, &stats, &cfg)?;
            let model_path = model.unwrap_or_else(|| out.join("model.json"));
            artifact.save(&model_path)?;
            let mut w = create_writer(&out.join("train_report.json"))?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            w.write_all(b"\n")?;
            eprintln!(
                "train: {} multi + {} single sessions; hybrid valid macro-F1 {:.4} (multiclass {:.4}) -> {}",
                report.n_multi,
                report.n_single,
                report.hybrid_valid_macro_f1,
                report.multiclass_valid_macro_f1,
                model_path.display()
            );
        }

        Command::Predict { model, input } => {
            let artifact = load_artifact(&model)?;
            let sessions = load_sessions(&input)?;
            let ctx = artifact.predict_context();
            let preds = predict_sessions(&artifact.model, &ctx, &sessions)?;
            let mut w = create_writer(&out.join("predictions.csv"))?;
            writeln!(w, "goal_id,label,model_tag,score_0,score_1,score_2,score_3")?;
            for p in &preds {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    p.goal_id, p.label, p.tag.name(), p.scores[0], p.scores[1], p.scores[2], p.scores[3]
                )?;
            }
            eprintln!("predict: {} sessions -> predictions.csv", preds.len());
        }

        Command::Explain {
            model,
            input,
            coverage_target,
            lime_samples,
            lime_top_k,
        } => {
            let artifact = load_artifact(&model)?;
            let sessions = load_sessions(&input)?;
            let ctx = artifact.predict_context();
            let coverage = pick(coverage_target, file.coverage_target, 0.98);
            let base_params = ExplainParams {
                n: pick(lime_samples, file.lime_samples, 1000),
                k: pick(lime_top_k, file.lime_top_k, 6),
                ..ExplainParams::default()
            };
            let multi: Vec<&Session> =
                sessions.iter().filter(|s| !s.is_single_query()).collect();
            let scorer = HybridScorer::new(&artifact.model.hybrid);
            let explanations: Vec<_> = multi
                .iter()
                .enumerate()
                .map(|(i, s)| -> anyhow::Result<_> {
                    let fv = sesseval::features::extract_features(s, &ctx.feature_config)?;
                    let x: Vec<f64> = fv
                        .slots()
                        .iter()
                        .enumerate()
                        .map(|(j, v)| v.unwrap_or(ctx.imputation[j]))
                        .collect();
                    let params = ExplainParams {
                        seed: seed.wrapping_add(i as u64),
                        ..base_params.clone()
                    };
                    let expl =
                        fit_local_surrogate(&scorer, &x, &s.goal_id, &artifact.marginals, &params);
                    Ok(discretize_explanation(expl, &artifact.marginals))
                })
                .collect::<anyhow::Result<_>>()?;
            let rules = abstract_rules(&explanations, coverage);
            write_explanations_jsonl(create_writer(&out.join("explanations.jsonl"))?, &explanations)?;
            write_rules_csv(create_writer(&out.join("rules.csv"))?, &rules)?;
            eprintln!(
                "explain: {} sessions ({} single-query skipped), {} rules covering {:.1}%",
                explanations.len(),
                sessions.len() - multi.len(),
                rules.rules.len(),
                rules.coverage * 100.0
            );
        }

        Command::Abtest {
            model,
            control,
            treatment,
            bootstrap_n,
        } => {
            let artifact = load_artifact(&model)?;
            let control = load_sessions(&control)?;
            let treatment = load_sessions(&treatment)?;
            let ctx = artifact.predict_context();
            let n_boot = pick(bootstrap_n, file.bootstrap_n, 1000);
            let report = ab_compare(&control, &treatment, &artifact.model, &ctx, n_boot, seed)?;
            let mut w = create_writer(&out.join("ab_report.json"))?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            w.write_all(b"\n")?;
            eprintln!(
                "abtest: model-score delta {:+.4} (95% CI {:+.4}..{:+.4})",
                report.deltas.model_score, report.ci95.model_score.0, report.ci95.model_score.1
            );
        }

        Command::Gsb {
            model,
            input,
            truth,
            metric,
        } => {
            let artifact = load_artifact(&model)?;
            let sessions = load_sessions(&input)?;
            let truth = truth_map(&truth)?;
            let (kept, labels): (Vec<Session>, Vec<usize>) = sessions
                .into_iter()
                .filter_map(|s| truth.get(&s.goal_id).map(|&t| (s, t)))
                .unzip();
            let ctx = artifact.predict_context();
            let kinds: Vec<PageMetricKind> = match metric {
                Some(name) => vec![PageMetricKind::parse(&name).ok_or_else(|| {
                    sesseval::Error::InvalidConfig(format!("unknown page metric {name}"))
                })?],
                None => PageMetricKind::ALL.to_vec(),
            };
            let tallies: Vec<GsbTally> = kinds
                .into_iter()
                .map(|k| gsb_judge(&kept, &labels, &artifact.model, &ctx, k, &artifact.page_cuts))
                .collect::<sesseval::Result<_>>()?;
            write_gsb_csv(create_writer(&out.join("gsb.csv"))?, &tallies)?;
            for t in &tallies {
                eprintln!("gsb {}: good {} / same {} / bad {}", t.metric, t.good, t.same, t.bad);
            }
        }

        Command::Evaluate { model, input, truth } => {
            let artifact = load_artifact(&model)?;
            let sessions = load_sessions(&input)?;
            let truth = truth_map(&truth)?;
            let (kept, labels): (Vec<Session>, Vec<usize>) = sessions
                .into_iter()
                .filter_map(|s| truth.get(&s.goal_id).map(|&t| (s, t)))
                .unzip();
            let ctx = artifact.predict_context();
            let report =
                sesseval::hybrid::evaluate_dispatch(&artifact.model, &ctx, &kept, &labels)?;
            let mut w = create_writer(&out.join("metrics.json"))?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            w.write_all(b"\n")?;
            eprintln!(
                "evaluate: {} sessions, total macro-F1 {:.4} (precision {:.4}, recall {:.4})",
                kept.len(),
                report.total.macro_f1,
                report.total.macro_precision,
                report.total.macro_recall
            );
        }
    }
    Ok(())
}

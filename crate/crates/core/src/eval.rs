//! Evaluation machinery: classification metrics, page-level baselines,
//! A/B comparison with bootstrap intervals, and GSB adjudication of the
//! session model against page-level metrics.

use crate::hybrid::{predict_sessions, FinalModel, PredictContext};
use crate::session::Session;
use crate::{Result, NUM_LABELS};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-label precision/recall/F1.
#[derive(Debug, Clone, Serialize)]
pub struct LabelMetrics {
    pub label: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Full classification metrics with the confusion matrix.
#[derive(Debug, Clone, Serialize)]
pub struct ClassMetrics {
    pub per_label: Vec<LabelMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    /// confusion[truth][pred].
    pub confusion: Vec<Vec<usize>>,
}

/// Standard multi-class metrics; a label never predicted (or never true)
/// contributes zero precision (or recall). Macro totals are unweighted
/// means over labels.
pub fn class_metrics(truth: &[usize], pred: &[usize], n_labels: usize) -> ClassMetrics {
    assert_eq!(truth.len(), pred.len());
    assert!(!truth.is_empty());
    let mut confusion = vec![vec![0usize; n_labels]; n_labels];
    for (&t, &p) in truth.iter().zip(pred) {
        confusion[t][p] += 1;
    }
    let mut per_label = Vec::with_capacity(n_labels);
    let (mut mp, mut mr, mut mf) = (0.0, 0.0, 0.0);
    for c in 0..n_labels {
        let tp = confusion[c][c];
        let pred_c: usize = (0..n_labels).map(|t| confusion[t][c]).sum();
        let truth_c: usize = confusion[c].iter().sum();
        let precision = if pred_c > 0 { tp as f64 / pred_c as f64 } else { 0.0 };
        let recall = if truth_c > 0 { tp as f64 / truth_c as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        mp += precision;
        mr += recall;
        mf += f1;
        per_label.push(LabelMetrics {
            label: c,
            precision,
            recall,
            f1,
            support: truth_c,
        });
    }
    let correct: usize = (0..n_labels).map(|c| confusion[c][c]).sum();
    ClassMetrics {
        per_label,
        macro_precision: mp / n_labels as f64,
        macro_recall: mr / n_labels as f64,
        macro_f1: mf / n_labels as f64,
        accuracy: correct as f64 / truth.len() as f64,
        confusion,
    }
}

/// Macro-F1 only, for hot loops.
pub fn macro_f1(truth: &[usize], pred: &[usize], n_labels: usize) -> f64 {
    class_metrics(truth, pred, n_labels).macro_f1
}

// ---------------------------------------------------------------------------
// Page-level metrics
// ---------------------------------------------------------------------------

/// The traditional page-level ratios, session-averaged.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PageMetrics {
    /// Fraction of queries with at least one click.
    pub has_click_ratio: f64,
    /// Clicks per query.
    pub click_ratio: f64,
    /// Fraction of clicks held at least 60 s.
    pub long_click_ratio: f64,
}

/// Dwell threshold for a long click, in seconds.
pub const LONG_CLICK_S: f64 = 60.0;

pub fn page_metrics(session: &Session) -> PageMetrics {
    let n_queries = session.queries.len().max(1) as f64;
    let with_click = session.queries.iter().filter(|q| !q.clicks.is_empty()).count() as f64;
    let clicks: usize = session.queries.iter().map(|q| q.clicks.len()).sum();
    let long_clicks = session
        .queries
        .iter()
        .flat_map(|q| &q.clicks)
        .filter(|c| c.dwell_ms as f64 / 1000.0 >= LONG_CLICK_S)
        .count();
    PageMetrics {
        has_click_ratio: with_click / n_queries,
        click_ratio: clicks as f64 / n_queries,
        long_click_ratio: long_clicks as f64 / (clicks.max(1)) as f64,
    }
}

/// Which page metric a comparison runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageMetricKind {
    HasClickRatio,
    ClickRatio,
    LongClickRatio,
}

impl PageMetricKind {
    pub const ALL: [PageMetricKind; 3] = [
        PageMetricKind::HasClickRatio,
        PageMetricKind::ClickRatio,
        PageMetricKind::LongClickRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PageMetricKind::HasClickRatio => "has_click_ratio",
            PageMetricKind::ClickRatio => "click_ratio",
            PageMetricKind::LongClickRatio => "long_click_ratio",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn of(self, pm: &PageMetrics) -> f64 {
        match self {
            PageMetricKind::HasClickRatio => pm.has_click_ratio,
            PageMetricKind::ClickRatio => pm.click_ratio,
            PageMetricKind::LongClickRatio => pm.long_click_ratio,
        }
    }
}

// ---------------------------------------------------------------------------
// Quantile mapping from page metrics to labels
// ---------------------------------------------------------------------------

/// Interpolated quantile (type-7) of an ascending-sorted slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] * (hi as f64 - pos) + sorted[hi] * (pos - lo as f64)
    }
}

/// Cut points turning each page metric into a 4-grade label.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PageCuts {
    pub has_click: [f64; 3],
    pub click: [f64; 3],
    pub long_click: [f64; 3],
}

impl PageCuts {
    pub fn for_kind(&self, kind: PageMetricKind) -> &[f64; 3] {
        match kind {
            PageMetricKind::HasClickRatio => &self.has_click,
            PageMetricKind::ClickRatio => &self.click,
            PageMetricKind::LongClickRatio => &self.long_click,
        }
    }
}

/// Derive quantile cuts from training sessions: the metric distribution
/// is cut at the cumulative label proportions of the training labels, so
/// the page metric assigns labels at the training base rates.
pub fn page_cuts_from_training(sessions: &[Session], labels: &[usize]) -> PageCuts {
    let mut counts = vec![0usize; NUM_LABELS];
    for &l in labels {
        counts[l] += 1;
    }
    let n = labels.len().max(1) as f64;
    let c1 = counts[0] as f64 / n;
    let c2 = c1 + counts[1] as f64 / n;
    let c3 = c2 + counts[2] as f64 / n;
    let metrics: Vec<PageMetrics> = sessions.iter().map(page_metrics).collect();
    let cuts_for = |kind: PageMetricKind| -> [f64; 3] {
        let mut vals: Vec<f64> = metrics.iter().map(|m| kind.of(m)).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        [
            quantile_sorted(&vals, c1),
            quantile_sorted(&vals, c2),
            quantile_sorted(&vals, c3),
        ]
    };
    PageCuts {
        has_click: cuts_for(PageMetricKind::HasClickRatio),
        click: cuts_for(PageMetricKind::ClickRatio),
        long_click: cuts_for(PageMetricKind::LongClickRatio),
    }
}

/// Map a metric value onto a label with lower-bucket boundary semantics.
pub fn page_label(value: f64, cuts: &[f64; 3]) -> usize {
    if value <= cuts[0] {
        0
    } else if value <= cuts[1] {
        1
    } else if value <= cuts[2] {
        2
    } else {
        3
    }
}

// ---------------------------------------------------------------------------
// A/B comparison
// ---------------------------------------------------------------------------

/// Session-averaged means reported per experiment group.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct GroupMeans {
    /// Mean predicted satisfaction label.
    pub model_score: f64,
    pub has_click_ratio: f64,
    pub click_ratio: f64,
    pub long_click_ratio: f64,
}

/// 95% bootstrap interval per reported delta.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct DeltaCi {
    pub model_score: (f64, f64),
    pub has_click_ratio: (f64, f64),
    pub click_ratio: (f64, f64),
    pub long_click_ratio: (f64, f64),
}

/// A/B comparison output. A positive delta favors the treatment group.
#[derive(Debug, Clone, Serialize)]
pub struct AbReport {
    pub group_sizes: (usize, usize),
    pub control_means: GroupMeans,
    pub treatment_means: GroupMeans,
    pub deltas: GroupMeans,
    pub ci95: DeltaCi,
    pub bootstrap_n: usize,
}

#[derive(Clone, Copy, Default)]
struct SessionScores {
    model: f64,
    has_click: f64,
    click: f64,
    long_click: f64,
}

fn group_scores(
    model: &FinalModel,
    ctx: &PredictContext,
    sessions: &[Session],
) -> Result<Vec<SessionScores>> {
    let preds = predict_sessions(model, ctx, sessions)?;
    Ok(sessions
        .iter()
        .zip(&preds)
        .map(|(s, p)| {
            let pm = page_metrics(s);
            SessionScores {
                model: p.label as f64,
                has_click: pm.has_click_ratio,
                click: pm.click_ratio,
                long_click: pm.long_click_ratio,
            }
        })
        .collect())
}

fn means(scores: &[SessionScores]) -> GroupMeans {
    let n = scores.len().max(1) as f64;
    GroupMeans {
        model_score: scores.iter().map(|s| s.model).sum::<f64>() / n,
        has_click_ratio: scores.iter().map(|s| s.has_click).sum::<f64>() / n,
        click_ratio: scores.iter().map(|s| s.click).sum::<f64>() / n,
        long_click_ratio: scores.iter().map(|s| s.long_click).sum::<f64>() / n,
    }
}

fn delta(t: &GroupMeans, c: &GroupMeans) -> GroupMeans {
    GroupMeans {
        model_score: t.model_score - c.model_score,
        has_click_ratio: t.has_click_ratio - c.has_click_ratio,
        click_ratio: t.click_ratio - c.click_ratio,
        long_click_ratio: t.long_click_ratio - c.long_click_ratio,
    }
}

/// Compare treatment against control: group means, treatment-minus-control
/// deltas, and seeded bootstrap 95% intervals for each delta.
pub fn ab_compare(
    control: &[Session],
    treatment: &[Session],
    model: &FinalModel,
    ctx: &PredictContext,
    bootstrap_n: usize,
    seed: u64,
) -> Result<AbReport> {
    let c_scores = group_scores(model, ctx, control)?;
    let t_scores = group_scores(model, ctx, treatment)?;
    let control_means = means(&c_scores);
    let treatment_means = means(&t_scores);
    let deltas = delta(&treatment_means, &control_means);

    let resampled: Vec<GroupMeans> = crate::par::map_range(bootstrap_n, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(seed, b as u64));
        let draw = |rng: &mut ChaCha8Rng, pool: &[SessionScores]| -> Vec<SessionScores> {
            (0..pool.len()).map(|_| pool[rng.gen_range(0..pool.len())]).collect()
        };
        let c = draw(&mut rng, &c_scores);
        let t = draw(&mut rng, &t_scores);
        delta(&means(&t), &means(&c))
    });
    let ci = |get: fn(&GroupMeans) -> f64| -> (f64, f64) {
        let mut vals: Vec<f64> = resampled.iter().map(get).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (quantile_sorted(&vals, 0.025), quantile_sorted(&vals, 0.975))
    };

    Ok(AbReport {
        group_sizes: (control.len(), treatment.len()),
        control_means,
        treatment_means,
        deltas,
        ci95: DeltaCi {
            model_score: ci(|g| g.model_score),
            has_click_ratio: ci(|g| g.has_click_ratio),
            click_ratio: ci(|g| g.click_ratio),
            long_click_ratio: ci(|g| g.long_click_ratio),
        },
        bootstrap_n,
    })
}

// ---------------------------------------------------------------------------
// GSB adjudication
// ---------------------------------------------------------------------------

/// Good/Same/Bad tallies for one page metric.
#[derive(Debug, Clone, Serialize)]
pub struct GsbTally {
    pub metric: String,
    pub good: usize,
    pub same: usize,
    pub bad: usize,
}

/// Adjudicate given model predictions directly.
///
/// The page metric becomes a label through the training quantile cuts;
/// per session the judgment closer to truth wins: Good when the model is
/// strictly closer, Bad when strictly farther, Same otherwise.
pub fn gsb_judge_predictions(
    sessions: &[Session],
    truth: &[usize],
    predicted: &[usize],
    kind: PageMetricKind,
    cuts: &PageCuts,
) -> GsbTally {
    let mut tally = GsbTally {
        metric: kind.name().to_string(),
        good: 0,
        same: 0,
        bad: 0,
    };
    for ((session, &pred), &t) in sessions.iter().zip(predicted).zip(truth) {
        let page = page_label(kind.of(&page_metrics(session)), cuts.for_kind(kind));
        let model_dist = (pred as i64 - t as i64).abs();
        let page_dist = (page as i64 - t as i64).abs();
        if model_dist < page_dist {
            tally.good += 1;
        } else if model_dist > page_dist {
            tally.bad += 1;
        } else {
            tally.same += 1;
        }
    }
    tally
}

/// Adjudicate the session model against one page metric.
pub fn gsb_judge(
    sessions: &[Session],
    truth: &[usize],
    model: &FinalModel,
    ctx: &PredictContext,
    kind: PageMetricKind,
    cuts: &PageCuts,
) -> Result<GsbTally> {
    let preds = predict_sessions(model, ctx, sessions)?;
    let labels: Vec<usize> = preds.iter().map(|p| p.label).collect();
    Ok(gsb_judge_predictions(sessions, truth, &labels, kind, cuts))
}

/// CSV report `metric,good,same,bad`, one row per adjudicated metric.
pub fn write_gsb_csv<W: std::io::Write>(mut w: W, tallies: &[GsbTally]) -> Result<()> {
    writeln!(w, "metric,good,same,bad")?;
    for t in tallies {
        writeln!(w, "{},{},{},{}", t.metric, t.good, t.same, t.bad)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::{ClickRecord, InputType, QueryRecord};

    fn click(ts: i64, dwell_s: f64) -> ClickRecord {
        ClickRecord {
            url: "http://x".into(),
            rank_pos: 1,
            page_num: 1,
            ts_ms: ts,
            next_action_ts_ms: None,
            dwell_ms: (dwell_s * 1000.0) as i64,
        }
    }

    fn session_with(clicks_per_query: Vec<Vec<f64>>) -> Session {
        let queries = clicks_per_query
            .into_iter()
            .enumerate()
            .map(|(i, dwells)| QueryRecord {
                text: format!("q{i}"),
                input_type: InputType::Manual,
                issue_ts_ms: i as i64 * 10_000,
                clicks: dwells
                    .into_iter()
                    .enumerate()
                    .map(|(c, d)| click(i as i64 * 10_000 + c as i64 * 100, d))
                    .collect(),
                page_turns: 0,
                interval_ms: 10_000,
            })
            .collect::<Vec<_>>();
        let n = queries.len() as i64;
        Session {
            goal_id: "g".into(),
            user_id: "u".into(),
            queries,
            duration_ms: n * 10_000,
            end_ts_ms: n * 10_000,
        }
    }

    #[test]
    fn perfect_predictions() {
        let truth = vec![0, 1, 2, 3, 2, 1];
        let m = class_metrics(&truth, &truth, NUM_LABELS);
        assert_eq!(m.macro_f1, 1.0);
        assert_eq!(m.accuracy, 1.0);
        for c in 0..NUM_LABELS {
            for p in 0..NUM_LABELS {
                if c != p {
                    assert_eq!(m.confusion[c][p], 0);
                }
            }
        }
    }

    #[test]
    fn hand_counted_four_rows() {
        // truth (0,1,2,3), pred (1,1,2,3)
        let m = class_metrics(&[0, 1, 2, 3], &[1, 1, 2, 3], NUM_LABELS);
        assert_eq!(m.per_label[0].recall, 0.0);
        assert_eq!(m.per_label[0].precision, 0.0);
        assert_eq!(m.per_label[1].precision, 0.5);
        assert_eq!(m.per_label[1].recall, 1.0);
        assert!((m.macro_precision - 0.625).abs() < 1e-12);
        assert!((m.macro_recall - 0.75).abs() < 1e-12);
        let f1_1 = 2.0 * 0.5 * 1.0 / 1.5;
        assert!((m.macro_f1 - (0.0 + f1_1 + 1.0 + 1.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn confusion_rows_sum_to_truth_counts() {
        let truth = vec![0, 0, 1, 2, 3, 3, 3];
        let pred = vec![1, 0, 1, 3, 3, 0, 2];
        let m = class_metrics(&truth, &pred, NUM_LABELS);
        let total: usize = m.confusion.iter().flatten().sum();
        assert_eq!(total, truth.len());
        for c in 0..NUM_LABELS {
            let row: usize = m.confusion[c].iter().sum();
            assert_eq!(row, truth.iter().filter(|&&t| t == c).count());
            assert_eq!(row, m.per_label[c].support);
        }
    }

    #[test]
    fn report_shape_fixture() {
        // reference table shape: per-label rows plus totals; exercised
        // here purely as a formatting fixture
        let m = class_metrics(&[0, 1, 2, 3], &[0, 1, 2, 3], NUM_LABELS);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("per_label"));
        assert!(json.contains("macro_f1"));
    }

    #[test]
    fn page_metrics_zero_clicks() {
        let s = session_with(vec![vec![], vec![]]);
        let pm = page_metrics(&s);
        assert_eq!(pm.has_click_ratio, 0.0);
        assert_eq!(pm.click_ratio, 0.0);
        assert_eq!(pm.long_click_ratio, 0.0);
    }

    #[test]
    fn page_metrics_hand_computed() {
        // 2 queries; one click of 70 s on the first, none on the second
        let s = session_with(vec![vec![70.0], vec![]]);
        let pm = page_metrics(&s);
        assert_eq!(pm.has_click_ratio, 0.5);
        assert_eq!(pm.click_ratio, 0.5);
        assert_eq!(pm.long_click_ratio, 1.0);
    }

    #[test]
    fn page_metrics_saturation() {
        let s = session_with(vec![vec![5.0], vec![5.0], vec![5.0]]);
        let pm = page_metrics(&s);
        assert_eq!(pm.has_click_ratio, 1.0);
        assert_eq!(pm.click_ratio, 1.0);
        assert_eq!(pm.long_click_ratio, 0.0);
    }

    #[test]
    fn quantile_and_page_label() {
        let vals: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        assert_eq!(quantile_sorted(&vals, 0.5), 50.0);
        assert_eq!(quantile_sorted(&vals, 0.0), 0.0);
        assert_eq!(quantile_sorted(&vals, 1.0), 100.0);
        let cuts = [10.0, 20.0, 30.0];
        assert_eq!(page_label(10.0, &cuts), 0);
        assert_eq!(page_label(10.5, &cuts), 1);
        assert_eq!(page_label(31.0, &cuts), 3);
    }
}

//! Prediction explanation in three steps: local-surrogate signal
//! extraction, quantile discretization of the signal values, and
//! corpus-level rule abstraction with coverage accounting.
//!
//! The surrogate is a weighted ridge regression over perturbations of
//! the explained point, where each slot is independently resampled from
//! its training marginal. Signals are the top-K slots by standardized
//! coefficient magnitude.

use crate::features::{Category, FeatureId};
use crate::learners::{argmax, Classifier};
use crate::preprocess::SessionLabel;
use crate::Result;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

/// Empirical training marginals kept for perturbation and binning.
///
/// Columns are sorted and may be stride-downsampled to bound artifact
/// size; quintile boundaries are computed on the full data first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainMarginals {
    pub columns: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// 20/40/60/80th percentiles per slot.
    pub quintiles: Vec<[f64; 4]>,
}

const MAX_MARGINAL_SAMPLES: usize = 1024;

impl TrainMarginals {
    pub fn from_matrix(x: &[Vec<f64>]) -> Self {
        assert!(!x.is_empty());
        let d = x[0].len();
        let n = x.len() as f64;
        let mut columns = Vec::with_capacity(d);
        let mut means = Vec::with_capacity(d);
        let mut stds = Vec::with_capacity(d);
        let mut quintiles = Vec::with_capacity(d);
        for f in 0..d {
            let mut col: Vec<f64> = x.iter().map(|r| r[f]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let q = |p: f64| crate::eval::quantile_sorted(&col, p);
            quintiles.push([q(0.2), q(0.4), q(0.6), q(0.8)]);
            means.push(mean);
            stds.push(var.sqrt());
            if col.len() > MAX_MARGINAL_SAMPLES {
                let stride = col.len() as f64 / MAX_MARGINAL_SAMPLES as f64;
                col = (0..MAX_MARGINAL_SAMPLES)
                    .map(|i| col[(i as f64 * stride) as usize])
                    .collect();
            }
            columns.push(col);
        }
        TrainMarginals {
            columns,
            means,
            stds,
            quintiles,
        }
    }

    fn dim(&self) -> usize {
        self.columns.len()
    }
}

/// Sign of a signal's surrogate coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

/// Quintile bin of a signal value against the training distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bin {
    VeryLow,
    Low,
    Medium,
    High,
    VeryHigh,
}

impl Bin {
    pub fn phrase(self) -> &'static str {
        match self {
            Bin::VeryLow => "very low",
            Bin::Low => "low",
            Bin::Medium => "medium",
            Bin::High => "high",
            Bin::VeryHigh => "very high",
        }
    }

    /// Collapse to the coarse 3-level bin used by rule signatures.
    pub fn coarse(self) -> CoarseBin {
        match self {
            Bin::VeryLow | Bin::Low => CoarseBin::Low,
            Bin::Medium => CoarseBin::Mid,
            Bin::High | Bin::VeryHigh => CoarseBin::High,
        }
    }
}

/// Coarse bin for rule abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseBin {
    Low,
    Mid,
    High,
}

impl CoarseBin {
    pub fn phrase(self) -> &'static str {
        match self {
            CoarseBin::Low => "low",
            CoarseBin::Mid => "mid",
            CoarseBin::High => "high",
        }
    }
}

/// One feature the surrogate found to drive the prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalFeature {
    /// Slot index in the full feature vector.
    pub feature: usize,
    pub name: String,
    /// Standardized ridge coefficient (coefficient times slot stddev).
    pub weight: f64,
    pub direction: Direction,
    /// Raw slot value at the explained point.
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin: Option<Bin>,
}

/// Local explanation of one session's prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Explanation {
    pub goal_id: String,
    pub label: usize,
    pub signals: Vec<SignalFeature>,
    /// Weighted R-squared of the surrogate on the perturbation sample.
    pub fidelity: f64,
}

/// Surrogate parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplainParams {
    /// Perturbation sample size (row 0 is the point itself).
    pub n: usize,
    /// Number of signal features to keep.
    pub k: usize,
    /// Kernel width on standardized distance; default 0.75 * sqrt(d).
    pub kernel_width: Option<f64>,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for ExplainParams {
    fn default() -> Self {
        ExplainParams {
            n: 1000,
            k: 6,
            kernel_width: None,
            ridge: 1.0,
            seed: 0,
        }
    }
}

/// Perturbation sample around `x`: row 0 is `x` itself; every other row
/// resamples each slot independently with probability 0.5 from its
/// training marginal.
pub fn sample_perturbations(
    x: &[f64],
    marginals: &TrainMarginals,
    n: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n.max(1));
    rows.push(x.to_vec());
    for _ in 1..n {
        let row: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(f, &v)| {
                if rng.gen_bool(0.5) {
                    let col = &marginals.columns[f];
                    col[rng.gen_range(0..col.len())]
                } else {
                    v
                }
            })
            .collect();
        rows.push(row);
    }
    rows
}

/// Solve (A + ridge on non-intercept diag) beta = b by Gaussian
/// elimination with partial pivoting. A is small (d+1 square).
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        if diag.abs() < 1e-300 {
            continue;
        }
        for row in col + 1..n {
            let factor = a[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut beta = vec![0.0; n];
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in col + 1..n {
            sum -= a[col][k] * beta[k];
        }
        beta[col] = if a[col][col].abs() < 1e-300 {
            0.0
        } else {
            sum / a[col][col]
        };
    }
    beta
}

/// Fit the local surrogate and extract the top-K signal features.
///
/// Responses are the model's probability of its predicted label at each
/// perturbation; sample weights decay with standardized distance from
/// the explained point. Zero response variance degenerates to an empty
/// signal list with fidelity 0.
pub fn fit_local_surrogate<M: Classifier + Sync>(
    model: &M,
    x: &[f64],
    goal_id: &str,
    marginals: &TrainMarginals,
    params: &ExplainParams,
) -> Explanation {
    let d = marginals.dim();
    let probs = model.predict_proba(x);
    let label_slot = argmax(&probs);
    let label = model.classes()[label_slot];

    let sample = sample_perturbations(x, marginals, params.n.max(1), params.seed);
    let responses: Vec<f64> = crate::par::map_slice(&sample, |z| model.predict_proba(z)[label_slot]);

    let spread = responses.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - responses.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread < 1e-12 {
        return Explanation {
            goal_id: goal_id.to_string(),
            label,
            signals: Vec::new(),
            fidelity: 0.0,
        };
    }

    let sigma = params.kernel_width.unwrap_or(0.75 * (d as f64).sqrt());
    let std_of = |f: usize| if marginals.stds[f] > 0.0 { marginals.stds[f] } else { 1.0 };
    // standardized design matrix relative to training stats
    let design: Vec<Vec<f64>> = sample
        .iter()
        .map(|z| {
            (0..d)
                .map(|f| (z[f] - marginals.means[f]) / std_of(f))
                .collect()
        })
        .collect();
    let x_std: Vec<f64> = (0..d).map(|f| (x[f] - marginals.means[f]) / std_of(f)).collect();
    let weights: Vec<f64> = design
        .iter()
        .map(|z| {
            let dist2: f64 = z.iter().zip(&x_std).map(|(a, b)| (a - b) * (a - b)).sum();
            (-dist2 / (sigma * sigma)).exp()
        })
        .collect();

    // weighted ridge with intercept (index 0, unpenalized)
    let p = d + 1;
    let mut ata = vec![vec![0.0; p]; p];
    let mut atb = vec![0.0; p];
    for ((z, &w), &y) in design.iter().zip(&weights).zip(&responses) {
        let mut row = Vec::with_capacity(p);
        row.push(1.0);
        row.extend_from_slice(z);
        for i in 0..p {
            let wi = w * row[i];
            atb[i] += wi * y;
            for j in i..p {
                ata[i][j] += wi * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            ata[i][j] = ata[j][i];
        }
    }
    for i in 1..p {
        ata[i][i] += params.ridge;
    }
    let beta = solve_linear(ata, atb);

    // fidelity: weighted R-squared on the sample
    let w_sum: f64 = weights.iter().sum();
    let y_mean: f64 = responses.iter().zip(&weights).map(|(y, w)| y * w).sum::<f64>() / w_sum;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for ((z, &w), &y) in design.iter().zip(&weights).zip(&responses) {
        let pred = beta[0] + z.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
        ss_res += w * (y - pred) * (y - pred);
        ss_tot += w * (y - y_mean) * (y - y_mean);
    }
    let fidelity = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        0.0
    };

    // top-K by |standardized coefficient|, ties to the lower slot index
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        beta[1 + b]
            .abs()
            .partial_cmp(&beta[1 + a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let signals: Vec<SignalFeature> = order
        .into_iter()
        .take(params.k)
        .filter(|&f| beta[1 + f] != 0.0)
        .map(|f| SignalFeature {
            feature: f,
            name: FeatureId::ALL
                .get(f)
                .map(|id| id.name().to_string())
                .unwrap_or_else(|| format!("slot_{f}")),
            weight: beta[1 + f],
            direction: if beta[1 + f] >= 0.0 {
                Direction::Positive
            } else {
                Direction::Negative
            },
            value: x[f],
            bin: None,
        })
        .collect();

    Explanation {
        goal_id: goal_id.to_string(),
        label,
        signals,
        fidelity,
    }
}

/// Map a raw value to its quintile bin (boundaries belong to the lower bin).
pub fn bin_value(value: f64, quintiles: &[f64; 4]) -> Bin {
    if value <= quintiles[0] {
        Bin::VeryLow
    } else if value <= quintiles[1] {
        Bin::Low
    } else if value <= quintiles[2] {
        Bin::Medium
    } else if value <= quintiles[3] {
        Bin::High
    } else {
        Bin::VeryHigh
    }
}

/// Fill each signal's quintile bin from the training distribution.
pub fn discretize_explanation(mut expl: Explanation, marginals: &TrainMarginals) -> Explanation {
    for s in &mut expl.signals {
        s.bin = Some(bin_value(s.value, &marginals.quintiles[s.feature]));
    }
    expl
}

/// Human-readable one-liner for a discretized explanation.
pub fn render_explanation(expl: &Explanation) -> String {
    let parts: Vec<String> = expl
        .signals
        .iter()
        .map(|s| {
            let desc = FeatureId::ALL
                .get(s.feature)
                .map(|id| id.description())
                .unwrap_or("feature");
            match s.bin {
                Some(bin) => format!("{} {}", bin.phrase(), desc),
                None => desc.to_string(),
            }
        })
        .collect();
    let label_name = SessionLabel::from_value(expl.label)
        .map(|l| l.name())
        .unwrap_or("?");
    format!("{} -> {}", parts.join(", "), label_name)
}

/// An abstracted rule: a coarse signature shared by many sessions.
#[derive(Debug, Clone, Serialize)]
pub struct Rule {
    pub label: usize,
    /// Sorted, deduplicated (category, direction, coarse bin) triples.
    pub signature: Vec<(Category, Direction, CoarseBin)>,
    pub support: usize,
    pub template: String,
}

/// Rules sorted by support with cumulative coverage.
#[derive(Debug, Clone, Serialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    /// Fraction of sessions covered by the emitted rules.
    pub coverage: f64,
    pub total_sessions: usize,
    pub distinct_signatures: usize,
}

fn signature_of(expl: &Explanation) -> Vec<(Category, Direction, CoarseBin)> {
    let mut set: Vec<(Category, Direction, CoarseBin)> = expl
        .signals
        .iter()
        .filter_map(|s| {
            let id = FeatureId::ALL.get(s.feature)?;
            let bin = s.bin?;
            Some((id.category(), s.direction, bin.coarse()))
        })
        .collect();
    set.sort();
    set.dedup();
    set
}

fn rule_template(label: usize, signature: &[(Category, Direction, CoarseBin)]) -> String {
    let parts: Vec<String> = signature
        .iter()
        .map(|(cat, dir, bin)| {
            let sign = match dir {
                Direction::Positive => "+",
                Direction::Negative => "-",
            };
            format!("{} {} signals ({})", bin.phrase(), cat.name(), sign)
        })
        .collect();
    let label_name = SessionLabel::from_value(label).map(|l| l.name()).unwrap_or("?");
    if parts.is_empty() {
        format!("no dominant signals -> {label_name}")
    } else {
        format!("{} -> {}", parts.join(", "), label_name)
    }
}

/// Group discretized explanations into rules and emit them by descending
/// support until cumulative coverage reaches the target.
pub fn abstract_rules(explanations: &[Explanation], coverage_target: f64) -> RuleSet {
    let mut groups: BTreeMap<(usize, Vec<(Category, Direction, CoarseBin)>), usize> =
        BTreeMap::new();
    for expl in explanations {
        *groups.entry((expl.label, signature_of(expl))).or_insert(0) += 1;
    }
    let distinct = groups.len();
    let mut ordered: Vec<((usize, Vec<(Category, Direction, CoarseBin)>), usize)> =
        groups.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let total = explanations.len();
    let mut rules = Vec::new();
    let mut covered = 0usize;
    for ((label, signature), support) in ordered {
        if total > 0 && covered as f64 / total as f64 >= coverage_target {
            break;
        }
        covered += support;
        rules.push(Rule {
            label,
            template: rule_template(label, &signature),
            signature,
            support,
        });
    }
    RuleSet {
        coverage: if total > 0 {
            covered as f64 / total as f64
        } else {
            0.0
        },
        total_sessions: total,
        distinct_signatures: distinct,
        rules,
    }
}

/// JSON Lines report: one object per explained session.
pub fn write_explanations_jsonl<W: Write>(mut w: W, explanations: &[Explanation]) -> Result<()> {
    #[derive(Serialize)]
    struct SignalOut<'a> {
        name: &'a str,
        weight: f64,
        direction: Direction,
        bin: Option<Bin>,
    }
    #[derive(Serialize)]
    struct Row<'a> {
        goal_id: &'a str,
        label: usize,
        signals: Vec<SignalOut<'a>>,
        fidelity: f64,
        summary: String,
    }
    for e in explanations {
        let row = Row {
            goal_id: &e.goal_id,
            label: e.label,
            signals: e
                .signals
                .iter()
                .map(|s| SignalOut {
                    name: &s.name,
                    weight: s.weight,
                    direction: s.direction,
                    bin: s.bin,
                })
                .collect(),
            fidelity: e.fidelity,
            summary: render_explanation(e),
        };
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// CSV report: rank, signature, label, support, cumulative coverage,
/// template.
pub fn write_rules_csv<W: Write>(w: W, rules: &RuleSet) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["rank", "signature", "label", "support", "coverage_cum", "template"])?;
    let mut cum = 0usize;
    for (rank, rule) in rules.rules.iter().enumerate() {
        cum += rule.support;
        let sig: Vec<String> = rule
            .signature
            .iter()
            .map(|(c, d, b)| {
                format!(
                    "{}:{}:{}",
                    c.name(),
                    match d {
                        Direction::Positive => "+",
                        Direction::Negative => "-",
                    },
                    b.phrase()
                )
            })
            .collect();
        wtr.write_record([
            (rank + 1).to_string(),
            sig.join("|"),
            rule.label.to_string(),
            rule.support.to_string(),
            format!("{:.4}", cum as f64 / rules.total_sessions.max(1) as f64),
            rule.template.clone(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

//! The behavioral feature catalog.
//!
//! Multi-query sessions get the full 38-slot [`FeatureVector`]; sessions
//! with exactly one query get the [`ReducedFeatureVector`] (change and
//! reformulation features cannot be retrieved there). Slots that are
//! undefined for a session (position stats without clicks, per-pair
//! deltas with fewer than three queries) stay missing until imputation.
//!
//! Units: time slots in seconds, positions in rank units, lengths in
//! Unicode scalar values.

pub mod metrics;

pub use metrics::{edit_distance, jaccard_sim, JaccardTokens};

use crate::session::Session;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

/// Feature group, as used for correlation tables and rule abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Outcome,
    Cost,
    Effort,
    Change,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Outcome => "outcome",
            Category::Cost => "cost",
            Category::Effort => "effort",
            Category::Change => "change",
        }
    }
}

macro_rules! feature_catalog {
    ($(($variant:ident, $name:literal, $cat:ident, $desc:literal)),+ $(,)?) => {
        /// Identifier for one slot of the full feature vector.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        #[repr(usize)]
        pub enum FeatureId {
            $($variant),+
        }

        impl FeatureId {
            pub const ALL: &'static [FeatureId] = &[$(FeatureId::$variant),+];

            /// Canonical slot name used in CSV headers and reports.
            pub fn name(self) -> &'static str {
                match self {
                    $(FeatureId::$variant => $name),+
                }
            }

            pub fn category(self) -> Category {
                match self {
                    $(FeatureId::$variant => Category::$cat),+
                }
            }

            /// Short human phrase for explanation templates.
            pub fn description(self) -> &'static str {
                match self {
                    $(FeatureId::$variant => $desc),+
                }
            }
        }
    };
}

feature_catalog! {
    (QSumClickDwell,      "Q_SumClickDwell",       Outcome, "per-query total click dwell time"),
    (SSumClickDwell,      "S_SumClickDwell",       Outcome, "session total click dwell time"),
    (SClickDwell,         "S_ClickDwell",          Outcome, "dwell time per click"),
    (QueryInterval,       "QueryInterval",         Outcome, "time spent per query"),
    (SSumQueryInterval,   "S_SumQueryInterval",    Outcome, "total time across queries"),
    (SessionDuration,     "SessionDuration",       Outcome, "session duration"),
    (QNumClickGe40,       "Q_num_click_ge40",      Outcome, "per-query count of clicks held 40s or more"),
    (QNumClickGe60,       "Q_num_click_ge60",      Outcome, "per-query count of long clicks (60s+)"),
    (QNumClickLt20,       "Q_num_click_lt20",      Outcome, "per-query count of short clicks (under 20s)"),
    (QNumClickLt5,        "Q_num_click_lt5",       Outcome, "per-query count of bounce clicks (under 5s)"),
    (SNumClick,           "S_num_click",           Outcome, "session click count"),
    (SNumClickGe185,      "S_num_click_ge185",     Outcome, "session count of very long clicks (185s+)"),
    (SNumClickLt10,       "S_num_click_lt10",      Outcome, "session count of clicks under 10s"),
    (SQlength,            "S_Qlength",             Cost,    "query length"),
    (SNumQuery,           "S_num_query",           Cost,    "number of queries"),
    (SNumInpQuery,        "S_num_inp_query",       Cost,    "number of manually typed queries"),
    (SNumHisQuery,        "S_num_his_query",       Cost,    "number of history queries"),
    (SNumSugQuery,        "S_num_sug_query",       Cost,    "number of suggestion queries"),
    (SNumRsQuery,         "S_num_rs_query",        Cost,    "number of related-search queries"),
    (SAvgClickPos,        "S_AvgClickPos",         Cost,    "average click position"),
    (SMinClickPos,        "S_MinClickPos",         Cost,    "best (minimum) click position"),
    (QMinClickPos,        "Q_MinClickPos",         Cost,    "per-query best click position"),
    (QAvgClickPos,        "Q_AvgClickPos",         Cost,    "per-query average click position"),
    (SNumQueryNoClick,    "S_num_query_no_click",  Effort,  "queries abandoned without clicks"),
    (SMaxClickPos,        "S_MaxClickPos",         Effort,  "deepest click position"),
    (QMaxClickPos,        "Q_MaxClickPos",         Effort,  "per-query deepest click position"),
    (SNumForwQuery,       "S_num_forw_query",      Effort,  "page-forward count"),
    (SMaxQlength,         "S_MaxQlength",          Effort,  "longest query length"),
    (QEditDistance,       "QEditDistance",         Effort,  "edit distance between adjacent queries"),
    (QJaccardSim,         "QJaccardSim",           Effort,  "token overlap between adjacent queries"),
    (QNumClick,           "Q_num_click",           Effort,  "clicks per query"),
    (DeltaQSumClickDwell, "delta_Q_SumClickDwell", Change,  "shift in per-query click dwell, last vs first query"),
    (DeltaQNumClickGe60,  "delta_Q_num_click_ge60",Change,  "shift in long clicks, last vs first query"),
    (DeltaQNumClickLt50,  "delta_Q_num_click_lt50",Change,  "shift in sub-50s clicks, last vs first query"),
    (DeltaQEditDistance,  "delta_QEditDistance",   Change,  "shift in reformulation distance, last vs first pair"),
    (DeltaQJaccardSim,    "delta_QJaccardSim",     Change,  "shift in query overlap, last vs first pair"),
    (DeltaQlength,        "delta_Qlength",         Change,  "shift in query length, last vs first query"),
    (DeltaQMaxClickPos,   "delta_QMaxClickPos",    Change,  "shift in deepest click position, last vs first query"),
}

/// Number of slots in the full feature vector.
pub const NUM_FEATURES: usize = FeatureId::ALL.len();

/// Dwell-time cutoffs, in seconds.
///
/// Field names carry the canonical defaults; values are configurable
/// (the short per-query cutoff is sometimes run at 15s instead of 20s,
/// which is why it is exposed at all).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DwellThresholds {
    pub q_click_ge40: f64,
    pub q_click_ge60: f64,
    pub q_click_lt20: f64,
    pub q_click_lt5: f64,
    pub s_click_ge185: f64,
    pub s_click_lt10: f64,
    pub delta_ge60: f64,
    pub delta_lt50: f64,
}

impl Default for DwellThresholds {
    fn default() -> Self {
        DwellThresholds {
            q_click_ge40: 40.0,
            q_click_ge60: 60.0,
            q_click_lt20: 20.0,
            q_click_lt5: 5.0,
            s_click_ge185: 185.0,
            s_click_lt10: 10.0,
            delta_ge60: 60.0,
            delta_lt50: 50.0,
        }
    }
}

/// Everything feature extraction needs besides the session itself.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub dwell: DwellThresholds,
    pub jaccard_tokens: JaccardTokens,
}

/// The full per-session feature vector; `None` marks a missing slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    slots: Vec<Option<f64>>,
}

impl FeatureVector {
    pub fn empty() -> Self {
        FeatureVector {
            slots: vec![None; NUM_FEATURES],
        }
    }

    pub fn get(&self, id: FeatureId) -> Option<f64> {
        self.slots[id as usize]
    }

    pub fn set(&mut self, id: FeatureId, value: f64) {
        self.slots[id as usize] = Some(value);
    }

    pub fn slots(&self) -> &[Option<f64>] {
        &self.slots
    }

    pub fn from_slots(slots: Vec<Option<f64>>) -> Self {
        assert_eq!(slots.len(), NUM_FEATURES);
        FeatureVector { slots }
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn sec(ms: i64) -> f64 {
    ms as f64 / 1000.0
}

/// Compute the full feature vector for a multi-query session.
///
/// Per-query (`Q_`-prefixed) aggregates are unweighted means over
/// queries; position aggregates average only over queries that have
/// clicks. Change slots are last-query minus first-query; the adjacent
/// pair deltas need at least three queries (two pairs).
pub fn extract_features(session: &Session, cfg: &FeatureConfig) -> Result<FeatureVector> {
    if session.queries.len() < 2 {
        return Err(Error::SingleQuerySession);
    }
    let qs = &session.queries;
    let nq = qs.len() as f64;
    let mut fv = FeatureVector::empty();

    // per-query primitives
    let sum_dwell: Vec<f64> = qs
        .iter()
        .map(|q| q.clicks.iter().map(|c| sec(c.dwell_ms)).sum())
        .collect();
    let count_ge = |thr: f64| -> Vec<f64> {
        qs.iter()
            .map(|q| q.clicks.iter().filter(|c| sec(c.dwell_ms) >= thr).count() as f64)
            .collect()
    };
    let count_lt = |thr: f64| -> Vec<f64> {
        qs.iter()
            .map(|q| q.clicks.iter().filter(|c| sec(c.dwell_ms) < thr).count() as f64)
            .collect()
    };

    let all_dwells: Vec<f64> = qs
        .iter()
        .flat_map(|q| q.clicks.iter().map(|c| sec(c.dwell_ms)))
        .collect();
    let all_pos: Vec<f64> = qs
        .iter()
        .flat_map(|q| q.clicks.iter().map(|c| c.rank_pos as f64))
        .collect();
    let total_clicks = all_pos.len() as f64;

    // outcome
    fv.set(FeatureId::QSumClickDwell, mean(&sum_dwell).unwrap());
    let s_sum_dwell: f64 = all_dwells.iter().sum();
    fv.set(FeatureId::SSumClickDwell, s_sum_dwell);
    if total_clicks > 0.0 {
        fv.set(FeatureId::SClickDwell, s_sum_dwell / total_clicks);
    }
    let intervals: Vec<f64> = qs.iter().map(|q| sec(q.interval_ms)).collect();
    fv.set(FeatureId::QueryInterval, mean(&intervals).unwrap());
    fv.set(FeatureId::SSumQueryInterval, intervals.iter().sum());
    fv.set(FeatureId::SessionDuration, sec(session.duration_ms));
    fv.set(
        FeatureId::QNumClickGe40,
        mean(&count_ge(cfg.dwell.q_click_ge40)).unwrap(),
    );
    fv.set(
        FeatureId::QNumClickGe60,
        mean(&count_ge(cfg.dwell.q_click_ge60)).unwrap(),
    );
    fv.set(
        FeatureId::QNumClickLt20,
        mean(&count_lt(cfg.dwell.q_click_lt20)).unwrap(),
    );
    fv.set(
        FeatureId::QNumClickLt5,
        mean(&count_lt(cfg.dwell.q_click_lt5)).unwrap(),
    );
    fv.set(FeatureId::SNumClick, total_clicks);
    fv.set(
        FeatureId::SNumClickGe185,
        all_dwells.iter().filter(|d| **d >= cfg.dwell.s_click_ge185).count() as f64,
    );
    fv.set(
        FeatureId::SNumClickLt10,
        all_dwells.iter().filter(|d| **d < cfg.dwell.s_click_lt10).count() as f64,
    );

    // cost
    let qlens: Vec<f64> = qs.iter().map(|q| q.char_len() as f64).collect();
    fv.set(FeatureId::SQlength, mean(&qlens).unwrap());
    fv.set(FeatureId::SNumQuery, nq);
    let count_input = |it: crate::session::InputType| -> f64 {
        qs.iter().filter(|q| q.input_type == it).count() as f64
    };
    fv.set(FeatureId::SNumInpQuery, count_input(crate::session::InputType::Manual));
    fv.set(FeatureId::SNumHisQuery, count_input(crate::session::InputType::History));
    fv.set(FeatureId::SNumSugQuery, count_input(crate::session::InputType::Suggestion));
    fv.set(
        FeatureId::SNumRsQuery,
        count_input(crate::session::InputType::RelatedSearch),
    );
    if !all_pos.is_empty() {
        fv.set(FeatureId::SAvgClickPos, mean(&all_pos).unwrap());
        fv.set(
            FeatureId::SMinClickPos,
            all_pos.iter().copied().fold(f64::INFINITY, f64::min),
        );
        fv.set(
            FeatureId::SMaxClickPos,
            all_pos.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        // position aggregates over queries that have clicks
        let q_min: Vec<f64> = qs
            .iter()
            .filter(|q| !q.clicks.is_empty())
            .map(|q| q.clicks.iter().map(|c| c.rank_pos as f64).fold(f64::INFINITY, f64::min))
            .collect();
        let q_avg: Vec<f64> = qs
            .iter()
            .filter(|q| !q.clicks.is_empty())
            .map(|q| {
                q.clicks.iter().map(|c| c.rank_pos as f64).sum::<f64>() / q.clicks.len() as f64
            })
            .collect();
        let q_max: Vec<f64> = qs
            .iter()
            .filter(|q| !q.clicks.is_empty())
            .map(|q| {
                q.clicks
                    .iter()
                    .map(|c| c.rank_pos as f64)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        fv.set(FeatureId::QMinClickPos, mean(&q_min).unwrap());
        fv.set(FeatureId::QAvgClickPos, mean(&q_avg).unwrap());
        fv.set(FeatureId::QMaxClickPos, mean(&q_max).unwrap());
    }

    // effort
    fv.set(
        FeatureId::SNumQueryNoClick,
        qs.iter().filter(|q| q.clicks.is_empty()).count() as f64,
    );
    fv.set(
        FeatureId::SNumForwQuery,
        qs.iter().map(|q| q.page_turns as f64).sum(),
    );
    fv.set(
        FeatureId::SMaxQlength,
        qlens.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let pair_dist: Vec<f64> = qs
        .windows(2)
        .map(|w| edit_distance(&w[0].text, &w[1].text) as f64)
        .collect();
    let pair_sim: Vec<f64> = qs
        .windows(2)
        .map(|w| jaccard_sim(&w[0].text, &w[1].text, cfg.jaccard_tokens))
        .collect();
    fv.set(FeatureId::QEditDistance, mean(&pair_dist).unwrap());
    fv.set(FeatureId::QJaccardSim, mean(&pair_sim).unwrap());
    fv.set(FeatureId::QNumClick, total_clicks / nq);

    // change: last query minus first query
    let first = &qs[0];
    let last = &qs[qs.len() - 1];
    fv.set(
        FeatureId::DeltaQSumClickDwell,
        sum_dwell[sum_dwell.len() - 1] - sum_dwell[0],
    );
    let ge60 = count_ge(cfg.dwell.delta_ge60);
    fv.set(FeatureId::DeltaQNumClickGe60, ge60[ge60.len() - 1] - ge60[0]);
    let lt50 = count_lt(cfg.dwell.delta_lt50);
    fv.set(FeatureId::DeltaQNumClickLt50, lt50[lt50.len() - 1] - lt50[0]);
    if qs.len() >= 3 {
        fv.set(
            FeatureId::DeltaQEditDistance,
            pair_dist[pair_dist.len() - 1] - pair_dist[0],
        );
        fv.set(
            FeatureId::DeltaQJaccardSim,
            pair_sim[pair_sim.len() - 1] - pair_sim[0],
        );
    }
    fv.set(
        FeatureId::DeltaQlength,
        last.char_len() as f64 - first.char_len() as f64,
    );
    if !first.clicks.is_empty() && !last.clicks.is_empty() {
        let maxpos = |q: &crate::session::QueryRecord| {
            q.clicks
                .iter()
                .map(|c| c.rank_pos as f64)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        fv.set(FeatureId::DeltaQMaxClickPos, maxpos(last) - maxpos(first));
    }

    Ok(fv)
}

/// Extract features for every session, in order. Parallel when enabled.
pub fn extract_all(sessions: &[Session], cfg: &FeatureConfig) -> Vec<Result<FeatureVector>> {
    crate::par::map_slice(sessions, |s| extract_features(s, cfg))
}

// ---------------------------------------------------------------------------
// Reduced single-query schema
// ---------------------------------------------------------------------------

macro_rules! reduced_catalog {
    ($(($variant:ident, $name:literal)),+ $(,)?) => {
        /// Identifier for one slot of the reduced single-query vector.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        #[repr(usize)]
        pub enum ReducedId {
            $($variant),+
        }

        impl ReducedId {
            pub const ALL: &'static [ReducedId] = &[$(ReducedId::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(ReducedId::$variant => $name),+
                }
            }
        }
    };
}

reduced_catalog! {
    (SumClickDwell,  "S_SumClickDwell"),
    (ClickDwell,     "S_ClickDwell"),
    (NumClick,       "S_num_click"),
    (NumClickGe40,   "S_num_click_ge40"),
    (NumClickGe60,   "S_num_click_ge60"),
    (NumClickLt20,   "S_num_click_lt20"),
    (NumClickLt5,    "S_num_click_lt5"),
    (NumClickGe185,  "S_num_click_ge185"),
    (NumClickLt10,   "S_num_click_lt10"),
    (AvgClickPos,    "S_AvgClickPos"),
    (MinClickPos,    "S_MinClickPos"),
    (MaxClickPos,    "S_MaxClickPos"),
    (NoClick,        "no_click"),
    (Qlength,        "S_Qlength"),
    (SessionDuration,"SessionDuration"),
    (QueryFrequency, "query_frequency"),
    (QueryClickRatio,"query_click_ratio"),
}

/// Number of slots in the reduced vector.
pub const NUM_REDUCED: usize = ReducedId::ALL.len();

/// Feature vector for single-query sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedFeatureVector {
    slots: Vec<Option<f64>>,
}

impl ReducedFeatureVector {
    pub fn empty() -> Self {
        ReducedFeatureVector {
            slots: vec![None; NUM_REDUCED],
        }
    }

    pub fn get(&self, id: ReducedId) -> Option<f64> {
        self.slots[id as usize]
    }

    pub fn set(&mut self, id: ReducedId, value: f64) {
        self.slots[id as usize] = Some(value);
    }

    pub fn slots(&self) -> &[Option<f64>] {
        &self.slots
    }
}

/// Per-query corpus statistics, keyed by exact query text.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct QueryStatsTable {
    entries: BTreeMap<String, QueryStats>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QueryStats {
    pub frequency: f64,
    pub click_ratio: f64,
}

impl QueryStatsTable {
    pub fn insert(&mut self, query: &str, frequency: f64, click_ratio: f64) {
        self.entries.insert(
            query.to_string(),
            QueryStats {
                frequency,
                click_ratio,
            },
        );
    }

    /// Stats for a query; absent queries read as zero.
    pub fn lookup(&self, query: &str) -> QueryStats {
        self.entries.get(query).copied().unwrap_or(QueryStats {
            frequency: 0.0,
            click_ratio: 0.0,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Frequency at the given quantile (0..=1) of the table, by value.
    pub fn frequency_quantile(&self, q: f64) -> f64 {
        let mut freqs: Vec<f64> = self.entries.values().map(|s| s.frequency).collect();
        if freqs.is_empty() {
            return 0.0;
        }
        freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pos = (freqs.len() - 1) as f64 * q.clamp(0.0, 1.0);
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        if lo == hi {
            freqs[lo]
        } else {
            let frac = pos - lo as f64;
            freqs[lo] * (1.0 - frac) + freqs[hi] * frac
        }
    }

    /// Parse the TSV sidecar: `query<TAB>frequency<TAB>click_ratio`.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut table = QueryStatsTable::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (q, f, r) = (parts.next(), parts.next(), parts.next());
            match (q, f.and_then(|v| v.parse().ok()), r.and_then(|v| v.parse().ok())) {
                (Some(q), Some(f), Some(r)) => table.insert(q, f, r),
                _ => {
                    return Err(Error::MalformedRecord {
                        line: idx + 1,
                        reason: "expected query<TAB>frequency<TAB>click_ratio".into(),
                    })
                }
            }
        }
        Ok(table)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (q, s) in &self.entries {
            writeln!(w, "{q}\t{}\t{}", s.frequency, s.click_ratio)?;
        }
        Ok(())
    }
}

/// Compute the reduced feature vector for a single-query session.
pub fn extract_single_query_features(
    session: &Session,
    stats: &QueryStatsTable,
    cfg: &FeatureConfig,
) -> Result<ReducedFeatureVector> {
    if session.queries.len() != 1 {
        return Err(Error::MultiQuerySession);
    }
    let q = &session.queries[0];
    let dwells: Vec<f64> = q.clicks.iter().map(|c| sec(c.dwell_ms)).collect();
    let n_clicks = dwells.len() as f64;
    let mut rv = ReducedFeatureVector::empty();

    rv.set(ReducedId::SumClickDwell, dwells.iter().sum());
    if n_clicks > 0.0 {
        rv.set(ReducedId::ClickDwell, dwells.iter().sum::<f64>() / n_clicks);
    }
    rv.set(ReducedId::NumClick, n_clicks);
    let count_ge =
        |thr: f64| dwells.iter().filter(|d| **d >= thr).count() as f64;
    let count_lt = |thr: f64| dwells.iter().filter(|d| **d < thr).count() as f64;
    rv.set(ReducedId::NumClickGe40, count_ge(cfg.dwell.q_click_ge40));
    rv.set(ReducedId::NumClickGe60, count_ge(cfg.dwell.q_click_ge60));
    rv.set(ReducedId::NumClickLt20, count_lt(cfg.dwell.q_click_lt20));
    rv.set(ReducedId::NumClickLt5, count_lt(cfg.dwell.q_click_lt5));
    rv.set(ReducedId::NumClickGe185, count_ge(cfg.dwell.s_click_ge185));
    rv.set(ReducedId::NumClickLt10, count_lt(cfg.dwell.s_click_lt10));
    if !q.clicks.is_empty() {
        let pos: Vec<f64> = q.clicks.iter().map(|c| c.rank_pos as f64).collect();
        rv.set(ReducedId::AvgClickPos, pos.iter().sum::<f64>() / n_clicks);
        rv.set(
            ReducedId::MinClickPos,
            pos.iter().copied().fold(f64::INFINITY, f64::min),
        );
        rv.set(
            ReducedId::MaxClickPos,
            pos.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
    }
    rv.set(ReducedId::NoClick, if q.clicks.is_empty() { 1.0 } else { 0.0 });
    rv.set(ReducedId::Qlength, q.char_len() as f64);
    rv.set(ReducedId::SessionDuration, sec(session.duration_ms));
    let qs = stats.lookup(&q.text);
    rv.set(ReducedId::QueryFrequency, qs.frequency);
    rv.set(ReducedId::QueryClickRatio, qs.click_ratio);
    Ok(rv)
}

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Write the full feature matrix: goal_id first, then canonical slot
/// names; empty cell means missing.
pub fn write_feature_csv<W: Write>(w: W, rows: &[(String, FeatureVector)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["goal_id".to_string()];
    header.extend(FeatureId::ALL.iter().map(|f| f.name().to_string()));
    wtr.write_record(&header)?;
    for (goal_id, fv) in rows {
        let mut rec = vec![goal_id.clone()];
        rec.extend(fv.slots().iter().map(|v| cell(*v)));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Write the reduced (single-query) feature matrix.
pub fn write_reduced_csv<W: Write>(w: W, rows: &[(String, ReducedFeatureVector)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["goal_id".to_string()];
    header.extend(ReducedId::ALL.iter().map(|f| f.name().to_string()));
    wtr.write_record(&header)?;
    for (goal_id, rv) in rows {
        let mut rec = vec![goal_id.clone()];
        rec.extend(rv.slots().iter().map(|v| cell(*v)));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

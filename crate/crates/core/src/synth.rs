//! Seeded synthetic session generator.
//!
//! Samples a satisfaction label from the configured prior, then draws the
//! session's behavior from that label's parameter block. The blocks plant
//! the qualitative structure the evaluation expects: outcome signals
//! (dwell, long clicks) rise monotonically with the label, while cost and
//! effort signals (query count, click depth, reformulation) are low at
//! both label extremes and high in the middle - dissatisfied users give
//! up quickly and very satisfied users finish quickly.
//!
//! Output is deterministic given the seed: each session derives its own
//! RNG substream from `seed` and its index, so parallel and sequential
//! generation emit identical bytes.

use crate::features::QueryStatsTable;
use crate::session::{BehaviorEvent, EventKind, InputType};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Which query pool a single-query session draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryPool {
    /// Head queries, present in the stats table with high frequency.
    Hot,
    /// Torso queries, present with moderate frequency.
    Normal,
    /// Unseen tail queries, absent from the stats table.
    Fresh,
}

/// Behavior block for multi-query sessions of one label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiBlock {
    pub queries: (usize, usize),
    pub clicks_per_query: (usize, usize),
    pub dwell_s: (f64, f64),
    /// Fraction of clicks drawn from the short-dwell range instead.
    pub short_frac: f64,
    pub short_dwell_s: (f64, f64),
    pub rank: (u32, u32),
    pub page_turn_prob: f64,
    /// Fraction of characters mutated between adjacent queries.
    pub reform_intensity: f64,
    pub think_s: (f64, f64),
    /// Idle time before the next query when a query got no clicks.
    pub idle_s: (f64, f64),
    pub query_len: (usize, usize),
}

/// Behavior block for single-query sessions of one label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingleBlock {
    pub no_click_prob: f64,
    pub no_click_pool: QueryPool,
    pub no_click_duration_s: (f64, f64),
    pub clicked_pool: QueryPool,
    pub clicks: (usize, usize),
    pub dwell_s: (f64, f64),
    pub rank: (u32, u32),
}

/// Generator configuration.
///
/// Each label owns a set of behavior modes sampled uniformly; the modes
/// overlap between adjacent labels (so classification is noisy rather
/// than trivial) and cross over in count-vs-dwell structure (so linear
/// boundaries cannot fully separate them).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_sessions: usize,
    pub label_prior: [f64; 4],
    pub single_query_fraction: f64,
    /// Probability that a session's behavior is drawn from an adjacent
    /// label's modes while keeping its own truth label. This plants the
    /// irreducible confusion between neighboring satisfaction levels.
    pub adjacent_confusion: f64,
    pub seed: u64,
    pub start_ts_ms: i64,
    pub multi_blocks: [Vec<MultiBlock>; 4],
    pub single_blocks: [SingleBlock; 4],
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_sessions: 1000,
            label_prior: [0.182, 0.182, 0.413, 0.223],
            single_query_fraction: 0.325,
            adjacent_confusion: 0.12,
            seed: 0,
            start_ts_ms: 1_500_000_000_000,
            multi_blocks: [
                vec![
                    // Low: give up fast - few queries, hardly any clicks
                    MultiBlock {
                        queries: (2, 3),
                        clicks_per_query: (0, 1),
                        dwell_s: (2.0, 12.0),
                        short_frac: 0.0,
                        short_dwell_s: (2.0, 5.0),
                        rank: (1, 4),
                        page_turn_prob: 0.05,
                        reform_intensity: 0.3,
                        think_s: (1.0, 4.0),
                        idle_s: (3.0, 10.0),
                        query_len: (4, 9),
                    },
                    // Low: deceptive results - clicks happen but all bounce
                    MultiBlock {
                        queries: (2, 4),
                        clicks_per_query: (1, 3),
                        dwell_s: (2.0, 9.0),
                        short_frac: 0.0,
                        short_dwell_s: (2.0, 5.0),
                        rank: (1, 5),
                        page_turn_prob: 0.2,
                        reform_intensity: 0.5,
                        think_s: (1.0, 4.0),
                        idle_s: (3.0, 10.0),
                        query_len: (5, 10),
                    },
                ],
                // Medium and High form a deliberate dwell-by-rank
                // crossover: Medium is either short dwells on top ranks
                // (skimming) or long dwells deep down (fruitless digging),
                // High is the opposite pairing. Nuisance distributions
                // (clicks, reformulation, page turns) are kept close, so
                // the pair is only separable through the interaction.
                vec![
                    // Medium: skimming top results without luck
                    MultiBlock {
                        queries: (3, 6),
                        clicks_per_query: (1, 2),
                        dwell_s: (5.0, 30.0),
                        short_frac: 0.1,
                        short_dwell_s: (2.0, 6.0),
                        rank: (1, 4),
                        page_turn_prob: 0.35,
                        reform_intensity: 0.55,
                        think_s: (1.0, 5.0),
                        idle_s: (5.0, 18.0),
                        query_len: (6, 13),
                    },
                    // Medium: fruitless deep digging, long reads that
                    // never quite answer
                    MultiBlock {
                        queries: (3, 6),
                        clicks_per_query: (1, 2),
                        dwell_s: (40.0, 110.0),
                        short_frac: 0.1,
                        short_dwell_s: (2.0, 6.0),
                        rank: (5, 10),
                        page_turn_prob: 0.35,
                        reform_intensity: 0.55,
                        think_s: (1.0, 5.0),
                        idle_s: (5.0, 18.0),
                        query_len: (6, 13),
                    },
                ],
                vec![
                    // High: well-ranked results read thoroughly
                    MultiBlock {
                        queries: (2, 5),
                        clicks_per_query: (1, 2),
                        dwell_s: (40.0, 130.0),
                        short_frac: 0.1,
                        short_dwell_s: (4.0, 10.0),
                        rank: (1, 4),
                        page_turn_prob: 0.3,
                        reform_intensity: 0.5,
                        think_s: (1.0, 5.0),
                        idle_s: (5.0, 15.0),
                        query_len: (6, 12),
                    },
                    // High: efficient harvest of niche answers from
                    // deeper ranks
                    MultiBlock {
                        queries: (2, 5),
                        clicks_per_query: (1, 2),
                        dwell_s: (10.0, 35.0),
                        short_frac: 0.1,
                        short_dwell_s: (4.0, 10.0),
                        rank: (4, 9),
                        page_turn_prob: 0.3,
                        reform_intensity: 0.5,
                        think_s: (1.0, 5.0),
                        idle_s: (5.0, 15.0),
                        query_len: (6, 12),
                    },
                ],
                vec![
                    // Very High: quick success - few queries, long dwells, top ranks
                    MultiBlock {
                        queries: (2, 3),
                        clicks_per_query: (1, 2),
                        dwell_s: (60.0, 300.0),
                        short_frac: 0.0,
                        short_dwell_s: (5.0, 10.0),
                        rank: (1, 2),
                        page_turn_prob: 0.02,
                        reform_intensity: 0.15,
                        think_s: (1.0, 3.0),
                        idle_s: (3.0, 8.0),
                        query_len: (3, 6),
                    },
                    // Very High: single deep read after a quick refinement
                    MultiBlock {
                        queries: (2, 2),
                        clicks_per_query: (1, 1),
                        dwell_s: (100.0, 400.0),
                        short_frac: 0.0,
                        short_dwell_s: (5.0, 10.0),
                        rank: (1, 3),
                        page_turn_prob: 0.05,
                        reform_intensity: 0.2,
                        think_s: (1.0, 3.0),
                        idle_s: (3.0, 8.0),
                        query_len: (3, 7),
                    },
                ],
            ],
            single_blocks: [
                // Low: rare query, mostly abandoned fast
                SingleBlock {
                    no_click_prob: 0.7,
                    no_click_pool: QueryPool::Fresh,
                    no_click_duration_s: (2.0, 8.0),
                    clicked_pool: QueryPool::Normal,
                    clicks: (1, 1),
                    dwell_s: (2.0, 10.0),
                    rank: (1, 3),
                },
                // Medium: some digging, short-to-mid dwells
                SingleBlock {
                    no_click_prob: 0.0,
                    no_click_pool: QueryPool::Normal,
                    no_click_duration_s: (10.0, 30.0),
                    clicked_pool: QueryPool::Normal,
                    clicks: (1, 2),
                    dwell_s: (5.0, 45.0),
                    rank: (3, 9),
                },
                // High: clicked and held
                SingleBlock {
                    no_click_prob: 0.0,
                    no_click_pool: QueryPool::Normal,
                    no_click_duration_s: (10.0, 30.0),
                    clicked_pool: QueryPool::Normal,
                    clicks: (1, 2),
                    dwell_s: (35.0, 140.0),
                    rank: (2, 5),
                },                // Very High: head query answered by the result page itself
                SingleBlock {
                    no_click_prob: 0.8,
                    no_click_pool: QueryPool::Hot,
                    no_click_duration_s: (2.0, 6.0),
                    clicked_pool: QueryPool::Hot,
                    clicks: (1, 1),
                    dwell_s: (60.0, 300.0),
                    rank: (1, 2),
                },
            ],
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.label_prior.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.label_prior.iter().any(|p| *p < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "label prior must be non-negative and sum to 1, got {sum}"
            )));
        }
        if !(0.0..=1.0).contains(&self.single_query_fraction) {
            return Err(Error::InvalidConfig(
                "single_query_fraction must be in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.adjacent_confusion) {
            return Err(Error::InvalidConfig(
                "adjacent_confusion must be in [0, 1]".into(),
            ));
        }
        if self.n_sessions == 0 {
            return Err(Error::InvalidConfig("n_sessions must be >= 1".into()));
        }
        Ok(())
    }
}

/// One annotation CSV row.
#[derive(Debug, Clone, Serialize)]
pub struct AnnotationRow {
    pub goal_id: String,
    pub annotator_id: String,
    pub session_score: f64,
    pub q_scores: Vec<f64>,
}

/// Everything the generator produces.
#[derive(Debug)]
pub struct SynthOutput {
    pub events: Vec<BehaviorEvent>,
    /// (goal_id, label), one per session, in goal order.
    pub truth: Vec<(String, usize)>,
    pub annotations: Vec<AnnotationRow>,
    pub stats: QueryStatsTable,
}

const LATIN: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
const CJK: &[char] = &[
    '的', '一', '是', '不', '了', '人', '我', '在', '有', '他', '这', '中', '大', '来', '上',
    '国', '个', '到', '说', '们',
];

fn random_string(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len.max(1))
        .map(|_| {
            if rng.gen_bool(0.35) {
                CJK[rng.gen_range(0..CJK.len())]
            } else {
                LATIN[rng.gen_range(0..LATIN.len())] as char
            }
        })
        .collect()
}

/// Mutate a query string: per-character replacement plus occasional
/// insertion or deletion, scaled by intensity.
fn mutate_query(rng: &mut ChaCha8Rng, prev: &str, intensity: f64) -> String {
    let mut chars: Vec<char> = prev.chars().collect();
    for c in chars.iter_mut() {
        if rng.gen_bool(intensity * 0.6) {
            *c = if rng.gen_bool(0.35) {
                CJK[rng.gen_range(0..CJK.len())]
            } else {
                LATIN[rng.gen_range(0..LATIN.len())] as char
            };
        }
    }
    if rng.gen_bool(intensity) {
        let pos = rng.gen_range(0..=chars.len());
        chars.insert(
            pos,
            LATIN[rng.gen_range(0..LATIN.len())] as char,
        );
    }
    if chars.len() > 2 && rng.gen_bool(intensity * 0.5) {
        let pos = rng.gen_range(0..chars.len());
        chars.remove(pos);
    }
    chars.into_iter().collect()
}

struct Pools {
    hot: Vec<String>,
    normal: Vec<String>,
}

fn build_pools_and_stats(seed: u64) -> (Pools, QueryStatsTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(seed, u64::MAX));
    let mut stats = QueryStatsTable::default();
    let hot: Vec<String> = (0..10)
        .map(|_| {
            let len = rng.gen_range(3..=6);
            let q = random_string(&mut rng, len);
            stats.insert(
                &q,
                rng.gen_range(500_000.0..2_000_000.0),
                rng.gen_range(0.1..0.3),
            );
            q
        })
        .collect();
    let normal: Vec<String> = (0..200)
        .map(|_| {
            let len = rng.gen_range(5..=12);
            let q = random_string(&mut rng, len);
            stats.insert(&q, rng.gen_range(200.0..5_000.0), rng.gen_range(0.3..0.7));
            q
        })
        .collect();
    (Pools { hot, normal }, stats)
}

fn sample_range_f(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 >= range.1 {
        range.0
    } else {
        rng.gen_range(range.0..range.1)
    }
}

/// Log-uniform draw: dwell times are heavy-tailed in real logs.
fn sample_dwell(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 >= range.1 {
        return range.0;
    }
    let (lo, hi) = (range.0.max(0.1).ln(), range.1.ln());
    rng.gen_range(lo..hi).exp()
}

fn sample_range_u(rng: &mut ChaCha8Rng, range: (usize, usize)) -> usize {
    rng.gen_range(range.0..=range.1)
}

fn sample_label(rng: &mut ChaCha8Rng, prior: &[f64; 4]) -> usize {
    let draw: f64 = rng.gen();
    let mut cum = 0.0;
    for (label, p) in prior.iter().enumerate() {
        cum += p;
        if draw < cum {
            return label;
        }
    }
    3
}

fn input_type(rng: &mut ChaCha8Rng, first: bool) -> InputType {
    if first {
        return InputType::Manual;
    }
    let draw: f64 = rng.gen();
    if draw < 0.5 {
        InputType::Manual
    } else if draw < 0.7 {
        InputType::Suggestion
    } else if draw < 0.9 {
        InputType::RelatedSearch
    } else {
        InputType::History
    }
}

struct SessionDraw {
    events: Vec<BehaviorEvent>,
    label: usize,
    n_queries: usize,
}

fn base_event(goal_id: &str, user_id: &str, ts: i64, kind: EventKind) -> BehaviorEvent {
    BehaviorEvent {
        goal_id: goal_id.to_string(),
        user_id: user_id.to_string(),
        ts_ms: ts,
        kind,
        query_text: None,
        input_type: None,
        url: None,
        rank_pos: None,
        page_num: None,
    }
}

fn push_query(events: &mut Vec<BehaviorEvent>, goal: &str, user: &str, ts: i64, text: &str, it: InputType) {
    let mut e = base_event(goal, user, ts, EventKind::Query);
    e.query_text = Some(text.to_string());
    e.input_type = Some(it);
    events.push(e);
}

fn push_click(events: &mut Vec<BehaviorEvent>, goal: &str, user: &str, ts: i64, rank: u32, rng: &mut ChaCha8Rng) {
    let mut e = base_event(goal, user, ts, EventKind::Click);
    e.url = Some(format!("http://site{}.example/p{}", rng.gen_range(0..500), rng.gen_range(0..90)));
    e.rank_pos = Some(rank);
    e.page_num = Some(1 + (rank - 1) / 10);
    events.push(e);
}

fn ms(s: f64) -> i64 {
    (s * 1000.0).round() as i64
}

fn gen_session(cfg: &SynthConfig, pools: &Pools, index: usize) -> SessionDraw {
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(cfg.seed, index as u64));
    let goal = format!("g{index:06}");
    let user = format!("u{:04}", index % 797);
    let label = sample_label(&mut rng, &cfg.label_prior);
    // behavior may come from a neighboring level; the truth label stays
    let behavior = if rng.gen_bool(cfg.adjacent_confusion) {
        match label {
            0 => 1,
            3 => 2,
            l => {
                if rng.gen_bool(0.5) {
                    l - 1
                } else {
                    l + 1
                }
            }
        }
    } else {
        label
    };
    let single = rng.gen_bool(cfg.single_query_fraction);
    let mut t = cfg.start_ts_ms + index as i64 * 3_600_000;
    let mut events = Vec::new();

    let pick = |rng: &mut ChaCha8Rng, pool: QueryPool| -> String {
        match pool {
            QueryPool::Hot => pools.hot[rng.gen_range(0..pools.hot.len())].clone(),
            QueryPool::Normal => pools.normal[rng.gen_range(0..pools.normal.len())].clone(),
            QueryPool::Fresh => {
                let len = rng.gen_range(6..=12);
                random_string(rng, len)
            }
        }
    };

    if single {
        let block = &cfg.single_blocks[behavior];
        if rng.gen_bool(block.no_click_prob) {
            let text = pick(&mut rng, block.no_click_pool);
            push_query(&mut events, &goal, &user, t, &text, InputType::Manual);
            t += ms(sample_range_f(&mut rng, block.no_click_duration_s));
        } else {
            let text = pick(&mut rng, block.clicked_pool);
            push_query(&mut events, &goal, &user, t, &text, InputType::Manual);
            t += ms(sample_range_f(&mut rng, (1.0, 3.0)));
            for _ in 0..sample_range_u(&mut rng, block.clicks) {
                let rank = rng.gen_range(block.rank.0..=block.rank.1);
                push_click(&mut events, &goal, &user, t, rank, &mut rng);
                t += ms(sample_dwell(&mut rng, block.dwell_s));
            }
        }
        events.push(base_event(&goal, &user, t, EventKind::SessionEnd));
        return SessionDraw {
            events,
            label,
            n_queries: 1,
        };
    }

    let modes = &cfg.multi_blocks[behavior];
    let block = &modes[rng.gen_range(0..modes.len())];
    let n_queries = sample_range_u(&mut rng, block.queries);
    let base_len = sample_range_u(&mut rng, block.query_len);
    let mut text = random_string(&mut rng, base_len);
    for qi in 0..n_queries {
        if qi > 0 {
            text = mutate_query(&mut rng, &text, block.reform_intensity);
        }
        let it = input_type(&mut rng, qi == 0);
        push_query(&mut events, &goal, &user, t, &text, it);
        let n_clicks = sample_range_u(&mut rng, block.clicks_per_query);
        if n_clicks == 0 {
            t += ms(sample_range_f(&mut rng, block.idle_s));
        } else {
            t += ms(sample_range_f(&mut rng, block.think_s));
            for _ in 0..n_clicks {
                let rank = rng.gen_range(block.rank.0..=block.rank.1);
                push_click(&mut events, &goal, &user, t, rank, &mut rng);
                let dwell = if rng.gen_bool(block.short_frac) {
                    sample_dwell(&mut rng, block.short_dwell_s)
                } else {
                    sample_dwell(&mut rng, block.dwell_s)
                };
                t += ms(dwell);
            }
        }
        if rng.gen_bool(block.page_turn_prob) {
            events.push(base_event(&goal, &user, t, EventKind::PageTurn));
            t += ms(sample_range_f(&mut rng, (1.0, 3.0)));
        }
    }
    events.push(base_event(&goal, &user, t, EventKind::SessionEnd));
    SessionDraw {
        events,
        label,
        n_queries,
    }
}

/// Annotator score centers per label; jitter keeps each score in range
/// while the three scores average exactly to the center, so the mean
/// discretizes back to the planted label.
const SESSION_CENTERS: [f64; 4] = [0.35, 1.15, 2.15, 2.8];
const QUERY_CENTERS: [f64; 4] = [0.3, 0.9, 1.5, 1.9];

fn annotations_for(
    rng: &mut ChaCha8Rng,
    goal_id: &str,
    label: usize,
    n_queries: usize,
) -> Vec<AnnotationRow> {
    let center = SESSION_CENTERS[label];
    let d1: f64 = rng.gen_range(-0.1..0.1);
    let d2: f64 = rng.gen_range(-0.1..0.1);
    let scores = [center + d1, center + d2, center - d1 - d2];
    (0..3)
        .map(|a| {
            let q_scores = (0..n_queries)
                .map(|_| {
                    (QUERY_CENTERS[label] + rng.gen_range(-0.1..0.1)).clamp(0.0, 2.0)
                })
                .collect();
            AnnotationRow {
                goal_id: goal_id.to_string(),
                annotator_id: format!("a{}", a + 1),
                session_score: scores[a],
                q_scores,
            }
        })
        .collect()
}

/// Generate the full synthetic corpus.
pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let (pools, stats) = build_pools_and_stats(cfg.seed);
    let draws: Vec<SessionDraw> =
        crate::par::map_range(cfg.n_sessions, |i| gen_session(cfg, &pools, i));

    let mut events = Vec::new();
    let mut truth = Vec::new();
    let mut annotations = Vec::new();
    for (i, draw) in draws.into_iter().enumerate() {
        let goal_id = format!("g{i:06}");
        // annotator substream is independent of the behavior substream
        let mut ann_rng =
            ChaCha8Rng::seed_from_u64(crate::seed::mix(cfg.seed ^ 0xA44A, i as u64));
        annotations.extend(annotations_for(&mut ann_rng, &goal_id, draw.label, draw.n_queries));
        truth.push((goal_id, draw.label));
        events.extend(draw.events);
    }
    Ok(SynthOutput {
        events,
        truth,
        annotations,
        stats,
    })
}

impl SynthOutput {
    pub fn write_events<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_truth<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "goal_id,label")?;
        for (goal_id, label) in &self.truth {
            writeln!(w, "{goal_id},{label}")?;
        }
        Ok(())
    }

    pub fn write_annotations<W: Write>(&self, mut w: W) -> Result<()> {
        let max_q = self.annotations.iter().map(|a| a.q_scores.len()).max().unwrap_or(0);
        let mut header = "goal_id,annotator_id,session_score".to_string();
        for i in 1..=max_q {
            header.push_str(&format!(",q{i}"));
        }
        writeln!(w, "{header}")?;
        for a in &self.annotations {
            let mut row = format!("{},{},{}", a.goal_id, a.annotator_id, a.session_score);
            for q in &a.q_scores {
                row.push_str(&format!(",{q}"));
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }
}

/// Read the truth CSV written by the generator.
pub fn read_truth<R: std::io::BufRead>(reader: R) -> Result<Vec<(String, usize)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let goal = parts.next().unwrap_or("").to_string();
        let label: usize = parts
            .next()
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::MalformedRecord {
                line: idx + 1,
                reason: "expected goal_id,label".into(),
            })?;
        out.push((goal, label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::discretize_session_label;
    use crate::session::sessionize;

    fn small_cfg(n: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            n_sessions: n,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_bytes() {
        let cfg = small_cfg(50, 9);
        let a = synth_generate(&cfg).unwrap();
        let b = synth_generate(&cfg).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.write_events(&mut buf_a).unwrap();
        b.write_events(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        let mut ann_a = Vec::new();
        let mut ann_b = Vec::new();
        a.write_annotations(&mut ann_a).unwrap();
        b.write_annotations(&mut ann_b).unwrap();
        assert_eq!(ann_a, ann_b);
    }

    #[test]
    fn label_histogram_near_prior() {
        let cfg = small_cfg(1000, 7);
        let out = synth_generate(&cfg).unwrap();
        let mut counts = [0usize; 4];
        for (_, label) in &out.truth {
            counts[*label] += 1;
        }
        for (c, p) in counts.iter().zip(cfg.label_prior) {
            let frac = *c as f64 / 1000.0;
            assert!(
                (frac - p).abs() <= 0.03,
                "label fraction {frac} too far from prior {p}"
            );
        }
    }

    #[test]
    fn annotation_roundtrip_to_truth() {
        let out = synth_generate(&small_cfg(120, 3)).unwrap();
        for (goal_id, label) in &out.truth {
            let scores: Vec<f64> = out
                .annotations
                .iter()
                .filter(|a| &a.goal_id == goal_id)
                .map(|a| a.session_score)
                .collect();
            assert_eq!(scores.len(), 3);
            let mean = scores.iter().sum::<f64>() / 3.0;
            assert_eq!(
                discretize_session_label(mean).unwrap().value(),
                *label,
                "goal {goal_id}"
            );
        }
    }

    #[test]
    fn sessions_parse_back() {
        let out = synth_generate(&small_cfg(80, 5)).unwrap();
        let outcome = sessionize(out.events.clone());
        assert_eq!(outcome.sessions.len(), 80);
        assert!(outcome.orphans.is_empty());
        let singles = outcome.sessions.iter().filter(|s| s.is_single_query()).count();
        // 32.5% single-query fraction, loosely
        assert!((15..=55).contains(&singles), "singles = {singles}");
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = small_cfg(10, 1);
        cfg.label_prior = [0.5, 0.5, 0.5, 0.5];
        assert!(matches!(synth_generate(&cfg), Err(Error::InvalidConfig(_))));
        let mut cfg = small_cfg(10, 1);
        cfg.single_query_fraction = 1.5;
        assert!(synth_generate(&cfg).is_err());
        let cfg = small_cfg(0, 1);
        assert!(synth_generate(&cfg).is_err());
    }
}

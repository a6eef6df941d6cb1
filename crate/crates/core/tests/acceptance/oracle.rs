//! Brute-force reference feature extractor.
//!
//! Written independently of the library implementation: plain loops,
//! its own string metrics, default thresholds hardcoded, values taken
//! straight from the slot definitions. Slot order matches the canonical
//! catalog order.

use sesseval::session::{InputType, QueryRecord, Session};

pub const N_SLOTS: usize = 38;

/// Slots whose values are integer-valued by definition (counts,
/// min/max positions, exact differences); these must match exactly.
pub const EXACT_SLOTS: &[usize] = &[
    6, 7, 8, 9, 10, 11, 12, 14, 15, 16, 17, 18, 20, 23, 24, 26, 27, 32, 33, 36, 37,
];

fn dwell_s(q: &QueryRecord, i: usize) -> f64 {
    q.clicks[i].dwell_ms as f64 / 1000.0
}

fn full_matrix_edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            let mut best = d[i - 1][j] + 1;
            if d[i][j - 1] + 1 < best {
                best = d[i][j - 1] + 1;
            }
            if d[i - 1][j - 1] + cost < best {
                best = d[i - 1][j - 1] + cost;
            }
            d[i][j] = best;
        }
    }
    d[a.len()][b.len()]
}

fn char_jaccard(a: &str, b: &str) -> f64 {
    let mut sa: Vec<char> = a.chars().collect();
    sa.sort_unstable();
    sa.dedup();
    let mut sb: Vec<char> = b.chars().collect();
    sb.sort_unstable();
    sb.dedup();
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    let mut inter = 0usize;
    for c in &sa {
        if sb.contains(c) {
            inter += 1;
        }
    }
    let union = sa.len() + sb.len() - inter;
    inter as f64 / union as f64
}

fn mean_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut total = 0.0;
    for v in values {
        total += v;
    }
    Some(total / values.len() as f64)
}

/// Compute all 38 slots for a multi-query session.
pub fn reference_features(s: &Session) -> Vec<Option<f64>> {
    assert!(s.queries.len() >= 2, "oracle needs a multi-query session");
    let qs = &s.queries;
    let nq = qs.len();
    let mut out: Vec<Option<f64>> = vec![None; N_SLOTS];

    // per-query primitives
    let mut q_sum_dwell = Vec::new();
    let mut q_ge40 = Vec::new();
    let mut q_ge60 = Vec::new();
    let mut q_lt20 = Vec::new();
    let mut q_lt5 = Vec::new();
    let mut q_lt50 = Vec::new();
    for q in qs {
        let mut sum = 0.0;
        let (mut ge40, mut ge60, mut lt20, mut lt5, mut lt50) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..q.clicks.len() {
            let d = dwell_s(q, i);
            sum += d;
            if d >= 40.0 {
                ge40 += 1.0;
            }
            if d >= 60.0 {
                ge60 += 1.0;
            }
            if d < 20.0 {
                lt20 += 1.0;
            }
            if d < 5.0 {
                lt5 += 1.0;
            }
            if d < 50.0 {
                lt50 += 1.0;
            }
        }
        q_sum_dwell.push(sum);
        q_ge40.push(ge40);
        q_ge60.push(ge60);
        q_lt20.push(lt20);
        q_lt5.push(lt5);
        q_lt50.push(lt50);
    }

    // 0 Q_SumClickDwell
    out[0] = mean_of(&q_sum_dwell);
    // 1 S_SumClickDwell: flat sum over every click in session order
    let mut s_sum = 0.0;
    let mut n_clicks = 0usize;
    for q in qs {
        for i in 0..q.clicks.len() {
            s_sum += dwell_s(q, i);
            n_clicks += 1;
        }
    }
    out[1] = Some(s_sum);
    // 2 S_ClickDwell
    if n_clicks > 0 {
        out[2] = Some(s_sum / n_clicks as f64);
    }
    // 3 QueryInterval, 4 S_SumQueryInterval
    let intervals: Vec<f64> = qs.iter().map(|q| q.interval_ms as f64 / 1000.0).collect();
    out[3] = mean_of(&intervals);
    let mut interval_sum = 0.0;
    for v in &intervals {
        interval_sum += v;
    }
    out[4] = Some(interval_sum);
    // 5 SessionDuration
    out[5] = Some(s.duration_ms as f64 / 1000.0);
    // 6..=9 per-query dwell-threshold means
    out[6] = mean_of(&q_ge40);
    out[7] = mean_of(&q_ge60);
    out[8] = mean_of(&q_lt20);
    out[9] = mean_of(&q_lt5);
    // 10 S_num_click
    out[10] = Some(n_clicks as f64);
    // 11, 12 session dwell-threshold counts
    let (mut ge185, mut lt10) = (0.0, 0.0);
    for q in qs {
        for i in 0..q.clicks.len() {
            let d = dwell_s(q, i);
            if d >= 185.0 {
                ge185 += 1.0;
            }
            if d < 10.0 {
                lt10 += 1.0;
            }
        }
    }
    out[11] = Some(ge185);
    out[12] = Some(lt10);
    // 13 S_Qlength, 27 S_MaxQlength
    let lens: Vec<f64> = qs.iter().map(|q| q.text.chars().count() as f64).collect();
    out[13] = mean_of(&lens);
    let mut max_len = lens[0];
    for v in &lens {
        if *v > max_len {
            max_len = *v;
        }
    }
    out[27] = Some(max_len);
    // 14 S_num_query
    out[14] = Some(nq as f64);
    // 15..=18 input-type counts
    let count_kind = |k: InputType| -> f64 {
        let mut n = 0.0;
        for q in qs {
            if q.input_type == k {
                n += 1.0;
            }
        }
        n
    };
    out[15] = Some(count_kind(InputType::Manual));
    out[16] = Some(count_kind(InputType::History));
    out[17] = Some(count_kind(InputType::Suggestion));
    out[18] = Some(count_kind(InputType::RelatedSearch));
    // positions: 19 S_Avg, 20 S_Min, 21 Q_Min, 22 Q_Avg, 24 S_Max, 25 Q_Max
    if n_clicks > 0 {
        let mut pos_sum = 0.0;
        let mut pos_min = f64::MAX;
        let mut pos_max = f64::MIN;
        let mut per_q_min = Vec::new();
        let mut per_q_avg = Vec::new();
        let mut per_q_max = Vec::new();
        for q in qs {
            if q.clicks.is_empty() {
                continue;
            }
            let mut qmin = f64::MAX;
            let mut qmax = f64::MIN;
            let mut qsum = 0.0;
            for c in &q.clicks {
                let p = c.rank_pos as f64;
                pos_sum += p;
                if p < pos_min {
                    pos_min = p;
                }
                if p > pos_max {
                    pos_max = p;
                }
                if p < qmin {
                    qmin = p;
                }
                if p > qmax {
                    qmax = p;
                }
                qsum += p;
            }
            per_q_min.push(qmin);
            per_q_avg.push(qsum / q.clicks.len() as f64);
            per_q_max.push(qmax);
        }
        out[19] = Some(pos_sum / n_clicks as f64);
        out[20] = Some(pos_min);
        out[21] = mean_of(&per_q_min);
        out[22] = mean_of(&per_q_avg);
        out[24] = Some(pos_max);
        out[25] = mean_of(&per_q_max);
    }
    // 23 S_num_query_no_click
    let mut no_click = 0.0;
    for q in qs {
        if q.clicks.is_empty() {
            no_click += 1.0;
        }
    }
    out[23] = Some(no_click);
    // 26 S_num_forw_query
    let mut turns = 0.0;
    for q in qs {
        turns += q.page_turns as f64;
    }
    out[26] = Some(turns);
    // 28 QEditDistance, 29 QJaccardSim over adjacent pairs
    let mut dists = Vec::new();
    let mut sims = Vec::new();
    for w in qs.windows(2) {
        dists.push(full_matrix_edit_distance(&w[0].text, &w[1].text) as f64);
        sims.push(char_jaccard(&w[0].text, &w[1].text));
    }
    out[28] = mean_of(&dists);
    out[29] = mean_of(&sims);
    // 30 Q_num_click
    out[30] = Some(n_clicks as f64 / nq as f64);
    // change slots: last minus first
    out[31] = Some(q_sum_dwell[nq - 1] - q_sum_dwell[0]);
    out[32] = Some(q_ge60[nq - 1] - q_ge60[0]);
    out[33] = Some(q_lt50[nq - 1] - q_lt50[0]);
    if nq >= 3 {
        out[34] = Some(dists[dists.len() - 1] - dists[0]);
        out[35] = Some(sims[sims.len() - 1] - sims[0]);
    }
    out[36] = Some(lens[nq - 1] - lens[0]);
    let first = &qs[0];
    let last = &qs[nq - 1];
    if !first.clicks.is_empty() && !last.clicks.is_empty() {
        let maxpos = |q: &QueryRecord| {
            let mut m = f64::MIN;
            for c in &q.clicks {
                if (c.rank_pos as f64) > m {
                    m = c.rank_pos as f64;
                }
            }
            m
        };
        out[37] = Some(maxpos(last) - maxpos(first));
    }
    out
}

//! String similarity metrics over adjacent queries.

use std::collections::BTreeSet;

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// How query strings are tokenized for Jaccard similarity.
///
/// Single characters by default: query streams here are dominated by
/// CJK text where whitespace carries no token boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JaccardTokens {
    #[default]
    Chars,
    Whitespace,
}

fn token_set(s: &str, tokens: JaccardTokens) -> BTreeSet<String> {
    match tokens {
        JaccardTokens::Chars => s.chars().map(|c| c.to_string()).collect(),
        JaccardTokens::Whitespace => s.split_whitespace().map(|t| t.to_string()).collect(),
    }
}

/// Jaccard similarity of the token sets of `a` and `b`.
///
/// Two empty sets are identical by convention, so the result is 1.0.
pub fn jaccard_sim(a: &str, b: &str, tokens: JaccardTokens) -> f64 {
    let ta = token_set(a, tokens);
    let tb = token_set(b, tokens);
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let inter = ta.intersection(&tb).count();
    let union = ta.union(&tb).count();
    inter as f64 / union as f64
}

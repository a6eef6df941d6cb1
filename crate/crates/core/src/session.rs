//! Session domain model: behavior events, log parsing, sessionization by
//! goal id, and dwell/interval derivation.
//!
//! The event log is UTF-8 JSON Lines, one event object per line. Unknown
//! fields are ignored. Parsing is lenient by default: malformed lines are
//! reported with line numbers and skipped; strict mode turns them into an
//! error.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::BufRead;

/// Dwell cap applied when no later event bounds a click (default 10 min).
pub const DEFAULT_DWELL_CAP_MS: i64 = 600_000;

/// What the user did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Query,
    Click,
    PageTurn,
    SessionEnd,
}

/// How a query reached the search box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputType {
    Manual,
    Suggestion,
    RelatedSearch,
    History,
}

/// One raw log record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorEvent {
    pub goal_id: String,
    pub user_id: String,
    pub ts_ms: i64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_type: Option<InputType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_pos: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_num: Option<u32>,
}

impl BehaviorEvent {
    /// Field-level invariants that serde cannot express.
    fn validate(&self) -> std::result::Result<(), String> {
        if self.ts_ms < 0 {
            return Err(format!("negative timestamp {}", self.ts_ms));
        }
        match self.kind {
            EventKind::Query => {
                if self.query_text.as_deref().map_or(true, str::is_empty) {
                    return Err("query event without query_text".into());
                }
                if self.input_type.is_none() {
                    return Err("query event without input_type".into());
                }
            }
            EventKind::Click => {
                if self.url.is_none() {
                    return Err("click event without url".into());
                }
                match self.rank_pos {
                    None => return Err("click event without rank_pos".into()),
                    Some(0) => return Err("rank_pos must be >= 1".into()),
                    Some(_) => {}
                }
                if self.page_num == Some(0) {
                    return Err("page_num must be >= 1".into());
                }
            }
            EventKind::PageTurn => {
                if self.page_num == Some(0) {
                    return Err("page_num must be >= 1".into());
                }
            }
            EventKind::SessionEnd => {}
        }
        Ok(())
    }
}

/// A skipped input line and why.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MalformedRecord {
    pub line: usize,
    pub reason: String,
}

/// Result of parsing an event stream.
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub events: Vec<BehaviorEvent>,
    pub malformed: Vec<MalformedRecord>,
}

/// Parse a JSON Lines event stream, preserving input order.
///
/// In lenient mode (`strict = false`) malformed lines are collected in
/// the outcome; in strict mode the first pass still scans the whole
/// stream and then fails if anything was malformed.
pub fn parse_log<R: BufRead>(reader: R, strict: bool) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<BehaviorEvent>(&line) {
            Ok(ev) => match ev.validate() {
                Ok(()) => out.events.push(ev),
                Err(reason) => out.malformed.push(MalformedRecord { line: line_no, reason }),
            },
            Err(e) => out.malformed.push(MalformedRecord {
                line: line_no,
                reason: e.to_string(),
            }),
        }
    }
    if strict && !out.malformed.is_empty() {
        let first = &out.malformed[0];
        return Err(Error::StrictParse {
            count: out.malformed.len(),
            first_line: first.line,
            first_reason: first.reason.clone(),
        });
    }
    Ok(out)
}

/// One click attributed to a query.
///
/// `next_action_ts_ms` is the timestamp of the next observed event in the
/// same session (any kind, including session end); it is what bounds the
/// dwell. `None` means the click closes the log for this session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClickRecord {
    pub url: String,
    pub rank_pos: u32,
    pub page_num: u32,
    pub ts_ms: i64,
    pub next_action_ts_ms: Option<i64>,
    pub dwell_ms: i64,
}

/// One query with its attributed interactions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryRecord {
    pub text: String,
    pub input_type: InputType,
    pub issue_ts_ms: i64,
    pub clicks: Vec<ClickRecord>,
    pub page_turns: u32,
    /// Issue-to-issue time to the next query, or to session end for the
    /// last query. Filled by [`derive_dwells`].
    pub interval_ms: i64,
}

impl QueryRecord {
    /// Query length in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// All behavior for one user goal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    pub goal_id: String,
    pub user_id: String,
    pub queries: Vec<QueryRecord>,
    /// Last event timestamp minus first query timestamp.
    pub duration_ms: i64,
    /// Timestamp of the last event (session end if one was logged).
    pub end_ts_ms: i64,
}

impl Session {
    pub fn query_count(&self) -> usize {
        self.queries.len()
    }

    pub fn click_count(&self) -> usize {
        self.queries.iter().map(|q| q.clicks.len()).sum()
    }

    pub fn is_single_query(&self) -> bool {
        self.queries.len() == 1
    }
}

/// A click or page turn that arrived before any query of its goal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrphanEvent {
    pub goal_id: String,
    pub kind: EventKind,
    pub ts_ms: i64,
}

/// Result of grouping events into sessions.
#[derive(Debug, Default)]
pub struct SessionizeOutcome {
    pub sessions: Vec<Session>,
    pub orphans: Vec<OrphanEvent>,
    /// Goal ids that contained no query event at all.
    pub dropped_goals: Vec<String>,
}

/// Group events into one session per goal id.
///
/// Events may interleave across goals. Within a goal they are stably
/// sorted by timestamp; clicks and page turns attach to the most recent
/// preceding query. Sessions come out in order of first appearance of
/// their goal id in the input, so the whole pass is deterministic.
pub fn sessionize(events: Vec<BehaviorEvent>) -> SessionizeOutcome {
    let mut order: Vec<String> = Vec::new();
    let mut by_goal: HashMap<String, Vec<BehaviorEvent>> = HashMap::new();
    for ev in events {
        if !by_goal.contains_key(&ev.goal_id) {
            order.push(ev.goal_id.clone());
        }
        by_goal.entry(ev.goal_id.clone()).or_default().push(ev);
    }

    let mut out = SessionizeOutcome::default();
    for goal_id in order {
        let mut evs = by_goal.remove(&goal_id).expect("goal present");
        evs.sort_by_key(|e| e.ts_ms);

        let mut queries: Vec<QueryRecord> = Vec::new();
        let mut user_id = String::new();
        for (pos, ev) in evs.iter().enumerate() {
            if user_id.is_empty() {
                user_id = ev.user_id.clone();
            }
            match ev.kind {
                EventKind::Query => queries.push(QueryRecord {
                    text: ev.query_text.clone().unwrap_or_default(),
                    input_type: ev.input_type.unwrap_or(InputType::Manual),
                    issue_ts_ms: ev.ts_ms,
                    clicks: Vec::new(),
                    page_turns: 0,
                    interval_ms: 0,
                }),
                EventKind::Click => {
                    if let Some(q) = queries.last_mut() {
                        q.clicks.push(ClickRecord {
                            url: ev.url.clone().unwrap_or_default(),
                            rank_pos: ev.rank_pos.unwrap_or(1),
                            page_num: ev.page_num.unwrap_or(1),
                            ts_ms: ev.ts_ms,
                            next_action_ts_ms: evs.get(pos + 1).map(|n| n.ts_ms),
                            dwell_ms: 0,
                        });
                    } else {
                        out.orphans.push(OrphanEvent {
                            goal_id: goal_id.clone(),
                            kind: ev.kind,
                            ts_ms: ev.ts_ms,
                        });
                    }
                }
                EventKind::PageTurn => {
                    if let Some(q) = queries.last_mut() {
                        q.page_turns += 1;
                    } else {
                        out.orphans.push(OrphanEvent {
                            goal_id: goal_id.clone(),
                            kind: ev.kind,
                            ts_ms: ev.ts_ms,
                        });
                    }
                }
                EventKind::SessionEnd => {}
            }
        }

        if queries.is_empty() {
            out.dropped_goals.push(goal_id);
            continue;
        }
        let first_ts = queries[0].issue_ts_ms;
        let end_ts = evs.last().map(|e| e.ts_ms).unwrap_or(first_ts);
        out.sessions.push(Session {
            goal_id,
            user_id,
            queries,
            duration_ms: (end_ts - first_ts).max(0),
            end_ts_ms: end_ts,
        });
    }
    out
}

/// Fill in click dwell times and query intervals.
///
/// Each click's dwell is the gap to the next event in the session,
/// clamped to `[0, cap_ms]`; a click with nothing after it gets `cap_ms`.
/// Query intervals are issue-to-issue, with the last query running to
/// session end. Pure and idempotent: derivation reads only timestamps.
pub fn derive_dwells(mut session: Session, cap_ms: i64) -> Session {
    let end_ts = session.end_ts_ms;
    let n = session.queries.len();
    for i in 0..n {
        let next_issue = if i + 1 < n {
            Some(session.queries[i + 1].issue_ts_ms)
        } else {
            None
        };
        let q = &mut session.queries[i];
        q.interval_ms = match next_issue {
            Some(ts) => ts - q.issue_ts_ms,
            None => (end_ts - q.issue_ts_ms).max(0),
        };
        for c in &mut q.clicks {
            c.dwell_ms = match c.next_action_ts_ms {
                Some(next) => (next - c.ts_ms).clamp(0, cap_ms),
                None => cap_ms,
            };
        }
    }
    session
}

/// Parse, sessionize, and derive dwells in one pass over a reader.
pub fn ingest<R: BufRead>(
    reader: R,
    strict: bool,
    cap_ms: i64,
) -> Result<(Vec<Session>, ParseReport)> {
    let parsed = parse_log(reader, strict)?;
    let n_events = parsed.events.len();
    let outcome = sessionize(parsed.events);
    let sessions: Vec<Session> = outcome
        .sessions
        .into_iter()
        .map(|s| derive_dwells(s, cap_ms))
        .collect();
    Ok((
        sessions,
        ParseReport {
            events: n_events,
            malformed: parsed.malformed,
            orphans: outcome.orphans,
            dropped_goals: outcome.dropped_goals,
        },
    ))
}

/// Ingest bookkeeping for reporting.
#[derive(Debug, Serialize)]
pub struct ParseReport {
    pub events: usize,
    pub malformed: Vec<MalformedRecord>,
    pub orphans: Vec<OrphanEvent>,
    pub dropped_goals: Vec<String>,
}

/// Write sessions as JSON Lines.
pub fn write_sessions<W: std::io::Write>(mut w: W, sessions: &[Session]) -> Result<()> {
    for s in sessions {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read sessions from JSON Lines.
pub fn read_sessions<R: BufRead>(reader: R) -> Result<Vec<Session>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Session = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: idx + 1,
            reason: format!("bad session record: {e}"),
        })?;
        out.push(s);
    }
    Ok(out)
}

//! Response parsing, simulation-based scoring and accuracy aggregation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{default_step_cap, rollout, Map, Move, RolloutResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("no move sequence found in response")]
pub struct Unparseable;

const BOX: &str = "\\boxed{";

fn parse_moves<'a>(tokens: impl Iterator<Item = &'a str>) -> Option<Vec<Move>> {
    let moves: Option<Vec<Move>> = tokens.map(|t| t.parse().ok()).collect();
    moves.filter(|m| !m.is_empty())
}

/// Extracts the answer from a model response.
///
/// The last `\boxed{...}` wins: its contents are split on commas and each
/// trimmed item must be a move name (any case). Without a box, the last
/// line made only of move names and separators (commas, whitespace,
/// brackets) is used.
pub fn parse_response(text: &str) -> Result<Vec<Move>, Unparseable> {
    if let Some(at) = text.rfind(BOX) {
        let body = &text[at + BOX.len()..];
        let inner = body.find('}').map(|end| &body[..end]).ok_or(Unparseable)?;
        return parse_moves(inner.split(',').map(str::trim)).ok_or(Unparseable);
    }
    text.lines()
        .rev()
        .find_map(|line| {
            let cleaned = line.trim().trim_start_matches('[').trim_end_matches(']');
            parse_moves(
                cleaned
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty()),
            )
        })
        .ok_or(Unparseable)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Hole,
    WrongEnd,
    Unparseable,
    Truncated,
    OffGrid,
}

impl FailureKind {
    pub fn name(self) -> &'static str {
        match self {
            FailureKind::Hole => "hole",
            FailureKind::WrongEnd => "wrong_end",
            FailureKind::Unparseable => "unparseable",
            FailureKind::Truncated => "truncated",
            FailureKind::OffGrid => "off_grid",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub success: bool,
    pub failure_kind: Option<FailureKind>,
    pub parsed_moves: Option<Vec<Move>>,
    pub rollout: Option<RolloutResult>,
}

impl Verdict {
    /// True when the replay bumped into the border at least once.
    pub fn off_grid_flagged(&self) -> bool {
        self.rollout.is_some_and(|r| r.off_grid_moves > 0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreConfig {
    /// Treat any off-grid move as a failure.
    pub strict_off_grid: bool,
    /// Replay budget; `None` uses four moves per cell.
    pub step_cap: Option<usize>,
}

/// Parses `response` and replays it on `map`.
pub fn score(map: &Map, response: &str, cfg: &ScoreConfig) -> Verdict {
    let Ok(moves) = parse_response(response) else {
        return Verdict {
            success: false,
            failure_kind: Some(FailureKind::Unparseable),
            parsed_moves: None,
            rollout: None,
        };
    };
    let cap = cfg.step_cap.unwrap_or_else(|| default_step_cap(map)).max(1);
    let r = rollout(map, &moves, cap);
    let failure_kind = if r.fell_in_hole {
        Some(FailureKind::Hole)
    } else if r.truncated {
        Some(FailureKind::Truncated)
    } else if cfg.strict_off_grid && r.off_grid_moves > 0 {
        Some(FailureKind::OffGrid)
    } else if !r.success {
        Some(FailureKind::WrongEnd)
    } else {
        None
    };
    Verdict {
        success: failure_kind.is_none(),
        failure_kind,
        parsed_moves: Some(moves),
        rollout: Some(r),
    }
}

/// Per-sample metadata used for bucketing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub split: String,
    pub size: usize,
    pub d_inf: usize,
    pub optimal_length: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
}

impl Bucket {
    fn add(&mut self, success: bool) {
        self.count += 1;
        self.correct += usize::from(success);
        self.accuracy = self.correct as f64 / self.count as f64;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub overall: Bucket,
    /// Unweighted mean of the per-size accuracies.
    pub size_average: f64,
    pub by_size: BTreeMap<usize, Bucket>,
    pub by_d_inf: BTreeMap<usize, Bucket>,
    pub by_optimal_length: BTreeMap<usize, Bucket>,
    pub failures: BTreeMap<FailureKind, usize>,
    pub off_grid_flagged: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub overall: Bucket,
    pub splits: BTreeMap<String, SplitReport>,
    pub failures: BTreeMap<FailureKind, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("no metadata for sample {0:?}")]
    MissingMeta(String),
}

/// Folds verdicts into accuracy tables keyed by split, then by size, exact
/// distance and exact optimal length. Buckets with no samples are absent.
pub fn aggregate<'a>(
    verdicts: impl IntoIterator<Item = (&'a str, &'a Verdict)>,
    meta: &BTreeMap<String, SampleMeta>,
) -> Result<Report, AggregateError> {
    let mut report = Report::default();
    for (id, v) in verdicts {
        let m = meta
            .get(id)
            .ok_or_else(|| AggregateError::MissingMeta(id.to_string()))?;
        let s = report.splits.entry(m.split.clone()).or_default();
        s.overall.add(v.success);
        s.by_size.entry(m.size).or_default().add(v.success);
        s.by_d_inf.entry(m.d_inf).or_default().add(v.success);
        s.by_optimal_length
            .entry(m.optimal_length)
            .or_default()
            .add(v.success);
        if let Some(k) = v.failure_kind {
            *s.failures.entry(k).or_default() += 1;
            *report.failures.entry(k).or_default() += 1;
        }
        s.off_grid_flagged += usize::from(v.off_grid_flagged());
        report.overall.add(v.success);
    }
    for s in report.splits.values_mut() {
        let n = s.by_size.len() as f64;
        s.size_average = s.by_size.values().map(|b| b.accuracy).sum::<f64>() / n;
    }
    Ok(report)
}

//! Responses in, verdicts and accuracy reports out.

use std::collections::BTreeMap;
use std::path::Path;

use lakebench_core::eval::{aggregate, score, Report, SampleMeta, ScoreConfig, Verdict};
use lakebench_core::model::Map;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::files::{write_bytes, write_json_pretty};

/// One line of a responses file. `error` marks a sample whose inference
/// failed; it is scored as unparseable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub id: String,
    #[serde(default)]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub id: String,
    pub meta: SampleMeta,
    #[serde(flatten)]
    pub verdict: Verdict,
}

/// Scores every map. Maps without a response are scored on an empty
/// response; responses for ids outside `maps` are a metadata error.
pub fn score_all(
    maps: &[Map],
    meta: &BTreeMap<String, SampleMeta>,
    responses: &[ResponseRecord],
    cfg: &ScoreConfig,
) -> Result<Vec<VerdictRecord>> {
    let mut by_id: BTreeMap<&str, &str> = BTreeMap::new();
    for r in responses {
        if !meta.contains_key(&r.id) {
            return Err(lakebench_core::eval::AggregateError::MissingMeta(r.id.clone()).into());
        }
        by_id.insert(&r.id, r.response.as_deref().unwrap_or(""));
    }
    let mut out: Vec<VerdictRecord> = maps
        .iter()
        .map(|m| {
            let id = m.id();
            let meta = meta
                .get(id)
                .cloned()
                .ok_or_else(|| lakebench_core::eval::AggregateError::MissingMeta(id.into()))?;
            let response = by_id.get(id).copied().unwrap_or("");
            Ok(VerdictRecord {
                id: id.to_string(),
                meta,
                verdict: score(m, response, cfg),
            })
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| (&a.meta.split, &a.id).cmp(&(&b.meta.split, &b.id)));
    Ok(out)
}

pub fn report_from_verdicts(records: &[VerdictRecord]) -> Result<Report> {
    let meta: BTreeMap<String, SampleMeta> = records
        .iter()
        .map(|r| (r.id.clone(), r.meta.clone()))
        .collect();
    if meta.len() != records.len() {
        return Err(Error::Config(vec!["verdicts: duplicate sample ids".into()]));
    }
    Ok(aggregate(
        records.iter().map(|r| (r.id.as_str(), &r.verdict)),
        &meta,
    )?)
}

/// Rows of `split,metric,bucket,count,correct,accuracy`.
pub fn report_csv(report: &Report) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["split", "metric", "bucket", "count", "correct", "accuracy"])?;
    let acc = |a: f64| format!("{a:.4}");
    w.write_record([
        "all",
        "overall",
        "",
        &report.overall.count.to_string(),
        &report.overall.correct.to_string(),
        &acc(report.overall.accuracy),
    ])?;
    for (name, s) in &report.splits {
        let mut row =
            |metric: &str, bucket: String, count: usize, correct: String, accuracy: String| {
                w.write_record([
                    name.as_str(),
                    metric,
                    &bucket,
                    &count.to_string(),
                    &correct,
                    &accuracy,
                ])
            };
        row(
            "overall",
            String::new(),
            s.overall.count,
            s.overall.correct.to_string(),
            acc(s.overall.accuracy),
        )?;
        row(
            "size_average",
            String::new(),
            s.overall.count,
            String::new(),
            acc(s.size_average),
        )?;
        for (metric, buckets) in [
            ("size", &s.by_size),
            ("d_inf", &s.by_d_inf),
            ("optimal_length", &s.by_optimal_length),
        ] {
            for (k, b) in buckets {
                row(
                    metric,
                    k.to_string(),
                    b.count,
                    b.correct.to_string(),
                    acc(b.accuracy),
                )?;
            }
        }
        for (kind, n) in &s.failures {
            row(
                "failure",
                kind.name().to_string(),
                *n,
                String::new(),
                String::new(),
            )?;
        }
        row(
            "off_grid_flagged",
            String::new(),
            s.off_grid_flagged,
            String::new(),
            String::new(),
        )?;
    }
    w.into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))
}

pub fn write_report(dir: &Path, report: &Report) -> Result<()> {
    write_json_pretty(&dir.join("report.json"), report)?;
    write_bytes(&dir.join("report.csv"), &report_csv(report)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sample_meta;
    use lakebench_core::fixtures::golden_map;
    use lakebench_core::FailureKind;

    #[test]
    fn missing_response_is_unparseable() {
        let m = golden_map();
        let meta = BTreeMap::from([("golden".to_string(), sample_meta(&m, "s").unwrap())]);
        let out = score_all(
            std::slice::from_ref(&m),
            &meta,
            &[],
            &ScoreConfig::default(),
        )
        .unwrap();
        assert_eq!(out[0].verdict.failure_kind, Some(FailureKind::Unparseable));
    }

    #[test]
    fn unknown_response_id_is_missing_meta() {
        let m = golden_map();
        let meta = BTreeMap::from([("golden".to_string(), sample_meta(&m, "s").unwrap())]);
        let r = ResponseRecord {
            id: "other".into(),
            response: Some("x".into()),
            error: None,
        };
        assert!(matches!(
            score_all(&[m], &meta, &[r], &ScoreConfig::default()),
            Err(Error::Aggregate(_))
        ));
    }

    #[test]
    fn verdict_json_and_csv() {
        let m = golden_map();
        let meta = BTreeMap::from([("golden".to_string(), sample_meta(&m, "s").unwrap())]);
        let r = ResponseRecord {
            id: "golden".into(),
            response: Some("\\boxed{UP, UP, UP, RIGHT}".into()),
            error: None,
        };
        let v = score_all(&[m], &meta, &[r], &ScoreConfig::default()).unwrap();
        let line = serde_json::to_string(&v[0]).unwrap();
        assert!(line.contains("\"success\":true"));
        let back: VerdictRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, v[0]);
        let report = report_from_verdicts(&v).unwrap();
        let csv = String::from_utf8(report_csv(&report).unwrap()).unwrap();
        assert!(csv.contains("s,size,8,1,1,1.0000"));
        assert!(csv.contains("s,optimal_length,4,1,1,1.0000"));
        assert!(csv.contains("s,d_inf,3,1,1,1.0000"));
    }
}

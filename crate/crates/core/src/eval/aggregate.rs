use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalError, Label, ScoredResult};
use crate::suites::{Dataset, QARecord};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959964;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interval {
    #[default]
    Wilson,
    /// Normal approximation (Wald), clamped to [0, 1].
    Normal,
}

/// Wilson score interval for `k` successes out of `n` at quantile `z`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let low = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if k == n { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

pub fn normal_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let p = k as f64 / n as f64;
    let half = z * (p * (1.0 - p) / n as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub correct: u64,
    pub first_common_location: u64,
    pub prompt_refusal: u64,
    pub insufficient_context: u64,
    pub other_wrong_location: u64,
}

impl LabelCounts {
    pub fn get(&self, label: Label) -> u64 {
        match label {
            Label::Correct => self.correct,
            Label::FirstCommonLocation => self.first_common_location,
            Label::PromptRefusal => self.prompt_refusal,
            Label::InsufficientContext => self.insufficient_context,
            Label::OtherWrongLocation => self.other_wrong_location,
        }
    }

    fn bump(&mut self, label: Label) {
        let slot = match label {
            Label::Correct => &mut self.correct,
            Label::FirstCommonLocation => &mut self.first_common_location,
            Label::PromptRefusal => &mut self.prompt_refusal,
            Label::InsufficientContext => &mut self.insufficient_context,
            Label::OtherWrongLocation => &mut self.other_wrong_location,
        };
        *slot += 1;
    }

    pub fn total(&self) -> u64 {
        Label::ALL.iter().map(|&l| self.get(l)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    /// (field, value) pairs in group-by order.
    pub key: Vec<(String, String)>,
    pub n: u64,
    pub n_correct: u64,
    pub accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub labels: LabelCounts,
}

const RECORD_FIELDS: &[&str] = &[
    "id",
    "kind",
    "question_kind",
    "environment",
    "order",
    "mislead_distance",
    "num_characters",
    "character_count",
    "num_locations",
    "horizon",
    "prompt_template_id",
    "paraphrased",
];

fn field_value(name: &str, record: &QARecord, result: &ScoredResult) -> Option<String> {
    if name == "model" {
        return Some(result.model.clone().unwrap_or_default());
    }
    record.field(name)
}

/// Numbers compare numerically, everything else as text.
fn cmp_values(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal),
        _ => a.cmp(b),
    }
}

fn cmp_keys(a: &[String], b: &[String]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| cmp_values(x, y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Accuracy and label counts per group. An empty `group_by` gives one
/// global row (none when there are no results).
pub fn aggregate(
    ds: &Dataset,
    results: &[ScoredResult],
    group_by: &[String],
    interval: Interval,
) -> Result<Vec<AggregateRow>, EvalError> {
    for name in group_by {
        let known = name == "model"
            || RECORD_FIELDS.contains(&name.as_str())
            || ds.records.iter().any(|r| r.meta.contains_key(name));
        if !known {
            return Err(EvalError::UnknownField(name.clone()));
        }
    }
    let by_id: HashMap<&str, &QARecord> = ds.records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut groups: BTreeMap<Vec<String>, LabelCounts> = BTreeMap::new();
    for res in results {
        let record = by_id
            .get(res.record_id.as_str())
            .ok_or_else(|| EvalError::RecordMismatch(res.record_id.clone()))?;
        let key = group_by
            .iter()
            .map(|name| field_value(name, record, res).ok_or_else(|| EvalError::UnknownField(name.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        groups.entry(key).or_default().bump(res.label);
    }
    let mut rows: Vec<(Vec<String>, LabelCounts)> = groups.into_iter().collect();
    rows.sort_by(|a, b| cmp_keys(&a.0, &b.0));
    Ok(rows
        .into_iter()
        .map(|(key, labels)| {
            let n = labels.total();
            let k = labels.correct;
            let (ci_low, ci_high) = match interval {
                Interval::Wilson => wilson_interval(k, n, Z95),
                Interval::Normal => normal_interval(k, n, Z95),
            };
            AggregateRow {
                key: group_by.iter().cloned().zip(key).collect(),
                n,
                n_correct: k,
                accuracy: k as f64 / n as f64,
                ci_low,
                ci_high,
                labels,
            }
        })
        .collect())
}

/// The report as CSV: group keys, counts, accuracy and interval, then one
/// column per label.
pub fn report_to_string(group_by: &[String], rows: &[AggregateRow]) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = group_by.to_vec();
    header.extend(["n", "n_correct", "accuracy", "ci_low", "ci_high"].map(String::from));
    header.extend(Label::ALL.iter().map(|l| l.as_str().to_owned()));
    w.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = row.key.iter().map(|(_, v)| v.clone()).collect();
        rec.push(row.n.to_string());
        rec.push(row.n_correct.to_string());
        rec.extend([row.accuracy, row.ci_low, row.ci_high].map(|x| format!("{x:.6}")));
        rec.extend(Label::ALL.iter().map(|&l| row.labels.get(l).to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| EvalError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_report(group_by: &[String], rows: &[AggregateRow], path: &Path) -> Result<(), EvalError> {
    std::fs::write(path, report_to_string(group_by, rows)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{score_dataset, FinishReason, ModelResponse, ScoreOptions};
    use crate::suites::{gen_mislead_suite, MisleadConfig};

    fn close(a: (f64, f64), b: (f64, f64)) -> bool {
        (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9
    }

    // Endpoints evaluated beforehand with an arbitrary-precision calculator.
    #[test]
    fn wilson_reference_points() {
        let cases = [
            (10, 0, (0.0, 0.27753280302605772)),
            (10, 10, (0.72246719697394228, 1.0)),
            (100, 87, (0.79019648486754576, 0.92242832604339701)),
            (1000, 500, (0.46906960012506277, 0.53093039987493723)),
            (1, 0, (0.0, 0.79345068820819726)),
            (1, 1, (0.20654931179180274, 1.0)),
            (7, 3, (0.15821985399244539, 0.74954163724696436)),
        ];
        for (n, k, want) in cases {
            let got = wilson_interval(k, n, Z95);
            assert!(close(got, want), "n={n} k={k}: {got:?}");
        }
        assert_eq!(wilson_interval(0, 0, Z95), (0.0, 1.0));
    }

    #[test]
    fn normal_interval_clamps() {
        assert_eq!(normal_interval(0, 10, Z95), (0.0, 0.0));
        let (lo, hi) = normal_interval(5, 10, Z95);
        assert!((lo - (0.5 - Z95 * 0.025f64.sqrt())).abs() < 1e-12 && (hi - (1.0 - lo)).abs() < 1e-12);
    }

    #[test]
    fn grouped_report() {
        let ds = gen_mislead_suite(&MisleadConfig::new(1, vec![5, 40], 4, 1)).unwrap();
        let resp: Vec<_> = ds
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let text = if i % 2 == 0 { r.ground_truth.clone() } else { "no idea".into() };
                ModelResponse::new(r.id.clone(), text, FinishReason::Completed)
            })
            .collect();
        let scored = score_dataset(&ds, &resp, &ScoreOptions::default()).unwrap();
        let by = vec!["kind".to_owned(), "mislead_distance".to_owned()];
        let rows = aggregate(&ds, &scored.results, &by, Interval::Wilson).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].key[1].1, "5");
        assert_eq!(rows[1].key[1].1, "40");
        for row in &rows {
            assert_eq!(row.n, 4);
            assert_eq!(row.labels.total(), row.n);
            assert!(row.ci_low <= row.accuracy && row.accuracy <= row.ci_high);
        }
        let csv = report_to_string(&by, &rows).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "kind,mislead_distance,n,n_correct,accuracy,ci_low,ci_high,correct,first_common_location,prompt_refusal,insufficient_context,other_wrong_location"
        );
        assert!(lines.next().unwrap().starts_with("tom1,5,4,2,0.500000,"));
        let global = aggregate(&ds, &scored.results, &[], Interval::Wilson).unwrap();
        assert_eq!(global.len(), 1);
        assert_eq!(global[0].n, 8);
        assert!(matches!(
            aggregate(&ds, &scored.results, &["colour".to_owned()], Interval::Wilson),
            Err(EvalError::UnknownField(_))
        ));
        assert_eq!(report_to_string(&by, &[]).unwrap().lines().count(), 1);
    }
}

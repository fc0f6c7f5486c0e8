//! Recall, cost and excess per topic, aggregation per method, and the CSV
//! formats used for stop decisions and reports.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::baselines::{oracle_rank, ORACLE};
use crate::corpus::Topic;
use crate::{Error, Result};

/// Where a method stopped on one topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopResult {
    pub topic_id: String,
    pub method: String,
    pub target_recall: f64,
    /// Stop rank: documents examined.
    pub docs_examined: usize,
    pub relevant_found: usize,
    pub stop_batch: Option<usize>,
}

pub fn recall_of(result: &StopResult, topic: &Topic) -> f64 {
    result.relevant_found as f64 / topic.relevant() as f64
}

pub fn cost_of(result: &StopResult, topic: &Topic) -> f64 {
    result.docs_examined as f64 / topic.len() as f64
}

/// Normalised over/undershoot of `cost_method` relative to the oracle cost.
///
/// When the oracle itself must read everything the ratio is singular; the
/// excess is then 0 for a full review and `cost_method - 1` otherwise.
pub fn excess(cost_method: f64, cost_oracle: f64) -> f64 {
    if cost_oracle >= 1.0 {
        if cost_method >= 1.0 {
            0.0
        } else {
            cost_method - 1.0
        }
    } else {
        (cost_method - cost_oracle) / (1.0 - cost_oracle)
    }
}

pub fn excess_of(result: &StopResult, topic: &Topic, target_recall: f64) -> Result<f64> {
    let oracle = oracle_rank(topic, target_recall)? as f64 / topic.len() as f64;
    Ok(excess(cost_of(result, topic), oracle))
}

/// Explanation of the degenerate-excess convention, written next to reports.
pub const EXCESS_NOTE: &str = "excess = (cost - oracle_cost) / (1 - oracle_cost); \
when oracle_cost = 1 excess is 0 for a full review and cost - 1 otherwise.";

/// Per-topic metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicRow {
    pub method: String,
    pub target: f64,
    pub topic_id: String,
    pub n: usize,
    pub r: usize,
    pub docs_examined: usize,
    pub relevant_found: usize,
    pub recall: f64,
    pub cost: f64,
    pub excess: f64,
}

/// Per (method, target) means.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub target: f64,
    pub topics: usize,
    pub mean_recall: f64,
    pub mean_cost: f64,
    pub mean_excess: f64,
    /// Per-topic excess in topic order, for distribution plots.
    pub excess: Vec<f64>,
    pub pareto: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub rows: Vec<TopicRow>,
    pub summaries: Vec<MethodSummary>,
}

/// Computes per-topic rows and per-method summaries.
///
/// `relevant_found` is recomputed from the labels so imported results only
/// need a stop rank. Pareto flags are assigned per target on the
/// (mean cost, mean recall) plane among non-oracle methods; the oracle is
/// the per-topic optimum and is always flagged.
pub fn aggregate(results: &[StopResult], topics: &[Topic]) -> Result<MetricsReport> {
    let by_id: HashMap<&str, &Topic> = topics.iter().map(|t| (t.id(), t)).collect();
    let mut rows = Vec::with_capacity(results.len());
    for res in results {
        let topic = by_id
            .get(res.topic_id.as_str())
            .ok_or_else(|| Error::UnknownTopic(res.topic_id.clone()))?;
        if res.docs_examined == 0 || res.docs_examined > topic.len() {
            return Err(Error::Config(format!(
                "{} on `{}` examined {} of {} documents",
                res.method,
                res.topic_id,
                res.docs_examined,
                topic.len()
            )));
        }
        let relevant_found = topic.relevant_within(res.docs_examined);
        let fixed = StopResult {
            relevant_found,
            ..res.clone()
        };
        rows.push(TopicRow {
            method: res.method.clone(),
            target: res.target_recall,
            topic_id: res.topic_id.clone(),
            n: topic.len(),
            r: topic.relevant(),
            docs_examined: res.docs_examined,
            relevant_found,
            recall: recall_of(&fixed, topic),
            cost: cost_of(&fixed, topic),
            excess: excess_of(&fixed, topic, res.target_recall)?,
        });
    }

    let mut groups: BTreeMap<(u64, String), Vec<&TopicRow>> = BTreeMap::new();
    for row in &rows {
        groups
            .entry((row.target.to_bits(), row.method.clone()))
            .or_default()
            .push(row);
    }
    let mut summaries: Vec<MethodSummary> = groups
        .into_values()
        .map(|g| {
            let n = g.len() as f64;
            MethodSummary {
                method: g[0].method.clone(),
                target: g[0].target,
                topics: g.len(),
                mean_recall: g.iter().map(|r| r.recall).sum::<f64>() / n,
                mean_cost: g.iter().map(|r| r.cost).sum::<f64>() / n,
                mean_excess: g.iter().map(|r| r.excess).sum::<f64>() / n,
                excess: g.iter().map(|r| r.excess).collect(),
                pareto: false,
            }
        })
        .collect();
    summaries.sort_by(|a, b| a.target.total_cmp(&b.target).then_with(|| a.method.cmp(&b.method)));
    mark_pareto(&mut summaries);
    Ok(MetricsReport { rows, summaries })
}

fn mark_pareto(summaries: &mut [MethodSummary]) {
    let flags: Vec<bool> = summaries
        .iter()
        .map(|s| {
            if s.method == ORACLE {
                return true;
            }
            !summaries.iter().any(|o| {
                o.method != ORACLE
                    && o.method != s.method
                    && o.target == s.target
                    && o.mean_recall >= s.mean_recall
                    && o.mean_cost <= s.mean_cost
                    && (o.mean_recall > s.mean_recall || o.mean_cost < s.mean_cost)
            })
        })
        .collect();
    for (s, f) in summaries.iter_mut().zip(flags) {
        s.pareto = f;
    }
}

pub const RESULTS_HEADER: [&str; 6] = [
    "method",
    "target",
    "topic_id",
    "docs_examined",
    "relevant_found",
    "stop_batch",
];
pub const TOPIC_REPORT_HEADER: [&str; 10] = [
    "method",
    "target",
    "topic_id",
    "N",
    "R",
    "docs_examined",
    "relevant_found",
    "recall",
    "cost",
    "excess",
];
pub const AGGREGATE_HEADER: [&str; 6] = [
    "method",
    "target",
    "mean_recall",
    "mean_cost",
    "mean_excess",
    "pareto_flag",
];

fn render(header: &[&str], records: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in records {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

/// Stop decisions as CSV.
pub fn render_results(results: &[StopResult]) -> Result<String> {
    render(
        &RESULTS_HEADER,
        results.iter().map(|r| {
            vec![
                r.method.clone(),
                r.target_recall.to_string(),
                r.topic_id.clone(),
                r.docs_examined.to_string(),
                r.relevant_found.to_string(),
                r.stop_batch.map(|b| b.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

pub fn render_topic_report(report: &MetricsReport) -> Result<String> {
    render(
        &TOPIC_REPORT_HEADER,
        report.rows.iter().map(|r| {
            vec![
                r.method.clone(),
                r.target.to_string(),
                r.topic_id.clone(),
                r.n.to_string(),
                r.r.to_string(),
                r.docs_examined.to_string(),
                r.relevant_found.to_string(),
                f6(r.recall),
                f6(r.cost),
                f6(r.excess),
            ]
        }),
    )
}

pub fn render_aggregate(report: &MetricsReport) -> Result<String> {
    render(
        &AGGREGATE_HEADER,
        report.summaries.iter().map(|s| {
            vec![
                s.method.clone(),
                s.target.to_string(),
                f6(s.mean_recall),
                f6(s.mean_cost),
                f6(s.mean_excess),
                u8::from(s.pareto).to_string(),
            ]
        }),
    )
}

/// Reads stop decisions. `topic_id`, `method` and `docs_examined` are
/// required; rows without a `target` column are replicated for every entry
/// of `default_targets`.
pub fn read_results(text: &str, source_name: &str, default_targets: &[f64]) -> Result<Vec<StopResult>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| {
        col(name).ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
            source_name: source_name.to_string(),
        })
    };
    let topic_col = required("topic_id")?;
    let method_col = required("method")?;
    let docs_col = required("docs_examined")?;
    let target_col = col("target");
    let batch_col = col("stop_batch");
    if target_col.is_none() && default_targets.is_empty() {
        return Err(Error::MissingColumn {
            column: "target".into(),
            source_name: source_name.to_string(),
        });
    }

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let bad = |what: &str, v: &str| Error::Parse {
            line,
            message: format!("{source_name}: {what} `{v}`"),
        };
        let docs: usize = field(docs_col)
            .parse()
            .map_err(|_| bad("docs_examined", field(docs_col)))?;
        let stop_batch = match batch_col.map(field) {
            None | Some("") => None,
            Some(v) => Some(v.parse().map_err(|_| bad("stop_batch", v))?),
        };
        let targets = match target_col {
            Some(c) => vec![field(c).parse::<f64>().map_err(|_| bad("target", field(c)))?],
            None => default_targets.to_vec(),
        };
        for target_recall in targets {
            out.push(StopResult {
                topic_id: field(topic_col).to_string(),
                method: field(method_col).to_string(),
                target_recall,
                docs_examined: docs,
                relevant_found: 0,
                stop_batch,
            });
        }
    }
    Ok(out)
}

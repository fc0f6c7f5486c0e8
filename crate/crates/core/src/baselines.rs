//! Reference stopping rules: the oracle, the knee method and a fixed budget.

use serde::{Deserialize, Serialize};

use crate::corpus::{check_target, BatchedTopic, Topic};
use crate::eval::StopResult;
use crate::{Error, Result, RECALL_EPS};

pub const ORACLE: &str = "oracle";
pub const KNEE: &str = "knee";

pub fn budget_method_name(fraction: f64) -> String {
    format!("budget_{fraction}")
}

/// Stops at the first rank where the target recall is met, using full
/// knowledge of the labels.
pub fn oracle_stop(topic: &Topic, target_recall: f64) -> Result<StopResult> {
    let rank = oracle_rank(topic, target_recall)?;
    Ok(StopResult {
        topic_id: topic.id().to_string(),
        method: ORACLE.to_string(),
        target_recall,
        docs_examined: rank,
        relevant_found: topic.relevant_within(rank),
        stop_batch: None,
    })
}

/// Smallest rank `r` with `g(r) >= target * R` (with [`RECALL_EPS`] slack).
pub fn oracle_rank(topic: &Topic, target_recall: f64) -> Result<usize> {
    check_target(target_recall)?;
    if topic.relevant() == 0 {
        return Err(Error::UndefinedTarget(topic.id().to_string()));
    }
    let needed = target_recall * topic.relevant() as f64 - RECALL_EPS;
    let mut found = 0usize;
    for (i, &rel) in topic.labels().iter().enumerate() {
        found += usize::from(rel);
        if found as f64 >= needed {
            return Ok(i + 1);
        }
    }
    // needed <= R, so the loop always returns for R >= 1
    Ok(topic.len())
}

/// Knee-method constants: stop once the slope ratio reaches
/// `base - min(g(knee), cap)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KneeConfig {
    pub base: f64,
    pub cap: f64,
}

impl Default for KneeConfig {
    fn default() -> Self {
        Self {
            base: 156.0,
            cap: 150.0,
        }
    }
}

/// Knee point of the gain curve over ranks `1..=rank`: the `k` whose point
/// `(k, g(k))` lies furthest above the chord from the origin to
/// `(rank, g(rank))`. `None` when no point is above the chord.
pub fn knee_point(gain: &[usize], rank: usize) -> Option<usize> {
    let gi = gain[rank] as i64;
    let i = rank as i64;
    let mut best = 0i64;
    let mut knee = None;
    for (k, &gk) in gain.iter().enumerate().take(rank).skip(1) {
        // Proportional to the signed perpendicular distance.
        let d = i * gk as i64 - gi * k as i64;
        if d > best {
            best = d;
            knee = Some(k);
        }
    }
    knee
}

/// Slope before the knee over the (smoothed) slope after it.
pub fn slope_ratio(gain: &[usize], knee: usize, rank: usize) -> f64 {
    let before = gain[knee] as f64 / knee as f64;
    let after = (gain[rank] - gain[knee]) as f64 + 1.0;
    before / (after / (rank - knee) as f64)
}

/// Evaluates the knee rule at the end of every batch and stops at the first
/// batch where it fires, or at `N`.
pub fn knee_stop(bt: &BatchedTopic, cfg: &KneeConfig, target_recall: f64) -> StopResult {
    let topic = bt.topic();
    let gain = topic.gain_curve();
    let mut stop = (bt.n_batches(), topic.len());
    let mut rank = 0;
    for (j, &size) in bt.batch_sizes().iter().enumerate() {
        rank += size;
        if let Some(k) = knee_point(&gain, rank) {
            let rho = slope_ratio(&gain, k, rank);
            if rho >= cfg.base - (gain[k] as f64).min(cfg.cap) {
                stop = (j + 1, rank);
                break;
            }
        }
    }
    StopResult {
        topic_id: topic.id().to_string(),
        method: KNEE.to_string(),
        target_recall,
        docs_examined: stop.1,
        relevant_found: gain[stop.1],
        stop_batch: Some(stop.0),
    }
}

/// Examines `ceil(fraction * N)` documents.
pub fn budget_stop(topic: &Topic, fraction: f64, target_recall: f64) -> Result<StopResult> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("budget fraction {fraction} is outside (0, 1]")));
    }
    let n = topic.len();
    let docs = ((fraction * n as f64 - RECALL_EPS).ceil() as usize).clamp(1, n);
    Ok(StopResult {
        topic_id: topic.id().to_string(),
        method: budget_method_name(fraction),
        target_recall,
        docs_examined: docs,
        relevant_found: topic.relevant_within(docs),
        stop_batch: None,
    })
}

use rand::Rng;

use crate::corpus::BatchedTopic;
use crate::env::{fill_observation, Action, ObsMode};
use crate::eval::StopResult;
use crate::nn::Cache;
use crate::{Error, Result};

use super::rollout::sample_action;
use super::ActorCritic;

pub const RLSTOP_METHOD: &str = "rlstop";

/// How actions are chosen at inference time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopMode {
    /// Most probable action; ties go to STOP.
    #[default]
    Greedy,
    Sample,
}

impl std::str::FromStr for StopMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(StopMode::Greedy),
            "sample" => Ok(StopMode::Sample),
            other => Err(Error::Config(format!("unknown stop mode `{other}`"))),
        }
    }
}

/// Walks the ranking batch by batch until the policy stops (or the last
/// batch is reached). Only examined batches are ever shown to the policy.
pub fn infer_stop<R: Rng + ?Sized>(
    policy: &ActorCritic,
    bt: &BatchedTopic,
    obs_mode: ObsMode,
    target_recall: f64,
    mode: StopMode,
    rng: &mut R,
) -> Result<StopResult> {
    let b = bt.n_batches();
    if policy.width() != b {
        return Err(Error::Shape(format!(
            "policy expects B={} but topic `{}` has {b} batches",
            policy.width(),
            bt.topic().id()
        )));
    }
    let mut obs = vec![0.0; b];
    let mut cache = Cache::default();
    let mut examined = 1;
    loop {
        if examined == b {
            break;
        }
        fill_observation(bt, examined, obs_mode, &mut obs);
        policy.actor.forward(&obs, &mut cache)?;
        let logits = cache.output();
        let action = match mode {
            StopMode::Greedy => {
                if logits[Action::Stop.index()] >= logits[Action::Continue.index()] {
                    Action::Stop
                } else {
                    Action::Continue
                }
            }
            StopMode::Sample => sample_action(logits, rng),
        };
        if action == Action::Stop {
            break;
        }
        examined += 1;
    }
    Ok(StopResult {
        topic_id: bt.topic().id().to_string(),
        method: RLSTOP_METHOD.to_string(),
        target_recall,
        docs_examined: bt.docs_through(examined),
        relevant_found: bt.cum_rel()[examined - 1],
        stop_batch: Some(examined),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{batch_topic, Topic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn topic() -> BatchedTopic {
        let l: Vec<bool> = (0..23).map(|i| i % 4 == 1).collect();
        batch_topic(Topic::from_labels("q", l).unwrap(), 5).unwrap()
    }

    fn biased(stop_bias: f64) -> ActorCritic {
        let mut p = ActorCritic::new(5, 0).unwrap();
        let n = p.actor.n_params();
        p.actor.params_mut()[n - 2] = stop_bias;
        p.actor.params_mut()[n - 1] = -stop_bias;
        p
    }

    #[test]
    fn always_stop_examines_first_batch() {
        let bt = topic();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = infer_stop(&biased(30.0), &bt, ObsMode::Ratio, 0.9, StopMode::Greedy, &mut rng).unwrap();
        assert_eq!(r.stop_batch, Some(1));
        assert_eq!(r.docs_examined, bt.batch_sizes()[0]);
        assert_eq!(r.relevant_found, bt.cum_rel()[0]);
    }

    #[test]
    fn never_stop_reviews_everything() {
        let bt = topic();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = infer_stop(&biased(-30.0), &bt, ObsMode::Ratio, 0.9, StopMode::Greedy, &mut rng).unwrap();
        assert_eq!(r.stop_batch, Some(5));
        assert_eq!(r.docs_examined, 23);
        assert_eq!(r.relevant_found, bt.topic().relevant());
    }

    #[test]
    fn greedy_is_deterministic_and_sampling_is_seeded() {
        let bt = topic();
        let p = ActorCritic::new(5, 9).unwrap();
        let run = |mode, seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            infer_stop(&p, &bt, ObsMode::Ratio, 0.9, mode, &mut rng).unwrap()
        };
        assert_eq!(run(StopMode::Greedy, 1), run(StopMode::Greedy, 2));
        assert_eq!(run(StopMode::Sample, 3), run(StopMode::Sample, 3));
    }

    #[test]
    fn width_mismatch() {
        let p = ActorCritic::new(7, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            infer_stop(&p, &topic(), ObsMode::Ratio, 0.9, StopMode::Greedy, &mut rng),
            Err(Error::Shape(_))
        ));
    }
}

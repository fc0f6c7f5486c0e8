//! The stopping MDP.
//!
//! State `S_i` means the first `i` batches have been examined. After each
//! batch the agent chooses STOP or CONTINUE; the action taken in `S_i` is
//! credited with `reward(i, T, B)`, so an episode that stops in `S_s` earns
//! exactly `sum_{i=1..s} reward(i, T, B)`. Reaching `S_B` always ends the
//! episode whatever the action.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::BatchedTopic;
use crate::{Error, Result};

/// Sentinel for batches that have not been examined yet.
pub const UNSEEN: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Stop = 0,
    Continue = 1,
}

impl Action {
    pub const COUNT: usize = 2;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Action::Stop),
            1 => Some(Action::Continue),
            _ => None,
        }
    }
}

/// How examined batches are encoded in the observation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObsMode {
    /// Relevant fraction of the batch, in `[0, 1]`.
    #[default]
    Ratio,
    /// Raw relevant count of the batch.
    Count,
}

impl std::str::FromStr for ObsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ratio" => Ok(ObsMode::Ratio),
            "count" => Ok(ObsMode::Count),
            other => Err(Error::Config(format!("unknown observation mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for ObsMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ObsMode::Ratio => "ratio",
            ObsMode::Count => "count",
        })
    }
}

/// Reward for the state `S_i` given target batch `T` out of `B`:
/// `1 - i/T` up to `T`, then falling linearly to `-1` at `B`.
pub fn reward(i: usize, target: usize, batches: usize) -> f64 {
    debug_assert!(1 <= i && i <= batches && 1 <= target && target <= batches);
    if i <= target {
        1.0 - i as f64 / target as f64
    } else {
        -((i - target) as f64) / ((batches - target) as f64)
    }
}

/// Writes the observation for `examined` batches into `out` (length `B`).
pub fn fill_observation(bt: &BatchedTopic, examined: usize, mode: ObsMode, out: &mut [f64]) {
    debug_assert_eq!(out.len(), bt.n_batches());
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = if j < examined {
            batch_value(bt, j, mode)
        } else {
            UNSEEN
        };
    }
}

fn batch_value(bt: &BatchedTopic, j: usize, mode: ObsMode) -> f64 {
    let rel = bt.batch_rel()[j] as f64;
    match mode {
        ObsMode::Ratio => rel / bt.batch_sizes()[j] as f64,
        ObsMode::Count => rel,
    }
}

/// One episode over one batched topic.
#[derive(Debug, Clone)]
pub struct StopEnv<'a> {
    bt: &'a BatchedTopic,
    target_batch: usize,
    mode: ObsMode,
    current: usize,
    done: bool,
    obs: Vec<f64>,
}

impl<'a> StopEnv<'a> {
    /// Starts an episode in `S_1`.
    pub fn reset(bt: &'a BatchedTopic, target_recall: f64, mode: ObsMode) -> Result<Self> {
        let target_batch = bt.target_batch(target_recall)?;
        Ok(Self::with_target_batch(bt, target_batch, mode))
    }

    pub(crate) fn with_target_batch(bt: &'a BatchedTopic, target_batch: usize, mode: ObsMode) -> Self {
        let mut obs = vec![UNSEEN; bt.n_batches()];
        obs[0] = batch_value(bt, 0, mode);
        Self {
            bt,
            target_batch,
            mode,
            current: 1,
            done: false,
            obs,
        }
    }

    pub fn observation(&self) -> &[f64] {
        &self.obs
    }

    /// Batches examined so far (`i` in `S_i`).
    pub fn current_batch(&self) -> usize {
        self.current
    }

    pub fn target_batch(&self) -> usize {
        self.target_batch
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn topic(&self) -> &'a BatchedTopic {
        self.bt
    }

    /// Applies `action` in the current state and returns
    /// `(observation, reward, done)`.
    pub fn step(&mut self, action: Action) -> Result<(&[f64], f64, bool)> {
        if self.done {
            return Err(Error::Usage("step called on a finished episode".into()));
        }
        let b = self.bt.n_batches();
        let r = reward(self.current, self.target_batch, b);
        if action == Action::Stop || self.current == b {
            self.done = true;
        } else {
            self.obs[self.current] = batch_value(self.bt, self.current, self.mode);
            self.current += 1;
        }
        Ok((&self.obs, r, self.done))
    }
}

/// Summary of an episode that finished during a vectorised step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeEnd {
    pub topic: usize,
    pub stop_batch: usize,
    pub target_batch: usize,
    pub total_reward: f64,
}

/// Result of [`VecEnv::step`], one entry per slot.
#[derive(Debug, Clone, Default)]
pub struct VecStep {
    pub rewards: Vec<f64>,
    /// Episode boundary: the transition in this slot ended an episode and the
    /// slot now holds a fresh `S_1`.
    pub dones: Vec<bool>,
    pub finished: Vec<Option<EpisodeEnd>>,
}

/// Several environments stepped in lock-step over a shared topic pool.
/// Finished slots are reset onto a topic drawn uniformly from the pool.
#[derive(Debug)]
pub struct VecEnv<'a> {
    pool: &'a [BatchedTopic],
    targets: Vec<usize>,
    mode: ObsMode,
    rng: ChaCha8Rng,
    slots: Vec<Slot<'a>>,
    width: usize,
}

#[derive(Debug)]
struct Slot<'a> {
    env: StopEnv<'a>,
    topic: usize,
    total_reward: f64,
}

impl<'a> VecEnv<'a> {
    pub fn new(
        pool: &'a [BatchedTopic],
        n_envs: usize,
        target_recall: f64,
        mode: ObsMode,
        seed: u64,
    ) -> Result<Self> {
        let first = pool
            .first()
            .ok_or_else(|| Error::Config("empty topic pool".into()))?;
        if n_envs == 0 {
            return Err(Error::Config("need at least one environment".into()));
        }
        let width = first.n_batches();
        if let Some(bad) = pool.iter().find(|bt| bt.n_batches() != width) {
            return Err(Error::Shape(format!(
                "topic `{}` has {} batches, expected {width}",
                bt_id(bad),
                bad.n_batches()
            )));
        }
        let targets = pool
            .iter()
            .map(|bt| bt.target_batch(target_recall))
            .collect::<Result<Vec<_>>>()?;
        let mut venv = Self {
            pool,
            targets,
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            slots: Vec::with_capacity(n_envs),
            width,
        };
        for _ in 0..n_envs {
            let slot = venv.fresh_slot();
            venv.slots.push(slot);
        }
        Ok(venv)
    }

    fn fresh_slot(&mut self) -> Slot<'a> {
        let topic = self.rng.random_range(0..self.pool.len());
        Slot {
            env: StopEnv::with_target_batch(&self.pool[topic], self.targets[topic], self.mode),
            topic,
            total_reward: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Observation width `B`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn observation(&self, slot: usize) -> &[f64] {
        self.slots[slot].env.observation()
    }

    /// Restarts every slot on a freshly drawn topic.
    pub fn reset(&mut self) {
        for i in 0..self.slots.len() {
            self.slots[i] = self.fresh_slot();
        }
    }

    /// Steps every slot with its action. Slots are processed in index order
    /// so topic resampling is reproducible.
    pub fn step(&mut self, actions: &[Action]) -> Result<VecStep> {
        if actions.len() != self.slots.len() {
            return Err(Error::Usage(format!(
                "{} actions for {} environments",
                actions.len(),
                self.slots.len()
            )));
        }
        let mut out = VecStep {
            rewards: Vec::with_capacity(actions.len()),
            dones: Vec::with_capacity(actions.len()),
            finished: Vec::with_capacity(actions.len()),
        };
        for (i, &action) in actions.iter().enumerate() {
            let slot = &mut self.slots[i];
            let (_, r, done) = slot.env.step(action)?;
            slot.total_reward += r;
            out.rewards.push(r);
            out.dones.push(done);
            if done {
                let end = EpisodeEnd {
                    topic: slot.topic,
                    stop_batch: slot.env.current_batch(),
                    target_batch: slot.env.target_batch(),
                    total_reward: slot.total_reward,
                };
                out.finished.push(Some(end));
                self.slots[i] = self.fresh_slot();
            } else {
                out.finished.push(None);
            }
        }
        Ok(out)
    }
}

fn bt_id(bt: &BatchedTopic) -> &str {
    bt.topic().id()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{batch_topic, Topic};
    use proptest::prelude::*;

    fn bt(labels: &[u8], b: usize) -> BatchedTopic {
        let t = Topic::from_labels("t", labels.iter().map(|&x| x == 1).collect()).unwrap();
        batch_topic(t, b).unwrap()
    }

    #[test]
    fn reward_examples() {
        assert_eq!(reward(7, 7, 30), 0.0);
        assert_eq!(reward(100, 40, 100), -1.0);
        assert!((reward(25, 50, 100) - 0.5).abs() < 1e-12);
        assert!((reward(75, 50, 100) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn reset_reveals_first_batch_only() {
        let b = bt(&[1, 1, 0, 0, 1, 0, 0, 1], 4);
        let env = StopEnv::reset(&b, 1.0, ObsMode::Ratio).unwrap();
        assert_eq!(env.observation(), &[1.0, UNSEEN, UNSEEN, UNSEEN]);
        let again = StopEnv::reset(&b, 1.0, ObsMode::Ratio).unwrap();
        assert_eq!(env.observation(), again.observation());

        let b = bt(&[0, 0, 1, 0, 1, 0, 0, 1], 4);
        let env = StopEnv::reset(&b, 1.0, ObsMode::Ratio).unwrap();
        assert_eq!(env.observation(), &[0.0, UNSEEN, UNSEEN, UNSEEN]);

        let empty = bt(&[0, 0], 2);
        assert!(StopEnv::reset(&empty, 1.0, ObsMode::Ratio).is_err());
    }

    #[test]
    fn count_mode_uses_raw_counts() {
        let b = bt(&[1, 1, 1, 0, 1, 0], 2);
        let mut env = StopEnv::reset(&b, 1.0, ObsMode::Count).unwrap();
        assert_eq!(env.observation(), &[3.0, UNSEEN]);
        env.step(Action::Continue).unwrap();
        assert_eq!(env.observation(), &[3.0, 1.0]);
    }

    #[test]
    fn step_contract() {
        // T=2 of B=4: relevant docs in batches 1 and 2 only.
        let b = bt(&[1, 0, 1, 0, 0, 0, 0, 0], 4);
        let mut env = StopEnv::reset(&b, 1.0, ObsMode::Ratio).unwrap();
        assert_eq!(env.target_batch(), 2);
        let (obs, r, done) = env.step(Action::Continue).unwrap();
        assert_eq!(obs, &[0.5, 0.5, UNSEEN, UNSEEN]);
        assert!((r - 0.5).abs() < 1e-15);
        assert!(!done);
        assert_eq!(env.current_batch(), 2);
        env.step(Action::Continue).unwrap();
        let before = env.observation().to_vec();
        let (obs, r, done) = env.step(Action::Stop).unwrap();
        assert_eq!(obs, before.as_slice());
        assert!((r - reward(3, 2, 4)).abs() < 1e-15);
        assert!(done);
        assert!(matches!(env.step(Action::Stop), Err(Error::Usage(_))));
    }

    #[test]
    fn forced_stop_at_last_batch() {
        // T = B = 10
        let mut labels = vec![0u8; 10];
        labels[9] = 1;
        let b = bt(&labels, 10);
        let mut env = StopEnv::reset(&b, 1.0, ObsMode::Ratio).unwrap();
        let mut total = 0.0;
        loop {
            let (_, r, done) = env.step(Action::Continue).unwrap();
            total += r;
            if done {
                break;
            }
        }
        assert_eq!(env.current_batch(), 10);
        let closed: f64 = (1..=10).map(|i| 1.0 - i as f64 / 10.0).sum();
        assert!((total - closed).abs() < 1e-12);
        assert!((total - 4.5).abs() < 1e-12);
    }

    #[test]
    fn vec_env_auto_resets() {
        let pool = vec![bt(&[1, 0, 0, 1], 2), bt(&[0, 1, 1, 0], 2), bt(&[1, 1, 0, 0], 2)];
        let mut venv = VecEnv::new(&pool, 4, 1.0, ObsMode::Ratio, 9).unwrap();
        let out = venv.step(&[Action::Stop; 4]).unwrap();
        assert_eq!(out.dones, vec![true; 4]);
        assert!(out.finished.iter().all(|f| f.is_some_and(|e| e.stop_batch == 1)));
        for s in 0..4 {
            assert_eq!(venv.observation(s)[1], UNSEEN);
            assert_ne!(venv.observation(s)[0], UNSEEN);
        }
        assert!(matches!(venv.step(&[Action::Stop; 3]), Err(Error::Usage(_))));
    }

    #[test]
    fn vec_env_resampling_is_seeded() {
        let pool: Vec<_> = (0..6)
            .map(|k| {
                let mut l = vec![0u8; 12];
                l[k] = 1;
                bt(&l, 6)
            })
            .collect();
        let trace = |seed| {
            let mut venv = VecEnv::new(&pool, 3, 1.0, ObsMode::Ratio, seed).unwrap();
            let mut topics = Vec::new();
            for _ in 0..20 {
                let out = venv.step(&[Action::Stop; 3]).unwrap();
                topics.extend(out.finished.iter().map(|f| f.unwrap().topic));
            }
            topics
        };
        assert_eq!(trace(1), trace(1));
        assert_ne!(trace(1), trace(2));
    }

    #[test]
    fn single_vec_env_matches_plain_env() {
        let pool = vec![bt(&[0, 1, 0, 0, 1, 0], 3)];
        let mut venv = VecEnv::new(&pool, 1, 1.0, ObsMode::Ratio, 0).unwrap();
        let mut env = StopEnv::reset(&pool[0], 1.0, ObsMode::Ratio).unwrap();
        for a in [Action::Continue, Action::Stop] {
            let v = venv.step(&[a]).unwrap();
            let (_, r, d) = env.step(a).unwrap();
            assert_eq!(v.rewards[0], r);
            assert_eq!(v.dones[0], d);
        }
    }

    #[test]
    fn vec_env_rejects_mixed_widths() {
        let pool = vec![bt(&[1, 0, 0, 1], 2), bt(&[1, 0, 0, 1], 4)];
        assert!(VecEnv::new(&pool, 2, 1.0, ObsMode::Ratio, 0).is_err());
        assert!(VecEnv::new(&[], 2, 1.0, ObsMode::Ratio, 0).is_err());
    }

    proptest! {
        #[test]
        fn reward_sign_and_monotonicity(b in 1usize..200, t_frac in 0.0f64..1.0) {
            let t = 1 + ((b - 1) as f64 * t_frac) as usize;
            let mut prev = f64::INFINITY;
            for i in 1..=b {
                let r = reward(i, t, b);
                prop_assert_eq!(r >= 0.0, i <= t);
                if i == t + 1 { prev = f64::INFINITY; }
                prop_assert!(r < prev);
                prev = r;
            }
        }

        #[test]
        fn observation_is_a_prefix(labels in prop::collection::vec(0u8..2, 4..40), b in 1usize..12, k in 0usize..20) {
            prop_assume!(labels.contains(&1));
            let b = bt(&labels, b);
            let mut env = StopEnv::reset(&b, 1.0, ObsMode::Ratio).unwrap();
            for _ in 0..k {
                if env.step(Action::Continue).unwrap().2 { break; }
            }
            let obs = env.observation();
            let seen = obs.iter().take_while(|&&x| x != UNSEEN).count();
            prop_assert_eq!(seen, (1 + k).min(b.n_batches()));
            prop_assert!(obs[seen..].iter().all(|&x| x == UNSEEN));
            prop_assert!(obs[..seen].iter().all(|&x| (0.0..=1.0).contains(&x)));
        }

        #[test]
        fn episode_reward_accounting(labels in prop::collection::vec(0u8..2, 4..60), b in 1usize..20, stop_at in 1usize..25) {
            prop_assume!(labels.contains(&1));
            let b = bt(&labels, b);
            let mut env = StopEnv::reset(&b, 0.9, ObsMode::Ratio).unwrap();
            let mut total = 0.0;
            loop {
                let a = if env.current_batch() >= stop_at { Action::Stop } else { Action::Continue };
                let (_, r, done) = env.step(a).unwrap();
                total += r;
                if done { break; }
            }
            let s = env.current_batch();
            let t = env.target_batch();
            let direct: f64 = (1..=s).map(|i| reward(i, t, b.n_batches())).sum();
            prop_assert!((total - direct).abs() < 1e-12);
        }
    }
}

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::BatchedTopic;
use crate::env::ObsMode;
use crate::eval::StopResult;
use crate::nn::{Mlp, MlpRecord};
use crate::{Error, Result};

use super::{infer_stop, ActorCritic, Hyperparams, StopMode};

pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained policy plus everything needed to reproduce and apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub target_recall: f64,
    /// Observation width `B`.
    pub batches: usize,
    pub obs_mode: ObsMode,
    pub timesteps: usize,
    pub hyperparams: Hyperparams,
    pub actor: MlpRecord,
    pub critic: MlpRecord,
}

impl Checkpoint {
    pub fn new(
        policy: &ActorCritic,
        target_recall: f64,
        batches: usize,
        obs_mode: ObsMode,
        hyperparams: Hyperparams,
        timesteps: usize,
    ) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            target_recall,
            batches,
            obs_mode,
            timesteps,
            hyperparams,
            actor: MlpRecord::from(&policy.actor),
            critic: MlpRecord::from(&policy.critic),
        }
    }

    pub fn policy(&self) -> Result<ActorCritic> {
        let policy = ActorCritic {
            actor: Mlp::try_from(self.actor.clone())?,
            critic: Mlp::try_from(self.critic.clone())?,
        };
        if policy.width() != self.batches || policy.critic.architecture().input() != self.batches {
            return Err(Error::Shape(format!(
                "checkpoint records B={} but networks take {} inputs",
                self.batches,
                policy.width()
            )));
        }
        Ok(policy)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Self = serde_json::from_str(text)?;
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {}",
                ckpt.format_version
            )));
        }
        ckpt.policy()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Applies the stored policy to one topic.
    pub fn stop<R: Rng + ?Sized>(&self, bt: &BatchedTopic, mode: StopMode, rng: &mut R) -> Result<StopResult> {
        infer_stop(&self.policy()?, bt, self.obs_mode, self.target_recall, mode, rng)
    }
}

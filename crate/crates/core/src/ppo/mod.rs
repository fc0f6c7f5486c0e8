//! PPO training of the stopping policy, checkpoints and inference.

mod checkpoint;
mod infer;
mod loss;
mod rollout;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use infer::{infer_stop, StopMode};
pub use loss::{
    normalize_advantages, ppo_objective, ppo_update, Gradients, LossStats, Minibatch, Optimizers,
    ADV_STD_FLOOR,
};
pub use rollout::{collect_rollout, compute_gae, Rollout, RolloutBuffer};

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::BatchedTopic;
use crate::env::{ObsMode, VecEnv};
use crate::nn::{Architecture, Mlp, ACTOR_OUTPUT_GAIN, CRITIC_OUTPUT_GAIN};
use crate::{Error, Result};

/// PPO settings. Defaults are the values the method was tuned with;
/// `gae_lambda`, `value_coef` and `n_envs` are conventional choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub total_timesteps: usize,
    /// Steps per environment between updates.
    pub n_steps: usize,
    /// PPO minibatch size (unrelated to the ranking batches).
    pub minibatch_size: usize,
    pub learning_rate: f64,
    pub n_epochs: usize,
    pub entropy_coef: f64,
    pub gamma: f64,
    pub clip_range: f64,
    pub gae_lambda: f64,
    pub value_coef: f64,
    pub n_envs: usize,
    pub seed: u64,
    pub max_grad_norm: Option<f64>,
    pub normalize_advantage: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            total_timesteps: 100_000,
            n_steps: 100,
            minibatch_size: 100,
            learning_rate: 1e-4,
            n_epochs: 8,
            entropy_coef: 0.1,
            gamma: 0.99,
            clip_range: 0.2,
            gae_lambda: 0.95,
            value_coef: 0.5,
            n_envs: 8,
            seed: 0,
            max_grad_norm: None,
            normalize_advantage: true,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive_counts = [
            ("total_timesteps", self.total_timesteps),
            ("n_steps", self.n_steps),
            ("minibatch_size", self.minibatch_size),
            ("n_epochs", self.n_epochs),
            ("n_envs", self.n_envs),
        ];
        for (name, v) in positive_counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        let check = |name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} is out of range")))
            }
        };
        check("learning_rate", self.learning_rate > 0.0 && self.learning_rate.is_finite())?;
        check("entropy_coef", self.entropy_coef >= 0.0 && self.entropy_coef.is_finite())?;
        check("value_coef", self.value_coef > 0.0 && self.value_coef.is_finite())?;
        check("clip_range", self.clip_range > 0.0 && self.clip_range < 1.0)?;
        check("gamma", self.gamma > 0.0 && self.gamma <= 1.0)?;
        check("gae_lambda", self.gae_lambda > 0.0 && self.gae_lambda <= 1.0)?;
        check("max_grad_norm", self.max_grad_norm.is_none_or(|m| m > 0.0))?;
        Ok(())
    }

    /// Rollout/update iterations: `ceil(total_timesteps / (n_steps * n_envs))`.
    pub fn iterations(&self) -> usize {
        self.total_timesteps.div_ceil(self.n_steps * self.n_envs)
    }
}

/// Separate actor (2 logits) and critic (1 value) networks over the same
/// observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
}

impl ActorCritic {
    /// Orthogonally initialised networks for observations of length `width`.
    pub fn new(width: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = Mlp::orthogonal(Architecture::actor(width), ACTOR_OUTPUT_GAIN, &mut rng)?;
        let critic = Mlp::orthogonal(Architecture::critic(width), CRITIC_OUTPUT_GAIN, &mut rng)?;
        Ok(Self { actor, critic })
    }

    pub fn width(&self) -> usize {
        self.actor.architecture().input()
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iteration: usize,
    pub timesteps: usize,
    pub mean_ep_reward: f64,
    pub mean_stop_batch: f64,
    pub stats: LossStats,
}

pub const LOG_HEADER: &str =
    "iteration,timesteps,mean_ep_reward,mean_stop_batch,policy_loss,value_loss,entropy,clip_fraction,approx_kl";

/// Renders the training log as CSV with fixed float formatting.
pub fn render_log(rows: &[LogRow]) -> String {
    let mut out = String::from(LOG_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.4},{:.8},{:.8},{:.8},{:.6},{:.10}",
            r.iteration,
            r.timesteps,
            r.mean_ep_reward,
            r.mean_stop_batch,
            r.stats.policy_loss,
            r.stats.value_loss,
            r.stats.entropy,
            r.stats.clip_fraction,
            r.stats.approx_kl
        );
    }
    out
}

/// Everything [`train`] produces.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub policy: ActorCritic,
    pub checkpoint: Checkpoint,
    pub log: Vec<LogRow>,
}

/// Trains one policy for one target recall on a pool of batched topics.
pub fn train(
    topics: &[BatchedTopic],
    target_recall: f64,
    obs_mode: ObsMode,
    hyper: &Hyperparams,
) -> Result<TrainOutput> {
    train_with(topics, target_recall, obs_mode, hyper, |_| {})
}

/// [`train`] with a callback after every iteration.
pub fn train_with(
    topics: &[BatchedTopic],
    target_recall: f64,
    obs_mode: ObsMode,
    hyper: &Hyperparams,
    mut on_iteration: impl FnMut(&LogRow),
) -> Result<TrainOutput> {
    hyper.validate()?;
    crate::corpus::check_target(target_recall)?;
    if topics.is_empty() {
        return Err(Error::Config("no training topics".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(hyper.seed);
    let init_seed: u64 = master.random();
    let env_seed: u64 = master.random();

    let mut venv = VecEnv::new(topics, hyper.n_envs, target_recall, obs_mode, env_seed)?;
    let mut policy = ActorCritic::new(venv.width(), init_seed)?;
    let mut opt = Optimizers::new(&policy);
    let mut log = Vec::with_capacity(hyper.iterations());
    let mut timesteps = 0;

    for iteration in 1..=hyper.iterations() {
        let Rollout {
            mut buffer,
            bootstrap_values,
            episodes,
        } = collect_rollout(&policy, &mut venv, hyper.n_steps, &mut master)?;
        timesteps += buffer.len();
        compute_gae(&mut buffer, hyper.gamma, hyper.gae_lambda, &bootstrap_values)?;
        let stats = ppo_update(&mut policy, &mut opt, &buffer, hyper, &mut master)?;

        let (mean_ep_reward, mean_stop_batch) = if episodes.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let n = episodes.len() as f64;
            (
                episodes.iter().map(|e| e.total_reward).sum::<f64>() / n,
                episodes.iter().map(|e| e.stop_batch as f64).sum::<f64>() / n,
            )
        };
        let row = LogRow {
            iteration,
            timesteps,
            mean_ep_reward,
            mean_stop_batch,
            stats,
        };
        log::debug!(
            "iter {iteration} t={timesteps} reward={mean_ep_reward:.3} stop={mean_stop_batch:.2} ent={:.3}",
            stats.entropy
        );
        on_iteration(&row);
        log.push(row);
    }

    let checkpoint = Checkpoint::new(&policy, target_recall, venv.width(), obs_mode, hyper.clone(), timesteps);
    Ok(TrainOutput {
        policy,
        checkpoint,
        log,
    })
}

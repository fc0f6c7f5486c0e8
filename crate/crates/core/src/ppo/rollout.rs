//! Fixed-horizon rollouts and generalised advantage estimation.

use rand::Rng;

use crate::env::{Action, EpisodeEnd, VecEnv};
use crate::nn::{log_prob_and_entropy, softmax, Cache};
use crate::{Error, Result};

use super::ActorCritic;

/// Transitions gathered over `n_steps` lock-step steps of `n_envs`
/// environments. Slot `(t, e)` lives at index `t * n_envs + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub n_steps: usize,
    pub n_envs: usize,
    pub width: usize,
    /// Row-major observations, `width` values per slot.
    pub observations: Vec<f64>,
    pub actions: Vec<Action>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// The transition in this slot ended its episode.
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(n_steps: usize, n_envs: usize, width: usize) -> Self {
        let n = n_steps * n_envs;
        Self {
            n_steps,
            n_envs,
            width,
            observations: Vec::with_capacity(n * width),
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            advantages: vec![0.0; n],
            returns: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn observation(&self, idx: usize) -> &[f64] {
        &self.observations[idx * self.width..(idx + 1) * self.width]
    }

    pub fn push(&mut self, obs: &[f64], action: Action, log_prob: f64, value: f64) {
        debug_assert_eq!(obs.len(), self.width);
        self.observations.extend_from_slice(obs);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.values.push(value);
    }
}

/// Output of [`collect_rollout`].
#[derive(Debug, Clone)]
pub struct Rollout {
    pub buffer: RolloutBuffer,
    /// Critic values of the observations left in each slot after the last step.
    pub bootstrap_values: Vec<f64>,
    pub episodes: Vec<EpisodeEnd>,
}

/// Samples a STOP/CONTINUE action from the actor's logits.
pub(crate) fn sample_action<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> Action {
    let p_stop = softmax(logits)[Action::Stop.index()];
    if rng.random::<f64>() < p_stop {
        Action::Stop
    } else {
        Action::Continue
    }
}

/// Runs the current policy for `n_steps` steps in every environment.
pub fn collect_rollout<R: Rng + ?Sized>(
    policy: &ActorCritic,
    venv: &mut VecEnv<'_>,
    n_steps: usize,
    rng: &mut R,
) -> Result<Rollout> {
    if policy.width() != venv.width() {
        return Err(Error::Shape(format!(
            "policy expects width {}, environments have {}",
            policy.width(),
            venv.width()
        )));
    }
    let n_envs = venv.len();
    let mut buffer = RolloutBuffer::new(n_steps, n_envs, venv.width());
    let mut episodes = Vec::new();
    let mut actor_cache = Cache::default();
    let mut critic_cache = Cache::default();
    let mut actions = vec![Action::Stop; n_envs];
    for _ in 0..n_steps {
        for (e, action) in actions.iter_mut().enumerate() {
            let obs = venv.observation(e);
            policy.actor.forward(obs, &mut actor_cache)?;
            policy.critic.forward(obs, &mut critic_cache)?;
            let logits = actor_cache.output();
            *action = sample_action(logits, rng);
            let (log_prob, _) = log_prob_and_entropy(logits, action.index());
            buffer.push(obs, *action, log_prob, critic_cache.output()[0]);
        }
        let out = venv.step(&actions)?;
        buffer.rewards.extend_from_slice(&out.rewards);
        buffer.dones.extend_from_slice(&out.dones);
        episodes.extend(out.finished.into_iter().flatten());
    }
    let bootstrap_values = (0..n_envs)
        .map(|e| {
            policy.critic.forward(venv.observation(e), &mut critic_cache)?;
            Ok(critic_cache.output()[0])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Rollout {
        buffer,
        bootstrap_values,
        episodes,
    })
}

/// Fills `advantages` and `returns`:
/// `A_t = sum_k (gamma * lambda)^k delta_{t+k}` with
/// `delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)`, cut at
/// episode boundaries and bootstrapped from `bootstrap_values` at the end of
/// the rollout.
pub fn compute_gae(buffer: &mut RolloutBuffer, gamma: f64, lambda: f64, bootstrap_values: &[f64]) -> Result<()> {
    let (n_steps, n_envs) = (buffer.n_steps, buffer.n_envs);
    if bootstrap_values.len() != n_envs || buffer.len() != n_steps * n_envs {
        return Err(Error::Shape(format!(
            "buffer holds {} slots for {n_steps}x{n_envs}, {} bootstrap values",
            buffer.len(),
            bootstrap_values.len()
        )));
    }
    buffer.advantages.resize(buffer.len(), 0.0);
    buffer.returns.resize(buffer.len(), 0.0);
    for (e, &bootstrap) in bootstrap_values.iter().enumerate() {
        let mut running = 0.0;
        for t in (0..n_steps).rev() {
            let i = t * n_envs + e;
            let next_value = if t + 1 == n_steps {
                bootstrap
            } else {
                buffer.values[i + n_envs]
            };
            let live = if buffer.dones[i] { 0.0 } else { 1.0 };
            let delta = buffer.rewards[i] + gamma * next_value * live - buffer.values[i];
            running = delta + gamma * lambda * live * running;
            buffer.advantages[i] = running;
            buffer.returns[i] = running + buffer.values[i];
        }
    }
    Ok(())
}

//! Clipped-surrogate PPO objective, its analytic gradient, and the update loop.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::nn::{entropy_grad, log_prob_and_entropy, log_prob_grad, Adam, Cache};
use crate::{Error, Result};

use super::{ActorCritic, Hyperparams, RolloutBuffer};

/// Guard on the advantage standard deviation during normalisation.
pub const ADV_STD_FLOOR: f64 = 1e-8;

/// One minibatch of training samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub width: usize,
    pub observations: Vec<f64>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch {
    /// Gathers `indices` from `buffer`, normalising advantages if asked.
    pub fn gather(buffer: &RolloutBuffer, indices: &[usize], normalize: bool) -> Self {
        let mut mb = Self {
            width: buffer.width,
            observations: Vec::with_capacity(indices.len() * buffer.width),
            actions: Vec::with_capacity(indices.len()),
            old_log_probs: Vec::with_capacity(indices.len()),
            advantages: Vec::with_capacity(indices.len()),
            returns: Vec::with_capacity(indices.len()),
        };
        for &i in indices {
            mb.observations.extend_from_slice(buffer.observation(i));
            mb.actions.push(buffer.actions[i].index());
            mb.old_log_probs.push(buffer.log_probs[i]);
            mb.advantages.push(buffer.advantages[i]);
            mb.returns.push(buffer.returns[i]);
        }
        if normalize {
            normalize_advantages(&mut mb.advantages);
        }
        mb
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn observation(&self, k: usize) -> &[f64] {
        &self.observations[k * self.width..(k + 1) * self.width]
    }
}

/// Shifts to mean 0 and scales to unit (population) standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(ADV_STD_FLOOR);
    adv.iter_mut().for_each(|a| *a = (*a - mean) / std);
}

/// Loss components for one minibatch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    /// `policy + value_coef * value - entropy_coef * entropy`
    pub total: f64,
}

/// Gradient buffers matching an [`ActorCritic`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub actor: Vec<f64>,
    pub critic: Vec<f64>,
}

impl Gradients {
    pub fn zeros(policy: &ActorCritic) -> Self {
        Self {
            actor: vec![0.0; policy.actor.n_params()],
            critic: vec![0.0; policy.critic.n_params()],
        }
    }

    fn clear(&mut self) {
        self.actor.iter_mut().for_each(|g| *g = 0.0);
        self.critic.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn norm(&self) -> f64 {
        self.actor
            .iter()
            .chain(&self.critic)
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    fn scale(&mut self, c: f64) {
        self.actor.iter_mut().chain(self.critic.iter_mut()).for_each(|g| *g *= c);
    }
}

/// Evaluates the PPO loss on `mb`. When `grads` is given, the exact gradient
/// of `total` is accumulated into it.
pub fn ppo_objective(
    policy: &ActorCritic,
    mb: &Minibatch,
    hyper: &Hyperparams,
    mut grads: Option<&mut Gradients>,
) -> Result<LossStats> {
    if mb.width != policy.width() {
        return Err(Error::Shape(format!(
            "minibatch width {} but policy expects {}",
            mb.width,
            policy.width()
        )));
    }
    if mb.is_empty() {
        return Err(Error::Usage("empty minibatch".into()));
    }
    let n = mb.len() as f64;
    let eps = hyper.clip_range;
    let mut actor_cache = Cache::default();
    let mut critic_cache = Cache::default();
    let mut stats = LossStats::default();
    let mut clipped = 0usize;

    for k in 0..mb.len() {
        let obs = mb.observation(k);
        let action = mb.actions[k];
        let adv = mb.advantages[k];

        policy.actor.forward(obs, &mut actor_cache)?;
        let logits = actor_cache.output();
        let (log_prob, entropy) = log_prob_and_entropy(logits, action);
        let log_ratio = log_prob - mb.old_log_probs[k];
        let ratio = log_ratio.exp();
        let clipped_ratio = ratio.clamp(1.0 - eps, 1.0 + eps);
        let unclipped = ratio * adv;
        let surrogate = clipped_ratio * adv;
        stats.policy_loss -= unclipped.min(surrogate) / n;
        stats.entropy += entropy / n;
        stats.approx_kl += ((ratio - 1.0) - log_ratio) / n;
        if (ratio - 1.0).abs() > eps {
            clipped += 1;
        }

        policy.critic.forward(obs, &mut critic_cache)?;
        let value = critic_cache.output()[0];
        let err = value - mb.returns[k];
        stats.value_loss += err * err / n;

        if let Some(g) = grads.as_deref_mut() {
            // The min picks the unclipped branch whenever it is no larger;
            // only that branch depends on the parameters.
            let d_logp = if unclipped <= surrogate { -adv * ratio / n } else { 0.0 };
            let d_ent = -hyper.entropy_coef / n;
            let glp = log_prob_grad(logits, action);
            let gent = entropy_grad(logits);
            let upstream: Vec<f64> = glp
                .iter()
                .zip(&gent)
                .map(|(a, b)| d_logp * a + d_ent * b)
                .collect();
            policy.actor.backward(&actor_cache, &upstream, &mut g.actor)?;
            let dv = hyper.value_coef * 2.0 * err / n;
            policy.critic.backward(&critic_cache, &[dv], &mut g.critic)?;
        }
    }
    stats.clip_fraction = clipped as f64 / n;
    stats.total = stats.policy_loss + hyper.value_coef * stats.value_loss - hyper.entropy_coef * stats.entropy;
    Ok(stats)
}

/// Optimiser state carried across updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizers {
    pub actor: Adam,
    pub critic: Adam,
}

impl Optimizers {
    pub fn new(policy: &ActorCritic) -> Self {
        Self {
            actor: Adam::new(policy.actor.n_params()),
            critic: Adam::new(policy.critic.n_params()),
        }
    }
}

/// Runs `n_epochs` passes of shuffled minibatch updates over `buffer` and
/// returns the loss statistics averaged over all minibatches.
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut ActorCritic,
    opt: &mut Optimizers,
    buffer: &RolloutBuffer,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<LossStats> {
    let mut indices: Vec<usize> = (0..buffer.len()).collect();
    let mut grads = Gradients::zeros(policy);
    let mut sum = LossStats::default();
    let mut count = 0usize;
    for _ in 0..hyper.n_epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(hyper.minibatch_size) {
            let mb = Minibatch::gather(buffer, chunk, hyper.normalize_advantage);
            grads.clear();
            let stats = ppo_objective(policy, &mb, hyper, Some(&mut grads))?;
            if !stats.total.is_finite() {
                return Err(Error::NonFinite(format!(
                    "PPO loss after {count} minibatches: {stats:?}"
                )));
            }
            if let Some(max_norm) = hyper.max_grad_norm {
                let norm = grads.norm();
                if norm > max_norm {
                    grads.scale(max_norm / (norm + 1e-6));
                }
            }
            opt.actor
                .step(policy.actor.params_mut(), &grads.actor, hyper.learning_rate)?;
            opt.critic
                .step(policy.critic.params_mut(), &grads.critic, hyper.learning_rate)?;
            sum.policy_loss += stats.policy_loss;
            sum.value_loss += stats.value_loss;
            sum.entropy += stats.entropy;
            sum.clip_fraction += stats.clip_fraction;
            sum.approx_kl += stats.approx_kl;
            sum.total += stats.total;
            count += 1;
        }
    }
    let c = count.max(1) as f64;
    Ok(LossStats {
        policy_loss: sum.policy_loss / c,
        value_loss: sum.value_loss / c,
        entropy: sum.entropy / c,
        clip_fraction: sum.clip_fraction / c,
        approx_kl: sum.approx_kl / c,
        total: sum.total / c,
    })
}

//! Compares the analytic PPO loss gradient with central finite differences
//! on a rollout from an untrained policy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rlstop::corpus::{batch_topic, synth_topics, BatchedTopic, SynthConfig};
use rlstop::env::{ObsMode, VecEnv};
use rlstop::ppo::{collect_rollout, compute_gae, ppo_objective, ActorCritic, Gradients, Hyperparams, Minibatch};

fn main() -> rlstop::Result<()> {
    let pool: Vec<BatchedTopic> = synth_topics(&SynthConfig {
        count: 4,
        docs: 200,
        decay: 20.0,
        seed: 2,
        ..SynthConfig::default()
    })?
    .into_iter()
    .map(|t| batch_topic(t, 10))
    .collect::<Result<_, _>>()?;

    let hyper = Hyperparams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut venv = VecEnv::new(&pool, 2, 0.9, ObsMode::Ratio, 4)?;
    let mut policy = ActorCritic::new(10, 4)?;
    let mut rollout = collect_rollout(&policy, &mut venv, 16, &mut rng)?;
    compute_gae(&mut rollout.buffer, hyper.gamma, hyper.gae_lambda, &rollout.bootstrap_values)?;
    let idx: Vec<usize> = (0..rollout.buffer.len()).collect();
    let mb = Minibatch::gather(&rollout.buffer, &idx, true);

    // Nudge the actor so the probability ratio differs from 1.
    for p in policy.actor.params_mut() {
        *p += 0.02 * p.signum();
    }

    let mut grads = Gradients::zeros(&policy);
    let stats = ppo_objective(&policy, &mb, &hyper, Some(&mut grads))?;
    println!("loss {:.6}, clip fraction {:.3}", stats.total, stats.clip_fraction);

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for k in (0..grads.actor.len()).step_by(97) {
        let base = policy.actor.params()[k];
        policy.actor.params_mut()[k] = base + h;
        let up = ppo_objective(&policy, &mb, &hyper, None)?.total;
        policy.actor.params_mut()[k] = base - h;
        let down = ppo_objective(&policy, &mb, &hyper, None)?.total;
        policy.actor.params_mut()[k] = base;
        let numeric = (up - down) / (2.0 * h);
        let rel = (numeric - grads.actor[k]).abs() / numeric.abs().max(grads.actor[k].abs()).max(1e-8);
        worst = worst.max(rel);
    }
    println!("worst relative error over sampled actor parameters: {worst:.2e}");
    Ok(())
}

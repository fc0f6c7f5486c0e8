//! Trains a stopping policy on synthetic front-loaded topics and compares it
//! with the oracle and a 50% budget on held-out topics.
//!
//! ```text
//! cargo run --release --example train_policy -- [seed] [timesteps]
//! ```

use std::time::Instant;

use rlstop::baselines::{budget_stop, oracle_stop};
use rlstop::corpus::{batch_topic, synth_topics, BatchedTopic, SynthConfig, Topic};
use rlstop::env::ObsMode;
use rlstop::eval::{cost_of, excess_of, recall_of, StopResult};
use rlstop::ppo::{infer_stop, train_with, Hyperparams, StopMode};

const TARGET: f64 = 0.9;
const BATCHES: usize = 100;

fn main() -> rlstop::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let timesteps: usize = args.next().map_or(100_000, |s| s.parse().expect("timesteps"));

    let topics = synth_topics(&SynthConfig {
        count: 45,
        seed: 7,
        ..SynthConfig::default()
    })?;
    let (train, held_out) = topics.split_at(30);
    let pool: Vec<BatchedTopic> = train
        .iter()
        .map(|t| batch_topic(t.clone(), BATCHES))
        .collect::<Result<_, _>>()?;

    let hyper = Hyperparams {
        total_timesteps: timesteps,
        seed,
        ..Hyperparams::default()
    };
    let started = Instant::now();
    let out = train_with(&pool, TARGET, ObsMode::Ratio, &hyper, |row| {
        if row.iteration % 25 == 0 {
            println!(
                "iter {:>4}  reward {:>7.3}  stop batch {:>6.2}  entropy {:.3}",
                row.iteration, row.mean_ep_reward, row.mean_stop_batch, row.stats.entropy
            );
        }
    })?;
    println!("trained {timesteps} timesteps in {:.1?}", started.elapsed());

    let mut rng = rand::rng();
    let mut rl = Vec::new();
    let mut oracle = Vec::new();
    let mut budget = Vec::new();
    for topic in held_out {
        let bt = batch_topic(topic.clone(), BATCHES)?;
        rl.push(infer_stop(&out.policy, &bt, ObsMode::Ratio, TARGET, StopMode::Greedy, &mut rng)?);
        oracle.push(oracle_stop(topic, TARGET)?);
        budget.push(budget_stop(topic, 0.5, TARGET)?);
    }
    for (name, results) in [("rlstop", &rl), ("oracle", &oracle), ("budget_0.5", &budget)] {
        let (recall, cost, excess) = summarize(results, held_out)?;
        println!("{name:<11} recall {recall:.3}  cost {cost:.3}  excess {excess:.3}");
    }
    Ok(())
}

fn summarize(results: &[StopResult], topics: &[Topic]) -> rlstop::Result<(f64, f64, f64)> {
    let n = results.len() as f64;
    let mut sums = (0.0, 0.0, 0.0);
    for (r, t) in results.iter().zip(topics) {
        sums.0 += recall_of(r, t);
        sums.1 += cost_of(r, t);
        sums.2 += excess_of(r, t, TARGET)?;
    }
    Ok((sums.0 / n, sums.1 / n, sums.2 / n))
}

//! Walks one episode of the stopping environment by hand and shows how the
//! reward peaks at the target batch.

use rlstop::corpus::{batch_topic, Topic};
use rlstop::env::{reward, Action, ObsMode, StopEnv};

fn main() -> rlstop::Result<()> {
    // 12 documents in 6 batches of two; 4 relevant, all in the first half.
    let labels = [1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0].map(|b| b == 1).to_vec();
    let bt = batch_topic(Topic::from_labels("demo", labels)?, 6)?;
    println!("batch relevance {:?}, cumulative {:?}", bt.batch_rel(), bt.cum_rel());

    let target = bt.target_batch(0.75)?;
    println!("target batch at recall 0.75: {target}");
    for i in 1..=bt.n_batches() {
        let cumulative: f64 = (1..=i).map(|k| reward(k, target, bt.n_batches())).sum();
        println!("  stop in S_{i}: step reward {:+.3}, episode reward {cumulative:+.3}", reward(i, target, 6));
    }

    let mut env = StopEnv::reset(&bt, 0.75, ObsMode::Ratio)?;
    println!("S_1 observation {:?}", env.observation());
    let mut total = 0.0;
    loop {
        let action = if env.current_batch() < target { Action::Continue } else { Action::Stop };
        let (obs, r, done) = env.step(action)?;
        total += r;
        println!("{action:?}: reward {r:+.3}, observation {obs:?}");
        if done {
            break;
        }
    }
    println!("stopped in S_{} with total reward {total:.3}", env.current_batch());
    Ok(())
}

//! Trains a short policy, saves it as a JSON checkpoint, reloads it and
//! applies it greedily and by sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rlstop::corpus::{batch_topic, synth_topics, BatchedTopic, SynthConfig};
use rlstop::env::ObsMode;
use rlstop::ppo::{train, Checkpoint, Hyperparams, StopMode};

fn main() -> rlstop::Result<()> {
    let topics = synth_topics(&SynthConfig {
        count: 12,
        seed: 9,
        ..SynthConfig::default()
    })?;
    let pool: Vec<BatchedTopic> = topics
        .iter()
        .map(|t| batch_topic(t.clone(), 100))
        .collect::<Result<_, _>>()?;
    let (train_pool, test_pool) = pool.split_at(8);

    let hyper = Hyperparams {
        total_timesteps: 8_000,
        seed: 1,
        ..Hyperparams::default()
    };
    let out = train(train_pool, 0.8, ObsMode::Ratio, &hyper)?;

    let path = std::env::temp_dir().join("rlstop_example_checkpoint.json");
    out.checkpoint.save(&path)?;
    let loaded = Checkpoint::load(&path)?;
    assert_eq!(loaded, out.checkpoint);
    println!("checkpoint saved to {} after {} timesteps", path.display(), loaded.timesteps);

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for bt in test_pool {
        let greedy = loaded.stop(bt, StopMode::Greedy, &mut rng)?;
        let sampled = loaded.stop(bt, StopMode::Sample, &mut rng)?;
        println!(
            "{}: target batch {:>2}, greedy stop {:>3?}, sampled stop {:>3?}",
            bt.topic().id(),
            bt.target_batch(0.8)?,
            greedy.stop_batch.unwrap_or_default(),
            sampled.stop_batch.unwrap_or_default()
        );
    }
    Ok(())
}

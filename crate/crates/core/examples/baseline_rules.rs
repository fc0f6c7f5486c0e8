//! Runs the oracle, knee and budget stopping rules over synthetic topics.

use rlstop::baselines::{budget_stop, knee_stop, oracle_stop, KneeConfig};
use rlstop::corpus::{batch_topic, synth_topics, SynthConfig};
use rlstop::eval::{cost_of, recall_of};

fn main() -> rlstop::Result<()> {
    let topics = synth_topics(&SynthConfig {
        count: 8,
        seed: 3,
        ..SynthConfig::default()
    })?;
    let target = 0.9;
    println!("{:<6} {:>4} | {:^13} | {:^13} | {:^13}", "topic", "R", "oracle", "knee", "budget 0.5");
    for topic in &topics {
        let bt = batch_topic(topic.clone(), 100)?;
        let results = [
            oracle_stop(topic, target)?,
            knee_stop(&bt, &KneeConfig::default(), target),
            budget_stop(topic, 0.5, target)?,
        ];
        let cells: Vec<String> = results
            .iter()
            .map(|r| format!("{:.2} / {:.3}", recall_of(r, topic), cost_of(r, topic)))
            .collect();
        println!("{:<6} {:>4} | {}", topic.id(), topic.relevant(), cells.join(" | "));
    }
    println!("cells are recall / cost");
    Ok(())
}

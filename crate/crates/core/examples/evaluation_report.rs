//! Builds per-topic and aggregate reports for several stopping methods at
//! two targets, then reads a results CSV back in.

use rlstop::baselines::{budget_stop, knee_stop, oracle_stop, KneeConfig};
use rlstop::corpus::{batch_topic, synth_topics, SynthConfig};
use rlstop::eval::{aggregate, read_results, render_aggregate, render_results, render_topic_report};

fn main() -> rlstop::Result<()> {
    let topics = synth_topics(&SynthConfig {
        count: 10,
        seed: 5,
        ..SynthConfig::default()
    })?;
    let mut results = Vec::new();
    for &target in &[0.8, 1.0] {
        for topic in &topics {
            let bt = batch_topic(topic.clone(), 100)?;
            results.push(oracle_stop(topic, target)?);
            results.push(knee_stop(&bt, &KneeConfig::default(), target));
            results.push(budget_stop(topic, 0.3, target)?);
            results.push(budget_stop(topic, 0.7, target)?);
        }
    }

    // Results survive a round trip through the CSV format the CLI writes.
    let csv = render_results(&results)?;
    let reread = read_results(&csv, "in-memory", &[])?;
    assert_eq!(reread.len(), results.len());

    let report = aggregate(&reread, &topics)?;
    print!("{}", render_aggregate(&report)?);

    let per_topic = render_topic_report(&report)?;
    println!("\nfirst rows of the per-topic report:");
    for line in per_topic.lines().take(5) {
        println!("{line}");
    }

    for s in report.summaries.iter().filter(|s| s.method == "knee") {
        let worst = s.excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("\nknee @{}: worst per-topic excess {worst:.3}", s.target);
    }
    Ok(())
}

//! Generates a synthetic collection, writes it as TREC run and qrels files,
//! then reads it back the way real collections are loaded.

use rlstop::corpus::{
    assemble_topics, batch_topic, parse_qrels, parse_run, synth_topics, write_qrels, write_run,
    SynthConfig,
};

fn main() -> rlstop::Result<()> {
    let cfg = SynthConfig {
        count: 5,
        seed: 11,
        ..SynthConfig::default()
    };
    let topics = synth_topics(&cfg)?;

    let dir = std::env::temp_dir().join("rlstop-synthetic-collection");
    std::fs::create_dir_all(&dir).map_err(|e| rlstop::Error::io(&dir, e))?;
    let run_path = dir.join("topics.run");
    let qrels_path = dir.join("topics.qrels");
    std::fs::write(&run_path, write_run(&topics, "synth")).map_err(|e| rlstop::Error::io(&run_path, e))?;
    std::fs::write(&qrels_path, write_qrels(&topics)).map_err(|e| rlstop::Error::io(&qrels_path, e))?;
    println!("wrote {} and {}", run_path.display(), qrels_path.display());

    let run = parse_run(&std::fs::read_to_string(&run_path).map_err(|e| rlstop::Error::io(&run_path, e))?)?;
    let qrels = parse_qrels(&std::fs::read_to_string(&qrels_path).map_err(|e| rlstop::Error::io(&qrels_path, e))?)?;
    let loaded = assemble_topics(&run, &qrels)?;
    assert_eq!(loaded.topics, topics);

    for topic in &loaded.topics {
        let bt = batch_topic(topic.clone(), 100)?;
        println!(
            "{}  N={}  R={:>2}  target batch @0.9 = {:>2}  first batches {:?}",
            topic.id(),
            topic.len(),
            topic.relevant(),
            bt.target_batch(0.9)?,
            &bt.batch_rel()[..8]
        );
    }
    Ok(())
}

//! Ranked collections: run/qrels ingestion, batching, target batches and a
//! synthetic topic generator.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, RECALL_EPS};

/// topic id → (doc id → binary relevance)
pub type Qrels = BTreeMap<String, BTreeMap<String, u8>>;
/// topic id → documents in rank order
pub type Run = BTreeMap<String, Vec<String>>;

/// One ranked topic with binary relevance labels aligned to the ranking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    id: String,
    ranking: Vec<String>,
    labels: Vec<bool>,
    relevant: usize,
}

impl Topic {
    pub fn new(id: impl Into<String>, ranking: Vec<String>, labels: Vec<bool>) -> Result<Self> {
        let id = id.into();
        if ranking.is_empty() {
            return Err(Error::Config(format!("topic `{id}` has an empty ranking")));
        }
        if ranking.len() != labels.len() {
            return Err(Error::Shape(format!(
                "topic `{id}`: {} documents but {} labels",
                ranking.len(),
                labels.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ranking.len());
        for doc in &ranking {
            if !seen.insert(doc.as_str()) {
                return Err(Error::DuplicateDoc {
                    topic: id,
                    doc: doc.clone(),
                });
            }
        }
        let relevant = labels.iter().filter(|&&l| l).count();
        Ok(Self {
            id,
            ranking,
            labels,
            relevant,
        })
    }

    /// Builds a topic with generated document ids `d1..dN`.
    pub fn from_labels(id: impl Into<String>, labels: Vec<bool>) -> Result<Self> {
        let ranking = (1..=labels.len()).map(|r| format!("d{r}")).collect();
        Self::new(id, ranking, labels)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn ranking(&self) -> &[String] {
        &self.ranking
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    /// Number of documents, `N`.
    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    /// Total relevant documents, `R`.
    pub fn relevant(&self) -> usize {
        self.relevant
    }

    /// Relevant documents among the first `rank` documents.
    pub fn relevant_within(&self, rank: usize) -> usize {
        self.labels[..rank.min(self.len())]
            .iter()
            .filter(|&&l| l)
            .count()
    }

    /// Gain curve `g(0..=N)`.
    pub fn gain_curve(&self) -> Vec<usize> {
        let mut g = Vec::with_capacity(self.len() + 1);
        g.push(0);
        let mut acc = 0;
        for &l in &self.labels {
            acc += usize::from(l);
            g.push(acc);
        }
        g
    }
}

/// A topic split into consecutive batches.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchedTopic {
    topic: Topic,
    batch_sizes: Vec<usize>,
    batch_rel: Vec<usize>,
    cum_rel: Vec<usize>,
    requested_batches: usize,
}

impl BatchedTopic {
    pub fn topic(&self) -> &Topic {
        &self.topic
    }

    /// Number of batches `B` (after clamping to `N`).
    pub fn n_batches(&self) -> usize {
        self.batch_sizes.len()
    }

    /// The `B` that was asked for, before any clamping.
    pub fn requested_batches(&self) -> usize {
        self.requested_batches
    }

    pub fn was_clamped(&self) -> bool {
        self.requested_batches != self.n_batches()
    }

    pub fn batch_sizes(&self) -> &[usize] {
        &self.batch_sizes
    }

    pub fn batch_rel(&self) -> &[usize] {
        &self.batch_rel
    }

    pub fn cum_rel(&self) -> &[usize] {
        &self.cum_rel
    }

    /// Documents contained in the first `batches` batches.
    pub fn docs_through(&self, batches: usize) -> usize {
        self.batch_sizes[..batches.min(self.n_batches())].iter().sum()
    }

    /// Smallest 1-based batch index whose cumulative relevant count meets
    /// `target_recall * R` (with [`RECALL_EPS`] slack).
    pub fn target_batch(&self, target_recall: f64) -> Result<usize> {
        check_target(target_recall)?;
        let r = self.topic.relevant();
        if r == 0 {
            return Err(Error::UndefinedTarget(self.topic.id.clone()));
        }
        let needed = target_recall * r as f64 - RECALL_EPS;
        let idx = self.cum_rel.partition_point(|&c| (c as f64) < needed);
        Ok(idx + 1)
    }
}

pub(crate) fn check_target(target_recall: f64) -> Result<()> {
    if target_recall > 0.0 && target_recall <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "target recall {target_recall} is outside (0, 1]"
        )))
    }
}

/// Splits `topic` into `batches` contiguous batches. The first `N mod B`
/// batches get one extra document. `B > N` is clamped to `N`.
pub fn batch_topic(topic: Topic, batches: usize) -> Result<BatchedTopic> {
    if batches == 0 {
        return Err(Error::Config("batch count must be at least 1".into()));
    }
    let n = topic.len();
    let b = if batches > n {
        log::warn!(
            "topic `{}`: {batches} batches requested for {n} documents; clamping to {n}",
            topic.id()
        );
        n
    } else {
        batches
    };
    let base = n / b;
    let extra = n % b;
    let batch_sizes: Vec<usize> = (0..b).map(|j| base + usize::from(j < extra)).collect();

    let mut batch_rel = Vec::with_capacity(b);
    let mut cum_rel = Vec::with_capacity(b);
    let mut start = 0;
    let mut acc = 0;
    for &size in &batch_sizes {
        let rel = topic.labels[start..start + size].iter().filter(|&&l| l).count();
        acc += rel;
        batch_rel.push(rel);
        cum_rel.push(acc);
        start += size;
    }
    Ok(BatchedTopic {
        topic,
        batch_sizes,
        batch_rel,
        cum_rel,
        requested_batches: batches,
    })
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, f)| !f.is_empty())
}

/// Parses a qrels file: `topic iteration doc relevance` per line.
pub fn parse_qrels(text: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (line, fields) in lines(text) {
        if fields.len() < 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let rel: i64 = fields[3].parse().map_err(|_| Error::Parse {
            line,
            message: format!("relevance `{}` is not an integer", fields[3]),
        })?;
        qrels
            .entry(fields[0].to_string())
            .or_default()
            .insert(fields[2].to_string(), u8::from(rel > 0));
    }
    Ok(qrels)
}

/// Parses a TREC run file: `topic Q0 doc rank score tag` per line.
///
/// Documents are ordered by ascending rank, then descending score, then doc id.
pub fn parse_run(text: &str) -> Result<Run> {
    struct Entry {
        doc: String,
        rank: f64,
        score: f64,
    }
    let mut per_topic: BTreeMap<String, Vec<Entry>> = BTreeMap::new();
    let mut seen: HashMap<String, HashSet<String>> = HashMap::new();
    for (line, fields) in lines(text) {
        if fields.len() < 5 {
            return Err(Error::Parse {
                line,
                message: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let number = |s: &str, what: &str| -> Result<f64> {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    line,
                    message: format!("{what} `{s}` is not numeric"),
                }),
            }
        };
        let rank = number(fields[3], "rank")?;
        let score = number(fields[4], "score")?;
        let topic = fields[0].to_string();
        let doc = fields[2].to_string();
        if !seen.entry(topic.clone()).or_default().insert(doc.clone()) {
            return Err(Error::DuplicateDoc { topic, doc });
        }
        per_topic
            .entry(topic)
            .or_default()
            .push(Entry { doc, rank, score });
    }
    Ok(per_topic
        .into_iter()
        .map(|(topic, mut entries)| {
            entries.sort_by(|a, b| {
                a.rank
                    .total_cmp(&b.rank)
                    .then(b.score.total_cmp(&a.score))
                    .then_with(|| a.doc.cmp(&b.doc))
            });
            (topic, entries.into_iter().map(|e| e.doc).collect())
        })
        .collect())
}

/// Topics built from a run and qrels, plus what was left out.
#[derive(Debug, Clone, Default)]
pub struct Assembled {
    pub topics: Vec<Topic>,
    /// Run topics with no relevant documents (recall undefined).
    pub excluded: Vec<String>,
    /// Qrels topics that do not appear in the run.
    pub ignored: Vec<String>,
}

/// Aligns qrels labels with run rankings. Documents missing from the qrels
/// are non-relevant.
pub fn assemble_topics(run: &Run, qrels: &Qrels) -> Result<Assembled> {
    let mut out = Assembled::default();
    for (topic_id, ranking) in run {
        let judged = qrels
            .get(topic_id)
            .ok_or_else(|| Error::MissingTopic(topic_id.clone()))?;
        let labels = ranking
            .iter()
            .map(|d| judged.get(d).copied().unwrap_or(0) > 0)
            .collect();
        let topic = Topic::new(topic_id.clone(), ranking.clone(), labels)?;
        if topic.relevant() == 0 {
            log::warn!("topic `{topic_id}` has no relevant documents; excluded");
            out.excluded.push(topic_id.clone());
        } else {
            out.topics.push(topic);
        }
    }
    for topic_id in qrels.keys().filter(|t| !run.contains_key(*t)) {
        log::warn!("qrels topic `{topic_id}` not in run; ignored");
        out.ignored.push(topic_id.clone());
    }
    Ok(out)
}

/// Settings for [`synth_topics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub count: usize,
    pub docs: usize,
    pub prevalence: f64,
    /// Rank scale of the exponential decay in relevance probability.
    pub decay: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            count: 30,
            docs: 2000,
            prevalence: 0.02,
            decay: 130.0,
            seed: 0,
        }
    }
}

const MAX_SCALE: f64 = 1e12;

/// Scale `c` such that `sum_r min(1, c * exp(-r / decay))` equals
/// `prevalence * docs` for ranks `r = 1..=docs`.
pub fn relevance_scale(docs: usize, prevalence: f64, decay: f64) -> Result<f64> {
    let weights: Vec<f64> = (1..=docs).map(|r| (-(r as f64) / decay).exp()).collect();
    let target = prevalence * docs as f64;
    let expected = |c: f64| -> f64 { weights.iter().map(|w| (c * w).min(1.0)).sum() };

    let mut hi = 1.0;
    while expected(hi) < target {
        hi *= 2.0;
        if hi > MAX_SCALE {
            return Err(Error::Config(format!(
                "prevalence {prevalence} is infeasible with decay {decay} over {docs} documents"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Generates front-loaded synthetic topics: the document at rank `r` is
/// relevant with probability `min(1, c * exp(-r / decay))`. Topics that come
/// out with no relevant documents are redrawn.
pub fn synth_topics(cfg: &SynthConfig) -> Result<Vec<Topic>> {
    if !(cfg.prevalence > 0.0 && cfg.prevalence < 1.0) {
        return Err(Error::Config(format!(
            "prevalence {} is outside (0, 1)",
            cfg.prevalence
        )));
    }
    if cfg.decay.is_nan() || cfg.decay <= 0.0 {
        return Err(Error::Config(format!("decay {} must be positive", cfg.decay)));
    }
    if cfg.docs == 0 {
        return Err(Error::Config("document count must be at least 1".into()));
    }
    let c = relevance_scale(cfg.docs, cfg.prevalence, cfg.decay)?;
    let probs: Vec<f64> = (1..=cfg.docs)
        .map(|r| (c * (-(r as f64) / cfg.decay).exp()).min(1.0))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut topics = Vec::with_capacity(cfg.count);
    for t in 0..cfg.count {
        let labels = loop {
            let labels: Vec<bool> = probs.iter().map(|&p| rng.random_bool(p)).collect();
            if labels.iter().any(|&l| l) {
                break labels;
            }
        };
        let ranking = (1..=cfg.docs).map(|r| format!("D{r:06}")).collect();
        topics.push(Topic::new(format!("S{t:04}"), ranking, labels)?);
    }
    Ok(topics)
}

/// Renders topics as a TREC run file.
pub fn write_run(topics: &[Topic], tag: &str) -> String {
    let mut out = String::new();
    for topic in topics {
        let n = topic.len();
        for (i, doc) in topic.ranking().iter().enumerate() {
            let _ = writeln!(out, "{} Q0 {} {} {} {}", topic.id(), doc, i + 1, n - i, tag);
        }
    }
    out
}

/// Renders topics as a qrels file covering every ranked document.
pub fn write_qrels(topics: &[Topic]) -> String {
    let mut out = String::new();
    for topic in topics {
        for (doc, &rel) in topic.ranking().iter().zip(topic.labels()) {
            let _ = writeln!(out, "{} 0 {} {}", topic.id(), doc, u8::from(rel));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(bits: &[u8]) -> Vec<bool> {
        bits.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn qrels_basic_and_graded() {
        let q = parse_qrels("t1 0 d7 1\nt1 0 d8 0").unwrap();
        assert_eq!(q["t1"]["d7"], 1);
        assert_eq!(q["t1"]["d8"], 0);
        let q = parse_qrels("t1 0 d7 2").unwrap();
        assert_eq!(q["t1"]["d7"], 1);
    }

    #[test]
    fn qrels_later_line_wins_and_crlf() {
        let q = parse_qrels("t1 0 d7 1\r\n\r\nt1 0 d7 0\r\n").unwrap();
        assert_eq!(q["t1"]["d7"], 0);
    }

    #[test]
    fn qrels_errors_carry_line() {
        match parse_qrels("t1 0 d7") {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_qrels("t1 0 d7 1\nt1 0 d8 x") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn run_orders_by_rank_then_score() {
        let r = parse_run("t1 Q0 d2 1 9.5 x\nt1 Q0 d5 2 7.0 x").unwrap();
        assert_eq!(r["t1"], vec!["d2", "d5"]);
        let r = parse_run("t1 Q0 a 1 3.0 x\nt1 Q0 b 1 5.0 x").unwrap();
        assert_eq!(r["t1"], vec!["b", "a"]);
        let r = parse_run("t1 Q0 zz 4 1.0 x\nt1 Q0 aa 4 1.0 x\nt1 Q0 mm 2 0.0 x").unwrap();
        assert_eq!(r["t1"], vec!["mm", "aa", "zz"]);
    }

    #[test]
    fn run_errors() {
        assert!(matches!(
            parse_run("t1 Q0 d2 1 9.5 x\nt1 Q0 d2 2 7.0 x"),
            Err(Error::DuplicateDoc { .. })
        ));
        assert!(matches!(
            parse_run("t1 Q0 d2 one 9.5 x"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_run("t1 Q0 d2 1 high x"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn assemble_aligns_excludes_and_errors() {
        let run = parse_run("t1 Q0 d2 1 2 x\nt1 Q0 d5 2 1 x\nt2 Q0 d1 1 1 x").unwrap();
        let qrels = parse_qrels("t1 0 d2 1\nt2 0 d1 0\nt3 0 d4 1").unwrap();
        let a = assemble_topics(&run, &qrels).unwrap();
        assert_eq!(a.topics.len(), 1);
        assert_eq!(a.topics[0].labels(), &[true, false]);
        assert_eq!(a.topics[0].relevant(), 1);
        assert_eq!(a.excluded, vec!["t2"]);
        assert_eq!(a.ignored, vec!["t3"]);

        let run = parse_run("t9 Q0 d1 1 1 x").unwrap();
        match assemble_topics(&run, &qrels) {
            Err(Error::MissingTopic(t)) => assert_eq!(t, "t9"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn batching_examples() {
        let t = Topic::from_labels("t", labels(&[1, 1, 0, 0, 1, 0, 0, 0, 1, 0])).unwrap();
        let bt = batch_topic(t.clone(), 5).unwrap();
        assert_eq!(bt.batch_sizes(), &[2, 2, 2, 2, 2]);
        // pairs: [1,1] [0,0] [1,0] [0,0] [1,0]
        assert_eq!(bt.batch_rel(), &[2, 0, 1, 0, 1]);
        assert_eq!(bt.cum_rel(), &[2, 2, 3, 3, 4]);

        let bt = batch_topic(t, 3).unwrap();
        assert_eq!(bt.batch_sizes(), &[4, 3, 3]);

        let tiny = Topic::from_labels("t", labels(&[1, 0])).unwrap();
        let bt = batch_topic(tiny, 100).unwrap();
        assert_eq!(bt.n_batches(), 2);
        assert!(bt.was_clamped());
        assert!(batch_topic(Topic::from_labels("t", labels(&[1])).unwrap(), 0).is_err());
    }

    #[test]
    fn target_batch_examples() {
        // batch_rel [2,1,0,1,0] with R=5 (one extra relevant doc beyond the batches shown
        // would change R, so build a matching topic: 5 relevant over 5 batches).
        let t = Topic::from_labels("t", labels(&[1, 1, 1, 0, 0, 0, 1, 0, 1, 0])).unwrap();
        let bt = batch_topic(t, 5).unwrap();
        assert_eq!(bt.batch_rel(), &[2, 1, 0, 1, 1]);
        // need 4 of 5; cum [2,3,3,4,5]
        assert_eq!(bt.target_batch(0.8).unwrap(), 4);

        // last relevant doc in batch 7 of 10
        let mut l = vec![false; 100];
        l[3] = true;
        l[65] = true;
        let bt = batch_topic(Topic::from_labels("t", l).unwrap(), 10).unwrap();
        assert_eq!(bt.target_batch(1.0).unwrap(), 7);

        // R=9, target 0.8: 7.2 needed, so the 8th relevant document's batch.
        let l: Vec<bool> = (0..9).map(|_| true).collect();
        let bt = batch_topic(Topic::from_labels("t", l).unwrap(), 9).unwrap();
        assert_eq!(bt.target_batch(0.8).unwrap(), 8);
        assert_eq!(bt.target_batch(0.9).unwrap(), 9);
    }

    #[test]
    fn target_batch_errors() {
        let t = Topic::from_labels("z", vec![false; 4]).unwrap();
        let bt = batch_topic(t, 2).unwrap();
        assert!(matches!(bt.target_batch(0.9), Err(Error::UndefinedTarget(_))));
        let t = Topic::from_labels("z", vec![true; 4]).unwrap();
        let bt = batch_topic(t, 2).unwrap();
        assert!(bt.target_batch(0.0).is_err());
        assert!(bt.target_batch(1.5).is_err());
    }

    #[test]
    fn topic_invariants() {
        assert!(Topic::new("t", vec![], vec![]).is_err());
        assert!(Topic::new("t", vec!["a".into(), "a".into()], vec![true, false]).is_err());
        assert!(Topic::new("t", vec!["a".into()], vec![true, false]).is_err());
    }

    #[test]
    fn synth_is_deterministic() {
        let cfg = SynthConfig {
            count: 5,
            docs: 300,
            seed: 11,
            ..Default::default()
        };
        assert_eq!(synth_topics(&cfg).unwrap(), synth_topics(&cfg).unwrap());
        let other = SynthConfig { seed: 12, ..cfg.clone() };
        assert_ne!(synth_topics(&cfg).unwrap(), synth_topics(&other).unwrap());
    }

    #[test]
    fn synth_uniform_limit() {
        let c = relevance_scale(500, 0.05, f64::INFINITY).unwrap();
        assert!((c - 0.05).abs() < 1e-12);
    }

    #[test]
    fn synth_mean_relevant_matches_prevalence() {
        let cfg = SynthConfig {
            count: 1000,
            docs: 1000,
            prevalence: 0.05,
            decay: 200.0,
            seed: 3,
        };
        let topics = synth_topics(&cfg).unwrap();
        let rs: Vec<f64> = topics.iter().map(|t| t.relevant() as f64).collect();
        let mean = rs.iter().sum::<f64>() / rs.len() as f64;
        // Poisson-binomial variance sum p(1-p) from the generating probabilities.
        let c = relevance_scale(1000, 0.05, 200.0).unwrap();
        let var: f64 = (1..=1000)
            .map(|r| {
                let p = (c * (-(r as f64) / 200.0).exp()).min(1.0);
                p * (1.0 - p)
            })
            .sum();
        let se = (var / 1000.0).sqrt();
        assert!((mean - 50.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn synth_rejects_bad_config() {
        let bad = |prevalence, decay| SynthConfig {
            count: 1,
            docs: 1000,
            prevalence,
            decay,
            seed: 0,
        };
        assert!(synth_topics(&bad(0.0, 10.0)).is_err());
        assert!(synth_topics(&bad(1.0, 10.0)).is_err());
        assert!(synth_topics(&bad(0.1, 0.0)).is_err());
        assert!(synth_topics(&bad(0.5, 1e-3)).is_err());
    }

    #[test]
    fn dump_round_trips() {
        let cfg = SynthConfig {
            count: 3,
            docs: 120,
            seed: 5,
            ..Default::default()
        };
        let topics = synth_topics(&cfg).unwrap();
        let run = parse_run(&write_run(&topics, "synth")).unwrap();
        let qrels = parse_qrels(&write_qrels(&topics)).unwrap();
        let back = assemble_topics(&run, &qrels).unwrap();
        assert_eq!(back.topics, topics);
    }

    fn arb_labels() -> impl Strategy<Value = Vec<bool>> {
        prop::collection::vec(prop::bool::weighted(0.3), 1..60)
    }

    proptest! {
        #[test]
        fn batches_partition_the_ranking(l in arb_labels(), b in 1usize..80) {
            let t = Topic::from_labels("p", l).unwrap();
            let bt = batch_topic(t.clone(), b).unwrap();
            let sizes = bt.batch_sizes();
            prop_assert_eq!(sizes.iter().sum::<usize>(), t.len());
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
            prop_assert_eq!(bt.batch_rel().iter().sum::<usize>(), t.relevant());
            prop_assert_eq!(*bt.cum_rel().last().unwrap(), t.relevant());
            let mut start = 0;
            for (j, &s) in sizes.iter().enumerate() {
                let rel = t.labels()[start..start + s].iter().filter(|&&x| x).count();
                prop_assert_eq!(rel, bt.batch_rel()[j]);
                start += s;
            }
        }

        #[test]
        fn target_batch_matches_brute_force(l in arb_labels(), b in 1usize..30, t1 in 0.05f64..1.0, t2 in 0.05f64..1.0) {
            let t = Topic::from_labels("p", l).unwrap();
            prop_assume!(t.relevant() > 0);
            let r = t.relevant() as f64;
            let bt = batch_topic(t, b).unwrap();
            for target in [t1, t2, 0.8, 0.9, 1.0] {
                let got = bt.target_batch(target).unwrap();
                // brute force over all prefixes of batches
                let mut expected = None;
                for n in 1..=bt.n_batches() {
                    let found: usize = bt.batch_rel()[..n].iter().sum();
                    if found as f64 >= target * r - RECALL_EPS {
                        expected = Some(n);
                        break;
                    }
                }
                prop_assert_eq!(Some(got), expected);
            }
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(bt.target_batch(lo).unwrap() <= bt.target_batch(hi).unwrap());
        }
    }
}

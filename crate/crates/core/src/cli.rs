//! Subcommands behind the `rlstop` binary.
//!
//! Settings resolve in three layers: built-in defaults, then an optional
//! TOML config file (`--config`), then command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::baselines::{budget_stop, knee_stop, oracle_stop, KneeConfig};
use crate::corpus::{
    assemble_topics, batch_topic, parse_qrels, parse_run, synth_topics, write_qrels, write_run, BatchedTopic,
    SynthConfig, Topic,
};
use crate::env::ObsMode;
use crate::eval::{aggregate, read_results, render_aggregate, render_results, render_topic_report, EXCESS_NOTE};
use crate::ppo::{render_log, train, Checkpoint, Hyperparams, StopMode};
use crate::{Error, Result};

pub const DEFAULT_BATCHES: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "rlstop", version, about = "Reinforcement-learning stopping rule for technology-assisted review")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Write a synthetic run + qrels pair.
    Synth(SynthArgs),
    /// Train one policy per target recall.
    Train(TrainArgs),
    /// Apply trained policies to a collection.
    Stop(StopArgs),
    /// Run a reference stopping rule.
    Baseline(BaselineArgs),
    /// Compute recall/cost/excess reports from stop decisions.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeObs {
    Ratio,
    Count,
}

impl From<NormalizeObs> for ObsMode {
    fn from(n: NormalizeObs) -> Self {
        match n {
            NormalizeObs::Ratio => ObsMode::Ratio,
            NormalizeObs::Count => ObsMode::Count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Greedy,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    Oracle,
    Knee,
    Budget,
}

#[derive(Debug, Clone, Args)]
pub struct Collection {
    /// TREC run file (topic Q0 doc rank score tag).
    #[arg(long)]
    pub run: PathBuf,
    /// Qrels file (topic iter doc rel).
    #[arg(long)]
    pub qrels: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 30)]
    pub count: usize,
    #[arg(long, default_value_t = 2000)]
    pub docs: usize,
    #[arg(long, default_value_t = 0.02)]
    pub prevalence: f64,
    #[arg(long, default_value_t = 130.0)]
    pub decay: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; receives `topics.run` and `topics.qrels`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub collection: Collection,
    /// Target recall; repeat for several (one model each).
    #[arg(long = "target")]
    pub targets: Vec<f64>,
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long)]
    pub timesteps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_envs: Option<usize>,
    #[arg(long)]
    pub n_steps: Option<usize>,
    #[arg(long)]
    pub minibatch_size: Option<usize>,
    #[arg(long)]
    pub n_epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub entropy_coef: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gae_lambda: Option<f64>,
    #[arg(long)]
    pub clip_range: Option<f64>,
    #[arg(long)]
    pub value_coef: Option<f64>,
    #[arg(long)]
    pub max_grad_norm: Option<f64>,
    #[arg(long, value_enum)]
    pub normalize_obs: Option<NormalizeObs>,
    /// TOML file with defaults for any of the settings above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for checkpoints and training logs.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct StopArgs {
    #[command(flatten)]
    pub collection: Collection,
    /// Trained checkpoint; repeat to apply several.
    #[arg(long = "checkpoint", required = true)]
    pub checkpoints: Vec<PathBuf>,
    /// Must match the checkpoint's batch count when given.
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Greedy)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub collection: Collection,
    #[arg(long, value_enum)]
    pub method: BaselineMethod,
    #[arg(long = "target", required = true)]
    pub targets: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_BATCHES)]
    pub batches: usize,
    /// Fraction of each collection examined by the budget rule.
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub collection: Collection,
    /// Stop-decision CSV; repeat for several methods.
    #[arg(long = "results")]
    pub results: Vec<PathBuf>,
    /// Targets applied to imported rows that carry no `target` column.
    #[arg(long = "target")]
    pub targets: Vec<f64>,
    /// Output directory for `topic_report.csv` and `aggregate.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub targets: Option<Vec<f64>>,
    pub batches: Option<usize>,
    pub normalize_obs: Option<ObsMode>,
    pub seed: Option<u64>,
    pub total_timesteps: Option<usize>,
    pub n_envs: Option<usize>,
    pub n_steps: Option<usize>,
    pub minibatch_size: Option<usize>,
    pub n_epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub entropy_coef: Option<f64>,
    pub gamma: Option<f64>,
    pub gae_lambda: Option<f64>,
    pub clip_range: Option<f64>,
    pub value_coef: Option<f64>,
    pub max_grad_norm: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved training settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub targets: Vec<f64>,
    pub batches: usize,
    pub obs_mode: ObsMode,
    pub hyper: Hyperparams,
}

impl TrainArgs {
    pub fn resolve(&self) -> Result<TrainSettings> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let mut h = Hyperparams::default();
        macro_rules! layer {
            ($($field:ident <- $flag:ident),* $(,)?) => {
                $(
                    if let Some(v) = file.$field { h.$field = v; }
                    if let Some(v) = self.$flag { h.$field = v; }
                )*
            };
        }
        layer!(
            total_timesteps <- timesteps,
            seed <- seed,
            n_envs <- n_envs,
            n_steps <- n_steps,
            minibatch_size <- minibatch_size,
            n_epochs <- n_epochs,
            learning_rate <- learning_rate,
            entropy_coef <- entropy_coef,
            gamma <- gamma,
            gae_lambda <- gae_lambda,
            clip_range <- clip_range,
            value_coef <- value_coef,
        );
        if let Some(m) = self.max_grad_norm.or(file.max_grad_norm) {
            h.max_grad_norm = Some(m);
        }
        h.validate()?;

        let targets = if !self.targets.is_empty() {
            self.targets.clone()
        } else {
            file.targets.clone().unwrap_or_default()
        };
        if targets.is_empty() {
            return Err(Error::Usage("at least one --target is required".into()));
        }
        for &t in &targets {
            crate::corpus::check_target(t)?;
        }
        let batches = self.batches.or(file.batches).unwrap_or(DEFAULT_BATCHES);
        if batches == 0 {
            return Err(Error::Config("--batches must be at least 1".into()));
        }
        let obs_mode = self
            .normalize_obs
            .map(ObsMode::from)
            .or(file.normalize_obs)
            .unwrap_or_default();
        Ok(TrainSettings {
            targets,
            batches,
            obs_mode,
            hyper: h,
        })
    }
}

fn read(path: &Path) -> Result<String> {
    if !path.is_file() {
        return Err(Error::Config(format!("{} does not exist", path.display())));
    }
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn validate_collection(c: &Collection) -> Result<()> {
    for p in [&c.run, &c.qrels] {
        if !p.is_file() {
            return Err(Error::Config(format!("{} does not exist", p.display())));
        }
    }
    Ok(())
}

/// Loads a run + qrels pair into topics with at least one relevant document.
pub fn load_topics(c: &Collection) -> Result<Vec<Topic>> {
    validate_collection(c)?;
    let run = parse_run(&read(&c.run)?)?;
    let qrels = parse_qrels(&read(&c.qrels)?)?;
    let assembled = assemble_topics(&run, &qrels)?;
    if !assembled.excluded.is_empty() {
        eprintln!(
            "warning: {} topic(s) without relevant documents excluded: {}",
            assembled.excluded.len(),
            assembled.excluded.join(", ")
        );
    }
    if !assembled.ignored.is_empty() {
        eprintln!(
            "warning: {} qrels topic(s) not in the run ignored: {}",
            assembled.ignored.len(),
            assembled.ignored.join(", ")
        );
    }
    if assembled.topics.is_empty() {
        return Err(Error::Config("collection contains no usable topics".into()));
    }
    Ok(assembled.topics)
}

fn batch_all(topics: Vec<Topic>, batches: usize) -> Result<Vec<BatchedTopic>> {
    topics.into_iter().map(|t| batch_topic(t, batches)).collect()
}

/// File names used by `train` for a given target.
pub fn checkpoint_name(target: f64) -> String {
    format!("rlstop_t{target:.2}.json")
}

pub fn train_log_name(target: f64) -> String {
    format!("train_log_t{target:.2}.csv")
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    if args.count == 0 {
        return Err(Error::Config("--count must be at least 1".into()));
    }
    let cfg = SynthConfig {
        count: args.count,
        docs: args.docs,
        prevalence: args.prevalence,
        decay: args.decay,
        seed: args.seed,
    };
    let topics = synth_topics(&cfg)?;
    write(&args.out.join("topics.run"), &write_run(&topics, "synth"))?;
    write(&args.out.join("topics.qrels"), &write_qrels(&topics))?;
    let docs: usize = topics.iter().map(Topic::len).sum();
    let rel: usize = topics.iter().map(Topic::relevant).sum();
    println!(
        "wrote {} topics ({} documents, mean prevalence {:.4}) to {}",
        topics.len(),
        docs,
        rel as f64 / docs as f64,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let settings = args.resolve()?;
    let topics = batch_all(load_topics(&args.collection)?, settings.batches)?;
    for &target in &settings.targets {
        let out = train(&topics, target, settings.obs_mode, &settings.hyper)?;
        let ckpt_path = args.out.join(checkpoint_name(target));
        write(&ckpt_path, &out.checkpoint.to_json()?)?;
        write(&args.out.join(train_log_name(target)), &render_log(&out.log))?;
        let last = out.log.last();
        println!(
            "target {target}: {} timesteps, final mean stop batch {:.2}, checkpoint {}",
            out.checkpoint.timesteps,
            last.map_or(f64::NAN, |r| r.mean_stop_batch),
            ckpt_path.display()
        );
    }
    Ok(())
}

pub fn cmd_stop(args: &StopArgs) -> Result<()> {
    for p in &args.checkpoints {
        if !p.is_file() {
            return Err(Error::Config(format!("{} does not exist", p.display())));
        }
    }
    let topics = load_topics(&args.collection)?;
    let mode = match args.mode {
        ModeArg::Greedy => StopMode::Greedy,
        ModeArg::Sample => StopMode::Sample,
    };
    let mut results = Vec::new();
    for path in &args.checkpoints {
        let ckpt = Checkpoint::load(path)?;
        if let Some(b) = args.batches.filter(|&b| b != ckpt.batches) {
            return Err(Error::Config(format!(
                "--batches {b} does not match checkpoint B={}",
                ckpt.batches
            )));
        }
        let policy = ckpt.policy()?;
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        for topic in &topics {
            let bt = batch_topic(topic.clone(), ckpt.batches)?;
            results.push(crate::ppo::infer_stop(
                &policy,
                &bt,
                ckpt.obs_mode,
                ckpt.target_recall,
                mode,
                &mut rng,
            )?);
        }
    }
    write(&args.out, &render_results(&results)?)?;
    println!("wrote {} stop decisions to {}", results.len(), args.out.display());
    Ok(())
}

pub fn cmd_baseline(args: &BaselineArgs) -> Result<()> {
    for &t in &args.targets {
        crate::corpus::check_target(t)?;
    }
    let topics = load_topics(&args.collection)?;
    let knee = KneeConfig::default();
    let mut results = Vec::new();
    for &target in &args.targets {
        for topic in &topics {
            let r = match args.method {
                BaselineMethod::Oracle => oracle_stop(topic, target)?,
                BaselineMethod::Budget => budget_stop(topic, args.fraction, target)?,
                BaselineMethod::Knee => knee_stop(&batch_topic(topic.clone(), args.batches)?, &knee, target),
            };
            results.push(r);
        }
    }
    write(&args.out, &render_results(&results)?)?;
    println!("wrote {} stop decisions to {}", results.len(), args.out.display());
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    if args.results.is_empty() {
        return Err(Error::Usage("at least one --results file is required".into()));
    }
    for &t in &args.targets {
        crate::corpus::check_target(t)?;
    }
    let topics = load_topics(&args.collection)?;
    let mut results = Vec::new();
    for path in &args.results {
        let text = read(path)?;
        results.extend(read_results(&text, &path.display().to_string(), &args.targets)?);
    }
    let report = aggregate(&results, &topics)?;
    write(&args.out.join("topic_report.csv"), &render_topic_report(&report)?)?;
    write(&args.out.join("aggregate.csv"), &render_aggregate(&report)?)?;
    write(&args.out.join("report_notes.txt"), &format!("{EXCESS_NOTE}\n"))?;
    for s in &report.summaries {
        println!(
            "{:<14} target {:<4} recall {:.3} cost {:.3} excess {:+.3}{}",
            s.method,
            s.target,
            s.mean_recall,
            s.mean_cost,
            s.mean_excess,
            if s.pareto { "  [pareto]" } else { "" }
        );
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Stop(a) => cmd_stop(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train_args(extra: &[&str]) -> TrainArgs {
        let mut argv = vec!["rlstop", "train", "--run", "r", "--qrels", "q", "--out", "o"];
        argv.extend_from_slice(extra);
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Train(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults_follow_the_method() {
        let s = train_args(&["--target", "0.9"]).resolve().unwrap();
        assert_eq!(s.batches, 100);
        assert_eq!(s.hyper, Hyperparams::default());
        assert_eq!(s.obs_mode, ObsMode::Ratio);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "total_timesteps = 5000\nlearning_rate = 0.001\nbatches = 50\ntargets = [0.8, 1.0]\n").unwrap();
        let c = cfg.to_str().unwrap();
        let s = train_args(&["--config", c, "--timesteps", "800"]).resolve().unwrap();
        assert_eq!(s.hyper.total_timesteps, 800);
        assert_eq!(s.hyper.learning_rate, 0.001);
        assert_eq!(s.batches, 50);
        assert_eq!(s.targets, vec![0.8, 1.0]);

        std::fs::write(&cfg, "bogus = 1\n").unwrap();
        assert!(matches!(train_args(&["--config", c, "--target", "0.9"]).resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn missing_target_and_bad_values_are_usage_errors() {
        assert_eq!(train_args(&[]).resolve().unwrap_err().exit_code(), 2);
        assert_eq!(train_args(&["--target", "1.2"]).resolve().unwrap_err().exit_code(), 2);
        assert_eq!(
            train_args(&["--target", "0.9", "--clip-range", "2"]).resolve().unwrap_err().exit_code(),
            2
        );
    }

    #[test]
    fn checkpoint_names_are_per_target() {
        assert_eq!(checkpoint_name(0.9), "rlstop_t0.90.json");
        assert_ne!(checkpoint_name(0.8), checkpoint_name(1.0));
    }
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use awe_core::abx::{abx_error_rate, write_triplets};
use awe_core::caernn::{pretrain_autoencoder, read_checkpoint, train_cae, write_checkpoint, Embedding, ModelParams};
use awe_core::corpus::{synth_corpus, write_synthetic, BilingualPreset, Ratio, SynthSpec};
use awe_core::experiment::{
    build_training_set, prepare_tasks, run_experiment, run_probe, sample_task, write_embeddings, write_report, Corpora, CorpusSource,
    ExperimentConfig,
};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "awe", version, about = "Acoustic word embedding experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Restrict to one seed (replaces the config's seed list).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for `run`.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Featurize manifest corpora while loading.
    #[arg(long, global = true)]
    eager_features: bool,
    /// Only pair tokens from different speakers.
    #[arg(long, global = true)]
    cross_speaker_only: bool,
    /// Require X's speaker to differ from A's and B's.
    #[arg(long, global = true)]
    distinct_speakers: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus (manifest + AWEF features).
    Synth {
        /// Synthetic corpus spec; without it the four corpora of the
        /// built-in two-language preset are written.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Seed of the built-in preset lexicons.
        #[arg(long, default_value_t = 7)]
        preset_seed: u64,
    },
    /// Load and match corpora, build every cell's training set and sample the ABX tasks.
    Prepare,
    /// Autoencoder pretraining for one cell.
    Pretrain {
        #[arg(long)]
        ratio: Ratio,
    },
    /// Correspondence training for one cell, starting from its pretrained model.
    Train {
        #[arg(long)]
        ratio: Ratio,
    },
    /// Embed every token of a corpus into an AWEE file.
    Embed {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: String,
    },
    /// Score one ABX task with a model.
    Abx {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        task: String,
    },
    /// Train the language-identification probe on a model's embeddings.
    Probe {
        #[arg(long)]
        model: PathBuf,
    },
    /// Rebuild the report CSVs from completed cells.
    Report,
    /// Run or resume the whole ratio x seed sweep, then report.
    Run,
}

impl Global {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let path = self.config.as_ref().context("--config is required for this command")?;
        let (mut cfg, base) = ExperimentConfig::from_file(path)?;
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        cfg.cross_speaker_only |= self.cross_speaker_only;
        cfg.distinct_speakers |= self.distinct_speakers;
        if self.eager_features {
            for src in cfg.corpora.values_mut() {
                if let CorpusSource::Manifest { eager_features, .. } = src {
                    *eager_features = true;
                }
            }
        }
        Ok((cfg, base))
    }

    fn single_seed(&self, cfg: &ExperimentConfig) -> Result<u64> {
        match (self.seed, cfg.seeds.as_slice()) {
            (Some(s), _) => Ok(s),
            (None, [s]) => Ok(*s),
            _ => bail!("the config lists several seeds; pick one with --seed"),
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn synth(spec: Option<&Path>, preset_seed: u64, seed: u64, out: &Path) -> Result<()> {
    let specs: Vec<(String, SynthSpec)> = match spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            vec![(String::new(), serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)]
        }
        None => {
            let p = BilingualPreset::new(preset_seed);
            vec![
                ("train_a".into(), p.train_a),
                ("train_b".into(), p.train_b),
                ("test_a".into(), p.test_a),
                ("test_b".into(), p.test_b),
            ]
        }
    };
    for (i, (name, spec)) in specs.iter().enumerate() {
        let corpus = synth_corpus(spec, seed + i as u64)?;
        let manifest = write_synthetic(&corpus, &out.join(name))?;
        println!(
            "{}: {} tokens, {} speakers, {} -> {}",
            if name.is_empty() { corpus.language() } else { name },
            corpus.len(),
            corpus.speakers().len(),
            corpus.total_duration_hhmm(),
            manifest.display()
        );
    }
    Ok(())
}

fn prepare(cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<()> {
    let corpora = Corpora::load(cfg, base)?;
    let mut lines = vec!["corpus,language,tokens,speakers,duration".to_string()];
    for (name, c) in &corpora.by_name {
        lines.push(format!("{name},{},{},{},{}", c.language(), c.len(), c.speakers().len(), c.total_duration_hhmm()));
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("corpora.csv"), lines.join("\n") + "\n")?;
    for ratio in &cfg.ratios {
        for &seed in &cfg.seeds {
            let ts = build_training_set(cfg, &corpora, *ratio, seed)?;
            let tokens: Vec<&str> = ts.pretrain_tokens.iter().map(|t| t.token_id.as_str()).collect();
            let pairs: Vec<[usize; 2]> = ts.pairs.iter().map(|p| [p.input, p.target]).collect();
            let name = awe_core::experiment::cell_name(*ratio, seed);
            write_json(&out.join("training_sets").join(format!("{name}.json")), &json!({ "ratio": ratio, "seed": seed, "tokens": tokens, "pairs": pairs }))?;
        }
    }
    let (sets, _) = prepare_tasks(cfg, &corpora, out)?;
    for (id, set) in &sets {
        println!("task {id}: {} triplets", set.triplets.len());
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<ModelParams> {
    read_checkpoint(path).with_context(|| format!("reading model {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match &cli.command {
        Command::Synth { spec, preset_seed } => synth(spec.as_deref(), *preset_seed, g.seed.unwrap_or(0), &g.out)?,
        Command::Prepare => {
            let (cfg, base) = g.load()?;
            prepare(&cfg, &base, &g.out)?;
        }
        Command::Pretrain { ratio } => {
            let (cfg, base) = g.load()?;
            let seed = g.single_seed(&cfg)?;
            let corpora = Corpora::load(&cfg, &base)?;
            let ts = build_training_set(&cfg, &corpora, *ratio, seed)?;
            let (p, log) = pretrain_autoencoder(&ts, cfg.architecture, &cfg.train_config(seed))?;
            fs::create_dir_all(&g.out)?;
            write_checkpoint(&g.out.join("pretrain.awem"), &p)?;
            write_json(&g.out.join("pretrain_log.json"), &serde_json::to_value(&log)?)?;
            println!("pretrained {} parameters, final loss {:.4}", p.num_params(), log.epochs.last().map_or(f64::NAN, |e| e.mean_loss));
        }
        Command::Train { ratio } => {
            let (cfg, base) = g.load()?;
            let seed = g.single_seed(&cfg)?;
            let corpora = Corpora::load(&cfg, &base)?;
            let ts = build_training_set(&cfg, &corpora, *ratio, seed)?;
            let start = load_model(&g.out.join("pretrain.awem")).context("run `awe pretrain` first")?;
            let (m, log) = train_cae(start, &ts, &cfg.train_config(seed))?;
            write_checkpoint(&g.out.join("model.awem"), &m)?;
            write_json(&g.out.join("train_log.json"), &serde_json::to_value(&log)?)?;
            println!("trained on {} pairs, final loss {:.4}", ts.pairs.len(), log.epochs.last().map_or(f64::NAN, |e| e.mean_loss));
        }
        Command::Embed { model, corpus } => {
            let (cfg, base) = g.load()?;
            let m = load_model(model)?;
            let corpora = Corpora::load(&cfg, &base)?;
            let c = corpora.get(corpus)?;
            let mut ids = Vec::with_capacity(c.len());
            let mut embs: Vec<Embedding> = Vec::with_capacity(c.len());
            for t in c.tokens() {
                ids.push(t.token_id.clone());
                embs.push(m.encode(t.features()?)?);
            }
            let path = g.out.join(format!("{corpus}.awee"));
            fs::create_dir_all(&g.out)?;
            write_embeddings(&path, &ids, &embs)?;
            println!("{} embeddings of dimension {} -> {}", ids.len(), m.architecture().embedding_dim, path.display());
        }
        Command::Abx { model, task } => {
            let (cfg, base) = g.load()?;
            let m = load_model(model)?;
            let corpora = Corpora::load(&cfg, &base)?;
            let spec = cfg.task(task)?;
            let (set, notice) = sample_task(&cfg, &corpora, spec)?;
            if let Some(n) = notice {
                log::warn!("{n}");
            }
            fs::create_dir_all(&g.out)?;
            write_triplets(&g.out.join(format!("{task}.jsonl")), &set.triplets)?;
            let r = abx_error_rate(&set, &m)?;
            println!("{}", r.to_json(task));
        }
        Command::Probe { model } => {
            let (cfg, base) = g.load()?;
            let spec = cfg.probe.as_ref().context("the config has no `probe` section")?;
            let m = load_model(model)?;
            let corpora = Corpora::load(&cfg, &base)?;
            let r = run_probe(spec, &corpora, &m, g.single_seed(&cfg)?)?;
            println!("{}", serde_json::to_string(&r)?);
        }
        Command::Report => {
            let (cfg, _) = g.load()?;
            let r = write_report(&cfg, &g.out)?;
            for f in &r.files {
                println!("{}", f.display());
            }
        }
        Command::Run => {
            let (cfg, base) = g.load()?;
            let s = run_experiment(&cfg, &base, &g.out, g.jobs.max(1))?;
            let mut by_status: BTreeMap<&str, usize> = BTreeMap::new();
            for c in &s.cells {
                let status = match (&c.error, c.computed.is_empty()) {
                    (Some(e), _) => {
                        eprintln!("cell {} failed: {e}", c.dir.display());
                        "failed"
                    }
                    (None, true) => "reused",
                    (None, false) => "computed",
                };
                *by_status.entry(status).or_default() += 1;
            }
            println!("cells: {by_status:?}");
            if let Some(r) = &s.report {
                println!("report: {}", r.dir.display());
            }
            if s.failed() > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{Corpora, ExperimentConfig, ProbeSpec, TaskKind, TaskSpec};
use crate::abx::{
    abx_error_rate, read_triplets, sample_edit_distance_triplets, sample_minimal_pair_triplets, sample_phone_triplets, write_triplets,
    AbxResult, Embedder, SamplerOptions, TripletSet,
};
use crate::caernn::{pretrain_autoencoder, read_checkpoint, train_cae, write_checkpoint, ModelParams};
use crate::corpus::{fnv1a, mix_bilingual, Ratio, TrainingSet};
use crate::error::{Error, Result};
use crate::probes::{train_language_probe, LabeledEmbeddingSet, ProbeResult};
use crate::rng::seeded_rng;

/// The training set of one (ratio, seed) cell.
pub fn build_training_set(cfg: &ExperimentConfig, corpora: &Corpora, ratio: Ratio, seed: u64) -> Result<TrainingSet> {
    let (a, b) = corpora.language_pair();
    let ts = mix_bilingual(a, b, ratio, cfg.budgets, seed, cfg.cross_speaker_only)?;
    ts.validate()?;
    Ok(ts)
}

/// Draw a task's triplets. The second value is a shortfall notice.
pub fn sample_task(cfg: &ExperimentConfig, corpora: &Corpora, task: &TaskSpec) -> Result<(TripletSet, Option<String>)> {
    let c = corpora.get(&task.corpus)?;
    let opts = SamplerOptions { distinct_speakers: cfg.distinct_speakers };
    Ok(match &task.task {
        TaskKind::Phone { contrast } => (sample_phone_triplets(c, (&contrast[0], &contrast[1]), task.n, task.seed, opts)?, None),
        TaskKind::MinimalPair { words } => (sample_minimal_pair_triplets(c, (&words[0], &words[1]), task.n, task.seed, opts)?, None),
        TaskKind::EditDistance { distance } => {
            let s = sample_edit_distance_triplets(c, *distance, task.n, task.seed, opts)?;
            (s.set, s.notice)
        }
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Triplets for every task, sampled once into `out/tasks/<id>.jsonl` and
/// reused while the task's definition is unchanged. Returns the sets and
/// the ids that were (re)sampled.
pub fn prepare_tasks(cfg: &ExperimentConfig, corpora: &Corpora, out: &Path) -> Result<(BTreeMap<String, TripletSet>, Vec<String>)> {
    let dir = out.join("tasks");
    create_dir(&dir)?;
    let mut sets = BTreeMap::new();
    let mut fresh = Vec::new();
    for task in &cfg.tasks {
        let fingerprint = json!({
            "task": task,
            "source": cfg.corpora[&task.corpus],
            "match_corpora": cfg.match_corpora,
            "languages": cfg.languages,
            "distinct_speakers": cfg.distinct_speakers,
        });
        let spec_path = dir.join(format!("{}.spec.json", task.id));
        let triplet_path = dir.join(format!("{}.jsonl", task.id));
        let reusable = triplet_path.exists() && read_json::<serde_json::Value>(&spec_path).ok().as_ref() == Some(&fingerprint);
        let set = if reusable {
            TripletSet::resolve(read_triplets(&triplet_path)?, &[corpora.get(&task.corpus)?])?
        } else {
            let (set, notice) = sample_task(cfg, corpora, task)?;
            if let Some(n) = notice {
                log::warn!("task {}: {n}", task.id);
            }
            write_triplets(&triplet_path, &set.triplets)?;
            write_json(&spec_path, &fingerprint)?;
            fresh.push(task.id.clone());
            set
        };
        sets.insert(task.id.clone(), set);
    }
    Ok((sets, fresh))
}

/// Embed the probe corpora with `model` and fit the language probe.
pub fn run_probe(spec: &ProbeSpec, corpora: &Corpora, model: &dyn Embedder, cell_seed: u64) -> Result<ProbeResult> {
    use rand::seq::SliceRandom;
    let mut embeddings = Vec::new();
    let mut labels = Vec::new();
    for name in &spec.corpora {
        let c = corpora.get(name)?;
        let mut idx: Vec<usize> = (0..c.len()).collect();
        idx.shuffle(&mut seeded_rng(spec.seed ^ fnv1a(name), 0));
        idx.truncate(spec.per_language.unwrap_or(idx.len()));
        idx.sort_unstable();
        for i in idx {
            let seg = crate::abx::Segment::from_token(&c.tokens()[i])?;
            embeddings.push(model.embed(&seg)?.0);
            labels.push(c.language().to_string());
        }
    }
    let set = LabeledEmbeddingSet { embeddings, labels, split_seed: spec.seed ^ cell_seed.rotate_left(17) };
    train_language_probe(&set, &spec.config)
}

/// Directory name of a cell, e.g. `r90-10_s3`.
pub fn cell_name(ratio: Ratio, seed: u64) -> String {
    format!("r{}-{}_s{seed}", ratio.share_a(), ratio.share_b())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub ratio: Ratio,
    pub seed: u64,
    pub dir: PathBuf,
    /// Stages computed in this run, in order.
    pub computed: Vec<String>,
    /// Stages whose results were already on disk.
    pub reused: Vec<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub cells: Vec<CellReport>,
    pub resampled_tasks: Vec<String>,
    pub report: Option<super::report::ReportFiles>,
}

impl RunSummary {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

struct CellContext<'a> {
    cfg: &'a ExperimentConfig,
    corpora: &'a Corpora,
    tasks: &'a BTreeMap<String, TripletSet>,
    out: &'a Path,
}

fn cell_fingerprint(cfg: &ExperimentConfig, ratio: Ratio, seed: u64) -> serde_json::Value {
    json!({
        "ratio": ratio,
        "seed": seed,
        "corpora": cfg.corpora,
        "languages": cfg.languages,
        "match_corpora": cfg.match_corpora,
        "budgets": cfg.budgets,
        "architecture": cfg.architecture,
        "train": cfg.train_config(seed),
        "cross_speaker_only": cfg.cross_speaker_only,
    })
}

pub const TASK_PREFIX: &str = "task_";

fn run_cell(ctx: &CellContext, ratio: Ratio, seed: u64, report: &mut CellReport) -> Result<()> {
    let cfg = ctx.cfg;
    let dir = &report.dir;
    create_dir(dir)?;
    let fingerprint = cell_fingerprint(cfg, ratio, seed);
    let fp_path = dir.join("cell.json");
    if read_json::<serde_json::Value>(&fp_path).ok().as_ref() != Some(&fingerprint) {
        // New cell or changed definition: nothing on disk can be trusted.
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let p = entry.map_err(|e| Error::io(dir, e))?.path();
            if p.is_file() {
                std::fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
            }
        }
        write_json(&fp_path, &fingerprint)?;
    }
    let mut ts: Option<TrainingSet> = None;
    let mut training_set = || -> Result<TrainingSet> {
        if ts.is_none() {
            ts = Some(build_training_set(cfg, ctx.corpora, ratio, seed)?);
        }
        Ok(ts.clone().expect("built"))
    };
    let train_cfg = cfg.train_config(seed);

    let model_path = dir.join("model.awem");
    let model: ModelParams = if model_path.exists() {
        report.reused.push("train".into());
        read_checkpoint(&model_path)?
    } else {
        let pre_path = dir.join("pretrain.awem");
        let pretrained = if pre_path.exists() {
            report.reused.push("pretrain".into());
            read_checkpoint(&pre_path)?
        } else {
            let (p, log) = pretrain_autoencoder(&training_set()?, cfg.architecture, &train_cfg)?;
            write_json(&dir.join("pretrain_log.json"), &log)?;
            write_checkpoint(&pre_path, &p)?;
            report.computed.push("pretrain".into());
            p
        };
        let (m, log) = train_cae(pretrained, &training_set()?, &train_cfg)?;
        write_json(&dir.join("train_log.json"), &log)?;
        write_checkpoint(&model_path, &m)?;
        report.computed.push("train".into());
        m
    };

    for task in &cfg.tasks {
        let path = dir.join(format!("{TASK_PREFIX}{}.json", task.id));
        if path.exists() {
            report.reused.push(format!("task:{}", task.id));
            continue;
        }
        let r = abx_error_rate(&ctx.tasks[&task.id], &model)?;
        log::info!("{} {}: {:.2}% error over {} triplets", cell_name(ratio, seed), task.id, r.error_rate, r.n_trials);
        write_json(&path, &r.to_json(&task.id))?;
        report.computed.push(format!("task:{}", task.id));
    }

    if let Some(spec) = &cfg.probe {
        let path = dir.join("probe.json");
        let stored = read_json::<serde_json::Value>(&path).ok();
        if stored.as_ref().and_then(|v| v.get("spec")) == Some(&serde_json::to_value(spec)?) {
            report.reused.push("probe".into());
        } else {
            let r = run_probe(spec, ctx.corpora, &model, seed)?;
            log::info!("{} probe: {:.2}% accuracy", cell_name(ratio, seed), r.accuracy);
            write_json(&path, &json!({ "spec": spec, "result": r }))?;
            report.computed.push("probe".into());
        }
    }
    Ok(())
}

/// Run every (ratio, seed) cell on up to `jobs` threads, then assemble the
/// report from whatever cells completed. Stages already on disk are reused.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path, out: &Path, jobs: usize) -> Result<RunSummary> {
    cfg.validate()?;
    create_dir(out)?;
    let corpora = Corpora::load(cfg, base)?;
    let (tasks, resampled) = prepare_tasks(cfg, &corpora, out)?;
    for id in &resampled {
        // Results computed on previous triplets are stale.
        for ratio in &cfg.ratios {
            for &seed in &cfg.seeds {
                let p = out.join("cells").join(cell_name(*ratio, seed)).join(format!("{TASK_PREFIX}{id}.json"));
                if p.exists() {
                    std::fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
                }
            }
        }
    }
    let cells: Vec<(Ratio, u64)> = cfg.ratios.iter().flat_map(|&r| cfg.seeds.iter().map(move |&s| (r, s))).collect();
    let ctx = CellContext { cfg, corpora: &corpora, tasks: &tasks, out };
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<CellReport>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, cells.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(ratio, seed)) = cells.get(i) else { break };
                let mut report = CellReport {
                    ratio,
                    seed,
                    dir: ctx.out.join("cells").join(cell_name(ratio, seed)),
                    computed: vec![],
                    reused: vec![],
                    error: None,
                };
                let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run_cell(&ctx, ratio, seed, &mut report)));
                report.error = match outcome {
                    Ok(Ok(())) => None,
                    Ok(Err(e)) => Some(e.to_string()),
                    Err(_) => Some("cell panicked".into()),
                };
                if let Some(e) = &report.error {
                    log::error!("cell {} failed: {e}", cell_name(ratio, seed));
                }
                results.lock().expect("poisoned")[i] = Some(report);
            });
        }
    });
    let cells: Vec<CellReport> = results.into_inner().expect("poisoned").into_iter().map(|c| c.expect("every cell ran")).collect();
    let report = super::report::write_report(cfg, out)?;
    Ok(RunSummary { cells, resampled_tasks: resampled, report: Some(report) })
}

/// Score one model on stored triplets (used by the `abx` subcommand).
pub fn evaluate_task(set: &TripletSet, model: &dyn Embedder) -> Result<AbxResult> {
    abx_error_rate(set, model)
}

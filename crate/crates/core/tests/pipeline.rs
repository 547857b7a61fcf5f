use std::path::Path;

use awe_core::abx::{abx_error_rate, sample_phone_triplets, SamplerOptions};
use awe_core::caernn::{checkpoint_bytes, pretrain_autoencoder, train_cae, Architecture, TrainConfig};
use awe_core::corpus::{load_manifest, monolingual, synth_corpus, write_synthetic, BilingualPreset, Budgets, LoadOptions};
use awe_core::experiment::{run_experiment, Corpora, ExperimentConfig};

const CONFIG: &str = r#"{
  "name": "pipeline",
  "corpora": {
    "train_a": {"preset": "train_a", "preset_seed": 4, "seed": 1},
    "train_b": {"preset": "train_b", "preset_seed": 4, "seed": 2},
    "test_a": {"preset": "test_a", "preset_seed": 4, "seed": 3},
    "test_b": {"preset": "test_b", "preset_seed": 4, "seed": 4}
  },
  "languages": ["train_a", "train_b"],
  "ratios": [[0, 100], [10, 90], [25, 75], [50, 50], [100, 0]],
  "budgets": {"tokens": 120, "pairs": 200},
  "architecture": {"input_dim": 13, "hidden": 8, "layers": 1, "embedding_dim": 4},
  "train": {"pretrain_epochs": 1, "train_epochs": 1, "learning_rate": 0.003, "batch_size": 16},
  "tasks": [
    {"id": "phone_a", "corpus": "test_a", "n": 200, "seed": 1, "task": {"kind": "phone", "contrast": ["A:c0", "A:c1"]}},
    {"id": "ed1", "corpus": "test_a", "n": 200, "seed": 2, "task": {"kind": "edit_distance", "distance": 1}}
  ],
  "seeds": [1],
  "n_perm": 1000
}"#;

fn config() -> ExperimentConfig {
    serde_json::from_str(CONFIG).unwrap()
}

#[test]
fn sweep_report_has_one_row_per_cell_and_task() {
    let out = tempfile::tempdir().unwrap();
    let s = run_experiment(&config(), Path::new("."), out.path(), 2).unwrap();
    assert_eq!(s.failed(), 0);
    let report = s.report.unwrap();
    assert_eq!(report.rows.len(), 10);
    let csv = std::fs::read_to_string(report.dir.join("rows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(report.rows.iter().all(|r| (0.0..=100.0).contains(&r.error_rate)));
}

#[test]
fn resume_recomputes_only_missing_task() {
    let cfg = config();
    let out = tempfile::tempdir().unwrap();
    run_experiment(&cfg, Path::new("."), out.path(), 1).unwrap();
    let cell = out.path().join("cells").join("r50-50_s1");
    let victim = std::fs::read_dir(&cell)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap() == "task_ed1.json")
        .expect("task result on disk");
    std::fs::remove_file(&victim).unwrap();

    let s = run_experiment(&cfg, Path::new("."), out.path(), 1).unwrap();
    for c in &s.cells {
        if c.dir == cell {
            assert_eq!(c.computed, vec!["task:ed1".to_string()]);
        } else {
            assert!(c.computed.is_empty(), "{:?}", c.computed);
        }
    }
}

#[test]
fn full_exposure_cell_equals_monolingual_run() {
    let cfg = config();
    let out = tempfile::tempdir().unwrap();
    let mut single = cfg.clone();
    single.ratios.retain(|r| r.share_a() == 100);
    single.tasks.clear();
    run_experiment(&single, Path::new("."), out.path(), 1).unwrap();
    let from_sweep = std::fs::read(out.path().join("cells").join("r100-0_s1").join("model.awem")).unwrap();

    let corpora = Corpora::load(&cfg, Path::new(".")).unwrap();
    let ts = monolingual(corpora.get("train_a").unwrap(), cfg.budgets, 1, false).unwrap();
    let tc = cfg.train_config(1);
    let (p, _) = pretrain_autoencoder(&ts, cfg.architecture, &tc).unwrap();
    let (m, _) = train_cae(p, &ts, &tc).unwrap();
    assert_eq!(checkpoint_bytes(&m), from_sweep);
}

#[test]
fn manifest_to_abx() {
    let dir = tempfile::tempdir().unwrap();
    let preset = BilingualPreset::new(9);
    let manifest = write_synthetic(&synth_corpus(&preset.train_a, 5).unwrap(), dir.path()).unwrap();
    let corpus = load_manifest(&manifest, LoadOptions::default()).unwrap();
    assert_eq!(corpus.len(), synth_corpus(&preset.train_a, 5).unwrap().len());

    let ts = monolingual(&corpus, Budgets { tokens: 100, pairs: 150 }, 3, true).unwrap();
    let arch = Architecture { input_dim: 13, hidden: 8, layers: 1, embedding_dim: 4 };
    let tc = TrainConfig { pretrain_epochs: 1, train_epochs: 1, batch_size: 16, ..TrainConfig::default() };
    let (p, _) = pretrain_autoencoder(&ts, arch, &tc).unwrap();
    let (m, log) = train_cae(p, &ts, &tc).unwrap();
    assert_eq!(log.epochs.len(), 1);

    let set = sample_phone_triplets(&corpus, ("A:c0", "A:c1"), 100, 1, SamplerOptions::default()).unwrap();
    let r = abx_error_rate(&set, &m).unwrap();
    assert_eq!(r.n_trials, 100);
    assert!((0.0..=100.0).contains(&r.error_rate));
}

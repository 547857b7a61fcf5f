use std::path::Path;
use std::process::{Command, Output};

fn awe(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_awe")).current_dir(dir).args(args).env("RUST_LOG", "warn").output().unwrap();
    assert!(out.status.success(), "awe {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

const CONFIG: &str = r#"{
  "name": "cli",
  "corpora": {
    "train_a": {"manifest": "data/train_a/manifest.jsonl"},
    "train_b": {"manifest": "data/train_b/manifest.jsonl"},
    "test_a": {"manifest": "data/test_a/manifest.jsonl"},
    "test_b": {"manifest": "data/test_b/manifest.jsonl"}
  },
  "languages": ["train_a", "train_b"],
  "match_corpora": true,
  "ratios": [[100, 0], [50, 50]],
  "budgets": {"tokens": 100, "pairs": 150},
  "architecture": {"input_dim": 13, "hidden": 8, "layers": 1, "embedding_dim": 4},
  "train": {"pretrain_epochs": 1, "train_epochs": 1, "learning_rate": 0.003, "batch_size": 16},
  "tasks": [
    {"id": "phone_a", "corpus": "test_a", "n": 100, "seed": 1, "task": {"kind": "phone", "contrast": ["A:c0", "A:c1"]}},
    {"id": "mp_a", "corpus": "test_a", "n": 50, "seed": 2, "task": {"kind": "minimal_pair", "words": ["A0", "A0mp"]}}
  ],
  "probe": {"corpora": ["test_a", "test_b"], "per_language": 60, "seed": 5},
  "seeds": [1]
}"#;

#[test]
fn every_subcommand_runs_on_manifest_corpora() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = awe(d, &["synth", "--out", "data", "--preset-seed", "3"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 4);
    std::fs::write(d.join("exp.json"), CONFIG).unwrap();

    awe(d, &["prepare", "--config", "exp.json", "--out", "prep"]);
    assert!(d.join("prep/tasks/phone_a.jsonl").is_file());
    assert!(d.join("prep/training_sets/r50-50_s1.json").is_file());

    awe(d, &["pretrain", "--config", "exp.json", "--ratio", "50:50", "--out", "cell"]);
    awe(d, &["train", "--config", "exp.json", "--ratio", "50:50", "--out", "cell"]);
    awe(d, &["embed", "--config", "exp.json", "--model", "cell/model.awem", "--corpus", "test_a", "--out", "emb"]);
    let (ids, embs) = awe_core::experiment::read_embeddings(&d.join("emb/test_a.awee")).unwrap();
    assert_eq!(ids.len(), embs.len());
    assert!(embs.iter().all(|e| e.dim() == 4));

    let abx = awe(d, &["abx", "--config", "exp.json", "--model", "cell/model.awem", "--task", "phone_a", "--out", "abx"]);
    let v: serde_json::Value = serde_json::from_slice(&abx.stdout).unwrap();
    assert_eq!(v["n_trials"], 100);
    awe(d, &["probe", "--config", "exp.json", "--model", "cell/model.awem"]);

    awe(d, &["run", "--config", "exp.json", "--out", "sweep", "--jobs", "2"]);
    let rows = std::fs::read_to_string(d.join("sweep/report/rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 2);
    awe(d, &["report", "--config", "exp.json", "--out", "sweep"]);
}

#[test]
fn missing_config_is_reported() {
    let out = Command::new(env!("CARGO_BIN_EXE_awe")).args(["run"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

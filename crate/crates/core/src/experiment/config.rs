use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::caernn::{Architecture, TrainConfig};
use crate::corpus::{load_manifest, match_subsets, synth_corpus, BilingualPreset, Budgets, Corpus, LoadOptions, Ratio, SynthSpec};
use crate::error::{Error, Result};
use crate::probes::ProbeConfig;

/// Where a named corpus comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CorpusSource {
    Manifest {
        manifest: PathBuf,
        #[serde(default)]
        eager_features: bool,
    },
    Synthetic {
        synthetic: SynthSpec,
        seed: u64,
    },
    /// One of the four corpora of [`BilingualPreset`].
    Preset {
        preset: PresetPart,
        preset_seed: u64,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetPart {
    TrainA,
    TrainB,
    TestA,
    TestB,
}

impl PresetPart {
    pub fn spec(self, preset: &BilingualPreset) -> &SynthSpec {
        match self {
            PresetPart::TrainA => &preset.train_a,
            PresetPart::TrainB => &preset.train_b,
            PresetPart::TestA => &preset.test_a,
            PresetPart::TestB => &preset.test_b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskKind {
    Phone { contrast: [String; 2] },
    MinimalPair { words: [String; 2] },
    EditDistance { distance: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: String,
    /// Name of the corpus the triplets are drawn from.
    pub corpus: String,
    /// Triplets to sample (an upper bound for edit-distance tasks).
    pub n: usize,
    pub seed: u64,
    /// Figure the task's rows are aggregated into; defaults to the id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    pub task: TaskKind,
}

impl TaskSpec {
    pub fn figure(&self) -> &str {
        self.figure.as_deref().unwrap_or(&self.id)
    }

    pub fn edit_distance(&self) -> Option<usize> {
        match self.task {
            TaskKind::EditDistance { distance } => Some(distance),
            _ => None,
        }
    }

    /// x-axis value in figure tables: the edit distance, else the task id.
    pub fn x(&self) -> String {
        self.edit_distance().map_or_else(|| self.id.clone(), |d| d.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// Corpora whose tokens are embedded; each contributes one label (its
    /// language tag).
    pub corpora: [String; 2],
    /// Tokens per language, drawn in a seeded order (all when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_language: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub config: ProbeConfig,
}

fn default_perm() -> usize {
    10_000
}

/// A ratio x seed sweep. Relative paths resolve against the config file's
/// directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub corpora: BTreeMap<String, CorpusSource>,
    /// Training corpora for languages A and B.
    pub languages: [String; 2],
    /// Match the two training corpora on speakers, gender and duration.
    #[serde(default)]
    pub match_corpora: bool,
    pub ratios: Vec<Ratio>,
    pub budgets: Budgets,
    #[serde(default)]
    pub architecture: Architecture,
    /// Training schedule; the seed is replaced by each cell's seed.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub cross_speaker_only: bool,
    #[serde(default)]
    pub distinct_speakers: bool,
    /// Permutations per comparison in the report.
    #[serde(default = "default_perm")]
    pub n_perm: usize,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return err("`seeds` must not be empty".into());
        }
        if self.ratios.is_empty() {
            return err("`ratios` must not be empty".into());
        }
        for l in &self.languages {
            if !self.corpora.contains_key(l) {
                return err(format!("language corpus `{l}` is not defined under `corpora`"));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for t in &self.tasks {
            if !self.corpora.contains_key(&t.corpus) {
                return err(format!("task `{}` uses undefined corpus `{}`", t.id, t.corpus));
            }
            if t.id.is_empty() || !t.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return err(format!("task id `{}` must be non-empty and use only [A-Za-z0-9_-]", t.id));
            }
            if !ids.insert(&t.id) {
                return err(format!("duplicate task id `{}`", t.id));
            }
            if t.n == 0 {
                return err(format!("task `{}` requests zero triplets", t.id));
            }
        }
        if let Some(p) = &self.probe {
            for c in &p.corpora {
                if !self.corpora.contains_key(c) {
                    return err(format!("probe uses undefined corpus `{c}`"));
                }
            }
        }
        if self.n_perm < 1000 {
            return err(format!("n_perm must be at least 1000, got {}", self.n_perm));
        }
        self.architecture.validate()?;
        self.train.validate()
    }

    pub fn task(&self, id: &str) -> Result<&TaskSpec> {
        self.tasks
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::Config(format!("no task with id `{id}`")))
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig { seed, ..self.train.clone() }
    }
}

/// All corpora of a config, loaded once. When matching is enabled the two
/// language corpora are replaced by their matched subsets.
#[derive(Debug)]
pub struct Corpora {
    pub by_name: BTreeMap<String, Corpus>,
    pub languages: [String; 2],
}

impl Corpora {
    pub fn load(cfg: &ExperimentConfig, base: &Path) -> Result<Self> {
        let mut by_name = BTreeMap::new();
        let mut presets: BTreeMap<u64, BilingualPreset> = BTreeMap::new();
        for (name, src) in &cfg.corpora {
            let c = match src {
                CorpusSource::Manifest { manifest, eager_features } => {
                    load_manifest(&base.join(manifest), LoadOptions { eager: *eager_features })?
                }
                CorpusSource::Synthetic { synthetic, seed } => synth_corpus(synthetic, *seed)?,
                CorpusSource::Preset { preset, preset_seed, seed } => {
                    let p = presets.entry(*preset_seed).or_insert_with(|| BilingualPreset::new(*preset_seed));
                    synth_corpus(preset.spec(p), *seed)?
                }
            };
            log::info!("corpus {name}: {} tokens, {} speakers, {}", c.len(), c.speakers().len(), c.total_duration_hhmm());
            by_name.insert(name.clone(), c);
        }
        if cfg.match_corpora {
            let [a, b] = &cfg.languages;
            let (ma, mb) = match_subsets(&by_name[a], &by_name[b])?;
            log::info!("matched {a}/{b}: {} / {}", ma.total_duration_hhmm(), mb.total_duration_hhmm());
            by_name.insert(a.clone(), ma);
            by_name.insert(b.clone(), mb);
        }
        Ok(Self { by_name, languages: cfg.languages.clone() })
    }

    pub fn get(&self, name: &str) -> Result<&Corpus> {
        self.by_name.get(name).ok_or_else(|| Error::Config(format!("unknown corpus `{name}`")))
    }

    pub fn language_pair(&self) -> (&Corpus, &Corpus) {
        (&self.by_name[&self.languages[0]], &self.by_name[&self.languages[1]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "corpora": {
            "a": {"preset": "train_a", "preset_seed": 1, "seed": 2},
            "b": {"manifest": "b/manifest.jsonl"}
        },
        "languages": ["a", "b"],
        "ratios": [[100, 0], [50, 50]],
        "budgets": {"tokens": 10, "pairs": 20},
        "tasks": [{"id": "ed1", "corpus": "a", "n": 5, "seed": 1, "task": {"kind": "edit_distance", "distance": 1}}],
        "seeds": [1]
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.train, TrainConfig::default());
        assert_eq!(cfg.architecture, Architecture::default());
        assert_eq!(cfg.tasks[0].x(), "1");
        assert!(matches!(cfg.corpora["b"], CorpusSource::Manifest { eager_features: false, .. }));
        assert!(matches!(cfg.corpora["a"], CorpusSource::Preset { preset: PresetPart::TrainA, .. }));
    }

    #[test]
    fn validation_errors() {
        let mut cfg: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        let mut cfg: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        cfg.languages[1] = "zz".into();
        assert!(cfg.validate().is_err());
        let bad = MINIMAL.replace("[50, 50]", "[50, 60]");
        assert!(serde_json::from_str::<ExperimentConfig>(&bad).is_err());
        let unknown = MINIMAL.replace("\"seeds\"", "\"sedes\": [], \"seeds\"");
        assert!(serde_json::from_str::<ExperimentConfig>(&unknown).is_err());
    }
}

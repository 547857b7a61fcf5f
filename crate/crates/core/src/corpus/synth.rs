//! Synthetic corpora: each token is a concatenation of per-phone frame runs,
//! every frame being `prototype + speaker offset + noise`. Used as a
//! stand-in for licensed speech corpora in tests and demos.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::token::TokenMeta;
use super::{Corpus, Gender, ManifestRow, WordToken};
use crate::error::{Error, Result};
use crate::frontend::{write_awef, FeatureMatrix, NUM_CEPS};
use crate::rng::{seeded_rng, streams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthWord {
    pub label: String,
    pub phones: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    /// Tokens per speaker; falls back to [`SynthSpec::tokens_per_type`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpeaker {
    pub id: String,
    pub gender: Gender,
    /// Additive offset; drawn from N(0, speaker_offset_scale^2) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub language: String,
    /// Phone symbol -> prototype frame vector.
    pub phones: BTreeMap<String, Vec<f64>>,
    pub words: Vec<SynthWord>,
    pub speakers: Vec<SynthSpeaker>,
    pub tokens_per_type: usize,
    pub noise_scale: f64,
    /// Inclusive range of frames per phone.
    pub frames_per_phone: [usize; 2],
    #[serde(default)]
    pub speaker_offset_scale: f64,
    /// Prepended to token ids; keeps ids of several corpora apart.
    #[serde(default)]
    pub id_prefix: String,
}

impl SynthSpec {
    fn dim(&self) -> Result<usize> {
        let mut dims = self.phones.values().map(Vec::len);
        let d = dims.next().ok_or_else(|| Error::invalid("synthetic spec has no phone prototypes"))?;
        if d == 0 || dims.any(|x| x != d) {
            return Err(Error::invalid("phone prototypes must share one positive dimension"));
        }
        Ok(d)
    }
}

/// Generate a corpus from `spec`. Speakers are visited in order, then words,
/// then token repetitions, so the output order (and every draw) is fixed by
/// the seed.
pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<Corpus> {
    if spec.words.is_empty() {
        return Err(Error::invalid("synthetic spec has an empty word inventory"));
    }
    if spec.speakers.is_empty() {
        return Err(Error::invalid("synthetic spec has no speakers"));
    }
    let [lo, hi] = spec.frames_per_phone;
    if lo == 0 || hi < lo {
        return Err(Error::invalid(format!("bad frames_per_phone range [{lo}, {hi}]")));
    }
    if !(spec.noise_scale >= 0.0 && spec.speaker_offset_scale >= 0.0) {
        return Err(Error::invalid("noise and offset scales must be non-negative"));
    }
    let dim = spec.dim()?;
    for w in &spec.words {
        if w.phones.is_empty() {
            return Err(Error::invalid(format!("word `{}` has no phones", w.label)));
        }
        if let Some(p) = w.phones.iter().find(|p| !spec.phones.contains_key(*p)) {
            return Err(Error::invalid(format!("word `{}` uses unknown phone `{p}`", w.label)));
        }
    }

    let mut rng = seeded_rng(seed, streams::SYNTH);
    let mut tokens = Vec::new();
    for speaker in &spec.speakers {
        let offset = match &speaker.offset {
            Some(o) if o.len() == dim => o.clone(),
            Some(o) => {
                return Err(Error::invalid(format!(
                    "speaker `{}` offset has {} components, expected {dim}",
                    speaker.id,
                    o.len()
                )))
            }
            None => (0..dim)
                .map(|_| spec.speaker_offset_scale * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        };
        for word in &spec.words {
            for k in 0..word.count.unwrap_or(spec.tokens_per_type) {
                let mut data = Vec::new();
                let mut spans = Vec::with_capacity(word.phones.len());
                for phone in &word.phones {
                    let proto = &spec.phones[phone];
                    let n = rng.random_range(lo..=hi);
                    let start = data.len() / dim;
                    for _ in 0..n {
                        for (p, o) in proto.iter().zip(&offset) {
                            let noise: f64 = StandardNormal.sample(&mut rng);
                            data.push(p + o + spec.noise_scale * noise);
                        }
                    }
                    spans.push(start..start + n);
                }
                let meta = TokenMeta {
                    token_id: format!("{}{}_{}_{}", spec.id_prefix, speaker.id, word.label, k),
                    word_type: word.label.clone(),
                    phones: word.phones.clone(),
                    lemma: word.lemma.clone(),
                    speaker_id: speaker.id.clone(),
                    speaker_gender: speaker.gender,
                    language: spec.language.clone(),
                };
                tokens.push(WordToken::new(meta, FeatureMatrix::new(data, dim)?, Some(spans))?);
            }
        }
    }
    Corpus::new(spec.language.clone(), tokens)
}

/// Write one AWEF file per token under `dir/features/` plus
/// `dir/manifest.jsonl`; returns the manifest path.
pub fn write_synthetic(corpus: &Corpus, dir: &Path) -> Result<PathBuf> {
    let feat_dir = dir.join("features");
    fs::create_dir_all(&feat_dir).map_err(|e| Error::io(&feat_dir, e))?;
    let mut rows = Vec::with_capacity(corpus.len());
    for t in corpus.tokens() {
        let rel = PathBuf::from("features").join(format!("{}.awef", t.token_id));
        write_awef(&dir.join(&rel), t.features()?)?;
        rows.push(ManifestRow {
            token_id: t.token_id.clone(),
            word_type: t.word_type.clone(),
            phones: t.phones.clone(),
            lemma: t.lemma.clone(),
            speaker_id: t.speaker_id.clone(),
            speaker_gender: t.speaker_gender,
            language: t.language.clone(),
            audio_path: None,
            feature_path: Some(rel),
            start_ms: 0.0,
            end_ms: t.duration_ms,
            phone_spans_ms: t.phone_spans.as_ref().map(|spans| {
                spans
                    .iter()
                    .map(|s| [s.start as f64 * 10.0 + 7.5, s.end as f64 * 10.0 + 7.5])
                    .collect()
            }),
        });
    }
    let manifest = dir.join("manifest.jsonl");
    super::write_manifest(&manifest, &rows)?;
    Ok(manifest)
}

/// A matched pair of synthetic languages A and B built to exercise every
/// evaluation in this crate.
///
/// Frame space (13 dims) is split into a block both languages use and one
/// private block per language. Shared phones live in the common block only;
/// each language adds private phones that also move along its own block. The
/// phones `A:c0`/`A:c1` (and `B:c0`/`B:c1`) differ *only* along the private
/// block, so discriminating them requires experience with that language.
///
/// Each lexicon has base words plus, per base word, variants at 1-4 phone
/// substitutions (for edit-distance tasks) and a minimal pair on the private
/// contrast. Train and test corpora use disjoint speakers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilingualPreset {
    pub train_a: SynthSpec,
    pub train_b: SynthSpec,
    pub test_a: SynthSpec,
    pub test_b: SynthSpec,
    pub contrast_a: (String, String),
    pub contrast_b: (String, String),
    pub minimal_pair_a: (String, String),
    pub minimal_pair_b: (String, String),
}

const SHARED_DIMS: std::ops::Range<usize> = 0..7;
const PRIVATE_A: std::ops::Range<usize> = 7..10;
const PRIVATE_B: std::ops::Range<usize> = 10..13;

impl BilingualPreset {
    pub fn new(seed: u64) -> Self {
        let mut rng = seeded_rng(seed, streams::SYNTH + 100);
        let uniform = |rng: &mut rand_chacha::ChaCha8Rng, v: &mut [f64], r: std::ops::Range<usize>, s: f64| {
            for d in r {
                v[d] = rng.random_range(-s..s);
            }
        };

        let mut phones = BTreeMap::new();
        for i in 0..8 {
            let mut v = vec![0.0; NUM_CEPS];
            uniform(&mut rng, &mut v, SHARED_DIMS, 2.0);
            phones.insert(format!("s{i}"), v);
        }
        let private = |lang: &str, block: std::ops::Range<usize>, rng: &mut rand_chacha::ChaCha8Rng| {
            let mut out = BTreeMap::new();
            let mut common = vec![0.0; NUM_CEPS];
            uniform(rng, &mut common, SHARED_DIMS, 2.0);
            let dir: Vec<f64> = block.clone().map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (name, sign) in [("c0", 1.0), ("c1", -1.0)] {
                let mut v = common.clone();
                for (d, u) in block.clone().zip(&dir) {
                    v[d] = sign * 1.3 * u / norm;
                }
                out.insert(format!("{lang}:{name}"), v);
            }
            for name in ["p0", "p1"] {
                let mut v = vec![0.0; NUM_CEPS];
                uniform(rng, &mut v, SHARED_DIMS, 2.0);
                uniform(rng, &mut v, block.clone(), 1.5);
                out.insert(format!("{lang}:{name}"), v);
            }
            out
        };
        let priv_a = private("A", PRIVATE_A, &mut rng);
        let priv_b = private("B", PRIVATE_B, &mut rng);

        let lexicon = |lang: &str, private: &BTreeMap<String, Vec<f64>>, rng: &mut rand_chacha::ChaCha8Rng| {
            let inventory: Vec<String> = phones.keys().chain(private.keys()).cloned().collect();
            let (c0, c1) = (format!("{lang}:c0"), format!("{lang}:c1"));
            let mut words = Vec::new();
            let mut push = |label: String, ph: Vec<String>, count: usize| {
                words.push(SynthWord {
                    lemma: Some(label.clone()),
                    label,
                    phones: ph,
                    count: Some(count),
                })
            };
            for k in 0..12 {
                let len = rng.random_range(5..=7);
                let mut base: Vec<String> = (0..len).map(|_| inventory.choose(rng).unwrap().clone()).collect();
                if k < 2 {
                    base[1] = if k == 0 { c0.clone() } else { c1.clone() };
                }
                let frequent = k < 2;
                if k == 0 {
                    let mut mp = base.clone();
                    mp[1] = c1.clone();
                    push(format!("{lang}0mp"), mp, 4);
                }
                for d in 1..=4 {
                    let mut v = base.clone();
                    let mut positions: Vec<usize> = (0..len).collect();
                    positions.shuffle(rng);
                    for &p in &positions[..d] {
                        let alternatives: Vec<&String> = inventory.iter().filter(|x| **x != v[p]).collect();
                        v[p] = (*alternatives.choose(rng).unwrap()).clone();
                    }
                    push(format!("{lang}{k}d{d}"), v, 2);
                }
                push(format!("{lang}{k}"), base, if frequent { 4 } else { 2 });
            }
            words
        };
        let words_a = lexicon("A", &priv_a, &mut rng);
        let words_b = lexicon("B", &priv_b, &mut rng);

        let spec = |lang: &str, private: &BTreeMap<String, Vec<f64>>, words: &[SynthWord], role: &str, n_spk: usize| {
            let mut all = phones.clone();
            all.extend(private.clone());
            SynthSpec {
                language: lang.to_string(),
                phones: all,
                words: words.to_vec(),
                speakers: (0..n_spk)
                    .map(|i| SynthSpeaker {
                        id: format!("{lang}{role}{i}"),
                        gender: if i % 2 == 0 { Gender::F } else { Gender::M },
                        offset: None,
                    })
                    .collect(),
                tokens_per_type: 2,
                noise_scale: 0.6,
                frames_per_phone: [2, 3],
                speaker_offset_scale: 0.4,
                id_prefix: format!("{role}_"),
            }
        };
        Self {
            train_a: spec("A", &priv_a, &words_a, "tr", 4),
            train_b: spec("B", &priv_b, &words_b, "tr", 4),
            test_a: spec("A", &priv_a, &words_a, "te", 2),
            test_b: spec("B", &priv_b, &words_b, "te", 2),
            contrast_a: ("A:c0".into(), "A:c1".into()),
            contrast_b: ("B:c0".into(), "B:c1".into()),
            minimal_pair_a: ("A0".into(), "A0mp".into()),
            minimal_pair_b: ("B0".into(), "B0mp".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(noise: f64, frames: [usize; 2]) -> SynthSpec {
        let mut phones = BTreeMap::new();
        phones.insert("a".to_string(), vec![1.0; 13]);
        phones.insert("b".to_string(), vec![-1.0; 13]);
        SynthSpec {
            language: "xx".into(),
            phones,
            words: vec![
                SynthWord { label: "ab".into(), phones: vec!["a".into(), "b".into()], lemma: None, count: None },
                SynthWord { label: "ba".into(), phones: vec!["b".into(), "a".into()], lemma: None, count: None },
            ],
            speakers: vec![
                SynthSpeaker { id: "s1".into(), gender: Gender::F, offset: Some(vec![0.1; 13]) },
                SynthSpeaker { id: "s2".into(), gender: Gender::M, offset: None },
            ],
            tokens_per_type: 5,
            noise_scale: noise,
            frames_per_phone: frames,
            speaker_offset_scale: 0.3,
            id_prefix: String::new(),
        }
    }

    #[test]
    fn counts_multiply_out() {
        let c = synth_corpus(&small_spec(0.5, [2, 4]), 1).unwrap();
        assert_eq!(c.len(), 2 * 5 * 2);
        for t in c.tokens() {
            let spans = t.phone_spans.as_ref().unwrap();
            assert_eq!(spans.len(), 2);
            assert_eq!(spans[1].end, t.features().unwrap().frames());
        }
    }

    #[test]
    fn zero_noise_fixed_lengths_are_bit_identical() {
        let c = synth_corpus(&small_spec(0.0, [3, 3]), 1).unwrap();
        let same: Vec<_> = c.tokens().iter().filter(|t| t.speaker_id == "s1" && t.word_type == "ab").collect();
        assert_eq!(same.len(), 5);
        for t in &same[1..] {
            assert_eq!(t.features().unwrap(), same[0].features().unwrap());
        }
    }

    #[test]
    fn empty_inventory_is_an_error() {
        let mut s = small_spec(0.5, [2, 4]);
        s.words.clear();
        assert!(synth_corpus(&s, 1).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let s = small_spec(0.5, [2, 4]);
        let (a, b) = (synth_corpus(&s, 7).unwrap(), synth_corpus(&s, 7).unwrap());
        for (x, y) in a.tokens().iter().zip(b.tokens()) {
            assert_eq!(x.features().unwrap(), y.features().unwrap());
        }
    }

    #[test]
    fn preset_contrast_lives_in_private_block() {
        let p = BilingualPreset::new(0);
        let (c0, c1) = (&p.train_a.phones["A:c0"], &p.train_a.phones["A:c1"]);
        for d in 0..13 {
            if PRIVATE_A.contains(&d) {
                continue;
            }
            assert_eq!(c0[d], c1[d]);
        }
        assert!(p.train_b.phones.keys().all(|k| !k.starts_with("A:")));
    }
}

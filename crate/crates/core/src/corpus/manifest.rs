use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::token::{slice_feature_file, TokenMeta};
use super::{frames_for_duration, Corpus, FeatureSource, Gender, WordToken};
use crate::error::{Error, Result};
use crate::frontend::{compute_mfcc, read_awef, read_wav, FeatureMatrix, Waveform};

/// One JSON-lines manifest record. Relative paths resolve against the
/// manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRow {
    pub token_id: String,
    pub word_type: String,
    pub phones: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    pub speaker_id: String,
    pub speaker_gender: Gender,
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_path: Option<PathBuf>,
    pub start_ms: f64,
    pub end_ms: f64,
    /// Optional phone alignment, `[start, end]` in ms relative to `start_ms`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phone_spans_ms: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Read and featurize every token while loading instead of on first use.
    pub eager: bool,
}

/// Frames whose centre (10t + 12.5 ms) falls inside `[start, end)`; at
/// least one frame, clamped to the token.
fn span_to_frames(start: f64, end: f64, frames: usize) -> Range<usize> {
    let to_frame = |ms: f64| (((ms - 12.5) / 10.0).ceil().max(0.0) as usize).min(frames);
    let a = to_frame(start).min(frames - 1);
    let b = to_frame(end).max(a + 1);
    a..b
}

pub fn load_manifest(path: &Path, options: LoadOptions) -> Result<Corpus> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let err = |line: usize, message: String| Error::Manifest {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut tokens = Vec::new();
    let mut ids = HashSet::new();
    let mut language: Option<String> = None;
    let mut wav_cache: HashMap<PathBuf, Waveform> = HashMap::new();
    let mut awef_cache: HashMap<PathBuf, FeatureMatrix> = HashMap::new();

    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ManifestRow = serde_json::from_str(&line).map_err(|e| err(lineno, e.to_string()))?;
        let id = row.token_id.clone();
        let row_err = |m: String| err(lineno, format!("token `{id}`: {m}"));

        if row.phones.is_empty() || row.phones.iter().any(|p| p.trim().is_empty()) {
            return Err(row_err("empty phone field".into()));
        }
        if !ids.insert(row.token_id.clone()) {
            return Err(Error::DuplicateToken(row.token_id));
        }
        if row.end_ms <= row.start_ms {
            return Err(row_err(format!("alignment end {} ms is not after start {} ms", row.end_ms, row.start_ms)));
        }
        match &language {
            None => language = Some(row.language.clone()),
            Some(l) if *l != row.language => {
                return Err(row_err(format!("language `{}` differs from corpus language `{l}`", row.language)))
            }
            _ => {}
        }
        let frames = frames_for_duration(row.end_ms - row.start_ms)
            .ok_or_else(|| row_err("segment shorter than one 25 ms frame".into()))?;

        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let source = match (&row.audio_path, &row.feature_path) {
            (Some(a), None) => FeatureSource::Audio {
                path: resolve(a),
                start_ms: row.start_ms,
                end_ms: row.end_ms,
            },
            (None, Some(f)) => FeatureSource::Features {
                path: resolve(f),
                start_ms: row.start_ms,
                end_ms: row.end_ms,
            },
            _ => return Err(row_err("exactly one of audio_path and feature_path is required".into())),
        };
        let file_path = match &source {
            FeatureSource::Audio { path, .. } | FeatureSource::Features { path, .. } => path.clone(),
        };
        if !file_path.is_file() {
            return Err(row_err(format!("missing file {}", file_path.display())));
        }

        let spans = row
            .phone_spans_ms
            .as_ref()
            .map(|s| {
                if s.len() != row.phones.len() {
                    return Err(row_err(format!("{} phones but {} phone spans", row.phones.len(), s.len())));
                }
                Ok(s.iter().map(|[a, b]| span_to_frames(*a, *b, frames)).collect::<Vec<_>>())
            })
            .transpose()?;

        let meta = TokenMeta {
            token_id: row.token_id.clone(),
            word_type: row.word_type.clone(),
            phones: row.phones.clone(),
            lemma: row.lemma.clone(),
            speaker_id: row.speaker_id.clone(),
            speaker_gender: row.speaker_gender,
            language: row.language.clone(),
        };

        let token = if options.eager {
            let feats = match &source {
                FeatureSource::Audio { path, start_ms, end_ms } => {
                    if !wav_cache.contains_key(path) {
                        wav_cache.insert(path.clone(), read_wav(path).map_err(|e| row_err(e.to_string()))?);
                    }
                    compute_mfcc(&wav_cache[path].slice_ms(*start_ms, *end_ms)?)
                }
                FeatureSource::Features { path, start_ms, end_ms } => {
                    if !awef_cache.contains_key(path) {
                        awef_cache.insert(path.clone(), read_awef(path).map_err(|e| row_err(e.to_string()))?);
                    }
                    slice_feature_file(&awef_cache[path], *start_ms, *end_ms)
                }
            }
            .map_err(|e| row_err(e.to_string()))?;
            WordToken::new(meta, feats, spans).map_err(|e| row_err(e.to_string()))?
        } else {
            WordToken::lazy(meta, source, super::duration_for_frames(frames), spans)?
        };
        tokens.push(token);
    }

    let language = language.ok_or_else(|| err(0, "manifest has no rows".into()))?;
    Corpus::new(language, tokens)
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::write_awef;

    fn row(id: &str, phones: &[&str], feature_path: &str) -> ManifestRow {
        ManifestRow {
            token_id: id.into(),
            word_type: "apple".into(),
            phones: phones.iter().map(|s| s.to_string()).collect(),
            lemma: None,
            speaker_id: "s1".into(),
            speaker_gender: Gender::F,
            language: "en".into(),
            audio_path: None,
            feature_path: Some(feature_path.into()),
            start_ms: 0.0,
            end_ms: 65.0,
            phone_spans_ms: None,
        }
    }

    fn setup(rows: &[ManifestRow]) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let f = FeatureMatrix::new((0..10 * 13).map(|v| v as f64).collect(), 13).unwrap();
        write_awef(&dir.path().join("f.awef"), &f).unwrap();
        let m = dir.path().join("m.jsonl");
        write_manifest(&m, rows).unwrap();
        (dir, m)
    }

    #[test]
    fn loads_three_rows_lazily_and_eagerly() {
        let rows: Vec<_> = (0..3).map(|i| row(&format!("t{i}"), &["a", "b"], "f.awef")).collect();
        let (_d, m) = setup(&rows);
        for eager in [false, true] {
            let c = load_manifest(&m, LoadOptions { eager }).unwrap();
            assert_eq!(c.len(), 3);
            assert_eq!(c.tokens()[0].is_loaded(), eager);
            assert_eq!(c.tokens()[0].features().unwrap().frames(), 5);
            assert_eq!(c.tokens()[0].duration_ms, 65.0);
        }
    }

    #[test]
    fn empty_phones_name_the_token() {
        let (_d, m) = setup(&[row("t0", &["a"], "f.awef"), row("bad_one", &[], "f.awef")]);
        let e = load_manifest(&m, LoadOptions::default()).unwrap_err().to_string();
        assert!(e.contains("bad_one"), "{e}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let (_d, m) = setup(&[row("t0", &["a"], "f.awef"), row("t0", &["a"], "f.awef")]);
        assert!(matches!(load_manifest(&m, LoadOptions::default()), Err(Error::DuplicateToken(id)) if id == "t0"));
    }

    #[test]
    fn missing_file_and_bad_alignment() {
        let (_d, m) = setup(&[row("t0", &["a"], "nope.awef")]);
        let e = load_manifest(&m, LoadOptions::default()).unwrap_err().to_string();
        assert!(e.contains("t0") && e.contains("missing"), "{e}");

        let mut r = row("t1", &["a"], "f.awef");
        r.end_ms = 0.0;
        let (_d, m) = setup(&[r]);
        assert!(load_manifest(&m, LoadOptions::default()).unwrap_err().to_string().contains("t1"));
    }

    #[test]
    fn audio_rows_featurize_slices() {
        let dir = tempfile::tempdir().unwrap();
        let samples = (0..16000).map(|i| (i as f64 * 0.05).sin() * 0.3).collect();
        crate::frontend::write_wav(&dir.path().join("u.wav"), &Waveform::new(samples, 16000).unwrap()).unwrap();
        let mut r = row("w0", &["a", "b"], "x");
        r.feature_path = None;
        r.audio_path = Some("u.wav".into());
        r.start_ms = 100.0;
        r.end_ms = 300.0;
        r.phone_spans_ms = Some(vec![[0.0, 100.0], [100.0, 200.0]]);
        let m = dir.path().join("m.jsonl");
        write_manifest(&m, &[r]).unwrap();
        let c = load_manifest(&m, LoadOptions { eager: true }).unwrap();
        let t = &c.tokens()[0];
        assert_eq!(t.features().unwrap().frames(), 18);
        assert_eq!(t.phone_spans.as_ref().unwrap(), &vec![0..9, 9..18]);
    }
}

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{compute_mfcc, read_awef, read_wav, FeatureMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
    #[serde(rename = "other")]
    Other,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::F => "F",
            Gender::M => "M",
            Gender::Other => "other",
        })
    }
}

/// Where a lazily loaded token gets its frames from.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureSource {
    Audio { path: PathBuf, start_ms: f64, end_ms: f64 },
    Features { path: PathBuf, start_ms: f64, end_ms: f64 },
}

impl FeatureSource {
    fn load(&self) -> Result<FeatureMatrix> {
        match self {
            FeatureSource::Audio { path, start_ms, end_ms } => {
                compute_mfcc(&read_wav(path)?.slice_ms(*start_ms, *end_ms)?)
            }
            FeatureSource::Features { path, start_ms, end_ms } => {
                slice_feature_file(&read_awef(path)?, *start_ms, *end_ms)
            }
        }
    }
}

pub(crate) fn slice_feature_file(all: &FeatureMatrix, start_ms: f64, end_ms: f64) -> Result<FeatureMatrix> {
    let n = super::frames_for_duration(end_ms - start_ms)
        .ok_or_else(|| Error::invalid(format!("segment {start_ms}-{end_ms} ms is shorter than one frame")))?;
    let first = (start_ms / 10.0).round() as usize;
    all.slice_frames(first..first + n)
}

/// One aligned acoustic instance of a word.
#[derive(Clone, Debug)]
pub struct WordToken {
    pub token_id: String,
    pub word_type: String,
    pub phones: Vec<String>,
    pub lemma: Option<String>,
    pub speaker_id: String,
    pub speaker_gender: Gender,
    pub language: String,
    pub duration_ms: f64,
    /// Frame range of every phone, when phone alignments are known.
    pub phone_spans: Option<Vec<Range<usize>>>,
    features: OnceLock<FeatureMatrix>,
    source: Option<FeatureSource>,
}

#[derive(Clone, Debug)]
pub struct TokenMeta {
    pub token_id: String,
    pub word_type: String,
    pub phones: Vec<String>,
    pub lemma: Option<String>,
    pub speaker_id: String,
    pub speaker_gender: Gender,
    pub language: String,
}

impl WordToken {
    fn check_meta(meta: &TokenMeta) -> Result<()> {
        if meta.phones.is_empty() || meta.phones.iter().any(|p| p.is_empty()) {
            return Err(Error::invalid(format!("token `{}` has an empty phone sequence", meta.token_id)));
        }
        if meta.token_id.is_empty() {
            return Err(Error::invalid("empty token id"));
        }
        Ok(())
    }

    pub fn new(meta: TokenMeta, features: FeatureMatrix, phone_spans: Option<Vec<Range<usize>>>) -> Result<Self> {
        Self::check_meta(&meta)?;
        let token = Self::assemble(meta, super::duration_for_frames(features.frames()), phone_spans, None);
        token.check_spans(features.frames())?;
        token.features.set(features).expect("fresh cell");
        Ok(token)
    }

    /// Token whose features are read from `source` on first access.
    pub fn lazy(meta: TokenMeta, source: FeatureSource, duration_ms: f64, phone_spans: Option<Vec<Range<usize>>>) -> Result<Self> {
        Self::check_meta(&meta)?;
        if duration_ms <= 0.0 {
            return Err(Error::invalid(format!("token `{}` has non-positive duration", meta.token_id)));
        }
        Ok(Self::assemble(meta, duration_ms, phone_spans, Some(source)))
    }

    fn assemble(meta: TokenMeta, duration_ms: f64, phone_spans: Option<Vec<Range<usize>>>, source: Option<FeatureSource>) -> Self {
        Self {
            token_id: meta.token_id,
            word_type: meta.word_type,
            phones: meta.phones,
            lemma: meta.lemma,
            speaker_id: meta.speaker_id,
            speaker_gender: meta.speaker_gender,
            language: meta.language,
            duration_ms,
            phone_spans,
            features: OnceLock::new(),
            source,
        }
    }

    fn check_spans(&self, frames: usize) -> Result<()> {
        if let Some(spans) = &self.phone_spans {
            if spans.len() != self.phones.len() {
                return Err(Error::invalid(format!(
                    "token `{}` has {} phones but {} phone spans",
                    self.token_id,
                    self.phones.len(),
                    spans.len()
                )));
            }
            if spans.iter().any(|s| s.start >= s.end || s.end > frames) {
                return Err(Error::invalid(format!("token `{}` has a phone span outside its frames", self.token_id)));
            }
        }
        Ok(())
    }

    /// Frames of this token, loading them on first use when lazy.
    pub fn features(&self) -> Result<&FeatureMatrix> {
        if let Some(f) = self.features.get() {
            return Ok(f);
        }
        let source = self
            .source
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("token `{}` has no features", self.token_id)))?;
        let loaded = source.load().map_err(|e| Error::invalid(format!("token `{}`: {e}", self.token_id)))?;
        if (super::duration_for_frames(loaded.frames()) - self.duration_ms).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "token `{}`: loaded {} frames, inconsistent with duration {} ms",
                self.token_id,
                loaded.frames(),
                self.duration_ms
            )));
        }
        self.check_spans(loaded.frames())?;
        let _ = self.features.set(loaded);
        Ok(self.features.get().expect("just set"))
    }

    pub fn is_loaded(&self) -> bool {
        self.features.get().is_some()
    }

    pub fn source(&self) -> Option<&FeatureSource> {
        self.source.as_ref()
    }

    pub fn meta(&self) -> TokenMeta {
        TokenMeta {
            token_id: self.token_id.clone(),
            word_type: self.word_type.clone(),
            phones: self.phones.clone(),
            lemma: self.lemma.clone(),
            speaker_id: self.speaker_id.clone(),
            speaker_gender: self.speaker_gender,
            language: self.language.clone(),
        }
    }
}

/// An immutable single-language collection of tokens with unique ids.
#[derive(Clone, Debug)]
pub struct Corpus {
    language: String,
    tokens: Vec<WordToken>,
}

impl Corpus {
    pub fn new(language: impl Into<String>, tokens: Vec<WordToken>) -> Result<Self> {
        let language = language.into();
        let mut seen = HashSet::new();
        for t in &tokens {
            if t.language != language {
                return Err(Error::invalid(format!(
                    "token `{}` is tagged `{}` in a `{language}` corpus",
                    t.token_id, t.language
                )));
            }
            if !seen.insert(t.token_id.as_str()) {
                return Err(Error::DuplicateToken(t.token_id.clone()));
            }
        }
        Ok(Self { language, tokens })
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn tokens(&self) -> &[WordToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn into_tokens(self) -> Vec<WordToken> {
        self.tokens
    }

    pub fn speakers(&self) -> BTreeMap<String, Gender> {
        self.tokens
            .iter()
            .map(|t| (t.speaker_id.clone(), t.speaker_gender))
            .collect()
    }

    pub fn speaker_durations(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for t in &self.tokens {
            *out.entry(t.speaker_id.clone()).or_insert(0.0) += t.duration_ms;
        }
        out
    }

    pub fn total_duration_ms(&self) -> f64 {
        self.tokens.iter().map(|t| t.duration_ms).sum()
    }

    /// Total duration formatted as `h:mm`.
    pub fn total_duration_hhmm(&self) -> String {
        let minutes = (self.total_duration_ms() / 60_000.0).round() as u64;
        format!("{}:{:02}", minutes / 60, minutes % 60)
    }

    /// Force every lazy token to load, surfacing the first failure.
    pub fn load_all(&self) -> Result<()> {
        self.tokens.iter().try_for_each(|t| t.features().map(|_| ()))
    }

    pub fn get(&self, token_id: &str) -> Option<&WordToken> {
        self.tokens.iter().find(|t| t.token_id == token_id)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn token(id: &str, word: &str, phones: &[&str], speaker: &str, gender: Gender, frames: usize) -> WordToken {
        let meta = TokenMeta {
            token_id: id.into(),
            word_type: word.into(),
            phones: phones.iter().map(|p| p.to_string()).collect(),
            lemma: None,
            speaker_id: speaker.into(),
            speaker_gender: gender,
            language: "xx".into(),
        };
        let f = FeatureMatrix::new(vec![0.5; frames * 13], 13).unwrap();
        WordToken::new(meta, f, None).unwrap()
    }

    #[test]
    fn duration_tracks_frames() {
        let t = token("t1", "w", &["a"], "s", Gender::F, 7);
        assert_eq!(t.duration_ms, 85.0);
        assert_eq!(super::super::frames_for_duration(85.0), Some(7));
        assert_eq!(super::super::frames_for_duration(24.0), None);
    }

    #[test]
    fn corpus_rejects_duplicates_and_mixed_languages() {
        let a = token("t1", "w", &["a"], "s", Gender::F, 3);
        let b = token("t1", "w", &["a"], "s", Gender::F, 3);
        assert!(matches!(Corpus::new("xx", vec![a.clone(), b]), Err(Error::DuplicateToken(_))));
        assert!(Corpus::new("yy", vec![a]).is_err());
    }

    #[test]
    fn speakers_and_hhmm() {
        let c = Corpus::new(
            "xx",
            vec![
                token("t1", "w", &["a"], "s1", Gender::F, 3),
                token("t2", "w", &["a"], "s2", Gender::M, 3),
            ],
        )
        .unwrap();
        assert_eq!(c.speakers().len(), 2);
        assert_eq!(c.total_duration_ms(), 90.0);
        assert_eq!(c.total_duration_hhmm(), "0:00");
    }
}

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{duration_for_frames, Corpus, WordToken};
use crate::error::{Error, Result};
use crate::frontend::FeatureMatrix;

/// A unit that takes part in ABX trials: a whole word token or one phone
/// slice of a token (id `<token>#<index>`).
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub id: String,
    /// Category compared in trials: the word type or the phone symbol.
    pub label: String,
    pub phones: Vec<String>,
    pub speaker: String,
    pub language: String,
    pub lemma: Option<String>,
    pub duration_ms: f64,
    pub features: FeatureMatrix,
}

impl Segment {
    /// Bare segment with only an id, a label and features.
    pub fn new(id: impl Into<String>, label: impl Into<String>, features: FeatureMatrix) -> Self {
        let label = label.into();
        Self {
            id: id.into(),
            phones: vec![label.clone()],
            label,
            speaker: String::new(),
            language: String::new(),
            lemma: None,
            duration_ms: duration_for_frames(features.frames()),
            features,
        }
    }

    #[cfg(test)]
    pub(crate) fn placeholder(id: &str, label: &str) -> Self {
        Self::new(id, label, FeatureMatrix::new(vec![0.0], 1).unwrap())
    }

    pub fn from_token(t: &WordToken) -> Result<Self> {
        Ok(Self {
            id: t.token_id.clone(),
            label: t.word_type.clone(),
            phones: t.phones.clone(),
            speaker: t.speaker_id.clone(),
            language: t.language.clone(),
            lemma: t.lemma.clone(),
            duration_ms: t.duration_ms,
            features: t.features()?.clone(),
        })
    }

    /// The `k`-th phone of `t`, cut from its features by the phone spans.
    pub fn phone(t: &WordToken, k: usize) -> Result<Self> {
        let spans = t
            .phone_spans
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("token `{}` has no phone alignment", t.token_id)))?;
        let span = spans
            .get(k)
            .ok_or_else(|| Error::invalid(format!("token `{}` has no phone {k}", t.token_id)))?;
        let features = t.features()?.slice_frames(span.clone())?;
        Ok(Self {
            id: format!("{}#{k}", t.token_id),
            label: t.phones[k].clone(),
            phones: vec![t.phones[k].clone()],
            speaker: t.speaker_id.clone(),
            language: t.language.clone(),
            lemma: None,
            duration_ms: duration_for_frames(features.frames()),
            features,
        })
    }
}

/// Task-specific annotation carried by each triplet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContrastMeta {
    None,
    Phone { phones: [String; 2] },
    MinimalPair { words: [String; 2] },
    EditDistance { distance: usize },
}

/// Segment ids for A, B and X.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbxTriplet {
    pub a: String,
    pub b: String,
    pub x: String,
    pub contrast_meta: ContrastMeta,
}

impl AbxTriplet {
    pub fn new(a: impl Into<String>, b: impl Into<String>, x: impl Into<String>, contrast_meta: ContrastMeta) -> Self {
        Self { a: a.into(), b: b.into(), x: x.into(), contrast_meta }
    }
}

/// Triplets together with the segments they reference.
#[derive(Clone, Debug, Default)]
pub struct TripletSet {
    pub segments: Vec<Segment>,
    pub triplets: Vec<AbxTriplet>,
}

impl TripletSet {
    /// Checks unique segment ids, that every reference resolves, and the
    /// type constraints label(A) == label(X) != label(B).
    pub fn new(segments: Vec<Segment>, triplets: Vec<AbxTriplet>) -> Result<Self> {
        let set = Self { segments, triplets };
        let index = set.index()?;
        for t in &set.triplets {
            let look = |id: &str| {
                index
                    .get(id)
                    .map(|&i| &set.segments[i])
                    .ok_or_else(|| Error::invalid(format!("triplet references unknown segment `{id}`")))
            };
            let (a, b, x) = (look(&t.a)?, look(&t.b)?, look(&t.x)?);
            if a.label != x.label || b.label == x.label {
                return Err(Error::invalid(format!(
                    "triplet ({}, {}, {}) has labels ({}, {}, {})",
                    t.a, t.b, t.x, a.label, b.label, x.label
                )));
            }
        }
        Ok(set)
    }

    pub(crate) fn index(&self) -> Result<HashMap<&str, usize>> {
        let mut index = HashMap::with_capacity(self.segments.len());
        for (i, s) in self.segments.iter().enumerate() {
            if index.insert(s.id.as_str(), i).is_some() {
                return Err(Error::DuplicateToken(s.id.clone()));
            }
        }
        Ok(index)
    }

    pub fn segment(&self, id: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }

    /// Rebuild segments for stored triplets from the corpora they were
    /// sampled from.
    pub fn resolve(triplets: Vec<AbxTriplet>, corpora: &[&Corpus]) -> Result<Self> {
        let ids: BTreeSet<&str> = triplets.iter().flat_map(|t| [t.a.as_str(), t.b.as_str(), t.x.as_str()]).collect();
        let find = |id: &str| corpora.iter().find_map(|c| c.get(id));
        let segments = ids
            .into_iter()
            .map(|id| {
                if let Some(t) = find(id) {
                    return Segment::from_token(t);
                }
                if let Some((tok, k)) = id.rsplit_once('#') {
                    if let (Some(t), Ok(k)) = (find(tok), k.parse::<usize>()) {
                        return Segment::phone(t, k);
                    }
                }
                Err(Error::invalid(format!("segment `{id}` not found in the given corpora")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(segments, triplets)
    }
}

/// One JSON object per line.
pub fn write_triplets(path: &Path, triplets: &[AbxTriplet]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for t in triplets {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_triplets(path: &Path) -> Result<Vec<AbxTriplet>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format {
            kind: "triplet",
            message: format!("{}:{}: {e}", path.display(), n + 1),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::token::tests::token;
    use crate::corpus::Gender;

    #[test]
    fn json_lines_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        let ts = vec![
            AbxTriplet::new("a", "b", "x", ContrastMeta::EditDistance { distance: 2 }),
            AbxTriplet::new("a#1", "b#0", "x#2", ContrastMeta::Phone { phones: ["p".into(), "b".into()] }),
        ];
        write_triplets(&p, &ts).unwrap();
        assert_eq!(read_triplets(&p).unwrap(), ts);
        let line = std::fs::read_to_string(&p).unwrap();
        assert!(line.starts_with(r#"{"a":"a","b":"b","x":"x","contrast_meta":{"kind":"edit_distance","distance":2}}"#));
    }

    #[test]
    fn type_constraints_checked() {
        let s = |id: &str, l: &str| Segment::placeholder(id, l);
        let segs = vec![s("a", "A"), s("b", "B"), s("x", "A")];
        assert!(TripletSet::new(segs.clone(), vec![AbxTriplet::new("a", "b", "x", ContrastMeta::None)]).is_ok());
        assert!(TripletSet::new(segs.clone(), vec![AbxTriplet::new("b", "a", "x", ContrastMeta::None)]).is_err());
        assert!(TripletSet::new(segs, vec![AbxTriplet::new("a", "q", "x", ContrastMeta::None)]).is_err());
    }

    #[test]
    fn resolve_words_and_phones() {
        let mut t1 = token("t1", "ab", &["a", "b"], "s", Gender::F, 4);
        t1.phone_spans = Some(vec![0..2, 2..4]);
        let mut t2 = token("t2", "ab", &["a", "b"], "s", Gender::F, 4);
        t2.phone_spans = Some(vec![0..1, 1..4]);
        let t3 = token("t3", "cd", &["c", "d"], "s", Gender::F, 4);
        let c = Corpus::new("xx", vec![t1, t2, t3]).unwrap();
        let set = TripletSet::resolve(
            vec![
                AbxTriplet::new("t1", "t3", "t2", ContrastMeta::None),
                AbxTriplet::new("t1#0", "t2#1", "t2#0", ContrastMeta::None),
            ],
            &[&c],
        )
        .unwrap();
        assert_eq!(set.segments.len(), 6);
        assert_eq!(set.segment("t2#1").unwrap().features.frames(), 3);
        assert_eq!(set.segment("t2#1").unwrap().label, "b");
        assert!(TripletSet::resolve(vec![AbxTriplet::new("t1", "t3", "zz", ContrastMeta::None)], &[&c]).is_err());
    }
}

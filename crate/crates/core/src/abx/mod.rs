//! Machine ABX discrimination on fixed-size embeddings.
//!
//! A trial asks whether X is closer to A (same type) than to B (another
//! type) under the angular cosine distance. Ties count as half correct, so
//! chance is 50% error.

mod edit;
mod sampling;
mod triplets;

pub use edit::phone_edit_distance;
pub use sampling::{
    phone_segments, sample_edit_distance_triplets, sample_minimal_pair_triplets, sample_phone_triplets, EditDistanceSample,
    SamplerOptions, MAX_REJECTIONS,
};
pub use triplets::{read_triplets, write_triplets, AbxTriplet, ContrastMeta, Segment, TripletSet};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::caernn::{Embedding, ModelParams, Real};
use crate::error::{Error, Result};

/// Angle between `u` and `v` divided by pi, in [0, 1].
///
/// Computed as `2 atan2(|u^ - v^|, |u^ + v^|)` on the unit vectors, which
/// equals `arccos(cos(u, v))` but stays exact at the endpoints.
pub fn angular_cosine_distance(u: &Embedding, v: &Embedding) -> Result<f64> {
    angular_distance(u.values(), v.values())
}

pub(crate) fn angular_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch(format!("embeddings of dimension {} and {}", u.len(), v.len())));
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::invalid("angular distance is undefined for a zero vector"));
    }
    if !(nu.is_finite() && nv.is_finite()) {
        return Err(Error::NonFinite("embedding".into()));
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a / nu, b / nv);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    Ok((2.0 * diff.sqrt().atan2(sum.sqrt()) / std::f64::consts::PI).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Correct,
    Incorrect,
    Tie,
}

/// Correct iff d(a, x) < d(b, x); a tie iff the distances are equal.
pub fn abx_trial(a: &Embedding, b: &Embedding, x: &Embedding) -> Result<Outcome> {
    trial(a.values(), b.values(), x.values())
}

fn trial(a: &[f64], b: &[f64], x: &[f64]) -> Result<Outcome> {
    let (da, db) = (angular_distance(a, x)?, angular_distance(b, x)?);
    Ok(if da < db {
        Outcome::Correct
    } else if da > db {
        Outcome::Incorrect
    } else {
        Outcome::Tie
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbxResult {
    pub n_trials: usize,
    /// Correct trials plus half the ties.
    pub n_correct: f64,
    pub n_ties: usize,
    /// Percent.
    pub error_rate: f64,
}

impl AbxResult {
    pub fn from_counts(n_trials: usize, correct: usize, ties: usize) -> Self {
        let n_correct = correct as f64 + 0.5 * ties as f64;
        let error_rate = 100.0 * (1.0 - n_correct / n_trials as f64);
        Self { n_trials, n_correct, n_ties: ties, error_rate }
    }

    pub fn to_json(&self, task: &str) -> serde_json::Value {
        serde_json::json!({
            "task": task,
            "n_trials": self.n_trials,
            "n_ties": self.n_ties,
            "error_rate": self.error_rate,
        })
    }

    pub const CSV_HEADER: &'static str = "task,n_trials,n_ties,error_rate";

    pub fn csv_row(&self, task: &str) -> String {
        format!("{task},{},{},{:.6}", self.n_trials, self.n_ties, self.error_rate)
    }
}

/// Anything that maps a segment to an embedding.
pub trait Embedder: Sync {
    fn embed(&self, segment: &Segment) -> Result<Embedding>;
}

impl<T: Real> Embedder for ModelParams<T> {
    fn embed(&self, segment: &Segment) -> Result<Embedding> {
        self.encode(&segment.features)
    }
}

/// Precomputed embeddings looked up by segment id.
impl Embedder for BTreeMap<String, Embedding> {
    fn embed(&self, segment: &Segment) -> Result<Embedding> {
        self.get(&segment.id)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("no embedding for segment `{}`", segment.id)))
    }
}

impl Embedder for HashMap<String, Embedding> {
    fn embed(&self, segment: &Segment) -> Result<Embedding> {
        self.get(&segment.id)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("no embedding for segment `{}`", segment.id)))
    }
}

/// Embed every segment referenced by the set once, then score all trials.
pub fn abx_error_rate(set: &TripletSet, embedder: &dyn Embedder) -> Result<AbxResult> {
    if set.triplets.is_empty() {
        return Err(Error::invalid("no triplets to evaluate"));
    }
    let index = set.index()?;
    let mut used = vec![false; set.segments.len()];
    for t in &set.triplets {
        for id in [&t.a, &t.b, &t.x] {
            used[index[id.as_str()]] = true;
        }
    }
    let needed: Vec<usize> = (0..used.len()).filter(|&i| used[i]).collect();
    let embed_one = |&i: &usize| embedder.embed(&set.segments[i]).map(|e| (i, e));
    #[cfg(feature = "parallel")]
    let computed: Vec<(usize, Embedding)> = {
        use rayon::prelude::*;
        needed.par_iter().map(embed_one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let computed: Vec<(usize, Embedding)> = needed.iter().map(embed_one).collect::<Result<_>>()?;
    let mut cache: Vec<Option<Embedding>> = vec![None; set.segments.len()];
    for (i, e) in computed {
        cache[i] = Some(e);
    }
    let get = |id: &str| cache[index[id]].as_ref().expect("embedded above").values();
    let score = |t: &AbxTriplet| -> Result<(usize, usize)> {
        Ok(match trial(get(&t.a), get(&t.b), get(&t.x))? {
            Outcome::Correct => (1, 0),
            Outcome::Incorrect => (0, 0),
            Outcome::Tie => (0, 1),
        })
    };
    #[cfg(feature = "parallel")]
    let (correct, ties) = {
        use rayon::prelude::*;
        set.triplets
            .par_iter()
            .map(score)
            .try_reduce(|| (0, 0), |x, y| Ok((x.0 + y.0, x.1 + y.1)))?
    };
    #[cfg(not(feature = "parallel"))]
    let (correct, ties) = set.triplets.iter().map(score).try_fold((0, 0), |acc, r| r.map(|(c, t)| (acc.0 + c, acc.1 + t)))?;
    Ok(AbxResult::from_counts(set.triplets.len(), correct, ties))
}

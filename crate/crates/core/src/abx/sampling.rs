use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::IndexedRandom;
use rand::Rng;

use super::edit::phone_edit_distance;
use super::triplets::{AbxTriplet, ContrastMeta, Segment, TripletSet};
use crate::corpus::{Corpus, WordToken};
use crate::error::{Error, Result};
use crate::rng::{seeded_rng, streams};

/// Rejected candidates tolerated before a sampler gives up.
pub const MAX_REJECTIONS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SamplerOptions {
    /// Require X to come from a different speaker than both A and B.
    pub distinct_speakers: bool,
}

/// Every aligned phone instance in the corpus, keyed by phone symbol, as
/// (token index, phone position).
pub fn phone_segments(corpus: &Corpus) -> BTreeMap<String, Vec<(usize, usize)>> {
    let mut out: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, t) in corpus.tokens().iter().enumerate() {
        if t.phone_spans.is_some() {
            for (k, p) in t.phones.iter().enumerate() {
                out.entry(p.clone()).or_default().push((i, k));
            }
        }
    }
    out
}

/// Draw `n` triplets from two categories, alternating which one supplies
/// A and X so the roles are balanced.
fn balanced_draws<'a, I: Copy>(
    groups: [&[I]; 2],
    speaker: &dyn Fn(I) -> &'a str,
    n: usize,
    seed: u64,
    opts: SamplerOptions,
) -> Result<Vec<(I, I, I)>> {
    let mut rng = seeded_rng(seed, streams::TRIPLETS);
    let mut out = Vec::with_capacity(n);
    let mut rejections = 0u64;
    for i in 0..n {
        let (same, other) = if i % 2 == 0 { (groups[0], groups[1]) } else { (groups[1], groups[0]) };
        loop {
            let ia = rng.random_range(0..same.len());
            let mut ix = rng.random_range(0..same.len() - 1);
            if ix >= ia {
                ix += 1;
            }
            let (a, x) = (same[ia], same[ix]);
            let b = *other.choose(&mut rng).expect("non-empty");
            if !opts.distinct_speakers || (speaker(x) != speaker(a) && speaker(x) != speaker(b)) {
                out.push((a, b, x));
                break;
            }
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(Error::Sampling(format!(
                    "gave up after {rejections} candidates without a speaker-distinct triplet"
                )));
            }
        }
    }
    Ok(out)
}

fn collect_segments(mut ids: Vec<(String, Segment)>) -> Vec<Segment> {
    ids.sort_by(|a, b| a.0.cmp(&b.0));
    ids.dedup_by(|a, b| a.0 == b.0);
    ids.into_iter().map(|(_, s)| s).collect()
}

/// Phone discrimination: A and X are instances of one phone, B of the
/// other.
pub fn sample_phone_triplets(corpus: &Corpus, contrast: (&str, &str), n: usize, seed: u64, opts: SamplerOptions) -> Result<TripletSet> {
    let (p1, p2) = contrast;
    if n == 0 {
        return Err(Error::Sampling("requested zero triplets".into()));
    }
    if p1 == p2 {
        return Err(Error::Sampling(format!("degenerate contrast ({p1}, {p2})")));
    }
    let phones = phone_segments(corpus);
    if phones.is_empty() {
        return Err(Error::Sampling("corpus has no phone alignments".into()));
    }
    let get = |p: &str| -> Result<&Vec<(usize, usize)>> {
        let v = phones.get(p).ok_or_else(|| Error::Sampling(format!("phone `{p}` does not occur in the corpus")))?;
        if v.len() < 2 {
            return Err(Error::Sampling(format!("phone `{p}` has a single instance; A and X need two")));
        }
        Ok(v)
    };
    let (g1, g2) = (get(p1)?, get(p2)?);
    let tokens = corpus.tokens();
    let draws = balanced_draws([g1, g2], &|(i, _): (usize, usize)| tokens[i].speaker_id.as_str(), n, seed, opts)?;
    let meta = ContrastMeta::Phone { phones: [p1.to_string(), p2.to_string()] };
    let mut segs = Vec::new();
    let mut triplets = Vec::with_capacity(n);
    let id = |(i, k): (usize, usize)| format!("{}#{k}", tokens[i].token_id);
    let used: BTreeSet<(usize, usize)> = draws.iter().flat_map(|&(a, b, x)| [a, b, x]).collect();
    for u in used {
        segs.push((id(u), Segment::phone(&tokens[u.0], u.1)?));
    }
    for (a, b, x) in draws {
        triplets.push(AbxTriplet::new(id(a), id(b), id(x), meta.clone()));
    }
    TripletSet::new(collect_segments(segs), triplets)
}

/// Word discrimination between the two words of a minimal pair.
pub fn sample_minimal_pair_triplets(corpus: &Corpus, pair: (&str, &str), n: usize, seed: u64, opts: SamplerOptions) -> Result<TripletSet> {
    let (w1, w2) = pair;
    if n == 0 {
        return Err(Error::Sampling("requested zero triplets".into()));
    }
    if w1 == w2 {
        return Err(Error::Sampling(format!("degenerate word pair ({w1}, {w2})")));
    }
    let tokens = corpus.tokens();
    let of_type = |w: &str| -> Result<Vec<usize>> {
        let v: Vec<usize> = (0..tokens.len()).filter(|&i| tokens[i].word_type == w).collect();
        if v.len() < 2 {
            return Err(Error::Sampling(format!("word `{w}` has {} tokens; A and X need two", v.len())));
        }
        Ok(v)
    };
    let (g1, g2) = (of_type(w1)?, of_type(w2)?);
    let draws = balanced_draws([&g1, &g2], &|i: usize| tokens[i].speaker_id.as_str(), n, seed, opts)?;
    let meta = ContrastMeta::MinimalPair { words: [w1.to_string(), w2.to_string()] };
    word_set(tokens, draws, meta)
}

fn word_set(tokens: &[WordToken], draws: Vec<(usize, usize, usize)>, meta: ContrastMeta) -> Result<TripletSet> {
    let used: BTreeSet<usize> = draws.iter().flat_map(|&(a, b, x)| [a, b, x]).collect();
    let segs = used
        .into_iter()
        .map(|i| Ok((tokens[i].token_id.clone(), Segment::from_token(&tokens[i])?)))
        .collect::<Result<Vec<_>>>()?;
    let id = |i: usize| tokens[i].token_id.clone();
    let triplets = draws.into_iter().map(|(a, b, x)| AbxTriplet::new(id(a), id(b), id(x), meta.clone())).collect();
    TripletSet::new(collect_segments(segs), triplets)
}

/// Result of edit-distance sampling; `notice` is set when fewer than the
/// requested number of triplets exist.
#[derive(Clone, Debug)]
pub struct EditDistanceSample {
    pub set: TripletSet,
    pub requested: usize,
    pub notice: Option<String>,
}

pub const MIN_PHONES: usize = 4;
pub const MAX_PHONES: usize = 10;
pub const MAX_DURATION_RATIO: f64 = 1.1;

/// Word triplets where B and X are `d` phone edits apart.
///
/// All three words have 4 to 10 phones, the longest of the three durations
/// is at most 1.1 times the shortest, B and X have different lemmas when
/// both are annotated, and no triplet repeats.
pub fn sample_edit_distance_triplets(corpus: &Corpus, d: usize, n_max: usize, seed: u64, opts: SamplerOptions) -> Result<EditDistanceSample> {
    if n_max == 0 {
        return Err(Error::Sampling("requested zero triplets".into()));
    }
    if d == 0 {
        return Err(Error::Sampling("edit distance must be at least 1".into()));
    }
    let tokens = corpus.tokens();
    let eligible: Vec<usize> = (0..tokens.len())
        .filter(|&i| (MIN_PHONES..=MAX_PHONES).contains(&tokens[i].phones.len()))
        .collect();
    if eligible.iter().any(|&i| tokens[i].lemma.is_none()) {
        log::warn!("some tokens have no lemma; the B/X lemma exclusion is skipped for them");
    }

    // Tokens grouped by phone string, with group-level distances computed once.
    let mut by_phones: BTreeMap<&[String], Vec<usize>> = BTreeMap::new();
    for &i in &eligible {
        by_phones.entry(tokens[i].phones.as_slice()).or_default().push(i);
    }
    let groups: Vec<(&[String], Vec<usize>)> = by_phones.into_iter().collect();
    let group_of: HashMap<usize, usize> = groups.iter().enumerate().flat_map(|(g, (_, v))| v.iter().map(move |&i| (i, g))).collect();
    let b_candidates: Vec<Vec<usize>> = groups
        .iter()
        .map(|(p, _)| {
            groups
                .iter()
                .filter(|(q, _)| p.len().abs_diff(q.len()) <= d && phone_edit_distance(p, q) == d)
                .flat_map(|(_, v)| v.iter().copied())
                .collect()
        })
        .collect();
    let mut by_type: HashMap<&str, Vec<usize>> = HashMap::new();
    for &i in &eligible {
        by_type.entry(tokens[i].word_type.as_str()).or_default().push(i);
    }
    let viable: Vec<usize> = eligible
        .iter()
        .copied()
        .filter(|&i| by_type[tokens[i].word_type.as_str()].len() >= 2 && !b_candidates[group_of[&i]].is_empty())
        .collect();
    if viable.is_empty() {
        return Err(Error::Sampling(format!(
            "no eligible triplets at edit distance {d} (words need {MIN_PHONES}-{MAX_PHONES} phones, two tokens of X's type, and a B word at that distance)"
        )));
    }

    let mut rng = seeded_rng(seed, streams::TRIPLETS);
    let mut seen = HashSet::new();
    let mut draws = Vec::new();
    let mut rejections = 0u64;
    while draws.len() < n_max && rejections < MAX_REJECTIONS {
        let x = *viable.choose(&mut rng).expect("non-empty");
        let same = &by_type[tokens[x].word_type.as_str()];
        let a = loop {
            let a = *same.choose(&mut rng).expect("non-empty");
            if a != x {
                break a;
            }
        };
        let b = *b_candidates[group_of[&x]].choose(&mut rng).expect("non-empty");
        let (ta, tb, tx) = (&tokens[a], &tokens[b], &tokens[x]);
        let durs = [ta.duration_ms, tb.duration_ms, tx.duration_ms];
        let (lo, hi) = durs.iter().fold((f64::INFINITY, 0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let ok = tb.word_type != tx.word_type
            && hi <= MAX_DURATION_RATIO * lo
            && !matches!((&tb.lemma, &tx.lemma), (Some(p), Some(q)) if p == q)
            && (!opts.distinct_speakers || (tx.speaker_id != ta.speaker_id && tx.speaker_id != tb.speaker_id))
            && seen.insert((a, b, x));
        if ok {
            draws.push((a, b, x));
        } else {
            rejections += 1;
        }
    }
    if draws.is_empty() {
        return Err(Error::Sampling(format!("no triplet at edit distance {d} satisfies the duration and lemma constraints")));
    }
    let notice = (draws.len() < n_max).then(|| {
        let msg = format!("edit distance {d}: only {} of {n_max} requested triplets found", draws.len());
        log::warn!("{msg}");
        msg
    });
    let set = word_set(tokens, draws, ContrastMeta::EditDistance { distance: d })?;
    Ok(EditDistanceSample { set, requested: n_max, notice })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::token::tests::token;
    use crate::corpus::Gender;

    fn phone_corpus() -> Corpus {
        let mut toks = Vec::new();
        for i in 0..10 {
            let mut t = token(&format!("t{i}"), if i % 2 == 0 { "pa" } else { "ba" }, &[if i % 2 == 0 { "p" } else { "b" }, "a"], &format!("s{}", i % 3), Gender::F, 4);
            t.phone_spans = Some(vec![0..2, 2..4]);
            toks.push(t);
        }
        Corpus::new("xx", toks).unwrap()
    }

    #[test]
    fn phone_triplets_balanced_and_valid() {
        let c = phone_corpus();
        let s = sample_phone_triplets(&c, ("p", "b"), 50, 3, SamplerOptions::default()).unwrap();
        assert_eq!(s.triplets.len(), 50);
        let ax_p = s.triplets.iter().filter(|t| s.segment(&t.x).unwrap().label == "p").count();
        assert_eq!(ax_p, 25);
        for t in &s.triplets {
            assert_ne!(t.a, t.x);
        }
        let again = sample_phone_triplets(&c, ("p", "b"), 50, 3, SamplerOptions::default()).unwrap();
        assert_eq!(s.triplets, again.triplets);
        assert!(sample_phone_triplets(&c, ("p", "p"), 5, 3, SamplerOptions::default()).is_err());
        assert!(sample_phone_triplets(&c, ("p", "k"), 5, 3, SamplerOptions::default()).is_err());
        let d = sample_phone_triplets(&c, ("p", "b"), 30, 3, SamplerOptions { distinct_speakers: true }).unwrap();
        for t in &d.triplets {
            let sp = |id: &str| d.segment(id).unwrap().speaker.clone();
            assert!(sp(&t.x) != sp(&t.a) && sp(&t.x) != sp(&t.b));
        }
    }

    #[test]
    fn minimal_pair_triplets() {
        let mut toks = Vec::new();
        for i in 0..3 {
            toks.push(token(&format!("r{i}"), "rock", &["r", "o", "k"], "s", Gender::F, 5));
            toks.push(token(&format!("l{i}"), "lock", &["l", "o", "k"], "s", Gender::F, 5));
        }
        let c = Corpus::new("xx", toks).unwrap();
        let s = sample_minimal_pair_triplets(&c, ("rock", "lock"), 10, 1, SamplerOptions::default()).unwrap();
        assert_eq!(s.triplets.len(), 10);
        assert!(sample_minimal_pair_triplets(&c, ("rock", "sock"), 10, 1, SamplerOptions::default()).is_err());
        assert!(sample_minimal_pair_triplets(&c, ("rock", "lock"), 0, 1, SamplerOptions::default()).is_err());
    }

    #[test]
    fn edit_distance_rejects_short_words() {
        let toks = (0..6).map(|i| token(&format!("t{i}"), &format!("w{}", i % 3), &["a", "b", &format!("c{}", i % 3)], "s", Gender::F, 5)).collect();
        let c = Corpus::new("xx", toks).unwrap();
        assert!(sample_edit_distance_triplets(&c, 1, 10, 0, SamplerOptions::default()).is_err());
    }

    #[test]
    fn edit_distance_constraints_hold() {
        let words: [(&str, &[&str], &str); 4] = [
            ("cat", &["k", "a", "t", "s"], "cat"),
            ("cats", &["k", "a", "t", "z"], "cat"),
            ("bat", &["b", "a", "t", "s"], "bat"),
            ("bit", &["b", "i", "t", "s"], "bit"),
        ];
        let mut toks = Vec::new();
        for (w, p, lemma) in words {
            for k in 0..4 {
                let mut t = token(&format!("{w}{k}"), w, p, &format!("s{k}"), Gender::M, 10 + k % 2);
                t.lemma = Some(lemma.into());
                toks.push(t);
            }
        }
        let c = Corpus::new("xx", toks).unwrap();
        let r = sample_edit_distance_triplets(&c, 1, 200, 5, SamplerOptions::default()).unwrap();
        assert!(r.notice.is_some());
        let set = &r.set;
        let mut seen = HashSet::new();
        for t in &set.triplets {
            let (a, b, x) = (set.segment(&t.a).unwrap(), set.segment(&t.b).unwrap(), set.segment(&t.x).unwrap());
            assert_eq!(phone_edit_distance(&b.phones, &x.phones), 1);
            assert_ne!(b.lemma, x.lemma);
            assert_eq!(a.label, x.label);
            assert!(seen.insert((t.a.clone(), t.b.clone(), t.x.clone())));
        }
        // cat/cats share a lemma, so neither may be B against the other as X.
        assert!(!set.triplets.iter().any(|t| set.segment(&t.b).unwrap().label.starts_with("cat") && set.segment(&t.x).unwrap().label.starts_with("cat")));
    }
}

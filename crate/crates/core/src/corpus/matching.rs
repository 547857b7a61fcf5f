use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;

use super::{fnv1a, Corpus, Gender, WordToken};
use crate::error::{Error, Result};
use crate::rng::{seeded_rng, streams};

/// Speakers of one gender, most data first (ties by id).
fn ranked_speakers(c: &Corpus, gender: Gender) -> Vec<(String, f64)> {
    let durations = c.speaker_durations();
    let mut out: Vec<_> = c
        .speakers()
        .into_iter()
        .filter(|(_, g)| *g == gender)
        .map(|(s, _)| {
            let d = durations[&s];
            (s, d)
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Tokens of `speaker` in a deterministic shuffled order.
fn shuffled_tokens<'a>(c: &'a Corpus, speaker: &str) -> Vec<&'a WordToken> {
    let mut toks: Vec<_> = c.tokens().iter().filter(|t| t.speaker_id == speaker).collect();
    toks.shuffle(&mut seeded_rng(fnv1a(speaker), streams::MATCH));
    toks
}

/// Keep tokens of `toks` (in order) summing to the kept duration; the two
/// candidate cut points bracket `target` and are returned as (below, above).
fn cut_points(toks: &[&WordToken], target: f64) -> (usize, usize) {
    let mut total: f64 = toks.iter().map(|t| t.duration_ms).sum();
    let mut keep = toks.len();
    while keep > 0 && total > target + 1e-9 {
        keep -= 1;
        total -= toks[keep].duration_ms;
    }
    let above = if keep < toks.len() && total < target - 1e-9 { keep + 1 } else { keep };
    (keep, above)
}

/// Matched subsets: equal speaker counts per gender, and per paired speaker
/// durations trimmed to the pairwise minimum by dropping whole tokens.
///
/// Speakers are paired by rank of available data within each gender. When
/// trimming cannot hit the minimum exactly, the cut (just below or just above
/// it) is chosen to keep the running corpus-level difference under one token,
/// so both per-speaker and total durations agree within one token's length.
pub fn match_subsets(a: &Corpus, b: &Corpus) -> Result<(Corpus, Corpus)> {
    let genders_a: BTreeSet<Gender> = a.speakers().into_values().collect();
    let genders_b: BTreeSet<Gender> = b.speakers().into_values().collect();
    if genders_a.is_empty() || genders_b.is_empty() {
        return Err(Error::Matching("both corpora need at least one speaker".into()));
    }
    if genders_a != genders_b {
        return Err(Error::Matching(format!(
            "`{}` has speaker genders {genders_a:?} but `{}` has {genders_b:?}",
            a.language(),
            b.language()
        )));
    }

    let mut keep_a: BTreeMap<String, usize> = BTreeMap::new();
    let mut keep_b: BTreeMap<String, usize> = BTreeMap::new();
    let mut carry = 0.0;
    for g in &genders_a {
        let (ra, rb) = (ranked_speakers(a, *g), ranked_speakers(b, *g));
        for ((sa, da), (sb, db)) in ra.iter().zip(&rb) {
            let (ta, tb) = (shuffled_tokens(a, sa), shuffled_tokens(b, sb));
            let target = da.min(*db);
            let sum = |t: &[&WordToken], n: usize| t[..n].iter().map(|x| x.duration_ms).sum::<f64>();
            let (na, nb) = if da > db {
                let (lo, hi) = cut_points(&ta, target);
                let pick = pick_cut(carry, sum(&ta, lo) - target, sum(&ta, hi) - target);
                (if pick { hi } else { lo }, tb.len())
            } else if db > da {
                let (lo, hi) = cut_points(&tb, target);
                let pick = pick_cut(carry, target - sum(&tb, lo), target - sum(&tb, hi));
                (ta.len(), if pick { hi } else { lo })
            } else {
                (ta.len(), tb.len())
            };
            carry += sum(&ta, na) - sum(&tb, nb);
            keep_a.insert(sa.clone(), na);
            keep_b.insert(sb.clone(), nb);
        }
    }
    Ok((subset(a, &keep_a)?, subset(b, &keep_b)?))
}

/// True selects the second candidate: whichever leaves the smaller running
/// imbalance.
fn pick_cut(carry: f64, delta_first: f64, delta_second: f64) -> bool {
    (carry + delta_second).abs() < (carry + delta_first).abs()
}

fn subset(c: &Corpus, keep: &BTreeMap<String, usize>) -> Result<Corpus> {
    let mut tokens = Vec::new();
    for (speaker, n) in keep {
        tokens.extend(shuffled_tokens(c, speaker).into_iter().take(*n).cloned());
    }
    Corpus::new(c.language(), tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::token::tests::token;

    fn corpus(lang: &str, speakers: &[(&str, Gender, usize)], frames: usize) -> Corpus {
        let mut toks = Vec::new();
        for (s, g, n) in speakers {
            for i in 0..*n {
                let mut t = token(&format!("{s}_{i}"), &format!("w{}", i % 3), &["a"], s, *g, frames + i % 4);
                t.language = lang.into();
                toks.push(t);
            }
        }
        Corpus::new(lang, toks).unwrap()
    }

    #[test]
    fn identity_matching_is_exact() {
        let c = corpus("en", &[("s1", Gender::F, 10), ("s2", Gender::M, 7)], 5);
        let (x, y) = match_subsets(&c, &c).unwrap();
        assert_eq!(x.total_duration_ms(), c.total_duration_ms());
        assert_eq!(x.total_duration_ms(), y.total_duration_ms());
    }

    #[test]
    fn speaker_count_follows_minimum() {
        let a = corpus("en", &[("a1", Gender::F, 5), ("a2", Gender::F, 5)], 5);
        let b = corpus("ja", &[("b1", Gender::F, 5), ("b2", Gender::F, 6), ("b3", Gender::F, 4)], 5);
        let (x, y) = match_subsets(&a, &b).unwrap();
        assert_eq!(x.speakers().len(), 2);
        assert_eq!(y.speakers().len(), 2);
        assert!(y.speakers().keys().all(|s| b.speakers().contains_key(s)));
    }

    #[test]
    fn gender_mismatch_is_an_error() {
        let a = corpus("en", &[("a1", Gender::M, 5)], 5);
        let b = corpus("ja", &[("b1", Gender::F, 5)], 5);
        assert!(matches!(match_subsets(&a, &b), Err(Error::Matching(_))));
    }

    #[test]
    fn twenty_speakers_match_within_one_token() {
        let sa: Vec<(String, Gender, usize)> =
            (0..20).map(|i| (format!("a{i}"), if i % 2 == 0 { Gender::F } else { Gender::M }, 30 + i)).collect();
        let sb: Vec<(String, Gender, usize)> =
            (0..20).map(|i| (format!("b{i}"), if i % 2 == 0 { Gender::F } else { Gender::M }, 45 - i)).collect();
        fn as_ref(v: &[(String, Gender, usize)]) -> Vec<(&str, Gender, usize)> {
            v.iter().map(|(s, g, n)| (s.as_str(), *g, *n)).collect()
        }
        let a = corpus("en", &as_ref(&sa), 20);
        let b = corpus("ja", &as_ref(&sb), 21);
        let (x, y) = match_subsets(&a, &b).unwrap();
        assert_eq!(x.speakers().len(), 20);
        assert_eq!(y.speakers().len(), 20);
        let per_gender = |c: &Corpus, g| c.speakers().values().filter(|v| **v == g).count();
        assert_eq!(per_gender(&x, Gender::F), per_gender(&y, Gender::F));
        let longest = a.tokens().iter().chain(b.tokens()).map(|t| t.duration_ms).fold(0.0, f64::max);
        assert!((x.total_duration_ms() - y.total_duration_ms()).abs() < longest);
    }
}

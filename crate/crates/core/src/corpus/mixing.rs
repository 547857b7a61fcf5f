use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{fnv1a, Corpus, WordToken};
use crate::error::{Error, Result};
use crate::rng::{seeded_rng, streams};

/// Share of the training data drawn from language A and language B, in
/// percent. Serializes as `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u32; 2]", into = "[u32; 2]")]
pub struct Ratio {
    a: u32,
    b: u32,
}

impl Ratio {
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a + b != 100 {
            return Err(Error::invalid(format!("ratio {a}:{b} does not sum to 100")));
        }
        Ok(Self { a, b })
    }

    pub fn share_a(&self) -> u32 {
        self.a
    }

    pub fn share_b(&self) -> u32 {
        self.b
    }

    /// Split `total` into (A, B) parts proportionally, rounding A to nearest
    /// so the parts always add up to `total`.
    pub fn split(&self, total: usize) -> (usize, usize) {
        let a = (total * self.a as usize + 50) / 100;
        (a, total - a)
    }
}

impl TryFrom<[u32; 2]> for Ratio {
    type Error = Error;
    fn try_from(v: [u32; 2]) -> Result<Self> {
        Ratio::new(v[0], v[1])
    }
}

impl From<Ratio> for [u32; 2] {
    fn from(r: Ratio) -> Self {
        [r.a, r.b]
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.a, self.b)
    }
}

impl FromStr for Ratio {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("ratio `{s}` is not of the form A:B")))?;
        let parse = |x: &str| x.trim().parse::<u32>().map_err(|_| Error::invalid(format!("bad ratio `{s}`")));
        Ratio::new(parse(a)?, parse(b)?)
    }
}

/// Token budget for pretraining and pair budget for correspondence training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub tokens: usize,
    pub pairs: usize,
}

/// Ordered (input X, target X') pair, as indices into
/// [`TrainingSet::pretrain_tokens`] (or the slice given to
/// [`generate_pairs`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingPair {
    pub input: usize,
    pub target: usize,
}

#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub pretrain_tokens: Vec<WordToken>,
    pub pairs: Vec<TrainingPair>,
    pub ratio: Ratio,
}

impl TrainingSet {
    pub fn pair_tokens(&self, p: TrainingPair) -> (&WordToken, &WordToken) {
        (&self.pretrain_tokens[p.input], &self.pretrain_tokens[p.target])
    }

    /// Full-scan check of the pair invariants.
    pub fn validate(&self) -> Result<()> {
        for p in &self.pairs {
            let (x, y) = (
                self.pretrain_tokens.get(p.input),
                self.pretrain_tokens.get(p.target),
            );
            let (Some(x), Some(y)) = (x, y) else {
                return Err(Error::invalid(format!("pair {p:?} indexes past the token list")));
            };
            if x.word_type != y.word_type || x.language != y.language || x.token_id == y.token_id {
                return Err(Error::invalid(format!(
                    "pair ({}, {}) violates same-type/same-language/distinct-token",
                    x.token_id, y.token_id
                )));
            }
        }
        Ok(())
    }
}

/// The `n` tokens of the most frequent word types: types ranked by token
/// count (ties by label), taken whole in rank order, with the last type cut
/// in corpus order.
pub fn select_most_frequent(c: &Corpus, n: usize) -> Result<Vec<WordToken>> {
    if n > c.len() {
        return Err(Error::Shortfall {
            language: c.language().to_string(),
            requested: n,
            available: c.len(),
        });
    }
    let mut by_type: BTreeMap<&str, Vec<&WordToken>> = BTreeMap::new();
    for t in c.tokens() {
        by_type.entry(&t.word_type).or_default().push(t);
    }
    let mut ranked: Vec<_> = by_type.into_iter().collect();
    ranked.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(b.0)));
    Ok(ranked
        .into_iter()
        .flat_map(|(_, toks)| toks)
        .take(n)
        .cloned()
        .collect())
}

/// Sample `m` ordered pairs uniformly, with replacement, from all ordered
/// pairs of distinct same-type tokens (optionally restricted to pairs from
/// different speakers).
pub fn generate_pairs(tokens: &[WordToken], m: usize, seed: u64, cross_speaker_only: bool) -> Result<Vec<TrainingPair>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in tokens.iter().enumerate() {
        groups.entry(&t.word_type).or_default().push(i);
    }
    let eligible = |g: &[usize]| -> u64 {
        let c = g.len() as u64;
        let all = c * c.saturating_sub(1);
        if !cross_speaker_only {
            return all;
        }
        let mut per_speaker: BTreeMap<&str, u64> = BTreeMap::new();
        for &i in g {
            *per_speaker.entry(&tokens[i].speaker_id).or_default() += 1;
        }
        all - per_speaker.values().map(|s| s * (s - 1)).sum::<u64>()
    };
    let groups: Vec<(Vec<usize>, u64)> = groups
        .into_values()
        .map(|g| {
            let w = eligible(&g);
            (g, w)
        })
        .filter(|(_, w)| *w > 0)
        .collect();
    let mut cumulative = Vec::with_capacity(groups.len());
    let mut total = 0u64;
    for (_, w) in &groups {
        total += w;
        cumulative.push(total);
    }
    if total == 0 {
        return Err(Error::NoPairs);
    }

    let mut rng = seeded_rng(seed, streams::PAIRS);
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let u = rng.random_range(0..total);
        let gi = cumulative.partition_point(|&c| c <= u);
        let members = &groups[gi].0;
        let c = members.len();
        let (i, j) = loop {
            let r = rng.random_range(0..c * (c - 1));
            let i = r / (c - 1);
            let mut j = r % (c - 1);
            if j >= i {
                j += 1;
            }
            let (x, y) = (members[i], members[j]);
            if !cross_speaker_only || tokens[x].speaker_id != tokens[y].speaker_id {
                break (x, y);
            }
        };
        out.push(TrainingPair { input: i, target: j });
    }
    Ok(out)
}

fn language_seed(seed: u64, language: &str) -> u64 {
    seed ^ fnv1a(language)
}

/// Single-language training set: the `budgets.tokens` most frequent tokens
/// and `budgets.pairs` same-type pairs drawn among them.
pub fn monolingual(c: &Corpus, budgets: Budgets, seed: u64, cross_speaker_only: bool) -> Result<TrainingSet> {
    mix_bilingual(c, c, Ratio { a: 100, b: 0 }, budgets, seed, cross_speaker_only)
}

/// Ratio-mixed training set with the same total token and pair budgets as a
/// monolingual run. Each language's share is built exactly as a monolingual
/// set would be (same per-language seed), so a 100:0 mix reproduces the
/// monolingual construction for `a`.
pub fn mix_bilingual(a: &Corpus, b: &Corpus, ratio: Ratio, budgets: Budgets, seed: u64, cross_speaker_only: bool) -> Result<TrainingSet> {
    let (tok_a, tok_b) = ratio.split(budgets.tokens);
    let (pair_a, pair_b) = ratio.split(budgets.pairs);
    let mut pretrain_tokens = Vec::with_capacity(budgets.tokens);
    let mut pairs = Vec::with_capacity(budgets.pairs);
    for (corpus, n_tok, n_pair) in [(a, tok_a, pair_a), (b, tok_b, pair_b)] {
        if n_tok == 0 && n_pair == 0 {
            continue;
        }
        let selected = select_most_frequent(corpus, n_tok)?;
        let offset = pretrain_tokens.len();
        if n_pair > 0 {
            let ps = generate_pairs(&selected, n_pair, language_seed(seed, corpus.language()), cross_speaker_only)?;
            pairs.extend(ps.into_iter().map(|p| TrainingPair {
                input: p.input + offset,
                target: p.target + offset,
            }));
        }
        pretrain_tokens.extend(selected);
    }
    Ok(TrainingSet {
        pretrain_tokens,
        pairs,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::token::tests::token;
    use crate::corpus::Gender;

    fn corpus(lang: &str, counts: &[(&str, usize)]) -> Corpus {
        let mut toks = Vec::new();
        for (w, n) in counts {
            for i in 0..*n {
                let mut t = token(&format!("{lang}_{w}_{i}"), w, &["p"], &format!("s{}", i % 3), Gender::F, 3);
                t.language = lang.into();
                toks.push(t);
            }
        }
        Corpus::new(lang, toks).unwrap()
    }

    #[test]
    fn ratio_parsing_and_split() {
        let r: Ratio = "90:10".parse().unwrap();
        assert_eq!(r.split(1000), (900, 100));
        assert_eq!(r.split(2000), (1800, 200));
        assert!("60:50".parse::<Ratio>().is_err());
        assert!(serde_json::from_str::<Ratio>("[30, 71]").is_err());
        assert_eq!(serde_json::to_string(&r).unwrap(), "[90,10]");
    }

    #[test]
    fn most_frequent_takes_whole_types_first() {
        let c = corpus("en", &[("rare", 2), ("common", 5), ("mid", 3)]);
        let sel = select_most_frequent(&c, 7).unwrap();
        let types: Vec<_> = sel.iter().map(|t| t.word_type.as_str()).collect();
        assert_eq!(types, ["common"; 5].iter().chain(["mid"; 2].iter()).copied().collect::<Vec<_>>());
        assert!(matches!(select_most_frequent(&c, 11), Err(Error::Shortfall { requested: 11, .. })));
    }

    #[test]
    fn two_tokens_give_both_orientations_only() {
        let c = corpus("en", &[("apple", 2)]);
        let pairs = generate_pairs(c.tokens(), 50, 1, false).unwrap();
        assert!(pairs.iter().all(|p| (p.input, p.target) == (0, 1) || (p.input, p.target) == (1, 0)));
        assert!(pairs.iter().any(|p| p.input == 0) && pairs.iter().any(|p| p.input == 1));
    }

    #[test]
    fn singletons_cannot_pair() {
        let c = corpus("en", &[("a", 1), ("b", 1)]);
        assert!(matches!(generate_pairs(c.tokens(), 3, 1, false), Err(Error::NoPairs)));
    }

    #[test]
    fn pairs_are_reproducible() {
        let c = corpus("en", &[("a", 3)]);
        let p1 = generate_pairs(c.tokens(), 1000, 9, false).unwrap();
        let p2 = generate_pairs(c.tokens(), 1000, 9, false).unwrap();
        assert_eq!(p1, p2);
        assert_ne!(p1, generate_pairs(c.tokens(), 1000, 10, false).unwrap());
    }

    #[test]
    fn cross_speaker_pairs_differ_in_speaker() {
        let c = corpus("en", &[("a", 6), ("b", 4)]);
        let pairs = generate_pairs(c.tokens(), 500, 2, true).unwrap();
        for p in pairs {
            assert_ne!(c.tokens()[p.input].speaker_id, c.tokens()[p.target].speaker_id);
        }
    }

    #[test]
    fn mixing_respects_budgets_and_shares() {
        let a = corpus("ru", &[("x", 600), ("y", 500)]);
        let b = corpus("en", &[("u", 700), ("v", 400)]);
        let budgets = Budgets { tokens: 1000, pairs: 2000 };
        let ts = mix_bilingual(&a, &b, Ratio::new(90, 10).unwrap(), budgets, 4, false).unwrap();
        assert_eq!(ts.pretrain_tokens.len(), 1000);
        assert_eq!(ts.pretrain_tokens.iter().filter(|t| t.language == "ru").count(), 900);
        assert_eq!(ts.pairs.len(), 2000);
        assert_eq!(ts.pairs.iter().filter(|p| ts.pretrain_tokens[p.input].language == "ru").count(), 1800);
        ts.validate().unwrap();
    }

    #[test]
    fn full_share_equals_monolingual() {
        let a = corpus("ru", &[("x", 30), ("y", 20)]);
        let b = corpus("en", &[("u", 30)]);
        let budgets = Budgets { tokens: 40, pairs: 100 };
        let mixed = mix_bilingual(&a, &b, Ratio::new(100, 0).unwrap(), budgets, 4, false).unwrap();
        let mono = monolingual(&a, budgets, 4, false).unwrap();
        assert_eq!(mixed.pairs, mono.pairs);
        let ids = |ts: &TrainingSet| ts.pretrain_tokens.iter().map(|t| t.token_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&mixed), ids(&mono));
    }

    #[test]
    fn shortfall_is_reported() {
        let a = corpus("ru", &[("x", 10)]);
        let b = corpus("en", &[("u", 10)]);
        let budgets = Budgets { tokens: 40, pairs: 100 };
        let e = mix_bilingual(&a, &b, Ratio::new(50, 50).unwrap(), budgets, 4, false).unwrap_err();
        assert!(matches!(e, Error::Shortfall { requested: 20, available: 10, .. }));
    }
}

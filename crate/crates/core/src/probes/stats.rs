use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded_rng, streams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    /// Sample standard deviation over sqrt(n); 0 for a single value.
    pub se: f64,
    pub n: usize,
}

pub fn mean_se(values: &[f64]) -> Result<MeanSe> {
    if values.is_empty() {
        return Err(Error::invalid("mean of an empty group"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = if n < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    Ok(MeanSe { mean, se, n })
}

pub fn mean_se_grouped<K: Ord + Clone>(groups: &BTreeMap<K, Vec<f64>>) -> Result<BTreeMap<K, MeanSe>> {
    groups.iter().map(|(k, v)| Ok((k.clone(), mean_se(v)?))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub p_value: f64,
    /// mean(a) - mean(b)
    pub observed: f64,
    pub n_perm: usize,
    /// All values identical: no test is possible and p is reported as 1.
    pub degenerate: bool,
}

/// Two-sided permutation test on the difference in means, with add-one
/// smoothing: `p = (1 + #{|perm| >= |observed|}) / (n_perm + 1)`.
pub fn permutation_test(a: &[f64], b: &[f64], n_perm: usize, seed: u64) -> Result<PermutationResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("permutation test needs two non-empty groups"));
    }
    if n_perm < 1000 {
        return Err(Error::invalid(format!("n_perm must be at least 1000, got {n_perm}")));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("permutation test input".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let observed = mean(a) - mean(b);
    let first = a[0];
    if a.iter().chain(b).all(|&v| v == first) {
        return Ok(PermutationResult { p_value: 1.0, observed, n_perm, degenerate: true });
    }
    let threshold = observed.abs() * (1.0 - 1e-12) - 1e-12;
    let mut pool: Vec<f64> = a.iter().chain(b).copied().collect();
    let total: f64 = pool.iter().sum();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut rng = seeded_rng(seed, streams::PERMUTATION);
    let mut count = 0usize;
    for _ in 0..n_perm {
        pool.shuffle(&mut rng);
        let sa: f64 = pool[..a.len()].iter().sum();
        let diff = sa / na - (total - sa) / nb;
        if diff.abs() >= threshold {
            count += 1;
        }
    }
    Ok(PermutationResult { p_value: (1 + count) as f64 / (n_perm + 1) as f64, observed, n_perm, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_se_examples() {
        assert_eq!(mean_se(&[2.0, 4.0]).unwrap(), MeanSe { mean: 3.0, se: 1.0, n: 2 });
        assert_eq!(mean_se(&[5.0]).unwrap(), MeanSe { mean: 5.0, se: 0.0, n: 1 });
        assert!(mean_se(&[]).is_err());
        let mut g = BTreeMap::new();
        g.insert("x", vec![1.0, 2.0, 3.0]);
        assert_eq!(mean_se_grouped(&g).unwrap()["x"].mean, 2.0);
    }

    #[test]
    fn permutation_extremes() {
        let same = permutation_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 2000, 1).unwrap();
        assert!(same.p_value > 0.5);
        let far = permutation_test(&[0.0; 5], &[9.0; 5], 10_000, 1).unwrap();
        assert!(far.p_value <= 0.01);
        let d = permutation_test(&[2.0; 3], &[2.0; 4], 1000, 1).unwrap();
        assert!(d.degenerate && d.p_value == 1.0);
        assert!(permutation_test(&[1.0], &[2.0], 999, 1).is_err());
        assert!(permutation_test(&[], &[2.0], 1000, 1).is_err());
    }
}

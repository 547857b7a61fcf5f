//! Word-token corpora: manifest ingestion, matched subsets, bilingual
//! mixing, same-type pair generation and a synthetic corpus generator.

mod manifest;
mod matching;
mod mixing;
mod synth;
pub(crate) mod token;

pub use manifest::{load_manifest, write_manifest, LoadOptions, ManifestRow};
pub use matching::match_subsets;
pub use mixing::{generate_pairs, mix_bilingual, monolingual, select_most_frequent, Budgets, Ratio, TrainingPair, TrainingSet};
pub use synth::{synth_corpus, write_synthetic, BilingualPreset, SynthSpeaker, SynthSpec, SynthWord};
pub use token::{Corpus, FeatureSource, Gender, TokenMeta, WordToken};

/// Token duration implied by a frame count (10 ms shift plus the 15 ms
/// remainder of the final 25 ms window).
pub fn duration_for_frames(frames: usize) -> f64 {
    frames as f64 * 10.0 + 15.0
}

/// Number of whole 25 ms / 10 ms frames inside `duration_ms`.
pub fn frames_for_duration(duration_ms: f64) -> Option<usize> {
    (duration_ms >= 25.0 - 1e-9).then(|| ((duration_ms - 25.0 + 1e-9) / 10.0).floor() as usize + 1)
}

/// 64-bit FNV-1a; stable across platforms and releases, used to derive
/// per-name seeds.
pub(crate) fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

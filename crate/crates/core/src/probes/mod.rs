//! Language-separability probe and the statistics used in reports.

mod logistic;
mod stats;

pub use logistic::{stratified_split, train_language_probe, LabeledEmbeddingSet, ProbeConfig, ProbeModel, ProbeResult};
pub use stats::{mean_se, mean_se_grouped, permutation_test, MeanSe, PermutationResult};

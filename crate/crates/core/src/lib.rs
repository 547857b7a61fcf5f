//! Acoustic word embeddings from a correspondence autoencoder RNN, together
//! with the evaluation machinery used to study mono- and bilingual phonetic
//! learning: machine ABX discrimination, a language-identification probe and
//! the statistics needed to report them.
//!
//! The crate is organised the way an experiment flows:
//!
//! * [`frontend`] turns audio into 13-dimensional MFCC frames,
//! * [`corpus`] loads aligned word tokens, matches and mixes corpora and
//!   generates same-type training pairs (or synthesizes a corpus),
//! * [`caernn`] is the GRU encoder/decoder, its training loop and Adam,
//! * [`abx`] samples and scores ABX triplets,
//! * [`probes`] holds the logistic-regression probe and the aggregation
//!   statistics,
//! * [`experiment`] ties everything into resumable ratio x seed sweeps.

pub mod abx;
pub mod caernn;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod frontend;
pub mod probes;
mod rng;

pub use error::{Error, Result};
pub use rng::seeded_rng;

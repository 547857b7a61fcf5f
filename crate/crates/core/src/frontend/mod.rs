//! Speech frontend: framing, MFCC extraction and feature containers.

mod features;
mod mfcc;
mod wav;

pub use features::{read_awef, write_awef, FeatureMatrix};
pub use mfcc::{
    compute_mfcc, frame_count, frame_signal, MfccConfig, MfccExtractor, FRAME_LENGTH_MS,
    FRAME_SHIFT_MS, NUM_CEPS,
};
pub use wav::{read_wav, write_wav, Waveform};

//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Build with `wasm-pack build crates/web --target web --out-dir www/pkg`
//! and serve `crates/web/www` with any static file server.

use std::collections::HashMap;

use awe_core::abx::{abx_error_rate, phone_edit_distance, AbxTriplet, ContrastMeta, Segment, TripletSet};
use awe_core::caernn::Embedding;
use awe_core::frontend::{compute_mfcc, FeatureMatrix, Waveform};
use awe_core::seeded_rng;
use rand_distr::{Distribution, StandardNormal};
use wasm_bindgen::prelude::*;

/// Frames x 13 coefficients, row-major.
#[wasm_bindgen]
pub struct Mfcc {
    frames: usize,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl Mfcc {
    #[wasm_bindgen(getter)]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[wasm_bindgen(getter)]
    pub fn dim(&self) -> usize {
        13
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}

/// MFCCs of a tone (plus its third harmonic at a third of the amplitude).
pub fn tone_mfcc(freq_hz: f64, duration_ms: f64, sample_rate: u32) -> awe_core::Result<Mfcc> {
    let n = (duration_ms * sample_rate as f64 / 1000.0).round() as usize;
    let rate = sample_rate as f64;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            0.4 * (2.0 * std::f64::consts::PI * freq_hz * t).sin() + 0.13 * (6.0 * std::f64::consts::PI * freq_hz * t).sin()
        })
        .collect();
    let m = compute_mfcc(&Waveform::new(samples, sample_rate)?)?;
    Ok(Mfcc {
        frames: m.frames(),
        values: m.rows().flatten().copied().collect(),
    })
}

/// Levenshtein distance between two whitespace-separated phone strings.
pub fn phone_distance(a: &str, b: &str) -> usize {
    let p: Vec<&str> = a.split_whitespace().collect();
    let q: Vec<&str> = b.split_whitespace().collect();
    phone_edit_distance(&p, &q)
}

/// ABX error (%) for two isotropic Gaussian categories in 8 dimensions
/// whose centres lie `separation` standard deviations apart.
pub fn cluster_abx_error(separation: f64, n_triplets: usize, seed: u64) -> awe_core::Result<f64> {
    const DIM: usize = 8;
    let mut rng = seeded_rng(seed, 0);
    let mut point = |offset: f64| -> Embedding {
        let mut v: Vec<f64> = (0..DIM).map(|_| StandardNormal.sample(&mut rng)).collect();
        // Centres at +-offset on the first axis, shifted off the origin so
        // that angles still separate them.
        v[0] += offset;
        v[1] += 3.0;
        Embedding(v)
    };
    let placeholder = || FeatureMatrix::new(vec![0.0], 1).expect("one frame");
    let mut embeddings = HashMap::new();
    let mut segments = Vec::new();
    let mut triplets = Vec::new();
    for i in 0..n_triplets {
        // Alternate which category plays A/X so the set stays balanced.
        let (same, other) = if i % 2 == 0 { (0.5, -0.5) } else { (-0.5, 0.5) };
        let ids = [format!("a{i}"), format!("b{i}"), format!("x{i}")];
        let labels = [same, other, same];
        for (id, c) in ids.iter().zip(labels) {
            embeddings.insert(id.clone(), point(c * separation));
            segments.push(Segment::new(id, if c > 0.0 { "p" } else { "q" }, placeholder()));
        }
        let [a, b, x] = ids;
        triplets.push(AbxTriplet::new(a, b, x, ContrastMeta::None));
    }
    let set = TripletSet::new(segments, triplets)?;
    Ok(abx_error_rate(&set, &embeddings)?.error_rate)
}

fn js_err(e: awe_core::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen(js_name = mfccOfTone)]
pub fn mfcc_of_tone(freq_hz: f64, duration_ms: f64, sample_rate: u32) -> Result<Mfcc, JsValue> {
    tone_mfcc(freq_hz, duration_ms, sample_rate).map_err(js_err)
}

#[wasm_bindgen(js_name = phoneEditDistance)]
pub fn phone_edit_distance_js(a: &str, b: &str) -> usize {
    phone_distance(a, b)
}

#[wasm_bindgen(js_name = abxErrorForSeparation)]
pub fn abx_error_for_separation(separation: f64, n_triplets: usize, seed: u32) -> Result<f64, JsValue> {
    cluster_abx_error(separation, n_triplets, seed as u64).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tone_has_expected_shape() {
        let m = tone_mfcc(440.0, 500.0, 16000).unwrap();
        assert_eq!(m.frames, 48);
        assert_eq!(m.values.len(), 48 * 13);
        assert!(tone_mfcc(440.0, 10.0, 16000).is_err());
    }

    #[test]
    fn moloko_molotok() {
        assert_eq!(phone_distance("m @ l 2 k o", "m @ l 2 t o k"), 2);
        assert_eq!(phone_distance("", "a b"), 2);
    }

    #[test]
    fn separation_lowers_error() {
        let chance = cluster_abx_error(0.0, 4000, 1).unwrap();
        let far = cluster_abx_error(6.0, 4000, 1).unwrap();
        assert!((chance - 50.0).abs() < 3.0, "{chance}");
        assert!(far < 5.0, "{far}");
    }
}

//! MFCC extraction with fixed, fully deterministic settings.
//!
//! Pipeline per 25 ms frame (10 ms shift): raw log-energy, per-frame
//! pre-emphasis (0.97), Hamming window, zero-padded FFT power spectrum,
//! 23 triangular mel filters from 20 Hz to min(7800, rate/2 - 100) Hz,
//! natural log floored at 1e-10, orthonormal DCT-II keeping 13
//! coefficients, sinusoidal liftering (22), and finally the log-energy
//! written over coefficient 0. No dither, no mean normalization.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{FeatureMatrix, Waveform};
use crate::error::{Error, Result};

pub const NUM_CEPS: usize = 13;
pub const FRAME_LENGTH_MS: f64 = 25.0;
pub const FRAME_SHIFT_MS: f64 = 10.0;

const LOG_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub frame_length_ms: f64,
    pub frame_shift_ms: f64,
    pub pre_emphasis: f64,
    pub num_mel_bins: usize,
    pub low_freq: f64,
    pub high_freq: f64,
    pub num_ceps: usize,
    pub cepstral_lifter: f64,
}

impl MfccConfig {
    pub fn for_rate(sample_rate: u32) -> Result<Self> {
        if sample_rate != 8000 && sample_rate != 16000 {
            return Err(Error::UnsupportedSampleRate(sample_rate));
        }
        Ok(Self {
            sample_rate,
            frame_length_ms: FRAME_LENGTH_MS,
            frame_shift_ms: FRAME_SHIFT_MS,
            pre_emphasis: 0.97,
            num_mel_bins: 23,
            low_freq: 20.0,
            high_freq: 7800f64.min(sample_rate as f64 / 2.0 - 100.0),
            num_ceps: NUM_CEPS,
            cepstral_lifter: 22.0,
        })
    }

    fn window_samples(&self) -> usize {
        ms_to_samples(self.frame_length_ms, self.sample_rate)
    }

    fn shift_samples(&self) -> usize {
        ms_to_samples(self.frame_shift_ms, self.sample_rate)
    }
}

fn ms_to_samples(ms: f64, rate: u32) -> usize {
    (ms * rate as f64 / 1000.0).round() as usize
}

/// Closed-form frame count; `None` when the signal is shorter than a window.
pub fn frame_count(num_samples: usize, window: usize, shift: usize) -> Option<usize> {
    (num_samples >= window && window > 0 && shift > 0).then(|| (num_samples - window) / shift + 1)
}

fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

fn pre_emphasize(block: &mut [f64], coeff: f64) {
    for i in (1..block.len()).rev() {
        block[i] -= coeff * block[i - 1];
    }
    if let Some(first) = block.first_mut() {
        *first -= coeff * *first;
    }
}

/// Cut a waveform into pre-emphasized, Hamming-windowed blocks. Frames that
/// would run past the end of the signal are dropped.
pub fn frame_signal(w: &Waveform, frame_length_ms: f64, frame_shift_ms: f64) -> Result<Vec<Vec<f64>>> {
    let window = ms_to_samples(frame_length_ms, w.sample_rate);
    let shift = ms_to_samples(frame_shift_ms, w.sample_rate);
    if window == 0 || shift == 0 {
        return Err(Error::invalid("frame length and shift must cover at least one sample"));
    }
    let n = frame_count(w.samples.len(), window, shift).ok_or(Error::SignalTooShort {
        samples: w.samples.len(),
        window,
    })?;
    let win = hamming(window);
    Ok((0..n)
        .map(|f| {
            let mut block = w.samples[f * shift..f * shift + window].to_vec();
            pre_emphasize(&mut block, 0.97);
            block.iter_mut().zip(&win).for_each(|(s, h)| *s *= h);
            block
        })
        .collect())
}

fn mel(hz: f64) -> f64 {
    1127.0 * (1.0 + hz / 700.0).ln()
}

/// Reusable extractor; holds the FFT plan, window, filterbank and lifter.
pub struct MfccExtractor {
    config: MfccConfig,
    fft: Arc<dyn Fft<f64>>,
    fft_len: usize,
    window: Vec<f64>,
    /// (first bin, weights) per mel filter.
    filters: Vec<(usize, Vec<f64>)>,
    lifter: Vec<f64>,
}

impl MfccExtractor {
    pub fn new(config: MfccConfig) -> Self {
        let window_len = config.window_samples();
        let fft_len = window_len.next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(fft_len);

        let bin_hz = config.sample_rate as f64 / fft_len as f64;
        let (mel_lo, mel_hi) = (mel(config.low_freq), mel(config.high_freq));
        let step = (mel_hi - mel_lo) / (config.num_mel_bins + 1) as f64;
        let filters = (0..config.num_mel_bins)
            .map(|m| {
                let left = mel_lo + m as f64 * step;
                let center = left + step;
                let right = center + step;
                let weights: Vec<(usize, f64)> = (0..=fft_len / 2)
                    .filter_map(|k| {
                        let f = mel(k as f64 * bin_hz);
                        if f <= left || f >= right {
                            None
                        } else if f <= center {
                            Some((k, (f - left) / (center - left)))
                        } else {
                            Some((k, (right - f) / (right - center)))
                        }
                    })
                    .collect();
                let first = weights.first().map_or(0, |w| w.0);
                (first, weights.into_iter().map(|(_, w)| w).collect())
            })
            .collect();

        let lifter = (0..config.num_ceps)
            .map(|i| 1.0 + 0.5 * config.cepstral_lifter * (PI * i as f64 / config.cepstral_lifter).sin())
            .collect();

        Self {
            window: hamming(window_len),
            config,
            fft,
            fft_len,
            filters,
            lifter,
        }
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    pub fn extract(&self, w: &Waveform) -> Result<FeatureMatrix> {
        if w.sample_rate != self.config.sample_rate {
            return Err(Error::invalid(format!(
                "extractor configured for {} Hz, waveform is {} Hz",
                self.config.sample_rate, w.sample_rate
            )));
        }
        let window = self.window.len();
        let shift = self.config.shift_samples();
        let n = frame_count(w.samples.len(), window, shift).ok_or(Error::SignalTooShort {
            samples: w.samples.len(),
            window,
        })?;
        let n_mel = self.config.num_mel_bins;
        let mut out = Vec::with_capacity(n * self.config.num_ceps);
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_len];
        let mut log_mel = vec![0.0; n_mel];
        for f in 0..n {
            let raw = &w.samples[f * shift..f * shift + window];
            let energy = raw.iter().map(|s| s * s).sum::<f64>().max(LOG_FLOOR).ln();

            let mut block = raw.to_vec();
            pre_emphasize(&mut block, self.config.pre_emphasis);
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (i, (s, h)) in block.iter().zip(&self.window).enumerate() {
                buf[i].re = s * h;
            }
            self.fft.process(&mut buf);

            for (slot, (first, weights)) in log_mel.iter_mut().zip(&self.filters) {
                let e: f64 = weights
                    .iter()
                    .enumerate()
                    .map(|(j, wt)| wt * buf[first + j].norm_sqr())
                    .sum();
                *slot = e.max(LOG_FLOOR).ln();
            }

            for (k, lift) in self.lifter.iter().enumerate() {
                let scale = if k == 0 {
                    (1.0 / n_mel as f64).sqrt()
                } else {
                    (2.0 / n_mel as f64).sqrt()
                };
                let c: f64 = log_mel
                    .iter()
                    .enumerate()
                    .map(|(m, v)| v * (PI * k as f64 * (m as f64 + 0.5) / n_mel as f64).cos())
                    .sum();
                out.push(if k == 0 { energy } else { scale * c * lift });
            }
        }
        FeatureMatrix::new(out, self.config.num_ceps)
    }
}

/// 13 MFCCs per 25 ms frame (10 ms shift) with coefficient 0 replaced by the
/// raw log-energy. Only 8 kHz and 16 kHz audio is accepted.
pub fn compute_mfcc(w: &Waveform) -> Result<FeatureMatrix> {
    MfccExtractor::new(MfccConfig::for_rate(w.sample_rate)?).extract(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, n: usize, rate: u32) -> Waveform {
        let s = (0..n)
            .map(|i| 0.5 * (2.0 * PI * freq * i as f64 / rate as f64).sin())
            .collect();
        Waveform::new(s, rate).unwrap()
    }

    #[test]
    fn frame_counts_at_boundaries() {
        let w = sine(440.0, 16000, 16000);
        assert_eq!(frame_signal(&w, 25.0, 10.0).unwrap().len(), 98);
        let w = sine(440.0, 400, 16000);
        assert_eq!(frame_signal(&w, 25.0, 10.0).unwrap().len(), 1);
        let w = sine(440.0, 399, 16000);
        assert!(matches!(
            frame_signal(&w, 25.0, 10.0),
            Err(Error::SignalTooShort { samples: 399, window: 400 })
        ));
    }

    #[test]
    fn blocks_are_window_sized() {
        let w = sine(300.0, 8000, 8000);
        let blocks = frame_signal(&w, 25.0, 10.0).unwrap();
        assert!(blocks.iter().all(|b| b.len() == 200));
    }

    #[test]
    fn unsupported_rate_is_named() {
        let w = sine(440.0, 44100, 44100);
        let err = compute_mfcc(&w).unwrap_err();
        assert!(matches!(err, Error::UnsupportedSampleRate(44100)));
        assert!(err.to_string().contains("8000") && err.to_string().contains("16000"));
    }

    #[test]
    fn silence_gives_identical_frames() {
        let w = Waveform::new(vec![0.0; 4000], 16000).unwrap();
        let m = compute_mfcc(&w).unwrap();
        let first = m.row(0).to_vec();
        assert!(m.rows().all(|r| r == first.as_slice()));
    }

    #[test]
    fn shape_is_frames_by_13() {
        let m = compute_mfcc(&sine(1000.0, 16000, 16000)).unwrap();
        assert_eq!((m.frames(), m.dim()), (98, 13));
        let m = compute_mfcc(&sine(1000.0, 8000, 8000)).unwrap();
        assert_eq!((m.frames(), m.dim()), (98, 13));
    }

    #[test]
    fn reversed_noise_has_same_frame_count() {
        use rand::Rng;
        let mut rng = crate::seeded_rng(3, 0);
        let s: Vec<f64> = (0..12345).map(|_| rng.random_range(-0.5..0.5)).collect();
        let mut r = s.clone();
        r.reverse();
        let a = compute_mfcc(&Waveform::new(s, 16000).unwrap()).unwrap();
        let b = compute_mfcc(&Waveform::new(r, 16000).unwrap()).unwrap();
        assert_eq!(a.frames(), b.frames());
    }
}

use std::path::Path;

use crate::error::{Error, Result};

/// Mono audio with amplitudes in [-1, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::invalid("waveform has no samples"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("waveform".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / self.sample_rate as f64
    }

    /// Samples between `start_ms` and `end_ms`, clamped to the signal.
    pub fn slice_ms(&self, start_ms: f64, end_ms: f64) -> Result<Self> {
        if end_ms <= start_ms {
            return Err(Error::invalid(format!(
                "segment end {end_ms} ms is not after start {start_ms} ms"
            )));
        }
        let to_idx = |ms: f64| ((ms * self.sample_rate as f64 / 1000.0).round() as usize).min(self.samples.len());
        let (a, b) = (to_idx(start_ms), to_idx(end_ms));
        Self::new(self.samples[a..b].to_vec(), self.sample_rate)
    }
}

/// Read a 16-bit signed PCM mono WAV file.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::Format {
            kind: "WAV",
            message: format!(
                "{}: expected 16-bit PCM mono, found {} channel(s) of {}-bit {:?}",
                path.display(),
                spec.channels,
                spec.bits_per_sample,
                spec.sample_format
            ),
        });
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Waveform::new(samples, spec.sample_rate)
}

pub fn write_wav(path: &Path, wave: &Waveform) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for s in &wave.samples {
        writer.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16)?;
    }
    writer.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wav_round_trip_quantizes_to_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let w = Waveform::new(vec![0.0, 0.5, -0.5, 0.25], 16000).unwrap();
        write_wav(&path, &w).unwrap();
        let r = read_wav(&path).unwrap();
        assert_eq!(r.sample_rate, 16000);
        for (a, b) in r.samples.iter().zip(&w.samples) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn slicing_by_milliseconds() {
        let w = Waveform::new(vec![0.1; 16000], 16000).unwrap();
        assert_eq!(w.slice_ms(100.0, 125.0).unwrap().samples.len(), 400);
        assert!(w.slice_ms(10.0, 10.0).is_err());
    }
}

use std::fs;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

const AWEF_MAGIC: &[u8; 4] = b"AWEF";

/// Time-major sequence of acoustic frames, stored row-major.
///
/// Always holds at least one frame and only finite values.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    dim: usize,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be positive"));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not form whole frames of dimension {dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature matrix frame {} component {}",
                i / dim,
                i % dim
            )));
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::invalid("feature matrix needs at least one frame"))?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for (t, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "frame {t} has {} components, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(data, dim)
    }

    pub fn frames(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copy of the frames in `range`.
    pub fn slice_frames(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.frames() {
            return Err(Error::invalid(format!(
                "frame range {range:?} outside 0..{}",
                self.frames()
            )));
        }
        Ok(Self {
            data: self.data[range.start * self.dim..range.end * self.dim].to_vec(),
            dim: self.dim,
        })
    }

    pub fn mean_frame(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.frames() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Concatenate matrices of equal dimension along time.
    pub fn concat(parts: &[FeatureMatrix]) -> Result<Self> {
        let dim = parts
            .first()
            .map(|p| p.dim)
            .ok_or_else(|| Error::invalid("nothing to concatenate"))?;
        let mut data = Vec::new();
        for p in parts {
            if p.dim != dim {
                return Err(Error::ShapeMismatch("concatenating different dims".into()));
            }
            data.extend_from_slice(&p.data);
        }
        Ok(Self { data, dim })
    }

    /// Serialize to the AWEF container: magic, u32 frames, u32 dim, then
    /// row-major little-endian f32 values.
    pub fn to_awef_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.data.len());
        out.extend_from_slice(AWEF_MAGIC);
        out.extend_from_slice(&(self.frames() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_awef_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |message: String| Error::Format {
            kind: "AWEF",
            message,
        };
        if bytes.len() < 12 || &bytes[..4] != AWEF_MAGIC {
            return Err(bad("missing AWEF magic".into()));
        }
        let frames = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let expected = 12 + 4 * frames * dim;
        if bytes.len() != expected {
            return Err(bad(format!(
                "{frames}x{dim} matrix needs {expected} bytes, found {}",
                bytes.len()
            )));
        }
        let data = bytes[12..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Self::new(data, dim)
    }
}

pub fn write_awef(path: &Path, features: &FeatureMatrix) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&features.to_awef_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn read_awef(path: &Path) -> Result<FeatureMatrix> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    FeatureMatrix::from_awef_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(FeatureMatrix::new(vec![1.0; 5], 2).is_err());
        assert!(FeatureMatrix::new(vec![], 2).is_err());
        assert!(FeatureMatrix::new(vec![1.0, f64::NAN], 2).is_err());
        assert!(FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn awef_layout_is_bit_exact() {
        let m = FeatureMatrix::from_rows(&[[1.0, -2.0], [0.5, 4.0]]).unwrap();
        let bytes = m.to_awef_bytes();
        assert_eq!(&bytes[..4], b"AWEF");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[16..20], &(-2.0f32).to_le_bytes());
        assert_eq!(bytes.len(), 12 + 16);
        assert_eq!(FeatureMatrix::from_awef_bytes(&bytes).unwrap(), m);
    }

    #[test]
    fn awef_rejects_truncation() {
        let m = FeatureMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let bytes = m.to_awef_bytes();
        assert!(FeatureMatrix::from_awef_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(FeatureMatrix::from_awef_bytes(b"XXXX\0\0\0\0\0\0\0\0").is_err());
    }

    #[test]
    fn slicing_and_mean() {
        let m = FeatureMatrix::from_rows(&[[0.0], [2.0], [4.0]]).unwrap();
        assert_eq!(m.slice_frames(1..3).unwrap().as_slice(), &[2.0, 4.0]);
        assert!(m.slice_frames(2..2).is_err());
        assert!(m.slice_frames(0..4).is_err());
        assert_eq!(m.mean_frame(), vec![2.0]);
    }
}

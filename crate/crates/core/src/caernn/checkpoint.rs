//! `AWEM` model container, little-endian throughout:
//!
//! ```text
//! "AWEM" | u32 version (1) | u32 input_dim | u32 hidden | u32 layers
//! | u32 embedding_dim | u64 adam step | u32 tensor count
//! then per tensor: u32 name length | name (UTF-8) | u32 rows | u32 cols
//! | rows*cols f32 row-major
//! ```
//!
//! Parameter tensors come first in layout order, followed by the Adam
//! moments as `adam.m/<name>` and `adam.v/<name>`.

use std::path::Path;

use super::{AdamState, Architecture, ModelParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"AWEM";
const VERSION: u32 = 1;

fn bad(message: impl Into<String>) -> Error {
    Error::Format { kind: "AWEM", message: message.into() }
}

pub fn checkpoint_bytes(p: &ModelParams) -> Vec<u8> {
    let a = p.architecture();
    let specs = p.tensor_specs();
    let mut out = Vec::with_capacity(64 + 12 * p.num_params());
    out.extend_from_slice(MAGIC);
    for v in [VERSION, a.input_dim as u32, a.hidden as u32, a.layers as u32, a.embedding_dim as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&p.optimizer.step.to_le_bytes());
    out.extend_from_slice(&(3 * specs.len() as u32).to_le_bytes());
    for (prefix, source) in [("", p.values()), ("adam.m/", &p.optimizer.m[..]), ("adam.v/", &p.optimizer.v[..])] {
        for t in &specs {
            let name = format!("{prefix}{}", t.name);
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rows as u32).to_le_bytes());
            out.extend_from_slice(&(t.cols as u32).to_le_bytes());
            for v in &source[t.range()] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| bad("truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<ModelParams> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(bad("missing AWEM magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let arch = Architecture {
        input_dim: r.u32()? as usize,
        hidden: r.u32()? as usize,
        layers: r.u32()? as usize,
        embedding_dim: r.u32()? as usize,
    };
    arch.validate().map_err(|e| bad(e.to_string()))?;
    let step = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
    let count = r.u32()? as usize;
    let template = ModelParams::<f32>::init(arch, 0)?;
    let specs = template.tensor_specs();
    if count != 3 * specs.len() {
        return Err(bad(format!("expected {} tensors, found {count}", 3 * specs.len())));
    }
    let n = template.num_params();
    let mut values = vec![0f32; n];
    let mut m = vec![0f32; n];
    let mut v = vec![0f32; n];
    for (prefix, target) in [("", &mut values), ("adam.m/", &mut m), ("adam.v/", &mut v)] {
        for t in &specs {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?).map_err(|_| bad("tensor name is not UTF-8"))?;
            let want = format!("{prefix}{}", t.name);
            if name != want {
                return Err(bad(format!("expected tensor `{want}`, found `{name}`")));
            }
            let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
            if (rows, cols) != (t.rows, t.cols) {
                return Err(bad(format!("tensor `{name}` is {rows}x{cols}, architecture needs {}x{}", t.rows, t.cols)));
            }
            let data = r.take(4 * t.len())?;
            for (dst, c) in target[t.range()].iter_mut().zip(data.chunks_exact(4)) {
                *dst = f32::from_le_bytes(c.try_into().unwrap());
            }
        }
    }
    if r.pos != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    ModelParams::from_parts(arch, values, AdamState { m, v, step })
}

pub fn write_checkpoint(path: &Path, p: &ModelParams) -> Result<()> {
    let tmp = path.with_extension("awem.partial");
    std::fs::write(&tmp, checkpoint_bytes(p)).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<ModelParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}

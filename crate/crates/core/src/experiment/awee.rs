//! `AWEE` embedding container: `"AWEE" | u32 count | u32 dim | count*dim
//! f32` little-endian, with ids in a JSON-lines sidecar (`<file>.ids.jsonl`,
//! one `{"id": ...}` per row, in order).

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::caernn::Embedding;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct IdLine {
    id: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ids.jsonl");
    PathBuf::from(s)
}

fn bad(message: impl Into<String>) -> Error {
    Error::Format { kind: "AWEE", message: message.into() }
}

pub fn write_embeddings(path: &Path, ids: &[String], embeddings: &[Embedding]) -> Result<()> {
    if ids.len() != embeddings.len() {
        return Err(Error::ShapeMismatch(format!("{} ids for {} embeddings", ids.len(), embeddings.len())));
    }
    let dim = embeddings.first().map_or(0, Embedding::dim);
    if embeddings.iter().any(|e| e.dim() != dim) {
        return Err(Error::ShapeMismatch("embeddings differ in dimension".into()));
    }
    let mut buf = Vec::with_capacity(12 + 4 * dim * embeddings.len());
    buf.extend_from_slice(b"AWEE");
    buf.extend_from_slice(&(embeddings.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(dim as u32).to_le_bytes());
    for e in embeddings {
        for v in e.values() {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&side).map_err(|e| Error::io(&side, e))?);
    for id in ids {
        serde_json::to_writer(&mut f, &IdLine { id: id.clone() })?;
        f.write_all(b"\n").map_err(|e| Error::io(&side, e))?;
    }
    f.flush().map_err(|e| Error::io(&side, e))
}

pub fn read_embeddings(path: &Path) -> Result<(Vec<String>, Vec<Embedding>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 || &bytes[..4] != b"AWEE" {
        return Err(bad("missing AWEE header"));
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() != 12 + 4 * count * dim {
        return Err(bad(format!("{count}x{dim} rows need {} bytes, file has {}", 12 + 4 * count * dim, bytes.len())));
    }
    let embeddings = bytes[12..]
        .chunks_exact(4 * dim.max(1))
        .take(count)
        .map(|row| Embedding(row.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect()))
        .collect::<Vec<_>>();
    let side = sidecar_path(path);
    let f = std::fs::File::open(&side).map_err(|e| Error::io(&side, e))?;
    let ids = std::io::BufReader::new(f)
        .lines()
        .map(|l| {
            let l = l.map_err(|e| Error::io(&side, e))?;
            Ok(serde_json::from_str::<IdLine>(&l)?.id)
        })
        .collect::<Result<Vec<_>>>()?;
    if ids.len() != count {
        return Err(bad(format!("sidecar has {} ids for {count} rows", ids.len())));
    }
    Ok((ids, embeddings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.awee");
        let ids = vec!["x".to_string(), "y".to_string()];
        let es = vec![Embedding(vec![1.0, -0.5, 2.0]), Embedding(vec![0.25, 0.0, 3.0])];
        write_embeddings(&p, &ids, &es).unwrap();
        assert_eq!(read_embeddings(&p).unwrap(), (ids, es));
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 12 + 24);
        assert!(sidecar_path(&p).ends_with("e.awee.ids.jsonl"));
    }
}

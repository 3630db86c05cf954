//! Versioned column container used for episodes, datasets, rollout logs and
//! policies.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes   "SCRIBE\0\x01"
//! kind     8 bytes   ASCII, zero padded ("episode", "rollout", ...)
//! hlen     u64       length of the JSON header
//! header   hlen      UTF-8 JSON: {"meta": <record metadata>, "columns": [{"name", "len"}]}
//! data               every column as f64 little-endian, in header order
//! ```

use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: [u8; 8] = *b"SCRIBE\0\x01";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ColumnInfo {
    pub name: String,
    pub len: usize,
}

#[derive(Serialize, Deserialize)]
struct Header<M> {
    meta: M,
    columns: Vec<ColumnInfo>,
}

/// A decoded container: typed metadata plus named columns.
#[derive(Clone, Debug)]
pub struct Container<M> {
    pub kind: String,
    pub meta: M,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl<M> Container<M> {
    pub fn new(kind: &str, meta: M) -> Self {
        Container {
            kind: kind.to_string(),
            meta,
            columns: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, data: Vec<f64>) {
        self.columns.push((name.into(), data));
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| d.as_slice())
    }

    /// Like [`Container::column`] but a missing column is a format error.
    pub fn require(&self, name: &str, path: &Path) -> Result<&[f64]> {
        self.column(name).ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            reason: format!("missing column `{name}`"),
        })
    }
}

fn kind_bytes(kind: &str) -> Result<[u8; 8]> {
    let b = kind.as_bytes();
    if b.len() > 8 || !kind.is_ascii() {
        return Err(Error::arg(format!("container kind `{kind}` must be ≤ 8 ASCII bytes")));
    }
    let mut out = [0u8; 8];
    out[..b.len()].copy_from_slice(b);
    Ok(out)
}

impl<M: Serialize> Container<M> {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            meta: &self.meta,
            columns: self
                .columns
                .iter()
                .map(|(name, d)| ColumnInfo {
                    name: name.clone(),
                    len: d.len(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::arg(e.to_string()))?;
        let total: usize = self.columns.iter().map(|(_, d)| d.len()).sum();
        let mut out = Vec::with_capacity(24 + json.len() + 8 * total);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&kind_bytes(&self.kind)?);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, d) in &self.columns {
            for v in d {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }
}

impl<M: DeserializeOwned> Container<M> {
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        if bytes.len() < 24 || bytes[..8] != MAGIC {
            return Err(bad("bad magic or truncated header"));
        }
        let kind_raw = &bytes[8..16];
        let kind: String = kind_raw
            .iter()
            .take_while(|&&b| b != 0)
            .map(|&b| b as char)
            .collect();
        let hlen = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        let body = &bytes[24..];
        if body.len() < hlen {
            return Err(bad("truncated header"));
        }
        let header: Header<M> =
            serde_json::from_slice(&body[..hlen]).map_err(|e| bad(&e.to_string()))?;
        let mut data = &body[hlen..];
        let mut columns = Vec::with_capacity(header.columns.len());
        for c in header.columns {
            let n = c.len * 8;
            if data.len() < n {
                return Err(bad(&format!("column `{}` truncated", c.name)));
            }
            let vals = data[..n]
                .chunks_exact(8)
                .map(|ch| f64::from_le_bytes(ch.try_into().unwrap()))
                .collect();
            data = &data[n..];
            columns.push((c.name, vals));
        }
        if !data.is_empty() {
            return Err(bad("trailing bytes after last column"));
        }
        Ok(Container {
            kind,
            meta: header.meta,
            columns,
        })
    }

    pub fn read(path: &Path, expected_kind: &str) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let c = Self::from_bytes(&bytes, path)?;
        if c.kind != expected_kind {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("expected a `{expected_kind}` container, found `{}`", c.kind),
            });
        }
        Ok(c)
    }
}

/// Flatten fixed-width rows into one column-major block per field, e.g. an
/// `n × 9` state series becomes nine columns of length `n`.
pub fn rows_to_columns<const W: usize>(rows: &[[f64; W]]) -> Vec<Vec<f64>> {
    (0..W).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

pub fn columns_to_rows<const W: usize>(cols: &[&[f64]]) -> Option<Vec<[f64; W]>> {
    if cols.len() != W {
        return None;
    }
    let n = cols.first().map_or(0, |c| c.len());
    if cols.iter().any(|c| c.len() != n) {
        return None;
    }
    Some((0..n).map(|i| std::array::from_fn(|j| cols[j][i])).collect())
}

/// Hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[derive(Serialize, Deserialize, Debug, PartialEq, Clone)]
    struct Meta {
        id: String,
        dt: f64,
    }

    proptest! {
        #[test]
        fn bytes_round_trip(a in prop::collection::vec(-1e6f64..1e6, 0..40),
                            b in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..10)) {
            let mut c = Container::new("episode", Meta { id: "x".into(), dt: 0.002 });
            c.push("a", a.clone());
            c.push("b", b.clone());
            let bytes = c.to_bytes().unwrap();
            let back: Container<Meta> = Container::from_bytes(&bytes, Path::new("mem")).unwrap();
            prop_assert_eq!(&back.kind, "episode");
            prop_assert_eq!(&back.meta, &c.meta);
            prop_assert_eq!(back.column("a").unwrap(), &a[..]);
            prop_assert_eq!(back.column("b").unwrap(), &b[..]);
        }
    }

    #[test]
    fn rejects_wrong_kind_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        let mut c = Container::new("rollout", Meta { id: "r".into(), dt: 0.02 });
        c.push("v", vec![1.0, 2.0]);
        c.write(&p).unwrap();
        assert!(Container::<Meta>::read(&p, "episode").is_err());
        let bytes = std::fs::read(&p).unwrap();
        assert!(Container::<Meta>::from_bytes(&bytes[..bytes.len() - 3], &p).is_err());
        assert!(Container::<Meta>::from_bytes(b"nonsense-nonsense-nonsense", &p).is_err());
    }

    #[test]
    fn kind_longer_than_eight_bytes_is_rejected() {
        let c = Container::new("far-too-long", Meta { id: String::new(), dt: 0.0 });
        assert!(c.to_bytes().is_err());
    }

    #[test]
    fn rows_columns_inverse() {
        let rows = vec![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let cols = rows_to_columns(&rows);
        assert_eq!(cols[1], vec![2.0, 4.0, 6.0]);
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        assert_eq!(columns_to_rows::<2>(&refs).unwrap(), rows);
    }
}

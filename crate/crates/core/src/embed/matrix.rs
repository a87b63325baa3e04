use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embed::{Direction, EmbedConfig};
use crate::error::{Error, Result};

/// Sidecar metadata stored next to an embedding file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedMeta {
    pub kind: String,
    pub direction: Option<Direction>,
    pub config: Option<EmbedConfig>,
    pub dim: usize,
    pub count: usize,
}

/// Key -> dense vector, all of one length, finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    vectors: BTreeMap<String, Vec<f32>>,
    pub kind: String,
    pub direction: Option<Direction>,
    pub config: Option<EmbedConfig>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, kind: &str) -> Self {
        EmbeddingMatrix {
            dim,
            vectors: BTreeMap::new(),
            kind: kind.to_string(),
            direction: None,
            config: None,
        }
    }

    pub fn insert(&mut self, key: &str, v: Vec<f32>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::data(format!("vector for {key:?} has length {}, expected {}", v.len(), self.dim)));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::data(format!("vector for {key:?} has a non-finite entry")));
        }
        self.vectors.insert(key.to_string(), v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&[f32]> {
        self.vectors.get(key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// One row per id; ids without a vector get zeros and land in the
    /// returned flag set.
    pub fn aligned(&self, ids: &[&str]) -> (Vec<Vec<f64>>, BTreeSet<String>) {
        let mut flagged = BTreeSet::new();
        let rows = ids
            .iter()
            .map(|id| match self.get(id) {
                Some(v) => v.iter().map(|&x| x as f64).collect(),
                None => {
                    flagged.insert(id.to_string());
                    vec![0.0; self.dim]
                }
            })
            .collect();
        (rows, flagged)
    }

    pub fn meta(&self) -> EmbedMeta {
        EmbedMeta {
            kind: self.kind.clone(),
            direction: self.direction,
            config: self.config.clone(),
            dim: self.dim,
            count: self.len(),
        }
    }

    /// `key v1 ... vd` per line, single spaces, keys in ascending order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.vectors {
            out.push_str(k);
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    /// Parse the text format. The dimension is taken from the first row and
    /// enforced on the rest.
    pub fn parse_text(text: &str, kind: &str) -> Result<Self> {
        let mut m: Option<EmbeddingMatrix> = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Malformed {
                line: i as u64 + 1,
                reason,
            };
            let mut parts = line.split(' ');
            let key = parts.next().unwrap_or_default();
            let v = parts
                .map(|p| p.parse::<f32>().map_err(|_| bad(format!("non-numeric component {p:?}"))))
                .collect::<Result<Vec<f32>>>()?;
            if key.is_empty() || v.is_empty() {
                return Err(bad("expected a key followed by at least one component".into()));
            }
            let m = m.get_or_insert_with(|| EmbeddingMatrix::new(v.len(), kind));
            if v.len() != m.dim {
                return Err(bad(format!("ragged row: {} components, expected {}", v.len(), m.dim)));
            }
            if m.vectors.contains_key(key) {
                return Err(bad(format!("duplicate key {key:?}")));
            }
            m.insert(key, v).map_err(|e| bad(e.to_string()))?;
        }
        m.ok_or_else(|| Error::data("embedding file has no rows"))
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))?;
        let side = Self::sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.meta()).expect("meta serializes");
        std::fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))
    }

    /// Load a vector file, applying its sidecar metadata when present.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                what: "embedding".into(),
                path: path.to_path_buf(),
            });
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m = Self::parse_text(&text, "pretrained")?;
        let side = Self::sidecar_path(path);
        if side.exists() {
            let raw = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
            let meta: EmbedMeta = serde_json::from_str(&raw)
                .map_err(|e| Error::data(format!("{}: {e}", side.display())))?;
            if meta.dim != m.dim || meta.count != m.len() {
                return Err(Error::data(format!("{}: metadata does not match vectors", side.display())));
            }
            m.kind = meta.kind;
            m.direction = meta.direction;
            m.config = meta.config;
        }
        Ok(m)
    }
}

/// Load a pretrained word-vector file in the text format.
pub fn load_pretrained_vectors(path: &Path) -> Result<EmbeddingMatrix> {
    EmbeddingMatrix::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_lines() {
        let m = EmbeddingMatrix::parse_text("a 1 2 3\nb 0.5 -1 2e-3\n", "t").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.dim(), 3);
        assert_eq!(m.get("b").unwrap(), &[0.5, -1.0, 0.002]);
    }

    #[test]
    fn ragged_and_garbage_rows() {
        let e = EmbeddingMatrix::parse_text("a 1 2 3\nb 1 2\n", "t").unwrap_err();
        assert!(matches!(e, Error::Malformed { line: 2, .. }), "{e}");
        let e = EmbeddingMatrix::parse_text("a 1 x 3\n", "t").unwrap_err();
        assert!(matches!(e, Error::Malformed { line: 1, .. }), "{e}");
        assert!(EmbeddingMatrix::parse_text("", "t").is_err());
    }

    #[test]
    fn round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.vec");
        let mut m = EmbeddingMatrix::new(2, "micro");
        m.direction = Some(Direction::CustomerDocs);
        m.insert("r1", vec![0.1, -3.25e-7]).unwrap();
        m.insert("r0", vec![1.0 / 3.0, 7.0]).unwrap();
        m.save(&path).unwrap();
        let back = EmbeddingMatrix::load(&path).unwrap();
        assert_eq!(back, m);
        assert!(std::fs::read_to_string(path).unwrap().starts_with("r0 "));
    }

    #[test]
    fn alignment_flags_missing() {
        let mut m = EmbeddingMatrix::new(2, "t");
        m.insert("a", vec![1.0, 2.0]).unwrap();
        let (rows, flags) = m.aligned(&["a", "z"]);
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![0.0, 0.0]]);
        assert_eq!(flags.into_iter().collect::<Vec<_>>(), vec!["z".to_string()]);
    }
}

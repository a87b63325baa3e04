use std::fmt::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::seed::sha256_hex;

/// Key-value record of one stage run: inputs and outputs with their sha256,
/// the effective config and a few summary numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub stage: String,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<(String, String)>,
    pub stats: Vec<(String, String)>,
    pub config: Vec<(String, String)>,
    pub duration_ms: u128,
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Flatten a TOML tree into `dotted.key = value` pairs. Arrays of tables
/// get numeric path segments.
pub fn flatten_toml(value: &toml::Value) -> Vec<(String, String)> {
    fn walk(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
        let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => {
                for (k, v) in t {
                    walk(&join(k), v, out);
                }
            }
            toml::Value::Array(a) if a.iter().any(|x| x.is_table()) => {
                for (i, v) in a.iter().enumerate() {
                    walk(&join(&i.to_string()), v, out);
                }
            }
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk("", value, &mut out);
    out
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "stage = {}", self.stage);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "config_sha256 = {}", self.config_sha256);
        let _ = writeln!(out, "duration_ms = {}", self.duration_ms);
        for (k, v) in &self.inputs {
            let _ = writeln!(out, "input.{k} = {v}");
        }
        for (k, v) in &self.outputs {
            let _ = writeln!(out, "output.{k} = {v}");
        }
        for (k, v) in &self.stats {
            let _ = writeln!(out, "stat.{k} = {v}");
        }
        for (k, v) in &self.config {
            let _ = writeln!(out, "config.{k} = {v}");
        }
        out
    }

    /// Look up a key as written by [`to_text`](Self::to_text).
    pub fn parse_value(text: &str, key: &str) -> Option<String> {
        text.lines()
            .filter_map(|l| l.split_once(" = "))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flattening() {
        let v: toml::Value = "a = 1\nb = [1, 2]\n[t]\nx = \"s\"\n[[arr]]\ny = true\n".parse::<toml::Table>().unwrap().into();
        let flat = flatten_toml(&v);
        assert_eq!(
            flat,
            vec![
                ("a".into(), "1".into()),
                ("arr.0.y".into(), "true".into()),
                ("b".into(), "[1, 2]".into()),
                ("t.x".into(), "\"s\"".into()),
            ]
        );
    }

    #[test]
    fn text_lookup() {
        let m = Manifest {
            stage: "label".into(),
            seed: 3,
            outputs: vec![("labels.tsv".into(), "abc".into())],
            ..Manifest::default()
        };
        let text = m.to_text();
        assert_eq!(Manifest::parse_value(&text, "output.labels.tsv").as_deref(), Some("abc"));
        assert_eq!(Manifest::parse_value(&text, "seed").as_deref(), Some("3"));
    }
}

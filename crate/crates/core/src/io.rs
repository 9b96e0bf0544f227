//! File helpers: JSON lines, atomic writes, digests and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Reads a whole file, mapping a missing file to [`Error::MissingInput`].
pub fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

/// Parses one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let content = read_text(path)?;
    parse_jsonl(&content)
}

pub fn parse_jsonl<T: DeserializeOwned>(content: &str) -> Result<Vec<T>> {
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(|e| Error::json("encoding record", e))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::json("encoding json", e))?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary sibling file and renames it into place, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let ctx = |what: &str| format!("{what} {}", tmp.display());
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(ctx("creating"), e))?;
    f.write_all(content)
        .map_err(|e| Error::io(ctx("writing"), e))?;
    f.sync_all().map_err(|e| Error::io(ctx("syncing"), e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming into {}", path.display()), e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(sha256_hex(&bytes))
}

/// Record of one run: what went in, which seeds were used, and the
/// settings. Holds no timestamps, so reruns produce identical bytes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub stage: String,
    /// Input name to sha256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub settings: BTreeMap<String, String>,
    /// Output name to sha256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(stage: &str) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            stage: stage.into(),
            ..Default::default()
        }
    }

    /// Digests a file input under `name`.
    pub fn input(&mut self, name: impl Into<String>, path: &Path) -> Result<()> {
        self.inputs.insert(name.into(), file_digest(path)?);
        Ok(())
    }

    pub fn setting(&mut self, key: impl Into<String>, value: impl ToString) {
        self.settings.insert(key.into(), value.to_string());
    }

    pub fn seed(&mut self, key: impl Into<String>, value: u64) {
        self.seeds.insert(key.into(), value);
    }

    /// Atomically writes `content` to `path` and records its digest.
    pub fn output(&mut self, name: impl Into<String>, path: &Path, content: &[u8]) -> Result<()> {
        write_atomic(path, content)?;
        self.outputs.insert(name.into(), sha256_hex(content));
        Ok(())
    }

    /// Writes the manifest to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, to_pretty_json(self)?.as_bytes())
    }
}

/// `<path>.manifest.json`, the sidecar manifest of a single-output stage.
pub fn sidecar_manifest(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_and_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"abc").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"abc");
        assert_eq!(
            file_digest(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn missing_file_is_missing_input() {
        let err = read_text(Path::new("/nonexistent/x")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn jsonl_round_trip() {
        let items = vec![vec![1, 2], vec![], vec![3]];
        let text = to_jsonl(&items).unwrap();
        assert_eq!(parse_jsonl::<Vec<i32>>(&text).unwrap(), items);
        let err = parse_jsonl::<Vec<i32>>("[1]\n{").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_manifest(Path::new("out/d.jsonl")),
            PathBuf::from("out/d.jsonl.manifest.json")
        );
    }
}

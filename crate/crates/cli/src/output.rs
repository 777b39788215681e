use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::Value;

use crate::config::Params;

/// Output files for one run, named by experiment and config hash.
pub struct Output {
    pub dir: PathBuf,
    pub stem: String,
    pub hash: String,
    pub seed: Option<u64>,
}

impl Output {
    pub fn new(dir: &Path, params: &Params, seed: Option<u64>) -> Self {
        let hash = params.hash();
        let stem = format!("{}-{}", params.experiment(), &hash[..12]);
        Self { dir: dir.to_path_buf(), stem, hash, seed }
    }

    pub fn path(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{ext}", self.stem))
    }

    /// All files of a cached determinant run exist.
    pub fn cached(&self, exts: &[&str]) -> bool {
        exts.iter().all(|ext| self.path(ext).exists())
    }

    /// CSV preceded by a `#` provenance line; `body` starts with the header row.
    pub fn write_csv(&self, body: &str) -> Result<PathBuf> {
        let mut text = format!("# config_hash={}", self.hash);
        if let Some(seed) = self.seed {
            text.push_str(&format!(" seed={seed}"));
        }
        text.push('\n');
        text.push_str(body);
        let path = self.path("csv");
        atomic_write(&path, text.as_bytes())?;
        Ok(path)
    }

    /// JSON report with `config_hash` and `seed` added at the top level.
    pub fn write_json(&self, mut report: Value) -> Result<PathBuf> {
        if let Value::Object(map) = &mut report {
            map.insert("config_hash".into(), Value::String(self.hash.clone()));
            map.insert("seed".into(), self.seed.map_or(Value::Null, Value::from));
        }
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        let path = self.path("json");
        atomic_write(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// Writes to a temporary file in the target directory, then renames it into
/// place, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.txt");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}

//! Output files carry a header comment identifying the run.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use swarch::config::KeyValues;

use crate::error::{usage, CliResult};

/// Everything a run's output depends on: command, effective settings and
/// the digests of its input files.
#[derive(Debug, Clone)]
pub struct Manifest {
    command: String,
    entries: KeyValues,
    seed: Option<u64>,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        Manifest { command: command.to_string(), entries: KeyValues::new(), seed }
    }

    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.set(key, value);
    }

    pub fn extend(&mut self, prefix: &str, kv: &KeyValues) {
        for k in kv.keys() {
            self.entries.set(&format!("{prefix}{k}"), kv.raw(k).unwrap_or_default());
        }
    }

    /// Record the SHA-256 of an input file's contents.
    pub fn input(&mut self, key: &str, path: &Path) -> CliResult<()> {
        let bytes = fs::read(path)?;
        self.entries.set(&format!("input.{key}"), hex(&Sha256::digest(&bytes)));
        Ok(())
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        h.update(b"\n");
        h.update(self.entries.to_canonical_string().as_bytes());
        hex(&h.finalize())
    }

    pub fn header(&self) -> String {
        match self.seed {
            Some(s) => format!("# swarch {} config_hash={} seed={s}\n", self.command, self.hash()),
            None => format!("# swarch {} config_hash={} seed=none\n", self.command, self.hash()),
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Where a command writes: a file, a directory of files, or stdout.
pub struct Sink {
    header: String,
}

impl Sink {
    pub fn new(manifest: &Manifest) -> Self {
        Sink { header: manifest.header() }
    }

    /// Write `body` behind the header to `path`, or to stdout when `None`.
    pub fn emit(&self, path: Option<&Path>, body: &[u8]) -> CliResult<()> {
        let mut buf = Vec::with_capacity(self.header.len() + body.len());
        buf.extend_from_slice(self.header.as_bytes());
        buf.extend_from_slice(body);
        match path {
            Some(p) => fs::write(p, buf)?,
            None => std::io::stdout().lock().write_all(&buf)?,
        }
        Ok(())
    }
}

pub fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if !path.is_file() {
        return usage(format!("{what} {} is not a readable file", path.display()));
    }
    Ok(())
}

/// The output path must have an existing parent and must not be one of
/// the inputs.
pub fn check_output(path: &Path, inputs: &[&Path]) -> CliResult<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return usage(format!("output directory {} does not exist", parent.display()));
    }
    let out = fs::canonicalize(parent)?.join(path.file_name().unwrap_or_default());
    for input in inputs {
        if fs::canonicalize(input).map(|p| p == out).unwrap_or(false) {
            return usage(format!("output {} would overwrite an input", path.display()));
        }
    }
    Ok(())
}

/// Create `dir` if needed and make sure no input lives inside it under
/// one of the output names.
pub fn prepare_dir(dir: &Path, names: &[&str], inputs: &[&Path]) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = names.iter().map(|n| dir.join(n)).collect();
    for p in &paths {
        check_output(p, inputs)?;
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_entries_and_command() {
        let mut a = Manifest::new("price", Some(1));
        a.set("d", 0.2);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.set("d", 0.3);
        assert_ne!(a.hash(), b.hash());
        let c = Manifest { command: "simulate".into(), ..a.clone() };
        assert_ne!(a.hash(), c.hash());
        assert!(a.header().starts_with("# swarch price config_hash="));
        assert!(a.header().trim_end().ends_with("seed=1"));
    }
}

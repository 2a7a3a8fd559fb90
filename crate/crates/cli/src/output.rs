//! In-memory result files, committed to disk in one step with a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Name of the manifest written next to every run's files.
pub const MANIFEST_NAME: &str = "manifest.json";

/// Manifest entry for one written file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory, `/`-separated.
    pub name: String,
    /// Data rows (CSV, header excluded) or 1 for a JSON document.
    pub rows: usize,
    /// Hex SHA-256 of the file bytes.
    pub checksum: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<FileEntry>,
    pub config_echo: serde_json::Value,
    pub engine_version: String,
}

/// CSV table under construction; cells are preformatted strings.
#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }
}

struct Pending {
    entry: FileEntry,
    bytes: Vec<u8>,
}

/// Files produced by a run, held in memory until [`OutputSet::commit`].
#[derive(Default)]
pub struct OutputSet {
    files: Vec<Pending>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_csv(&mut self, name: &str, table: &Table) -> Result<()> {
        self.add_labeled_csv(name, table, None, None)
    }

    pub fn add_labeled_csv(
        &mut self,
        name: &str,
        table: &Table,
        family: Option<&str>,
        label: Option<&str>,
    ) -> Result<()> {
        let bytes = table.to_bytes()?;
        self.push(name, bytes, table.len(), table.columns.clone(), family, label)
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.push(name, bytes, 1, Vec::new(), None, None)
    }

    fn push(
        &mut self,
        name: &str,
        bytes: Vec<u8>,
        rows: usize,
        columns: Vec<String>,
        family: Option<&str>,
        label: Option<&str>,
    ) -> Result<()> {
        anyhow::ensure!(
            name != MANIFEST_NAME && !self.files.iter().any(|f| f.entry.name == name),
            "duplicate output file `{name}`"
        );
        let checksum = format!("{:x}", Sha256::digest(&bytes));
        let entry = FileEntry {
            name: name.to_string(),
            rows,
            checksum,
            columns,
            family: family.map(str::to_string),
            label: label.map(str::to_string),
        };
        self.files.push(Pending { entry, bytes });
        Ok(())
    }

    pub fn entries(&self) -> Vec<FileEntry> {
        self.files.iter().map(|f| f.entry.clone()).collect()
    }

    /// Writes every file plus the manifest into `dir`.
    ///
    /// Files are staged in a temporary directory inside `dir` and renamed
    /// into place only once all of them have been written.
    pub fn commit(self, dir: &Path, config_echo: serde_json::Value) -> Result<Manifest> {
        let manifest =
            Manifest { files: self.entries(), config_echo, engine_version: chronic_roi::ENGINE_VERSION.to_string() };
        let mut manifest_bytes = serde_json::to_vec_pretty(&manifest)?;
        manifest_bytes.push(b'\n');

        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let staging = tempfile::Builder::new()
            .prefix(".staging-")
            .tempdir_in(dir)
            .with_context(|| format!("output directory {} is not writable", dir.display()))?;

        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let all = self.files.iter().map(|f| (f.entry.name.as_str(), &f.bytes));
        for (name, bytes) in all.chain(std::iter::once((MANIFEST_NAME, &manifest_bytes))) {
            let from = staging.path().join(name);
            if let Some(parent) = from.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&from, bytes).with_context(|| format!("cannot write {name}"))?;
            staged.push((from, dir.join(name)));
        }
        for (from, to) in &staged {
            if let Some(parent) = to.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::rename(from, to).with_context(|| format!("cannot move {} into place", to.display()))?;
        }
        Ok(manifest)
    }
}

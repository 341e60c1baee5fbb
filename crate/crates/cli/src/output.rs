//! Result files, written atomically into the run directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::Result;

pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        // fail early on read-only targets
        NamedTempFile::new_in(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn commit(&mut self, name: &str, fill: impl FnOnce(&mut NamedTempFile) -> Result<()>) -> Result<()> {
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        fill(&mut tmp)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.dir.join(name)).map_err(|e| e.error)?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.commit(name, |f| {
            serde_json::to_writer_pretty(&mut *f, value)?;
            writeln!(f)?;
            Ok(())
        })
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        self.commit(name, |f| {
            let mut w = csv::Writer::from_writer(&mut *f);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
            Ok(())
        })
    }
}

/// Provenance record written next to every run.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_file: Option<String>,
    pub config: Option<&'a C>,
    pub seed: Option<u64>,
    pub status: &'static str,
    pub exit_code: u8,
    pub error: Option<String>,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub wall_seconds: f64,
}

pub const MANIFEST: &str = "manifest.json";

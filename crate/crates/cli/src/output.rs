//! Output files, written to a temporary file next to the target and renamed
//! into place.

use crate::error::{validation, CliResult};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(path).map_err(|e| validation(format!("cannot create output directory {}: {e}", path.display())))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let target = self.0.join(name);
        let fail = |e: std::io::Error| validation(format!("cannot write {}: {e}", target.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.0).map_err(fail)?;
        tmp.write_all(bytes).map_err(fail)?;
        tmp.as_file().sync_all().map_err(fail)?;
        tmp.persist(&target).map_err(|e| fail(e.error))?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| validation(format!("cannot encode {name}: {e}")))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// CSV with a header row; floats use the shortest round-trip form.
    pub fn write_csv<I, R>(&self, name: &str, header: &[&str], rows: I) -> CliResult<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = Cell>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        let enc = |e: csv::Error| validation(format!("cannot encode {name}: {e}"));
        w.write_record(header).map_err(enc)?;
        for row in rows {
            w.write_record(row.into_iter().map(|c| c.to_string())).map_err(enc)?;
        }
        let bytes = w.into_inner().map_err(|e| validation(format!("cannot encode {name}: {e}")))?;
        self.write_bytes(name, &bytes)
    }
}

/// One CSV field.
pub enum Cell {
    F(f64),
    U(u64),
    Empty,
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::F(v) => write!(f, "{v:?}"),
            Cell::U(v) => write!(f, "{v}"),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

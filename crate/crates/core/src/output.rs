//! CSV rendering and atomic file emission.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the configuration bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Provenance line opening every emitted file.
pub fn header_line(hash: &str) -> String {
    format!("# config_sha256={hash},version={VERSION}\n")
}

/// Seventeen significant digits, so values round-trip exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV document: provenance line, column names, rows.
#[derive(Debug, Clone)]
pub struct CsvTable {
    columns: Vec<String>,
    rows: Vec<String>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, index: Option<usize>, values: impl IntoIterator<Item = f64>) {
        let mut fields: Vec<String> = index.map(|i| i.to_string()).into_iter().collect();
        fields.extend(values.into_iter().map(fmt_f64));
        debug_assert_eq!(fields.len(), self.columns.len());
        self.rows.push(fields.join(","));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, hash: &str) -> String {
        let mut out = header_line(hash);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

/// Writes every file to a temporary sibling first and renames only once all
/// of them are on disk, so a failure leaves no partial outputs behind.
pub fn write_atomic(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| Error::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut staged = Vec::with_capacity(files.len());
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (name, contents) in files {
        let target = dir.join(name);
        let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
        let written = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(contents.as_bytes())?;
            f.sync_all()
        });
        if let Err(e) = written {
            let _ = fs::remove_file(&tmp);
            cleanup(&staged);
            return Err(io(&tmp)(e));
        }
        staged.push((tmp, target));
    }
    for (tmp, target) in &staged {
        if let Err(e) = fs::rename(tmp, target) {
            cleanup(&staged);
            return Err(io(target)(e));
        }
    }
    Ok(staged.into_iter().map(|(_, t)| t).collect())
}

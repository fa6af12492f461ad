//! Output files: atomic writes, SHA-256 inventory, CSV number format.
//!
//! Every file is streamed to a hidden temporary next to its final name and
//! renamed into place once complete, so a reader never sees a partial file.
//! Reals in CSV carry 17 significant digits (`{:.16e}`), which round-trips
//! any `f64`; non-finite values print as `nan`, `inf`, `-inf`, and absent
//! optional values as an empty field.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Hashing<W> {
    inner: W,
    hasher: Sha256,
    bytes: u64,
}

impl<W: Write> Write for Hashing<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// A directory receiving one run's files.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root.display(), e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Files written so far, in write order.
    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn remove_if_present(&self, name: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        match fs::remove_file(&path) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => Err(CliError::io(path.display(), e)),
            _ => Ok(()),
        }
    }

    fn stream(
        &self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
    ) -> Result<FileEntry, CliError> {
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp"));
        let fail = |e| CliError::io(target.display(), e);
        let file = File::create(&tmp).map_err(fail)?;
        let mut w = Hashing {
            inner: BufWriter::new(file),
            hasher: Sha256::new(),
            bytes: 0,
        };
        body(&mut w).map_err(fail)?;
        w.flush().map_err(fail)?;
        let Hashing { inner, hasher, bytes } = w;
        inner.into_inner().map_err(|e| fail(e.into_error()))?.sync_all().map_err(fail)?;
        fs::rename(&tmp, &target).map_err(fail)?;
        Ok(FileEntry {
            name: name.to_string(),
            bytes,
            sha256: hex::encode(hasher.finalize()),
        })
    }

    /// Streams a file and records it in the inventory.
    pub fn write_with(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
    ) -> Result<(), CliError> {
        let entry = self.stream(name, body)?;
        self.files.retain(|f| f.name != name);
        self.files.push(entry);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write_with(name, |w| json_body(w, value))
    }

    /// Writes a file that stays out of the inventory (the manifest itself).
    pub fn write_json_untracked<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        self.stream(name, |w| json_body(w, value)).map(|_| ())
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        self.write_with(name, |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(header)?;
            for row in rows {
                csv.write_record(&row)?;
            }
            csv.flush()
        })
    }
}

fn json_body<T: Serialize>(w: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    w.write_all(b"\n")
}

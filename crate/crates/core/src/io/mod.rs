//! Readers and writers for the on-disk sequence layout.
//!
//! Text formats use fixed decimal formatting so that files written on
//! different machines diff cleanly. Binary formats are little-endian, except
//! PGM samples which are big-endian as that format requires.

pub mod bundle;
pub mod config;
pub mod depth;
pub mod embedding;
pub mod masks;
pub mod mot;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, data).map_err(|e| Error::io(path, e))
}

/// Splits text into `(1-based line number, line)` pairs, skipping blank lines.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

//! `masks.txt`: one RLE mask per line,
//! `frame,det_index,kind,width,height,r0 r1 r2 ...`.
//!
//! `kind` is `self` (the detection's own frame) or `back` (propagated into
//! frame `frame - 1`). Runs are written space-separated; the reader also
//! accepts commas between runs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MaskKind {
    SelfMask,
    Back,
}

impl fmt::Display for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskKind::SelfMask => "self",
            MaskKind::Back => "back",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaskStore {
    masks: BTreeMap<(u64, u32, MaskKind), Mask>,
}

impl MaskStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, frame: u64, det_index: u32, kind: MaskKind, mask: Mask) -> Result<()> {
        if frame == 0 {
            return Err(Error::InvalidArgument("frame numbers start at 1".into()));
        }
        if kind == MaskKind::Back && frame == 1 {
            return Err(Error::InvalidArgument(
                "frame 1 has no previous frame for a back mask".into(),
            ));
        }
        self.masks.insert((frame, det_index, kind), mask);
        Ok(())
    }

    pub fn get(&self, frame: u64, det_index: u32, kind: MaskKind) -> Option<&Mask> {
        self.masks.get(&(frame, det_index, kind))
    }

    pub fn self_mask(&self, key: (u64, u32)) -> Option<&Mask> {
        self.get(key.0, key.1, MaskKind::SelfMask)
    }

    pub fn back_mask(&self, key: (u64, u32)) -> Option<&Mask> {
        self.get(key.0, key.1, MaskKind::Back)
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u64, u32, MaskKind), &Mask)> {
        self.masks.iter()
    }
}

fn num<T: std::str::FromStr>(raw: &str, name: &str, source: &str, line: usize) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(source, line, format!("{name}: cannot parse `{raw}`")))
}

pub fn parse_masks(text: &str, source: &str) -> Result<MaskStore> {
    let mut store = MaskStore::new();
    for (n, line) in super::content_lines(text) {
        let parts: Vec<&str> = line.splitn(6, ',').collect();
        if parts.len() != 6 {
            return Err(Error::parse(
                source,
                n,
                "expected frame,det_index,kind,width,height,runs",
            ));
        }
        let frame: u64 = num(parts[0], "frame", source, n)?;
        let det: u32 = num(parts[1], "det_index", source, n)?;
        let kind = match parts[2].trim() {
            "self" => MaskKind::SelfMask,
            "back" => MaskKind::Back,
            other => return Err(Error::parse(source, n, format!("unknown mask kind `{other}`"))),
        };
        let width: u32 = num(parts[3], "width", source, n)?;
        let height: u32 = num(parts[4], "height", source, n)?;
        let runs: Vec<u32> = parts[5]
            .split(|c: char| c == ',' || c.is_ascii_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| num(s, "run", source, n))
            .collect::<Result<_>>()?;
        let mask = Mask::new(width, height, runs).map_err(|e| Error::parse(source, n, e.to_string()))?;
        if store.get(frame, det, kind).is_some() {
            return Err(Error::parse(
                source,
                n,
                format!("duplicate {kind} mask for frame {frame}, detection {det}"),
            ));
        }
        store
            .insert(frame, det, kind, mask)
            .map_err(|e| Error::parse(source, n, e.to_string()))?;
    }
    Ok(store)
}

pub fn format_masks(store: &MaskStore) -> String {
    let mut out = String::new();
    for (&(frame, det, kind), mask) in store.iter() {
        let runs: Vec<String> = mask.runs().iter().map(|r| r.to_string()).collect();
        out.push_str(&format!(
            "{frame},{det},{kind},{},{},{}\n",
            mask.width(),
            mask.height(),
            runs.join(" ")
        ));
    }
    out
}

pub fn read_masks(path: &Path) -> Result<MaskStore> {
    parse_masks(&super::read_text(path)?, &path.display().to_string())
}

pub fn write_masks(path: &Path, store: &MaskStore) -> Result<()> {
    super::write_file(path, format_masks(store))
}

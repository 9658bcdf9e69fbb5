//! A sequence directory: detections plus whichever sidecars are present.
//!
//! ```text
//! seq/
//!   seqinfo.txt        width=..., height=..., frames=...
//!   det.txt            MOT detections
//!   emb.dte            optional embeddings
//!   depth/000001.pgm   optional depth, one file per frame
//!   masks.txt          optional self/back masks
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::DepthMap;
use crate::io::embedding::{self, EmbeddingStore};
use crate::io::masks::{self, MaskKind, MaskStore};
use crate::io::mot::{self, MotRow};
use crate::io::{depth, read_text, write_file};

pub const SEQINFO: &str = "seqinfo.txt";
pub const DETECTIONS: &str = "det.txt";
pub const EMBEDDINGS: &str = "emb.dte";
pub const DEPTH_DIR: &str = "depth";
pub const MASKS: &str = "masks.txt";
pub const GROUND_TRUTH: &str = "gt.txt";

pub fn depth_file_name(frame: u64) -> String {
    format!("{frame:06}.pgm")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeqInfo {
    pub width: u32,
    pub height: u32,
    pub frames: u64,
}

impl SeqInfo {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let (mut width, mut height, mut frames) = (None, None, None);
        for (n, line) in super::content_lines(text) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source, n, "expected key=value"))?;
            let v = v.trim();
            let bad = |_| Error::parse(source, n, format!("cannot parse `{v}`"));
            match k.trim() {
                "width" => width = Some(v.parse::<u32>().map_err(bad)?),
                "height" => height = Some(v.parse::<u32>().map_err(bad)?),
                "frames" => frames = Some(v.parse::<u64>().map_err(bad)?),
                other => return Err(Error::parse(source, n, format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::parse(source, 0, format!("missing key `{k}`"));
        let info = SeqInfo {
            width: width.ok_or_else(|| missing("width"))?,
            height: height.ok_or_else(|| missing("height"))?,
            frames: frames.ok_or_else(|| missing("frames"))?,
        };
        if info.width == 0 || info.height == 0 {
            return Err(Error::parse(source, 0, "image dimensions must be positive"));
        }
        Ok(info)
    }

    pub fn format(&self) -> String {
        format!("width={}\nheight={}\nframes={}\n", self.width, self.height, self.frames)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBundle {
    pub info: SeqInfo,
    detections: Vec<Vec<MotRow>>,
    pub embeddings: Option<EmbeddingStore>,
    /// One map per frame, index `frame - 1`.
    pub depth: Option<Vec<DepthMap>>,
    pub masks: Option<MaskStore>,
}

impl SequenceBundle {
    /// Groups detection rows by frame, keeping file order within a frame.
    /// A detection's index is its position within its frame.
    pub fn new(info: SeqInfo, rows: Vec<MotRow>) -> Result<Self> {
        let mut detections = vec![Vec::new(); info.frames as usize];
        let mut offenders = Vec::new();
        for row in rows {
            if row.frame == 0 || row.frame > info.frames {
                offenders.push(format!("detection in frame {} outside 1..={}", row.frame, info.frames));
                continue;
            }
            detections[row.frame as usize - 1].push(row);
        }
        if !offenders.is_empty() {
            return Err(Error::Validation(offenders));
        }
        Ok(Self {
            info,
            detections,
            embeddings: None,
            depth: None,
            masks: None,
        })
    }

    pub fn detections(&self, frame: u64) -> &[MotRow] {
        frame
            .checked_sub(1)
            .and_then(|i| self.detections.get(i as usize))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn all_detections(&self) -> impl Iterator<Item = &MotRow> {
        self.detections.iter().flatten()
    }

    fn has_detection(&self, frame: u64, det: u32) -> bool {
        (det as usize) < self.detections(frame).len()
    }

    /// Cross-checks every sidecar against the detections and image size.
    pub fn validate(&self) -> Result<()> {
        let mut offenders = Vec::new();
        if let Some(store) = &self.embeddings {
            for (&(frame, det), _) in store.iter() {
                if !self.has_detection(frame, det) {
                    offenders.push(format!("embedding for nonexistent detection {det} in frame {frame}"));
                }
            }
        }
        if let Some(maps) = &self.depth {
            if maps.len() as u64 != self.info.frames {
                offenders.push(format!("{} depth maps for {} frames", maps.len(), self.info.frames));
            }
            for (i, m) in maps.iter().enumerate() {
                if (m.width(), m.height()) != (self.info.width, self.info.height) {
                    offenders.push(format!(
                        "depth map for frame {} is {}x{}, sequence is {}x{}",
                        i + 1,
                        m.width(),
                        m.height(),
                        self.info.width,
                        self.info.height
                    ));
                }
            }
        }
        if let Some(store) = &self.masks {
            for (&(frame, det, kind), m) in store.iter() {
                if !self.has_detection(frame, det) {
                    offenders.push(format!("{kind} mask for nonexistent detection {det} in frame {frame}"));
                }
                if (m.width(), m.height()) != (self.info.width, self.info.height) {
                    offenders.push(format!(
                        "{kind} mask for detection {det} in frame {frame} is {}x{}",
                        m.width(),
                        m.height()
                    ));
                }
                if kind == MaskKind::Back && frame == 1 {
                    offenders.push(format!("back mask for detection {det} in frame 1"));
                }
            }
        }
        if offenders.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(offenders))
        }
    }
}

/// A loaded bundle plus notices about disabled cues or repaired data.
#[derive(Debug, Clone)]
pub struct LoadedBundle {
    pub bundle: SequenceBundle,
    pub notices: Vec<String>,
}

fn load_depth_dir(dir: &Path, info: &SeqInfo) -> Result<Vec<DepthMap>> {
    let mut present = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".pgm") {
            present.insert(name);
        }
    }
    let expected: BTreeSet<String> = (1..=info.frames).map(depth_file_name).collect();
    if present != expected {
        let missing: Vec<_> = expected.difference(&present).take(5).cloned().collect();
        let extra: Vec<_> = present.difference(&expected).take(5).cloned().collect();
        return Err(Error::Validation(vec![format!(
            "depth frame count mismatch: {} files for {} frames (missing {:?}, unexpected {:?})",
            present.len(),
            info.frames,
            missing,
            extra
        )]));
    }
    (1..=info.frames)
        .into_par_iter()
        .map(|f| depth::read_depth(&dir.join(depth_file_name(f))))
        .collect()
}

pub fn load_bundle(dir: &Path) -> Result<LoadedBundle> {
    let info_path = dir.join(SEQINFO);
    let info = SeqInfo::parse(&read_text(&info_path)?, &info_path.display().to_string())?;
    let rows = mot::read_mot(&dir.join(DETECTIONS))?;
    let mut bundle = SequenceBundle::new(info, rows)?;
    let mut notices = Vec::new();

    let emb_path = dir.join(EMBEDDINGS);
    if emb_path.is_file() {
        let decoded = embedding::read_embeddings(&emb_path)?;
        if decoded.renormalized > 0 {
            notices.push(format!(
                "{} embeddings renormalized to unit length",
                decoded.renormalized
            ));
        }
        bundle.embeddings = Some(decoded.store);
    } else {
        notices.push("no emb.dte: appearance cue disabled".into());
    }

    let depth_dir = dir.join(DEPTH_DIR);
    if depth_dir.is_dir() {
        bundle.depth = Some(load_depth_dir(&depth_dir, &info)?);
    } else {
        notices.push("no depth/: depth cue disabled".into());
    }

    let mask_path = dir.join(MASKS);
    if mask_path.is_file() {
        bundle.masks = Some(masks::read_masks(&mask_path)?);
    } else {
        notices.push("no masks.txt: mask cue disabled".into());
    }

    bundle.validate()?;
    Ok(LoadedBundle { bundle, notices })
}

/// Writes a bundle; returns how many depth samples were clamped.
pub fn save_bundle(dir: &Path, bundle: &SequenceBundle) -> Result<usize> {
    bundle.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join(SEQINFO), bundle.info.format())?;
    let rows: Vec<MotRow> = bundle.all_detections().cloned().collect();
    mot::write_mot(&dir.join(DETECTIONS), &rows)?;
    if let Some(store) = &bundle.embeddings {
        embedding::write_embeddings(&dir.join(EMBEDDINGS), store)?;
    }
    let mut clamped = 0;
    if let Some(maps) = &bundle.depth {
        let depth_dir = dir.join(DEPTH_DIR);
        fs::create_dir_all(&depth_dir).map_err(|e| Error::io(&depth_dir, e))?;
        for (i, m) in maps.iter().enumerate() {
            clamped += depth::write_depth(&depth_dir.join(depth_file_name(i as u64 + 1)), m)?;
        }
    }
    if let Some(store) = &bundle.masks {
        masks::write_masks(&dir.join(MASKS), store)?;
    }
    Ok(clamped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BBox, Mask};

    fn info() -> SeqInfo {
        SeqInfo {
            width: 8,
            height: 6,
            frames: 3,
        }
    }

    fn rows() -> Vec<MotRow> {
        vec![
            MotRow::detection(1, BBox::new(1.0, 1.0, 2.0, 2.0), 0.9),
            MotRow::detection(2, BBox::new(2.0, 1.0, 2.0, 2.0), 0.8),
            MotRow::detection(2, BBox::new(5.0, 1.0, 2.0, 2.0), 0.7),
        ]
    }

    #[test]
    fn seqinfo_round_trip_and_errors() {
        let text = info().format();
        assert_eq!(SeqInfo::parse(&text, "t").unwrap(), info());
        assert!(SeqInfo::parse("width=1\nheight=1\n", "t").is_err());
        assert!(SeqInfo::parse("width=1\nheight=1\nframes=2\nfps=30\n", "t").is_err());
    }

    #[test]
    fn detections_only_directory() {
        let dir = tempfile::tempdir().unwrap();
        let b = SequenceBundle::new(info(), rows()).unwrap();
        save_bundle(dir.path(), &b).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        assert_eq!(loaded.bundle, b);
        assert!(loaded.bundle.embeddings.is_none() && loaded.bundle.depth.is_none() && loaded.bundle.masks.is_none());
        assert_eq!(loaded.notices.len(), 3);
        assert_eq!(loaded.bundle.detections(2).len(), 2);
    }

    #[test]
    fn missing_required_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_bundle(dir.path()).is_err());
        fs::write(dir.path().join(SEQINFO), info().format()).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::Io { .. })));
    }

    #[test]
    fn dangling_embedding_is_reported() {
        let mut b = SequenceBundle::new(info(), rows()).unwrap();
        let mut s = EmbeddingStore::new(2).unwrap();
        s.insert(1, 0, vec![1.0, 0.0]).unwrap();
        s.insert(1, 4, vec![0.0, 1.0]).unwrap();
        b.embeddings = Some(s);
        match b.validate() {
            Err(Error::Validation(list)) => {
                assert_eq!(list.len(), 1);
                assert!(list[0].contains("detection 4"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn depth_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = SequenceBundle::new(info(), rows()).unwrap();
        b.depth = Some(vec![DepthMap::new(8, 6, vec![1.0; 48]).unwrap(); 3]);
        save_bundle(dir.path(), &b).unwrap();
        assert_eq!(load_bundle(dir.path()).unwrap().bundle, b);
        fs::remove_file(dir.path().join(DEPTH_DIR).join(depth_file_name(3))).unwrap();
        let err = load_bundle(dir.path()).unwrap_err();
        assert!(err.to_string().contains("depth frame count mismatch"), "{err}");
    }

    #[test]
    fn mask_size_must_match_sequence() {
        let mut b = SequenceBundle::new(info(), rows()).unwrap();
        let mut m = MaskStore::new();
        m.insert(2, 1, MaskKind::SelfMask, Mask::empty(4, 4).unwrap()).unwrap();
        b.masks = Some(m);
        assert!(b.validate().is_err());
    }
}

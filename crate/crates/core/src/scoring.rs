//! Per-cue score matrices and their fusion into the association matrix.
//!
//! Rows index current-frame detections, columns index candidate tracks.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{bbox_iou, BBox};

/// Which cue a matrix carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cue {
    Has,
    Ang,
    Depth,
    Emb,
    Iou,
    Seg,
    Match,
}

impl fmt::Display for Cue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Cue::Has => "has",
            Cue::Ang => "ang",
            Cue::Depth => "depth",
            Cue::Emb => "emb",
            Cue::Iou => "iou",
            Cue::Seg => "seg",
            Cue::Match => "match",
        };
        f.write_str(s)
    }
}

/// Dense row-major `rows x cols` matrix of finite scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    cue: Cue,
}

impl ScoreMatrix {
    pub fn zeros(rows: usize, cols: usize, cue: Cue) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
            cue,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, cue: Cue, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            values,
            cue,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], cue: Cue) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged score matrix rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values: rows.concat(),
            cue,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cue(&self) -> Cue {
        self.cue
    }

    pub fn with_cue(mut self, cue: Cue) -> Self {
        self.cue = cue;
        self
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.cols + col] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

/// Cue weights for the fused score. Defaults keep the plain sum except for
/// the angular term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreWeights {
    pub w_has: f64,
    pub w_ang: f64,
    pub w_depth: f64,
    pub w_emb: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            w_has: 1.0,
            w_ang: 0.2,
            w_depth: 1.0,
            w_emb: 1.0,
        }
    }
}

/// Hierarchical alignment: box IoU amplified by `exp` of the mask IoU.
pub fn has_score(iou_bbox: f64, iou_seg: f64) -> f64 {
    iou_bbox * iou_seg.exp()
}

const MIN_DISPLACEMENT: f64 = 1e-3;

/// Direction consistency between a track's last displacement and the step
/// to a detection, scaled by detection confidence: `c * (1 - dtheta / pi)`.
///
/// `history` holds the track's most recent observation centers, oldest
/// first; only the last two are used.
pub fn angular_score(history: &[(f64, f64)], det_center: (f64, f64), confidence: f64) -> f64 {
    let [.., p1, p2] = history else {
        return 0.0;
    };
    let a = (p2.0 - p1.0, p2.1 - p1.1);
    let b = (det_center.0 - p2.0, det_center.1 - p2.1);
    let na = a.0.hypot(a.1);
    let nb = b.0.hypot(b.1);
    if na < MIN_DISPLACEMENT || nb < MIN_DISPLACEMENT {
        return 0.0;
    }
    let cos = ((a.0 * b.0 + a.1 * b.1) / (na * nb)).clamp(-1.0, 1.0);
    let dtheta = cos.acos();
    (confidence * (1.0 - dtheta / PI)).max(0.0)
}

/// Box IoU between every detection (rows) and track box (columns).
pub fn iou_matrix(dets: &[BBox], tracks: &[BBox]) -> ScoreMatrix {
    ScoreMatrix::from_fn(dets.len(), tracks.len(), Cue::Iou, |i, j| {
        bbox_iou(&dets[i], &tracks[j])
    })
}

/// Elementwise HAS from a box-IoU and a mask-IoU matrix.
pub fn has_matrix(iou: &ScoreMatrix, seg: &ScoreMatrix) -> Result<ScoreMatrix> {
    if !iou.same_shape(seg) {
        return Err(Error::Dimension(format!(
            "iou {}x{} vs seg {}x{}",
            iou.rows, iou.cols, seg.rows, seg.cols
        )));
    }
    Ok(ScoreMatrix {
        values: iou
            .values
            .iter()
            .zip(&seg.values)
            .map(|(&b, &s)| has_score(b, s))
            .collect(),
        rows: iou.rows,
        cols: iou.cols,
        cue: Cue::Has,
    })
}

/// The four cue matrices that make up the association score.
#[derive(Debug, Clone)]
pub struct CueMatrices {
    pub has: ScoreMatrix,
    pub ang: ScoreMatrix,
    pub depth: ScoreMatrix,
    pub emb: ScoreMatrix,
}

/// `w_has * HAS + w_ang * ang + w_depth * depth + w_emb * emb`.
pub fn build_match_matrix(cues: &CueMatrices, w: &ScoreWeights) -> Result<ScoreMatrix> {
    let parts = [
        (&cues.has, w.w_has),
        (&cues.ang, w.w_ang),
        (&cues.depth, w.w_depth),
        (&cues.emb, w.w_emb),
    ];
    for (m, _) in &parts[1..] {
        if !m.same_shape(&cues.has) {
            return Err(Error::Dimension(format!(
                "{} is {}x{}, {} is {}x{}",
                m.cue, m.rows, m.cols, cues.has.cue, cues.has.rows, cues.has.cols
            )));
        }
    }
    let mut out = ScoreMatrix::zeros(cues.has.rows, cues.has.cols, Cue::Match);
    for (m, weight) in parts {
        for (o, v) in out.values.iter_mut().zip(&m.values) {
            *o += weight * v;
        }
    }
    Ok(out)
}

/// Elementwise negation; the cue label is kept.
pub fn negate_to_cost(m: &ScoreMatrix) -> ScoreMatrix {
    m.map(|v| -v)
}

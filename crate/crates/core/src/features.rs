//! Appearance embedding bank, depth histograms and cosine similarity.

use crate::error::{Error, Result};
use crate::geometry::{BBox, Mask};

/// Unit-norm appearance vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Normalizes `values` to unit L2 norm. Zero vectors are rejected.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let norm = l2(&values);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument(
                "embedding must have a finite, non-zero norm".into(),
            ));
        }
        Ok(Self(values.into_iter().map(|v| v / norm).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Dense depth map in meters; `0` marks pixels without a reading.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    depth: Vec<f64>,
}

impl DepthMap {
    /// `depth` is row-major, `width * height` long, non-negative.
    pub fn new(width: u32, height: u32, depth: Vec<f64>) -> Result<Self> {
        if depth.len() != width as usize * height as usize {
            return Err(Error::Dimension(format!(
                "{} samples for a {width}x{height} depth map",
                depth.len()
            )));
        }
        if depth.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidArgument(
                "depth values must be finite and non-negative".into(),
            ));
        }
        Ok(Self { width, height, depth })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn at(&self, x: u32, y: u32) -> f64 {
        self.depth[y as usize * self.width as usize + x as usize]
    }

    pub fn samples(&self) -> &[f64] {
        &self.depth
    }
}

/// Normalized histogram of depth values over a fixed range.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthHistogram {
    pub bins: Vec<f64>,
    pub range_lo: f64,
    pub range_hi: f64,
}

impl DepthHistogram {
    pub fn is_empty(&self) -> bool {
        self.bins.iter().all(|&b| b == 0.0)
    }
}

/// EMA parameters: `trust` is the fixed floor on the coefficient, `thresh`
/// the detection threshold where new embeddings stop counting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmaConfig {
    pub trust: f64,
    pub thresh: f64,
}

impl Default for EmaConfig {
    fn default() -> Self {
        Self {
            trust: 0.95,
            thresh: 0.6,
        }
    }
}

/// Confidence-dependent EMA coefficient, in `[trust, 1]`. Confidences below
/// the threshold are clamped to it.
pub fn ema_coefficient(confidence: f64, cfg: &EmaConfig) -> f64 {
    let c = confidence.clamp(cfg.thresh, 1.0);
    let frac = (c - cfg.thresh) / (1.0 - cfg.thresh);
    cfg.trust + (1.0 - cfg.trust) * (1.0 - frac)
}

/// Blends `new` into `old` and renormalizes. Returns `old` if the blend
/// cancels out.
pub fn ema_update(old: &Embedding, new: &Embedding, confidence: f64, cfg: &EmaConfig) -> Result<Embedding> {
    if old.dim() != new.dim() {
        return Err(Error::Dimension(format!(
            "embedding dims {} vs {}",
            old.dim(),
            new.dim()
        )));
    }
    let alpha = ema_coefficient(confidence, cfg);
    if alpha == 1.0 {
        return Ok(old.clone());
    }
    let raw: Vec<f64> = old
        .0
        .iter()
        .zip(&new.0)
        .map(|(o, n)| alpha * o + (1.0 - alpha) * n)
        .collect();
    Ok(Embedding::new(raw).unwrap_or_else(|_| old.clone()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine of the angle between two vectors; 0 if either is zero.
///
/// Panics if the lengths differ.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine_similarity: length mismatch");
    let (na, nb) = (l2(a), l2(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Min/max over valid pixels, or `(0, 1)` when the map has no usable spread.
pub fn frame_depth_range(map: &DepthMap) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &d in map.samples().iter().filter(|&&d| d > 0.0) {
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if !lo.is_finite() || lo >= hi {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

/// Histogram of the valid depths inside `bbox` (clipped to the frame),
/// optionally restricted to the foreground of `mask`.
pub fn build_depth_histogram(
    map: &DepthMap,
    bbox: &BBox,
    bins: usize,
    range: (f64, f64),
    mask: Option<&Mask>,
) -> Result<DepthHistogram> {
    let (lo, hi) = range;
    if bins < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bins, got {bins}")));
    }
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty depth range ({lo}, {hi})")));
    }
    if let Some(m) = mask {
        if m.width() != map.width() || m.height() != map.height() {
            return Err(Error::Dimension(format!(
                "mask {}x{} vs depth map {}x{}",
                m.width(),
                m.height(),
                map.width(),
                map.height()
            )));
        }
    }
    let mut counts = vec![0u64; bins];
    let mut total = 0u64;
    let (x0, x1, y0, y1) = bbox.pixel_span(map.width(), map.height());
    for x in x0..x1 {
        for y in y0..y1 {
            if mask.is_some_and(|m| !m.get(x, y)) {
                continue;
            }
            let d = map.at(x, y);
            if d <= 0.0 {
                continue;
            }
            let t = (d.clamp(lo, hi) - lo) / (hi - lo);
            let idx = ((t * bins as f64) as usize).min(bins - 1);
            counts[idx] += 1;
            total += 1;
        }
    }
    let bins = counts
        .into_iter()
        .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect();
    Ok(DepthHistogram {
        bins,
        range_lo: lo,
        range_hi: hi,
    })
}

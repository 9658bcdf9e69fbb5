//! Bounding-box and mask primitives.
//!
//! Boxes live in left/top/width/height form everywhere except at the Kalman
//! boundary, where [`BBox::to_center_form`] produces `(u, v, s, r)`.
//! Masks are COCO-style uncompressed RLE in column-major pixel order,
//! always starting with a background run.

use crate::error::{Error, Result};

/// Axis-aligned box in pixels. `left`/`top` may be negative after prediction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BBox {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

/// Center form used by the motion model: center `(u, v)`, scale (area) `s`
/// and aspect ratio `r = width / height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterForm {
    pub u: f64,
    pub v: f64,
    pub s: f64,
    pub r: f64,
}

impl BBox {
    pub const fn new(left: f64, top: f64, width: f64, height: f64) -> Self {
        Self {
            left,
            top,
            width,
            height,
        }
    }

    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }

    pub fn area(&self) -> f64 {
        self.width.max(0.0) * self.height.max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.left + self.width / 2.0, self.top + self.height / 2.0)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.left + dx, self.top + dy, self.width, self.height)
    }

    /// Converts to `(u, v, s, r)`. A zero-height box reports `r = 0`.
    pub fn to_center_form(&self) -> CenterForm {
        let (u, v) = self.center();
        let r = if self.height > 0.0 {
            self.width / self.height
        } else {
            0.0
        };
        CenterForm {
            u,
            v,
            s: self.width * self.height,
            r,
        }
    }

    /// Inverse of [`BBox::to_center_form`]. `s == 0` yields a zero-size box at
    /// `(u, v)` regardless of `r`.
    pub fn from_center_form(c: CenterForm) -> Result<Self> {
        if !(c.r > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "aspect ratio must be positive, got {}",
                c.r
            )));
        }
        if c.s < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "scale must be non-negative, got {}",
                c.s
            )));
        }
        if c.s == 0.0 {
            return Ok(Self::new(c.u, c.v, 0.0, 0.0));
        }
        let width = (c.s * c.r).sqrt();
        let height = (c.s / c.r).sqrt();
        Ok(Self::new(c.u - width / 2.0, c.v - height / 2.0, width, height))
    }

    /// Integer pixel range `[x0, x1) x [y0, y1)` of pixels whose centers fall
    /// inside the box, clipped to a `width x height` frame.
    pub fn pixel_span(&self, frame_width: u32, frame_height: u32) -> (u32, u32, u32, u32) {
        let clip = |v: f64, hi: u32| -> u32 {
            if v.is_nan() || v <= 0.0 {
                0
            } else if v >= hi as f64 {
                hi
            } else {
                v as u32
            }
        };
        let x0 = clip((self.left - 0.5).ceil(), frame_width);
        let x1 = clip((self.right() - 0.5).ceil(), frame_width);
        let y0 = clip((self.top - 0.5).ceil(), frame_height);
        let y1 = clip((self.bottom() - 0.5).ceil(), frame_height);
        (x0, x1.max(x0), y0, y1.max(y0))
    }
}

/// Intersection over union of two boxes; 0 when the union is empty.
pub fn bbox_iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.left.max(b.left)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.top.max(b.top)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 || !union.is_finite() {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Binary mask stored as uncompressed column-major RLE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    runs: Vec<u32>,
}

impl Mask {
    /// Builds a mask from runs, checking that they cover the frame exactly.
    pub fn new(width: u32, height: u32, runs: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        let total: u64 = runs.iter().map(|&r| r as u64).sum();
        let expected = width as u64 * height as u64;
        if total != expected {
            return Err(Error::InvalidArgument(format!(
                "runs sum to {total}, expected {expected} for {width}x{height}"
            )));
        }
        if runs.is_empty() {
            return Err(Error::InvalidArgument("mask has no runs".into()));
        }
        Ok(Self { width, height, runs })
    }

    pub fn empty(width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, vec![width * height])
    }

    /// Encodes a mask from a predicate over `(x, y)` pixel coordinates.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut count = 0u32;
        for x in 0..width {
            for y in 0..height {
                let v = f(x, y);
                if v != current {
                    runs.push(count);
                    count = 0;
                    current = v;
                }
                count += 1;
            }
        }
        runs.push(count);
        Self::new(width, height, runs)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn runs(&self) -> &[u32] {
        &self.runs
    }

    /// Number of foreground pixels.
    pub fn area(&self) -> u64 {
        self.runs.iter().skip(1).step_by(2).map(|&r| r as u64).sum()
    }

    /// Foreground runs as half-open intervals over the column-major index.
    pub fn foreground_intervals(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut pos = 0u64;
        self.runs.iter().enumerate().filter_map(move |(i, &r)| {
            let start = pos;
            pos += r as u64;
            (i % 2 == 1 && r > 0).then_some((start, pos))
        })
    }

    /// Foreground pixel coordinates `(x, y)` in column-major order.
    pub fn foreground_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let h = self.height as u64;
        self.foreground_intervals()
            .flat_map(move |(s, e)| (s..e).map(move |i| ((i / h) as u32, (i % h) as u32)))
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        let idx = x as u64 * self.height as u64 + y as u64;
        let mut pos = 0u64;
        for (i, &r) in self.runs.iter().enumerate() {
            pos += r as u64;
            if idx < pos {
                return i % 2 == 1;
            }
        }
        false
    }

    /// Tight bounding box of the foreground, `None` for an empty mask.
    pub fn bbox(&self) -> Option<BBox> {
        let mut bounds: Option<(u32, u32, u32, u32)> = None;
        for (x, y) in self.foreground_pixels() {
            bounds = Some(match bounds {
                None => (x, x, y, y),
                Some((x0, x1, y0, y1)) => (x0.min(x), x1.max(x), y0.min(y), y1.max(y)),
            });
        }
        bounds.map(|(x0, x1, y0, y1)| BBox::new(x0 as f64, y0 as f64, (x1 - x0 + 1) as f64, (y1 - y0 + 1) as f64))
    }
}

/// Row-major boolean grid: `grid[row][col]`.
pub type Grid = Vec<Vec<bool>>;

/// Encodes a rectangular boolean grid as a column-major RLE mask.
pub fn rle_encode(grid: &[Vec<bool>]) -> Result<Mask> {
    let height = grid.len();
    let width = grid.first().map_or(0, Vec::len);
    if height == 0 || width == 0 {
        return Err(Error::InvalidArgument("grid must be non-empty".into()));
    }
    if let Some(row) = grid.iter().position(|r| r.len() != width) {
        return Err(Error::InvalidArgument(format!(
            "grid row {row} has length {}, expected {width}",
            grid[row].len()
        )));
    }
    Mask::from_fn(width as u32, height as u32, |x, y| grid[y as usize][x as usize])
}

/// Decodes a mask back into a row-major grid.
pub fn rle_decode(mask: &Mask) -> Result<Grid> {
    let total: u64 = mask.runs.iter().map(|&r| r as u64).sum();
    if total != mask.width as u64 * mask.height as u64 {
        return Err(Error::InvalidArgument(format!(
            "runs sum to {total} for a {}x{} mask",
            mask.width, mask.height
        )));
    }
    let mut grid = vec![vec![false; mask.width as usize]; mask.height as usize];
    for (x, y) in mask.foreground_pixels() {
        grid[y as usize][x as usize] = true;
    }
    Ok(grid)
}

/// Pixel IoU of two masks of the same dimensions; 0 when both are empty.
pub fn mask_iou(a: &Mask, b: &Mask) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}

fn intersection_area(a: &Mask, b: &Mask) -> u64 {
    let mut ia = a.foreground_intervals().peekable();
    let mut ib = b.foreground_intervals().peekable();
    let mut inter = 0u64;
    while let (Some(&(s1, e1)), Some(&(s2, e2))) = (ia.peek(), ib.peek()) {
        let lo = s1.max(s2);
        let hi = e1.min(e2);
        if hi > lo {
            inter += hi - lo;
        }
        if e1 <= e2 {
            ia.next();
        } else {
            ib.next();
        }
    }
    inter
}

//! Deterministic synthetic scenes with ground truth and every sidecar.
//!
//! Objects move along linearly interpolated waypoints and are drawn into a
//! z-buffer (nearest wins, background at 60 m). Detections are the visible
//! part of each object; masks, depth maps and embeddings are derived from
//! the same render. All noise is drawn from per-(kind, object, frame)
//! ChaCha streams, so adding an object leaves every other object's noise
//! untouched and output does not depend on thread count.

mod builtin;
mod scenario_file;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::DepthMap;
use crate::geometry::{BBox, Mask};
use crate::io::bundle::{save_bundle, SeqInfo, SequenceBundle, GROUND_TRUTH};
use crate::io::embedding::EmbeddingStore;
use crate::io::masks::{MaskKind, MaskStore};
use crate::io::mot::{write_mot, MotRow};

pub use builtin::{builtin_names, builtin_scenario, builtin_scenarios};
pub use scenario_file::{format_scenario, parse_scenario, read_scenario};

pub const BACKGROUND_DEPTH: f64 = 60.0;
pub const MIN_VISIBILITY: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Rectangle,
    Ellipse,
}

/// How an object's identity embedding is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Identity {
    /// Random unit vector; equal tags give equal vectors.
    Random(String),
    /// A small perturbation of a shared cluster center.
    Cluster { name: String, member: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub name: String,
    pub identity: Identity,
    /// `(frame, center u, center v)`, sorted by frame. The object exists from
    /// the first to the last waypoint frame.
    pub waypoints: Vec<(u64, f64, f64)>,
    pub size: (f64, f64),
    /// `(frame, meters)` knots of a piecewise-linear depth profile.
    pub depth: Vec<(u64, f64)>,
    pub shape: Shape,
    /// Inclusive frame windows during which something not modeled in the
    /// scene hides the object completely.
    pub hidden: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Std-dev in pixels added to each box edge.
    pub bbox_jitter: f64,
    pub dropout: f64,
    pub conf_base: f64,
    /// Half-width of the uniform confidence jitter.
    pub conf_jitter: f64,
    /// Applied to partially occluded objects' confidence.
    pub occluded_conf_mult: f64,
    pub emb_noise: f64,
    /// Std-dev in meters on object pixels.
    pub depth_noise: f64,
    /// Erosion passes applied to back-propagated masks.
    pub back_mask_erosion: u32,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            bbox_jitter: 0.0,
            dropout: 0.0,
            conf_base: 0.9,
            conf_jitter: 0.0,
            occluded_conf_mult: 1.0,
            emb_noise: 0.0,
            depth_noise: 0.0,
            back_mask_erosion: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub frames: u64,
    pub width: u32,
    pub height: u32,
    pub emb_dim: u32,
    /// Std-dev of a cluster member's offset from its cluster center.
    pub cluster_spread: f64,
    pub objects: Vec<ObjectSpec>,
    pub noise: NoiseSpec,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.frames == 0 {
            return bad("scenario needs at least one frame".into());
        }
        if self.objects.is_empty() {
            return bad("scenario needs at least one object".into());
        }
        if self.width == 0 || self.height == 0 || self.emb_dim == 0 {
            return bad("image size and embedding dimension must be positive".into());
        }
        if !(self.cluster_spread >= 0.0) {
            return bad("cluster_spread must be non-negative".into());
        }
        let n = &self.noise;
        for (k, p) in [
            ("dropout", n.dropout),
            ("conf_base", n.conf_base),
            ("conf_jitter", n.conf_jitter),
            ("occluded_conf_mult", n.occluded_conf_mult),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{k} must lie in [0, 1]"));
            }
        }
        for (k, s) in [
            ("bbox_jitter", n.bbox_jitter),
            ("emb_noise", n.emb_noise),
            ("depth_noise", n.depth_noise),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("{k} must be finite and non-negative"));
            }
        }
        for o in &self.objects {
            let name = &o.name;
            if o.waypoints.is_empty() {
                return bad(format!("object {name}: no waypoints"));
            }
            for w in o.waypoints.windows(2) {
                if w[1].0 <= w[0].0 {
                    return bad(format!("object {name}: waypoints must be strictly increasing in frame"));
                }
            }
            for &(f, u, v) in &o.waypoints {
                if f == 0 || f > self.frames {
                    return bad(format!("object {name}: waypoint frame {f} outside 1..={}", self.frames));
                }
                if !u.is_finite() || !v.is_finite() {
                    return bad(format!("object {name}: non-finite waypoint"));
                }
            }
            if !(o.size.0 > 0.0 && o.size.1 > 0.0 && o.size.0.is_finite() && o.size.1.is_finite()) {
                return bad(format!("object {name}: size must be positive"));
            }
            if o.depth.is_empty() {
                return bad(format!("object {name}: no depth profile"));
            }
            for w in o.depth.windows(2) {
                if w[1].0 <= w[0].0 {
                    return bad(format!(
                        "object {name}: depth knots must be strictly increasing in frame"
                    ));
                }
            }
            if o.depth.iter().any(|&(_, d)| !(d > 0.0 && d.is_finite())) {
                return bad(format!("object {name}: depth must be positive"));
            }
            for &(a, b) in &o.hidden {
                if a == 0 || b < a {
                    return bad(format!("object {name}: bad hidden window {a}-{b}"));
                }
            }
        }
        Ok(())
    }
}

impl ObjectSpec {
    /// Box center at `frame`, or `None` outside the object's lifetime.
    pub fn center_at(&self, frame: u64) -> Option<(f64, f64)> {
        let first = self.waypoints.first()?;
        let last = self.waypoints.last()?;
        if frame < first.0 || frame > last.0 {
            return None;
        }
        for w in self.waypoints.windows(2) {
            let ((f0, u0, v0), (f1, u1, v1)) = (w[0], w[1]);
            if frame <= f1 {
                let a = (frame - f0) as f64 / (f1 - f0) as f64;
                return Some((u0 + a * (u1 - u0), v0 + a * (v1 - v0)));
            }
        }
        Some((first.1, first.2))
    }

    pub fn depth_at(&self, frame: u64) -> f64 {
        let d = &self.depth;
        if frame <= d[0].0 {
            return d[0].1;
        }
        for w in d.windows(2) {
            let ((f0, d0), (f1, d1)) = (w[0], w[1]);
            if frame <= f1 {
                let a = (frame - f0) as f64 / (f1 - f0) as f64;
                return d0 + a * (d1 - d0);
            }
        }
        d[d.len() - 1].1
    }

    pub fn is_hidden(&self, frame: u64) -> bool {
        self.hidden.iter().any(|&(a, b)| (a..=b).contains(&frame))
    }

    pub fn box_at(&self, frame: u64) -> Option<BBox> {
        let (u, v) = self.center_at(frame)?;
        Some(BBox::new(
            u - self.size.0 / 2.0,
            v - self.size.1 / 2.0,
            self.size.0,
            self.size.1,
        ))
    }

    fn covers(&self, b: &BBox, px: f64, py: f64) -> bool {
        match self.shape {
            Shape::Rectangle => px >= b.left && px < b.right() && py >= b.top && py < b.bottom(),
            Shape::Ellipse => {
                let (cu, cv) = b.center();
                let dx = (px - cu) / (b.width / 2.0);
                let dy = (py - cv) / (b.height / 2.0);
                dx * dx + dy * dy <= 1.0
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Stream {
    Identity = 1,
    Detection = 2,
    EmbeddingNoise = 3,
    DepthNoise = 4,
}

fn rng_for(seed: u64, kind: Stream, object: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 56) | ((object & 0xff_ffff) << 32) | (frame & 0xffff_ffff));
    rng
}

/// 64-bit FNV-1a; a stable tag hash independent of the std hasher.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn gaussian_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Unit identity vector for an object.
pub fn identity_vector(scenario: &Scenario, identity: &Identity) -> Vec<f64> {
    let dim = scenario.emb_dim as usize;
    match identity {
        Identity::Random(tag) => {
            let mut rng = rng_for(scenario.seed, Stream::Identity, 0, 0);
            rng.set_stream(fnv1a(&format!("random:{tag}")));
            gaussian_unit(&mut rng, dim)
        }
        Identity::Cluster { name, member } => {
            let mut rng = rng_for(scenario.seed, Stream::Identity, 0, 0);
            rng.set_stream(fnv1a(&format!("cluster:{name}")));
            let center = gaussian_unit(&mut rng, dim);
            rng.set_stream(fnv1a(&format!("cluster:{name}:{member}")));
            let normal = Normal::new(0.0, 1.0).unwrap();
            let mut v: Vec<f64> = center
                .iter()
                .map(|c| c + scenario.cluster_spread * normal.sample(&mut rng))
                .collect();
            normalize(&mut v);
            v
        }
    }
}

/// Column-major linear index, matching the RLE scan order.
fn col_index(x: u32, y: u32, height: u32) -> u64 {
    x as u64 * height as u64 + y as u64
}

/// Builds a mask from sorted column-major pixel indices.
fn mask_from_indices(width: u32, height: u32, sorted: &[u64]) -> Mask {
    let total = width as u64 * height as u64;
    let mut runs = Vec::new();
    let mut cursor = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let start = sorted[i];
        let mut end = start + 1;
        i += 1;
        while i < sorted.len() && sorted[i] == end {
            end += 1;
            i += 1;
        }
        runs.push((start - cursor) as u32);
        runs.push((end - start) as u32);
        cursor = end;
    }
    runs.push((total - cursor) as u32);
    if runs.len() > 1 && *runs.last().unwrap() == 0 {
        runs.pop();
    }
    Mask::new(width, height, runs).expect("runs cover the frame")
}

/// Per-frame render of every object: shape pixels and the visible subset.
struct FrameRender {
    depth: Vec<f64>,
    objects: Vec<Option<ObjectRender>>,
}

struct ObjectRender {
    /// In-frame shape pixels as (x, y), column-major order.
    shape: Vec<(u32, u32)>,
    /// Visible pixels, column-major order.
    visible: Vec<(u32, u32)>,
    depth: f64,
}

impl ObjectRender {
    fn visibility(&self) -> f64 {
        if self.shape.is_empty() {
            0.0
        } else {
            self.visible.len() as f64 / self.shape.len() as f64
        }
    }
}

fn pixel_bbox(pixels: &[(u32, u32)]) -> Option<BBox> {
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
    for &(x, y) in pixels {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    (!pixels.is_empty()).then(|| BBox::new(x0 as f64, y0 as f64, (x1 - x0 + 1) as f64, (y1 - y0 + 1) as f64))
}

fn render_frame(sc: &Scenario, frame: u64) -> FrameRender {
    let (w, h) = (sc.width, sc.height);
    let mut zbuf = vec![BACKGROUND_DEPTH; w as usize * h as usize];
    let mut owner = vec![u32::MAX; zbuf.len()];
    let mut objects: Vec<Option<ObjectRender>> = Vec::with_capacity(sc.objects.len());

    for (k, obj) in sc.objects.iter().enumerate() {
        let Some(b) = obj.box_at(frame).filter(|_| !obj.is_hidden(frame)) else {
            objects.push(None);
            continue;
        };
        let d = obj.depth_at(frame);
        let (x0, x1, y0, y1) = b.pixel_span(w, h);
        let mut shape = Vec::new();
        for x in x0..x1 {
            for y in y0..y1 {
                if obj.covers(&b, x as f64 + 0.5, y as f64 + 0.5) {
                    shape.push((x, y));
                    let p = y as usize * w as usize + x as usize;
                    if d < zbuf[p] {
                        zbuf[p] = d;
                        owner[p] = k as u32;
                    }
                }
            }
        }
        objects.push(Some(ObjectRender {
            shape,
            visible: Vec::new(),
            depth: d,
        }));
    }
    for (k, o) in objects.iter_mut().enumerate() {
        if let Some(o) = o {
            o.visible = o
                .shape
                .iter()
                .copied()
                .filter(|&(x, y)| owner[y as usize * w as usize + x as usize] == k as u32)
                .collect();
        }
    }
    FrameRender { depth: zbuf, objects }
}

fn erode(pixels: &[(u32, u32)], passes: u32) -> Vec<(u32, u32)> {
    let mut set: std::collections::BTreeSet<(u32, u32)> = pixels.iter().copied().collect();
    for _ in 0..passes {
        let next = set
            .iter()
            .copied()
            .filter(|&(x, y)| {
                x > 0
                    && y > 0
                    && set.contains(&(x - 1, y))
                    && set.contains(&(x + 1, y))
                    && set.contains(&(x, y - 1))
                    && set.contains(&(x, y + 1))
            })
            .collect();
        set = next;
    }
    set.into_iter().collect()
}

fn round_to(v: f64, scale: f64) -> f64 {
    (v * scale).round() / scale
}

/// A rendered sequence: the bundle the tracker consumes plus ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedSequence {
    pub bundle: SequenceBundle,
    pub gt: Vec<MotRow>,
}

pub fn render(sc: &Scenario) -> Result<RenderedSequence> {
    sc.validate()?;
    let (w, h) = (sc.width, sc.height);
    let frames: Vec<FrameRender> = (1..=sc.frames).into_par_iter().map(|f| render_frame(sc, f)).collect();
    let identities: Vec<Vec<f64>> = sc.objects.iter().map(|o| identity_vector(sc, &o.identity)).collect();
    let noise = &sc.noise;
    let jitter = Normal::new(0.0, noise.bbox_jitter.max(0.0)).unwrap();
    let emb_noise = Normal::new(0.0, noise.emb_noise.max(0.0)).unwrap();
    let depth_noise = Normal::new(0.0, noise.depth_noise.max(0.0)).unwrap();

    let mut gt = Vec::new();
    let mut det_rows = Vec::new();
    let mut store = EmbeddingStore::new(sc.emb_dim)?;
    let mut masks = MaskStore::new();
    let mut depth_maps = Vec::with_capacity(frames.len());

    for (fi, fr) in frames.iter().enumerate() {
        let frame = fi as u64 + 1;
        let mut det_index = 0u32;
        for (k, o) in fr.objects.iter().enumerate() {
            let Some(o) = o else { continue };
            let vis = o.visibility();
            if vis < MIN_VISIBILITY {
                continue;
            }
            let gt_box = pixel_bbox(&o.shape).expect("visible object has pixels");
            gt.push(MotRow::track(frame, k as i64 + 1, gt_box, 1.0));

            let mut rng = rng_for(sc.seed, Stream::Detection, k as u64, frame);
            let dropped = rng.random::<f64>() < noise.dropout;
            let vis_box = pixel_bbox(&o.visible).expect("visible object has pixels");
            let mut edges = [vis_box.left, vis_box.top, vis_box.right(), vis_box.bottom()];
            for e in &mut edges {
                *e += jitter.sample(&mut rng);
            }
            let mut conf = noise.conf_base + noise.conf_jitter * (2.0 * rng.random::<f64>() - 1.0);
            if vis < 1.0 {
                conf *= noise.occluded_conf_mult;
            }
            let conf = round_to(conf.clamp(0.0, 1.0), 1e6);
            let det_box = BBox::new(
                round_to(edges[0], 100.0),
                round_to(edges[1], 100.0),
                round_to((edges[2] - edges[0]).max(0.0), 100.0),
                round_to((edges[3] - edges[1]).max(0.0), 100.0),
            );
            if dropped || det_box.width <= 0.0 || det_box.height <= 0.0 {
                continue;
            }
            det_rows.push(MotRow::detection(frame, det_box, conf));

            let mut erng = rng_for(sc.seed, Stream::EmbeddingNoise, k as u64, frame);
            let mut e: Vec<f64> = identities[k].iter().map(|v| v + emb_noise.sample(&mut erng)).collect();
            normalize(&mut e);
            store.insert(frame, det_index, e.iter().map(|&v| v as f32).collect())?;

            let mut own: Vec<u64> = o
                .visible
                .iter()
                .filter(|&&(x, y)| {
                    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                    px >= det_box.left && px < det_box.right() && py >= det_box.top && py < det_box.bottom()
                })
                .map(|&(x, y)| col_index(x, y, h))
                .collect();
            own.sort_unstable();
            masks.insert(frame, det_index, MaskKind::SelfMask, mask_from_indices(w, h, &own))?;

            if frame > 1 {
                if let Some(prev) = &frames[fi - 1].objects[k] {
                    let px = erode(&prev.visible, noise.back_mask_erosion);
                    if !px.is_empty() {
                        let mut idx: Vec<u64> = px.iter().map(|&(x, y)| col_index(x, y, h)).collect();
                        idx.sort_unstable();
                        masks.insert(frame, det_index, MaskKind::Back, mask_from_indices(w, h, &idx))?;
                    }
                }
            }
            det_index += 1;
        }

        let mut depth = fr.depth.clone();
        if noise.depth_noise > 0.0 {
            for (k, o) in fr.objects.iter().enumerate() {
                let Some(o) = o else { continue };
                let mut drng = rng_for(sc.seed, Stream::DepthNoise, k as u64, frame);
                for &(x, y) in &o.visible {
                    let p = y as usize * w as usize + x as usize;
                    depth[p] = (o.depth + depth_noise.sample(&mut drng)).max(0.001);
                }
            }
        }
        for d in &mut depth {
            *d = round_to(d.min(65.535), 1000.0);
        }
        depth_maps.push(DepthMap::new(w, h, depth)?);
    }

    let info = SeqInfo {
        width: w,
        height: h,
        frames: sc.frames,
    };
    let mut bundle = SequenceBundle::new(info, det_rows)?;
    bundle.embeddings = Some(store);
    bundle.depth = Some(depth_maps);
    bundle.masks = Some(masks);
    bundle.validate()?;
    Ok(RenderedSequence { bundle, gt })
}

/// Renders a scenario into a sequence directory, `gt.txt` included.
pub fn write_rendered(dir: &Path, seq: &RenderedSequence) -> Result<()> {
    save_bundle(dir, &seq.bundle)?;
    write_mot(&dir.join(GROUND_TRUTH), &seq.gt)
}

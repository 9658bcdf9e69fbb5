//! Frame-wise two-stage association and track lifecycle.
//!
//! Stage one matches high-confidence detections against every live track
//! with the fused score (HAS, direction, depth, appearance). Stage two
//! matches what is left against the remaining tracks on box IoU alone.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::assignment::solve_with;
use crate::error::{Error, Result};
use crate::features::{
    build_depth_histogram, cosine_similarity, ema_update, frame_depth_range, DepthHistogram, DepthMap, EmaConfig,
    Embedding,
};
use crate::geometry::{mask_iou, BBox, Mask};
use crate::io::bundle::SequenceBundle;
use crate::io::mot::MotRow;
use crate::kalman::{KfModel, KfParams, KfState, Observation};
use crate::scoring::{
    angular_score, build_match_matrix, has_matrix, iou_matrix, negate_to_cost, Cue, CueMatrices, ScoreMatrix,
    ScoreWeights,
};

const HISTORY_LEN: usize = 5;

/// One detection in one frame, with whatever sidecar evidence exists.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    pub confidence: f64,
    pub embedding: Option<Embedding>,
    /// Segmentation of the detection in its own frame.
    pub self_mask: Option<Mask>,
    /// The same object's mask propagated back into the previous frame.
    pub back_mask: Option<Mask>,
}

impl Detection {
    pub fn new(bbox: BBox, confidence: f64) -> Self {
        Self {
            bbox,
            confidence,
            embedding: None,
            self_mask: None,
            back_mask: None,
        }
    }

    fn is_usable(&self) -> bool {
        let b = &self.bbox;
        [b.left, b.top, b.width, b.height, self.confidence]
            .iter()
            .all(|v| v.is_finite())
            && b.width > 0.0
            && b.height > 0.0
            && (0.0..=1.0).contains(&self.confidence)
    }
}

/// Which overlap score plays the motion role in stage one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionCue {
    /// Box IoU amplified by mask IoU.
    Has,
    /// Box IoU only.
    Bbox,
    /// Mask IoU only.
    Mask,
}

impl fmt::Display for MotionCue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MotionCue::Has => "has",
            MotionCue::Bbox => "bbox",
            MotionCue::Mask => "mask",
        })
    }
}

impl FromStr for MotionCue {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "has" => Ok(MotionCue::Has),
            "bbox" => Ok(MotionCue::Bbox),
            "mask" => Ok(MotionCue::Mask),
            other => Err(format!("expected has|bbox|mask, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub det_high_thresh: f64,
    pub det_low_thresh: f64,
    pub stage2_iou_thresh: f64,
    /// Minimum fused score for a stage-one pair.
    pub match_accept_thresh: f64,
    pub max_age: u32,
    pub min_hits: u32,
    pub ema: EmaConfig,
    pub weights: ScoreWeights,
    pub depth_bins: usize,
    pub motion_cue: MotionCue,
    pub oru: bool,
    /// Pairs with zero box overlap need at least this appearance similarity.
    pub hard_mask_emb_thresh: f64,
    /// Read depth only under the detection's mask instead of its whole box.
    pub depth_from_mask: bool,
    pub kf: KfParams,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            det_high_thresh: 0.6,
            det_low_thresh: 0.1,
            stage2_iou_thresh: 0.3,
            match_accept_thresh: 0.1,
            max_age: 30,
            min_hits: 3,
            ema: EmaConfig::default(),
            weights: ScoreWeights::default(),
            depth_bins: 48,
            motion_cue: MotionCue::Has,
            oru: true,
            hard_mask_emb_thresh: 0.25,
            depth_from_mask: false,
            kf: KfParams::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| {
            Err(Error::Config {
                key: key.into(),
                msg: msg.into(),
            })
        };
        if !(0.0 <= self.det_low_thresh && self.det_low_thresh < self.det_high_thresh && self.det_high_thresh <= 1.0) {
            return bad("det_high_thresh", "need 0 <= det_low_thresh < det_high_thresh <= 1");
        }
        if !(0.0..=1.0).contains(&self.stage2_iou_thresh) {
            return bad("stage2_iou_thresh", "must lie in [0, 1]");
        }
        if !self.match_accept_thresh.is_finite() {
            return bad("match_accept_thresh", "must be finite");
        }
        if !(0.0..1.0).contains(&self.ema.thresh) {
            return bad("ema_thresh", "must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.ema.trust) {
            return bad("ema_trust", "must lie in [0, 1]");
        }
        let w = &self.weights;
        for (k, v) in [
            ("w_has", w.w_has),
            ("w_ang", w.w_ang),
            ("w_depth", w.w_depth),
            ("w_emb", w.w_emb),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(k, "weights must be finite and non-negative");
            }
        }
        if self.depth_bins < 2 {
            return bad("depth_bins", "need at least 2 bins");
        }
        if self.kf.r.iter().any(|&r| !(r > 0.0)) {
            return bad("kf_r", "observation noise must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Lost,
}

/// A live tracklet.
#[derive(Debug, Clone)]
pub struct Track {
    pub id: u64,
    /// Current filter state (predicted for the current frame when unmatched).
    pub kf: KfState,
    /// Post-update state at `last_obs.frame`; the restart point for re-updates.
    pub checkpoint: KfState,
    pub status: TrackStatus,
    pub last_obs: Observation,
    /// Recent observation centers, oldest first.
    pub history: VecDeque<(f64, f64)>,
    pub embedding: Option<Embedding>,
    pub depth_hist: Option<DepthHistogram>,
    /// Mask from the frame the track was last seen in.
    pub self_mask: Option<Mask>,
    pub hits: u32,
    pub age_since_update: u32,
    /// Confidence of the most recent matched detection.
    pub last_confidence: f64,
    confirmed: bool,
}

impl Track {
    pub fn predicted_bbox(&self) -> BBox {
        self.kf.to_bbox()
    }

    pub fn last_seen(&self) -> u64 {
        self.last_obs.frame
    }
}

/// One emitted track box.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub id: u64,
    pub bbox: BBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrackerStats {
    pub mask_dim_warnings: u64,
    pub oru_reupdates: u64,
    pub skipped_detections: u64,
}

/// Mask IoU between each detection's back-propagated mask (rows) and each
/// track's mask (columns). Only tracks seen exactly in the previous frame
/// take part; everything else scores 0. Dimension mismatches score 0 and
/// bump `warnings`.
pub fn mask_iou_matrix(tracks: &[&Track], dets: &[&Detection], frame: u64, warnings: &mut u64) -> ScoreMatrix {
    let mut m = ScoreMatrix::zeros(dets.len(), tracks.len(), Cue::Seg);
    for (j, t) in tracks.iter().enumerate() {
        if t.last_seen() + 1 != frame {
            continue;
        }
        let Some(tm) = &t.self_mask else { continue };
        for (i, d) in dets.iter().enumerate() {
            let Some(dm) = &d.back_mask else { continue };
            match mask_iou(tm, dm) {
                Ok(v) => m.set(i, j, v),
                Err(_) => *warnings += 1,
            }
        }
    }
    m
}

pub struct Tracker {
    cfg: TrackerConfig,
    model: KfModel,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
    frames_seen: u64,
    stats: TrackerStats,
}

struct FrameDepth<'a> {
    map: &'a DepthMap,
    range: (f64, f64),
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        let model = KfModel::new(&cfg.kf);
        Ok(Self {
            cfg,
            model,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
            frames_seen: 0,
            stats: TrackerStats::default(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn stats(&self) -> &TrackerStats {
        &self.stats
    }

    /// Advances the tracker by one frame and returns the tracks to report.
    pub fn step(&mut self, frame: u64, detections: &[Detection], depth: Option<&DepthMap>) -> Result<Vec<TrackOutput>> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::FrameOrder { last, got: frame });
            }
        }
        self.last_frame = Some(frame);
        self.frames_seen += 1;

        let usable: Vec<usize> = (0..detections.len()).filter(|&i| detections[i].is_usable()).collect();
        self.stats.skipped_detections += (detections.len() - usable.len()) as u64;

        for t in &mut self.tracks {
            t.kf = self.model.predict(&t.kf);
            t.age_since_update += 1;
        }

        let depth = depth.map(|map| FrameDepth {
            map,
            range: frame_depth_range(map),
        });
        let mut det_hists: Vec<Option<Option<DepthHistogram>>> = vec![None; detections.len()];

        // Stage one: high-confidence detections, full score, all tracks.
        let high: Vec<usize> = usable
            .iter()
            .copied()
            .filter(|&i| detections[i].confidence > self.cfg.det_high_thresh)
            .collect();
        let all_tracks: Vec<usize> = (0..self.tracks.len()).collect();
        let stage1 = self.associate_full(frame, detections, &high, &all_tracks, depth.as_ref(), &mut det_hists)?;

        // Stage two: leftovers above the low threshold, box IoU only.
        let mut det_matched = vec![false; detections.len()];
        let mut trk_matched = vec![false; self.tracks.len()];
        for &(d, t) in &stage1 {
            det_matched[d] = true;
            trk_matched[t] = true;
        }
        let second_dets: Vec<usize> = usable
            .iter()
            .copied()
            .filter(|&i| !det_matched[i] && detections[i].confidence > self.cfg.det_low_thresh)
            .collect();
        let second_trks: Vec<usize> = all_tracks.iter().copied().filter(|&t| !trk_matched[t]).collect();
        let stage2 = self.associate_iou(detections, &second_dets, &second_trks);

        let mut matches = stage1;
        matches.extend(stage2);
        for &(d, t) in &matches {
            det_matched[d] = true;
            trk_matched[t] = true;
        }

        for &(d, t) in &matches {
            let hist = self.detection_histogram(&detections[d], d, depth.as_ref(), &mut det_hists)?;
            self.apply_match(t, &detections[d], frame, hist)?;
        }

        for t in 0..trk_matched.len() {
            if !trk_matched[t] && self.tracks[t].status == TrackStatus::Confirmed {
                self.tracks[t].status = TrackStatus::Lost;
            }
        }

        for &d in &high {
            if !det_matched[d] {
                let hist = self.detection_histogram(&detections[d], d, depth.as_ref(), &mut det_hists)?;
                self.spawn(&detections[d], frame, hist);
            }
        }

        let max_age = self.cfg.max_age;
        self.tracks.retain(|t| t.age_since_update <= max_age);

        let warmup = self.frames_seen <= self.cfg.min_hits as u64;
        let mut out: Vec<TrackOutput> = self
            .tracks
            .iter()
            .filter(|t| t.age_since_update == 0 && (t.confirmed || warmup))
            .map(|t| TrackOutput {
                id: t.id,
                bbox: t.kf.to_bbox(),
                confidence: t.last_confidence,
            })
            .collect();
        out.sort_by_key(|o| o.id);
        Ok(out)
    }

    fn detection_histogram(
        &self,
        det: &Detection,
        idx: usize,
        depth: Option<&FrameDepth>,
        cache: &mut [Option<Option<DepthHistogram>>],
    ) -> Result<Option<DepthHistogram>> {
        if let Some(h) = &cache[idx] {
            return Ok(h.clone());
        }
        let h = match depth {
            None => None,
            Some(fd) => {
                let mask = if self.cfg.depth_from_mask {
                    det.self_mask
                        .as_ref()
                        .filter(|m| m.width() == fd.map.width() && m.height() == fd.map.height())
                } else {
                    None
                };
                Some(build_depth_histogram(
                    fd.map,
                    &det.bbox,
                    self.cfg.depth_bins,
                    fd.range,
                    mask,
                )?)
            }
        };
        cache[idx] = Some(h.clone());
        Ok(h)
    }

    fn associate_full(
        &mut self,
        frame: u64,
        detections: &[Detection],
        dets: &[usize],
        trks: &[usize],
        depth: Option<&FrameDepth>,
        det_hists: &mut [Option<Option<DepthHistogram>>],
    ) -> Result<Vec<(usize, usize)>> {
        if dets.is_empty() || trks.is_empty() {
            return Ok(Vec::new());
        }
        let det_refs: Vec<&Detection> = dets.iter().map(|&i| &detections[i]).collect();
        let det_boxes: Vec<BBox> = det_refs.iter().map(|d| d.bbox).collect();
        let trk_boxes: Vec<BBox> = trks.iter().map(|&t| self.tracks[t].predicted_bbox()).collect();
        let (n, m) = (dets.len(), trks.len());

        let iou = iou_matrix(&det_boxes, &trk_boxes);
        let motion = match self.cfg.motion_cue {
            MotionCue::Bbox => iou.clone(),
            cue => {
                let trk_refs: Vec<&Track> = trks.iter().map(|&t| &self.tracks[t]).collect();
                let seg = mask_iou_matrix(&trk_refs, &det_refs, frame, &mut self.stats.mask_dim_warnings);
                if cue == MotionCue::Has {
                    has_matrix(&iou, &seg)?
                } else {
                    seg
                }
            }
        };

        let ang = ScoreMatrix::from_fn(n, m, Cue::Ang, |i, j| {
            let t = &self.tracks[trks[j]];
            let hist: Vec<(f64, f64)> = t.history.iter().copied().collect();
            angular_score(&hist, det_boxes[i].center(), det_refs[i].confidence)
        });

        let emb = ScoreMatrix::from_fn(n, m, Cue::Emb, |i, j| {
            match (&det_refs[i].embedding, &self.tracks[trks[j]].embedding) {
                (Some(a), Some(b)) if a.dim() == b.dim() => cosine_similarity(a.values(), b.values()),
                _ => 0.0,
            }
        });

        let mut depth_m = ScoreMatrix::zeros(n, m, Cue::Depth);
        if depth.is_some() && self.cfg.weights.w_depth > 0.0 {
            for (i, &d) in dets.iter().enumerate() {
                let Some(dh) = self.detection_histogram(&detections[d], d, depth, det_hists)? else {
                    continue;
                };
                for (j, &t) in trks.iter().enumerate() {
                    if let Some(th) = &self.tracks[t].depth_hist {
                        if th.bins.len() == dh.bins.len() {
                            depth_m.set(i, j, cosine_similarity(&dh.bins, &th.bins));
                        }
                    }
                }
            }
        }

        let fused = build_match_matrix(
            &CueMatrices {
                has: motion,
                ang,
                depth: depth_m,
                emb: emb.clone(),
            },
            &self.cfg.weights,
        )?;
        let cost = negate_to_cost(&fused);
        let tau = self.cfg.match_accept_thresh;
        let gate = self.cfg.hard_mask_emb_thresh;
        let result = solve_with(&cost, |i, j| {
            (iou.get(i, j) == 0.0 && emb.get(i, j) < gate) || fused.get(i, j) < tau
        });
        Ok(result.pairs.into_iter().map(|(i, j)| (dets[i], trks[j])).collect())
    }

    fn associate_iou(&self, detections: &[Detection], dets: &[usize], trks: &[usize]) -> Vec<(usize, usize)> {
        if dets.is_empty() || trks.is_empty() {
            return Vec::new();
        }
        let det_boxes: Vec<BBox> = dets.iter().map(|&i| detections[i].bbox).collect();
        let trk_boxes: Vec<BBox> = trks.iter().map(|&t| self.tracks[t].predicted_bbox()).collect();
        let iou = iou_matrix(&det_boxes, &trk_boxes);
        let thresh = self.cfg.stage2_iou_thresh;
        solve_with(&negate_to_cost(&iou), |i, j| iou.get(i, j) < thresh)
            .pairs
            .into_iter()
            .map(|(i, j)| (dets[i], trks[j]))
            .collect()
    }

    fn apply_match(&mut self, t: usize, det: &Detection, frame: u64, hist: Option<DepthHistogram>) -> Result<()> {
        let z = Observation::from_bbox(&det.bbox, frame);
        let min_hits = self.cfg.min_hits;
        let track = &mut self.tracks[t];
        let state = if self.cfg.oru && track.age_since_update > 1 {
            self.stats.oru_reupdates += 1;
            self.model.oru_reupdate(&track.checkpoint, &track.last_obs, &z)?
        } else {
            self.model.update(&track.kf, &z)?
        };
        track.kf = state.clone();
        track.checkpoint = state;
        track.last_obs = z;
        track.history.push_back(z.center());
        if track.history.len() > HISTORY_LEN {
            track.history.pop_front();
        }
        track.hits += 1;
        track.age_since_update = 0;
        track.last_confidence = det.confidence;
        if track.hits >= min_hits {
            track.confirmed = true;
        }
        track.status = if track.confirmed {
            TrackStatus::Confirmed
        } else {
            TrackStatus::Tentative
        };
        if let Some(new) = &det.embedding {
            track.embedding = Some(match &track.embedding {
                Some(old) if old.dim() == new.dim() => ema_update(old, new, det.confidence, &self.cfg.ema)?,
                _ => new.clone(),
            });
        }
        if hist.is_some() {
            track.depth_hist = hist;
        }
        track.self_mask = det.self_mask.clone();
        Ok(())
    }

    fn spawn(&mut self, det: &Detection, frame: u64, hist: Option<DepthHistogram>) {
        let z = Observation::from_bbox(&det.bbox, frame);
        let state = self.model.initiate(&z);
        let confirmed = self.cfg.min_hits <= 1;
        self.tracks.push(Track {
            id: self.next_id,
            kf: state.clone(),
            checkpoint: state,
            status: if confirmed {
                TrackStatus::Confirmed
            } else {
                TrackStatus::Tentative
            },
            last_obs: z,
            history: VecDeque::from([z.center()]),
            embedding: det.embedding.clone(),
            depth_hist: hist,
            self_mask: det.self_mask.clone(),
            hits: 1,
            age_since_update: 0,
            last_confidence: det.confidence,
            confirmed,
        });
        self.next_id += 1;
    }
}

/// Builds the tracker's per-frame detection lists from a bundle.
pub fn bundle_detections(bundle: &SequenceBundle) -> Vec<Vec<Detection>> {
    (1..=bundle.info.frames)
        .map(|frame| {
            bundle
                .detections(frame)
                .iter()
                .enumerate()
                .map(|(idx, row)| {
                    let key = (frame, idx as u32);
                    let embedding = bundle
                        .embeddings
                        .as_ref()
                        .and_then(|s| s.get(key))
                        .and_then(|v| Embedding::new(v.iter().map(|&x| x as f64).collect()).ok());
                    let (self_mask, back_mask) = match &bundle.masks {
                        Some(m) => (m.self_mask(key).cloned(), m.back_mask(key).cloned()),
                        None => (None, None),
                    };
                    Detection {
                        bbox: row.bbox,
                        confidence: row.conf,
                        embedding,
                        self_mask,
                        back_mask,
                    }
                })
                .collect()
        })
        .collect()
}

/// Tracks a whole sequence; rows come out sorted by `(frame, id)`.
pub fn run_sequence(bundle: &SequenceBundle, cfg: &TrackerConfig) -> Result<Vec<MotRow>> {
    let mut tracker = Tracker::new(cfg.clone())?;
    let mut rows = Vec::new();
    for (i, dets) in bundle_detections(bundle).iter().enumerate() {
        let frame = i as u64 + 1;
        let depth = bundle.depth.as_ref().map(|d| &d[i]);
        for o in tracker.step(frame, dets, depth)? {
            rows.push(MotRow::track(frame, o.id as i64, o.bbox, o.confidence));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(l: f64, t: f64, c: f64) -> Detection {
        Detection::new(BBox::new(l, t, 40.0, 80.0), c)
    }

    #[test]
    fn single_detection_keeps_id() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        let o1 = tr.step(1, &[det(100.0, 100.0, 0.9)], None).unwrap();
        let o2 = tr.step(2, &[det(102.0, 100.0, 0.9)], None).unwrap();
        assert_eq!(o1.len(), 1);
        assert_eq!(o1[0].id, o2[0].id);
        assert_eq!(tr.tracks()[0].hits, 2);
    }

    #[test]
    fn empty_frame_ages_tracks() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        tr.step(1, &[det(100.0, 100.0, 0.9), det(300.0, 100.0, 0.9)], None)
            .unwrap();
        let out = tr.step(2, &[], None).unwrap();
        assert!(out.is_empty());
        assert!(tr.tracks().iter().all(|t| t.age_since_update == 1));
    }

    #[test]
    fn frame_order_enforced() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        tr.step(5, &[], None).unwrap();
        assert!(matches!(tr.step(5, &[], None), Err(Error::FrameOrder { .. })));
        assert!(tr.step(4, &[], None).is_err());
    }

    #[test]
    fn tracks_expire_after_max_age() {
        let cfg = TrackerConfig {
            max_age: 3,
            ..Default::default()
        };
        let mut tr = Tracker::new(cfg).unwrap();
        tr.step(1, &[det(10.0, 10.0, 0.9)], None).unwrap();
        for f in 2..=4 {
            tr.step(f, &[], None).unwrap();
        }
        assert_eq!(tr.tracks().len(), 1);
        tr.step(5, &[], None).unwrap();
        assert!(tr.tracks().is_empty());
    }

    #[test]
    fn min_hits_gate_after_warmup() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        for f in 1..=4 {
            tr.step(f, &[], None).unwrap();
        }
        // new object after warm-up: hidden until its third hit
        assert!(tr.step(5, &[det(10.0, 10.0, 0.9)], None).unwrap().is_empty());
        assert!(tr.step(6, &[det(10.0, 10.0, 0.9)], None).unwrap().is_empty());
        assert_eq!(tr.step(7, &[det(10.0, 10.0, 0.9)], None).unwrap().len(), 1);
    }

    #[test]
    fn low_confidence_detections_only_extend_tracks() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        tr.step(1, &[det(10.0, 10.0, 0.9)], None).unwrap();
        let out = tr
            .step(2, &[det(12.0, 10.0, 0.4), det(400.0, 10.0, 0.4)], None)
            .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(tr.tracks().len(), 1);
        // a 0.05 detection is below the low threshold and ignored entirely
        let out = tr.step(3, &[det(14.0, 10.0, 0.05)], None).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn ids_strictly_increase() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        tr.step(1, &[det(10.0, 10.0, 0.9)], None).unwrap();
        tr.step(2, &[det(500.0, 300.0, 0.9)], None).unwrap();
        tr.step(3, &[det(900.0, 10.0, 0.9)], None).unwrap();
        let ids: Vec<u64> = tr.tracks().iter().map(|t| t.id).collect();
        assert_eq!(ids, vec![1, 2, 3]);
    }

    #[test]
    fn mask_matrix_only_uses_previous_frame_tracks() {
        let mask = Mask::from_fn(8, 8, |x, _| x < 4).unwrap();
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        let mut d = det(10.0, 10.0, 0.9);
        d.self_mask = Some(mask.clone());
        tr.step(1, &[d.clone()], None).unwrap();
        let track = &tr.tracks()[0];
        let mut probe = d.clone();
        probe.back_mask = Some(mask.clone());
        let mut warnings = 0;
        let m = mask_iou_matrix(&[track], &[&probe], 2, &mut warnings);
        assert_eq!(m.get(0, 0), 1.0);
        let m = mask_iou_matrix(&[track], &[&probe], 4, &mut warnings);
        assert_eq!(m.get(0, 0), 0.0);
        probe.back_mask = Some(Mask::empty(9, 8).unwrap());
        let m = mask_iou_matrix(&[track], &[&probe], 2, &mut warnings);
        assert_eq!((m.get(0, 0), warnings), (0.0, 1));
        // half-overlapping rectangles: 16 / 48
        probe.back_mask = Some(Mask::from_fn(8, 8, |x, _| (2..6).contains(&x)).unwrap());
        let m = mask_iou_matrix(&[track], &[&probe], 2, &mut warnings);
        assert!((m.get(0, 0) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = TrackerConfig {
            det_low_thresh: 0.7,
            ..Default::default()
        };
        assert!(Tracker::new(cfg).is_err());
    }
}

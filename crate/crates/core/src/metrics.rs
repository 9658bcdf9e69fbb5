//! CLEAR-MOT counts (MOTA, ID switches) and identity F1.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::assignment::solve_with;
use crate::error::{Error, Result};
use crate::geometry::bbox_iou;
use crate::io::mot::MotRow;
use crate::scoring::{Cue, ScoreMatrix};

pub const DEFAULT_IOU_THRESH: f64 = 0.5;

/// Matched `(gt id, pred id)` pairs in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatches {
    pub frame: u64,
    pub pairs: Vec<(i64, i64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mota: f64,
    pub idf1: f64,
    pub idsw: u64,
    pub fp: u64,
    pub fn_: u64,
    pub gt_count: u64,
    pub pred_count: u64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
    pub frames: Vec<FrameMatches>,
}

impl EvalReport {
    pub fn matches(&self) -> u64 {
        self.frames.iter().map(|f| f.pairs.len() as u64).sum()
    }
}

fn idf1_from(idtp: u64, idfp: u64, idfn: u64) -> f64 {
    let denom = 2 * idtp + idfp + idfn;
    if denom == 0 {
        0.0
    } else {
        2.0 * idtp as f64 / denom as f64
    }
}

/// Pools counts over several sequences (not an average of ratios).
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mota: f64,
    pub idf1: f64,
    pub idsw: u64,
    pub fp: u64,
    pub fn_: u64,
    pub gt_count: u64,
}

pub fn aggregate<'a>(reports: impl IntoIterator<Item = &'a EvalReport>) -> Summary {
    let (mut idsw, mut fp, mut fn_, mut gt, mut idtp, mut idfp, mut idfn) = (0, 0, 0, 0, 0, 0, 0);
    for r in reports {
        idsw += r.idsw;
        fp += r.fp;
        fn_ += r.fn_;
        gt += r.gt_count;
        idtp += r.idtp;
        idfp += r.idfp;
        idfn += r.idfn;
    }
    Summary {
        mota: if gt == 0 {
            0.0
        } else {
            1.0 - (fn_ + fp + idsw) as f64 / gt as f64
        },
        idf1: idf1_from(idtp, idfp, idfn),
        idsw,
        fp,
        fn_,
        gt_count: gt,
    }
}

impl From<&EvalReport> for Summary {
    fn from(r: &EvalReport) -> Self {
        aggregate([r])
    }
}

fn group_by_frame<'a>(rows: &'a [MotRow], what: &str) -> Result<BTreeMap<u64, Vec<&'a MotRow>>> {
    let mut frames: BTreeMap<u64, Vec<&MotRow>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for r in rows {
        if r.id <= 0 {
            return Err(Error::InvalidArgument(format!(
                "{what} row in frame {} has non-positive id {}",
                r.frame, r.id
            )));
        }
        if !seen.insert((r.frame, r.id)) {
            return Err(Error::InvalidArgument(format!(
                "{what} id {} appears twice in frame {}",
                r.id, r.frame
            )));
        }
        frames.entry(r.frame).or_default().push(r);
    }
    Ok(frames)
}

pub fn evaluate(gt: &[MotRow], pred: &[MotRow], iou_thresh: f64) -> Result<EvalReport> {
    if gt.is_empty() {
        return Err(Error::InvalidArgument("ground truth is empty; MOTA undefined".into()));
    }
    if !(0.0..=1.0).contains(&iou_thresh) || iou_thresh == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "IoU threshold {iou_thresh} outside (0, 1]"
        )));
    }
    let gt_frames = group_by_frame(gt, "ground-truth")?;
    let pred_frames = group_by_frame(pred, "prediction")?;
    let all_frames: BTreeSet<u64> = gt_frames.keys().chain(pred_frames.keys()).copied().collect();

    let gt_ids: Vec<i64> = gt.iter().map(|r| r.id).collect::<BTreeSet<_>>().into_iter().collect();
    let pred_ids: Vec<i64> = pred.iter().map(|r| r.id).collect::<BTreeSet<_>>().into_iter().collect();
    let gt_index: HashMap<i64, usize> = gt_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let pred_index: HashMap<i64, usize> = pred_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut overlap = vec![vec![0u64; pred_ids.len()]; gt_ids.len()];

    let empty = Vec::new();
    let mut last_match: HashMap<i64, i64> = HashMap::new();
    let (mut idsw, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    let mut frames = Vec::with_capacity(all_frames.len());

    for frame in all_frames {
        let g = gt_frames.get(&frame).unwrap_or(&empty);
        let p = pred_frames.get(&frame).unwrap_or(&empty);
        let iou = ScoreMatrix::from_fn(g.len(), p.len(), Cue::Iou, |i, j| bbox_iou(&g[i].bbox, &p[j].bbox));

        for i in 0..g.len() {
            for j in 0..p.len() {
                if iou.get(i, j) >= iou_thresh {
                    overlap[gt_index[&g[i].id]][pred_index[&p[j].id]] += 1;
                }
            }
        }

        // Keep last frame's pairings that are still valid, match the rest.
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut g_used = vec![false; g.len()];
        let mut p_used = vec![false; p.len()];
        for i in 0..g.len() {
            if let Some(&prev) = last_match.get(&g[i].id) {
                if let Some(j) = p.iter().position(|r| r.id == prev) {
                    if !p_used[j] && iou.get(i, j) >= iou_thresh {
                        pairs.push((i, j));
                        g_used[i] = true;
                        p_used[j] = true;
                    }
                }
            }
        }
        let free_g: Vec<usize> = (0..g.len()).filter(|&i| !g_used[i]).collect();
        let free_p: Vec<usize> = (0..p.len()).filter(|&j| !p_used[j]).collect();
        if !free_g.is_empty() && !free_p.is_empty() {
            let sub = ScoreMatrix::from_fn(free_g.len(), free_p.len(), Cue::Iou, |a, b| {
                -iou.get(free_g[a], free_p[b])
            });
            let res = solve_with(&sub, |a, b| iou.get(free_g[a], free_p[b]) < iou_thresh);
            pairs.extend(res.pairs.into_iter().map(|(a, b)| (free_g[a], free_p[b])));
        }
        pairs.sort_unstable();

        let mut id_pairs = Vec::with_capacity(pairs.len());
        for &(i, j) in &pairs {
            let (gid, pid) = (g[i].id, p[j].id);
            if let Some(prev) = last_match.insert(gid, pid) {
                if prev != pid {
                    idsw += 1;
                }
            }
            id_pairs.push((gid, pid));
        }
        fp += (p.len() - pairs.len()) as u64;
        fn_ += (g.len() - pairs.len()) as u64;
        frames.push(FrameMatches { frame, pairs: id_pairs });
    }

    let idtp = if gt_ids.is_empty() || pred_ids.is_empty() {
        0
    } else {
        let cost = ScoreMatrix::from_fn(gt_ids.len(), pred_ids.len(), Cue::Iou, |i, j| -(overlap[i][j] as f64));
        let res = solve_with(&cost, |_, _| false);
        res.pairs.iter().map(|&(i, j)| overlap[i][j]).sum()
    };
    let gt_count = gt.len() as u64;
    let pred_count = pred.len() as u64;
    let idfn = gt_count - idtp;
    let idfp = pred_count - idtp;

    Ok(EvalReport {
        mota: 1.0 - (fn_ + fp + idsw) as f64 / gt_count as f64,
        idf1: idf1_from(idtp, idfp, idfn),
        idsw,
        fp,
        fn_,
        gt_count,
        pred_count,
        idtp,
        idfp,
        idfn,
        frames,
    })
}

pub const CSV_HEADER: &str = "sequence,MOTA,IDF1,IDSW,FP,FN";

pub fn csv_row(name: &str, s: &Summary) -> String {
    format!("{name},{:.6},{:.6},{},{},{}", s.mota, s.idf1, s.idsw, s.fp, s.fn_)
}

/// One row per sequence plus a pooled `aggregate` row.
pub fn format_report_csv(rows: &[(String, EvalReport)]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (name, r) in rows {
        out.push_str(&csv_row(name, &Summary::from(r)));
        out.push('\n');
    }
    out.push_str(&csv_row("aggregate", &aggregate(rows.iter().map(|(_, r)| r))));
    out.push('\n');
    out
}

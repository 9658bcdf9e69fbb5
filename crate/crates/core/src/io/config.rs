//! Flat `key=value` run configuration mirroring [`TrackerConfig`].
//!
//! Lines starting with `#` are comments. Vector-valued keys (`kf_p_init`,
//! `kf_q`, `kf_r`) take space-separated numbers. Unknown keys are errors.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tracker::{MotionCue, TrackerConfig};

/// Every accepted key, in the order [`format_config`] writes them.
pub const KEYS: &[&str] = &[
    "det_high_thresh",
    "det_low_thresh",
    "stage2_iou_thresh",
    "match_accept_thresh",
    "max_age",
    "min_hits",
    "ema_trust",
    "ema_thresh",
    "w_has",
    "w_ang",
    "w_depth",
    "w_emb",
    "depth_bins",
    "depth_from_mask",
    "motion_cue",
    "oru",
    "hard_mask_emb_thresh",
    "kf_p_init",
    "kf_q",
    "kf_r",
];

fn bad(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn real(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| bad(key, format!("expected a number, got `{v}`")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, "must be finite"))
    }
}

fn int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| bad(key, format!("expected a non-negative integer, got `{v}`")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(bad(key, format!("expected true or false, got `{v}`"))),
    }
}

fn vector<const N: usize>(key: &str, v: &str) -> Result<[f64; N]> {
    let vals: Vec<f64> = v.split_whitespace().map(|s| real(key, s)).collect::<Result<_>>()?;
    vals.try_into()
        .map_err(|v: Vec<f64>| bad(key, format!("expected {N} values, got {}", v.len())))
}

/// Applies one `key=value` setting.
pub fn apply_setting(cfg: &mut TrackerConfig, key: &str, value: &str) -> Result<()> {
    let v = value.trim();
    match key {
        "det_high_thresh" => cfg.det_high_thresh = real(key, v)?,
        "det_low_thresh" => cfg.det_low_thresh = real(key, v)?,
        "stage2_iou_thresh" => cfg.stage2_iou_thresh = real(key, v)?,
        "match_accept_thresh" => cfg.match_accept_thresh = real(key, v)?,
        "max_age" => cfg.max_age = int(key, v)?,
        "min_hits" => cfg.min_hits = int(key, v)?,
        "ema_trust" => cfg.ema.trust = real(key, v)?,
        "ema_thresh" => cfg.ema.thresh = real(key, v)?,
        "w_has" => cfg.weights.w_has = real(key, v)?,
        "w_ang" => cfg.weights.w_ang = real(key, v)?,
        "w_depth" => cfg.weights.w_depth = real(key, v)?,
        "w_emb" => cfg.weights.w_emb = real(key, v)?,
        "depth_bins" => cfg.depth_bins = int(key, v)?,
        "depth_from_mask" => cfg.depth_from_mask = boolean(key, v)?,
        "motion_cue" => cfg.motion_cue = v.parse::<MotionCue>().map_err(|e| bad(key, e))?,
        "oru" => cfg.oru = boolean(key, v)?,
        "hard_mask_emb_thresh" => cfg.hard_mask_emb_thresh = real(key, v)?,
        "kf_p_init" => cfg.kf.p_init = vector(key, v)?,
        "kf_q" => cfg.kf.q = vector(key, v)?,
        "kf_r" => cfg.kf.r = vector(key, v)?,
        _ => return Err(bad(key, "unknown configuration key")),
    }
    Ok(())
}

/// Parses a config file on top of the defaults and validates the result.
pub fn parse_config(text: &str, source: &str) -> Result<TrackerConfig> {
    let mut cfg = TrackerConfig::default();
    for (n, line) in super::content_lines(text) {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(source, n, "expected key=value"))?;
        apply_setting(&mut cfg, k.trim(), v).map_err(|e| Error::parse(source, n, e.to_string()))?;
    }
    cfg.validate().map_err(|e| Error::parse(source, 0, e.to_string()))?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<TrackerConfig> {
    parse_config(&super::read_text(path)?, &path.display().to_string())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Writes every key; `parse_config(format_config(c)) == c`.
pub fn format_config(cfg: &TrackerConfig) -> String {
    let w = &cfg.weights;
    let lines = [
        format!("det_high_thresh={}", cfg.det_high_thresh),
        format!("det_low_thresh={}", cfg.det_low_thresh),
        format!("stage2_iou_thresh={}", cfg.stage2_iou_thresh),
        format!("match_accept_thresh={}", cfg.match_accept_thresh),
        format!("max_age={}", cfg.max_age),
        format!("min_hits={}", cfg.min_hits),
        format!("ema_trust={}", cfg.ema.trust),
        format!("ema_thresh={}", cfg.ema.thresh),
        format!("w_has={}", w.w_has),
        format!("w_ang={}", w.w_ang),
        format!("w_depth={}", w.w_depth),
        format!("w_emb={}", w.w_emb),
        format!("depth_bins={}", cfg.depth_bins),
        format!("depth_from_mask={}", cfg.depth_from_mask),
        format!("motion_cue={}", cfg.motion_cue),
        format!("oru={}", cfg.oru),
        format!("hard_mask_emb_thresh={}", cfg.hard_mask_emb_thresh),
        format!("kf_p_init={}", join(&cfg.kf.p_init)),
        format!("kf_q={}", join(&cfg.kf.q)),
        format!("kf_r={}", join(&cfg.kf.r)),
    ];
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

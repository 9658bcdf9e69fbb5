//! Cue ablation: run several tracker configurations over a suite of
//! sequences and pool the metrics per configuration.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::bundle::SequenceBundle;
use crate::io::config::apply_setting;
use crate::io::mot::MotRow;
use crate::metrics::{aggregate, evaluate, EvalReport, Summary, DEFAULT_IOU_THRESH};
use crate::tracker::{run_sequence, MotionCue, TrackerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedConfig {
    pub name: String,
    pub config: TrackerConfig,
}

fn preset(name: &str, cue: MotionCue, w_depth: f64) -> NamedConfig {
    let mut config = TrackerConfig {
        motion_cue: cue,
        ..TrackerConfig::default()
    };
    config.weights.w_depth = w_depth;
    NamedConfig {
        name: name.into(),
        config,
    }
}

/// The five cue configurations, weakest first.
pub fn presets() -> Vec<NamedConfig> {
    vec![
        preset("mask-iou", MotionCue::Mask, 0.0),
        preset("bbox-iou", MotionCue::Bbox, 0.0),
        preset("has", MotionCue::Has, 0.0),
        preset("bbox-depth", MotionCue::Bbox, 1.0),
        preset("has-depth", MotionCue::Has, 1.0),
    ]
}

/// Parses a grid file. Each non-comment line is
/// `name: key=v1,v2 other=a,b` and expands to the cartesian product of the
/// listed values on top of the default configuration, in the order written.
pub fn parse_grid(text: &str, source: &str) -> Result<Vec<NamedConfig>> {
    let mut out = Vec::new();
    for (n, raw) in crate::io::content_lines(text) {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(source, n, "expected `name: key=v1,v2 ...`"))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::parse(source, n, "grid row needs a name"));
        }
        let mut axes: Vec<(String, Vec<String>)> = Vec::new();
        for tok in rest.split_whitespace() {
            let (k, vs) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(source, n, format!("`{tok}` is not key=values")))?;
            let values: Vec<String> = vs.split(',').map(str::to_string).collect();
            if values.iter().any(String::is_empty) {
                return Err(Error::parse(source, n, format!("empty value in `{tok}`")));
            }
            axes.push((k.to_string(), values));
        }
        let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (k, values) in &axes {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((k.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        for combo in combos {
            let mut config = TrackerConfig::default();
            for (k, v) in &combo {
                apply_setting(&mut config, k, v).map_err(|e| Error::parse(source, n, e.to_string()))?;
            }
            config.validate().map_err(|e| Error::parse(source, n, e.to_string()))?;
            let label = if combo.is_empty() {
                name.to_string()
            } else {
                let parts: Vec<String> = combo.iter().map(|(k, v)| format!("{k}={v}")).collect();
                format!("{name}[{}]", parts.join(";"))
            };
            out.push(NamedConfig { name: label, config });
        }
    }
    Ok(out)
}

/// Sidecars a configuration cannot run without, given what the bundle has.
pub fn missing_sidecars(cfg: &TrackerConfig, bundle: &SequenceBundle) -> Vec<&'static str> {
    let mut missing = Vec::new();
    if cfg.motion_cue != MotionCue::Bbox && bundle.masks.is_none() {
        missing.push("masks.txt");
    }
    if cfg.weights.w_depth > 0.0 && bundle.depth.is_none() {
        missing.push("depth/");
    }
    if cfg.weights.w_emb > 0.0 && bundle.embeddings.is_none() {
        missing.push("emb.dte");
    }
    missing
}

#[derive(Debug, Clone)]
pub struct SuiteSequence {
    pub name: String,
    pub bundle: SequenceBundle,
    pub gt: Vec<MotRow>,
}

#[derive(Debug, Clone)]
pub enum RowStatus {
    Ok {
        summary: Summary,
        per_sequence: Vec<(String, EvalReport)>,
    },
    Skipped(String),
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub config: NamedConfig,
    pub status: RowStatus,
}

impl AblationRow {
    pub fn summary(&self) -> Option<&Summary> {
        match &self.status {
            RowStatus::Ok { summary, .. } => Some(summary),
            RowStatus::Skipped(_) => None,
        }
    }
}

/// Runs every configuration on every sequence. Work is spread over the
/// current rayon pool; results keep the configuration order.
pub fn run_ablation(suite: &[SuiteSequence], configs: &[NamedConfig]) -> Result<Vec<AblationRow>> {
    configs
        .par_iter()
        .map(|nc| {
            let mut missing: Vec<String> = Vec::new();
            for s in suite {
                for m in missing_sidecars(&nc.config, &s.bundle) {
                    missing.push(format!("{}: no {m}", s.name));
                }
            }
            if !missing.is_empty() {
                return Ok(AblationRow {
                    config: nc.clone(),
                    status: RowStatus::Skipped(format!("missing sidecar ({})", missing.join("; "))),
                });
            }
            let per_sequence: Vec<(String, EvalReport)> = suite
                .par_iter()
                .map(|s| {
                    let pred = run_sequence(&s.bundle, &nc.config)?;
                    Ok((s.name.clone(), evaluate(&s.gt, &pred, DEFAULT_IOU_THRESH)?))
                })
                .collect::<Result<_>>()?;
            let summary = aggregate(per_sequence.iter().map(|(_, r)| r));
            Ok(AblationRow {
                config: nc.clone(),
                status: RowStatus::Ok { summary, per_sequence },
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "config,status,MOTA,IDF1,IDSW,FP,FN,note";

pub fn format_ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let name = r.config.name.replace(',', ";");
        match &r.status {
            RowStatus::Ok { summary: s, .. } => out.push_str(&format!(
                "{name},ok,{:.6},{:.6},{},{},{},\n",
                s.mota, s.idf1, s.idsw, s.fp, s.fn_
            )),
            RowStatus::Skipped(reason) => out.push_str(&format!("{name},skipped,,,,,,{}\n", reason.replace(',', ";"))),
        }
    }
    out
}

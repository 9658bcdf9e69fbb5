//! Text form of a [`Scenario`]: `key = value` lines, a `[noise]` block and
//! one `[object]` block per object. See `docs/scenario-format.md`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::simulator::{Identity, NoiseSpec, ObjectSpec, Scenario, Shape};

enum Section {
    Top,
    Noise,
    Object,
}

struct ObjectDraft {
    line: usize,
    name: Option<String>,
    identity: Option<Identity>,
    waypoints: Option<Vec<(u64, f64, f64)>>,
    size: Option<(f64, f64)>,
    depth: Option<Vec<(u64, f64)>>,
    shape: Shape,
    hidden: Vec<(u64, u64)>,
}

fn perr(source: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::parse(source, line, msg)
}

fn num<T: std::str::FromStr>(v: &str, what: &str, source: &str, line: usize) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| perr(source, line, format!("{what}: cannot parse `{v}`")))
}

fn parse_identity(v: &str, source: &str, line: usize) -> Result<Identity> {
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        ["random", tag] if !tag.is_empty() => Ok(Identity::Random(tag.to_string())),
        ["cluster", name, member] if !name.is_empty() => Ok(Identity::Cluster {
            name: name.to_string(),
            member: num(member, "cluster member", source, line)?,
        }),
        _ => Err(perr(
            source,
            line,
            format!("identity must be random:<tag> or cluster:<name>:<member>, got `{v}`"),
        )),
    }
}

fn parse_waypoints(v: &str, source: &str, line: usize) -> Result<Vec<(u64, f64, f64)>> {
    v.split_whitespace()
        .map(|tok| {
            let p: Vec<&str> = tok.split(':').collect();
            if p.len() != 3 {
                return Err(perr(source, line, format!("waypoint `{tok}` is not frame:u:v")));
            }
            Ok((
                num(p[0], "frame", source, line)?,
                num(p[1], "u", source, line)?,
                num(p[2], "v", source, line)?,
            ))
        })
        .collect()
}

fn parse_depth(v: &str, source: &str, line: usize) -> Result<Vec<(u64, f64)>> {
    v.split_whitespace()
        .map(|tok| {
            let (f, d) = tok
                .split_once(':')
                .ok_or_else(|| perr(source, line, format!("depth knot `{tok}` is not frame:meters")))?;
            Ok((num(f, "frame", source, line)?, num(d, "depth", source, line)?))
        })
        .collect()
}

fn parse_hidden(v: &str, source: &str, line: usize) -> Result<Vec<(u64, u64)>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|tok| {
            let (a, b) = tok.split_once('-').unwrap_or((tok, tok));
            Ok((
                num(a, "hidden start", source, line)?,
                num(b, "hidden end", source, line)?,
            ))
        })
        .collect()
}

impl ObjectDraft {
    fn finish(self, source: &str, index: usize) -> Result<ObjectSpec> {
        let missing = |k: &str| perr(source, self.line, format!("object block is missing `{k}`"));
        Ok(ObjectSpec {
            name: self.name.clone().unwrap_or_else(|| format!("obj{}", index + 1)),
            identity: self
                .identity
                .clone()
                .unwrap_or_else(|| Identity::Random(format!("obj{}", index + 1))),
            waypoints: self.waypoints.clone().ok_or_else(|| missing("waypoints"))?,
            size: self.size.ok_or_else(|| missing("size"))?,
            depth: self.depth.clone().ok_or_else(|| missing("depth"))?,
            shape: self.shape,
            hidden: self.hidden,
        })
    }
}

pub fn parse_scenario(text: &str, source: &str) -> Result<Scenario> {
    let mut sc = Scenario {
        name: "scenario".into(),
        seed: 1,
        frames: 0,
        width: 640,
        height: 360,
        emb_dim: 32,
        cluster_spread: 0.05,
        objects: Vec::new(),
        noise: NoiseSpec::default(),
    };
    let mut drafts: Vec<ObjectDraft> = Vec::new();
    let mut section = Section::Top;

    for (n, raw) in crate::io::content_lines(text) {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        match line {
            "[noise]" => {
                section = Section::Noise;
                continue;
            }
            "[object]" => {
                section = Section::Object;
                drafts.push(ObjectDraft {
                    line: n,
                    name: None,
                    identity: None,
                    waypoints: None,
                    size: None,
                    depth: None,
                    shape: Shape::Rectangle,
                    hidden: Vec::new(),
                });
                continue;
            }
            _ if line.starts_with('[') => return Err(perr(source, n, format!("unknown section `{line}`"))),
            _ => {}
        }
        let (k, v) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| perr(source, n, "expected key = value"))?;
        match section {
            Section::Top => match k {
                "name" => sc.name = v.to_string(),
                "seed" => sc.seed = num(v, k, source, n)?,
                "frames" => sc.frames = num(v, k, source, n)?,
                "width" => sc.width = num(v, k, source, n)?,
                "height" => sc.height = num(v, k, source, n)?,
                "emb_dim" => sc.emb_dim = num(v, k, source, n)?,
                "cluster_spread" => sc.cluster_spread = num(v, k, source, n)?,
                _ => return Err(perr(source, n, format!("unknown key `{k}`"))),
            },
            Section::Noise => {
                let nz = &mut sc.noise;
                match k {
                    "bbox_jitter" => nz.bbox_jitter = num(v, k, source, n)?,
                    "dropout" => nz.dropout = num(v, k, source, n)?,
                    "conf_base" => nz.conf_base = num(v, k, source, n)?,
                    "conf_jitter" => nz.conf_jitter = num(v, k, source, n)?,
                    "occluded_conf_mult" => nz.occluded_conf_mult = num(v, k, source, n)?,
                    "emb_noise" => nz.emb_noise = num(v, k, source, n)?,
                    "depth_noise" => nz.depth_noise = num(v, k, source, n)?,
                    "back_mask_erosion" => nz.back_mask_erosion = num(v, k, source, n)?,
                    _ => return Err(perr(source, n, format!("unknown noise key `{k}`"))),
                }
            }
            Section::Object => {
                let d = drafts.last_mut().expect("object section has a draft");
                match k {
                    "name" => d.name = Some(v.to_string()),
                    "identity" => d.identity = Some(parse_identity(v, source, n)?),
                    "waypoints" => d.waypoints = Some(parse_waypoints(v, source, n)?),
                    "size" => {
                        let p: Vec<&str> = v.split_whitespace().collect();
                        if p.len() != 2 {
                            return Err(perr(source, n, "size takes `width height`"));
                        }
                        d.size = Some((num(p[0], "width", source, n)?, num(p[1], "height", source, n)?));
                    }
                    "depth" => d.depth = Some(parse_depth(v, source, n)?),
                    "shape" => {
                        d.shape = match v {
                            "rectangle" => Shape::Rectangle,
                            "ellipse" => Shape::Ellipse,
                            _ => {
                                return Err(perr(
                                    source,
                                    n,
                                    format!("shape must be rectangle or ellipse, got `{v}`"),
                                ))
                            }
                        }
                    }
                    "hidden" => d.hidden = parse_hidden(v, source, n)?,
                    _ => return Err(perr(source, n, format!("unknown object key `{k}`"))),
                }
            }
        }
    }
    sc.objects = drafts
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.finish(source, i))
        .collect::<Result<_>>()?;
    sc.validate()?;
    Ok(sc)
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&crate::io::read_text(path)?, &path.display().to_string())
}

pub fn format_scenario(sc: &Scenario) -> String {
    let mut out = format!(
        "name = {}\nseed = {}\nframes = {}\nwidth = {}\nheight = {}\nemb_dim = {}\ncluster_spread = {}\n",
        sc.name, sc.seed, sc.frames, sc.width, sc.height, sc.emb_dim, sc.cluster_spread
    );
    let n = &sc.noise;
    out.push_str(&format!(
        "\n[noise]\nbbox_jitter = {}\ndropout = {}\nconf_base = {}\nconf_jitter = {}\noccluded_conf_mult = {}\nemb_noise = {}\ndepth_noise = {}\nback_mask_erosion = {}\n",
        n.bbox_jitter, n.dropout, n.conf_base, n.conf_jitter, n.occluded_conf_mult, n.emb_noise, n.depth_noise, n.back_mask_erosion
    ));
    for o in &sc.objects {
        let identity = match &o.identity {
            Identity::Random(tag) => format!("random:{tag}"),
            Identity::Cluster { name, member } => format!("cluster:{name}:{member}"),
        };
        let wp: Vec<String> = o.waypoints.iter().map(|(f, u, v)| format!("{f}:{u}:{v}")).collect();
        let depth: Vec<String> = o.depth.iter().map(|(f, d)| format!("{f}:{d}")).collect();
        out.push_str(&format!(
            "\n[object]\nname = {}\nidentity = {identity}\nshape = {}\nsize = {} {}\nwaypoints = {}\ndepth = {}\n",
            o.name,
            match o.shape {
                Shape::Rectangle => "rectangle",
                Shape::Ellipse => "ellipse",
            },
            o.size.0,
            o.size.1,
            wp.join(" "),
            depth.join(" ")
        ));
        if !o.hidden.is_empty() {
            let h: Vec<String> = o.hidden.iter().map(|(a, b)| format!("{a}-{b}")).collect();
            out.push_str(&format!("hidden = {}\n", h.join(", ")));
        }
    }
    out
}

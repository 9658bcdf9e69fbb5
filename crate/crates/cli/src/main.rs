//! `depthtrack`: track, simulate, evaluate and ablate from the command line.
//!
//! Every command writes its outputs plus a `*.manifest.txt` holding the
//! inputs, the configuration snapshot and wall-clock timings. Outputs never
//! depend on the clock or on `--jobs`; manifests do.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use depthtrack_core::ablation::{format_ablation_csv, parse_grid, presets, run_ablation, SuiteSequence};
use depthtrack_core::io::bundle::GROUND_TRUTH;
use depthtrack_core::io::config::{format_config, read_config};
use depthtrack_core::io::mot::{read_mot, write_mot};
use depthtrack_core::metrics::{format_report_csv, DEFAULT_IOU_THRESH};
use depthtrack_core::simulator::{builtin_names, builtin_scenario, read_scenario, render, write_rendered};
use depthtrack_core::{evaluate, load_bundle, run_sequence, Error, TrackerConfig};

const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "depthtrack", version, about = "Depth-aware multi-object tracker")]
struct Cli {
    /// Worker threads for per-sequence and per-configuration work.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track one sequence directory and write a MOT result file.
    Track {
        #[arg(long)]
        seq: PathBuf,
        /// Tracker configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a builtin or file-defined scenario into a sequence directory.
    Simulate {
        /// Builtin name or path to a scenario file.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed. Builtins default to 1, files to their own `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a result file against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESH)]
        iou: f64,
    },
    /// Run the five cue presets plus optional grid rows over sequences with gt.txt.
    Ablate {
        #[arg(long, required = true)]
        seq: Vec<PathBuf>,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Key/value record written next to every output.
struct Manifest {
    lines: Vec<(String, String)>,
    started: Instant,
    last: Instant,
}

impl Manifest {
    fn new(command: &str) -> Self {
        let now = Instant::now();
        let mut m = Manifest {
            lines: Vec::new(),
            started: now,
            last: now,
        };
        m.set("tool", format!("depthtrack {}", env!("CARGO_PKG_VERSION")));
        m.set("command", command);
        m.set("argv", std::env::args().collect::<Vec<_>>().join(" "));
        m
    }

    fn set(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    fn config(&mut self, prefix: &str, cfg: &TrackerConfig) {
        for line in format_config(cfg).lines() {
            if let Some((k, v)) = line.split_once('=') {
                self.set(&format!("{prefix}{}", k.trim()), v.trim());
            }
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        let ms = (now - self.last).as_secs_f64() * 1e3;
        self.last = now;
        self.set(&format!("time.{stage}_ms"), format!("{ms:.3}"));
    }

    fn write(mut self, path: &Path) -> anyhow::Result<()> {
        let total = self.started.elapsed().as_secs_f64() * 1e3;
        self.set("time.total_ms", format!("{total:.3}"));
        let mut text = String::new();
        for (k, v) in &self.lines {
            writeln!(text, "{k}={v}").unwrap();
        }
        write_text(path, &text)
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.txt");
    out.with_file_name(name)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_track(seq: &Path, config: Option<&Path>, out: &Path) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("track");
    let cfg = match config {
        Some(p) => read_config(p)?,
        None => TrackerConfig::default(),
    };
    let loaded = load_bundle(seq)?;
    for n in &loaded.notices {
        log::warn!("{}: {n}", seq.display());
    }
    manifest.lap("load");
    let rows = run_sequence(&loaded.bundle, &cfg)?;
    manifest.lap("track");
    write_mot(out, &rows)?;

    manifest.set("input.seq", seq.display());
    manifest.set(
        "input.config",
        config.map_or("(defaults)".to_string(), |p| p.display().to_string()),
    );
    manifest.set("output", out.display());
    manifest.set("rows", rows.len());
    manifest.config("config.", &cfg);
    manifest.write(&manifest_path(out))
}

fn cmd_simulate(scenario: &str, out: &Path, seed: Option<u64>) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("simulate");
    let path = Path::new(scenario);
    let mut sc = if path.is_file() {
        read_scenario(path)?
    } else if let Some(sc) = builtin_scenario(scenario, DEFAULT_SEED) {
        sc
    } else {
        bail!(
            "unknown scenario `{scenario}` (not a file); builtins: {}",
            builtin_names().join(", ")
        );
    };
    if let Some(s) = seed {
        sc.seed = s;
    }
    let seq = render(&sc)?;
    manifest.lap("render");
    write_rendered(out, &seq)?;
    manifest.lap("write");

    manifest.set("input.scenario", scenario);
    manifest.set("scenario.name", &sc.name);
    manifest.set("scenario.seed", sc.seed);
    manifest.set("output", out.display());
    manifest.write(&out.join("manifest.txt"))
}

fn cmd_eval(gt: &Path, pred: &Path, out: &Path, iou: f64) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("eval");
    let gt_rows = read_mot(gt)?;
    if gt_rows.is_empty() {
        bail!("{}: ground truth is empty", gt.display());
    }
    let pred_rows = read_mot(pred)?;
    let report = evaluate(&gt_rows, &pred_rows, iou)?;
    manifest.lap("evaluate");
    let name = pred
        .file_stem()
        .map(|s| s.to_string_lossy().replace(',', ";"))
        .unwrap_or_else(|| "pred".into());
    write_text(out, &format_report_csv(&[(name, report)]))?;

    manifest.set("input.gt", gt.display());
    manifest.set("input.pred", pred.display());
    manifest.set("iou_thresh", iou);
    manifest.set("output", out.display());
    manifest.write(&manifest_path(out))
}

fn sequence_name(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn cmd_ablate(seqs: &[PathBuf], grid: Option<&Path>, out: &Path) -> anyhow::Result<()> {
    use rayon::prelude::*;

    let mut manifest = Manifest::new("ablate");
    let mut configs = presets();
    if let Some(g) = grid {
        let text = std::fs::read_to_string(g).map_err(|e| Error::Io {
            path: g.to_path_buf(),
            source: e,
        })?;
        configs.extend(parse_grid(&text, &g.display().to_string())?);
    }
    let suite: Vec<SuiteSequence> = seqs
        .par_iter()
        .map(|dir| {
            let loaded = load_bundle(dir)?;
            for n in &loaded.notices {
                log::warn!("{}: {n}", dir.display());
            }
            let gt_path = dir.join(GROUND_TRUTH);
            if !gt_path.is_file() {
                bail!("{}: no {GROUND_TRUTH}; ablation needs ground truth", dir.display());
            }
            Ok(SuiteSequence {
                name: sequence_name(dir),
                bundle: loaded.bundle,
                gt: read_mot(&gt_path)?,
            })
        })
        .collect::<anyhow::Result<_>>()?;
    manifest.lap("load");
    let rows = run_ablation(&suite, &configs)?;
    manifest.lap("ablate");
    for r in &rows {
        if let depthtrack_core::ablation::RowStatus::Skipped(reason) = &r.status {
            log::warn!("{} skipped: {reason}", r.config.name);
        }
    }
    write_text(out, &format_ablation_csv(&rows))?;

    for (i, s) in seqs.iter().enumerate() {
        manifest.set(&format!("input.seq.{i}"), s.display());
    }
    manifest.set(
        "input.grid",
        grid.map_or("(none)".to_string(), |p| p.display().to_string()),
    );
    manifest.set("output", out.display());
    for nc in &configs {
        manifest.config(&format!("config.{}.", nc.name), &nc.config);
    }
    manifest.write(&manifest_path(out))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .context("starting worker pool")?;
    pool.install(|| match &cli.command {
        Command::Track { seq, config, out } => cmd_track(seq, config.as_deref(), out),
        Command::Simulate { scenario, out, seed } => cmd_simulate(scenario, out, *seed),
        Command::Eval { gt, pred, out, iou } => cmd_eval(gt, pred, out, *iou),
        Command::Ablate { seq, grid, out } => cmd_ablate(seq, grid.as_deref(), out),
    })
}

/// 2 for broken internal invariants, 1 for everything the user can fix.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Singular) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format(|buf, record| writeln!(buf, "{}: {}", record.level().as_str().to_lowercase(), record.args()))
        .init();
    std::panic::set_hook(Box::new(|info| {
        eprintln!("error: internal: {info}");
    }));

    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(2),
    }
}

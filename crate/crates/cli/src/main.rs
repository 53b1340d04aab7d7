//! `lcpat`: command-line front end of the lane-change pattern pipeline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lcpat_core::cluster::CenterMode;
use lcpat_core::config::{HighdInput, PipelineConfig};
use lcpat_core::hmm::{DecodeMethod, SelectionCriterion};
use lcpat_core::ingest::{generate_synthetic, write_highd, write_recordings_csv, ScenarioSpec};
use lcpat_core::pipeline::{self, Stage};
use lcpat_core::Error;

const USAGE: u8 = 1;
const DATA: u8 = 2;
const NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "lcpat", version, about = "Lane-change interactive pattern mining")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and canonicalize input recordings.
    Ingest(Pipeline),
    /// Find three-vehicle lane-change events.
    Extract(Pipeline),
    /// Fit GMM-HMMs and cut events into primitives.
    Segment(Pipeline),
    /// Resample primitives and cluster them with DTW K-means.
    Cluster(Pipeline),
    /// Score primitives and clusters by time-to-collision.
    Risk(Pipeline),
    /// Run every stage.
    Run(Pipeline),
    /// Print the summary tables of a finished run.
    Report {
        /// Run directory; defaults to the configured output directory.
        run_dir: Option<PathBuf>,
    },
    /// Generate a synthetic recording.
    Synth(Synth),
}

#[derive(Clone, Copy, ValueEnum)]
enum Selection {
    MaxLl,
    MinLl,
}

#[derive(Clone, Copy, ValueEnum)]
enum Decode {
    Viterbi,
    PosteriorArgmax,
}

#[derive(Clone, Copy, ValueEnum)]
enum Center {
    Dba,
    Medoid,
    Euclidean,
}

#[derive(Args)]
struct Pipeline {
    /// TOML config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory [config `output_dir`, then $LCPAT_OUT_DIR, then ./lcpat-out].
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(short, long)]
    jobs: Option<usize>,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Canonical recording CSV (repeatable).
    #[arg(long = "recording")]
    recordings: Vec<PathBuf>,
    /// highD recording as `<dir>/<id>`, e.g. `data/01` (repeatable).
    #[arg(long)]
    highd: Vec<PathBuf>,
    /// Synthetic scenario: a TOML scenario file, or `staged` for the built-in lane change.
    #[arg(long)]
    synthetic: Option<String>,
    /// Vehicle class triple such as PC-PC-PC, or `any`.
    #[arg(long)]
    type_filter: Option<String>,
    #[arg(long)]
    min_frames: Option<usize>,
    /// Resampled primitive length.
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, value_enum)]
    selection: Option<Selection>,
    #[arg(long, value_enum)]
    decode: Option<Decode>,
    #[arg(short)]
    k: Option<usize>,
    /// Elbow range as `lo..hi` (inclusive).
    #[arg(long, value_parser = parse_range)]
    k_range: Option<[usize; 2]>,
    #[arg(long, value_enum)]
    center: Option<Center>,
    #[arg(long)]
    ttc_cap: Option<f64>,
    /// Sets every stage seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Synth {
    /// TOML scenario file; the built-in staged lane change if omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Canonical recording CSV to write.
    #[arg(short, long)]
    out: PathBuf,
    /// Also write `frame,regime` ground truth here.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Also write highD-format files into this directory.
    #[arg(long)]
    highd_dir: Option<PathBuf>,
    /// Print the scenario as TOML and exit.
    #[arg(long)]
    print_spec: bool,
}

fn parse_range(s: &str) -> Result<[usize; 2], String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected lo..hi, got `{s}`"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok([p(lo)?, p(hi)?])
}

/// Failure carrying its exit status.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(if e.is_numeric() { NUMERIC } else { DATA }, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail(USAGE, msg.into())
}

fn load_spec(path: &Path) -> Result<ScenarioSpec, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    ScenarioSpec::from_toml(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

impl Pipeline {
    fn config(&self) -> Result<PipelineConfig, Fail> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p).map_err(|e| usage(e.to_string()))?,
            None => PipelineConfig::default(),
        };
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        cfg.input.recordings.extend(self.recordings.iter().cloned());
        for h in &self.highd {
            let id = h
                .file_name()
                .and_then(|s| s.to_str())
                .ok_or_else(|| usage(format!("bad --highd `{}`", h.display())))?;
            let dir = h.parent().unwrap_or(Path::new("."));
            cfg.input.highd.push(HighdInput::from_prefix(dir, id));
        }
        match self.synthetic.as_deref() {
            Some("staged") => cfg.input.synthetic = Some(ScenarioSpec::staged_lane_change()),
            Some(path) => cfg.input.synthetic = Some(load_spec(Path::new(path))?),
            None => {}
        }
        if let Some(v) = &self.type_filter {
            cfg.type_filter = v.clone();
        }
        if let Some(v) = self.min_frames {
            cfg.segment.min_frames = v;
        }
        if let Some(v) = self.length {
            cfg.prep.length = v;
        }
        if let Some(v) = self.n_max {
            cfg.segment.select.n_max = v;
        }
        if let Some(v) = self.selection {
            cfg.segment.select.criterion = match v {
                Selection::MaxLl => SelectionCriterion::MaxLl,
                Selection::MinLl => SelectionCriterion::MinLl,
            };
        }
        if let Some(v) = self.decode {
            cfg.segment.select.decode = match v {
                Decode::Viterbi => DecodeMethod::Viterbi,
                Decode::PosteriorArgmax => DecodeMethod::PosteriorArgmax,
            };
        }
        if let Some(v) = self.k {
            cfg.cluster.k = v;
        }
        if self.k_range.is_some() {
            cfg.cluster.k_range = self.k_range;
        }
        if let Some(v) = self.center {
            cfg.cluster.kmeans.center = match v {
                Center::Dba => CenterMode::Dba,
                Center::Medoid => CenterMode::Medoid,
                Center::Euclidean => CenterMode::Euclidean,
            };
        }
        if let Some(v) = self.ttc_cap {
            cfg.risk.ttc_cap = v;
        }
        if let Some(s) = self.seed {
            cfg.seeds.synthetic = s;
            cfg.seeds.classify = s;
            cfg.seeds.segment = s;
            cfg.seeds.cluster = s;
        }
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }

    fn run(&self, until: Stage) -> Result<(), Fail> {
        init_logging(self.verbose);
        if let Some(n) = self.jobs {
            if n == 0 {
                return Err(usage("--jobs must be at least 1"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| usage(e.to_string()))?;
        }
        let cfg = self.config()?;
        if self.print_config {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
        let dir = cfg.output_dir();
        let manifest = pipeline::run_stages(&cfg, &dir, until).map_err(|e| {
            let code = if e.source.is_numeric() { NUMERIC } else { DATA };
            Fail(code, e.to_string())
        })?;
        for s in &manifest.stages {
            let state = if s.cache_hit { "cached" } else { "ran" };
            println!("{:<8} {state}", s.stage.as_str());
        }
        for (name, n) in &manifest.counts {
            println!("{name}: {n}");
        }
        println!("output: {}", dir.display());
        Ok(())
    }
}

fn synth(args: &Synth) -> Result<(), Fail> {
    let spec = match &args.spec {
        Some(p) => load_spec(p)?,
        None => ScenarioSpec::staged_lane_change(),
    };
    if args.print_spec {
        print!("{}", spec.to_toml());
        return Ok(());
    }
    let syn = generate_synthetic(&spec, args.seed)?;
    write_recordings_csv(std::slice::from_ref(&syn.recording), &args.out)?;
    if let Some(p) = &args.labels {
        let mut text = String::from("frame,regime\n");
        for (f, l) in syn.labels.iter().enumerate() {
            text.push_str(&format!("{f},{l}\n"));
        }
        std::fs::write(p, text).map_err(|e| Fail(DATA, format!("{}: {e}", p.display())))?;
    }
    if let Some(dir) = &args.highd_dir {
        write_highd(&syn.recording, dir, &syn.recording.id)?;
    }
    for (v, f) in &syn.crossings {
        println!("vehicle {v} crosses at frame {f}");
    }
    Ok(())
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
}

fn dispatch(cmd: Cmd) -> Result<(), Fail> {
    match cmd {
        Cmd::Ingest(p) => p.run(Stage::Ingest),
        Cmd::Extract(p) => p.run(Stage::Extract),
        Cmd::Segment(p) => p.run(Stage::Segment),
        Cmd::Cluster(p) => p.run(Stage::Cluster),
        Cmd::Risk(p) | Cmd::Run(p) => p.run(Stage::Risk),
        Cmd::Report { run_dir } => {
            let dir = run_dir.unwrap_or_else(|| PipelineConfig::default().output_dir());
            let r = pipeline::report(&dir)?;
            print!("{r}");
            Ok(())
        }
        Cmd::Synth(s) => synth(&s),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(Fail::from(Error::Numeric("x".into())).0, NUMERIC);
        assert_eq!(Fail::from(Error::Validation("x".into())).0, DATA);
        assert_eq!(Fail::from(Error::InvalidInput("x".into())).0, DATA);
    }

    #[test]
    fn k_range_syntax() {
        assert_eq!(parse_range("2..9"), Ok([2, 9]));
        assert!(parse_range("2-9").is_err());
        assert!(parse_range("a..9").is_err());
    }
}

//! Staged batch run with on-disk caching.
//!
//! Every stage reads the artifacts of earlier stages from the run directory
//! and writes its own. A stage is skipped when its cache key (a SHA-256 over
//! its settings and the hashes of all upstream artifacts) matches the one
//! recorded in the previous `manifest.json` and its artifacts are unchanged
//! on disk. Artifacts are written under a `.partial` suffix and renamed once
//! the whole stage succeeds, so a failed stage leaves only `.partial` files.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{elbow_curve, kmeans_dtw, write_cluster_report, write_elbow_csv};
use crate::config::PipelineConfig;
use crate::extract::{csv_err, extract_events, write_events_csv, LcEvent, VehicleClasses};
use crate::hmm::{segment_scenario, Candidate, ModelDump, Segment};
use crate::ingest::{
    canonicalize, generate_synthetic, parse_recording, read_recordings_csv, write_recordings_csv,
};
use crate::prep::{prepare, read_matrix_csv, write_matrix_csv, Sample};
use crate::risk::{
    cluster_risk_stats, pair_ttc_series, primitive_risk, ttc_histogram, write_cluster_stats_csv,
    write_risk_csv, Pair,
};
use crate::{par, Error, Result};

/// Bumped whenever an artifact format changes, to invalidate old caches.
const FORMAT_VERSION: u32 = 1;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Extract,
    Segment,
    Prep,
    Cluster,
    Risk,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Extract,
        Stage::Segment,
        Stage::Prep,
        Stage::Cluster,
        Stage::Risk,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Segment => "segment",
            Stage::Prep => "prep",
            Stage::Cluster => "cluster",
            Stage::Risk => "risk",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A failure tagged with the stage that raised it.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: Stage,
    pub source: Error,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.source)
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub key: String,
    pub cache_hit: bool,
    /// Artifact file name to SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub config: PipelineConfig,
    pub counts: BTreeMap<String, usize>,
    pub stages: Vec<StageRecord>,
    /// Set on the `.partial` manifest of a failed run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| json_err(&path, e))
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    pub fn count(&self, name: &str) -> Option<usize> {
        self.counts.get(name).copied()
    }
}

fn json_err(path: &Path, e: serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row: e.line(),
        message: e.to_string(),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path).map_err(|e| Error::io(path, e))?))
}

fn partial(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.partial"))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| json_err(path, e))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| json_err(path, e))
}

fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

/// One row of `primitives.csv`: every decoded run, kept or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveRow {
    pub primitive_id: String,
    pub event_id: usize,
    pub state: usize,
    pub start: usize,
    pub end: usize,
    pub frames: usize,
    pub duration_s: f64,
    /// Survives the minimum-length filter.
    pub kept: bool,
}

impl PrimitiveRow {
    pub fn segment(&self) -> Segment {
        Segment {
            state: self.state,
            start: self.start,
            end: self.end,
        }
    }
}

/// One entry of `models.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventModel {
    pub event_id: usize,
    pub stop_reason: Option<String>,
    pub candidates: Vec<Candidate>,
    pub model: ModelDump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub primitive_id: String,
    pub cluster: usize,
    pub dtw_to_center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub cluster: usize,
    pub primitives: usize,
    pub share: f64,
    pub mean_duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub cluster: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Artifacts written by each stage.
pub fn artifacts(stage: Stage, cfg: &PipelineConfig) -> Vec<&'static str> {
    match stage {
        Stage::Ingest => vec!["recordings.csv"],
        Stage::Extract => vec!["events.csv", "events.json"],
        Stage::Segment => vec!["primitives.csv", "models.json"],
        Stage::Prep => vec!["primitive_matrix.csv"],
        Stage::Cluster => {
            let mut v = vec!["clusters.csv", "cluster_frequency.csv", "cluster_duration.csv"];
            if cfg.cluster.k_range.is_some() {
                v.push("elbow.csv");
            }
            v
        }
        Stage::Risk => vec!["risk.csv", "cluster_risk.csv", "ttc_histogram.csv"],
    }
}

fn stage_settings(stage: Stage, cfg: &PipelineConfig) -> Result<serde_json::Value> {
    let v = match stage {
        Stage::Ingest => {
            let mut files = Vec::new();
            for p in &cfg.input.recordings {
                files.push(hash_file(p)?);
            }
            for h in &cfg.input.highd {
                for p in [&h.tracks, &h.tracks_meta, &h.recording_meta] {
                    files.push(hash_file(p)?);
                }
            }
            serde_json::json!({
                "files": files,
                "synthetic": cfg.input.synthetic,
                "seed": cfg.seeds.synthetic,
            })
        }
        Stage::Extract => serde_json::json!({
            "extract": cfg.extract,
            "type_filter": cfg.type_filter()?,
            "seed": cfg.seeds.classify,
        }),
        Stage::Segment => serde_json::json!({ "segment": cfg.segment, "seed": cfg.seeds.segment }),
        Stage::Prep => serde_json::json!({ "prep": cfg.prep }),
        Stage::Cluster => serde_json::json!({ "cluster": cfg.cluster, "seed": cfg.seeds.cluster }),
        Stage::Risk => serde_json::json!({ "risk": cfg.risk, "k": cfg.cluster.k }),
    };
    Ok(v)
}

fn stage_key(stage: Stage, cfg: &PipelineConfig, upstream: &[StageRecord]) -> Result<String> {
    let inputs: Vec<_> = upstream.iter().map(|r| &r.artifacts).collect();
    let doc = serde_json::json!({
        "version": FORMAT_VERSION,
        "stage": stage,
        "settings": stage_settings(stage, cfg)?,
        "inputs": inputs,
    });
    Ok(sha256_hex(doc.to_string().as_bytes()))
}

type Counts = BTreeMap<String, usize>;

fn counts(pairs: &[(&str, usize)]) -> Counts {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn run_ingest(cfg: &PipelineConfig, dir: &Path) -> Result<Counts> {
    let mut recs = Vec::new();
    for p in &cfg.input.recordings {
        recs.extend(read_recordings_csv(p)?);
    }
    for h in &cfg.input.highd {
        recs.push(parse_recording(&h.tracks, &h.tracks_meta, &h.recording_meta)?);
    }
    if let Some(spec) = &cfg.input.synthetic {
        recs.push(generate_synthetic(spec, cfg.seeds.synthetic)?.recording);
    }
    if recs.is_empty() {
        return Err(Error::Validation("no input recordings configured".into()));
    }
    let mut ids: Vec<&str> = recs.iter().map(|r| r.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Validation(format!(
            "recording id `{}` appears twice",
            w[0]
        )));
    }
    let mut excluded = 0;
    let canon: Vec<_> = recs
        .iter()
        .map(|r| {
            let (c, report) = canonicalize(r);
            excluded += report.excluded.len();
            c
        })
        .collect();
    let tracks = canon.iter().map(|r| r.tracks.len()).sum();
    write_recordings_csv(&canon, &partial(dir, "recordings.csv"))?;
    Ok(counts(&[
        ("recordings", canon.len()),
        ("tracks", tracks),
        ("tracks_excluded", excluded),
    ]))
}

fn run_extract(cfg: &PipelineConfig, dir: &Path) -> Result<Counts> {
    let recs = read_recordings_csv(&dir.join("recordings.csv"))?;
    let classes = VehicleClasses::fit(&recs, cfg.seeds.classify)?;
    let filter = cfg.type_filter()?;
    let events: Vec<LcEvent> = recs
        .iter()
        .flat_map(|r| extract_events(r, &classes, filter, &cfg.extract))
        .collect();
    write_events_csv(&events, &partial(dir, "events.csv"))?;
    write_json(&events, &partial(dir, "events.json"))?;
    Ok(counts(&[("events", events.len())]))
}

/// Per-event seed, so results do not depend on scheduling.
fn event_seed(base: u64, event: usize) -> u64 {
    base ^ (event as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn run_segment(cfg: &PipelineConfig, dir: &Path) -> Result<Counts> {
    let events: Vec<LcEvent> = read_json(&dir.join("events.json"))?;
    let indexed: Vec<(usize, &LcEvent)> = events.iter().enumerate().collect();
    let results = par::map(&indexed, |&(i, e)| {
        segment_scenario(&e.scenario(), &cfg.segment, event_seed(cfg.seeds.segment, i)).map_err(|err| {
            match err {
                Error::Numeric(m) => Error::Numeric(format!("event {i}: {m}")),
                other => other,
            }
        })
    });
    let mut rows = Vec::new();
    let mut models = Vec::new();
    for ((i, e), res) in indexed.iter().zip(results) {
        let seg = res?;
        for (j, run) in seg.runs.iter().enumerate() {
            rows.push(PrimitiveRow {
                primitive_id: format!("e{i}_p{j}"),
                event_id: *i,
                state: run.state,
                start: run.start,
                end: run.end,
                frames: run.len(),
                duration_s: run.len() as f64 / e.frame_rate,
                kept: run.len() >= cfg.segment.min_frames,
            });
        }
        models.push(EventModel {
            event_id: *i,
            stop_reason: seg.stop_reason,
            candidates: seg.candidates,
            model: seg.model.to_dump(&seg.ll_trace),
        });
    }
    write_rows(&rows, &partial(dir, "primitives.csv"))?;
    write_json(&models, &partial(dir, "models.json"))?;
    let kept = rows.iter().filter(|r| r.kept).count();
    Ok(counts(&[
        ("primitives_before_filter", rows.len()),
        ("primitives_after_filter", kept),
    ]))
}

fn kept_primitives(dir: &Path) -> Result<Vec<PrimitiveRow>> {
    let rows: Vec<PrimitiveRow> = read_rows(&dir.join("primitives.csv"))?;
    Ok(rows.into_iter().filter(|r| r.kept).collect())
}

fn run_prep(cfg: &PipelineConfig, dir: &Path) -> Result<Counts> {
    let events: Vec<LcEvent> = read_json(&dir.join("events.json"))?;
    let prims = kept_primitives(dir)?;
    let mut out: Vec<(String, Sample)> = Vec::with_capacity(prims.len());
    for p in &prims {
        let e = events.get(p.event_id).ok_or_else(|| {
            Error::Validation(format!(
                "primitive {} names missing event {}",
                p.primitive_id, p.event_id
            ))
        })?;
        let points = &e.scenario().points[p.start..=p.end];
        out.push((p.primitive_id.clone(), prepare(points, cfg.prep.length)?));
    }
    write_matrix_csv(&out, &partial(dir, "primitive_matrix.csv"))?;
    Ok(counts(&[("prepared", out.len())]))
}

fn run_cluster(cfg: &PipelineConfig, dir: &Path) -> Result<Counts> {
    let matrix = read_matrix_csv(&dir.join("primitive_matrix.csv"))?;
    let prims = kept_primitives(dir)?;
    let (ids, data): (Vec<String>, Vec<Sample>) = matrix.into_iter().unzip();
    let k = cfg.cluster.k;
    if k > data.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds the {} available primitives",
            data.len()
        )));
    }
    let model = kmeans_dtw(&data, k, cfg.seeds.cluster, &cfg.cluster.kmeans)?;
    write_cluster_report(&ids, &model, &partial(dir, "clusters.csv"))?;

    if let Some([lo, hi]) = cfg.cluster.k_range {
        let ks: Vec<usize> = (lo..=hi.min(data.len())).collect();
        let (rows, _) = elbow_curve(&data, &ks, cfg.seeds.cluster, &cfg.cluster.kmeans)?;
        write_elbow_csv(&rows, &partial(dir, "elbow.csv"))?;
    }

    let duration: HashMap<&str, f64> = prims
        .iter()
        .map(|p| (p.primitive_id.as_str(), p.duration_s))
        .collect();
    let durations: Vec<f64> =
        ids.iter()
            .map(|id| {
                duration.get(id.as_str()).copied().ok_or_else(|| {
                    Error::Validation(format!("primitive {id} is missing from primitives.csv"))
                })
            })
            .collect::<Result<_>>()?;

    let n = data.len() as f64;
    let freq: Vec<FrequencyRow> = (0..k)
        .map(|c| {
            let ds: Vec<f64> = (0..ids.len())
                .filter(|&i| model.assignments[i] == c)
                .map(|i| durations[i])
                .collect();
            FrequencyRow {
                cluster: c,
                primitives: ds.len(),
                share: ds.len() as f64 / n,
                mean_duration_s: if ds.is_empty() {
                    0.0
                } else {
                    ds.iter().sum::<f64>() / ds.len() as f64
                },
            }
        })
        .collect();
    write_rows(&freq, &partial(dir, "cluster_frequency.csv"))?;

    let width = cfg.cluster.duration_bin;
    let top = durations.iter().copied().fold(0.0, f64::max);
    let bins = ((top / width).floor() as usize) + 1;
    let mut hist = vec![vec![0usize; bins]; k];
    for (i, d) in durations.iter().enumerate() {
        hist[model.assignments[i]][((d / width).floor() as usize).min(bins - 1)] += 1;
    }
    let hist_rows: Vec<HistogramRow> = (0..k)
        .flat_map(|c| {
            let counts = &hist[c];
            (0..bins).map(move |b| HistogramRow {
                cluster: c,
                lo: b as f64 * width,
                hi: (b + 1) as f64 * width,
                count: counts[b],
            })
        })
        .collect();
    write_rows(&hist_rows, &partial(dir, "cluster_duration.csv"))?;

    Ok(counts(&[("clusters", k), ("clustered", ids.len())]))
}

fn run_risk(cfg: &PipelineConfig, dir: &Path) -> Result<Counts> {
    let events: Vec<LcEvent> = read_json(&dir.join("events.json"))?;
    let prims = kept_primitives(dir)?;
    let clusters: Vec<ClusterRow> = read_rows(&dir.join("clusters.csv"))?;
    let by_id: HashMap<&str, &PrimitiveRow> = prims.iter().map(|p| (p.primitive_id.as_str(), p)).collect();

    let mut needed: Vec<usize> = prims.iter().map(|p| p.event_id).collect();
    needed.sort_unstable();
    needed.dedup();
    let series = par::map(&needed, |&i| {
        events
            .get(i)
            .map(|e| Pair::ALL.map(|p| pair_ttc_series(e, p)))
            .ok_or_else(|| Error::Validation(format!("missing event {i}")))
    });
    let mut series_of = HashMap::new();
    for (i, s) in needed.iter().zip(series) {
        series_of.insert(*i, s?);
    }

    let cap = cfg.risk.ttc_cap;
    let mut risks = Vec::with_capacity(clusters.len());
    let mut assignments = Vec::with_capacity(clusters.len());
    for c in &clusters {
        let p = by_id
            .get(c.primitive_id.as_str())
            .ok_or_else(|| Error::Validation(format!("clustered primitive {} is unknown", c.primitive_id)))?;
        risks.push(primitive_risk(
            &p.primitive_id,
            &series_of[&p.event_id],
            &p.segment(),
            cap,
        ));
        assignments.push(c.cluster);
    }
    let k = cfg.cluster.k;
    let values: Vec<Option<f64>> = risks.iter().map(|r| r.risk).collect();
    write_risk_csv(&risks, &assignments, &partial(dir, "risk.csv"))?;
    write_cluster_stats_csv(
        &cluster_risk_stats(&assignments, &values, k),
        &partial(dir, "cluster_risk.csv"),
    )?;
    let hist: Vec<HistogramRow> = ttc_histogram(&assignments, &values, k, cfg.risk.bin_width, cap)
        .into_iter()
        .map(|(cluster, lo, hi, count)| HistogramRow {
            cluster,
            lo,
            hi,
            count,
        })
        .collect();
    write_rows(&hist, &partial(dir, "ttc_histogram.csv"))?;
    Ok(counts(&[
        ("risk_rows", risks.len()),
        ("risk_defined", values.iter().flatten().count()),
    ]))
}

fn execute(stage: Stage, cfg: &PipelineConfig, dir: &Path) -> Result<Counts> {
    match stage {
        Stage::Ingest => run_ingest(cfg, dir),
        Stage::Extract => run_extract(cfg, dir),
        Stage::Segment => run_segment(cfg, dir),
        Stage::Prep => run_prep(cfg, dir),
        Stage::Cluster => run_cluster(cfg, dir),
        Stage::Risk => run_risk(cfg, dir),
    }
}

fn cached(prev: Option<&RunManifest>, stage: Stage, key: &str, dir: &Path) -> Option<StageRecord> {
    let rec = prev?.stage(stage)?;
    if rec.key != key {
        return None;
    }
    for (name, hash) in &rec.artifacts {
        if hash_file(&dir.join(name)).ok()? != *hash {
            return None;
        }
    }
    Some(StageRecord {
        cache_hit: true,
        ..rec.clone()
    })
}

/// Runs every stage up to and including `until` in `dir`.
pub fn run_stages(
    cfg: &PipelineConfig,
    dir: &Path,
    until: Stage,
) -> std::result::Result<RunManifest, PipelineError> {
    let tag = |stage| move |source| PipelineError { stage, source };
    cfg.validate().map_err(tag(Stage::Ingest))?;
    std::fs::create_dir_all(dir).map_err(|e| tag(Stage::Ingest)(Error::io(dir, e)))?;
    let prev = RunManifest::load(dir)
        .ok()
        .filter(|m| m.format_version == FORMAT_VERSION);

    let mut manifest = RunManifest {
        format_version: FORMAT_VERSION,
        config: cfg.clone(),
        counts: BTreeMap::new(),
        stages: Vec::new(),
        error: None,
    };
    for stage in Stage::ALL.into_iter().filter(|s| *s <= until) {
        let result = run_one(stage, cfg, dir, prev.as_ref(), &manifest.stages);
        match result {
            Ok(rec) => {
                log::info!("{stage}: {}", if rec.cache_hit { "cache hit" } else { "done" });
                manifest.counts.extend(rec.counts.clone());
                manifest.stages.push(rec);
            }
            Err(source) => {
                let err = PipelineError { stage, source };
                manifest.error = Some(err.to_string());
                // best effort, the stage error is what the caller needs
                let _ = write_json(&manifest, &partial(dir, MANIFEST));
                return Err(err);
            }
        }
    }
    let path = dir.join(MANIFEST);
    write_json(&manifest, &path).map_err(tag(until))?;
    let _ = std::fs::remove_file(partial(dir, MANIFEST));
    Ok(manifest)
}

fn run_one(
    stage: Stage,
    cfg: &PipelineConfig,
    dir: &Path,
    prev: Option<&RunManifest>,
    upstream: &[StageRecord],
) -> Result<StageRecord> {
    let key = stage_key(stage, cfg, upstream)?;
    if let Some(rec) = cached(prev, stage, &key, dir) {
        return Ok(rec);
    }
    let names = artifacts(stage, cfg);
    for name in &names {
        let final_path = dir.join(name);
        if final_path.exists() {
            std::fs::remove_file(&final_path).map_err(|e| Error::io(&final_path, e))?;
        }
    }
    let counts = execute(stage, cfg, dir)?;
    let mut hashes = BTreeMap::new();
    for name in names {
        let from = partial(dir, name);
        let to = dir.join(name);
        std::fs::rename(&from, &to).map_err(|e| Error::io(&from, e))?;
        hashes.insert(name.to_string(), hash_file(&to)?);
    }
    Ok(StageRecord {
        stage,
        key,
        cache_hit: false,
        artifacts: hashes,
        counts,
    })
}

/// Runs the full pipeline into the configured output directory.
pub fn run(cfg: &PipelineConfig) -> std::result::Result<RunManifest, PipelineError> {
    run_stages(cfg, &cfg.output_dir(), Stage::Risk)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub cluster: usize,
    pub primitives: usize,
    pub share: f64,
    pub mean_duration_s: f64,
    pub risk_defined: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub counts: BTreeMap<String, usize>,
    pub rows: Vec<ReportRow>,
    /// The two clusters with the lowest mean risk, lowest first.
    pub high_risk: Vec<usize>,
}

#[derive(Deserialize)]
struct RiskStatRow {
    cluster: usize,
    frequency: usize,
    mean: Option<f64>,
    median: Option<f64>,
    std: Option<f64>,
}

/// Collects the summary tables of a finished run.
pub fn report(run_dir: &Path) -> Result<Report> {
    let manifest = RunManifest::load(run_dir)?;
    if manifest.stage(Stage::Risk).is_none() {
        return Err(Error::Validation(format!(
            "{} has no risk stage; run the full pipeline first",
            run_dir.display()
        )));
    }
    let freq: Vec<FrequencyRow> = read_rows(&run_dir.join("cluster_frequency.csv"))?;
    let stats: HashMap<usize, RiskStatRow> = read_rows::<RiskStatRow>(&run_dir.join("cluster_risk.csv"))?
        .into_iter()
        .map(|r| (r.cluster, r))
        .collect();
    let rows: Vec<ReportRow> = freq
        .iter()
        .map(|f| {
            let s = stats.get(&f.cluster);
            ReportRow {
                cluster: f.cluster,
                primitives: f.primitives,
                share: f.share,
                mean_duration_s: f.mean_duration_s,
                risk_defined: s.map_or(0, |s| s.frequency),
                mean: s.and_then(|s| s.mean),
                median: s.and_then(|s| s.median),
                std: s.and_then(|s| s.std),
            }
        })
        .collect();
    let mut ranked: Vec<(f64, usize)> = rows
        .iter()
        .filter_map(|r| r.mean.map(|m| (m, r.cluster)))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(Report {
        counts: manifest.counts,
        rows,
        high_risk: ranked.iter().take(2).map(|r| r.1).collect(),
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3}"))
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |name: &str| self.counts.get(name).copied().unwrap_or(0);
        writeln!(f, "recordings: {}", c("recordings"))?;
        writeln!(f, "events: {}", c("events"))?;
        writeln!(
            f,
            "primitives: {} kept of {} decoded",
            c("primitives_after_filter"),
            c("primitives_before_filter")
        )?;
        writeln!(f, "clusters: {}", c("clusters"))?;
        writeln!(f)?;
        writeln!(
            f,
            "{:>7} {:>10} {:>7} {:>10} {:>6} {:>9} {:>9} {:>9}",
            "cluster", "primitives", "share", "duration", "risk_n", "mean_ttc", "median", "std"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>7} {:>10} {:>7.3} {:>10.2} {:>6} {:>9} {:>9} {:>9}",
                r.cluster,
                r.primitives,
                r.share,
                r.mean_duration_s,
                r.risk_defined,
                cell(r.mean),
                cell(r.median),
                cell(r.std)
            )?;
        }
        writeln!(f)?;
        if self.high_risk.is_empty() {
            writeln!(f, "HIGH-RISK: none")
        } else {
            let names: Vec<String> = self.high_risk.iter().map(|c| format!("cluster {c}")).collect();
            writeln!(f, "HIGH-RISK: {}", names.join(", "))
        }
    }
}

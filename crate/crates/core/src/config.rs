//! Pipeline settings, read from and written to TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterConfig;
use crate::extract::{parse_triple, ExtractConfig, TypeTriple};
use crate::hmm::SegmentConfig;
use crate::ingest::ScenarioSpec;
use crate::prep::DEFAULT_LENGTH;
use crate::{Error, Result};

/// The three files of one highD recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HighdInput {
    pub tracks: PathBuf,
    pub tracks_meta: PathBuf,
    pub recording_meta: PathBuf,
}

impl HighdInput {
    /// `<dir>/<id>_tracks.csv` and its two metadata siblings.
    pub fn from_prefix(dir: &Path, id: &str) -> Self {
        HighdInput {
            tracks: dir.join(format!("{id}_tracks.csv")),
            tracks_meta: dir.join(format!("{id}_tracksMeta.csv")),
            recording_meta: dir.join(format!("{id}_recordingMeta.csv")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Canonical recording CSVs as written by `write_recordings_csv`.
    pub recordings: Vec<PathBuf>,
    pub highd: Vec<HighdInput>,
    pub synthetic: Option<ScenarioSpec>,
}

impl InputConfig {
    pub fn is_empty(&self) -> bool {
        self.recordings.is_empty() && self.highd.is_empty() && self.synthetic.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub synthetic: u64,
    pub classify: u64,
    pub segment: u64,
    pub cluster: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            synthetic: 7,
            classify: 11,
            segment: 13,
            cluster: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    /// Resampled primitive length.
    pub length: usize,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            length: DEFAULT_LENGTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterStageConfig {
    pub k: usize,
    /// Inclusive `[lo, hi]` range for the elbow table; omitted to skip it.
    pub k_range: Option<[usize; 2]>,
    /// Bin width of the duration histogram, seconds.
    pub duration_bin: f64,
    pub kmeans: ClusterConfig,
}

impl Default for ClusterStageConfig {
    fn default() -> Self {
        ClusterStageConfig {
            k: 13,
            k_range: None,
            duration_bin: 0.4,
            kmeans: ClusterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    /// Upper bound applied to per-pair minima, seconds.
    pub ttc_cap: f64,
    /// Bin width of the risk histogram, seconds.
    pub bin_width: f64,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            ttc_cap: 100.0,
            bin_width: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Output directory. Falls back to `LCPAT_OUT_DIR`, then `lcpat-out`.
    pub output_dir: Option<PathBuf>,
    /// `ego-por-ta` class triple such as `PC-PC-PC`, or `any`.
    pub type_filter: String,
    pub seeds: Seeds,
    pub input: InputConfig,
    pub extract: ExtractConfig,
    pub segment: SegmentConfig,
    pub prep: PrepConfig,
    pub cluster: ClusterStageConfig,
    pub risk: RiskConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            output_dir: None,
            type_filter: "PC-PC-PC".into(),
            seeds: Seeds::default(),
            input: InputConfig::default(),
            extract: ExtractConfig::default(),
            segment: SegmentConfig::default(),
            prep: PrepConfig::default(),
            cluster: ClusterStageConfig::default(),
            risk: RiskConfig::default(),
        }
    }
}

pub const OUTPUT_DIR_ENV: &str = "LCPAT_OUT_DIR";

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes relative input paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.input.recordings.iter_mut().for_each(fix);
        for h in &mut self.input.highd {
            fix(&mut h.tracks);
            fix(&mut h.tracks_meta);
            fix(&mut h.recording_meta);
        }
    }

    /// `None` when the filter is `any`.
    pub fn type_filter(&self) -> Result<Option<TypeTriple>> {
        if self.type_filter.eq_ignore_ascii_case("any") {
            return Ok(None);
        }
        parse_triple(&self.type_filter)
            .map(Some)
            .ok_or_else(|| Error::Validation(format!("bad type_filter `{}`", self.type_filter)))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("lcpat-out"))
    }

    pub fn validate(&self) -> Result<()> {
        self.type_filter()?;
        let bad = |m: &str| Err(Error::Validation(m.to_string()));
        if self.prep.length < 2 {
            return bad("prep.length must be at least 2");
        }
        if self.cluster.k == 0 {
            return bad("cluster.k must be positive");
        }
        if let Some([lo, hi]) = self.cluster.k_range {
            if lo == 0 || lo > hi {
                return bad("cluster.k_range must be [lo, hi] with 1 <= lo <= hi");
            }
        }
        if !(self.risk.ttc_cap > 0.0) || !(self.risk.bin_width > 0.0) {
            return bad("risk.ttc_cap and risk.bin_width must be positive");
        }
        if !(self.cluster.duration_bin > 0.0) {
            return bad("cluster.duration_bin must be positive");
        }
        if self.segment.select.n_max == 0 {
            return bad("segment.select.n_max must be positive");
        }
        if let Some(s) = &self.input.synthetic {
            s.validate()?;
        }
        Ok(())
    }
}

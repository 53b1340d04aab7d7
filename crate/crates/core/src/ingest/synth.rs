//! Parametric multi-vehicle recordings with piecewise-constant regimes.
//!
//! Every participant follows per-regime longitudinal acceleration and lateral
//! velocity. Positions are integrated with an explicit Euler step, so the
//! noiseless positions satisfy `x[t+1] = x[t] + vx[t] / frame_rate` exactly.
//! Measurement noise is a zero-mean normal truncated to `±1.5 σ`, added to
//! positions only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Direction, LaneMarkings, Recording, Track, TrackPoint};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub start_frame: usize,
}

/// Motion of one vehicle during one regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    #[serde(default)]
    pub ax: f64,
    #[serde(default)]
    pub vy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleProfile {
    pub id: u32,
    pub length: f64,
    pub width: f64,
    /// Initial lane, 1 = slow lane.
    pub lane: usize,
    pub x0: f64,
    pub vx0: f64,
    /// One entry per regime.
    pub motions: Vec<Motion>,
}

/// Constant-speed vehicle that stays in its lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundVehicle {
    pub id: u32,
    pub length: f64,
    pub width: f64,
    pub lane: usize,
    pub x0: f64,
    pub vx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default = "default_recording_id")]
    pub recording_id: String,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    pub n_frames: usize,
    pub lane_width: f64,
    pub n_lanes: usize,
    #[serde(default)]
    pub noise_std: f64,
    pub regimes: Vec<Regime>,
    pub vehicles: Vec<VehicleProfile>,
    #[serde(default)]
    pub background: Vec<BackgroundVehicle>,
}

fn default_recording_id() -> String {
    "synthetic".to_string()
}

fn default_frame_rate() -> f64 {
    25.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecording {
    pub recording: Recording,
    /// Regime index of every frame.
    pub labels: Vec<usize>,
    /// `(vehicle id, frame)` of every lane change, from noiseless positions.
    pub crossings: Vec<(u32, i64)>,
}

impl ScenarioSpec {
    /// One passenger-car lane change from lane 1 to lane 2 past a slower
    /// leader, with a faster car behind in the target lane and a truck and
    /// an oversized truck far ahead in lane 3.
    ///
    /// Regimes: cruise (frames 0..80), lane change (80..155), cruise.
    pub fn staged_lane_change() -> Self {
        let still = Motion { ax: 0.0, vy: 0.0 };
        ScenarioSpec {
            recording_id: "synthetic".into(),
            frame_rate: 25.0,
            n_frames: 250,
            lane_width: 3.75,
            n_lanes: 3,
            noise_std: 0.05,
            regimes: vec![
                Regime { start_frame: 0 },
                Regime { start_frame: 80 },
                Regime { start_frame: 155 },
            ],
            vehicles: vec![
                VehicleProfile {
                    id: 1,
                    length: 4.5,
                    width: 1.9,
                    lane: 1,
                    x0: 100.0,
                    vx0: 30.0,
                    motions: vec![still, Motion { ax: 0.5, vy: 1.25 }, still],
                },
                VehicleProfile {
                    id: 2,
                    length: 4.6,
                    width: 1.9,
                    lane: 1,
                    x0: 140.0,
                    vx0: 26.0,
                    motions: vec![still, Motion { ax: -0.3, vy: 0.0 }, still],
                },
                VehicleProfile {
                    id: 3,
                    length: 4.4,
                    width: 1.8,
                    lane: 2,
                    x0: 70.0,
                    vx0: 33.0,
                    motions: vec![still, Motion { ax: -1.0, vy: 0.0 }, still],
                },
            ],
            background: vec![
                BackgroundVehicle {
                    id: 10,
                    length: 10.0,
                    width: 2.5,
                    lane: 3,
                    x0: 320.0,
                    vx: 24.0,
                },
                BackgroundVehicle {
                    id: 11,
                    length: 16.0,
                    width: 2.6,
                    lane: 3,
                    x0: 520.0,
                    vx: 22.0,
                },
                BackgroundVehicle {
                    id: 12,
                    length: 4.5,
                    width: 1.9,
                    lane: 3,
                    x0: 0.0,
                    vx: 28.0,
                },
            ],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            toml::from_str(text).map_err(|e| Error::Validation(format!("scenario spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.frame_rate > 0.0) {
            return bad(format!("frame_rate must be positive, got {}", self.frame_rate));
        }
        if self.n_frames < 2 {
            return bad("n_frames must be at least 2".into());
        }
        if self.n_lanes == 0 || !(self.lane_width > 0.0) {
            return bad("need at least one lane of positive width".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std must be >= 0, got {}", self.noise_std));
        }
        if self.regimes.first().map(|r| r.start_frame) != Some(0) {
            return bad("first regime must start at frame 0".into());
        }
        for w in self.regimes.windows(2) {
            if w[1].start_frame <= w[0].start_frame {
                return bad("regime starts must be strictly increasing".into());
            }
        }
        if self
            .regimes
            .last()
            .is_some_and(|r| r.start_frame >= self.n_frames)
        {
            return bad("regime starts beyond the last frame".into());
        }
        let mut ids = std::collections::HashSet::new();
        let mut starts: Vec<(u32, usize, f64, f64)> = Vec::new();
        for v in &self.vehicles {
            if v.motions.len() != self.regimes.len() {
                return bad(format!(
                    "vehicle {} has {} motions for {} regimes",
                    v.id,
                    v.motions.len(),
                    self.regimes.len()
                ));
            }
            starts.push((v.id, v.lane, v.x0, v.length));
            if !(v.length > 0.0 && v.width > 0.0) {
                return bad(format!("vehicle {} has non-positive dimensions", v.id));
            }
        }
        for b in &self.background {
            starts.push((b.id, b.lane, b.x0, b.length));
            if !(b.length > 0.0 && b.width > 0.0) {
                return bad(format!("vehicle {} has non-positive dimensions", b.id));
            }
        }
        for &(id, lane, _, _) in &starts {
            if !ids.insert(id) {
                return bad(format!("duplicate vehicle id {id}"));
            }
            if lane == 0 || lane > self.n_lanes {
                return bad(format!(
                    "vehicle {id} starts in lane {lane} outside 1..={}",
                    self.n_lanes
                ));
            }
        }
        for (i, a) in starts.iter().enumerate() {
            for b in &starts[i + 1..] {
                if a.1 == b.1 && (a.2 - b.2).abs() < (a.3 + b.3) / 2.0 {
                    return bad(format!(
                        "vehicles {} and {} overlap at their initial positions",
                        a.0, b.0
                    ));
                }
            }
        }
        Ok(())
    }

    fn regime_at(&self, frame: usize) -> usize {
        self.regimes
            .iter()
            .rposition(|r| r.start_frame <= frame)
            .unwrap_or(0)
    }

    fn lane_of(&self, y: f64) -> i32 {
        let lane = (y / self.lane_width).floor() as i64 + 1;
        lane.clamp(1, self.n_lanes as i64) as i32
    }
}

struct Noise {
    normal: Option<Normal<f64>>,
    bound: f64,
}

impl Noise {
    fn new(std: f64) -> Self {
        Noise {
            normal: (std > 0.0).then(|| Normal::new(0.0, std).expect("finite std")),
            bound: 1.5 * std,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match &self.normal {
            None => 0.0,
            Some(n) => loop {
                let e = n.sample(rng);
                if e.abs() <= self.bound {
                    break e;
                }
            },
        }
    }
}

/// Generates a recording from `spec`. Deterministic for a given `seed`.
pub fn generate_synthetic(spec: &ScenarioSpec, seed: u64) -> Result<SyntheticRecording> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Noise::new(spec.noise_std);
    let dt = 1.0 / spec.frame_rate;
    let n = spec.n_frames;
    let labels: Vec<usize> = (0..n).map(|t| spec.regime_at(t)).collect();
    let lane_center = |lane: usize| (lane as f64 - 0.5) * spec.lane_width;

    let mut tracks = Vec::new();
    let mut crossings = Vec::new();

    for v in &spec.vehicles {
        let (mut x, mut vx, mut y) = (v.x0, v.vx0, lane_center(v.lane));
        let mut clean = Vec::with_capacity(n);
        for &r in &labels {
            let m = v.motions[r];
            clean.push((x, y, vx, m.vy, m.ax));
            x += vx * dt;
            vx += m.ax * dt;
            y += m.vy * dt;
        }
        let points: Vec<TrackPoint> = (0..n)
            .map(|t| {
                let (x, y, vx, vy, ax) = clean[t];
                let vy_next = clean.get(t + 1).map_or(vy, |c| c.3);
                TrackPoint {
                    frame: t as i64,
                    x: x + noise.sample(&mut rng),
                    y: y + noise.sample(&mut rng),
                    vx,
                    vy,
                    ax,
                    ay: (vy_next - vy) / dt,
                    lane_id: spec.lane_of(y),
                }
            })
            .collect();
        for w in points.windows(2) {
            if w[1].lane_id != w[0].lane_id {
                crossings.push((v.id, w[1].frame));
            }
        }
        tracks.push(Track {
            vehicle_id: v.id,
            length: v.length,
            width: v.width,
            direction: Direction::Forward,
            points,
        });
    }

    for b in &spec.background {
        let y = lane_center(b.lane);
        let points = (0..n)
            .map(|t| {
                let x = b.x0 + b.vx * t as f64 * dt;
                TrackPoint {
                    frame: t as i64,
                    x: x + noise.sample(&mut rng),
                    y: y + noise.sample(&mut rng),
                    vx: b.vx,
                    vy: 0.0,
                    ax: 0.0,
                    ay: 0.0,
                    lane_id: spec.lane_of(y),
                }
            })
            .collect();
        tracks.push(Track {
            vehicle_id: b.id,
            length: b.length,
            width: b.width,
            direction: Direction::Forward,
            points,
        });
    }

    let recording = Recording {
        id: spec.recording_id.clone(),
        frame_rate: spec.frame_rate,
        lane_markings: vec![LaneMarkings {
            direction: Direction::Forward,
            positions: (0..=spec.n_lanes).map(|k| k as f64 * spec.lane_width).collect(),
        }],
        tracks,
    };
    recording.validate()?;
    Ok(SyntheticRecording {
        recording,
        labels,
        crossings,
    })
}

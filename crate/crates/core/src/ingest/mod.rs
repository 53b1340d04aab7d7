//! Trajectory recordings: parsing, canonicalization, serialization and
//! synthetic generation.
//!
//! A [`Recording`] is a set of vehicle tracks sampled at a fixed frame rate.
//! Coordinates are meters in a right-handed frame: `x` is longitudinal and
//! `y` lateral. After [`canonicalize`] every track travels toward increasing
//! `x` and increasing `y` points toward the passing lane.

mod canonical;
mod highd;
mod synth;
mod table;

pub use canonical::{canonicalize, mirror, smooth_positions, CanonicalReport, MIN_MEAN_SPEED};
pub use highd::{parse_recording, write_highd};
pub use synth::{
    generate_synthetic, BackgroundVehicle, Motion, Regime, ScenarioSpec, SyntheticRecording, VehicleProfile,
};
pub use table::{read_recordings_csv, write_recordings_csv};

use serde::{Deserialize, Serialize};

/// Carriageway tag of a track.
///
/// Parsed data tags tracks by their raw travel direction. Canonicalization
/// rotates reversed tracks but keeps the tag, so afterwards it only tells the
/// two carriageways apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reversed,
}

impl Direction {
    pub fn toggled(self) -> Self {
        match self {
            Direction::Forward => Direction::Reversed,
            Direction::Reversed => Direction::Forward,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reversed => "reversed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "forward" => Some(Direction::Forward),
            "reversed" => Some(Direction::Reversed),
            _ => None,
        }
    }
}

/// One sample of one vehicle. Position is the vehicle center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub frame: i64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
    pub lane_id: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub vehicle_id: u32,
    pub length: f64,
    pub width: f64,
    pub direction: Direction,
    /// Sorted by frame, consecutive frames.
    pub points: Vec<TrackPoint>,
}

impl Track {
    pub fn first_frame(&self) -> i64 {
        self.points.first().map_or(0, |p| p.frame)
    }

    pub fn last_frame(&self) -> i64 {
        self.points.last().map_or(-1, |p| p.frame)
    }

    pub fn covers(&self, start: i64, end: i64) -> bool {
        !self.points.is_empty() && self.first_frame() <= start && self.last_frame() >= end
    }

    /// Point at an absolute frame, if the track covers it.
    pub fn at(&self, frame: i64) -> Option<&TrackPoint> {
        let offset = frame - self.first_frame();
        if offset < 0 {
            return None;
        }
        self.points.get(offset as usize)
    }

    pub fn mean_vx(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.points.iter().map(|p| p.vx).sum::<f64>() / self.points.len() as f64
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        if !(self.length > 0.0 && self.width > 0.0) {
            return Err(crate::Error::Validation(format!(
                "vehicle {} has non-positive dimensions {} x {}",
                self.vehicle_id, self.length, self.width
            )));
        }
        if self.points.is_empty() {
            return Err(crate::Error::Validation(format!(
                "vehicle {} has no points",
                self.vehicle_id
            )));
        }
        for w in self.points.windows(2) {
            if w[1].frame != w[0].frame + 1 {
                return Err(crate::Error::Validation(format!(
                    "vehicle {} has non-consecutive frames {} -> {}",
                    self.vehicle_id, w[0].frame, w[1].frame
                )));
            }
        }
        Ok(())
    }
}

/// Lateral lane-marking positions of one carriageway, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneMarkings {
    pub direction: Direction,
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub id: String,
    pub frame_rate: f64,
    pub lane_markings: Vec<LaneMarkings>,
    pub tracks: Vec<Track>,
}

impl Recording {
    pub fn track(&self, vehicle_id: u32) -> Option<&Track> {
        self.tracks.iter().find(|t| t.vehicle_id == vehicle_id)
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.frame_rate > 0.0) {
            return Err(crate::Error::Validation(format!(
                "recording {}: frame rate must be positive, got {}",
                self.id, self.frame_rate
            )));
        }
        for m in &self.lane_markings {
            if m.positions.windows(2).any(|w| w[1] <= w[0]) {
                return Err(crate::Error::Validation(format!(
                    "recording {}: lane markings of {} carriageway are not strictly increasing",
                    self.id,
                    m.direction.as_str()
                )));
            }
        }
        self.tracks.iter().try_for_each(Track::validate)
    }
}

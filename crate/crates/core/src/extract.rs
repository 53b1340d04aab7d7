//! Three-vehicle lane-change scenario extraction.
//!
//! A lane change is found where a vehicle's lane id changes. Its window is
//! widened backward and forward from the crossing frame until the lateral
//! motion has settled at least 0.9 m away from the crossing position. The
//! scenario pairs the lane changer (ego) with the nearest vehicle ahead in
//! its original lane (por) and the nearest vehicle in the target lane (ta),
//! all taken at the start of the window.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::{Direction, Recording, Track, TrackPoint};
use crate::kmeans::{kmeans, Seeding};
use crate::scenario::Scenario;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VehicleClass {
    /// Passenger car.
    PC,
    /// Heavy-duty vehicle.
    HV,
    /// Oversized truck.
    OT,
}

impl VehicleClass {
    pub const ALL: [VehicleClass; 3] = [VehicleClass::PC, VehicleClass::HV, VehicleClass::OT];

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PC" => Some(VehicleClass::PC),
            "HV" => Some(VehicleClass::HV),
            "OT" => Some(VehicleClass::OT),
            _ => None,
        }
    }
}

impl fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VehicleClass::PC => "PC",
            VehicleClass::HV => "HV",
            VehicleClass::OT => "OT",
        })
    }
}

/// (ego, por, ta) classes.
pub type TypeTriple = [VehicleClass; 3];

pub const DEFAULT_TYPE_FILTER: TypeTriple = [VehicleClass::PC; 3];

pub fn format_triple(t: &TypeTriple) -> String {
    format!("{}-{}-{}", t[0], t[1], t[2])
}

pub fn parse_triple(s: &str) -> Option<TypeTriple> {
    let parts: Vec<VehicleClass> = s
        .split(['-', ','])
        .map(VehicleClass::parse)
        .collect::<Option<_>>()?;
    parts.try_into().ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleClassification {
    pub labels: Vec<VehicleClass>,
    /// `(length, width)` centroid per class, indexed like [`VehicleClass::ALL`].
    pub centroids: [(f64, f64); 3],
}

/// Three-class K-means on `(length, width)`, classes named by ascending
/// centroid length.
pub fn classify_vehicle_types(dims: &[(f64, f64)], seed: u64) -> Result<VehicleClassification> {
    let mut distinct: Vec<(f64, f64)> = dims.to_vec();
    distinct.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "vehicle classification needs 3 distinct (length, width) pairs, got {}",
            distinct.len()
        )));
    }
    let points: Vec<Vec<f64>> = dims.iter().map(|&(l, w)| vec![l, w]).collect();
    let km = kmeans(&points, 3, Seeding::FarthestPoint, seed, 300, 1e-6)?;
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        km.centers[a][0]
            .total_cmp(&km.centers[b][0])
            .then(km.centers[a][1].total_cmp(&km.centers[b][1]))
    });
    let mut class_of = [VehicleClass::PC; 3];
    let mut centroids = [(0.0, 0.0); 3];
    for (rank, &cluster) in order.iter().enumerate() {
        class_of[cluster] = VehicleClass::ALL[rank];
        centroids[rank] = (km.centers[cluster][0], km.centers[cluster][1]);
    }
    Ok(VehicleClassification {
        labels: km.labels.iter().map(|&l| class_of[l]).collect(),
        centroids,
    })
}

/// Class of every vehicle of a set of recordings, keyed by
/// `(recording id, vehicle id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VehicleClasses {
    pub classes: HashMap<(String, u32), VehicleClass>,
    pub centroids: [(f64, f64); 3],
}

impl VehicleClasses {
    pub fn fit(recordings: &[Recording], seed: u64) -> Result<Self> {
        let mut keys = Vec::new();
        let mut dims = Vec::new();
        for r in recordings {
            for t in &r.tracks {
                keys.push((r.id.clone(), t.vehicle_id));
                dims.push((t.length, t.width));
            }
        }
        let c = classify_vehicle_types(&dims, seed)?;
        Ok(VehicleClasses {
            classes: keys.into_iter().zip(c.labels).collect(),
            centroids: c.centroids,
        })
    }

    pub fn get(&self, recording: &str, vehicle: u32) -> Option<VehicleClass> {
        self.classes.get(&(recording.to_string(), vehicle)).copied()
    }
}

/// Frames at which the lane id differs from the previous frame.
pub fn detect_cross_lane(track: &Track) -> Vec<i64> {
    track
        .points
        .windows(2)
        .filter(|w| w[1].lane_id != w[0].lane_id)
        .map(|w| w[1].frame)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    /// Minimum lateral distance from the crossing position, meters.
    pub min_lateral_offset: f64,
    /// Tolerance on consecutive lateral accelerations, m/s².
    pub eps_accel: f64,
    /// Lateral speed below which lateral motion counts as settled, m/s.
    pub eps_speed: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            min_lateral_offset: 0.9,
            eps_accel: 0.01,
            eps_speed: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcWindow {
    pub t_start: i64,
    pub t_end: i64,
    /// A boundary fell back to the end of the track.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowRejection {
    /// Fewer than one frame on either side of the crossing.
    TooShort,
    /// The track never moves the minimum lateral offset away from the
    /// crossing position on either side.
    NoExcursion,
    /// The crossing frame is not part of the track.
    NotInTrack,
}

/// Searches the start and end of the lane change around crossing `t_c`.
///
/// A boundary is the first frame `n` (scanning away from `t_c`) with
/// `|y[n] - y[t_c]| > min_lateral_offset`, `|ay[n] - ay[n-1]| <= eps_accel`
/// and `|vy[n]| <= eps_speed`.
pub fn bound_lc_window(
    track: &Track,
    t_c: i64,
    cfg: &WindowConfig,
) -> std::result::Result<LcWindow, WindowRejection> {
    let pts = &track.points;
    let ic = t_c - track.first_frame();
    if ic < 0 || ic as usize >= pts.len() {
        return Err(WindowRejection::NotInTrack);
    }
    let ic = ic as usize;
    if ic < 1 || ic + 2 > pts.len() {
        return Err(WindowRejection::TooShort);
    }
    let yc = pts[ic].y;
    let far = |p: &TrackPoint| (p.y - yc).abs() > cfg.min_lateral_offset;
    let settled = |n: usize| {
        n >= 1
            && far(&pts[n])
            && (pts[n].ay - pts[n - 1].ay).abs() <= cfg.eps_accel
            && pts[n].vy.abs() <= cfg.eps_speed
    };

    let excursion_back = pts[..ic].iter().any(far);
    let excursion_fwd = pts[ic + 1..].iter().any(far);
    if !excursion_back && !excursion_fwd {
        return Err(WindowRejection::NoExcursion);
    }

    let mut truncated = false;
    let start = (1..ic).rev().find(|&n| settled(n)).unwrap_or_else(|| {
        truncated = true;
        0
    });
    let end = (ic + 1..pts.len()).find(|&n| settled(n)).unwrap_or_else(|| {
        truncated = true;
        pts.len() - 1
    });
    Ok(LcWindow {
        t_start: pts[start].frame,
        t_end: pts[end].frame,
        truncated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeighborRules {
    /// Upper bound on ego-to-por longitudinal distance, meters.
    pub max_por_gap: f64,
    /// Bound on `|Δx|` between ego and ta, meters.
    pub max_ta_offset: f64,
}

impl Default for NeighborRules {
    fn default() -> Self {
        NeighborRules {
            max_por_gap: 120.0,
            max_ta_offset: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbors {
    pub por_id: u32,
    pub ta_id: u32,
    /// `x_por - x_ego` at the window start (center to center).
    pub dx_por: f64,
    /// `x_ta - x_ego` at the window start.
    pub dx_ta: f64,
}

/// Picks por and ta for an ego at frame `t_start`.
///
/// por: same carriageway and lane as ego, `0 < Δx < max_por_gap`, smallest
/// `Δx`. ta: same carriageway, `target_lane`, `|Δx| <= max_ta_offset`,
/// smallest `|Δx|`. Ties go to the lower vehicle id. Distances are
/// center to center.
pub fn select_neighbors(
    recording: &Recording,
    ego_id: u32,
    t_start: i64,
    target_lane: i32,
    rules: &NeighborRules,
) -> Option<Neighbors> {
    let ego = recording.track(ego_id)?;
    let e = ego.at(t_start)?;
    let mut por: Option<(f64, u32)> = None;
    let mut ta: Option<(f64, u32, f64)> = None;
    for t in &recording.tracks {
        if t.vehicle_id == ego_id || t.direction != ego.direction {
            continue;
        }
        let Some(p) = t.at(t_start) else { continue };
        let dx = p.x - e.x;
        if p.lane_id == e.lane_id && dx > 0.0 && dx < rules.max_por_gap {
            let better = match por {
                None => true,
                Some((best, id)) => dx < best || (dx == best && t.vehicle_id < id),
            };
            if better {
                por = Some((dx, t.vehicle_id));
            }
        }
        if p.lane_id == target_lane && dx.abs() <= rules.max_ta_offset {
            let better = match ta {
                None => true,
                Some((best, id, _)) => dx.abs() < best || (dx.abs() == best && t.vehicle_id < id),
            };
            if better {
                ta = Some((dx.abs(), t.vehicle_id, dx));
            }
        }
    }
    let (dx_por, por_id) = por?;
    let (_, ta_id, dx_ta) = ta?;
    if por_id == ta_id {
        return None;
    }
    Some(Neighbors {
        por_id,
        ta_id,
        dx_por,
        dx_ta,
    })
}

/// One vehicle's slice of an event window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub vehicle_id: u32,
    pub length: f64,
    pub width: f64,
    pub direction: Direction,
    pub points: Vec<TrackPoint>,
}

impl Participant {
    fn slice(track: &Track, start: i64, end: i64) -> Self {
        let a = (start - track.first_frame()) as usize;
        let b = (end - track.first_frame()) as usize;
        Participant {
            vehicle_id: track.vehicle_id,
            length: track.length,
            width: track.width,
            direction: track.direction,
            points: track.points[a..=b].to_vec(),
        }
    }
}

/// A three-vehicle lane-change event. Participants are ordered
/// (ego, por, ta) and all cover `[t_start, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcEvent {
    pub recording_id: String,
    pub ego_id: u32,
    pub por_id: u32,
    pub ta_id: u32,
    pub t_c: i64,
    pub t_start: i64,
    pub t_end: i64,
    pub truncated: bool,
    pub type_triple: TypeTriple,
    pub frame_rate: f64,
    pub participants: [Participant; 3],
}

impl LcEvent {
    pub fn len(&self) -> usize {
        (self.t_end - self.t_start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.t_end < self.t_start
    }

    pub fn scenario(&self) -> Scenario {
        let points = (0..self.len())
            .map(|i| {
                let [e, p, t] = &self.participants;
                [
                    e.points[i].x,
                    e.points[i].y,
                    p.points[i].x,
                    p.points[i].y,
                    t.points[i].x,
                    t.points[i].y,
                ]
            })
            .collect();
        Scenario {
            points,
            frame_rate: self.frame_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub window: WindowConfig,
    pub neighbors: NeighborRules,
}

/// Runs crossing detection, window bounding, neighbor selection and the
/// vehicle-type filter over one canonical recording.
///
/// Overlapping windows of one ego are merged into the earliest one. Events
/// whose three tracks do not all span the window are dropped.
pub fn extract_events(
    recording: &Recording,
    classes: &VehicleClasses,
    type_filter: Option<TypeTriple>,
    cfg: &ExtractConfig,
) -> Vec<LcEvent> {
    let mut events = Vec::new();
    for ego in &recording.tracks {
        let mut windows: Vec<(i64, LcWindow)> = detect_cross_lane(ego)
            .into_iter()
            .filter_map(|tc| bound_lc_window(ego, tc, &cfg.window).ok().map(|w| (tc, w)))
            .collect();
        windows.sort_by_key(|(tc, w)| (w.t_start, *tc));
        let mut merged: Vec<(i64, LcWindow)> = Vec::new();
        for (tc, w) in windows {
            match merged.last_mut() {
                Some((_, prev)) if w.t_start <= prev.t_end => {
                    prev.t_end = prev.t_end.max(w.t_end);
                    prev.truncated |= w.truncated;
                }
                _ => merged.push((tc, w)),
            }
        }

        for (t_c, w) in merged {
            let Some(target_lane) = ego.at(t_c).map(|p| p.lane_id) else {
                continue;
            };
            let Some(nb) =
                select_neighbors(recording, ego.vehicle_id, w.t_start, target_lane, &cfg.neighbors)
            else {
                continue;
            };
            let (Some(por), Some(ta)) = (recording.track(nb.por_id), recording.track(nb.ta_id)) else {
                continue;
            };
            if ![ego, por, ta].iter().all(|t| t.covers(w.t_start, w.t_end)) {
                continue;
            }
            let Some(triple) = [ego, por, ta]
                .iter()
                .map(|t| classes.get(&recording.id, t.vehicle_id))
                .collect::<Option<Vec<_>>>()
                .and_then(|v| TypeTriple::try_from(v).ok())
            else {
                continue;
            };
            if type_filter.is_some_and(|f| f != triple) {
                continue;
            }
            if w.t_end - w.t_start + 1 < 2 {
                continue;
            }
            events.push(LcEvent {
                recording_id: recording.id.clone(),
                ego_id: ego.vehicle_id,
                por_id: nb.por_id,
                ta_id: nb.ta_id,
                t_c,
                t_start: w.t_start,
                t_end: w.t_end,
                truncated: w.truncated,
                type_triple: triple,
                frame_rate: recording.frame_rate,
                participants: [
                    Participant::slice(ego, w.t_start, w.t_end),
                    Participant::slice(por, w.t_start, w.t_end),
                    Participant::slice(ta, w.t_start, w.t_end),
                ],
            });
        }
    }
    events
}

/// Events manifest: one row per event.
pub fn write_events_csv(events: &[LcEvent], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record([
        "event_id",
        "recording_id",
        "ego_id",
        "por_id",
        "ta_id",
        "t_c",
        "t_start",
        "t_end",
        "truncated",
        "type_triple",
    ])
    .map_err(|e| csv_err(path, e))?;
    for (i, e) in events.iter().enumerate() {
        w.write_record([
            i.to_string(),
            e.recording_id.clone(),
            e.ego_id.to_string(),
            e.por_id.to_string(),
            e.ta_id.to_string(),
            e.t_c.to_string(),
            e.t_start.to_string(),
            e.t_end.to_string(),
            e.truncated.to_string(),
            format_triple(&e.type_triple),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            message: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_synthetic, ScenarioSpec};

    fn straight(id: u32, lane: i32, x0: f64, vx: f64, n: usize) -> Track {
        Track {
            vehicle_id: id,
            length: 4.5,
            width: 1.9,
            direction: Direction::Forward,
            points: (0..n)
                .map(|i| TrackPoint {
                    frame: i as i64,
                    x: x0 + vx * i as f64 / 25.0,
                    y: (lane as f64 - 0.5) * 3.75,
                    vx,
                    vy: 0.0,
                    ax: 0.0,
                    ay: 0.0,
                    lane_id: lane,
                })
                .collect(),
        }
    }

    fn with_lanes(mut t: Track, lanes: &[i32]) -> Track {
        for (p, &l) in t.points.iter_mut().zip(lanes) {
            p.lane_id = l;
        }
        t
    }

    /// Raised-cosine lateral move of 3.75 m over `dur` frames starting at `t0`.
    fn sinusoidal_lc(t0: usize, dur: usize, n: usize) -> Track {
        let fr = 25.0;
        let amp = 3.75;
        let w = std::f64::consts::PI / (dur as f64 / fr);
        let mut t = straight(1, 1, 0.0, 30.0, n);
        for (i, p) in t.points.iter_mut().enumerate() {
            let s = (i as f64 - t0 as f64) / fr;
            let (y, vy, ay) = if i < t0 {
                (0.0, 0.0, 0.0)
            } else if i > t0 + dur {
                (amp, 0.0, 0.0)
            } else {
                (
                    amp * (1.0 - (w * s).cos()) / 2.0,
                    amp * w * (w * s).sin() / 2.0,
                    amp * w * w * (w * s).cos() / 2.0,
                )
            };
            p.y = 1.875 + y;
            p.vy = vy;
            p.ay = ay;
            p.lane_id = if p.y < 3.75 { 1 } else { 2 };
        }
        t
    }

    #[test]
    fn classify_three_groups() {
        let mut dims = Vec::new();
        for i in 0..10 {
            let e = i as f64 * 0.01;
            dims.push((4.5 + e, 2.0 - e));
            dims.push((10.0 + e, 2.5));
            dims.push((16.0 - e, 2.6 + e));
        }
        let c = classify_vehicle_types(&dims, 1).unwrap();
        // oracle: nearest of the three converged centroids
        for (d, l) in dims.iter().zip(&c.labels) {
            let nearest = (0..3)
                .min_by(|&a, &b| {
                    let da = (d.0 - c.centroids[a].0).powi(2) + (d.1 - c.centroids[a].1).powi(2);
                    let db = (d.0 - c.centroids[b].0).powi(2) + (d.1 - c.centroids[b].1).powi(2);
                    da.total_cmp(&db)
                })
                .unwrap();
            assert_eq!(*l, VehicleClass::ALL[nearest]);
        }
        assert_eq!(c.labels[0], VehicleClass::PC);
        assert_eq!(c.labels[1], VehicleClass::HV);
        assert_eq!(c.labels[2], VehicleClass::OT);
    }

    #[test]
    fn degenerate_dims_pick_distinct_points() {
        let mut dims = vec![(4.5, 2.0); 20];
        dims.push((10.0, 2.5));
        dims.push((16.0, 2.6));
        let c = classify_vehicle_types(&dims, 3).unwrap();
        assert_eq!(c.centroids, [(4.5, 2.0), (10.0, 2.5), (16.0, 2.6)]);
    }

    #[test]
    fn classification_ignores_input_order() {
        let dims: Vec<(f64, f64)> = (0..30)
            .map(|i| match i % 3 {
                0 => (4.2 + 0.02 * i as f64, 1.8),
                1 => (9.5 + 0.03 * i as f64, 2.5),
                _ => (15.0 + 0.05 * i as f64, 2.6),
            })
            .collect();
        let a = classify_vehicle_types(&dims, 9).unwrap();
        let mut perm: Vec<usize> = (0..dims.len()).collect();
        perm.reverse();
        perm.rotate_left(7);
        let shuffled: Vec<_> = perm.iter().map(|&i| dims[i]).collect();
        let b = classify_vehicle_types(&shuffled, 9).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(b.labels[k], a.labels[i]);
        }
    }

    #[test]
    fn too_few_distinct_dims() {
        assert!(classify_vehicle_types(&[(4.5, 2.0), (4.5, 2.0), (10.0, 2.5)], 0).is_err());
    }

    #[test]
    fn crossings_from_lane_ids() {
        let t = straight(1, 2, 0.0, 30.0, 4);
        assert!(detect_cross_lane(&t).is_empty());
        let t = with_lanes(straight(1, 2, 0.0, 30.0, 4), &[2, 2, 3, 3]);
        assert_eq!(detect_cross_lane(&t), vec![2]);
        let lanes = [2, 3, 3, 2];
        let t = with_lanes(straight(1, 2, 0.0, 30.0, 4), &lanes);
        let oracle: Vec<i64> = (1..lanes.len())
            .filter(|&i| lanes[i] != lanes[i - 1])
            .map(|i| i as i64)
            .collect();
        assert_eq!(detect_cross_lane(&t), oracle);
    }

    #[test]
    fn symmetric_profile_gives_symmetric_window() {
        let t = sinusoidal_lc(60, 80, 220);
        let tc = detect_cross_lane(&t);
        assert_eq!(tc.len(), 1);
        let w = bound_lc_window(&t, tc[0], &WindowConfig::default()).unwrap();
        assert!(!w.truncated);
        let before = tc[0] - w.t_start;
        let after = w.t_end - tc[0];
        assert!((before - after).abs() <= 1, "{before} vs {after}");
    }

    #[test]
    fn never_settling_is_truncated() {
        // ends mid-manoeuvre: no settled frame after the crossing
        let t = sinusoidal_lc(60, 80, 115);
        let tc = detect_cross_lane(&t)[0];
        let w = bound_lc_window(&t, tc, &WindowConfig::default()).unwrap();
        assert!(w.truncated);
        assert_eq!(w.t_end, 114);
    }

    #[test]
    fn straight_track_rejected() {
        let t = straight(1, 1, 0.0, 30.0, 50);
        assert_eq!(
            bound_lc_window(&t, 25, &WindowConfig::default()),
            Err(WindowRejection::NoExcursion)
        );
        assert_eq!(
            bound_lc_window(&t, 0, &WindowConfig::default()),
            Err(WindowRejection::TooShort)
        );
    }

    fn recording(tracks: Vec<Track>) -> Recording {
        Recording {
            id: "r".into(),
            frame_rate: 25.0,
            lane_markings: vec![],
            tracks,
        }
    }

    #[test]
    fn no_vehicle_ahead_means_no_neighbors() {
        let r = recording(vec![
            straight(1, 1, 100.0, 30.0, 10),
            straight(2, 1, 50.0, 30.0, 10),
            straight(3, 2, 100.0, 30.0, 10),
        ]);
        assert!(select_neighbors(&r, 1, 0, 2, &NeighborRules::default()).is_none());
    }

    #[test]
    fn nearest_por_ahead() {
        let r = recording(vec![
            straight(1, 1, 100.0, 30.0, 10),
            straight(2, 1, 180.0, 30.0, 10),
            straight(3, 1, 130.0, 30.0, 10),
            straight(4, 2, 90.0, 30.0, 10),
        ]);
        let nb = select_neighbors(&r, 1, 0, 2, &NeighborRules::default()).unwrap();
        assert_eq!(nb.por_id, 3);
        assert_eq!(nb.dx_por, 30.0);
    }

    #[test]
    fn ta_is_argmin_abs_dx() {
        let r = recording(vec![
            straight(1, 1, 100.0, 30.0, 10),
            straight(2, 1, 130.0, 30.0, 10),
            straight(3, 2, 60.0, 30.0, 10),
            straight(4, 2, 160.0, 30.0, 10),
        ]);
        let nb = select_neighbors(&r, 1, 0, 2, &NeighborRules::default()).unwrap();
        let candidates = [(3u32, -40.0f64), (4, 60.0)];
        let oracle = candidates
            .iter()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        assert_eq!(nb.ta_id, oracle.0);
        assert_eq!(nb.dx_ta, -40.0);
    }

    fn staged() -> (Recording, VehicleClasses) {
        let s = generate_synthetic(&ScenarioSpec::staged_lane_change(), 11).unwrap();
        let classes = VehicleClasses::fit(std::slice::from_ref(&s.recording), 0).unwrap();
        (s.recording, classes)
    }

    #[test]
    fn staged_lane_change_gives_one_event() {
        let (r, classes) = staged();
        let ev = extract_events(&r, &classes, Some(DEFAULT_TYPE_FILTER), &ExtractConfig::default());
        assert_eq!(ev.len(), 1);
        let e = &ev[0];
        assert_eq!((e.ego_id, e.por_id, e.ta_id), (1, 2, 3));
        assert!(e.t_start <= e.t_c && e.t_c <= e.t_end);
        assert!(!e.truncated);
        assert_eq!(e.scenario().len(), e.len());
        let rules = NeighborRules::default();
        let nb = select_neighbors(&r, 1, e.t_start, 2, &rules).unwrap();
        assert!(nb.dx_por > 0.0 && nb.dx_por < rules.max_por_gap);
        assert!(nb.dx_ta.abs() <= rules.max_ta_offset);
    }

    #[test]
    fn type_filter_mismatch_drops_event() {
        let (r, classes) = staged();
        let filter = [VehicleClass::PC, VehicleClass::OT, VehicleClass::PC];
        assert!(extract_events(&r, &classes, Some(filter), &ExtractConfig::default()).is_empty());
    }

    #[test]
    fn no_lane_changes_no_events() {
        let mut spec = ScenarioSpec::staged_lane_change();
        spec.vehicles[0].motions[1].vy = 0.0;
        let s = generate_synthetic(&spec, 1).unwrap();
        let classes = VehicleClasses::fit(std::slice::from_ref(&s.recording), 0).unwrap();
        assert!(extract_events(&s.recording, &classes, None, &ExtractConfig::default()).is_empty());
    }

    #[test]
    fn triple_parsing() {
        assert_eq!(
            parse_triple("PC-OT-hv"),
            Some([VehicleClass::PC, VehicleClass::OT, VehicleClass::HV])
        );
        assert_eq!(parse_triple("PC-OT"), None);
    }
}

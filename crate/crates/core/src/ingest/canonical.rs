use std::collections::{BTreeMap, HashMap};

use super::{Direction, LaneMarkings, Recording, Track, TrackPoint};

/// Tracks with `|mean vx|` below this (m/s) have no usable travel direction.
pub const MIN_MEAN_SPEED: f64 = 0.1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CanonicalReport {
    /// Vehicle ids dropped for lacking a travel direction.
    pub excluded: Vec<u32>,
    /// Vehicle ids that were rotated to face forward.
    pub flipped: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    flip: bool,
    x_ref: f64,
    y_ref: f64,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        if self.flip {
            self.x_ref - x
        } else {
            x - self.x_ref
        }
    }

    fn y(&self, y: f64) -> f64 {
        if self.flip {
            self.y_ref - y
        } else {
            y - self.y_ref
        }
    }

    fn sign(&self) -> f64 {
        if self.flip {
            -1.0
        } else {
            1.0
        }
    }
}

fn extent<'a>(tracks: impl Iterator<Item = &'a Track>, flip: bool) -> (f64, f64) {
    let (mut xr, mut yr) = if flip {
        (f64::NEG_INFINITY, f64::NEG_INFINITY)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    for p in tracks.flat_map(|t| t.points.iter()) {
        if flip {
            xr = xr.max(p.x);
            yr = yr.max(p.y);
        } else {
            xr = xr.min(p.x);
            yr = yr.min(p.y);
        }
    }
    (xr, yr)
}

/// Brings every track to forward travel.
///
/// Tracks with negative mean `vx` are rotated by 180 degrees; each travel
/// group is then measured from its own entry edge, so forward tracks map to
/// `x - min x`, `y - min y` and reversed tracks to `max x - x`, `max y - y`.
/// Velocities and accelerations follow the rotation. Lane ids are renumbered
/// per carriageway from 1 (lowest `y`, the slow lane) upward.
///
/// The result is idempotent and invariant under [`mirror`].
pub fn canonicalize(recording: &Recording) -> (Recording, CanonicalReport) {
    let mut report = CanonicalReport::default();
    let mut kept: Vec<&Track> = Vec::with_capacity(recording.tracks.len());
    for t in &recording.tracks {
        if t.mean_vx().abs() < MIN_MEAN_SPEED {
            report.excluded.push(t.vehicle_id);
        } else {
            kept.push(t);
        }
    }
    if !report.excluded.is_empty() {
        log::warn!(
            "recording {}: excluded {} tracks without a travel direction",
            recording.id,
            report.excluded.len()
        );
    }

    let reversed = |t: &Track| t.mean_vx() < 0.0;
    let (fx, fy) = extent(kept.iter().copied().filter(|t| !reversed(t)), false);
    let (rx, ry) = extent(kept.iter().copied().filter(|t| reversed(t)), true);
    let forward = Frame {
        flip: false,
        x_ref: fx,
        y_ref: fy,
    };
    let backward = Frame {
        flip: true,
        x_ref: rx,
        y_ref: ry,
    };

    // carriageway tag -> frame used for its markings (majority of its tracks)
    let mut votes: HashMap<Direction, (usize, usize)> = HashMap::new();
    let mut tracks: Vec<Track> = kept
        .iter()
        .map(|t| {
            let frame = if reversed(t) { backward } else { forward };
            let v = votes.entry(t.direction).or_default();
            if frame.flip {
                v.1 += 1;
                report.flipped.push(t.vehicle_id);
            } else {
                v.0 += 1;
            }
            let s = frame.sign();
            Track {
                vehicle_id: t.vehicle_id,
                length: t.length,
                width: t.width,
                direction: t.direction,
                points: t
                    .points
                    .iter()
                    .map(|p| TrackPoint {
                        frame: p.frame,
                        x: frame.x(p.x),
                        y: frame.y(p.y),
                        vx: s * p.vx,
                        vy: s * p.vy,
                        ax: s * p.ax,
                        ay: s * p.ay,
                        lane_id: p.lane_id,
                    })
                    .collect(),
            }
        })
        .collect();

    let lane_markings = recording
        .lane_markings
        .iter()
        .filter_map(|m| {
            let (fwd, rev) = votes.get(&m.direction).copied().unwrap_or((0, 0));
            if fwd == 0 && rev == 0 {
                // no tracks to anchor this carriageway
                return None;
            }
            let frame = if rev > fwd { backward } else { forward };
            let mut positions: Vec<f64> = m.positions.iter().map(|&y| frame.y(y)).collect();
            positions.sort_by(f64::total_cmp);
            Some(LaneMarkings {
                direction: m.direction,
                positions,
            })
        })
        .collect();

    renumber_lanes(&mut tracks);

    (
        Recording {
            id: recording.id.clone(),
            frame_rate: recording.frame_rate,
            lane_markings,
            tracks,
        },
        report,
    )
}

fn renumber_lanes(tracks: &mut [Track]) {
    // (carriageway, raw lane) -> (sum y, count)
    let mut stats: BTreeMap<(Direction, i32), (f64, usize)> = BTreeMap::new();
    for t in tracks.iter() {
        for p in &t.points {
            let e = stats.entry((t.direction, p.lane_id)).or_insert((0.0, 0));
            e.0 += p.y;
            e.1 += 1;
        }
    }
    let mut by_dir: BTreeMap<Direction, Vec<(f64, i32)>> = BTreeMap::new();
    for (&(dir, lane), &(sum, n)) in &stats {
        by_dir.entry(dir).or_default().push((sum / n as f64, lane));
    }
    let mut remap: HashMap<(Direction, i32), i32> = HashMap::new();
    for (dir, mut lanes) in by_dir {
        lanes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (rank, (_, lane)) in lanes.into_iter().enumerate() {
            remap.insert((dir, lane), rank as i32 + 1);
        }
    }
    for t in tracks.iter_mut() {
        for p in &mut t.points {
            p.lane_id = remap[&(t.direction, p.lane_id)];
        }
    }
}

/// Rotates a whole recording by 180 degrees and swaps carriageway tags.
pub fn mirror(recording: &Recording) -> Recording {
    Recording {
        id: recording.id.clone(),
        frame_rate: recording.frame_rate,
        lane_markings: recording
            .lane_markings
            .iter()
            .map(|m| {
                let mut positions: Vec<f64> = m.positions.iter().map(|y| -y).collect();
                positions.sort_by(f64::total_cmp);
                LaneMarkings {
                    direction: m.direction.toggled(),
                    positions,
                }
            })
            .collect(),
        tracks: recording
            .tracks
            .iter()
            .map(|t| Track {
                direction: t.direction.toggled(),
                points: t
                    .points
                    .iter()
                    .map(|p| TrackPoint {
                        x: -p.x,
                        y: -p.y,
                        vx: -p.vx,
                        vy: -p.vy,
                        ax: -p.ax,
                        ay: -p.ay,
                        ..*p
                    })
                    .collect(),
                ..t.clone()
            })
            .collect(),
    }
}

/// Centered moving average of positions over `window` frames (odd, >= 1).
///
/// Not applied by default; exposed for data with visible position jitter.
pub fn smooth_positions(recording: &Recording, window: usize) -> Recording {
    let half = window / 2;
    let mut out = recording.clone();
    if half == 0 {
        return out;
    }
    for (t, src) in out.tracks.iter_mut().zip(&recording.tracks) {
        let n = src.points.len();
        for i in 0..n {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let k = (hi - lo + 1) as f64;
            t.points[i].x = src.points[lo..=hi].iter().map(|p| p.x).sum::<f64>() / k;
            t.points[i].y = src.points[lo..=hi].iter().map(|p| p.y).sum::<f64>() / k;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(id: u32, dir: Direction, vx: f64, x0: f64, y: f64, lane: i32, n: usize) -> Track {
        Track {
            vehicle_id: id,
            length: 4.5,
            width: 2.0,
            direction: dir,
            points: (0..n)
                .map(|i| TrackPoint {
                    frame: i as i64,
                    x: x0 + vx * i as f64 / 25.0,
                    y: y + 0.01 * i as f64,
                    vx,
                    vy: 0.25,
                    ax: 0.1,
                    ay: 0.0,
                    lane_id: lane,
                })
                .collect(),
        }
    }

    fn sample() -> Recording {
        Recording {
            id: "r".into(),
            frame_rate: 25.0,
            lane_markings: vec![
                LaneMarkings {
                    direction: Direction::Reversed,
                    positions: vec![-16.0, -12.0, -8.0],
                },
                LaneMarkings {
                    direction: Direction::Forward,
                    positions: vec![-29.0, -25.0, -21.0],
                },
            ],
            tracks: vec![
                track(1, Direction::Forward, 30.0, 10.0, -27.0, 6, 20),
                track(2, Direction::Forward, 25.0, 40.0, -23.0, 5, 20),
                track(3, Direction::Reversed, -30.0, 400.0, -10.0, 3, 20),
                track(4, Direction::Reversed, -28.0, 350.0, -14.0, 2, 20),
            ],
        }
    }

    #[test]
    fn forward_track_keeps_shape() {
        let r = Recording {
            tracks: vec![track(1, Direction::Forward, 30.0, 0.0, 0.0, 1, 5)],
            lane_markings: vec![],
            ..sample()
        };
        let (c, report) = canonicalize(&r);
        assert!(report.flipped.is_empty());
        assert_eq!(c.tracks[0], r.tracks[0]);
    }

    #[test]
    fn reversed_speed_flips_sign() {
        let (c, report) = canonicalize(&sample());
        assert_eq!(report.flipped, vec![3, 4]);
        let t = c.track(3).unwrap();
        assert!(t.points.iter().all(|p| p.vx == 30.0));
        // the carriageway tag is kept so the two directions stay apart
        assert_eq!(t.direction, Direction::Reversed);
        assert_eq!(c.track(1).unwrap().direction, Direction::Forward);
    }

    #[test]
    fn mirrored_recording_gives_same_points() {
        let r = sample();
        let (a, _) = canonicalize(&r);
        let (b, _) = canonicalize(&mirror(&r));
        assert_eq!(a.tracks.len(), b.tracks.len());
        for (ta, tb) in a.tracks.iter().zip(&b.tracks) {
            for (pa, pb) in ta.points.iter().zip(&tb.points) {
                for (u, v) in [
                    (pa.x, pb.x),
                    (pa.y, pb.y),
                    (pa.vx, pb.vx),
                    (pa.vy, pb.vy),
                    (pa.ax, pb.ax),
                    (pa.ay, pb.ay),
                ] {
                    assert!((u - v).abs() < 1e-9, "{u} vs {v}");
                }
                assert_eq!(pa.lane_id, pb.lane_id);
            }
        }
    }

    #[test]
    fn idempotent() {
        let (once, _) = canonicalize(&sample());
        let (twice, report) = canonicalize(&once);
        assert!(report.flipped.is_empty());
        assert_eq!(once, twice);
    }

    #[test]
    fn standing_vehicle_excluded() {
        let mut r = sample();
        r.tracks
            .push(track(9, Direction::Forward, 0.05, 0.0, -27.0, 6, 10));
        let (c, report) = canonicalize(&r);
        assert_eq!(report.excluded, vec![9]);
        assert!(c.track(9).is_none());
    }

    #[test]
    fn lanes_numbered_from_slow_lane() {
        let (c, _) = canonicalize(&sample());
        // forward carriageway: track 1 is at lower y than track 2
        assert_eq!(c.track(1).unwrap().points[0].lane_id, 1);
        assert_eq!(c.track(2).unwrap().points[0].lane_id, 2);
        for m in &c.lane_markings {
            assert!(m.positions.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

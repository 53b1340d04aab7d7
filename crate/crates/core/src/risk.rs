//! Time-to-collision for same-lane (type A) and cross-lane (type C)
//! geometries, and its aggregation to primitives and clusters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::extract::{csv_err, LcEvent, Participant};
use crate::hmm::Segment;
use crate::{Error, Result};

/// Center position, velocity and footprint of one vehicle at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub length: f64,
    pub width: f64,
    pub lane_id: i32,
}

impl VehicleState {
    pub fn of(p: &Participant, i: usize) -> Self {
        let q = &p.points[i];
        VehicleState {
            x: q.x,
            y: q.y,
            vx: q.vx,
            vy: q.vy,
            length: p.length,
            width: p.width,
            lane_id: q.lane_id,
        }
    }
}

/// Rear-end TTC: bumper gap over closing speed. `Some(0.0)` when the pair
/// is closing while already overlapping longitudinally; none when not
/// closing. Width is ignored.
pub fn ttc_type_a(follower: &VehicleState, leader: &VehicleState) -> Option<f64> {
    let gap = (leader.x - follower.x) - (leader.length + follower.length) / 2.0;
    let dv = follower.vx - leader.vx;
    if !(dv > 0.0) {
        return None;
    }
    if gap <= 0.0 {
        return Some(0.0);
    }
    Some(gap / dv)
}

/// Times during which two extents, `rel` apart and closing at `-vel`,
/// overlap (`|rel + vel t| < half`). None if never.
fn axis_interval(rel: f64, vel: f64, half: f64) -> Option<(f64, f64)> {
    if vel == 0.0 {
        return (rel.abs() < half).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let a = (-half - rel) / vel;
    let b = (half - rel) / vel;
    Some((a.min(b), a.max(b)))
}

/// Cross-lane TTC: first time at or after now when the constant-velocity
/// projections of both rectangles overlap on both axes at once.
/// `Some(0.0)` when they overlap now.
pub fn ttc_type_c(v1: &VehicleState, v2: &VehicleState) -> Option<f64> {
    overlap_window(v1, v2).map(|(t_in, _)| t_in.max(0.0))
}

/// The full time interval of joint overlap, if it reaches `t > 0`.
pub fn overlap_window(v1: &VehicleState, v2: &VehicleState) -> Option<(f64, f64)> {
    let (x_in, x_out) = axis_interval(v2.x - v1.x, v2.vx - v1.vx, (v1.length + v2.length) / 2.0)?;
    let (y_in, y_out) = axis_interval(v2.y - v1.y, v2.vy - v1.vy, (v1.width + v2.width) / 2.0)?;
    let t_in = x_in.max(y_in);
    let t_out = x_out.min(y_out);
    (t_in < t_out && t_out > 0.0).then_some((t_in, t_out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pair {
    EgoPor,
    EgoTa,
    PorTa,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::EgoPor, Pair::EgoTa, Pair::PorTa];

    /// Participant indices in (ego, por, ta) order.
    pub fn indices(self) -> (usize, usize) {
        match self {
            Pair::EgoPor => (0, 1),
            Pair::EgoTa => (0, 2),
            Pair::PorTa => (1, 2),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pair::EgoPor => "ego-por",
            Pair::EgoTa => "ego-ta",
            Pair::PorTa => "por-ta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    A,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtcSample {
    pub frame: i64,
    pub pair: Pair,
    pub ttc: Option<f64>,
    /// Set exactly when `ttc` is.
    pub geometry: Option<Geometry>,
}

/// TTC of one pair of states: type A in a shared lane (rear vehicle is the
/// follower), type C otherwise.
pub fn pair_ttc(a: &VehicleState, b: &VehicleState) -> (Option<f64>, Geometry) {
    if a.lane_id == b.lane_id {
        let (f, l) = if a.x <= b.x { (a, b) } else { (b, a) };
        (ttc_type_a(f, l), Geometry::A)
    } else {
        (ttc_type_c(a, b), Geometry::C)
    }
}

/// Per-frame TTC of one pair over the whole event window.
pub fn pair_ttc_series(event: &LcEvent, pair: Pair) -> Vec<TtcSample> {
    let (i, j) = pair.indices();
    let (a, b) = (&event.participants[i], &event.participants[j]);
    (0..event.len())
        .map(|t| {
            let (ttc, g) = pair_ttc(&VehicleState::of(a, t), &VehicleState::of(b, t));
            TtcSample {
                frame: a.points[t].frame,
                pair,
                ttc,
                geometry: ttc.map(|_| g),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveRisk {
    pub primitive_id: String,
    /// Capped minimum per pair in [`Pair::ALL`] order.
    pub per_pair_min: [Option<f64>; 3],
    /// Mean of the defined per-pair minima.
    pub risk: Option<f64>,
}

/// Mean over pairs of the per-pair minimum.
pub fn aggregate_risk(per_pair_min: &[Option<f64>]) -> Option<f64> {
    let vals: Vec<f64> = per_pair_min.iter().flatten().copied().collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Per-pair minimum TTC within `frames` (offsets into the series), capped
/// at `cap`, then averaged over pairs with any defined sample.
pub fn primitive_risk(
    primitive_id: &str,
    series: &[Vec<TtcSample>; 3],
    frames: &Segment,
    cap: f64,
) -> PrimitiveRisk {
    let per_pair_min = std::array::from_fn(|p| {
        series[p][frames.start..=frames.end]
            .iter()
            .filter_map(|s| s.ttc)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
            .map(|m| m.min(cap))
    });
    PrimitiveRisk {
        primitive_id: primitive_id.to_string(),
        risk: aggregate_risk(&per_pair_min),
        per_pair_min,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRiskRow {
    pub cluster: usize,
    pub primitives: usize,
    /// Primitives with a defined risk.
    pub frequency: usize,
    pub mean: Option<f64>,
    /// Lower middle value for even counts.
    pub median: Option<f64>,
    /// Sample standard deviation; none below two values.
    pub std: Option<f64>,
}

/// Per-cluster risk statistics, ascending by mean. Clusters without any
/// defined risk come last in index order.
pub fn cluster_risk_stats(assignments: &[usize], risks: &[Option<f64>], k: usize) -> Vec<ClusterRiskRow> {
    let mut rows: Vec<ClusterRiskRow> = (0..k)
        .map(|c| {
            let members = assignments.iter().filter(|&&a| a == c).count();
            let mut v: Vec<f64> = assignments
                .iter()
                .zip(risks)
                .filter(|(&a, _)| a == c)
                .filter_map(|(_, r)| *r)
                .collect();
            v.sort_by(f64::total_cmp);
            let n = v.len();
            let mean = (n > 0).then(|| v.iter().sum::<f64>() / n as f64);
            let std = (n > 1).then(|| {
                let m = mean.unwrap();
                (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
            });
            ClusterRiskRow {
                cluster: c,
                primitives: members,
                frequency: n,
                mean,
                median: (n > 0).then(|| v[(n - 1) / 2]),
                std,
            }
        })
        .collect();
    rows.sort_by(|a, b| match (a.mean, b.mean) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.cluster.cmp(&b.cluster)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cluster.cmp(&b.cluster),
    });
    rows
}

/// Counts of primitive risk values per cluster in bins of `width` seconds
/// covering `[0, cap]`.
pub fn ttc_histogram(
    assignments: &[usize],
    risks: &[Option<f64>],
    k: usize,
    width: f64,
    cap: f64,
) -> Vec<(usize, f64, f64, usize)> {
    let bins = ((cap / width).ceil() as usize).max(1);
    let mut counts = vec![vec![0usize; bins]; k];
    for (&c, r) in assignments.iter().zip(risks) {
        if let Some(r) = r {
            let b = ((r / width) as usize).min(bins - 1);
            counts[c][b] += 1;
        }
    }
    let mut out = Vec::new();
    for (c, row) in counts.iter().enumerate() {
        for (b, &n) in row.iter().enumerate() {
            out.push((c, b as f64 * width, (b + 1) as f64 * width, n));
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

/// `primitive_id,cluster,ttc_ego_por,ttc_ego_ta,ttc_por_ta,risk`.
pub fn write_risk_csv(risks: &[PrimitiveRisk], clusters: &[usize], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record([
        "primitive_id",
        "cluster",
        "ttc_ego_por",
        "ttc_ego_ta",
        "ttc_por_ta",
        "risk",
    ])
    .map_err(|e| csv_err(path, e))?;
    for (r, c) in risks.iter().zip(clusters) {
        w.write_record([
            r.primitive_id.clone(),
            c.to_string(),
            opt(r.per_pair_min[0]),
            opt(r.per_pair_min[1]),
            opt(r.per_pair_min[2]),
            opt(r.risk),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `cluster,primitives,frequency,mean,median,std`, rows in ranking order.
pub fn write_cluster_stats_csv(rows: &[ClusterRiskRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["cluster", "primitives", "frequency", "mean", "median", "std"])
        .map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([
            r.cluster.to_string(),
            r.primitives.to_string(),
            r.frequency.to_string(),
            opt(r.mean),
            opt(r.median),
            opt(r.std),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn st(x: f64, y: f64, vx: f64, vy: f64, lane: i32) -> VehicleState {
        VehicleState {
            x,
            y,
            vx,
            vy,
            length: 5.0,
            width: 2.0,
            lane_id: lane,
        }
    }

    #[test]
    fn type_a_examples() {
        // zero lengths so the gap is the center distance
        let mut f = st(0.0, 0.0, 30.0, 0.0, 1);
        let mut l = st(50.0, 0.0, 20.0, 0.0, 1);
        f.length = 0.0;
        l.length = 0.0;
        assert_eq!(ttc_type_a(&f, &l), Some(5.0));
        assert_eq!(ttc_type_a(&l, &f), None);
        l.vx = 30.0;
        assert_eq!(ttc_type_a(&f, &l), None);
        // 5 m vehicles, centers 30 m apart, closing at 5 m/s
        let f = st(0.0, 0.0, 25.0, 0.0, 1);
        let l = st(30.0, 0.0, 20.0, 0.0, 1);
        assert_eq!(ttc_type_a(&f, &l), Some(5.0));
        // overlapping while closing
        let l = st(3.0, 0.0, 20.0, 0.0, 1);
        assert_eq!(ttc_type_a(&f, &l), Some(0.0));
    }

    #[test]
    fn type_c_single_axis() {
        // alongside, 3 m lateral edge gap, closing at 1 m/s
        let v1 = st(0.0, 0.0, 30.0, 1.0, 1);
        let v2 = st(1.0, 5.0, 30.0, 0.0, 2);
        assert!((ttc_type_c(&v1, &v2).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn type_c_parallel_is_none() {
        let v1 = st(0.0, 0.0, 30.0, 0.0, 1);
        let v2 = st(10.0, 3.75, 30.0, 0.0, 2);
        assert_eq!(ttc_type_c(&v1, &v2), None);
    }

    #[test]
    fn type_c_both_axes() {
        // x edge gap 20 m at 10 m/s, y edge gap 1 m at 1 m/s
        let v1 = st(0.0, 0.0, 40.0, 1.0, 1);
        let v2 = st(25.0, 3.0, 30.0, 0.0, 2);
        let t = ttc_type_c(&v1, &v2).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!((t - dense_oracle(&v1, &v2, 10.0).unwrap()).abs() <= 1e-3);
    }

    /// First 1 ms step at which both rectangles overlap.
    fn dense_oracle(a: &VehicleState, b: &VehicleState, horizon: f64) -> Option<f64> {
        let steps = (horizon * 1000.0) as usize;
        (0..=steps).map(|i| i as f64 * 1e-3).find(|&t| {
            let dx = (b.x + b.vx * t) - (a.x + a.vx * t);
            let dy = (b.y + b.vy * t) - (a.y + a.vy * t);
            dx.abs() < (a.length + b.length) / 2.0 && dy.abs() < (a.width + b.width) / 2.0
        })
    }

    #[test]
    fn type_c_agrees_with_dense_stepping() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let horizon = 10.0;
        for _ in 0..200 {
            let a = st(
                0.0,
                0.0,
                rng.random_range(20.0..40.0),
                rng.random_range(-1.5..1.5),
                1,
            );
            let b = st(
                rng.random_range(-60.0..60.0),
                rng.random_range(-6.0..6.0),
                rng.random_range(20.0..40.0),
                rng.random_range(-1.5..1.5),
                2,
            );
            let got = ttc_type_c(&a, &b).filter(|&t| t <= horizon);
            let oracle = dense_oracle(&a, &b, horizon);
            match (got, oracle) {
                (Some(g), Some(o)) => assert!((g - o).abs() <= 1e-3 + 1e-9, "{g} vs {o}"),
                (None, None) => {}
                (None, Some(o)) => panic!("oracle overlap at {o} missed"),
                (Some(g), None) => {
                    // a window shorter than one step can fall between samples
                    let (t_in, t_out) = overlap_window(&a, &b).unwrap();
                    assert!(t_out - t_in < 1e-3 || horizon - g < 1e-3, "{g} missed by oracle");
                }
            }
        }
    }

    #[test]
    fn primitive_risk_examples() {
        assert_eq!(aggregate_risk(&[Some(4.0), Some(8.0), Some(12.0)]), Some(8.0));
        assert_eq!(aggregate_risk(&[Some(6.0), None, None]), Some(6.0));
        assert_eq!(aggregate_risk(&[None, None, None]), None);
    }

    #[test]
    fn primitive_risk_window_and_cap() {
        let mk = |pair, vals: &[Option<f64>]| -> Vec<TtcSample> {
            vals.iter()
                .enumerate()
                .map(|(i, &t)| TtcSample {
                    frame: i as i64,
                    pair,
                    ttc: t,
                    geometry: t.map(|_| Geometry::A),
                })
                .collect()
        };
        let series = [
            mk(Pair::EgoPor, &[Some(1.0), Some(9.0), Some(7.0), Some(3.0)]),
            mk(Pair::EgoTa, &[None, Some(500.0), None, None]),
            mk(Pair::PorTa, &[None, None, None, None]),
        ];
        let r = primitive_risk(
            "p",
            &series,
            &Segment {
                state: 0,
                start: 1,
                end: 2,
            },
            100.0,
        );
        assert_eq!(r.per_pair_min, [Some(7.0), Some(100.0), None]);
        assert_eq!(r.risk, Some(53.5));
    }

    #[test]
    fn cluster_stats_examples() {
        let rows = cluster_risk_stats(&[0], &[Some(7.12)], 1);
        assert_eq!(rows[0].mean, Some(7.12));
        assert_eq!(rows[0].median, Some(7.12));
        assert_eq!(rows[0].std, None);

        let rows = cluster_risk_stats(
            &[0, 0, 0, 0, 1, 1, 2],
            &[
                Some(10.0),
                Some(20.0),
                Some(30.0),
                Some(40.0),
                Some(2.0),
                Some(4.0),
                None,
            ],
            3,
        );
        assert_eq!(rows.iter().map(|r| r.cluster).collect::<Vec<_>>(), vec![1, 0, 2]);
        assert_eq!(rows[1].median, Some(20.0));
        assert_eq!(rows[1].mean, Some(25.0));
        assert!((rows[1].std.unwrap() - (500.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(
            (rows[2].primitives, rows[2].frequency, rows[2].mean),
            (1, 0, None)
        );
    }

    #[test]
    fn histogram_counts_every_defined_risk() {
        let h = ttc_histogram(&[0, 0, 1], &[Some(0.5), Some(150.0), None], 2, 10.0, 100.0);
        assert_eq!(h.len(), 20);
        assert_eq!(h.iter().map(|r| r.3).sum::<usize>(), 2);
        assert_eq!(h[9].3, 1);
    }

    use crate::extract::{VehicleClass, DEFAULT_TYPE_FILTER};
    use crate::ingest::{Direction, TrackPoint};

    /// Constant-velocity participant; `lane` gives the lane id per frame.
    fn participant(id: u32, x0: f64, vx: f64, y: f64, lane: impl Fn(usize) -> i32, n: usize) -> Participant {
        Participant {
            vehicle_id: id,
            length: 5.0,
            width: 2.0,
            direction: Direction::Forward,
            points: (0..n)
                .map(|t| TrackPoint {
                    frame: t as i64,
                    x: x0 + vx * t as f64 / 25.0,
                    y,
                    vx,
                    vy: 0.0,
                    ax: 0.0,
                    ay: 0.0,
                    lane_id: lane(t),
                })
                .collect(),
        }
    }

    fn event(participants: [Participant; 3]) -> LcEvent {
        let n = participants[0].points.len() as i64;
        LcEvent {
            recording_id: "r".into(),
            ego_id: 1,
            por_id: 2,
            ta_id: 3,
            t_c: n / 2,
            t_start: 0,
            t_end: n - 1,
            truncated: false,
            type_triple: DEFAULT_TYPE_FILTER,
            frame_rate: 25.0,
            participants,
        }
    }

    #[test]
    fn closing_same_lane_series() {
        let n = 50;
        let ev = event([
            participant(1, 0.0, 30.0, 0.0, |_| 1, n),
            participant(2, 60.0, 25.0, 0.0, |_| 1, n),
            participant(3, -40.0, 30.0, 3.75, |_| 2, n),
        ]);
        let s = pair_ttc_series(&ev, Pair::EgoPor);
        for (t, sample) in s.iter().enumerate() {
            let gap = 60.0 - 5.0 * t as f64 / 25.0 - 5.0;
            assert!((sample.ttc.unwrap() - gap / 5.0).abs() < 1e-9);
            assert_eq!(sample.geometry, Some(Geometry::A));
        }
        assert!(s.windows(2).all(|w| w[1].ttc < w[0].ttc));
        // the target-lane vehicle runs parallel behind
        assert!(pair_ttc_series(&ev, Pair::EgoTa)
            .iter()
            .all(|s| s.ttc.is_none() && s.geometry.is_none()));
    }

    #[test]
    fn diverging_is_all_none() {
        let n = 30;
        let ev = event([
            participant(1, 0.0, 25.0, 0.0, |_| 1, n),
            participant(2, 30.0, 30.0, 0.0, |_| 1, n),
            participant(3, 20.0, 35.0, 3.75, |_| 2, n),
        ]);
        for p in Pair::ALL {
            assert!(pair_ttc_series(&ev, p).iter().all(|s| s.ttc.is_none()));
        }
    }

    #[test]
    fn geometry_flips_at_crossing() {
        let n = 40;
        // ego enters lane 2 at frame 17, behind a slower target-lane vehicle
        let mut ego = participant(1, 0.0, 30.0, 0.0, |t| if t < 17 { 1 } else { 2 }, n);
        for (t, p) in ego.points.iter_mut().enumerate() {
            p.y = 3.75 * (t as f64 / (n - 1) as f64);
            p.vy = 3.75 * 25.0 / (n - 1) as f64;
        }
        let ev = event([
            ego,
            participant(2, 80.0, 30.0, 0.0, |_| 1, n),
            participant(3, 8.0, 28.0, 3.75, |_| 2, n),
        ]);
        let s = pair_ttc_series(&ev, Pair::EgoTa);
        for (t, sample) in s.iter().enumerate() {
            let want = if t < 17 { Geometry::C } else { Geometry::A };
            if let Some(g) = sample.geometry {
                assert_eq!(g, want, "frame {t}");
            }
        }
        assert!(s[17..].iter().all(|x| x.geometry == Some(Geometry::A)));
        assert!(s[..17].iter().any(|x| x.geometry == Some(Geometry::C)));
        assert_eq!(VehicleClass::PC, DEFAULT_TYPE_FILTER[0]);
    }

    fn state_strategy() -> impl Strategy<Value = VehicleState> {
        (
            -80.0f64..80.0,
            -8.0f64..8.0,
            15.0f64..40.0,
            -2.0f64..2.0,
            3.0f64..18.0,
            1.6f64..2.6,
            1i32..4,
        )
            .prop_map(|(x, y, vx, vy, length, width, lane_id)| VehicleState {
                x,
                y,
                vx,
                vy,
                length,
                width,
                lane_id,
            })
    }

    proptest! {
        #[test]
        fn type_a_scale_covariant(gap in 0.1f64..200.0, dv in 0.01f64..20.0, s in 0.1f64..10.0) {
            let mk = |g: f64, d: f64| {
                let f = VehicleState { x: 0.0, y: 0.0, vx: 20.0 + d, vy: 0.0, length: 0.0, width: 2.0, lane_id: 1 };
                let l = VehicleState { x: g, vx: 20.0, ..f };
                ttc_type_a(&f, &l).unwrap()
            };
            prop_assert!((mk(gap, dv) - mk(gap * s, dv * s)).abs() <= 1e-9 * mk(gap, dv).max(1.0));
        }

        #[test]
        fn never_negative(a in state_strategy(), b in state_strategy()) {
            let (t, _) = pair_ttc(&a, &b);
            if let Some(t) = t {
                prop_assert!(t >= 0.0 && t.is_finite());
            }
        }

        #[test]
        fn subsampling_bounded_by_one_frame_change(
            v in prop::collection::vec(0.1f64..50.0, 2..80),
        ) {
            let full = v.iter().copied().fold(f64::INFINITY, f64::min);
            let half = v.iter().step_by(2).copied().fold(f64::INFINITY, f64::min);
            let step = v.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
            prop_assert!(half >= full && half - full <= step);
        }

        #[test]
        fn risk_within_pair_range(v in prop::collection::vec(prop::option::of(0.0f64..100.0), 3)) {
            if let Some(r) = aggregate_risk(&v) {
                let d: Vec<f64> = v.iter().flatten().copied().collect();
                let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(r >= lo - 1e-12 && r <= hi + 1e-12);
            }
        }
    }
}

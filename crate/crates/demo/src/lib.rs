//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string, so the page
//! needs no bindings beyond `JSON.parse`.

use lcpat_core::cluster::dtw_path;
use lcpat_core::hmm::{select_model, FitConfig, SelectConfig};
use lcpat_core::risk::{overlap_window, pair_ttc, Geometry, VehicleState};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize, PartialEq)]
pub struct TtcResult {
    pub ttc: Option<f64>,
    pub geometry: &'static str,
    /// Open interval during which both rectangles overlap, type C only.
    pub overlap: Option<(f64, f64)>,
}

/// `[x, y, vx, vy, length, width, lane_id]`.
fn vehicle(v: &[f64]) -> Result<VehicleState, String> {
    if v.len() != 7 || v.iter().any(|x| !x.is_finite()) {
        return Err("a vehicle is [x, y, vx, vy, length, width, lane]".into());
    }
    Ok(VehicleState {
        x: v[0],
        y: v[1],
        vx: v[2],
        vy: v[3],
        length: v[4],
        width: v[5],
        lane_id: v[6] as i32,
    })
}

pub fn ttc_of(a: &[f64], b: &[f64]) -> Result<TtcResult, String> {
    let (a, b) = (vehicle(a)?, vehicle(b)?);
    let (ttc, g) = pair_ttc(&a, &b);
    Ok(TtcResult {
        ttc,
        geometry: match g {
            Geometry::A => "A",
            Geometry::C => "C",
        },
        overlap: match g {
            Geometry::A => None,
            Geometry::C => overlap_window(&a, &b),
        },
    })
}

#[derive(Debug, Serialize, PartialEq)]
pub struct Alignment {
    pub distance: f64,
    pub path: Vec<(usize, usize)>,
}

pub fn align(a: &[f64], b: &[f64]) -> Result<Alignment, String> {
    if a.is_empty() || b.is_empty() {
        return Err("both sequences need at least one value".into());
    }
    let wrap = |s: &[f64]| s.iter().map(|&v| [v]).collect::<Vec<[f64; 1]>>();
    let (distance, path) = dtw_path(&wrap(a), &wrap(b));
    Ok(Alignment { distance, path })
}

#[derive(Debug, Serialize)]
pub struct Segmentation {
    pub signal: Vec<[f64; 2]>,
    pub truth: Vec<usize>,
    pub states: Vec<usize>,
    pub n_star: usize,
    /// `(N, log-likelihood)` of every fitted candidate.
    pub candidates: Vec<(usize, f64)>,
    pub stop_reason: Option<String>,
}

/// Three 2-d regimes of 40 frames, `separation` noise sigmas apart, then
/// model selection and Viterbi decoding.
pub fn segment_demo(seed: u64, separation: f64, n_max: usize) -> Result<Segmentation, String> {
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err("separation must be a non-negative number".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).map_err(|e| e.to_string())?;
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let centers = [
        [0.0, 0.0],
        [separation, 0.0],
        [separation * (1.0 + angle.cos()), separation * angle.sin()],
    ];
    let truth: Vec<usize> = (0..120).map(|t| t / 40).collect();
    let signal: Vec<[f64; 2]> = truth
        .iter()
        .map(|&r| {
            [
                centers[r][0] + noise.sample(&mut rng),
                centers[r][1] + noise.sample(&mut rng),
            ]
        })
        .collect();
    let obs = DMatrix::from_fn(signal.len(), 2, |t, d| signal[t][d]);
    let cfg = SelectConfig {
        n_max: n_max.max(1),
        ..SelectConfig::default()
    };
    let sel = select_model(&obs, &cfg, &FitConfig::default(), seed).map_err(|e| e.to_string())?;
    Ok(Segmentation {
        signal,
        truth,
        states: sel.states,
        n_star: sel.n_star,
        candidates: sel
            .candidates
            .iter()
            .map(|c| (c.n_states, c.log_likelihood))
            .collect(),
        stop_reason: sel.stop_reason,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn ttc(a: &[f64], b: &[f64]) -> Result<String, JsError> {
    to_json(ttc_of(a, b))
}

#[wasm_bindgen]
pub fn dtw(a: &[f64], b: &[f64]) -> Result<String, JsError> {
    to_json(align(a, b))
}

#[wasm_bindgen]
pub fn segment(seed: u32, separation: f64, n_max: u32) -> Result<String, JsError> {
    to_json(segment_demo(seed as u64, separation, n_max as usize))
}

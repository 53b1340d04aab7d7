//! Length and scale normalization of primitives before clustering.

use std::path::Path;

use crate::extract::csv_err;
use crate::{Error, Result, SCENARIO_DIM};

/// `l x 6` time-major sample.
pub type Sample = Vec<[f64; SCENARIO_DIM]>;

pub const DEFAULT_LENGTH: usize = 75;

/// Linear interpolation at `l` equally spaced times spanning the input.
///
/// Sample `j` sits at original time `j (n - 1) / (l - 1)`. The grid position
/// is kept as an integer index plus an integer remainder over `l - 1`, so
/// grid points that land on input frames copy them exactly and the
/// endpoints are always preserved.
pub fn resample<const D: usize>(points: &[[f64; D]], l: usize) -> Result<Vec<[f64; D]>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "cannot interpolate a primitive of {n} frame(s)"
        )));
    }
    if l < 2 {
        return Err(Error::InvalidInput(format!("target length {l} is below 2")));
    }
    let span = (l - 1) as u128;
    Ok((0..l)
        .map(|j| {
            let pos = j as u128 * (n - 1) as u128;
            let i = (pos / span) as usize;
            let r = pos % span;
            if r == 0 {
                return points[i];
            }
            let (lo, hi) = (&points[i], &points[i + 1]);
            let (wl, wh, s) = ((span - r) as f64, r as f64, span as f64);
            std::array::from_fn(|d| (lo[d] * wl + hi[d] * wh) / s)
        })
        .collect())
}

/// Per-dimension Min-Max scaling to `[-1, 1]`. Constant dimensions map to 0.
pub fn normalize<const D: usize>(sample: &[[f64; D]]) -> Vec<[f64; D]> {
    let mut lo = [f64::INFINITY; D];
    let mut hi = [f64::NEG_INFINITY; D];
    for p in sample {
        for d in 0..D {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    sample
        .iter()
        .map(|p| {
            std::array::from_fn(|d| {
                let range = hi[d] - lo[d];
                if range > 0.0 {
                    2.0 * ((p[d] - lo[d]) / range) - 1.0
                } else {
                    0.0
                }
            })
        })
        .collect()
}

/// Time-major concatenation: index `D * a + d` holds dimension `d` of time `a`.
pub fn flatten<const D: usize>(sample: &[[f64; D]]) -> Vec<f64> {
    sample.iter().flatten().copied().collect()
}

pub fn unflatten<const D: usize>(flat: &[f64]) -> Result<Vec<[f64; D]>> {
    if flat.len() % D != 0 {
        return Err(Error::InvalidInput(format!(
            "{} values do not split into rows of {D}",
            flat.len()
        )));
    }
    Ok(flat
        .chunks_exact(D)
        .map(|c| std::array::from_fn(|d| c[d]))
        .collect())
}

/// Resample then normalize.
pub fn prepare(points: &[[f64; SCENARIO_DIM]], l: usize) -> Result<Sample> {
    Ok(normalize(&resample(points, l)?))
}

const DIM_NAMES: [&str; SCENARIO_DIM] = ["x_ego", "y_ego", "x_por", "y_por", "x_ta", "y_ta"];

/// One row per primitive: `primitive_id`, then `t{a}_{dim}` columns in
/// flattened order.
pub fn write_matrix_csv(rows: &[(String, Sample)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let l = rows.first().map_or(0, |r| r.1.len());
    let mut header = vec!["primitive_id".to_string()];
    for a in 0..l {
        header.extend(DIM_NAMES.iter().map(|n| format!("t{a}_{n}")));
    }
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (id, s) in rows {
        if s.len() != l {
            return Err(Error::InvalidInput(format!(
                "primitive {id} has length {}, expected {l}",
                s.len()
            )));
        }
        let mut rec = vec![id.clone()];
        rec.extend(flatten(s).iter().map(|v| format!("{v:?}")));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<Vec<(String, Sample)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let vals = rec
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    row: i + 2,
                    message: format!("{v:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((rec.get(0).unwrap_or_default().to_string(), unflatten(&vals)?));
    }
    Ok(out)
}

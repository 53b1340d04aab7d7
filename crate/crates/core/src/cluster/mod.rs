//! DTW K-means over prepared primitives.

mod dba;
mod dtw;
mod elbow;
mod kmeans_dtw;

pub use dba::{dba_center, sq_cost};
pub use dtw::{dtw_distance, dtw_path, local_cost};
pub use elbow::{elbow_curve, quadratic_fit, ElbowRow};
pub use kmeans_dtw::{kmeans_dtw, CenterMode, ClusterConfig, ClusterModel};

use std::path::Path;

use crate::extract::csv_err;
use crate::{Error, Result};

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

/// `primitive_id,cluster,dtw_to_center`.
pub fn write_cluster_report<const D: usize>(
    ids: &[String],
    model: &ClusterModel<D>,
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["primitive_id", "cluster", "dtw_to_center"])
        .map_err(|e| csv_err(path, e))?;
    for ((id, c), d) in ids.iter().zip(&model.assignments).zip(&model.distances) {
        w.write_record([id.clone(), c.to_string(), format!("{d:?}")])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `k,lambda_w,change_rate,smoothed_change_rate`; undefined rates are empty.
pub fn write_elbow_csv(rows: &[ElbowRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["k", "lambda_w", "change_rate", "smoothed_change_rate"])
        .map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            format!("{:?}", r.lambda_w),
            opt(r.change_rate),
            opt(r.smoothed_change_rate),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

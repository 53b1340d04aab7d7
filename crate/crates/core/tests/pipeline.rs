use std::path::Path;

use lcpat_core::config::PipelineConfig;
use lcpat_core::ingest::ScenarioSpec;
use lcpat_core::pipeline::{report, run_stages, RunManifest, Stage};

fn staged(k: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.input.synthetic = Some(ScenarioSpec::staged_lane_change());
    cfg.cluster.k = k;
    cfg
}

fn csv_rows(path: &Path) -> usize {
    csv::Reader::from_path(path).unwrap().records().count()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn staged_lane_change_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_stages(&staged(1), dir.path(), Stage::Risk).unwrap();
    assert_eq!(m.count("events"), Some(1));
    assert!(m.count("primitives_after_filter").unwrap() >= 1);
    assert_eq!(m.count("clusters"), Some(1));
    assert!(m.stages.iter().all(|s| !s.cache_hit));

    // manifest counts agree with the tables
    let d = dir.path();
    assert_eq!(csv_rows(&d.join("events.csv")), m.count("events").unwrap());
    assert_eq!(
        csv_rows(&d.join("primitives.csv")),
        m.count("primitives_before_filter").unwrap()
    );
    assert_eq!(
        csv_rows(&d.join("primitive_matrix.csv")),
        m.count("primitives_after_filter").unwrap()
    );
    assert_eq!(
        csv_rows(&d.join("clusters.csv")),
        m.count("primitives_after_filter").unwrap()
    );
    assert_eq!(
        csv_rows(&d.join("risk.csv")),
        m.count("primitives_after_filter").unwrap()
    );
    assert_eq!(csv_rows(&d.join("cluster_risk.csv")), 1);
    assert_eq!(RunManifest::load(d).unwrap(), m);
}

#[test]
fn rerun_hits_every_cache_and_keeps_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = staged(1);
    let first = run_stages(&cfg, dir.path(), Stage::Risk).unwrap();
    let before: Vec<_> = first
        .stages
        .iter()
        .flat_map(|s| s.artifacts.keys())
        .map(|n| (n.clone(), read(dir.path(), n)))
        .collect();
    let second = run_stages(&cfg, dir.path(), Stage::Risk).unwrap();
    assert!(second.stages.iter().all(|s| s.cache_hit));
    for (name, bytes) in before {
        assert_eq!(read(dir.path(), &name), bytes, "{name}");
    }

    // a risk-only change reruns just the risk stage
    let mut changed = cfg.clone();
    changed.risk.ttc_cap = 5.0;
    let third = run_stages(&changed, dir.path(), Stage::Risk).unwrap();
    let hits: Vec<bool> = third.stages.iter().map(|s| s.cache_hit).collect();
    assert_eq!(hits, vec![true, true, true, true, true, false]);
}

#[test]
fn separate_directories_agree() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_stages(&staged(1), a.path(), Stage::Risk).unwrap();
    run_stages(&staged(1), b.path(), Stage::Risk).unwrap();
    for s in &ma.stages {
        for name in s.artifacts.keys() {
            assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
        }
    }
}

#[test]
fn oversized_k_fails_in_cluster_stage() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_stages(&staged(500), dir.path(), Stage::Risk).unwrap_err();
    assert_eq!(err.stage, Stage::Cluster);
    assert!(err.to_string().starts_with("[cluster]"));
    assert!(!dir.path().join("clusters.csv").exists());
    assert!(dir.path().join("manifest.json.partial").exists());
    // earlier stages completed
    assert!(dir.path().join("primitive_matrix.csv").exists());
}

#[test]
fn mid_stage_failure_leaves_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = staged(1);
    cfg.cluster.k_range = Some([400, 500]);
    let err = run_stages(&cfg, dir.path(), Stage::Risk).unwrap_err();
    assert_eq!(err.stage, Stage::Cluster);
    assert!(dir.path().join("clusters.csv.partial").exists());
    assert!(!dir.path().join("clusters.csv").exists());
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn stopping_early_then_continuing_reuses_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = staged(1);
    let m = run_stages(&cfg, dir.path(), Stage::Segment).unwrap();
    assert_eq!(m.stages.len(), 3);
    assert!(report(dir.path()).is_err());
    let full = run_stages(&cfg, dir.path(), Stage::Risk).unwrap();
    let hits: Vec<bool> = full.stages.iter().map(|s| s.cache_hit).collect();
    assert_eq!(hits, vec![true, true, true, false, false, false]);
}

#[test]
fn report_flags_lowest_mean_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = staged(2);
    cfg.segment.min_frames = 2;
    run_stages(&cfg, dir.path(), Stage::Risk).unwrap();
    let r = report(dir.path()).unwrap();
    assert_eq!(r.rows.len(), 2);

    // recompute from risk.csv
    let mut sums = [(0.0, 0usize); 2];
    let mut rdr = csv::Reader::from_path(dir.path().join("risk.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let c: usize = rec[1].parse().unwrap();
        if let Ok(v) = rec[5].parse::<f64>() {
            sums[c].0 += v;
            sums[c].1 += 1;
        }
    }
    let mut means: Vec<(f64, usize)> = (0..2)
        .filter(|&c| sums[c].1 > 0)
        .map(|c| (sums[c].0 / sums[c].1 as f64, c))
        .collect();
    means.sort_by(|a, b| a.0.total_cmp(&b.0));
    let expect: Vec<usize> = means.iter().map(|m| m.1).collect();
    assert_eq!(r.high_risk, expect);
    let text = r.to_string();
    assert!(text.contains("HIGH-RISK"));
}

#[test]
fn report_without_manifest_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(report(dir.path()).is_err());
}

#[test]
fn no_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_stages(&PipelineConfig::default(), dir.path(), Stage::Risk).unwrap_err();
    assert_eq!(err.stage, Stage::Ingest);
    assert!(!err.source.is_numeric());
}

#[test]
fn report_without_defined_risk_prints_none() {
    let r = lcpat_core::pipeline::Report {
        counts: Default::default(),
        rows: vec![],
        high_risk: vec![],
    };
    assert!(r.to_string().contains("HIGH-RISK: none"));
}

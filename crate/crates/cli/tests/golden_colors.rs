//! Reference color vectors for every mode, two scales and three thresholds,
//! computed from the checked-in golden bundles. Any reimplementation of the
//! color mapping (such as the browser viewer) must reproduce them exactly.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite `golden/colors.json`.

use std::path::PathBuf;

use scorelens::bundle::{self, ColorRequest, LevelAnalysis};
use scorelens::colormap::ScaleId;
use serde_json::{json, Value};

const SAMPLES: [&str; 3] = ["sections_tab", "chords_ties", "empty_bars"];
const SCALES: [ScaleId; 2] = [ScaleId::Spectral, ScaleId::Blues];
const THRESHOLDS: [f64; 3] = [0.1, 0.3, 0.6];

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn requests(count: usize) -> Vec<(String, ColorRequest)> {
    let mut out = vec![("mds".to_string(), ColorRequest::Mds)];
    out.extend(THRESHOLDS.map(|threshold| (format!("cluster:{threshold}"), ColorRequest::Cluster { threshold })));
    // First and last segment, so the selection index is exercised at both ends.
    for selected in [0, count.saturating_sub(1)] {
        out.push((format!("direct:{selected}"), ColorRequest::Direct(selected)));
        out.push((format!("identical:{selected}"), ColorRequest::Identical(selected)));
    }
    out.dedup_by(|a, b| a.0 == b.0);
    out
}

fn level_vectors(level: &LevelAnalysis) -> Value {
    let mut by_scale = serde_json::Map::new();
    for scale in SCALES {
        let mut by_request = serde_json::Map::new();
        if level.count > 0 {
            for (name, request) in requests(level.count) {
                let colors = level.colors(request, &scale.scale()).unwrap();
                let hex: Vec<Value> = colors.colors.iter().map(|c| c.map_or(Value::Null, |c| c.to_hex().into())).collect();
                by_request.insert(name, hex.into());
            }
        }
        by_scale.insert(scale.name().to_string(), by_request.into());
    }
    by_scale.into()
}

fn compute() -> Value {
    let mut samples = serde_json::Map::new();
    for sample in SAMPLES {
        let bytes = std::fs::read(golden_dir().join(format!("{sample}.scorelens.json"))).unwrap();
        let b = bundle::deserialize(&bytes).unwrap();
        let levels = &b.analysis.levels;
        samples.insert(
            sample.to_string(),
            json!({
                "section": level_vectors(&levels.section),
                "bar": level_vectors(&levels.bar),
                "harmony": level_vectors(&levels.harmony),
            }),
        );
    }
    samples.into()
}

#[test]
fn color_vectors_match_golden() {
    let path = golden_dir().join("colors.json");
    let got = compute();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
    }
    let expected: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(got, expected, "color vectors changed; rerun with UPDATE_GOLDEN=1 if intended");
}

#[test]
fn identical_bars_share_golden_colors() {
    // The tab sample repeats bar 1 as bar 2, bar 3 as bar 5 and bar 6 as bar 7.
    let colors = compute();
    let bar = &colors["sections_tab"]["bar"]["spectral"];
    for mode in ["mds", "cluster:0.1", "cluster:0.3", "cluster:0.6", "direct:0", "identical:0", "direct:7"] {
        let v = bar[mode].as_array().unwrap();
        for (a, b) in [(0, 1), (2, 4), (5, 6)] {
            assert_eq!(v[a], v[b], "{mode}: bars {a} and {b}");
        }
    }
}

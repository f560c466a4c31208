//! Golden files under tests/data. Set `TOMO_BLESS=1` to regenerate them.

use std::path::PathBuf;

use serde_json::Value;

use tomo::cli::format::{ExpectationFile, MatrixFile};
use tomo::cli::{cmd_metrics, RunConfig};
use tomo::fixtures;
use tomo::sim::expectations_unchecked;

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

/// Returns the golden text, writing `fresh` first when blessing.
fn golden(name: &str, fresh: &str) -> String {
    let path = data_path(name);
    if std::env::var_os("TOMO_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, fresh).unwrap();
    }
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn linear_file() -> MatrixFile {
    let mut f = MatrixFile::new(fixtures::plus_pair_linear_matrix());
    f.meta
        .push(("source".into(), "linear inversion, plus-pair state".into()));
    f
}

fn ml_file() -> MatrixFile {
    let mut f = MatrixFile::new(fixtures::plus_pair_ml_matrix());
    f.meta.push((
        "source".into(),
        "maximum likelihood, plus-pair state".into(),
    ));
    f
}

#[test]
fn matrix_goldens_match_fixtures() {
    for (name, file) in [
        ("plus_pair_linear.mat", linear_file()),
        ("plus_pair_ml.mat", ml_file()),
    ] {
        let text = golden(name, &file.format());
        let parsed = MatrixFile::parse(&text).unwrap();
        assert_eq!(parsed.matrix, file.matrix, "{name}");
        assert_eq!(parsed.format(), text, "{name} is not in canonical form");
    }
}

#[test]
fn linear_golden_first_row() {
    let text = std::fs::read_to_string(data_path("plus_pair_linear.mat")).unwrap();
    let first = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        first,
        "0.4938,0.0 0.5003,0.0014 -0.0221,-0.0551 -0.0102,0.1282"
    );
}

#[test]
fn expectation_golden() {
    let set = expectations_unchecked(&fixtures::plus_pair_linear(), 1.0).unwrap();
    let mut file = ExpectationFile::new(set.clone());
    file.meta.push((
        "source".into(),
        "Pauli expectations of the linear-inversion matrix".into(),
    ));
    let text = golden("plus_pair_linear.csv", &file.format());
    let parsed = ExpectationFile::parse(&text).unwrap();
    assert_eq!(parsed.format(), text);
    assert_eq!(parsed.set.len(), 15);
    for (p, r) in set.iter() {
        let g = parsed.set.get(p).unwrap();
        assert!((g.value - r.value).abs() <= 1e-12, "{p}");
        assert_eq!(g.sigma, 1.0);
    }
    // Tr(XI rho) = 2 Re(rho_02 + rho_13), read straight off the matrix
    assert!((parsed.set.value("XI") - 2.0 * (-0.0221 + 0.0168)).abs() < 1e-12);
    assert!((parsed.set.value("IX") - 2.0 * (0.5003 + 0.0030)).abs() < 1e-12);
}

fn assert_json_close(path: &str, golden: &Value, fresh: &Value) {
    match (golden, fresh) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!(
                (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                "{path}: {a} vs {b}"
            );
        }
        (Value::Object(a), Value::Object(b)) => {
            let ka: Vec<_> = a.keys().collect();
            let kb: Vec<_> = b.keys().collect();
            assert_eq!(ka, kb, "{path}");
            for (k, v) in a {
                assert_json_close(&format!("{path}.{k}"), v, &b[k]);
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{path}");
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                assert_json_close(&format!("{path}[{i}]"), x, y);
            }
        }
        _ => assert_eq!(golden, fresh, "{path}"),
    }
}

#[test]
fn metrics_report_golden() {
    let cfg = RunConfig {
        target: Some("plus-pair".into()),
        ..RunConfig::new("metrics")
    };
    let report = cmd_metrics(&fixtures::plus_pair_linear_matrix(), &cfg)
        .unwrap()
        .to_json();
    let text = golden("plus_pair_linear.report.json", &report);

    // key order is part of the format, so compare the raw key sequence too
    let keys = |s: &str| -> Vec<String> {
        s.lines()
            .filter_map(|l| l.trim_start().strip_prefix('"'))
            .filter_map(|l| l.split_once("\":").map(|(k, _)| k.to_string()))
            .collect()
    };
    assert_eq!(keys(&text), keys(&report));

    let g: Value = serde_json::from_str(&text).unwrap();
    let f: Value = serde_json::from_str(&report).unwrap();
    assert_json_close("$", &g, &f);
    assert_eq!(g["physical"], Value::Bool(false));
    assert!((g["purity"].as_f64().unwrap() - 1.0944).abs() < 1e-3);
}

//! End-to-end tests of the `vwqc` binary: round trips, exit codes, file
//! outputs and reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vwqc"))
}

fn iris() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/iris.csv")
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

#[test]
fn train_predict_round_trip_on_iris() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("iris.model.json");
    let preds = dir.path().join("preds.csv");

    run_ok(bin()
        .args(["--seed", "3", "train", "--data"])
        .arg(iris())
        .arg("--output")
        .arg(&model));
    assert!(model.exists());
    assert!(dir.path().join("iris.model.json.meta.json").exists());

    run_ok(bin()
        .args(["predict", "--model"])
        .arg(&model)
        .arg("--data")
        .arg(iris())
        .arg("--output")
        .arg(&preds));
    let text = std::fs::read_to_string(&preds).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "row,predicted,actual");
    assert_eq!(lines.len(), 151);
    // In-sample Iris predictions are almost entirely correct.
    let correct = lines[1..]
        .iter()
        .filter(|l| {
            let mut parts = l.split(',').skip(1);
            parts.next() == parts.next()
        })
        .count();
    assert!(correct >= 140, "only {correct}/150 correct");
}

#[test]
fn training_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        run_ok(bin()
            .args(["--seed", "11", "train", "--data"])
            .arg(iris())
            .arg("--output")
            .arg(path));
    }
    assert_eq!(
        std::fs::read_to_string(&a).unwrap(),
        std::fs::read_to_string(&b).unwrap()
    );
}

#[test]
fn label_column_name_without_header_is_usage_error() {
    let status = bin()
        .args(["train", "--no-header", "--label-column", "species", "--data"])
        .arg(iris())
        .args(["--output", "/tmp/never-written.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn missing_required_flag_is_usage_error() {
    let status = bin().arg("train").status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn missing_model_file_is_runtime_error() {
    let status = bin()
        .args(["predict", "--model", "/nonexistent/model.json", "--data"])
        .arg(iris())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn simulate_writes_pair_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("cell");
    run_ok(bin()
        .args(["--seed", "5", "simulate", "--scenario", "exp"])
        .args(["--n", "40", "--p", "3", "--output-prefix"])
        .arg(&prefix));
    let train = std::fs::read_to_string(dir.path().join("cell_train.csv")).unwrap();
    let test = std::fs::read_to_string(dir.path().join("cell_test.csv")).unwrap();
    assert_eq!(train.lines().count(), 41);
    assert_eq!(test.lines().count(), 41);
    assert_ne!(train, test);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cell.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["scenario"]["copula"], "gaussian");
    assert_eq!(meta["seed"], 5);
}

#[test]
fn benchmark_grid_cross_product_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(
        &grid,
        r#"{"scenarios":["exp","t3"],"n":[40],"p":[3],"relevant_fractions":[1.0],"correlated":[false,true]}"#,
    )
    .unwrap();
    let first = dir.path().join("rec1.csv");
    let second = dir.path().join("rec2.csv");
    for path in [&first, &second] {
        run_ok(bin()
            .args(["--seed", "8", "benchmark", "--grid"])
            .arg(&grid)
            .args(["--replications", "2", "--classifiers", "vwqc,median", "--output"])
            .arg(path));
    }
    let text = std::fs::read_to_string(&first).unwrap();
    // 4 cells x 2 replications x 2 classifiers + header.
    assert_eq!(text.lines().count(), 17);
    assert_eq!(text, std::fs::read_to_string(&second).unwrap());
}

#[test]
fn fit_al_reports_parameters_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sample.txt");
    // Symmetric two-sided sample around zero.
    let values: Vec<String> = (1..=50)
        .flat_map(|i| [i as f64 * 0.01, -(i as f64) * 0.01])
        .map(|v| v.to_string())
        .collect();
    std::fs::write(&data, values.join("\n")).unwrap();
    let output = run_ok(bin().args(["fit-al", "--data"]).arg(&data));
    let parsed: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let theta = parsed["theta"].as_f64().unwrap();
    let lambda = parsed["lambda"].as_f64().unwrap();
    assert!(theta > 0.0 && theta < 1.0);
    assert!(lambda > 0.0);
    // Uniform-like data has compact support, so the fitted quantile may
    // sit anywhere in the sample range, including near an endpoint.
    assert!(parsed["q"].as_f64().unwrap().abs() <= 0.5);
}

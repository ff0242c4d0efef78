use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn xicor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xicor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {v}"))
}

/// 40 rows where `y` increases with every covariate, up to small jitter.
fn dataset(d: usize) -> String {
    let mut s = String::new();
    for i in 0..40 {
        let t = i as f64 / 40.0;
        let cols: Vec<String> = (0..d)
            .map(|k| format!("{}", t + ((i * 7 + k * 13) % 40) as f64 / 4000.0))
            .collect();
        let y = t + 0.05 * ((i * 31 % 17) as f64 / 17.0);
        s.push_str(&format!("{},{y:e}\n", cols.join(",")));
    }
    s
}

#[test]
fn estimate_reports_the_documented_fields() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "line.csv", "1,1\n2,2\n3,3\n");
    let v = json(&xicor(&["estimate", "--input", &path]));
    assert_eq!(num(&v, "coefficient"), 0.25);
    assert_eq!(v["estimator_kind"], "right_nn");
    assert_eq!(v["n"], 3);
    assert_eq!(v["d"], 1);
    assert_eq!(v["ties_flag"], false);
    for key in ["variance_est", "variance_clamped", "stderr"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn two_points_with_nn_give_minus_one() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "two.csv", "1,1\n2,2\n");
    let v = json(&xicor(&["estimate", "--input", &path, "--kind", "nn"]));
    assert_eq!(num(&v, "coefficient"), -1.0);
    assert!(v["variance_est"].is_null());
}

#[test]
fn header_and_scientific_notation() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "x,y\n1e0,1\n2.0,2E0\n3,3\n");
    let v = json(&xicor(&["estimate", "--input", &a, "--header"]));
    assert_eq!(num(&v, "coefficient"), 0.25);
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    for (name, body) in [
        ("nan.csv", "1,1\nNaN,2\n3,3\n"),
        ("text.csv", "1,1\nabc,2\n"),
        ("ragged.csv", "1,1\n2,2,2\n"),
        ("one_col.csv", "1\n2\n"),
        ("empty.csv", ""),
    ] {
        let path = write(&dir, name, body);
        let out = xicor(&["estimate", "--input", &path]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(out.stdout.is_empty(), "{name}");
        assert!(!out.stderr.is_empty(), "{name}");
    }
    let out = xicor(&["estimate", "--input", "/nonexistent/file.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn too_few_points_exit_3() {
    let dir = TempDir::new().unwrap();
    let one = write(&dir, "one.csv", "1,1\n");
    assert_eq!(xicor(&["estimate", "--input", &one]).status.code(), Some(3));
    let three = write(&dir, "three.csv", "1,1\n2,2\n3,3\n");
    let out = xicor(&["ci", "--input", &three, "--kind", "nn"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn invalid_test_parameters_exit_4() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "d.csv", &dataset(1));
    let out = xicor(&["test", "--input", &path, "--kappa", "1.2"]);
    assert_eq!(out.status.code(), Some(4));
    let out = xicor(&["ci", "--input", &path, "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn interval_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "d.csv", &dataset(1));
    let v = json(&xicor(&["ci", "--input", &path, "--alpha", "0.05"]));
    let var = num(&v, "variance_est").max(0.0);
    let ci = xicor_core::confidence_interval(num(&v, "coefficient"), var, 40, 0.05, 1).unwrap();
    assert_eq!(num(&v, "lower"), ci.lower);
    assert_eq!(num(&v, "upper"), ci.upper);
    assert_eq!(num(&v, "level"), 0.95);
    assert_eq!(v["target_note"], "xi");
}

#[test]
fn multivariate_interval_targets_the_mean() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "d3.csv", &dataset(3));
    let v = json(&xicor(&["ci", "--input", &path]));
    assert_eq!(v["target_note"], "E[xi_n]");
    assert_eq!(v["estimator_kind"], "nn");
}

#[test]
fn threshold_test_reports_decision() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "d.csv", &dataset(1));
    let v = json(&xicor(&["test", "--input", &path, "--kappa", "-0.5"]));
    assert_eq!(v["reject"], true);
    assert_eq!(num(&v, "kappa"), -0.5);
    assert!(num(&v, "threshold") >= -0.5);
}

#[test]
fn csv_output_has_one_header_and_one_row() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "line.csv", "1,1\n2,2\n3,3\n");
    let out = xicor(&["estimate", "--input", &path, "--output", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("n,d,estimator_kind,coefficient"));
}

#[test]
fn constants_table() {
    let v = json(&xicor(&["constants", "--d", "1"]));
    let row = &v[0];
    assert!((num(row, "q_d") - 0.666_667).abs() < 1e-6);
    assert!((num(row, "o_d") - 0.5).abs() < 1e-6);
    assert!((num(row, "null_variance") - 1.066_667).abs() < 1e-6);

    let v = json(&xicor(&["constants", "--d", "1", "--kind", "right-nn"]));
    assert_eq!(num(&v[0], "null_variance"), 0.4);

    let v = json(&xicor(&["constants", "--d", "1-3", "--samples", "20000"]));
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert_eq!(xicor(&["constants", "--d", "0"]).status.code(), Some(2));
    assert_eq!(
        xicor(&["constants", "--d", "2", "--kind", "right-nn"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_is_byte_identical() {
    let args = [
        "simulate",
        "--model",
        "independent_uniform",
        "--n",
        "500",
        "--reps",
        "200",
        "--seed",
        "1",
    ];
    let a = xicor(&args);
    let b = xicor(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["replicates"].as_array().unwrap().len(), 200);
    assert_eq!(v["config"]["n"], 500);
}

#[test]
fn dumped_sample_reproduces_recorded_coefficient() {
    let dir = TempDir::new().unwrap();
    let dump = dir.path().join("sample.csv");
    let dump = dump.to_str().unwrap();
    for (model, extra) in [
        ("gaussian_copula", vec!["--rho", "0.4"]),
        (
            "sphere_manifold",
            vec!["--d", "3", "--link", "cubic", "--sigma-e", "0.2"],
        ),
    ] {
        let mut args = vec![
            "simulate",
            "--model",
            model,
            "--n",
            "300",
            "--reps",
            "4",
            "--seed",
            "77",
            "--dump-sample",
            dump,
        ];
        args.extend(extra);
        let sim = json(&xicor(&args));
        let est = json(&xicor(&["estimate", "--input", dump, "--header"]));
        assert_eq!(
            est["coefficient"], sim["replicates"][0]["coefficient"],
            "{model}"
        );
        assert_eq!(
            est["variance_est"], sim["replicates"][0]["variance_est"],
            "{model}"
        );
    }
}

#[test]
fn simulate_reads_a_config_file_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "exp.toml",
        "experiment = \"coverage\"\nfamily = \"gaussian_copula\"\nrho = 0.5\nn = 200\nreps = 20\nseed = 3\n",
    );
    let v = json(&xicor(&["simulate", "--config", &cfg]));
    assert!(v["summary"]["coverage"].is_number());
    assert_eq!(v["config"]["alpha"].as_f64(), Some(0.05));
    let v = json(&xicor(&[
        "simulate", "--config", &cfg, "--n", "100", "--alpha", "0.1",
    ]));
    assert_eq!(v["config"]["n"], 100);
    assert_eq!(v["config"]["alpha"].as_f64(), Some(0.1));
}

#[test]
fn simulate_parameter_errors_exit_2() {
    let bad: [&[&str]; 4] = [
        &[
            "simulate",
            "--model",
            "gaussian_copula",
            "--rho",
            "1.5",
            "--n",
            "100",
            "--reps",
            "5",
        ],
        &["simulate", "--model", "noisy_function", "--n", "100"],
        &["simulate", "--model", "unknown", "--n", "100"],
        &[
            "simulate",
            "--model",
            "exact_function",
            "--link",
            "cubic",
            "--n",
            "100",
            "--experiment",
            "coverage",
        ],
    ];
    for args in bad {
        assert_eq!(xicor(args).status.code(), Some(2), "{args:?}");
    }
    let missing = Path::new("/nonexistent.toml").to_str().unwrap();
    assert_eq!(
        xicor(&["simulate", "--config", missing]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_csv_lists_replicates() {
    let out = xicor(&[
        "simulate",
        "--model",
        "independent_uniform",
        "--n",
        "50",
        "--reps",
        "5",
        "--output",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("rep,coefficient,variance_est"));
}

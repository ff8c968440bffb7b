use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spherequant::io::{load_potential, read_sample, SampleFormat};
use spherequant::solver::{fit, SolverConfig};

const FAST: &[&str] = &["--band-limit", "6", "--n-iters", "300", "--n-uniform", "256", "--epsilon", "0.3"];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spherequant"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn with_fast<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(FAST).copied().collect()
}

/// Simulates, fits and runs every analytic into `dir`.
fn pipeline(dir: &Path) {
    let out = dir.to_str().unwrap();
    let sample = dir.join("sample.csv");
    let sample = sample.to_str().unwrap();
    ok(&["simulate", "--output", out, "--n", "80", "--kappa", "8", "--mean", "0,1,0", "--seed", "3"]);
    for cmd in ["fit", "map", "contours", "signs", "depth", "scale-curve"] {
        let mut args = with_fast(&[cmd, "--input", sample, "--output", out, "--seed", "3"]);
        args.extend(["--n-points", "12", "--n-signs", "3", "--sign-points", "10", "--n-eval", "300", "--tau", "0.25,0.5"]);
        ok(&args);
    }
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path());
    let read = |name: &str| fs::read_to_string(dir.path().join(name)).unwrap();

    let sample = read_sample(fs::File::open(dir.path().join("sample.csv")).unwrap(), SampleFormat::Xyz).unwrap();
    assert_eq!(sample.len(), 80);
    assert!(load_potential(&dir.path().join("potential.csv")).is_ok());
    assert!(read("potential.json").contains("objective_trace"));

    let map = read("map.csv");
    assert!(map.starts_with("qx,qy,qz\n"));
    assert_eq!(map.lines().count(), 81);

    let contours: serde_json::Value = serde_json::from_str(&read("contours.json")).unwrap();
    assert_eq!(contours.as_array().unwrap().len(), 2);
    assert_eq!(contours[1]["tau"], 0.5);
    assert_eq!(contours[0]["points"].as_array().unwrap().len(), 12);

    let signs: serde_json::Value = serde_json::from_str(&read("signs.json")).unwrap();
    assert_eq!(signs.as_array().unwrap().len(), 3);
    assert!(signs[0]["sign"].is_array());

    let depth = read("depth.csv");
    assert!(depth.starts_with("x,y,z,depth\n"));
    for line in depth.lines().skip(1) {
        let d: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&d));
    }

    let curve = read("scale_curve.csv");
    let volumes: Vec<f64> = curve.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(volumes.len(), 20);
    assert!(volumes.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*volumes.last().unwrap(), 1.0);
}

#[test]
fn runs_are_byte_reproducible_and_leave_inputs_alone() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    let sample_before = fs::read(a.path().join("sample.csv")).unwrap();
    pipeline(b.path());
    for name in ["sample.csv", "potential.csv", "potential.json", "map.csv", "contours.json", "signs.json", "depth.csv", "scale_curve.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    assert_eq!(fs::read(a.path().join("sample.csv")).unwrap(), sample_before);
}

#[test]
fn persisted_potential_matches_in_process_fit() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path());
    let sample = read_sample(fs::File::open(dir.path().join("sample.csv")).unwrap(), SampleFormat::Auto).unwrap();
    let config = SolverConfig {
        epsilon: 0.3,
        band_limit: 6,
        n_iters: 300,
        seed: 3,
        ..SolverConfig::default()
    };
    let direct = fit(&sample, &config).unwrap();
    let persisted = load_potential(&dir.path().join("potential.csv")).unwrap();
    for (a, b) in direct.coeffs.as_slice().iter().zip(persisted.coeffs.as_slice()) {
        assert!((a - b).abs() <= 1e-15);
    }
    assert_eq!(direct.objective_trace, persisted.objective_trace);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("# synthetic data\nn = 12\nlaw = uniform\nseed = 1\noutput = {}\n", dir.path().display())).unwrap();
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--n", "5"]);
    let sample = fs::read_to_string(dir.path().join("sample.csv")).unwrap();
    assert_eq!(sample.lines().count(), 6);
}

#[test]
fn lonlat_input_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("points.csv");
    let rows: String = (0..30).map(|i| format!("{},{}\n", 12 * i, 40 + i % 7)).collect();
    fs::write(&input, format!("lon_deg,lat_deg\n{rows}")).unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&with_fast(&["fit", "--input", input.to_str().unwrap(), "--output", out, "--format", "lonlat"]));
    let wrong = run(&with_fast(&["fit", "--input", input.to_str().unwrap(), "--output", out, "--format", "xyz"]));
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn validation_failures_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x,y,z\n0,0,1\n0,0,1.5\n").unwrap();

    let res = run(&with_fast(&["fit", "--input", bad.to_str().unwrap(), "--output", out]));
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));

    for args in [
        vec!["simulate", "--output", out, "--epsilon", "-1"],
        vec!["simulate", "--output", out, "--tau", "0.2,2"],
        vec!["fit", "--output", out],
        vec!["map", "--input", bad.to_str().unwrap(), "--output", out],
        vec!["simulate", "--config", "/nonexistent/run.cfg"],
        vec!["simulate", "--bogus-flag", "1"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
    assert!(!dir.path().join("potential.csv").exists());
}

#[test]
fn mse_experiment_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        ok(&with_fast(&[
            "experiment-mse",
            "--output",
            dir.path().to_str().unwrap(),
            "--n",
            "40",
            "--repeats",
            "2",
            "--eps-grid",
            "0.3,0.6",
            "--seed",
            "5",
        ]));
    }
    let text = fs::read_to_string(a.path().join("mse.csv")).unwrap();
    let keys: Vec<String> = text.lines().map(|l| l.rsplitn(2, ',').nth(1).unwrap().to_string()).collect();
    assert_eq!(
        keys,
        ["epsilon,repeat", "2.9999999999999999e-1,0", "2.9999999999999999e-1,1", "5.9999999999999998e-1,0", "5.9999999999999998e-1,1"]
    );
    assert_eq!(fs::read(a.path().join("mse.csv")).unwrap(), fs::read(b.path().join("mse.csv")).unwrap());
}

#[test]
fn outlier_experiment_emits_one_curve_per_count() {
    let dir = tempfile::tempdir().unwrap();
    ok(&with_fast(&[
        "experiment-outliers",
        "--output",
        dir.path().to_str().unwrap(),
        "--n",
        "60",
        "--outlier-counts",
        "2,6",
        "--alphas",
        "0.5,1",
        "--n-eval",
        "200",
    ]));
    let text = fs::read_to_string(dir.path().join("outliers.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n_outliers,alpha,volume");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("2,") && lines[4].starts_with("6,"));
}

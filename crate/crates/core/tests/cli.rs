use std::fs;
use std::path::Path;

use coriolis_sphere::cli::commands::CliError;
use coriolis_sphere::cli::main_with_args;
use coriolis_sphere::Error;
use tempfile::TempDir;

const BASE: &str = r#"
degree = 8
mu_s = 0.05
omega = 1.0
dt = 0.01
t_end = 0.2
cadence = 2

[init]
kind = "random"
seed = 11
spectrum_slope = -1.0
amplitude = 0.2
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["coriolis-sphere"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn csv_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn run_writes_time_series_and_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("out");
    assert_eq!(run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let rows = csv_rows(&out.join("timeseries.csv"));
    // header + floor(20 / 2) + 1 samples
    assert_eq!(rows.len(), 1 + 11);
    assert!(rows[0].starts_with("t,"));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("records = 11"));
    assert!(summary.contains("t_final = 0.2"));
}

#[test]
fn zero_length_run_has_one_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("t_end = 0.2", "t_end = 0.0"));
    assert_eq!(run(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]), 0);
    assert_eq!(csv_rows(&dir.path().join("timeseries.csv")).len(), 2);
}

#[test]
fn runs_are_deterministic_and_seed_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert_eq!(run(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]), 0);
    assert_eq!(run(&["run", "--config", &cfg, "--out", b.to_str().unwrap()]), 0);
    assert_eq!(run(&["run", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "12"]), 0);
    let read = |d: &Path| fs::read(d.join("timeseries.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = write_config(dir.path(), &BASE.replace("cadence = 2", "cadence = 2\nbogus = 1"));
    assert_eq!(run(&["run", "--config", &bad, "--out", out]), 2);
    let bad = write_config(dir.path(), &BASE.replace("mu_s = 0.05", "mu_s = -1.0"));
    assert_eq!(run(&["run", "--config", &bad, "--out", out]), 2);
    assert_eq!(run(&["run", "--config", "/nonexistent/run.toml", "--out", out]), 2);
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["verify", "--degree", "2"]), 2);
    assert_eq!(run(&["rossby", "--l", "2", "--m", "0"]), 2);
    assert_eq!(run(&["sweep", "--config", &write_config(dir.path(), BASE), "--out", out]), 2);
}

#[test]
fn oversized_step_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        &BASE.replace("dt = 0.01", "dt = 0.5").replace("t_end = 0.2", "t_end = 2.0"),
    );
    assert_eq!(run(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]), 2);
}

#[test]
fn divergence_maps_to_exit_3() {
    let e: CliError = Error::Divergence { last_good_time: 1.5 }.into();
    assert_eq!(e.exit_code(), 3);
    let e: CliError = Error::StepSize { dt: 1.0, admissible: 0.1 }.into();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn verify_and_rossby_succeed() {
    assert_eq!(run(&["verify", "--degree", "6"]), 0);
    assert_eq!(run(&["verify", "--degree", "6", "--flip-christoffel"]), 1);
    assert_eq!(run(&["rossby", "--l", "2", "--m", "-1", "--t-end", "5"]), 0);
}

#[test]
fn help_exits_0() {
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn one_cell_sweep_matches_run() {
    let dir = TempDir::new().unwrap();
    let text = format!("{BASE}\n[sweep]\nomega = [1.0]\nmu_s = [0.05]\n");
    let cfg = write_config(dir.path(), &text);
    let sweep_out = dir.path().join("sweep");
    let run_out = dir.path().join("run");
    assert_eq!(run(&["sweep", "--config", &cfg, "--out", sweep_out.to_str().unwrap()]), 0);
    assert_eq!(run(&["run", "--config", &cfg, "--out", run_out.to_str().unwrap()]), 0);
    let cell = fs::read(sweep_out.join("timeseries_omega_1_mu_s_0.05.csv")).unwrap();
    assert_eq!(cell, fs::read(run_out.join("timeseries.csv")).unwrap());
}

#[test]
fn sweep_grid_is_sorted_and_shares_zonal_projection() {
    let dir = TempDir::new().unwrap();
    let text = format!("{BASE}\n[sweep]\nomega = [2.0, 0.0]\nmu_s = [0.1, 0.02]\n");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("sweep");
    assert_eq!(run(&["--threads", "2", "sweep", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let rows = csv_rows(&out.join("sweep_summary.csv"));
    assert_eq!(rows.len(), 5);
    let keys: Vec<(f64, f64)> = rows[1..]
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            assert_eq!(f[2], "ok");
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(keys, vec![(0.0, 0.02), (0.0, 0.1), (2.0, 0.02), (2.0, 0.1)]);

    // c_z depends on neither omega nor mu_s
    let c_z: Vec<&str> = rows[1..].iter().map(|r| r.split(',').nth(3).unwrap()).collect();
    let first: f64 = c_z[0].parse().unwrap();
    for v in &c_z {
        assert!((v.parse::<f64>().unwrap() - first).abs() <= 1e-14);
    }
    for (o, m) in keys {
        let name = coriolis_sphere::cli::commands::sweep_file_name(o, m);
        assert!(out.join(name).exists());
    }
}

use std::path::Path;
use std::process::{Command, Output};

const DEVICE: &str = r#"
[device]
omega_a_ghz = 3.5
omega_b_ghz = 6.5
delta_a_ghz = -0.3
delta_b_ghz = 0.7
g_mhz = 50.0
g_ab_mhz = 5.0
gamma_us = 10.0
eta_us = 20.0
"#;

fn crosskerr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crosskerr"))
        .args(args)
        .env_remove("CROSSKERR_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, format!("{DEVICE}{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn missing_config_exits_with_one() {
    let out = crosskerr(&["params", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn unknown_key_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "\n[numerics]\ndim_c = 3\n");
    let out = crosskerr(&["params", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dim_c"));
}

#[test]
fn params_prints_solved_gate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = crosskerr(&["params", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("342.9"), "{text}");
}

#[test]
fn gate_sweep_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "\n[sweep]\ndelta_b_ghz = [0.6, 0.7, 0.8]\n");
    let mut csvs = Vec::new();
    for (i, workers) in ["1", "1", "3"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let out = crosskerr(&[
            "gate-sweep",
            "--config",
            &cfg,
            "--out",
            out_dir.to_str().unwrap(),
            "--workers",
            workers,
            "--plot",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join("gate_sweep.json").exists());
        assert!(out_dir.join("gate_sweep.svg").exists());
        csvs.push(std::fs::read(out_dir.join("gate_sweep.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("delta_b_ghz,mu_mhz,"));
    assert!(lines.iter().skip(1).all(|l| l.ends_with(",ok")));
}

#[test]
fn coarse_dt_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "\n[sweep]\ndelta_b_ghz = [0.7]\n");
    let out_dir = dir.path().join("out");
    let out = crosskerr(&["gate-sweep", "--config", &cfg, "--dt", "5", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

//! End-to-end checks of the installed binary: exit codes, artifact
//! determinism, and the documented CSV shapes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn enaqt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enaqt"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn sweep_is_bit_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--gamma-grid",
        "1e-2:1e2:7",
        "--horizon",
        "5",
        "--plateau-window",
        "1",
    ];
    let run = |name: &str, threads: Option<&str>| {
        let mut full: Vec<&str> = args.to_vec();
        full.push("--output");
        full.push(name);
        if let Some(t) = threads {
            full.push("--threads");
            full.push(t);
        }
        let out = enaqt(&full, dir.path());
        assert_exit(&out, 0);
        fs::read(dir.path().join(name)).unwrap()
    };
    let a = run("a.csv", None);
    let b = run("b.csv", None);
    let c = run("c.csv", Some("1"));
    assert_eq!(a, b, "identical invocations must match byte for byte");
    assert_eq!(a, c, "thread count must not change the artifact");
    assert!(a.starts_with(b"gamma_ps1,eta,phi_lqu,t_star_ps,plateau_found\n"));
}

#[test]
fn evolve_produces_monotone_absorbing_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = enaqt(
        &[
            "evolve",
            "--gamma",
            "12.07",
            "--t-end",
            "20",
            "--dt",
            "0.01",
            "--observables",
            "populations,lqu",
            "--output",
            "traj.csv",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let text = fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t_ps,p_g,p1,p2,p3,p_rc,lqu");
    let mut prev_rc = -1.0;
    let mut prev_g = -1.0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 7);
        assert!(cols[1] >= prev_g - 1e-9, "p_g not monotone");
        assert!(cols[5] >= prev_rc - 1e-9, "p_rc not monotone");
        prev_g = cols[1];
        prev_rc = cols[5];
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("summary JSON on stdout");
    assert_eq!(summary["rows"], 2001);
    assert!(summary["version"].as_str().is_some());
}

#[test]
fn closed_system_run_conserves_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = enaqt(
        &[
            "evolve",
            "--gamma",
            "0",
            "--dissipation",
            "0",
            "--sink-rate",
            "0",
            "--t-end",
            "5",
            "--dt",
            "0.01",
            "--output",
            "unitary.csv",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let text = fs::read_to_string(dir.path().join("unitary.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let total: f64 = cols[1..=5].iter().sum();
        assert!((total - 1.0).abs() < 1e-8, "trace drifted: {total}");
        assert!(cols[1].abs() < 1e-12 && cols[5].abs() < 1e-12);
    }
}

#[test]
fn validation_problems_exit_2() {
    let dir = tempfile::tempdir().unwrap();

    // Unknown config key.
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{
            "energies_cm1": [0.0, 0.0],
            "couplings_cm1": [[0.0, 1.0], [1.0, 0.0]],
            "dissipation_ps1": 0.0,
            "sink_site": 1,
            "sink_rate_ps1": 1.0,
            "coupling_strength": 7
        }"#,
    )
    .unwrap();
    let out = enaqt(
        &["efficiency", "--config", cfg.to_str().unwrap(), "--gamma", "1"],
        dir.path(),
    );
    assert_exit(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("coupling_strength"), "stderr: {stderr}");

    // Unknown flag (rejected by the parser).
    let out = enaqt(&["efficiency", "--gamma", "1", "--frobnicate"], dir.path());
    assert_exit(&out, 2);

    // Missing required experiment knob.
    let out = enaqt(&["efficiency"], dir.path());
    assert_exit(&out, 2);

    // Malformed inline state, diagnostic names the position.
    let out = enaqt(
        &["lqu", "--state", "[[0.5, \"oops\"], [0, 0.5]]"],
        dir.path(),
    );
    assert_exit(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 1, column 2"), "stderr: {stderr}");
}

#[test]
fn numerical_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // No absorbing channel: the direct solve hits a singular generator.
    let out = enaqt(
        &[
            "efficiency",
            "--gamma",
            "0",
            "--dissipation",
            "0",
            "--sink-rate",
            "0",
            "--method",
            "direct",
        ],
        dir.path(),
    );
    assert_exit(&out, 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("integration"), "stderr: {stderr}");
}

#[test]
fn lqu_subcommand_reports_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let state = "[[0.5, [0, -0.5], 0], [[0, 0.5], 0.5, 0], [0, 0, 0]]";
    let single = enaqt(&["lqu", "--state", state], dir.path());
    assert_exit(&single, 0);
    let general = enaqt(
        &["lqu", "--state", state, "--method", "general"],
        dir.path(),
    );
    assert_exit(&general, 0);
    let s: serde_json::Value = serde_json::from_slice(&single.stdout).unwrap();
    let g: serde_json::Value = serde_json::from_slice(&general.stdout).unwrap();
    let vs = s["value"].as_f64().unwrap();
    let vg = g["value"].as_f64().unwrap();
    assert!((vs - vg).abs() < 1e-10, "single {vs} vs general {vg}");
    assert!(s["w_matrix"][2][2].as_f64().is_some());
}

#[test]
fn sweep_writes_trajectory_files_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = enaqt(
        &[
            "sweep",
            "--gamma-grid",
            "1e-1:1e1:3",
            "--horizon",
            "2",
            "--plateau-window",
            "0.5",
            "--trajectory-gammas",
            "0.5,2.0",
            "--trajectories-dir",
            "trajs",
            "--output",
            "sweep.csv",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let files = summary["trajectory_files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    for f in files {
        let path = dir.path().join(f.as_str().unwrap());
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t_ps,p_g,p1,p2,p3,p_rc,lqu"));
    }
}

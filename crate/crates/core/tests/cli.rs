use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qrvdp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrvdp")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn assert_ok(output: &Output) {
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn presets_list_names_every_preset() {
    let output = Command::new(env!("CARGO_BIN_EXE_qrvdp")).arg("presets-list").output().unwrap();
    assert_ok(&output);
    let text = String::from_utf8(output.stdout).unwrap();
    assert_eq!(text.lines().count(), 35);
    assert!(text.lines().any(|l| l == "fig2b\tdim=11"));
}

#[test]
fn evolve_applies_overrides_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let output = qrvdp(
        &[
            "evolve",
            "--preset",
            "fig2b",
            "--override",
            "evolve.t_final=3.0",
            "--override",
            "evolve.snapshot_times=[1.0,2.0]",
        ],
        dir.path(),
    );
    assert_ok(&output);
    let cfg = json(&dir.path().join("config.json"));
    assert_eq!(cfg["evolve"]["t_final"], 3.0);
    let summary = json(&dir.path().join("summary.json"));
    assert!((summary["t_final"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!(summary["max_trace_drift"].as_f64().unwrap() < 1e-8);
    assert_eq!(summary["snapshots"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("snapshot_0001.bin").exists());
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,trace,n,re_a,im_a,s_q"));
}

#[test]
fn malformed_config_exits_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 4, \"params\": {}}").unwrap();
    let output = qrvdp(&["evolve", "--config", bad.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.starts_with("error:") && stderr.contains("bad.json"), "{stderr}");

    let output = qrvdp(&["evolve", "--preset", "no-such-set"], dir.path());
    assert_eq!(output.status.code(), Some(2));
    let output = qrvdp(&["evolve", "--preset", "fig2b", "--override", "params.bogus=1"], dir.path());
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn wigner_of_vacuum_is_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let output = qrvdp(
        &[
            "wigner",
            "--preset",
            "fig2b",
            "--override",
            "initial={\"kind\":\"fock\",\"n\":0}",
            "--override",
            "dim=4",
            "--time",
            "1e-9",
        ],
        dir.path(),
    );
    assert_ok(&output);
    let summary = json(&dir.path().join("wigner.json"));
    assert!((summary["norm_estimate"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!(dir.path().join("wigner.dat").exists() && dir.path().join("limit_cycle.csv").exists());
}

#[test]
fn classical_amplitude_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&qrvdp(&["classical", "--preset", "transition-RvdP-eps0.1"], dir.path()));
    let report = json(&dir.path().join("classical.json"));
    assert!((report["analytic_amplitude"].as_f64().unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert!(report["relative_difference"].as_f64().unwrap().abs() < 0.05);
}

#[test]
fn perturb_writes_susceptibility() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&qrvdp(&["perturb", "--preset", "fig2b", "--override", "params.omega_d=1.05"], dir.path()));
    let summary = json(&dir.path().join("first_order.json"));
    assert!(summary["max_off_band"].as_f64().unwrap() < 1e-10);
    assert!(dir.path().join("first_order.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["evolve", "--preset", "fig2a", "--override", "evolve.t_final=2.0"];
    assert_ok(&qrvdp(&args, a.path()));
    assert_ok(&qrvdp(&args, b.path()));
    for file in ["trajectory.csv", "summary.json", "config.json"] {
        assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn small_spectrum_run() {
    let dir = tempfile::tempdir().unwrap();
    let output = qrvdp(
        &[
            "spectrum",
            "--preset",
            "fig7-quantum-RvdP",
            "--override",
            "params.omega_drive=0.0",
            "--override",
            "spectrum.correlation.tau=50.0",
            "--override",
            "spectrum.correlation.t_max=200.0",
        ],
        dir.path(),
    );
    assert_ok(&output);
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "# tau=50"));
    let mut body = csv.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(body.next(), Some("omega,s_p"));
    assert!(body.count() > 100);
    assert!(dir.path().join("correlation.csv").exists());
}

#[test]
fn small_sweep_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--preset",
        "fig2b",
        "--override",
        "sweep.delta_axis=[-0.1,0.1]",
        "--override",
        "sweep.omega_axis=[0.0,0.2]",
        "--workers",
        "2",
    ];
    assert_ok(&qrvdp(&args, dir.path()));
    let first = std::fs::read(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 5);
    let metrics = json(&dir.path().join("metrics.json"));
    assert!(metrics["mirror_residual"].as_f64().unwrap() < 1e-6);

    let mut resumed: Vec<&str> = args.to_vec();
    resumed.push("--resume");
    assert_ok(&qrvdp(&resumed, dir.path()));
    assert_eq!(std::fs::read(dir.path().join("sweep.csv")).unwrap(), first);
}

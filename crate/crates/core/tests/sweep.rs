use qrvdp::params::{table_entry, GainSetting};
use qrvdp::sweep::{axis, load_checkpoint, run_sweep, tongue_metrics, SweepObservable, SweepOptions, SweepSpec};
use qrvdp::Error;

fn small_spec() -> SweepSpec {
    let mut spec = SweepSpec::with_default_grid(table_entry('m').unwrap().params(GainSetting::Eps0p1), 11);
    spec.delta_axis = axis(-0.2, 0.2, 3);
    spec.omega_axis = axis(0.0, 0.3, 3);
    spec
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let spec = small_spec();
    let serial = run_sweep(&spec, &SweepOptions::default()).unwrap();
    let parallel = run_sweep(&spec, &SweepOptions { workers: 3, ..Default::default() }).unwrap();
    assert_eq!(serial, parallel);
    assert!(serial.failed().is_empty());
}

#[test]
fn interrupted_sweep_resumes_to_identical_result() {
    let spec = small_spec();
    let dir = tempfile::tempdir().unwrap();
    let checkpoint = dir.path().join("checkpoint.json");
    let partial = SweepOptions {
        checkpoint: Some(checkpoint.clone()),
        checkpoint_every: 2,
        stop_after: Some(4),
        ..Default::default()
    };
    match run_sweep(&spec, &partial) {
        Err(Error::PartialResult { failed }) => assert_eq!(failed.len(), 5),
        other => panic!("expected a partial result, got {other:?}"),
    }
    assert_eq!(load_checkpoint(&checkpoint, &spec).unwrap().len(), 4);
    let resumed = SweepOptions { stop_after: None, workers: 2, ..partial };
    let finished = run_sweep(&spec, &resumed).unwrap();
    assert_eq!(finished, run_sweep(&spec, &SweepOptions::default()).unwrap());
}

#[test]
fn checkpoint_from_other_grid_is_rejected() {
    let spec = small_spec();
    let dir = tempfile::tempdir().unwrap();
    let checkpoint = dir.path().join("checkpoint.json");
    let options = SweepOptions { checkpoint: Some(checkpoint.clone()), stop_after: Some(1), ..Default::default() };
    let _ = run_sweep(&spec, &options);
    let mut other = spec.clone();
    other.omega_axis = axis(0.0, 0.6, 3);
    assert!(matches!(load_checkpoint(&checkpoint, &other), Err(Error::Config(_))));
}

#[test]
fn rvdp_tongue_is_mirror_symmetric_and_vanishes_without_drive() {
    let spec = small_spec();
    let result = run_sweep(&spec, &SweepOptions { workers: 2, ..Default::default() }).unwrap();
    for i in 0..3 {
        assert!(result.point(i, 0).s_q.unwrap() < 1e-6);
    }
    let metrics = tongue_metrics(&result).unwrap();
    assert!(metrics.mirror_residual < 1e-6, "mirror residual {}", metrics.mirror_residual);
    assert!(metrics.monotone_in_omega.iter().all(|&m| m));
    assert!(metrics.max_s_q > 0.1);
}

#[test]
fn deformation_and_frequency_observables() {
    let mut spec = small_spec();
    spec.delta_axis = vec![0.05];
    spec.omega_axis = vec![0.0, 0.3];
    spec.observables = vec![SweepObservable::SQ, SweepObservable::Deformation, SweepObservable::OmegaObs];
    spec.correlation.t_max = 1000.0 * std::f64::consts::PI;
    let result = run_sweep(&spec, &SweepOptions { workers: 2, ..Default::default() }).unwrap();
    assert!(result.undriven_radius.unwrap() > 0.0);
    let (undriven, driven) = (result.point(0, 0), result.point(0, 1));
    assert!(undriven.deformation.unwrap() < 0.02);
    assert!(driven.deformation.unwrap() > undriven.deformation.unwrap());
    assert!((undriven.omega_obs.unwrap() - 0.05).abs() <= 2e-3);
    assert!(undriven.number.is_none());
}

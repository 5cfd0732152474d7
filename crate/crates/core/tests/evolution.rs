use std::f64::consts::PI;

use qrvdp::config::preset;
use qrvdp::evolution::{
    detect_quasi_stationary, detect_with, evolve, run_to_quasi_stationary, steady_state_undriven, EvolutionSettings,
    InitialState, Stationarity, StationarySettings, SteadyStateStrategy, TrefPolicy,
};
use qrvdp::observables::{s_q, Observable};
use qrvdp::params::{table_entry, GainSetting};
use qrvdp::{DensityMatrix, DriveModel, Error, Frame, SystemParams, C64};

const PERIOD: f64 = 2.0 * PI;

fn settings(t_final: f64) -> EvolutionSettings {
    EvolutionSettings {
        t_final,
        record_interval: PERIOD / 64.0,
        snapshot_times: Vec::new(),
        accuracy: Default::default(),
    }
}

fn max_off_diagonal(rho: &DensityMatrix, keep: impl Fn(usize, usize) -> bool) -> f64 {
    let n = rho.dim();
    let mut worst: f64 = 0.0;
    for l in 0..n {
        for k in 0..n {
            if k != l && keep(k, l) {
                worst = worst.max(rho.get(k, l).norm());
            }
        }
    }
    worst
}

#[test]
fn quasi_stationary_onset_of_fig2_sets() {
    for name in ["fig2a", "fig2b"] {
        let cfg = preset(name).unwrap();
        let rho0 = cfg.initial.build(&cfg.params, cfg.dim).unwrap();
        let traj = evolve(&rho0, &cfg.params, cfg.drive, cfg.frame, &settings(60.0)).unwrap();
        let t_ref = detect_quasi_stationary(&traj, PERIOD, 3e-3).unwrap();
        assert!((10.0..=20.0).contains(&t_ref), "{name}: t_ref = {t_ref}");
    }
}

#[test]
fn rvdp_rwa_phase_localization_is_constant_in_the_tail() {
    let cfg = preset("fig2b").unwrap();
    let rho0 = cfg.initial.build(&cfg.params, cfg.dim).unwrap();
    let traj = evolve(&rho0, &cfg.params, cfg.drive, cfg.frame, &settings(60.0)).unwrap();
    let onset = detect_quasi_stationary(&traj, PERIOD, 1e-4).unwrap();
    assert!(onset <= 40.0, "onset {onset}");
    let mut lo = f64::INFINITY;
    for k in 0..3 {
        let start = onset + k as f64 * PERIOD;
        let window: Vec<f64> =
            traj.records.iter().filter(|r| r.t >= start && r.t < start + PERIOD).map(|r| r.s_q).collect();
        let mean = window.iter().sum::<f64>() / window.len() as f64;
        let std = (window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / window.len() as f64).sqrt();
        assert!(std < 1e-4, "period starting at {start}: std {std}");
        lo = lo.min(mean);
    }
    assert!(lo > 0.1, "driven state is phase localized");
}

#[test]
fn undriven_rvdp_coherences_decay_and_population_settles() {
    let params = table_entry('m').unwrap().params(GainSetting::Eps0p1);
    let rho0 = InitialState::default().build(&params, 11).unwrap();
    let traj = evolve(&rho0, &params, DriveModel::Rwa, Frame::Laboratory, &settings(300.0)).unwrap();
    let last = traj.records.last().unwrap();
    assert!(s_q(&traj.final_state) < 1e-8, "S_q = {}", s_q(&traj.final_state));
    assert!(last.a.norm() < 1e-8);
    let steady = steady_state_undriven(&params, Frame::Laboratory, 11, &SteadyStateStrategy::Nullspace).unwrap();
    let n_steady = qrvdp::observables::expectations(&steady).number;
    assert!((last.number - n_steady).abs() < 1e-8, "{} vs {n_steady}", last.number);
}

/// For an exponential decay A e^{−γt} of the period averages, the detector
/// passes once A γ T drops below the absolute floor.
#[test]
fn undriven_onset_matches_exponential_decay_of_coherences() {
    let params = table_entry('m').unwrap().params(GainSetting::Eps0p1);
    let rho0 = InitialState::default().build(&params, 11).unwrap();
    let traj = evolve(&rho0, &params, DriveModel::Rwa, Frame::Laboratory, &settings(400.0)).unwrap();
    let crit = Stationarity::default();
    let t_ref = detect_with(&traj, PERIOD, crit).unwrap();

    // decay rate of |Σρ_{n,n−1}| from a log-linear fit over t ∈ [40, 120]
    let pts: Vec<(f64, f64)> =
        traj.records.iter().filter(|r| (40.0..=120.0).contains(&r.t)).map(|r| (r.t, r.s_q.ln())).collect();
    let n = pts.len() as f64;
    let (mt, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope =
        pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
    let gamma = -slope;
    let amp = (my - slope * mt).exp();
    assert!(gamma > 0.0);
    // S_q average over a window falls by A γ T e^{−γt}; floor plus relative term
    // rel_tol·A e^{−γt} is the threshold, so the change passes once e^{−γt} A (γT − rel_tol) < floor
    let predicted = (amp * (gamma * PERIOD - crit.rel_tol) / crit.abs_floor).ln() / gamma;
    assert!((t_ref - predicted).abs() <= 2.0 * PERIOD, "t_ref {t_ref} vs predicted {predicted} (gamma {gamma})");
}

#[test]
fn steady_state_structure_follows_quadrature_rates() {
    for label in ['h', 'm', 'n'] {
        let p = table_entry(label).unwrap().params(GainSetting::Eps0p1);
        let dim = table_entry(label).unwrap().default_dim(GainSetting::Eps0p1);
        let rho = steady_state_undriven(&p, Frame::Laboratory, dim, &SteadyStateStrategy::Nullspace).unwrap();
        if p.is_phase_covariant() {
            assert!(max_off_diagonal(&rho, |_, _| true) < 1e-8, "set {label}");
        } else {
            assert!(max_off_diagonal(&rho, |k, l| k.abs_diff(l) % 2 == 1) < 1e-10, "set {label}");
            assert!(max_off_diagonal(&rho, |k, l| k.abs_diff(l) % 2 == 0) > 1e-4, "set {label} has even coherences");
        }
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }
}

#[test]
fn nullspace_and_integration_agree() {
    let p = table_entry('k').unwrap().params(GainSetting::Eps0p1);
    let block = steady_state_undriven(&p, Frame::Laboratory, 16, &SteadyStateStrategy::Nullspace).unwrap();
    let full = steady_state_undriven(&p, Frame::Laboratory, 16, &SteadyStateStrategy::FullNullspace).unwrap();
    let diff = (block.matrix() - full.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "block vs full {diff}");
    let strategy = SteadyStateStrategy::Integration {
        initial: DensityMatrix::vacuum(16).unwrap(),
        accuracy: Default::default(),
        tolerance: 1e-10,
    };
    let integrated = steady_state_undriven(&p, Frame::Laboratory, 16, &strategy).unwrap();
    let diff = (block.matrix() - integrated.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-6, "block vs integration {diff}");
}

#[test]
fn rotating_frame_steady_state_needs_phase_covariance() {
    let p = table_entry('k').unwrap().params(GainSetting::Eps0p1);
    let frame = Frame::Rotating { omega_r: 1.0 };
    assert!(matches!(
        steady_state_undriven(&p, frame, 16, &SteadyStateStrategy::Nullspace),
        Err(Error::UnsupportedFrame(_))
    ));
    let m = table_entry('m').unwrap().params(GainSetting::Eps0p1);
    let lab = steady_state_undriven(&m, Frame::Laboratory, 11, &SteadyStateStrategy::Nullspace).unwrap();
    let rot = steady_state_undriven(&m, frame, 11, &SteadyStateStrategy::Nullspace).unwrap();
    assert_eq!(lab, rot);
}

#[test]
fn period_average_vanishes_without_drive() {
    let p = table_entry('m').unwrap().params(GainSetting::Eps0p1);
    let rho0 = InitialState::default().build(&p, 11).unwrap();
    let run =
        run_to_quasi_stationary(&rho0, &p, DriveModel::Rwa, Frame::Laboratory, &StationarySettings::default()).unwrap();
    assert!(run.average(Observable::SQ).unwrap() < 1e-6);
    assert!(run.trajectory.max_trace_drift < 1e-8);
}

#[test]
fn last_period_policy_uses_final_period() {
    let p = SystemParams::undriven(0.0, 0.3, 0.0, 0.0, 0.0);
    let settings = StationarySettings { t_final: 20.0 * PERIOD, policy: TrefPolicy::LastPeriod, ..Default::default() };
    let run =
        run_to_quasi_stationary(&DensityMatrix::fock(3, 6).unwrap(), &p, DriveModel::Rwa, Frame::Laboratory, &settings)
            .unwrap();
    assert!((run.t_ref - 19.0 * PERIOD).abs() < 1e-9);
    assert!((run.trajectory.final_time() - 20.0 * PERIOD).abs() < 1e-9);
}

#[test]
fn frames_agree_on_invariant_observables() {
    let p = table_entry('k').unwrap().params(GainSetting::Eps0p1).with_drive(0.3).with_detuning(0.05);
    let rho0 = DensityMatrix::coherent(C64::new(0.5, 0.2), 16, 1e-8).unwrap().0;
    let lab = evolve(&rho0, &p, DriveModel::Rwa, Frame::Laboratory, &settings(15.0)).unwrap();
    let rot = evolve(&rho0, &p, DriveModel::Rwa, Frame::Rotating { omega_r: p.omega_d }, &settings(15.0)).unwrap();
    for (a, b) in lab.records.iter().zip(&rot.records) {
        assert!((a.number - b.number).abs() < 1e-7);
        assert!((a.s_q - b.s_q).abs() < 1e-7);
    }
}

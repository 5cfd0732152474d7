use std::ffi::{CStr, CString};
use std::ptr;

use qrvdp_ffi::*;

fn last_error() -> String {
    let p = qrvdp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(qrvdp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn limit_cycle_amplitude_of_rvdp_transition_set() {
    let name = CString::new("transition-RvdP-eps0.1").unwrap();
    let mut params = ptr::null_mut();
    let mut dim = 0usize;
    unsafe {
        assert_eq!(qrvdp_params_preset(name.as_ptr(), &mut params, &mut dim), QrvdpStatus::Ok);
        let mut amplitude = 0.0;
        assert_eq!(qrvdp_limit_cycle_amplitude(params, &mut amplitude), QrvdpStatus::Ok);
        assert!((amplitude - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        qrvdp_params_free(params);
    }
    assert!(dim >= 2);
}

#[test]
fn steady_state_observables() {
    unsafe {
        let mut params = ptr::null_mut();
        assert_eq!(qrvdp_params_new(0.2, 0.1, 0.8, 0.0, 0.0, 0.0, 1.0, &mut params), QrvdpStatus::Ok);
        let mut rho = ptr::null_mut();
        assert_eq!(qrvdp_steady_state(params, 12, &mut rho), QrvdpStatus::Ok);
        let (mut dim, mut sq, mut n) = (0usize, 1.0, 0.0);
        assert_eq!(qrvdp_density_dim(rho, &mut dim), QrvdpStatus::Ok);
        assert_eq!(dim, 12);
        assert_eq!(qrvdp_s_q(rho, &mut sq), QrvdpStatus::Ok);
        assert!(sq.abs() < 1e-12);
        assert_eq!(qrvdp_mean_number(rho, &mut n), QrvdpStatus::Ok);
        assert!(n > 0.0);
        let mut re = vec![0.0; dim * dim];
        let mut im = vec![0.0; dim * dim];
        assert_eq!(qrvdp_density_elements(rho, re.as_mut_ptr(), im.as_mut_ptr(), re.len()), QrvdpStatus::Ok);
        let trace: f64 = (0..dim).map(|k| re[k + k * dim]).sum();
        assert!((trace - 1.0).abs() < 1e-12);
        let (mut radius, mut phi) = (0.0, 0.0);
        assert_eq!(qrvdp_wigner_max_radius(rho, 4.0, 201, 64, &mut radius, &mut phi), QrvdpStatus::Ok);
        assert!(radius > 0.0);
        qrvdp_density_free(rho);
        qrvdp_params_free(params);
    }
}

#[test]
fn evolve_records_trajectory() {
    unsafe {
        let mut params = ptr::null_mut();
        assert_eq!(qrvdp_params_new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, &mut params), QrvdpStatus::Ok);
        let mut rho0 = ptr::null_mut();
        assert_eq!(qrvdp_density_coherent(0.5, 0.0, 10, 1e-6, &mut rho0), QrvdpStatus::Ok);
        let mut traj = ptr::null_mut();
        assert_eq!(qrvdp_evolve(params, rho0, 0, 1.0, 0.25, &mut traj), QrvdpStatus::Ok);
        let mut len = 0usize;
        assert_eq!(qrvdp_trajectory_len(traj, &mut len), QrvdpStatus::Ok);
        assert_eq!(len, 5);
        let mut rec = QrvdpRecord::default();
        assert_eq!(qrvdp_trajectory_record(traj, len - 1, &mut rec), QrvdpStatus::Ok);
        assert!((rec.t - 1.0).abs() < 1e-12);
        assert!((rec.number - 0.25).abs() < 1e-9);
        assert_eq!(qrvdp_trajectory_record(traj, len, &mut rec), QrvdpStatus::InvalidArgument);
        let mut last = ptr::null_mut();
        assert_eq!(qrvdp_trajectory_final_state(traj, &mut last), QrvdpStatus::Ok);
        qrvdp_density_free(last);
        qrvdp_trajectory_free(traj);
        qrvdp_density_free(rho0);
        qrvdp_params_free(params);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut params = ptr::null_mut();
        assert_eq!(qrvdp_params_new(-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, &mut params), QrvdpStatus::InvalidArgument);
        assert!(params.is_null());
        assert!(!last_error().is_empty());

        let mut rho = ptr::null_mut();
        assert_eq!(qrvdp_density_coherent(3.0, 0.0, 4, 1e-6, &mut rho), QrvdpStatus::Truncation);
        assert!(last_error().contains("leakage"));

        let mut value = 0.0;
        assert_eq!(qrvdp_s_q(ptr::null(), &mut value), QrvdpStatus::NullPointer);
        assert_eq!(qrvdp_density_coherent(0.1, 0.0, 4, 1e-6, ptr::null_mut()), QrvdpStatus::NullPointer);

        let name = CString::new("no-such-preset").unwrap();
        let mut dim = 0usize;
        assert_eq!(qrvdp_params_preset(name.as_ptr(), &mut params, &mut dim), QrvdpStatus::InvalidArgument);
        assert!(last_error().contains("no-such-preset"));

        let mut ok = ptr::null_mut();
        assert_eq!(qrvdp_params_new(0.2, 0.1, 0.0, 0.0, 0.0, 0.0, 1.0, &mut ok), QrvdpStatus::Ok);
        assert!(qrvdp_last_error().is_null());
        qrvdp_params_free(ok);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qrvdp.h")).unwrap();
    for symbol in [
        "qrvdp_version",
        "qrvdp_last_error",
        "qrvdp_params_new",
        "qrvdp_params_preset",
        "qrvdp_params_free",
        "qrvdp_limit_cycle_amplitude",
        "qrvdp_steady_state",
        "qrvdp_density_coherent",
        "qrvdp_density_free",
        "qrvdp_density_dim",
        "qrvdp_density_elements",
        "qrvdp_s_q",
        "qrvdp_mean_number",
        "qrvdp_wigner_max_radius",
        "qrvdp_evolve",
        "qrvdp_trajectory_free",
        "qrvdp_trajectory_len",
        "qrvdp_trajectory_record",
        "qrvdp_trajectory_final_state",
    ] {
        assert!(header.contains(&format!("{symbol}(")), "{symbol} missing from header");
    }
}

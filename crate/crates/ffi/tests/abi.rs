use std::ffi::{CStr, CString};
use std::ptr;

use magres_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(magres_last_error()) }
        .to_str()
        .unwrap()
        .to_string()
}

#[test]
fn version_matches_core() {
    let v = unsafe { CStr::from_ptr(magres_version()) };
    assert_eq!(v.to_str().unwrap(), magres::VERSION);
}

#[test]
fn retention_time_and_errors() {
    let mut t = 0.0;
    assert_eq!(unsafe { magres_retention_time(40.0, 1e-9, &mut t) }, MagresStatus::Ok);
    assert!((t - 1e-9 * 40f64.exp()).abs() <= 1e-12 * t);
    assert_eq!(
        unsafe { magres_retention_time(-1.0, 1e-9, &mut t) },
        MagresStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { magres_retention_time(40.0, 1e-9, ptr::null_mut()) },
        MagresStatus::NullPointer
    );
    assert_eq!(last_error(), "out is null");
}

#[test]
fn neuron_lifecycle() {
    let mut n = ptr::null_mut();
    assert_eq!(
        unsafe { magres_neuron_new(0.8, 20.0, 0.0, 1, &mut n) },
        MagresStatus::Ok
    );
    let mut v = 0.0;
    assert_eq!(unsafe { magres_neuron_asn(n, 0.05, &mut v) }, MagresStatus::Ok);
    assert!((v - 0.4 * 1f64.tanh()).abs() < 1e-15);
    for _ in 0..100 {
        assert_eq!(unsafe { magres_neuron_bsn(n, 0.01, &mut v) }, MagresStatus::Ok);
        assert!(v == 0.4 || v == -0.4);
    }
    assert_eq!(
        unsafe { magres_neuron_asn(n, f64::NAN, &mut v) },
        MagresStatus::InvalidArgument
    );
    unsafe { magres_neuron_free(n) };
    unsafe { magres_neuron_free(ptr::null_mut()) };

    assert_eq!(
        unsafe { magres_neuron_new(-1.0, 20.0, 0.0, 1, &mut n) },
        MagresStatus::InvalidArgument
    );
}

#[test]
fn reservoir_stepping_matches_core() {
    let toml = CString::new("n_nodes = 30\nnoise_amp = 0.0\nseed = 4\n").unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { magres_reservoir_new(toml.as_ptr(), &mut r) }, MagresStatus::Ok);
    let (mut n, mut k, mut l) = (0usize, 0usize, 0usize);
    assert_eq!(
        unsafe { magres_reservoir_dims(r, &mut n, &mut k, &mut l) },
        MagresStatus::Ok
    );
    assert_eq!((n, k, l), (30, 1, 1));
    let mut rho = 0.0;
    assert_eq!(
        unsafe { magres_reservoir_spectral_radius(r, &mut rho) },
        MagresStatus::Ok
    );
    assert!((rho - 0.9).abs() < 1e-6, "{rho}");

    let cfg = magres::config::reservoir_from_toml("n_nodes = 30\nnoise_amp = 0.0\nseed = 4\n").unwrap();
    let topo = magres::reservoir::init_topology(&cfg).unwrap();
    let mut rng = magres::RngState::new(0);
    let mut x = nalgebra::DVector::zeros(30);
    for t in 0..20 {
        let u = [(t as f64 * 0.3).sin()];
        let y = [0.1];
        assert_eq!(
            unsafe { magres_reservoir_step(r, u.as_ptr(), 1, y.as_ptr(), 1) },
            MagresStatus::Ok
        );
        x = magres::reservoir::step(
            &x,
            &nalgebra::DVector::from_column_slice(&u),
            &nalgebra::DVector::from_column_slice(&y),
            &topo,
            &cfg,
            &mut rng,
        )
        .unwrap();
    }
    let mut state = vec![0.0; 30];
    assert_eq!(
        unsafe { magres_reservoir_state(r, state.as_mut_ptr(), 30) },
        MagresStatus::Ok
    );
    assert_eq!(state.as_slice(), x.as_slice());

    let u = [0.0, 0.0];
    assert_eq!(
        unsafe { magres_reservoir_step(r, u.as_ptr(), 2, u.as_ptr(), 1) },
        MagresStatus::Dimension
    );
    assert_eq!(
        unsafe { magres_reservoir_state(r, state.as_mut_ptr(), 29) },
        MagresStatus::Dimension
    );
    assert_eq!(unsafe { magres_reservoir_reset(r) }, MagresStatus::Ok);
    assert_eq!(
        unsafe { magres_reservoir_state(r, state.as_mut_ptr(), 30) },
        MagresStatus::Ok
    );
    assert!(state.iter().all(|&v| v == 0.0));
    unsafe { magres_reservoir_free(r) };

    let bad = CString::new("n_nodes = \"many\"\n").unwrap();
    assert_eq!(
        unsafe { magres_reservoir_new(bad.as_ptr(), &mut r) },
        MagresStatus::Config
    );
    assert_eq!(
        unsafe { magres_reservoir_new(ptr::null(), &mut r) },
        MagresStatus::NullPointer
    );
}

#[test]
fn conductance_mapping() {
    let w = [1.0, -0.5, 0.0, 0.25];
    let (mut gp, mut gm, mut scale) = ([0.0; 4], [0.0; 4], 0.0);
    let st = unsafe {
        magres_weights_to_conductances(w.as_ptr(), 2, 2, 1e-3, 0, gp.as_mut_ptr(), gm.as_mut_ptr(), &mut scale)
    };
    assert_eq!(st, MagresStatus::Ok);
    assert_eq!(scale, 1e-3);
    for i in 0..4 {
        assert!(((gp[i] - gm[i]) / scale - w[i]).abs() < 1e-12);
        assert!(gp[i] == 0.0 || gm[i] == 0.0);
    }
    let st = unsafe {
        magres_weights_to_conductances(w.as_ptr(), 2, 2, 1e-3, 2, gp.as_mut_ptr(), gm.as_mut_ptr(), &mut scale)
    };
    assert_eq!(st, MagresStatus::Ok);
    assert!(gp.iter().chain(&gm).all(|&g| g == 0.0 || g == 1e-3));
    let st = unsafe {
        magres_weights_to_conductances(w.as_ptr(), 2, 2, -1.0, 0, gp.as_mut_ptr(), gm.as_mut_ptr(), &mut scale)
    };
    assert_ne!(st, MagresStatus::Ok);
}

#[test]
fn experiment_json() {
    let cfg =
        CString::new("task = \"equalization\"\nseed = 3\ntrain_len = 400\ntest_len = 200\n[reservoir]\nn_nodes = 20\n")
            .unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { magres_run_experiment(cfg.as_ptr(), &mut json) },
        MagresStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    unsafe { magres_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["task"], "equalization");
    assert_eq!(v["n_nodes"], 20);
    assert!(v["srr"].as_f64().unwrap() > 0.5);

    let identity = CString::new(
        "task = \"equalization\"\n[channel]\nfir_taps = [1.0]\npoly_coeffs = [0.0, 1.0]\nnoise_amp = 0.0\n",
    )
    .unwrap();
    assert_eq!(
        unsafe { magres_run_experiment(identity.as_ptr(), &mut json) },
        MagresStatus::Numeric
    );
    assert!(json.is_null());
    assert!(last_error().contains("SRR"));

    let no_task = CString::new("seed = 1\n").unwrap();
    assert_eq!(
        unsafe { magres_run_experiment(no_task.as_ptr(), &mut json) },
        MagresStatus::Config
    );
}

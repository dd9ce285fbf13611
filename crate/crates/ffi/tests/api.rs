use std::ffi::{CStr, CString};
use std::ptr;

use expfunc_ffi::*;

fn load(json: &str) -> *mut ExpfuncModel {
    let text = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { expfunc_model_from_json(text.as_ptr(), &mut m) }, ExpfuncStatus::Ok);
    m
}

fn last_error() -> String {
    let p = expfunc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn pure_kill_round_trip() {
    let m = load(r#"{"model":"pure_kill","q":1}"#);
    let (mut v, mut e) = (0.0, 0.0);
    unsafe {
        assert_eq!(expfunc_density_deriv(m, 2.0, 1, 1e-8, &mut v, &mut e), ExpfuncStatus::Ok);
        assert!((v + (-2f64).exp()).abs() < 1e-9);
        assert_eq!(expfunc_tail(m, 1.0, 1e-8, &mut v, &mut e), ExpfuncStatus::Ok);
        assert!((v - (-1f64).exp()).abs() < 1e-9);
        assert_eq!(expfunc_moment(m, 3, &mut v), ExpfuncStatus::Ok);
        assert!((v - 6.0).abs() < 1e-12);
        assert_eq!(expfunc_t_phis(m, &mut v), ExpfuncStatus::Ok);
        assert!((v - 0.0810615).abs() < 1e-7);
        let mut flag = 0;
        assert_eq!(expfunc_asymptotic(m, 5.0, 0, &mut v, &mut e, &mut flag), ExpfuncStatus::Ok);
        assert!((v - (-5f64).exp()).abs() < 1e-9);
        assert_eq!(flag, 1);
        expfunc_model_free(m);
    }
}

#[test]
fn complex_evaluations() {
    let m = load(r#"{"model":"stable","params":{"c":1,"alpha":0.5}}"#);
    let (mut re, mut im) = (0.0, 0.0);
    unsafe {
        assert_eq!(expfunc_phi(m, 4.0, 0.0, 0, &mut re, &mut im), ExpfuncStatus::Ok);
        assert!((re - 2.0).abs() < 1e-14 && im == 0.0);
        assert_eq!(expfunc_phi(m, 4.0, 0.0, 1, &mut re, &mut im), ExpfuncStatus::Ok);
        assert!((re - 0.25).abs() < 1e-14);
        // M(2) = E[I] = 1/φ(1)
        assert_eq!(expfunc_log_mellin(m, 2.0, 0.0, &mut re, &mut im), ExpfuncStatus::Ok);
        assert!(re.abs() < 1e-10);
        assert_eq!(expfunc_varphi_star(m, 2.0, &mut re), ExpfuncStatus::Ok);
        assert!((re - 4.0).abs() < 1e-12);
        expfunc_model_free(m);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let bad = CString::new(r#"{"model":"stable","params":{"c":1}}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { expfunc_model_from_json(bad.as_ptr(), &mut m) }, ExpfuncStatus::Config);
    assert!(m.is_null());
    assert!(last_error().contains("alpha"));

    let invalid = CString::new(r#"{"model":"stable","params":{"c":1,"alpha":2}}"#).unwrap();
    assert_eq!(unsafe { expfunc_model_from_json(invalid.as_ptr(), &mut m) }, ExpfuncStatus::InvalidModel);

    let m = load(r#"{"model":"pure_kill","q":1}"#);
    let (mut re, mut im) = (0.0, 0.0);
    unsafe {
        assert_eq!(expfunc_phi(m, -1.0, 0.0, 0, &mut re, &mut im), ExpfuncStatus::Domain);
        assert_eq!(expfunc_phi(m, 1.0, 0.0, 7, &mut re, &mut im), ExpfuncStatus::Domain);
        assert_eq!(expfunc_phi(m, 1.0, 0.0, 0, ptr::null_mut(), &mut im), ExpfuncStatus::NullPointer);
        // success clears the message
        assert_eq!(expfunc_phi(m, 1.0, 0.0, 0, &mut re, &mut im), ExpfuncStatus::Ok);
        assert!(expfunc_last_error_message().is_null());
        expfunc_model_free(m);
        expfunc_model_free(ptr::null_mut());
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(expfunc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

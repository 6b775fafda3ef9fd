use std::ffi::{CStr, CString};
use std::ptr;

use stable_mce_ffi::*;

fn new_model(id: &str) -> *mut SmceModel {
    let id = CString::new(id).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { smce_model_new(id.as_ptr(), 0, &mut m) }, SmceStatus::Ok);
    m
}

fn last_error() -> String {
    let p = smce_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn model_lifecycle() {
    let m = new_model("ou");
    assert_eq!(unsafe { smce_model_param_count(m) }, 3);
    unsafe { smce_model_free(m) };
    unsafe { smce_model_free(ptr::null_mut()) };
    assert_eq!(unsafe { smce_model_param_count(ptr::null()) }, 0);
    let l = CString::new("lfsm").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { smce_model_new(l.as_ptr(), 3, &mut h) }, SmceStatus::Ok);
    unsafe { smce_model_free(h) };
}

#[test]
fn unknown_family_reports_config_error() {
    let id = CString::new("nope").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { smce_model_new(id.as_ptr(), 0, &mut m) }, SmceStatus::Config);
    assert!(m.is_null());
    assert!(last_error().contains("nope"));
    assert_eq!(unsafe { smce_model_new(ptr::null(), 0, &mut m) }, SmceStatus::NullPointer);
}

#[test]
fn theoretical_and_empirical_cf() {
    let m = new_model("ou");
    let xi = [1.0, 1.0, 1.0];
    let u = [1.0];
    let mut out = 0.0;
    assert_eq!(unsafe { smce_theoretical_cf(m, xi.as_ptr(), 3, u.as_ptr(), 1, &mut out) }, SmceStatus::Ok);
    assert!((out - (-1.0f64).exp()).abs() < 1e-10);
    assert!(smce_last_error().is_null());
    let bad = [2.5, 1.0, 1.0];
    assert_eq!(unsafe { smce_theoretical_cf(m, bad.as_ptr(), 3, u.as_ptr(), 1, &mut out) }, SmceStatus::Domain);
    assert!(last_error().contains("beta"));
    assert_eq!(unsafe { smce_theoretical_cf(m, xi.as_ptr(), 2, u.as_ptr(), 1, &mut out) }, SmceStatus::InvalidArgument);
    unsafe { smce_model_free(m) };

    let x = [std::f64::consts::PI, 0.0];
    assert_eq!(unsafe { smce_empirical_cf(x.as_ptr(), 2, u.as_ptr(), 1, &mut out) }, SmceStatus::Ok);
    assert!(out.abs() < 1e-15);
}

#[test]
fn simulate_and_estimate_round_trip() {
    let m = new_model("ou");
    let xi = [1.8, 1.0, 1.0];
    let n = 2000;
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    unsafe {
        assert_eq!(smce_simulate(m, xi.as_ptr(), 3, n, 5, a.as_mut_ptr()), SmceStatus::Ok);
        assert_eq!(smce_simulate(m, xi.as_ptr(), 3, n, 5, b.as_mut_ptr()), SmceStatus::Ok);
    }
    assert_eq!(a, b);
    let start = [1.5, 0.5, 1.0];
    let free = [1u8, 1, 0];
    let mut est = [0.0; 3];
    let mut fit = SmceFit::default();
    let st = unsafe { smce_estimate(m, a.as_ptr(), n, 1, 20, 1.0, start.as_ptr(), free.as_ptr(), 3, est.as_mut_ptr(), &mut fit) };
    assert_eq!(st, SmceStatus::Ok);
    assert!(fit.converged);
    assert!((est[0] - 1.8).abs() < 0.2 && (est[1] - 1.0).abs() < 0.5, "{est:?}");
    assert_eq!(est[2], 1.0);
    let st = unsafe { smce_estimate(m, a.as_ptr(), n, 1, 20, 1.0, start.as_ptr(), free.as_ptr(), 3, ptr::null_mut(), &mut fit) };
    assert_eq!(st, SmceStatus::NullPointer);
    unsafe { smce_model_free(m) };
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/stable_mce.h")).unwrap();
    for f in [
        "smce_model_new",
        "smce_model_free",
        "smce_model_param_count",
        "smce_theoretical_cf",
        "smce_empirical_cf",
        "smce_simulate",
        "smce_estimate",
        "smce_last_error",
        "typedef struct SmceModel SmceModel",
    ] {
        assert!(h.contains(f), "header lacks {f}");
    }
    let v = unsafe { CStr::from_ptr(smce_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"stable_mce.h\"\nint main(void) { SmceModel *m = 0; SmceFit f; (void)f; return smce_model_new(\"ou\", 0, &m) == SmceStatus_Ok ? 0 : 1; }\n",
    )
    .unwrap();
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler, skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

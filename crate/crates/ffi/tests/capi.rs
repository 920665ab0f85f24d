use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use sinai_lab_ffi::*;

fn last_error() -> String {
    let p = sinai_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn sample(lo: i64, hi: i64) -> *mut SinaiEnvironment {
    let mut env = ptr::null_mut();
    let st = unsafe { sinai_env_sample(SinaiFamily::TwoPoint, 1.0, 7, lo, hi, &mut env) };
    assert_eq!(st, SinaiStatus::Ok);
    env
}

#[test]
fn ruin_matches_the_core_library() {
    let env = sample(-50, 50);
    let mut p = f64::NAN;
    assert_eq!(unsafe { sinai_ruin_probability(env, -10, 0, 10, &mut p) }, SinaiStatus::Ok);
    let spec = sinai_lab::DistributionSpec::two_point(1.0).unwrap();
    let core = sinai_lab::Environment::sample(&spec, 7, sinai_lab::Window::new(-50, 50).unwrap());
    assert_eq!(p, sinai_lab::oracle::ruin_probability(&core, -10, 0, 10).unwrap());
    unsafe { sinai_env_free(env) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let env = sample(-5, 5);
    let mut p = 0.0;
    assert_eq!(unsafe { sinai_ruin_probability(env, 3, 0, 10, &mut p) }, SinaiStatus::InvalidArgument);
    assert!(last_error().contains("a < z < b"));
    assert_eq!(unsafe { sinai_ruin_probability(env, -10, 0, 10, &mut p) }, SinaiStatus::WindowExhausted);
    assert_eq!(unsafe { sinai_ruin_probability(ptr::null(), -1, 0, 1, &mut p) }, SinaiStatus::NullPointer);
    let mut bad = ptr::null_mut();
    let st = unsafe { sinai_env_sample(SinaiFamily::TwoPoint, -1.0, 0, 0, 1, &mut bad) };
    assert_eq!(st, SinaiStatus::InvalidDistribution);
    assert!(bad.is_null());
    unsafe { sinai_env_free(env) };
}

#[test]
fn json_round_trip() {
    let env = sample(-20, 20);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { sinai_env_to_json(env, &mut json) }, SinaiStatus::Ok);
    let copy = CString::from(unsafe { CStr::from_ptr(json) });
    unsafe { sinai_string_free(json) };
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { sinai_env_from_json(copy.as_ptr(), &mut back) }, SinaiStatus::Ok);
    let (mut lo, mut hi) = (0, 0);
    assert_eq!(unsafe { sinai_env_window(back, &mut lo, &mut hi) }, SinaiStatus::Ok);
    assert_eq!((lo, hi), (-20, 20));
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for x in -20..=20 {
        unsafe {
            sinai_env_rates(env, x, &mut a, &mut b);
            sinai_env_rates(back, x, &mut c, &mut d);
        }
        assert_eq!((a, b), (c, d));
    }
    let garbage = CString::new("{not json").unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(unsafe { sinai_env_from_json(garbage.as_ptr(), &mut none) }, SinaiStatus::Parse);
    unsafe {
        sinai_env_free(env);
        sinai_env_free(back);
    }
}

#[test]
fn landscape_and_walks() {
    let env = sample(-3000, 3000);
    let mut ls = ptr::null_mut();
    assert_eq!(unsafe { sinai_landscape_new(env, 5.0, &mut ls) }, SinaiStatus::Ok);
    let mut marks = std::mem::MaybeUninit::<SinaiLandmarks>::uninit();
    assert_eq!(unsafe { sinai_landscape_landmarks(ls, marks.as_mut_ptr()) }, SinaiStatus::Ok);
    let marks = unsafe { marks.assume_init() };
    assert!(marks.m_minus <= 0.0 && 0.0 <= marks.m_plus);
    assert!(marks.m_t == marks.m_minus || marks.m_t == marks.m_plus);
    let mut n = 0;
    assert_eq!(unsafe { sinai_landscape_stable_points(ls, ptr::null_mut(), 0, &mut n) }, SinaiStatus::Ok);
    let mut pts = vec![0.0; n];
    assert_eq!(unsafe { sinai_landscape_stable_points(ls, pts.as_mut_ptr(), n, &mut n) }, SinaiStatus::Ok);
    assert!(pts.windows(2).all(|w| w[0] < w[1]));
    assert!(pts.contains(&marks.m_minus) && pts.contains(&marks.m_plus));

    let (mut x, mut y) = (0, 0);
    unsafe {
        sinai_simulate(env, 0, 100.0, 3, 4, &mut x);
        sinai_simulate(env, 0, 100.0, 3, 4, &mut y);
    }
    assert_eq!(x, y);
    unsafe {
        sinai_landscape_free(ls);
        sinai_env_free(env);
    }

    let small = sample(-5, 5);
    let mut none = ptr::null_mut();
    assert_eq!(unsafe { sinai_landscape_new(small, 10.0, &mut none) }, SinaiStatus::WindowExhausted);
    unsafe { sinai_env_free(small) };
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(sinai_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export_and_compiles() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/sinai_lab.h")).unwrap();
    let src = std::fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    for line in src.lines().filter(|l| l.contains("extern \"C\" fn ")) {
        let name = line.split("fn ").nth(1).unwrap().split('(').next().unwrap();
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for (lang, compiler) in [("c", "cc"), ("c++", "c++")] {
        let Ok(status) = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-include"])
            .arg(format!("{dir}/include/sinai_lab.h"))
            .arg("/dev/null")
            .status()
        else {
            eprintln!("{compiler} not found; skipping");
            continue;
        };
        assert!(status.success(), "header does not compile as {lang}");
    }
}

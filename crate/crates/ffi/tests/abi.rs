use std::ffi::CStr;
use std::ptr;

use comma_ea_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ce_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn engine_lifecycle() {
    let mut e: *mut CeEngine = ptr::null_mut();
    unsafe {
        assert_eq!(ce_engine_new(20, 5, 20, 7, 0, &mut e), CeStatus::Ok);
        assert!(!e.is_null());
        let mut hist = vec![0u64; 21];
        assert_eq!(ce_engine_histogram(e, hist.as_mut_ptr(), hist.len()), CeStatus::Ok);
        assert_eq!(hist.iter().sum::<u64>(), 5);

        let mut hit = false;
        assert_eq!(ce_engine_step(e, 3, &mut hit), CeStatus::Ok);
        let (mut g, mut ev, mut f, mut x) = (0u64, 0u64, 0usize, 0usize);
        assert_eq!(ce_engine_stats(e, &mut g, &mut ev, &mut f, &mut x), CeStatus::Ok);
        assert_eq!(g, 3);
        assert_eq!(ev, 5 + 3 * 20);
        assert!(f <= 20 && (1..=5).contains(&x));

        let mut ok = false;
        assert_eq!(ce_engine_run(e, 100_000, &mut ok), CeStatus::Ok);
        assert!(ok);
        ce_engine_free(e);
    }
}

#[test]
fn engine_errors() {
    let mut e: *mut CeEngine = ptr::null_mut();
    unsafe {
        assert_eq!(ce_engine_new(20, 10, 5, 1, 0, &mut e), CeStatus::LambdaBelowMu);
        assert!(e.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(ce_engine_new(20, 5, 10, 1, 0, ptr::null_mut()), CeStatus::NullPointer);
        assert_eq!(ce_engine_step(ptr::null_mut(), 1, ptr::null_mut()), CeStatus::NullPointer);

        assert_eq!(ce_engine_new(20, 5, 10, 1, 0, &mut e), CeStatus::Ok);
        let mut small = [0u64; 3];
        assert_eq!(ce_engine_histogram(e, small.as_mut_ptr(), 3), CeStatus::BufferTooSmall);
        assert!(last_error().contains("21"));
        ce_engine_free(e);
        ce_engine_free(ptr::null_mut());
    }
}

#[test]
fn chain_stays_in_range() {
    let mut c: *mut CeChain = ptr::null_mut();
    unsafe {
        assert_eq!(ce_chain_new(100, 272, 10.0, 50, 3, &mut c), CeStatus::Ok);
        for _ in 0..200 {
            let mut s = u64::MAX;
            assert_eq!(ce_chain_step(c, &mut s, ptr::null_mut()), CeStatus::Ok);
            assert!(s <= 100);
        }
        ce_chain_free(c);
        assert_eq!(ce_chain_new(100, 272, 0.0, 101, 3, &mut c), CeStatus::InvalidParameter);
    }
}

#[test]
fn delta_pmf_sums_to_one() {
    let mut buf = vec![0.0; 9];
    unsafe {
        assert_eq!(ce_delta_pmf(8, 3, buf.as_mut_ptr(), buf.len()), CeStatus::Ok);
        assert_eq!(ce_delta_pmf(8, 3, buf.as_mut_ptr(), 4), CeStatus::BufferTooSmall);
    }
    assert!((buf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    // index n - d is δ = 0, the mode
    let zero = buf[5];
    assert!(buf.iter().all(|&p| p <= zero));
}

#[test]
fn scalar_functions() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(ce_binom_upper_tail(10, 0.5, 0, &mut v), CeStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(ce_binom_upper_tail(10, 0.5, 10, &mut v), CeStatus::Ok);
        assert!((v - 1.0 / 1024.0).abs() < 1e-15);

        assert_eq!(ce_epsilon_gap(10, 27, &mut v), CeStatus::Ok);
        let me = 10.0 * std::f64::consts::E;
        assert!((v - (me - 27.0) / me).abs() < 1e-12);
        assert_eq!(ce_epsilon_gap(10, 28, &mut v), CeStatus::OutsideHypothesis);

        assert_eq!(ce_h_potential(0, 10, &mut v), CeStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(ce_h_potential(10, 10, &mut v), CeStatus::Ok);
        assert!((v - 20.0).abs() < 1e-12);
    }
    let version = unsafe { CStr::from_ptr(ce_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

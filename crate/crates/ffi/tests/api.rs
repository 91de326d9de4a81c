use std::ffi::{CStr, CString};
use std::ptr;

use uqf_ffi::*;

fn last_error() -> String {
    let p = uqf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn cf_handle_lifecycle() {
    let mut cf = ptr::null_mut();
    assert_eq!(uqf_cf_expand_xi(19, &mut cf), UqfStatus::Ok);
    let mut pre = 0;
    let mut per = 0;
    assert_eq!(uqf_cf_preperiod_len(cf, &mut pre), UqfStatus::Ok);
    assert_eq!(uqf_cf_period_len(cf, &mut per), UqfStatus::Ok);
    assert_eq!((pre, per), (1, 6));
    let coeffs: Vec<i64> = (0..8)
        .map(|j| {
            let mut v = 0;
            assert_eq!(uqf_cf_coefficient(cf, j, &mut v), UqfStatus::Ok);
            v
        })
        .collect();
    assert_eq!(coeffs, vec![4, 2, 1, 3, 1, 2, 8, 2]);
    let mut s = ptr::null_mut();
    assert_eq!(uqf_cf_to_string(cf, &mut s), UqfStatus::Ok);
    assert_eq!(
        unsafe { CStr::from_ptr(s) }.to_str().unwrap(),
        "[4; (2,1,3,1,2,8)]"
    );
    uqf_string_free(s);
    uqf_cf_free(cf);
    uqf_cf_free(ptr::null_mut());
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut cf = ptr::null_mut();
    assert_eq!(uqf_cf_expand_xi(12, &mut cf), UqfStatus::InvalidInput);
    assert!(cf.is_null());
    assert!(last_error().contains("12"));
    assert_eq!(uqf_cf_expand_xi(7, ptr::null_mut()), UqfStatus::NullPointer);
    assert!(last_error().contains("out_cf"));
    let mut len = 0;
    assert_eq!(
        uqf_cf_period_len(ptr::null(), &mut len),
        UqfStatus::NullPointer
    );
    let mut v = 0.0;
    assert_eq!(uqf_bound_c(0, 1, 1, &mut v), UqfStatus::InvalidInput);
}

#[test]
fn gram_counts() {
    let z2 = [1i64, 0, 0, 1];
    let mut g = ptr::null_mut();
    assert_eq!(uqf_gram_new(z2.as_ptr(), 2, &mut g), UqfStatus::Ok);
    let mut n = 0;
    assert_eq!(uqf_gram_count_vectors(g, 5, 0, &mut n), UqfStatus::Ok);
    assert_eq!(n, 8);
    let mut det = 0;
    assert_eq!(uqf_gram_det(g, &mut det), UqfStatus::Ok);
    assert_eq!(det, 1);
    uqf_gram_free(g);

    let text = CString::new("2\n2 1\n1 2\n").unwrap();
    assert_eq!(uqf_gram_parse(text.as_ptr(), &mut g), UqfStatus::Ok);
    assert_eq!(uqf_gram_count_vectors(g, 2, 0, &mut n), UqfStatus::Ok);
    assert_eq!(n, 6);
    assert_eq!(
        uqf_gram_count_vectors(g, 200, 10, &mut n),
        UqfStatus::BudgetExceeded
    );
    uqf_gram_free(g);

    let indefinite = [1i64, 2, 2, 1];
    assert_eq!(
        uqf_gram_new(indefinite.as_ptr(), 2, &mut g),
        UqfStatus::InvalidInput
    );
}

#[test]
fn bounds_and_ranks() {
    let mut v = 0.0;
    assert_eq!(uqf_bound_c(5, 2, 1, &mut v), UqfStatus::Ok);
    assert_eq!(v, 480.0);
    assert_eq!(uqf_bound_b(3, 1, &mut v), UqfStatus::Ok);
    assert_eq!(v, 6.0);
    let mut r = 0;
    assert_eq!(uqf_min_rank_classical(250, 2, &mut r), UqfStatus::Ok);
    assert_eq!(r, 9);
    let mut u = 0;
    let mut at = 0;
    assert_eq!(uqf_max_odd_coefficient(2, &mut u, &mut at), UqfStatus::Ok);
    assert_eq!((u, at), (2, 1));
    assert_eq!(
        uqf_max_odd_coefficient(5, &mut u, ptr::null_mut()),
        UqfStatus::Ok
    );
    assert_eq!(u, 1);
    let mut c = 0;
    assert_eq!(
        uqf_census(10, 1_000_000, UqfCensusKind::Xi, true, &mut c),
        UqfStatus::Ok
    );
    assert_eq!(c, 6);
}

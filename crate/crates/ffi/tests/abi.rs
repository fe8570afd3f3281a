use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use mixedq_ffi::*;

fn matrix(n: usize, q: f64) -> *mut MqStructureMatrix {
    let mut e = vec![q; n * n];
    for i in 0..n {
        e[i * n + i] = if q.abs() <= 1.0 { q } else { 0.0 };
    }
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { mq_structure_matrix_new(n, e.as_ptr(), &mut out) }, MqStatus::Ok);
    out
}

fn last_error() -> String {
    let p = mq_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn moments_through_the_abi() {
    let q = matrix(2, 0.3);
    assert_eq!(unsafe { mq_structure_matrix_dim(q) }, 2);
    let mut v = 0.0;
    // x1 x1 x1 x1 with q11 = 0.3: two pairings of weight 1, one crossing of weight q.
    let l = [1usize, 1, 1, 1];
    assert_eq!(unsafe { mq_moment(q, l.as_ptr(), 4, &mut v) }, MqStatus::Ok);
    assert!((v - 2.3).abs() < 1e-12);
    let (a, b) = ([1usize, 2], [2usize, 1]);
    assert_eq!(unsafe { mq_wick_inner(q, a.as_ptr(), 2, b.as_ptr(), 2, &mut v) }, MqStatus::Ok);
    assert!((v - 0.3).abs() < 1e-12);
    unsafe { mq_structure_matrix_free(q) };
}

#[test]
fn invalid_input_sets_status_and_message() {
    let e = [0.5, 0.2, 0.3, 0.5];
    let mut out = ptr::null_mut();
    let s = unsafe { mq_structure_matrix_new(2, e.as_ptr(), &mut out) };
    assert_eq!(s, MqStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let s = unsafe { mq_structure_matrix_new(2, ptr::null(), &mut out) };
    assert_eq!(s, MqStatus::NullPointer);
    assert!(last_error().contains("null"));

    let q = matrix(2, 0.0);
    let l = [3usize, 3];
    let mut v = 0.0;
    assert_eq!(unsafe { mq_moment(q, l.as_ptr(), 2, &mut v) }, MqStatus::InvalidArgument);
    let ok = [1usize, 1];
    assert_eq!(unsafe { mq_moment(q, ok.as_ptr(), 2, ptr::null_mut()) }, MqStatus::NullPointer);
    assert_eq!(unsafe { mq_moment(ptr::null(), l.as_ptr(), 2, &mut v) }, MqStatus::NullPointer);
    unsafe { mq_structure_matrix_free(q) };
    unsafe { mq_structure_matrix_free(ptr::null_mut()) };
    assert_eq!(unsafe { mq_structure_matrix_dim(ptr::null()) }, 0);
}

#[test]
fn fock_verify_reports_pass_and_failure() {
    let q = matrix(2, 0.4);
    let (mut passed, mut res) = (0i32, f64::NAN);
    assert_eq!(unsafe { mq_fock_verify(q, 4, &mut passed, &mut res) }, MqStatus::Ok);
    assert_eq!(passed, 1);
    assert!(res < 1e-10);
    assert_eq!(unsafe { mq_fock_verify(q, 1, &mut passed, &mut res) }, MqStatus::InvalidArgument);
    unsafe { mq_structure_matrix_free(q) };
}

#[test]
fn sign_tables_and_traces() {
    let q = matrix(2, 0.0);
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { mq_epsilon_table_sample(q, 4, 7, 1, 0, &mut t) }, MqStatus::Ok);
    let mut s = 0i8;
    assert_eq!(unsafe { mq_epsilon_sign(t, 1, 1, 1, 1, &mut s) }, MqStatus::Ok);
    assert_eq!(s, -1);
    let mut s2 = 0i8;
    unsafe {
        mq_epsilon_sign(t, 1, 2, 2, 3, &mut s);
        mq_epsilon_sign(t, 2, 3, 1, 2, &mut s2);
    }
    assert_eq!(s, s2);
    assert_eq!(unsafe { mq_epsilon_sign(t, 3, 1, 1, 1, &mut s) }, MqStatus::InvalidArgument);

    // x1(1) x2(2) x1(1) x2(2) traces to eps((1,1),(2,2)).
    let (rows, cols) = ([1usize, 2, 1, 2], [1usize, 2, 1, 2]);
    let mut tr = 0.0;
    assert_eq!(unsafe { mq_trace(t, rows.as_ptr(), cols.as_ptr(), 4, &mut tr) }, MqStatus::Ok);
    unsafe { mq_epsilon_sign(t, 1, 1, 2, 2, &mut s) };
    assert_eq!(tr, f64::from(s));

    let mut e = f64::NAN;
    let st = unsafe { mq_expected_trace(q, 1, rows.as_ptr(), cols.as_ptr(), 4, &mut e) };
    assert_eq!(st, MqStatus::Ok);
    assert!(e.abs() < 1e-12);
    assert_eq!(
        unsafe { mq_expected_trace(q, 0, rows.as_ptr(), cols.as_ptr(), 4, &mut e) },
        MqStatus::InvalidArgument
    );
    unsafe {
        mq_epsilon_table_free(t);
        mq_structure_matrix_free(q);
    }
}

#[test]
fn lazy_and_dense_tables_give_valid_signs() {
    let q = matrix(3, 0.5);
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { mq_epsilon_table_sample(q, 5, 11, 2, 1, &mut t) }, MqStatus::Ok);
    let mut s = 0i8;
    for (i, k, j, l) in [(1, 1, 6, 5), (4, 2, 1, 2), (2, 3, 5, 3)] {
        assert_eq!(unsafe { mq_epsilon_sign(t, i, k, j, l, &mut s) }, MqStatus::Ok);
        assert!(s == 1 || s == -1);
    }
    // Row 4 folds onto row 1 in the repeated scheme.
    unsafe { mq_epsilon_sign(t, 4, 2, 1, 2, &mut s) };
    assert_eq!(s, -1);
    unsafe {
        mq_epsilon_table_free(t);
        mq_structure_matrix_free(q);
    }
}

#[test]
fn clt_modes_and_budget() {
    let q = matrix(2, 0.5);
    let l = [1usize, 1, 1, 1];
    let mut v = 0.0;
    assert_eq!(unsafe { mq_clt_expectation(q, l.as_ptr(), 4, 8, &mut v) }, MqStatus::Ok);
    // Limit is 2 + q11, reached up to an O(1/m) correction.
    assert!((v - 2.5).abs() < 1.0);

    let mut t = ptr::null_mut();
    unsafe { mq_epsilon_table_sample(q, 6, 3, 1, 0, &mut t) };
    assert_eq!(unsafe { mq_clt_exact(t, l.as_ptr(), 4, 1_000_000, &mut v) }, MqStatus::Ok);
    assert!(v.is_finite() && v > 0.0);
    assert_eq!(unsafe { mq_clt_exact(t, l.as_ptr(), 4, 3, &mut v) }, MqStatus::BudgetExceeded);
    assert!(last_error().contains("budget"));
    unsafe {
        mq_epsilon_table_free(t);
        mq_structure_matrix_free(q);
    }
}

#[test]
fn generated_header_declares_the_abi() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/include/mixedq.h");
    let h = std::fs::read_to_string(path).expect("header generated by build script");
    for name in [
        "mq_last_error_message",
        "mq_structure_matrix_new",
        "mq_structure_matrix_free",
        "mq_moment",
        "mq_wick_inner",
        "mq_fock_verify",
        "mq_epsilon_table_sample",
        "mq_epsilon_sign",
        "mq_trace",
        "mq_expected_trace",
        "mq_clt_expectation",
        "mq_clt_exact",
        "typedef struct MqStructureMatrix MqStructureMatrix",
        "MQ_STATUS_BUDGET_EXCEEDED",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
    // Syntax check with a C compiler when one is installed.
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", path]).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

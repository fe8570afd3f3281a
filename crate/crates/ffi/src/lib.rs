//! C ABI over `mixedq`.
//!
//! Objects cross the boundary as opaque pointers created by `*_new` / `*_sample`
//! and released by the matching `*_free`. Every fallible call returns an
//! [`MqStatus`] and writes its result through an out-pointer; after a non-OK
//! status, [`mq_last_error_message`] describes the failure on the calling
//! thread. Labels are 1-based, as in the Rust API.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mixedq::fock::{check_adjoint, check_commutation, gram, FockBasis, FockOperators};
use mixedq::moments::{moment, wick_inner, StructureMatrix, WickWord};
use mixedq::spinmodel::{self, EpsilonTable, Letter, Scheme, SpinWord};
use mixedq::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CapExceeded = 3,
    BudgetExceeded = 4,
    VerificationFailed = 5,
    Internal = 6,
}

/// Opaque validated structure matrix.
pub struct MqStructureMatrix(StructureMatrix);

/// Opaque sampled sign table.
pub struct MqEpsilonTable(EpsilonTable);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MqStatus {
    match e {
        Error::CapExceeded { .. } => MqStatus::CapExceeded,
        Error::BudgetExceeded { .. } => MqStatus::BudgetExceeded,
        Error::Io(_) | Error::GramNotPositive { .. } => MqStatus::Internal,
        _ => MqStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (MqStatus, String)>) -> MqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MqStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside mixedq".into());
            MqStatus::Internal
        }
    }
}

fn lib<T>(r: mixedq::Result<T>) -> Result<T, (MqStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (MqStatus, String) {
    (MqStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MqStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice_of<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (MqStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), (MqStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = v;
    Ok(())
}

fn scheme(copies: usize) -> Result<Scheme, (MqStatus, String)> {
    match copies {
        0 => Err((MqStatus::InvalidArgument, "copies must be >= 1".into())),
        1 => Ok(Scheme::Independent),
        n => Ok(Scheme::TensorRepeated { copies: n }),
    }
}

fn letters(rows: &[usize], cols: &[usize]) -> Result<Vec<Letter>, (MqStatus, String)> {
    if rows.iter().chain(cols).any(|&v| v == 0) {
        return Err((MqStatus::InvalidArgument, "labels are 1-based".into()));
    }
    Ok(rows.iter().zip(cols).map(|(&i, &k)| Letter::one_based(i, k)).collect())
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Validates an `n x n` row-major matrix and returns a new handle.
///
/// # Safety
/// `entries` must point to `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_structure_matrix_new(
    n: usize,
    entries: *const f64,
    out: *mut *mut MqStructureMatrix,
) -> MqStatus {
    guard(|| {
        let len = n.checked_mul(n).ok_or((MqStatus::InvalidArgument, "n too large".into()))?;
        let e = slice_of(entries, len, "entries")?;
        let rows: Vec<Vec<f64>> = e.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let q = lib(StructureMatrix::from_rows(&rows))?;
        write_out(out, Box::into_raw(Box::new(MqStructureMatrix(q))))
    })
}

/// Releases a handle from [`mq_structure_matrix_new`]. NULL is ignored.
///
/// # Safety
/// `q` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mq_structure_matrix_free(q: *mut MqStructureMatrix) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Dimension of the matrix, or 0 for NULL.
///
/// # Safety
/// `q` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mq_structure_matrix_dim(q: *const MqStructureMatrix) -> usize {
    q.as_ref().map_or(0, |q| q.0.dim())
}

/// Mixed moment of the generators with the given labels.
///
/// # Safety
/// `labels` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_moment(
    q: *const MqStructureMatrix,
    labels: *const usize,
    len: usize,
    out: *mut f64,
) -> MqStatus {
    guard(|| {
        let q = deref(q, "structure matrix")?;
        let l = slice_of(labels, len, "labels")?;
        write_out(out, lib(moment(&q.0, l))?)
    })
}

/// Inner product of two Wick words.
///
/// # Safety
/// Label arrays must hold `len_a` / `len_b` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_wick_inner(
    q: *const MqStructureMatrix,
    a: *const usize,
    len_a: usize,
    b: *const usize,
    len_b: usize,
    out: *mut f64,
) -> MqStatus {
    guard(|| {
        let q = deref(q, "structure matrix")?;
        let a = WickWord::new(slice_of(a, len_a, "labels a")?.to_vec());
        let b = WickWord::new(slice_of(b, len_b, "labels b")?.to_vec());
        write_out(out, lib(wick_inner(&q.0, &a, &b))?)
    })
}

/// Checks the commutation relations and adjointness on the Fock space
/// truncated at `degree`. Writes 1 or 0 to `passed` and the largest
/// residual to `max_residual`, then returns `VERIFICATION_FAILED` if the
/// check did not pass.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_fock_verify(
    q: *const MqStructureMatrix,
    degree: usize,
    passed: *mut i32,
    max_residual: *mut f64,
) -> MqStatus {
    guard(|| {
        let q = deref(q, "structure matrix")?;
        if degree < 2 {
            return Err((MqStatus::InvalidArgument, "degree must be >= 2".into()));
        }
        let basis = lib(FockBasis::new(q.0.dim(), degree))?;
        let g = lib(gram(&q.0, &basis))?;
        let ops = lib(FockOperators::build(&q.0, &basis))?;
        let comm = lib(check_commutation(&q.0, &basis, &ops))?;
        let adj = lib(check_adjoint(&basis, &g, &ops))?;
        let ok = comm.passed() && adj.passed();
        let worst = comm.max_residual.max(adj.form.max_residual).max(adj.quotient.max_residual);
        write_out(passed, i32::from(ok))?;
        write_out(max_residual, worst)?;
        if ok {
            Ok(())
        } else {
            Err((MqStatus::VerificationFailed, format!("fock verification failed, max residual {worst:e}")))
        }
    })
}

/// Samples a sign table over `q.dim() * copies` rows and `m` columns.
/// `copies = 1` is the independent scheme; larger values repeat the sampled
/// block. `lazy != 0` derives signs on demand instead of storing them.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_epsilon_table_sample(
    q: *const MqStructureMatrix,
    m: usize,
    seed: u64,
    copies: usize,
    lazy: i32,
    out: *mut *mut MqEpsilonTable,
) -> MqStatus {
    guard(|| {
        let q = deref(q, "structure matrix")?;
        let s = scheme(copies)?;
        let t = if lazy != 0 {
            lib(EpsilonTable::sample_lazy(&q.0, m, seed, s))?
        } else {
            lib(EpsilonTable::sample(&q.0, m, seed, s))?
        };
        write_out(out, Box::into_raw(Box::new(MqEpsilonTable(t))))
    })
}

/// Releases a table. NULL is ignored.
///
/// # Safety
/// `t` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mq_epsilon_table_free(t: *mut MqEpsilonTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// `eps((i, k), (j, l))`, 1-based.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_epsilon_sign(
    t: *const MqEpsilonTable,
    i: usize,
    k: usize,
    j: usize,
    l: usize,
    out: *mut i8,
) -> MqStatus {
    guard(|| {
        let t = deref(t, "sign table")?;
        let ls = letters(&[i, j], &[k, l])?;
        if !ls.iter().all(|x| t.0.contains(*x)) {
            return Err((MqStatus::InvalidArgument, "letter outside the table".into()));
        }
        write_out(out, t.0.sign(ls[0], ls[1]))
    })
}

/// Normalized trace of `x_{rows[0]}(cols[0]) ... x_{rows[len-1]}(cols[len-1])`.
///
/// # Safety
/// `rows` and `cols` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_trace(
    t: *const MqEpsilonTable,
    rows: *const usize,
    cols: *const usize,
    len: usize,
    out: *mut f64,
) -> MqStatus {
    guard(|| {
        let t = deref(t, "sign table")?;
        let w = letters(slice_of(rows, len, "rows")?, slice_of(cols, len, "cols")?)?;
        if !w.iter().all(|x| t.0.contains(*x)) {
            return Err((MqStatus::InvalidArgument, "letter outside the table".into()));
        }
        write_out(out, spinmodel::trace(&SpinWord(w), &t.0))
    })
}

/// Expected trace of the same word over the random signs.
///
/// # Safety
/// As for [`mq_trace`].
#[no_mangle]
pub unsafe extern "C" fn mq_expected_trace(
    q: *const MqStructureMatrix,
    copies: usize,
    rows: *const usize,
    cols: *const usize,
    len: usize,
    out: *mut f64,
) -> MqStatus {
    guard(|| {
        let q = deref(q, "structure matrix")?;
        let w = letters(slice_of(rows, len, "rows")?, slice_of(cols, len, "cols")?)?;
        write_out(out, lib(spinmodel::expected_trace(&SpinWord(w), &q.0, scheme(copies)?))?)
    })
}

/// Expectation-mode CLT statistic at `m` columns.
///
/// # Safety
/// `labels` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_clt_expectation(
    q: *const MqStructureMatrix,
    labels: *const usize,
    len: usize,
    m: usize,
    out: *mut f64,
) -> MqStatus {
    guard(|| {
        let q = deref(q, "structure matrix")?;
        let l = slice_of(labels, len, "labels")?;
        write_out(out, lib(spinmodel::clt_expectation(&q.0, Scheme::Independent, l, m))?)
    })
}

/// Exact CLT statistic for one table; fails with `BUDGET_EXCEEDED` when more
/// than `budget` words would be visited.
///
/// # Safety
/// `labels` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_clt_exact(
    t: *const MqEpsilonTable,
    labels: *const usize,
    len: usize,
    budget: u64,
    out: *mut f64,
) -> MqStatus {
    guard(|| {
        let t = deref(t, "sign table")?;
        let l = slice_of(labels, len, "labels")?;
        write_out(out, lib(spinmodel::clt_exact(&t.0, l, budget as u128))?)
    })
}

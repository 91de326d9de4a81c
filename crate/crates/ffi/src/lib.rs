//! C ABI over `uqf-core`.
//!
//! Every function returns a [`UqfStatus`]; results come back through out
//! pointers. On failure, [`uqf_last_error`] returns a message for the
//! calling thread. Handles are opaque and must be released with the
//! matching `_free` function. Panics never cross the boundary; they are
//! reported as [`UqfStatus::Panic`].

// Pointer contracts are documented per function; C callers cannot see
// an `unsafe` marker anyway.
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::size_t;
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use uqf_core::certified::DEFAULT_PRECISION;
use uqf_core::lattice::{self, GramMatrix, DEFAULT_ENUM_BUDGET};
use uqf_core::survey::{self, CensusKind};
use uqf_core::{surd_cf, Error, PeriodicCF};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UqfStatus {
    Ok = 0,
    InvalidInput = 1,
    Domain = 2,
    SearchExhausted = 3,
    BudgetExceeded = 4,
    AssertionFailed = 5,
    Parse = 6,
    NullPointer = 7,
    Overflow = 8,
    Panic = 9,
}

/// Census kinds, matching the CLI's `--kind`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UqfCensusKind {
    Xi = 0,
    SqrtAll = 1,
    HalfAll = 2,
}

/// Continued fraction expansion of `xi_D`.
pub struct UqfCf {
    cf: PeriodicCF,
}

/// Positive definite integral Gram matrix.
pub struct UqfGram {
    gram: GramMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> UqfStatus {
    match e {
        Error::InvalidInput(_) => UqfStatus::InvalidInput,
        Error::Domain(_) => UqfStatus::Domain,
        Error::SearchExhausted(_) => UqfStatus::SearchExhausted,
        Error::BudgetExceeded { .. } => UqfStatus::BudgetExceeded,
        Error::AssertionFailed(_) => UqfStatus::AssertionFailed,
        Error::Parse(_) => UqfStatus::Parse,
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Overflow(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UqfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UqfStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            UqfStatus::NullPointer
        }
        Ok(Err(Failure::Overflow(what))) => {
            set_error(format!("value does not fit: {what}"));
            UqfStatus::Overflow
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            UqfStatus::Panic
        }
    }
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller guarantees that a non-null pointer is valid for
    // writes of T.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: non-null handles were produced by this library and not freed.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

fn to_i64(x: &BigInt, what: &'static str) -> Result<i64, Failure> {
    x.to_i64().ok_or(Failure::Overflow(what))
}

/// Message for the most recent failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn uqf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Expands `xi_D` for squarefree `D > 1`, `D` not divisible by 4.
#[no_mangle]
pub extern "C" fn uqf_cf_expand_xi(d: u64, out_cf: *mut *mut UqfCf) -> UqfStatus {
    guard(|| {
        let slot = out(out_cf, "out_cf")?;
        let cf = surd_cf::expand_xi(d)?;
        *slot = Box::into_raw(Box::new(UqfCf { cf }));
        Ok(())
    })
}

/// Releases a handle from [`uqf_cf_expand_xi`]. Null is ignored.
#[no_mangle]
pub extern "C" fn uqf_cf_free(cf: *mut UqfCf) {
    if !cf.is_null() {
        // SAFETY: produced by Box::into_raw in uqf_cf_expand_xi.
        drop(unsafe { Box::from_raw(cf) });
    }
}

#[no_mangle]
pub extern "C" fn uqf_cf_preperiod_len(cf: *const UqfCf, out_len: *mut size_t) -> UqfStatus {
    guard(|| {
        let c = handle(cf, "cf")?;
        *out(out_len, "out_len")? = c.cf.preperiod().len();
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn uqf_cf_period_len(cf: *const UqfCf, out_len: *mut size_t) -> UqfStatus {
    guard(|| {
        let c = handle(cf, "cf")?;
        *out(out_len, "out_len")? = c.cf.period().len();
        Ok(())
    })
}

/// `u_j`, for any `j >= 0` (the period repeats).
#[no_mangle]
pub extern "C" fn uqf_cf_coefficient(
    cf: *const UqfCf,
    j: size_t,
    out_value: *mut i64,
) -> UqfStatus {
    guard(|| {
        let c = handle(cf, "cf")?;
        *out(out_value, "out_value")? = to_i64(c.cf.coefficient_at(j), "coefficient")?;
        Ok(())
    })
}

/// Renders the expansion as `[u0; ..., (period)]`. Free the string with
/// [`uqf_string_free`].
#[no_mangle]
pub extern "C" fn uqf_cf_to_string(cf: *const UqfCf, out_str: *mut *mut c_char) -> UqfStatus {
    guard(|| {
        let c = handle(cf, "cf")?;
        let slot = out(out_str, "out_str")?;
        *slot = CString::new(c.cf.to_string())
            .expect("no interior nul")
            .into_raw();
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn uqf_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Largest odd-indexed coefficient of `xi_D` and the first odd index where
/// it occurs.
#[no_mangle]
pub extern "C" fn uqf_max_odd_coefficient(
    d: u64,
    out_u: *mut u64,
    out_index: *mut size_t,
) -> UqfStatus {
    guard(|| {
        let (u, at) = surd_cf::max_odd_coefficient(d)?;
        *out(out_u, "out_u")? = u.to_u64().ok_or(Failure::Overflow("u"))?;
        if !out_index.is_null() {
            *out(out_index, "out_index")? = at;
        }
        Ok(())
    })
}

/// Builds a Gram matrix from `rank * rank` row-major entries. The matrix
/// must be symmetric and positive definite.
#[no_mangle]
pub extern "C" fn uqf_gram_new(
    entries: *const i64,
    rank: size_t,
    out_gram: *mut *mut UqfGram,
) -> UqfStatus {
    guard(|| {
        if entries.is_null() {
            return Err(Failure::Null("entries"));
        }
        let slot = out(out_gram, "out_gram")?;
        let len = rank.checked_mul(rank).ok_or(Failure::Overflow("rank"))?;
        // SAFETY: the caller provides rank * rank readable entries.
        let flat = unsafe { std::slice::from_raw_parts(entries, len) };
        let rows: Vec<Vec<i64>> = flat.chunks(rank.max(1)).map(|r| r.to_vec()).collect();
        let gram = GramMatrix::from_i64(&rows)?;
        *slot = Box::into_raw(Box::new(UqfGram { gram }));
        Ok(())
    })
}

/// Parses the text Gram format (rank line, then rows; `#` comments).
#[no_mangle]
pub extern "C" fn uqf_gram_parse(text: *const c_char, out_gram: *mut *mut UqfGram) -> UqfStatus {
    guard(|| {
        if text.is_null() {
            return Err(Failure::Null("text"));
        }
        let slot = out(out_gram, "out_gram")?;
        // SAFETY: the caller passes a nul-terminated string.
        let s = unsafe { CStr::from_ptr(text) }
            .to_str()
            .map_err(|_| Error::Parse("Gram text is not UTF-8".into()))?;
        let gram = GramMatrix::parse(s)?;
        *slot = Box::into_raw(Box::new(UqfGram { gram }));
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn uqf_gram_free(g: *mut UqfGram) {
    if !g.is_null() {
        // SAFETY: produced by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(g) });
    }
}

#[no_mangle]
pub extern "C" fn uqf_gram_det(g: *const UqfGram, out_det: *mut i64) -> UqfStatus {
    guard(|| {
        let g = handle(g, "gram")?;
        *out(out_det, "out_det")? = to_i64(&g.gram.det(), "det")?;
        Ok(())
    })
}

/// `#{v : v^T G v = n}`. A `budget` of 0 selects the default node cap.
#[no_mangle]
pub extern "C" fn uqf_gram_count_vectors(
    g: *const UqfGram,
    n: u64,
    budget: u64,
    out_count: *mut u64,
) -> UqfStatus {
    guard(|| {
        let g = handle(g, "gram")?;
        let slot = out(out_count, "out_count")?;
        let budget = if budget == 0 {
            DEFAULT_ENUM_BUDGET
        } else {
            budget
        };
        *slot = lattice::count_vectors_upto(&g.gram, n, budget)?[n as usize];
        Ok(())
    })
}

/// Upper bound `C(r, n)` for a lattice of determinant `det`, rounded up to
/// a double.
#[no_mangle]
pub extern "C" fn uqf_bound_c(r: u64, n: u64, det: i64, out_value: *mut f64) -> UqfStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = lattice::bound_c(r, n, &BigInt::from(det), DEFAULT_PRECISION)?.to_f64_up();
        Ok(())
    })
}

/// Upper bound `B(R, m)`, rounded up to a double.
#[no_mangle]
pub extern "C" fn uqf_bound_b(r: u64, m: u64, out_value: *mut f64) -> UqfStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = lattice::bound_b(r, m, DEFAULT_PRECISION)?.to_f64_up();
        Ok(())
    })
}

/// Smallest `R` with `B(R, m) > u`.
#[no_mangle]
pub extern "C" fn uqf_min_rank_classical(u: u64, m: u64, out_rank: *mut u64) -> UqfStatus {
    guard(|| {
        let slot = out(out_rank, "out_rank")?;
        *slot = survey::min_rank_classical(u, m)?;
        Ok(())
    })
}

/// Number of `D <= x` whose number under `kind` has all odd-indexed
/// coefficients at most `b`.
#[no_mangle]
pub extern "C" fn uqf_census(
    x: u64,
    b: u64,
    kind: UqfCensusKind,
    squarefree_only: bool,
    out_count: *mut u64,
) -> UqfStatus {
    guard(|| {
        let slot = out(out_count, "out_count")?;
        let kind = match kind {
            UqfCensusKind::Xi => CensusKind::Xi,
            UqfCensusKind::SqrtAll => CensusKind::SqrtAll,
            UqfCensusKind::HalfAll => CensusKind::HalfAll,
        };
        *slot = survey::census(x, b, kind, squarefree_only)?;
        Ok(())
    })
}

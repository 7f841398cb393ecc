//! C ABI over `simpson-core`.
//!
//! Every function returns a [`SimpsonStatus`]; on failure the message is
//! available from [`simpson_last_error_message`] on the same thread. Tables
//! are opaque handles created by `simpson_table_*` and released with
//! [`simpson_table_free`]. Results are written to caller-owned structs.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use simpson_core::common_cause::{association_sign, invert, theorem1_scan, BKernel};
use simpson_core::contingency::{detect_simpson, JointTable, OrderingPattern, ParadoxStatus};
use simpson_core::datasets::{coarse_grain, LabeledTable};
use simpson_core::frequency::estimate_frequency;
use simpson_core::gaussian::{detect_continuous_simpson, matrix_from_rows, minimal_case, GaussianCauseModel};
use simpson_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimpsonStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidTable = 3,
    ZeroMargin = 4,
    NotAParadox = 5,
    SingularKernel = 6,
    InvalidCause = 7,
    NotPositiveDefinite = 8,
    DimensionMismatch = 9,
    Parse = 10,
    Panic = 99,
}

/// Opaque binary joint table.
pub struct SimpsonTable {
    inner: JointTable,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SimpsonParadoxReport {
    /// 0 no paradox, 1 aggregate less, 2 aggregate greater.
    pub status: i32,
    pub aggregate_gap: f64,
    pub fine_gaps: [f64; 2],
    /// 0 none, 1 SD1, 2 SD2.
    pub ordering: i32,
    pub b_dependence_sign: f64,
    pub aggregate: [f64; 2],
    pub fine_b: [f64; 2],
    pub fine_not_b: [f64; 2],
    pub b_given_a2: [f64; 2],
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SimpsonCauseView {
    /// `p(a1 | A2 = k, C = c)` at `[k * 2 + c]`.
    pub a1_given: [f64; 4],
    /// `[p(c|a2), p(c|ā2)]`.
    pub c_given: [f64; 2],
    pub min_joint_entry: f64,
    pub on_boundary: bool,
    /// Association signs within `c` and `c̄`.
    pub signs: [i8; 2],
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SimpsonScanSummary {
    pub n_kernels: u64,
    pub n_singular: u64,
    pub n_valid: u64,
    pub n_sign_agree: u64,
    pub n_boundary: u64,
    pub n_boundary_agree: u64,
    pub n_counterexamples: u64,
    pub fine_sign: i8,
    pub holds: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SimpsonFrequency {
    pub alpha: f64,
    pub fraction: f64,
    pub stderr_: f64,
    pub n_samples: u64,
    pub n_paradox: u64,
    pub n_zero_margin: u64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SimpsonContinuousReport {
    pub marginal: f64,
    pub conditional: f64,
    pub paradox: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SimpsonMinimalCase {
    pub marginal_a1a2: f64,
    pub b_conditional_a1a2: f64,
    pub x_conditional_a1a2: f64,
    pub epsilon: f64,
    pub paradox: bool,
    /// -1 without a paradox, else 1 when `sign(A12)` matches the conditional sign.
    pub fine_sign_matches_cause: i8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

fn status_of(err: &Error) -> SimpsonStatus {
    match err {
        Error::AllZeroCounts | Error::InvalidTable(_) | Error::Normalization(_) | Error::Schema(_) => {
            SimpsonStatus::InvalidTable
        }
        Error::InvalidPartition(_) | Error::InconsistentData(_) => SimpsonStatus::InvalidTable,
        Error::ZeroConditioningMargin(_) => SimpsonStatus::ZeroMargin,
        Error::NotAParadox => SimpsonStatus::NotAParadox,
        Error::SingularKernel { .. } => SimpsonStatus::SingularKernel,
        Error::InvalidCause(_) | Error::InvalidModel(_) => SimpsonStatus::InvalidCause,
        Error::NotPositiveDefinite(_) | Error::IllConditionedBlock(_) | Error::DegenerateB => {
            SimpsonStatus::NotPositiveDefinite
        }
        Error::DimensionMismatch(_) => SimpsonStatus::DimensionMismatch,
        Error::Parse(_) | Error::Io(_) => SimpsonStatus::Parse,
        _ => SimpsonStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics.
fn guard<F>(f: F) -> SimpsonStatus
where
    F: FnOnce() -> Result<(), (SimpsonStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SimpsonStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside simpson-core");
            SimpsonStatus::Panic
        }
    }
}

fn core<T>(r: simpson_core::Result<T>) -> Result<T, (SimpsonStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, (SimpsonStatus, String)> {
    // SAFETY: callers pass pointers that are either null or valid for reads.
    unsafe { p.as_ref() }.ok_or((SimpsonStatus::NullPointer, format!("{name} is null")))
}

fn non_null_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (SimpsonStatus, String)> {
    // SAFETY: callers pass pointers that are either null or valid for writes.
    unsafe { p.as_mut() }.ok_or((SimpsonStatus::NullPointer, format!("{name} is null")))
}

fn threads(n: usize) -> Option<usize> {
    (n > 0).then_some(n)
}

fn store_table(table: JointTable, out: *mut *mut SimpsonTable) -> Result<(), (SimpsonStatus, String)> {
    let out = non_null_mut(out, "out")?;
    *out = Box::into_raw(Box::new(SimpsonTable { inner: table }));
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn simpson_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn simpson_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Table from eight probabilities in `(a1, a2, b)` order, index `i*4 + k*2 + m`
/// with 0 for the event and 1 for its complement.
///
/// # Safety
/// `cells` must point to 8 readable doubles and `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn simpson_table_from_probabilities(cells: *const f64, out: *mut *mut SimpsonTable) -> SimpsonStatus {
    guard(|| {
        let cells = non_null(cells, "cells")?;
        // SAFETY: the caller guarantees 8 readable values.
        let slice = unsafe { std::slice::from_raw_parts(cells, 8) };
        let mut arr = [0.0; 8];
        arr.copy_from_slice(slice);
        store_table(core(JointTable::from_probabilities(arr))?, out)
    })
}

/// Table from eight counts, same order as the probabilities.
///
/// # Safety
/// `counts` must point to 8 readable values and `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn simpson_table_from_counts(counts: *const u64, out: *mut *mut SimpsonTable) -> SimpsonStatus {
    guard(|| {
        let counts = non_null(counts, "counts")?;
        // SAFETY: the caller guarantees 8 readable values.
        let slice = unsafe { std::slice::from_raw_parts(counts, 8) };
        let mut arr = [0u64; 8];
        arr.copy_from_slice(slice);
        store_table(core(JointTable::from_counts(arr))?, out)
    })
}

/// Table from the JSON dataset format. For a `B` with more than two levels
/// pass the indices merged into `b` in `b_levels`; otherwise pass null and 0.
///
/// # Safety
/// `json` must be a NUL-terminated string, `b_levels` null or readable for
/// `n_b_levels` entries, and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn simpson_table_from_json(
    json: *const c_char,
    b_levels: *const usize,
    n_b_levels: usize,
    out: *mut *mut SimpsonTable,
) -> SimpsonStatus {
    guard(|| {
        non_null(json, "json")?;
        // SAFETY: checked non-null; the caller guarantees NUL termination.
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|_| (SimpsonStatus::Parse, "json is not UTF-8".to_string()))?;
        let labeled = core(LabeledTable::parse_json(text))?;
        let table = if b_levels.is_null() {
            core(labeled.to_joint())?
        } else {
            // SAFETY: the caller guarantees `n_b_levels` readable entries.
            let levels = unsafe { std::slice::from_raw_parts(b_levels, n_b_levels) };
            core(coarse_grain(&labeled, levels))?
        };
        store_table(table, out)
    })
}

/// Releases a table. Null is ignored.
///
/// # Safety
/// `table` must be null or a handle from `simpson_table_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn simpson_table_free(table: *mut SimpsonTable) {
    if !table.is_null() {
        // SAFETY: the handle came from Box::into_raw in store_table.
        drop(unsafe { Box::from_raw(table) });
    }
}

/// Copies the eight normalised cells into `out`.
///
/// # Safety
/// `table` must be a live handle and `out` writable for 8 doubles.
#[no_mangle]
pub unsafe extern "C" fn simpson_table_cells(table: *const SimpsonTable, out: *mut f64) -> SimpsonStatus {
    guard(|| {
        let table = non_null(table, "table")?;
        non_null_mut(out, "out")?;
        // SAFETY: the caller guarantees 8 writable values.
        let out = unsafe { std::slice::from_raw_parts_mut(out, 8) };
        out.copy_from_slice(&table.inner.to_flat());
        Ok(())
    })
}

/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn simpson_detect(table: *const SimpsonTable, out: *mut SimpsonParadoxReport) -> SimpsonStatus {
    guard(|| {
        let table = non_null(table, "table")?;
        let out = non_null_mut(out, "out")?;
        let r = core(detect_simpson(&table.inner))?;
        *out = SimpsonParadoxReport {
            status: match r.status {
                ParadoxStatus::NoParadox => 0,
                ParadoxStatus::ParadoxAggregateLess => 1,
                ParadoxStatus::ParadoxAggregateGreater => 2,
            },
            aggregate_gap: r.aggregate_gap,
            fine_gaps: r.fine_gaps,
            ordering: match r.ordering_pattern {
                OrderingPattern::None => 0,
                OrderingPattern::SD1 => 1,
                OrderingPattern::SD2 => 2,
            },
            b_dependence_sign: r.b_dependence_sign,
            aggregate: r.aggregate,
            fine_b: r.fine_b,
            fine_not_b: r.fine_not_b,
            b_given_a2: r.b_given_a2,
        };
        Ok(())
    })
}

/// Inverts the table through the binary kernel `p(b|c) = beta`,
/// `p(b̄|c̄) = gamma`.
///
/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn simpson_invert(
    table: *const SimpsonTable,
    beta: f64,
    gamma: f64,
    out: *mut SimpsonCauseView,
) -> SimpsonStatus {
    guard(|| {
        let table = non_null(table, "table")?;
        let out = non_null_mut(out, "out")?;
        let kernel = core(BKernel::new(beta, gamma))?;
        let view = core(invert(&table.inner, &kernel))?;
        *out = SimpsonCauseView {
            a1_given: [view.a1_given[0][0], view.a1_given[0][1], view.a1_given[1][0], view.a1_given[1][1]],
            c_given: view.c_given,
            min_joint_entry: view.min_joint_entry,
            on_boundary: view.on_boundary(),
            signs: association_sign(&view),
        };
        Ok(())
    })
}

/// Samples `n_kernels` binary kernels and checks the sign of every valid
/// inversion against the fine-grained option. `threads = 0` uses the default
/// pool; the result does not depend on it.
///
/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn simpson_theorem1_scan(
    table: *const SimpsonTable,
    n_kernels: u64,
    seed: u64,
    n_threads: usize,
    out: *mut SimpsonScanSummary,
) -> SimpsonStatus {
    guard(|| {
        let table = non_null(table, "table")?;
        let out = non_null_mut(out, "out")?;
        let s = core(theorem1_scan(&table.inner, n_kernels, seed, threads(n_threads)))?;
        *out = SimpsonScanSummary {
            n_kernels: s.n_kernels,
            n_singular: s.n_singular,
            n_valid: s.n_valid,
            n_sign_agree: s.n_sign_agree,
            n_boundary: s.n_boundary,
            n_boundary_agree: s.n_boundary_agree,
            n_counterexamples: s.n_valid - s.n_sign_agree,
            fine_sign: s.fine_sign,
            holds: s.holds(),
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn simpson_estimate_frequency(
    alpha: f64,
    n_samples: u64,
    seed: u64,
    n_threads: usize,
    out: *mut SimpsonFrequency,
) -> SimpsonStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        let e = core(estimate_frequency(alpha, n_samples, seed, threads(n_threads)))?;
        *out = SimpsonFrequency {
            alpha: e.alpha,
            fraction: e.fraction,
            stderr_: e.stderr,
            n_samples: e.n_samples,
            n_paradox: e.n_paradox,
            n_zero_margin: e.n_zero_margin,
            seed: e.seed,
        };
        Ok(())
    })
}

/// Continuous test on a row-major 3×3 covariance of `(a1, a2, b)`.
///
/// # Safety
/// `cov` must be readable for 9 doubles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn simpson_gauss_detect(cov: *const f64, out: *mut SimpsonContinuousReport) -> SimpsonStatus {
    guard(|| {
        non_null(cov, "cov")?;
        let out = non_null_mut(out, "out")?;
        // SAFETY: the caller guarantees 9 readable values.
        let flat = unsafe { std::slice::from_raw_parts(cov, 9) };
        let rows: Vec<Vec<f64>> = flat.chunks(3).map(<[f64]>::to_vec).collect();
        let m = core(matrix_from_rows("cov", &rows))?;
        let r = core(detect_continuous_simpson(&m))?;
        *out = SimpsonContinuousReport { marginal: r.marginal, conditional: r.conditional, paradox: r.paradox };
        Ok(())
    })
}

/// Closed forms for the minimal model with row-major 2×2 `cov_a`, scalar
/// `cov_b` and `cov_x`, and coupling `(c11, c21, c31)`.
///
/// # Safety
/// `cov_a` must be readable for 4 doubles, `coupling` for 3, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn simpson_gauss_minimal(
    cov_a: *const f64,
    cov_b: f64,
    cov_x: f64,
    coupling: *const f64,
    out: *mut SimpsonMinimalCase,
) -> SimpsonStatus {
    guard(|| {
        non_null(cov_a, "cov_a")?;
        non_null(coupling, "coupling")?;
        let out = non_null_mut(out, "out")?;
        // SAFETY: the caller guarantees 4 and 3 readable values.
        let (a, c) = unsafe { (std::slice::from_raw_parts(cov_a, 4), std::slice::from_raw_parts(coupling, 3)) };
        let model = core(GaussianCauseModel::minimal([[a[0], a[1]], [a[2], a[3]]], cov_b, cov_x, [c[0], c[1], c[2]]))?;
        let t = core(minimal_case(&model))?;
        *out = SimpsonMinimalCase {
            marginal_a1a2: t.marginal_a1a2,
            b_conditional_a1a2: t.b_conditional_a1a2,
            x_conditional_a1a2: t.x_conditional_a1a2,
            epsilon: t.epsilon,
            paradox: t.paradox,
            fine_sign_matches_cause: t.fine_sign_matches_cause.map_or(-1, i8::from),
        };
        Ok(())
    })
}

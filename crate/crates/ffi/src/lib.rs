//! C ABI for the lrlab core: opaque ensemble handles, flat buffers, and
//! integer status codes. The matching header lives in `include/lrlab.h`
//! and is kept in sync by hand (the layout below is the contract).
//!
//! Conventions:
//! * Complex data crosses the boundary as separate `re`/`im` `f64` buffers;
//!   a null `im` pointer means "all imaginary parts are zero".
//! * Matrices are row-major, length `n1 * n2`.
//! * Every function returns an [`LrlabStatus`]; results go to out-pointers.
//! * Handles from `lrlab_ensemble_*` constructors must be released with
//!   `lrlab_ensemble_free`.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use lrlab::mat::{DenseMatrix, ScalarField, C64};
use lrlab::operators::{
    make_blind_deconv_ensemble, make_completion_ensemble, make_demixing_ensemble,
    make_gaussian_ensemble, make_phase_retrieval_ensemble, MeasurementOperator, Payload,
    PhaseRetrievalModel,
};
use lrlab::solvers::{nucnorm_min, psd_l1_fit, SolverOptions, SolverStatus};

/// Status codes shared with the C header.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    InvalidUtf8 = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Solver termination codes shared with the C header.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrlabSolverStatus {
    Converged = 0,
    MaxIters = 1,
    Infeasible = 2,
}

/// Opaque ensemble handle.
pub struct LrlabEnsemble {
    op: MeasurementOperator,
}

fn status_of(err: &lrlab::Error) -> LrlabStatus {
    match err {
        lrlab::Error::ShapeMismatch(_) => LrlabStatus::ShapeMismatch,
        _ => LrlabStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> LrlabStatus) -> LrlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => LrlabStatus::Panic,
    }
}

unsafe fn write_handle(
    out: *mut *mut LrlabEnsemble,
    op: Result<MeasurementOperator, lrlab::Error>,
) -> LrlabStatus {
    if out.is_null() {
        return LrlabStatus::NullPointer;
    }
    match op {
        Ok(op) => {
            *out = Box::into_raw(Box::new(LrlabEnsemble { op }));
            LrlabStatus::Ok
        }
        Err(e) => {
            *out = std::ptr::null_mut();
            status_of(&e)
        }
    }
}

unsafe fn complex_in(re: *const f64, im: *const f64, len: usize) -> Option<Vec<C64>> {
    if re.is_null() {
        return None;
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, len)) };
    Some(
        (0..len)
            .map(|i| C64::new(re[i], im.map_or(0.0, |s| s[i])))
            .collect(),
    )
}

unsafe fn complex_out(data: &[C64], re: *mut f64, im: *mut f64) -> LrlabStatus {
    if re.is_null() || im.is_null() {
        return LrlabStatus::NullPointer;
    }
    let re = std::slice::from_raw_parts_mut(re, data.len());
    let im = std::slice::from_raw_parts_mut(im, data.len());
    for (i, z) in data.iter().enumerate() {
        re[i] = z.re;
        im[i] = z.im;
    }
    LrlabStatus::Ok
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lrlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_gaussian(
    n1: usize,
    n2: usize,
    m: usize,
    seed: u64,
    out: *mut *mut LrlabEnsemble,
) -> LrlabStatus {
    guard(|| write_handle(out, make_gaussian_ensemble(n1, n2, m, seed)))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_completion(
    n1: usize,
    n2: usize,
    m: usize,
    seed: u64,
    out: *mut *mut LrlabEnsemble,
) -> LrlabStatus {
    guard(|| write_handle(out, make_completion_ensemble(n1, n2, m, seed)))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_blind_deconv(
    k: usize,
    n: usize,
    l: usize,
    seed: u64,
    out: *mut *mut LrlabEnsemble,
) -> LrlabStatus {
    guard(|| write_handle(out, make_blind_deconv_ensemble(k, n, l, seed)))
}

/// Model tags: 0 gaussian, 1 rademacher, 2 unimodular, 3 masked Fourier.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_phase_retrieval(
    n: usize,
    m: usize,
    model: u32,
    seed: u64,
    out: *mut *mut LrlabEnsemble,
) -> LrlabStatus {
    guard(|| {
        let model = match model {
            0 => PhaseRetrievalModel::Gaussian,
            1 => PhaseRetrievalModel::Rademacher,
            2 => PhaseRetrievalModel::Unimodular,
            3 => PhaseRetrievalModel::MaskedFourier,
            _ => return LrlabStatus::InvalidArgument,
        };
        write_handle(out, make_phase_retrieval_ensemble(n, m, model, seed))
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_demixing(
    k: usize,
    n: usize,
    l: usize,
    r: usize,
    seed: u64,
    out: *mut *mut LrlabEnsemble,
) -> LrlabStatus {
    guard(|| write_handle(out, make_demixing_ensemble(k, n, l, r, seed)))
}

/// Rebuild an ensemble from its plain-text descriptor.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_from_descriptor(
    text: *const c_char,
    out: *mut *mut LrlabEnsemble,
) -> LrlabStatus {
    guard(|| {
        if text.is_null() {
            return LrlabStatus::NullPointer;
        }
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return LrlabStatus::InvalidUtf8;
        };
        write_handle(out, MeasurementOperator::from_descriptor(text))
    })
}

/// # Safety
/// `handle` must come from an `lrlab_ensemble_*` constructor (or be null).
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_free(handle: *mut LrlabEnsemble) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_dims(
    handle: *const LrlabEnsemble,
    n1: *mut usize,
    n2: *mut usize,
    m: *mut usize,
) -> LrlabStatus {
    guard(|| {
        if handle.is_null() || n1.is_null() || n2.is_null() || m.is_null() {
            return LrlabStatus::NullPointer;
        }
        let op = &(*handle).op;
        let (a, b) = op.input_shape();
        *n1 = a;
        *n2 = b;
        *m = op.n_measurements();
        LrlabStatus::Ok
    })
}

/// Serializes the descriptor into `buf` (NUL-terminated). `written`
/// receives the full length including the terminator.
///
/// # Safety
/// `buf` must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_descriptor(
    handle: *const LrlabEnsemble,
    buf: *mut c_char,
    cap: usize,
    written: *mut usize,
) -> LrlabStatus {
    guard(|| {
        if handle.is_null() || buf.is_null() || written.is_null() {
            return LrlabStatus::NullPointer;
        }
        let text = (*handle).op.to_descriptor();
        let bytes = text.as_bytes();
        *written = bytes.len() + 1;
        if cap < bytes.len() + 1 {
            return LrlabStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
        *buf.add(bytes.len()) = 0;
        LrlabStatus::Ok
    })
}

/// `y = A(X)`; `x_im` may be null for real input.
///
/// # Safety
/// Buffer lengths: `x_*` are `n1 * n2`, `y_*` are `m`.
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_apply(
    handle: *const LrlabEnsemble,
    x_re: *const f64,
    x_im: *const f64,
    x_len: usize,
    y_re: *mut f64,
    y_im: *mut f64,
    y_len: usize,
) -> LrlabStatus {
    guard(|| {
        if handle.is_null() {
            return LrlabStatus::NullPointer;
        }
        let op = &(*handle).op;
        let (n1, n2) = op.input_shape();
        if x_len != n1 * n2 || y_len != op.n_measurements() {
            return LrlabStatus::ShapeMismatch;
        }
        let Some(data) = complex_in(x_re, x_im, x_len) else {
            return LrlabStatus::NullPointer;
        };
        let x = match DenseMatrix::new(n1, n2, data, ScalarField::Complex) {
            Ok(x) => x,
            Err(e) => return status_of(&e),
        };
        match op.apply(&x) {
            Ok(y) => complex_out(&y, y_re, y_im),
            Err(e) => status_of(&e),
        }
    })
}

/// `X = A^*(y)`; `y_im` may be null for real data.
///
/// # Safety
/// Buffer lengths: `y_*` are `m`, `x_*` are `n1 * n2`.
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_adjoint(
    handle: *const LrlabEnsemble,
    y_re: *const f64,
    y_im: *const f64,
    y_len: usize,
    x_re: *mut f64,
    x_im: *mut f64,
    x_len: usize,
) -> LrlabStatus {
    guard(|| {
        if handle.is_null() {
            return LrlabStatus::NullPointer;
        }
        let op = &(*handle).op;
        let (n1, n2) = op.input_shape();
        if y_len != op.n_measurements() || x_len != n1 * n2 {
            return LrlabStatus::ShapeMismatch;
        }
        let Some(y) = complex_in(y_re, y_im, y_len) else {
            return LrlabStatus::NullPointer;
        };
        match op.adjoint(&y) {
            Ok(x) => complex_out(x.data(), x_re, x_im),
            Err(e) => status_of(&e),
        }
    })
}

/// Power-iteration estimate of the operator norm. `converged` receives 0/1.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrlab_ensemble_operator_norm(
    handle: *const LrlabEnsemble,
    tol: f64,
    max_iters: usize,
    value: *mut f64,
    converged: *mut i32,
) -> LrlabStatus {
    guard(|| {
        if handle.is_null() || value.is_null() || converged.is_null() {
            return LrlabStatus::NullPointer;
        }
        match (*handle).op.operator_norm(tol, max_iters) {
            Ok(est) => {
                *value = est.value;
                *converged = est.converged as i32;
                LrlabStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Constrained nuclear-norm minimization through the C surface.
/// `x_hat_*` receive the row-major solution; `y_im` may be null.
///
/// # Safety
/// Buffer lengths: `y_*` are `m`, `x_hat_*` are `n1 * n2`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn lrlab_nucnorm_min(
    handle: *const LrlabEnsemble,
    y_re: *const f64,
    y_im: *const f64,
    y_len: usize,
    tau: f64,
    max_iters: usize,
    x_hat_re: *mut f64,
    x_hat_im: *mut f64,
    x_len: usize,
    objective: *mut f64,
    residual: *mut f64,
    iterations: *mut usize,
    solver_status: *mut LrlabSolverStatus,
) -> LrlabStatus {
    guard(|| {
        if handle.is_null()
            || objective.is_null()
            || residual.is_null()
            || iterations.is_null()
            || solver_status.is_null()
        {
            return LrlabStatus::NullPointer;
        }
        let op = &(*handle).op;
        let (n1, n2) = op.input_shape();
        if y_len != op.n_measurements() || x_len != n1 * n2 {
            return LrlabStatus::ShapeMismatch;
        }
        let Some(y) = complex_in(y_re, y_im, y_len) else {
            return LrlabStatus::NullPointer;
        };
        let opts = SolverOptions { max_iters: max_iters.max(1), ..SolverOptions::default() };
        match nucnorm_min(op, &y, tau, &opts) {
            Ok(res) => {
                let s = complex_out(res.x_hat.data(), x_hat_re, x_hat_im);
                if s != LrlabStatus::Ok {
                    return s;
                }
                *objective = res.objective;
                *residual = res.residual;
                *iterations = res.iterations;
                *solver_status = match res.status {
                    SolverStatus::Converged => LrlabSolverStatus::Converged,
                    SolverStatus::MaxIters => LrlabSolverStatus::MaxIters,
                    SolverStatus::Infeasible => LrlabSolverStatus::Infeasible,
                };
                LrlabStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// l1 fit over the PSD cone for a phase-retrieval ensemble handle.
/// `y` is real; `x_hat_*` receive the Hermitian lifted solution.
///
/// # Safety
/// Buffer lengths: `y` is `m`, `x_hat_*` are `n * n`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn lrlab_psd_l1_fit(
    handle: *const LrlabEnsemble,
    y: *const f64,
    y_len: usize,
    max_iters: usize,
    x_hat_re: *mut f64,
    x_hat_im: *mut f64,
    x_len: usize,
    objective: *mut f64,
    iterations: *mut usize,
    solver_status: *mut LrlabSolverStatus,
) -> LrlabStatus {
    guard(|| {
        if handle.is_null()
            || y.is_null()
            || objective.is_null()
            || iterations.is_null()
            || solver_status.is_null()
        {
            return LrlabStatus::NullPointer;
        }
        let op = &(*handle).op;
        let Payload::PhaseRetrieval(p) = op.payload() else {
            return LrlabStatus::InvalidArgument;
        };
        let (n1, n2) = op.input_shape();
        if y_len != op.n_measurements() || x_len != n1 * n2 {
            return LrlabStatus::ShapeMismatch;
        }
        let y = std::slice::from_raw_parts(y, y_len);
        let opts = SolverOptions { max_iters: max_iters.max(1), ..SolverOptions::default() };
        match psd_l1_fit(&p.vectors, y, &opts) {
            Ok(res) => {
                let s = complex_out(res.x_hat.data(), x_hat_re, x_hat_im);
                if s != LrlabStatus::Ok {
                    return s;
                }
                *objective = res.objective;
                *iterations = res.iterations;
                *solver_status = match res.status {
                    SolverStatus::Converged => LrlabSolverStatus::Converged,
                    SolverStatus::MaxIters => LrlabSolverStatus::MaxIters,
                    SolverStatus::Infeasible => LrlabSolverStatus::Infeasible,
                };
                LrlabStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

//! C ABI for the fourier-lcu library.
//!
//! Handles are opaque pointers owned by the library; every constructor has a
//! matching `_free`. Functions return [`LcuStatus`]; on failure,
//! [`lcu_last_error_message`] yields a thread-local description. All pointers
//! must be non-null unless documented otherwise, and a handle must not be
//! used after it is freed.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::sync::Arc;

use fourier_lcu::lcu::diagonal::{
    build_diagonal_lcu, hamming_penalty_values, indicator_window_values, DiagonalLcu,
};
use fourier_lcu::lcu::su2::{spin_sectors, wigner_small_d, XyGammaEstimator};
use fourier_lcu::problems::{build_dks, random_regular_graph};
use fourier_lcu::qaoa::warm_start_feasibility;
use fourier_lcu::qpd::{domination_check, LcuChannel};
use fourier_lcu::sim::{Circuit, GateOp};

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: impl AsRef<str>) {
    let sanitized = message.as_ref().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LcuStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    InternalError = 4,
}

fn fail(status: LcuStatus, message: impl AsRef<str>) -> LcuStatus {
    set_last_error(message);
    status
}

fn from_error(err: fourier_lcu::Error) -> LcuStatus {
    use fourier_lcu::Error::*;
    let status = match err {
        QubitCountOutOfRange { .. } | TargetOutOfRange { .. } | InstanceTooLarge(_) => {
            LcuStatus::OutOfRange
        }
        Io(_) => LcuStatus::InternalError,
        _ => LcuStatus::InvalidArgument,
    };
    fail(status, err.to_string())
}

/// Message describing the most recent failure on this thread. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lcu_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lcu_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque discrete-Fourier decomposition of a diagonal unitary.
pub struct LcuDiagonal {
    inner: DiagonalLcu,
}

/// Builds the LCU of `e^{-i gamma f(k)}` from `f(0..=m)` (`len = m + 1`).
///
/// # Safety
/// `f_values` must point to `len` doubles and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcu_diagonal_build(
    f_values: *const f64,
    len: usize,
    gamma: f64,
    out: *mut *mut LcuDiagonal,
) -> LcuStatus {
    if f_values.is_null() || out.is_null() {
        return fail(LcuStatus::NullPointer, "null pointer argument");
    }
    let values = std::slice::from_raw_parts(f_values, len);
    match build_diagonal_lcu(values, gamma) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(LcuDiagonal { inner }));
            LcuStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Builds the LCU of the quadratic Hamming-weight penalty
/// `f(k) = (k - b)^2` on `0..=n`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcu_diagonal_build_hamming_penalty(
    n: usize,
    b: usize,
    gamma: f64,
    out: *mut *mut LcuDiagonal,
) -> LcuStatus {
    if out.is_null() {
        return fail(LcuStatus::NullPointer, "null pointer argument");
    }
    let result = hamming_penalty_values(n, b).and_then(|f| build_diagonal_lcu(&f, gamma));
    match result {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(LcuDiagonal { inner }));
            LcuStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Builds the LCU of the indicator window penalty on `0..=m` (0 inside
/// `[l, u]`, 1 outside).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcu_diagonal_build_indicator(
    m: usize,
    l: usize,
    u: usize,
    gamma: f64,
    out: *mut *mut LcuDiagonal,
) -> LcuStatus {
    if out.is_null() {
        return fail(LcuStatus::NullPointer, "null pointer argument");
    }
    let result = indicator_window_values(m, l, u).and_then(|f| build_diagonal_lcu(&f, gamma));
    match result {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(LcuDiagonal { inner }));
            LcuStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Number of branches (`m + 1`). Zero for a null handle.
///
/// # Safety
/// `lcu` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lcu_diagonal_branch_count(lcu: *const LcuDiagonal) -> usize {
    lcu.as_ref().map_or(0, |l| l.inner.m() + 1)
}

/// Quasi-probability cost `Gamma = ||c||_1^2`. NaN for a null handle.
///
/// # Safety
/// `lcu` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lcu_diagonal_gamma_cost(lcu: *const LcuDiagonal) -> f64 {
    lcu.as_ref().map_or(f64::NAN, |l| l.inner.gamma_cost())
}

/// Max-norm reconstruction error over the domain of `f`.
///
/// # Safety
/// `lcu` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lcu_diagonal_reconstruction_error(lcu: *const LcuDiagonal) -> f64 {
    lcu.as_ref().map_or(f64::NAN, |l| l.inner.reconstruction_error())
}

/// Coefficient `c_j` and Fourier angle `theta_j` of branch `j`.
///
/// # Safety
/// All pointers must be valid; `lcu` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lcu_diagonal_branch(
    lcu: *const LcuDiagonal,
    j: usize,
    coeff_re: *mut f64,
    coeff_im: *mut f64,
    theta: *mut f64,
) -> LcuStatus {
    let Some(handle) = lcu.as_ref() else {
        return fail(LcuStatus::NullPointer, "null handle");
    };
    if coeff_re.is_null() || coeff_im.is_null() || theta.is_null() {
        return fail(LcuStatus::NullPointer, "null output pointer");
    }
    if j > handle.inner.m() {
        return fail(LcuStatus::OutOfRange, format!("branch {j} out of range"));
    }
    *coeff_re = handle.inner.coeffs()[j].re;
    *coeff_im = handle.inner.coeffs()[j].im;
    *theta = handle.inner.thetas()[j];
    LcuStatus::Ok
}

/// Minimum slack of the sampling domination bound `Gamma * p_lcu - p` over
/// all bitstrings, for the Hamming-weight channel of this decomposition
/// applied to the uniform superposition on `n` qubits.
///
/// # Safety
/// `lcu` must be a live handle; `slack` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcu_diagonal_domination_slack(
    lcu: *const LcuDiagonal,
    n: usize,
    slack: *mut f64,
) -> LcuStatus {
    let Some(handle) = lcu.as_ref() else {
        return fail(LcuStatus::NullPointer, "null handle");
    };
    if slack.is_null() {
        return fail(LcuStatus::NullPointer, "null output pointer");
    }
    let weight = Arc::new(|x: u64| x.count_ones() as usize);
    let result = LcuChannel::from_diagonal_lcu(&handle.inner, n, weight).and_then(|channel| {
        let mut prepare = Circuit::new(n);
        for q in 0..n {
            prepare.push(GateOp::h(q))?;
        }
        domination_check(&channel, &prepare)
    });
    match result {
        Ok(v) => {
            *slack = v;
            LcuStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Frees a diagonal-LCU handle. Null is a no-op.
///
/// # Safety
/// `lcu` must be a handle returned by a constructor, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn lcu_diagonal_free(lcu: *mut LcuDiagonal) {
    if !lcu.is_null() {
        drop(Box::from_raw(lcu));
    }
}

/// `Sum_j (2j+1) m_j` over the spin sectors of `n` qubits, as a check value;
/// equals `2^n`. Returns 0 when `n` is out of range (1..=64) or the sum
/// exceeds the return type (`n = 64` is reported as `u64::MAX`).
#[no_mangle]
pub extern "C" fn lcu_spin_dimension_sum(n: usize) -> u64 {
    match spin_sectors(n) {
        Ok(s) => u64::try_from(s.dimension_sum()).unwrap_or(u64::MAX),
        Err(_) => 0,
    }
}

/// Cubic bound `(n+1)(n+2)(n+3)/6` on the SU(2) LCU cost. NaN when out of
/// range.
#[no_mangle]
pub extern "C" fn lcu_su2_gamma_bound(n: usize) -> f64 {
    spin_sectors(n).map_or(f64::NAN, |s| s.gamma_bound())
}

/// Wigner small-d matrix element `d^j_{m1 m2}(theta)` with doubled
/// half-integer labels.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcu_wigner_small_d(
    twice_j: i64,
    twice_m1: i64,
    twice_m2: i64,
    theta: f64,
    out: *mut f64,
) -> LcuStatus {
    if out.is_null() {
        return fail(LcuStatus::NullPointer, "null output pointer");
    }
    match wigner_small_d(twice_j, twice_m1, twice_m2, theta) {
        Ok(v) => {
            *out = v;
            LcuStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Monte-Carlo estimate of the XY-mixer LCU cost `Gamma(beta)` from `samples`
/// Haar draws, with its standard error.
///
/// # Safety
/// `gamma_hat` and `sigma` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lcu_xy_gamma_estimate(
    n: usize,
    beta: f64,
    samples: usize,
    seed: u64,
    gamma_hat: *mut f64,
    sigma: *mut f64,
) -> LcuStatus {
    if gamma_hat.is_null() || sigma.is_null() {
        return fail(LcuStatus::NullPointer, "null output pointer");
    }
    if samples == 0 {
        return fail(LcuStatus::InvalidArgument, "samples must be positive");
    }
    match XyGammaEstimator::from_seed(n, samples, seed) {
        Ok(estimator) => {
            let (g, s) = estimator.estimate(beta);
            *gamma_hat = g;
            *sigma = s;
            LcuStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Binomial probability that the warm-start state has Hamming weight `k`.
#[no_mangle]
pub extern "C" fn lcu_warm_start_feasibility(n: usize, k: usize) -> f64 {
    if k > n || n == 0 {
        return f64::NAN;
    }
    warm_start_feasibility(n, k)
}

/// Exact feasible optimum of a densest-k-subgraph instance on a random
/// d-regular graph, for quick cross-language smoke tests.
///
/// # Safety
/// `optimum` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcu_dks_regular_optimum(
    n: usize,
    d: usize,
    k: usize,
    seed: u64,
    optimum: *mut f64,
) -> LcuStatus {
    if optimum.is_null() {
        return fail(LcuStatus::NullPointer, "null output pointer");
    }
    let result = random_regular_graph(n, d, seed)
        .and_then(|g| build_dks(g, k))
        .and_then(|inst| inst.exact_optimum());
    match result {
        Ok((best, _)) => {
            *optimum = best;
            LcuStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

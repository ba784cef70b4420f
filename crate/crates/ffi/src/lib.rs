//! C ABI over the kellygrowth core.
//!
//! Conventions:
//!
//! * every fallible function returns a [`KgStatus`]; outputs go through
//!   caller-owned pointers and are written only on `KG_STATUS_OK`;
//! * matrices are dense, row-major, `m * m` doubles;
//! * parameter sets live behind the opaque [`KgParams`] handle, created by
//!   `kg_params_new` / `kg_params_from_covariance` and released with
//!   `kg_params_free`;
//! * on failure `kg_last_error_message` describes the error. The pointer is
//!   owned by the library and stays valid until the next call on the same
//!   thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use kellygrowth::backtest::drawdown_indices;
use kellygrowth::fund_eval::{reverse_engineer, ReturnSummary, RiskClass};
use kellygrowth::nalgebra::{DMatrix, DVector};
use kellygrowth::{
    constrained_kelly, expected_log_growth, fractional_kelly, fractional_profile, full_kelly,
    kelly_fraction_estimate, log_return_variance, sharpe_ratio, Error, GbmParams, LeverageVector, MarketConfig,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgStatus {
    Ok = 0,
    NullPointer = 1,
    DimensionMismatch = 2,
    NotPositiveDefinite = 3,
    IllConditioned = 4,
    InvalidArgument = 5,
    NotInvertible = 6,
    InsufficientData = 7,
    Internal = 99,
}

impl From<&Error> for KgStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DimensionMismatch { .. } => KgStatus::DimensionMismatch,
            Error::NotPositiveDefinite { .. } => KgStatus::NotPositiveDefinite,
            Error::IllConditioned { .. } => KgStatus::IllConditioned,
            Error::NotInvertible(_) => KgStatus::NotInvertible,
            Error::InsufficientData(_) => KgStatus::InsufficientData,
            _ => KgStatus::InvalidArgument,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgRiskClass {
    Fractional = 0,
    SubOptimal = 1,
    CollapseBound = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KgGrowthProfile {
    pub expected_log_growth: f64,
    pub log_return_variance: f64,
    pub sharpe: f64,
    /// NaN when the leverage is not a multiple of the full-Kelly vector.
    pub kelly_fraction: f64,
    pub over_kelly: bool,
}

/// Opaque parameter set.
pub struct KgParams {
    inner: GbmParams,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(KgStatus);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        set_last_error(&e.to_string());
        Fail(KgStatus::from(&e))
    }
}

fn null(what: &str) -> Fail {
    set_last_error(&format!("null pointer: {what}"));
    Fail(KgStatus::NullPointer)
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> KgStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KgStatus::Ok,
        Ok(Err(Fail(s))) => s,
        Err(_) => {
            set_last_error("internal panic");
            KgStatus::Internal
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn params<'a>(p: *const KgParams) -> Result<&'a GbmParams, Fail> {
    p.as_ref().map(|p| &p.inner).ok_or_else(|| null("params"))
}

fn market(r: f64) -> Result<MarketConfig, Fail> {
    Ok(MarketConfig::new(r, 260)?)
}

unsafe fn write_vector(k: &LeverageVector, dst: *mut f64) -> Result<(), Fail> {
    if dst.is_null() {
        return Err(null("k_out"));
    }
    std::slice::from_raw_parts_mut(dst, k.len()).copy_from_slice(k.as_slice());
    Ok(())
}

/// Message for the most recent failure on this thread, or an empty string.
#[no_mangle]
pub extern "C" fn kg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parameters from drift `mu[m]`, volatilities `sigma[m]` and correlation
/// `corr[m*m]`.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kg_params_new(
    m: usize,
    mu: *const f64,
    sigma: *const f64,
    corr: *const f64,
    out_params: *mut *mut KgParams,
) -> KgStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        let p = GbmParams::new(
            DVector::from_column_slice(slice(mu, m, "mu")?),
            DVector::from_column_slice(slice(sigma, m, "sigma")?),
            DMatrix::from_row_slice(m, m, slice(corr, m * m, "corr")?),
        )?;
        *slot = Box::into_raw(Box::new(KgParams { inner: p }));
        Ok(())
    })
}

/// Parameters from drift `mu[m]` and covariance `cov[m*m]`.
///
/// # Safety
/// As for [`kg_params_new`].
#[no_mangle]
pub unsafe extern "C" fn kg_params_from_covariance(
    m: usize,
    mu: *const f64,
    cov: *const f64,
    out_params: *mut *mut KgParams,
) -> KgStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        let p = GbmParams::from_covariance(
            DVector::from_column_slice(slice(mu, m, "mu")?),
            &DMatrix::from_row_slice(m, m, slice(cov, m * m, "cov")?),
        )?;
        *slot = Box::into_raw(Box::new(KgParams { inner: p }));
        Ok(())
    })
}

/// # Safety
/// `p` must come from a constructor above and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn kg_params_free(p: *mut KgParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of instruments, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kg_params_dim(p: *const KgParams) -> usize {
    p.as_ref().map_or(0, |p| p.inner.dim())
}

/// # Safety
/// `p` must be a live handle and `out_sharpe` valid.
#[no_mangle]
pub unsafe extern "C" fn kg_sharpe_ratio(p: *const KgParams, risk_free_rate: f64, out_sharpe: *mut f64) -> KgStatus {
    guard(|| {
        let s = sharpe_ratio(params(p)?, &market(risk_free_rate)?);
        *out(out_sharpe, "out_sharpe")? = s;
        Ok(())
    })
}

/// Writes the growth-optimal leverage to `k_out[m]`.
///
/// # Safety
/// `k_out` must have room for `kg_params_dim(p)` doubles.
#[no_mangle]
pub unsafe extern "C" fn kg_full_kelly(p: *const KgParams, risk_free_rate: f64, k_out: *mut f64) -> KgStatus {
    guard(|| write_vector(&full_kelly(params(p)?, &market(risk_free_rate)?), k_out))
}

/// # Safety
/// As for [`kg_full_kelly`].
#[no_mangle]
pub unsafe extern "C" fn kg_fractional_kelly(
    p: *const KgParams,
    risk_free_rate: f64,
    alpha: f64,
    k_out: *mut f64,
) -> KgStatus {
    guard(|| write_vector(&fractional_kelly(params(p)?, &market(risk_free_rate)?, alpha)?, k_out))
}

/// Growth-optimal leverage with total leverage fixed at `kappa0`.
///
/// # Safety
/// As for [`kg_full_kelly`]; `lambda_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn kg_constrained_kelly(
    p: *const KgParams,
    risk_free_rate: f64,
    kappa0: f64,
    k_out: *mut f64,
    lambda_out: *mut f64,
) -> KgStatus {
    guard(|| {
        let sol = constrained_kelly(params(p)?, &market(risk_free_rate)?, kappa0)?;
        write_vector(&sol.k, k_out)?;
        if let Some(l) = lambda_out.as_mut() {
            *l = sol.lambda;
        }
        Ok(())
    })
}

/// # Safety
/// `k` must hold `kg_params_dim(p)` doubles; `out_growth` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kg_expected_log_growth(
    p: *const KgParams,
    risk_free_rate: f64,
    k: *const f64,
    out_growth: *mut f64,
) -> KgStatus {
    guard(|| {
        let p = params(p)?;
        let k = LeverageVector::from(slice(k, p.dim(), "k")?.to_vec());
        *out(out_growth, "out_growth")? = expected_log_growth(p, &k, &market(risk_free_rate)?)?;
        Ok(())
    })
}

/// # Safety
/// As for [`kg_expected_log_growth`].
#[no_mangle]
pub unsafe extern "C" fn kg_log_return_variance(p: *const KgParams, k: *const f64, out_variance: *mut f64) -> KgStatus {
    guard(|| {
        let p = params(p)?;
        let k = LeverageVector::from(slice(k, p.dim(), "k")?.to_vec());
        *out(out_variance, "out_variance")? = log_return_variance(p, &k)?;
        Ok(())
    })
}

/// Implied Kelly fraction of `k`; NaN when `k` is not a multiple of the
/// full-Kelly vector.
///
/// # Safety
/// As for [`kg_expected_log_growth`].
#[no_mangle]
pub unsafe extern "C" fn kg_kelly_fraction_estimate(
    p: *const KgParams,
    risk_free_rate: f64,
    k: *const f64,
    out_alpha: *mut f64,
) -> KgStatus {
    guard(|| {
        let p = params(p)?;
        let k = LeverageVector::from(slice(k, p.dim(), "k")?.to_vec());
        *out(out_alpha, "out_alpha")? = kelly_fraction_estimate(&k, p, &market(risk_free_rate)?).unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Growth and variance of a fractional Kelly book from its Sharpe ratio.
///
/// # Safety
/// `out_profile` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kg_fractional_profile(
    sharpe: f64,
    alpha: f64,
    risk_free_rate: f64,
    out_profile: *mut KgGrowthProfile,
) -> KgStatus {
    guard(|| {
        let g = fractional_profile(sharpe, alpha, &market(risk_free_rate)?)?;
        *out(out_profile, "out_profile")? = KgGrowthProfile {
            expected_log_growth: g.expected_log_growth,
            log_return_variance: g.log_return_variance,
            sharpe: g.sharpe,
            kelly_fraction: g.kelly_fraction.unwrap_or(f64::NAN),
            over_kelly: g.over_kelly,
        };
        Ok(())
    })
}

/// Implied Kelly fraction and Sharpe ratio from annualized mean log-return
/// and log-return variance.
///
/// # Safety
/// Output pointers must be valid; `out_class` may be null.
#[no_mangle]
pub unsafe extern "C" fn kg_reverse_engineer(
    mean_log_return: f64,
    log_return_variance: f64,
    risk_free_rate: f64,
    out_alpha: *mut f64,
    out_sharpe: *mut f64,
    out_class: *mut KgRiskClass,
) -> KgStatus {
    guard(|| {
        let summary = ReturnSummary {
            mean_log_return,
            log_return_variance,
            n_observations: 0,
            periods_per_year: 1.0,
        };
        let r = reverse_engineer(&summary, &market(risk_free_rate)?)?;
        let alpha = out(out_alpha, "out_alpha")?;
        let sharpe = out(out_sharpe, "out_sharpe")?;
        *alpha = r.alpha;
        *sharpe = r.sharpe;
        if let Some(c) = out_class.as_mut() {
            *c = match r.risk_class {
                RiskClass::Fractional => KgRiskClass::Fractional,
                RiskClass::SubOptimal => KgRiskClass::SubOptimal,
                RiskClass::CollapseBound => KgRiskClass::CollapseBound,
            };
        }
        Ok(())
    })
}

/// Maximum drawdown of `values[n]`: fraction plus peak and trough indices.
///
/// # Safety
/// `values` must hold `n` doubles; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kg_max_drawdown(
    values: *const f64,
    n: usize,
    out_fraction: *mut f64,
    out_peak: *mut usize,
    out_trough: *mut usize,
) -> KgStatus {
    guard(|| {
        let (f, p, t) = drawdown_indices(slice(values, n, "values")?)?;
        let fraction = out(out_fraction, "out_fraction")?;
        let peak = out(out_peak, "out_peak")?;
        let trough = out(out_trough, "out_trough")?;
        *fraction = f;
        *peak = p;
        *trough = t;
        Ok(())
    })
}

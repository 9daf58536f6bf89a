//! C interface to `ncwishart`.
//!
//! Objects are opaque handles created by the `ncw_distribution_new` and
//! `ncw_system_from_*` constructors and released with the matching `*_free`. Every fallible call returns an [`NcwStatus`]; on
//! failure a message for the calling thread is available from
//! [`ncw_last_error_message`]. Outputs are written only on success. Panics
//! never cross the boundary: they are reported as `NCW_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use nalgebra::{Complex, DMatrix};
use ncwishart::{
    asymptotic_coeffs, diversity_order, outage_asymptotic, EigenvalueDistribution, Error, MbConfig, MbSystem,
    Modulation, RiceanChannel, WishartSpec,
};

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcwStatus {
    Ok = 0,
    NullPointer = 1,
    /// Argument outside the mathematical domain.
    Domain = 2,
    Dimension = 3,
    /// Noncentrality eigenvalues closer than the supported gap.
    DegenerateSpectrum = 4,
    Overflow = 5,
    /// Quadrature missed its tolerance; the message carries the estimate.
    Quadrature = 6,
    /// Hermitian eigensolver did not converge.
    Eigensolver = 7,
    /// Invalid configuration (modulations, powers, subchannel counts).
    Config = 8,
    /// An asymptotic coefficient came out nonpositive.
    NonPositiveCoefficient = 9,
    InvalidString = 10,
    Panic = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> NcwStatus {
    match e {
        Error::Domain(_) | Error::NuttallParity { .. } => NcwStatus::Domain,
        Error::Dimension(_) | Error::DimensionCap { .. } => NcwStatus::Dimension,
        Error::DegenerateSpectrum { .. } => NcwStatus::DegenerateSpectrum,
        Error::Overflow(_) => NcwStatus::Overflow,
        Error::Quadrature { .. } => NcwStatus::Quadrature,
        Error::Eigensolver { .. } => NcwStatus::Eigensolver,
        Error::Config(_) => NcwStatus::Config,
        Error::NonPositiveCoefficient { .. } => NcwStatus::NonPositiveCoefficient,
    }
}

/// Status and message of a failed call.
struct Fail(NcwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NcwStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NcwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NcwStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            NcwStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`) and returns the full message length
/// excluding the terminator; 0 when there is no message.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn ncw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ncw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Eigenvalue laws of one noncentral Wishart spectrum.
pub struct NcwDistribution {
    inner: EigenvalueDistribution,
}

/// A Ricean channel and its eigenvalue laws.
pub struct NcwSystem {
    inner: MbSystem,
}

/// Modulation constants of `SER ≈ α Q(√(2βγ))`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcwModulation {
    pub alpha: f64,
    pub beta: f64,
}

/// Builds the distribution of `W ~ W_s(t, I, Ω)` from the nonzero
/// noncentrality eigenvalues `lambdas[0..rank]` (descending, distinct).
///
/// # Safety
/// `lambdas` must be valid for `rank` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncw_distribution_new(
    s: usize,
    t: usize,
    lambdas: *const f64,
    rank: usize,
    out_dist: *mut *mut NcwDistribution,
) -> NcwStatus {
    guard(|| {
        let dst = out(out_dist, "out_dist")?;
        let l = slice_in(lambdas, rank, "lambdas")?;
        let inner = EigenvalueDistribution::new(WishartSpec::new(s, t, l.to_vec())?)?;
        *dst = Box::into_raw(Box::new(NcwDistribution { inner }));
        Ok(())
    })
}

/// # Safety
/// `dist` must come from [`ncw_distribution_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ncw_distribution_free(dist: *mut NcwDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// `F_{φ_k}(x)` with the estimated decimal digits lost to cancellation
/// (`digits_lost` may be null).
///
/// # Safety
/// Pointers must be valid or, for `digits_lost`, null.
#[no_mangle]
pub unsafe extern "C" fn ncw_cdf_kth(
    dist: *const NcwDistribution,
    k: usize,
    x: f64,
    value: *mut f64,
    digits_lost: *mut f64,
) -> NcwStatus {
    guard(|| {
        let d = handle(dist, "dist")?;
        let v = out(value, "value")?;
        let e = d.inner.cdf_kth_eval(k, x)?;
        *v = e.value;
        if let Some(dl) = digits_lost.as_mut() {
            *dl = e.digits_lost;
        }
        Ok(())
    })
}

/// All `s` ordered CDFs at `x` into `values[0..len]`; `len` must equal `s`.
///
/// # Safety
/// `values` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ncw_cdf_all(
    dist: *const NcwDistribution,
    x: f64,
    values: *mut f64,
    len: usize,
) -> NcwStatus {
    guard(|| {
        let d = handle(dist, "dist")?;
        let s = d.inner.spec().s();
        if len != s {
            return Err(Fail(NcwStatus::Dimension, format!("values holds {len} entries, need s = {s}")));
        }
        let dst = slice_out(values, len, "values")?;
        dst.copy_from_slice(&d.inner.cdf_all(x)?);
        Ok(())
    })
}

/// Marginal density `f_{φ_k}(x)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncw_pdf_kth(dist: *const NcwDistribution, k: usize, x: f64, value: *mut f64) -> NcwStatus {
    guard(|| {
        let d = handle(dist, "dist")?;
        let v = out(value, "value")?;
        *v = d.inner.pdf_kth(k, x)?;
        Ok(())
    })
}

/// Leading small-`x` behaviour `F_{φ_k}(x) ≈ a_k x^{d_k+1}`, as `d_k` and
/// `ln a_k`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncw_asymptotic_coeffs(
    dist: *const NcwDistribution,
    k: usize,
    d: *mut u32,
    ln_a: *mut f64,
) -> NcwStatus {
    guard(|| {
        let dist = handle(dist, "dist")?;
        let d = out(d, "d")?;
        let ln_a = out(ln_a, "ln_a")?;
        let c = asymptotic_coeffs(dist.inner.spec(), k)?;
        *d = c.d;
        *ln_a = c.ln_a;
        Ok(())
    })
}

/// Channel with `n` receive and `m` transmit antennas whose mean has the
/// given singular values and seeded singular vectors.
///
/// # Safety
/// `sigmas` must be valid for `len` reads; `out_sys` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncw_system_from_singulars(
    n: usize,
    m: usize,
    k_factor: f64,
    sigmas: *const f64,
    len: usize,
    seed: u64,
    out_sys: *mut *mut NcwSystem,
) -> NcwStatus {
    guard(|| {
        let dst = out(out_sys, "out_sys")?;
        let sv = slice_in(sigmas, len, "sigmas")?;
        let ch = RiceanChannel::from_singulars(n, m, k_factor, sv, seed)?;
        *dst = Box::into_raw(Box::new(NcwSystem { inner: MbSystem::new(ch)? }));
        Ok(())
    })
}

/// Channel with an explicit `n × m` mean given as row-major real and
/// imaginary parts (`im` may be null for a real mean). The mean must satisfy
/// `tr(H̄H̄†) = nm`.
///
/// # Safety
/// `re` (and `im` when non-null) must be valid for `n*m` reads.
#[no_mangle]
pub unsafe extern "C" fn ncw_system_from_mean(
    n: usize,
    m: usize,
    k_factor: f64,
    re: *const f64,
    im: *const f64,
    out_sys: *mut *mut NcwSystem,
) -> NcwStatus {
    guard(|| {
        let dst = out(out_sys, "out_sys")?;
        let len = n.checked_mul(m).ok_or_else(|| Fail(NcwStatus::Dimension, "n*m overflows".into()))?;
        let re = slice_in(re, len, "re")?;
        let im = if im.is_null() { None } else { Some(slice_in(im, len, "im")?) };
        let h = DMatrix::from_fn(n, m, |i, j| Complex::new(re[i * m + j], im.map_or(0.0, |v| v[i * m + j])));
        let ch = RiceanChannel::new(k_factor, h)?;
        *dst = Box::into_raw(Box::new(NcwSystem { inner: MbSystem::new(ch)? }));
        Ok(())
    })
}

/// # Safety
/// `sys` must come from a `ncw_system_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ncw_system_free(sys: *mut NcwSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// CDF of the k-th largest singular value of the channel matrix.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncw_singular_value_cdf(sys: *const NcwSystem, k: usize, x: f64, value: *mut f64) -> NcwStatus {
    guard(|| {
        let s = handle(sys, "sys")?;
        let v = out(value, "value")?;
        if !(x >= 0.0) {
            return Err(Fail(NcwStatus::Domain, format!("singular value argument must be >= 0, got {x}")));
        }
        let eps = s.inner.channel().epsilon();
        *v = s.inner.distribution().cdf_kth(k, x * x / (eps * eps))?;
        Ok(())
    })
}

/// Constants of a named modulation (`bpsk`, `qpsk`, `8psk`, `4pam`, ...).
///
/// # Safety
/// `name` must be a NUL-terminated string; `modulation` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncw_modulation_from_name(name: *const c_char, modulation: *mut NcwModulation) -> NcwStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let dst = out(modulation, "modulation")?;
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| Fail(NcwStatus::InvalidString, "name is not UTF-8".into()))?;
        let m = Modulation::from_name(name)?;
        *dst = NcwModulation {
            alpha: m.alpha,
            beta: m.beta,
        };
        Ok(())
    })
}

unsafe fn mb_config(powers: *const f64, mods: *const NcwModulation, r: usize) -> Result<MbConfig, Fail> {
    let p = slice_in(powers, r, "powers")?;
    let m = slice_in(mods, r, "modulations")?;
    let mods = m
        .iter()
        .enumerate()
        .map(|(i, m)| Modulation::custom(format!("m{}", i + 1), m.alpha, m.beta))
        .collect::<ncwishart::Result<Vec<_>>>()?;
    Ok(MbConfig::new(p.iter().sum(), p.to_vec(), mods)?)
}

/// Exact SER of each of the `r` subchannels with powers `powers[0..r]`, and
/// their mean. `subchannel_ser` may be null when only the global SER is
/// wanted.
///
/// # Safety
/// `powers` and `mods` must be valid for `r` reads, `subchannel_ser` for `r`
/// writes (or null), `global_ser` writable.
#[no_mangle]
pub unsafe extern "C" fn ncw_ser(
    sys: *const NcwSystem,
    powers: *const f64,
    mods: *const NcwModulation,
    r: usize,
    subchannel_ser: *mut f64,
    global_ser: *mut f64,
) -> NcwStatus {
    guard(|| {
        let s = handle(sys, "sys")?;
        let g = out(global_ser, "global_ser")?;
        let cfg = mb_config(powers, mods, r)?;
        let point = s.inner.ser_point(&cfg)?;
        if !subchannel_ser.is_null() {
            slice_out(subchannel_ser, r, "subchannel_ser")?.copy_from_slice(&point.subchannels);
        }
        *g = point.global;
        Ok(())
    })
}

/// High-SNR SER `(G_a P)^{−G_d}` of subchannel `k` (1-based) under uniform
/// power `P/r`, together with `G_a` and `G_d` (either may be null).
///
/// # Safety
/// `mods` must be valid for `r` reads; outputs writable or null.
#[no_mangle]
pub unsafe extern "C" fn ncw_ser_high_snr(
    sys: *const NcwSystem,
    total_power: f64,
    mods: *const NcwModulation,
    r: usize,
    k: usize,
    ser: *mut f64,
    array_gain: *mut f64,
    diversity: *mut u32,
) -> NcwStatus {
    guard(|| {
        let s = handle(sys, "sys")?;
        let v = out(ser, "ser")?;
        let m = slice_in(mods, r, "modulations")?;
        let mods = m
            .iter()
            .map(|m| Modulation::custom("custom", m.alpha, m.beta))
            .collect::<ncwishart::Result<Vec<_>>>()?;
        let cfg = MbConfig::uniform_with(total_power, mods)?;
        let ga = s.inner.array_gain(&cfg, k)?;
        let gd = diversity_order(s.inner.spec(), k)?;
        *v = s.inner.ser_high_snr(&cfg, k)?;
        if let Some(a) = array_gain.as_mut() {
            *a = ga;
        }
        if let Some(d) = diversity.as_mut() {
            *d = gd;
        }
        Ok(())
    })
}

/// Outage of the weakest of `r` equal-power subchannels.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncw_outage(
    sys: *const NcwSystem,
    r: usize,
    total_power: f64,
    gamma_th: f64,
    value: *mut f64,
) -> NcwStatus {
    guard(|| {
        let s = handle(sys, "sys")?;
        let v = out(value, "value")?;
        *v = s.inner.outage(r, total_power, gamma_th)?;
        Ok(())
    })
}

/// Leading-order outage of the strongest subchannel; depends on the mean
/// only through `K`.
///
/// # Safety
/// `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncw_outage_asymptotic(
    s: usize,
    t: usize,
    k_factor: f64,
    gamma_th: f64,
    total_power: f64,
    value: *mut f64,
) -> NcwStatus {
    guard(|| {
        let v = out(value, "value")?;
        *v = outage_asymptotic(s, t, k_factor, gamma_th, total_power)?;
        Ok(())
    })
}

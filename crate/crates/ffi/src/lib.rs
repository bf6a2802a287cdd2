//! C ABI over the core library. The header `include/egue_strengths.h` is
//! regenerated by the build script on every compile.
//!
//! Conventions at the boundary: parameter sets travel as opaque handles
//! created by [`egue_params_new`] and released by [`egue_params_free`];
//! every other function writes through caller-owned out-pointers and returns
//! an [`EgueStatus`]. Out-parameters are untouched on any non-OK status.
//! Panics never cross the boundary — they map to `EGUE_STATUS_INTERNAL`.
//! All functions are thread-safe; handles are immutable after creation and
//! may be shared across threads.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use egue_strengths::asymptotics::asymptotic_cumulants;
use egue_strengths::ensemble_mc::{mc_moments, wick_oracle, EnsembleConfig};
use egue_strengths::exact_moments::{exact_cumulants, exact_moments, Mode, ModelParams};
use egue_strengths::Error;

/// Status code returned by every fallible entry point.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EgueStatus {
    /// Success; out-parameters are filled.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// Parameters outside the model's domain (bad ranks, bad mode flag,
    /// missing seed semantics, …).
    Invalid = 2,
    /// The request is valid but the deliberately bounded exact routines
    /// refuse it; see the library's cost-guard limits.
    CostGuard = 3,
    /// Numerical failure or an internal invariant violation.
    Internal = 4,
}

/// Opaque parameter handle: (N, m, k, k0) plus the two coupling variances.
pub struct EgueParams {
    inner: ModelParams,
}

/// Bivariate moments at one parameter point. `m22` is the hybrid
/// reconstruction when produced by `egue_exact_moments` and the direct
/// estimate when produced by `egue_mc_moments`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EgueMoments {
    pub m00: f64,
    pub m20: f64,
    pub m02: f64,
    pub m11: f64,
    pub m40: f64,
    pub m04: f64,
    pub m31: f64,
    pub m13: f64,
    pub m22: f64,
}

/// Scale-free cumulants: correlation coefficient and the four fourth-order
/// excesses plus k22.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EgueCumulants {
    pub xi: f64,
    pub k40: f64,
    pub k04: f64,
    pub k31: f64,
    pub k13: f64,
    pub k22: f64,
}

const EGUE_MODE_REMOVAL: i32 = 0;
const EGUE_MODE_ADDITION: i32 = 1;

fn mode_from(mode: i32) -> Option<Mode> {
    match mode {
        EGUE_MODE_REMOVAL => Some(Mode::Removal),
        EGUE_MODE_ADDITION => Some(Mode::Addition),
        _ => None,
    }
}

fn status_of(e: &Error) -> EgueStatus {
    match e {
        Error::Domain(_) => EgueStatus::Invalid,
        Error::CostGuard(_) => EgueStatus::CostGuard,
        Error::Numerical(_) => EgueStatus::Internal,
    }
}

/// Run `f` with panics converted to `Internal`.
fn guarded<F: FnOnce() -> EgueStatus>(f: F) -> EgueStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(EgueStatus::Internal)
}

/// Allocate a parameter handle. On success writes the new handle to `out`
/// and returns OK; the handle must be released with `egue_params_free`.
#[no_mangle]
pub extern "C" fn egue_params_new(
    n: i64,
    m: i64,
    k: i64,
    k0: i64,
    vh2: f64,
    vo2: f64,
    out: *mut *mut EgueParams,
) -> EgueStatus {
    if out.is_null() {
        return EgueStatus::NullPointer;
    }
    guarded(|| match ModelParams::new(n, m, k, k0, vh2, vo2) {
        Ok(inner) => {
            let handle = Box::new(EgueParams { inner });
            unsafe { *out = Box::into_raw(handle) };
            EgueStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Release a handle from `egue_params_new`. NULL is a no-op. Passing any
/// other pointer, or freeing twice, is undefined behavior.
#[no_mangle]
pub extern "C" fn egue_params_free(params: *mut EgueParams) {
    if !params.is_null() {
        drop(unsafe { Box::from_raw(params) });
    }
}

fn params_ref<'a>(params: *const EgueParams) -> Option<&'a ModelParams> {
    unsafe { params.as_ref() }.map(|p| &p.inner)
}

/// Exact finite-N moments (closed forms; M22 hybrid). `mode` is 0 for
/// particle removal, 1 for addition.
#[no_mangle]
pub extern "C" fn egue_exact_moments(
    params: *const EgueParams,
    mode: i32,
    out: *mut EgueMoments,
) -> EgueStatus {
    let Some(p) = params_ref(params) else {
        return EgueStatus::NullPointer;
    };
    if out.is_null() {
        return EgueStatus::NullPointer;
    }
    let Some(mode) = mode_from(mode) else {
        return EgueStatus::Invalid;
    };
    guarded(|| match exact_moments(p, mode) {
        Ok(mm) => {
            unsafe {
                *out = EgueMoments {
                    m00: mm.m00,
                    m20: mm.m20,
                    m02: mm.m02,
                    m11: mm.m11,
                    m40: mm.m40,
                    m04: mm.m04,
                    m31: mm.m31,
                    m13: mm.m13,
                    m22: mm.m22,
                };
            }
            EgueStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Exact finite-N cumulants derived from the closed-form moments.
#[no_mangle]
pub extern "C" fn egue_exact_cumulants(
    params: *const EgueParams,
    mode: i32,
    out: *mut EgueCumulants,
) -> EgueStatus {
    let Some(p) = params_ref(params) else {
        return EgueStatus::NullPointer;
    };
    if out.is_null() {
        return EgueStatus::NullPointer;
    }
    let Some(mode) = mode_from(mode) else {
        return EgueStatus::Invalid;
    };
    guarded(|| match exact_cumulants(p, mode) {
        Ok(c) => {
            unsafe {
                *out = EgueCumulants {
                    xi: c.xi,
                    k40: c.k40,
                    k04: c.k04,
                    k31: c.k31,
                    k13: c.k13,
                    k22: c.k22,
                };
            }
            EgueStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Large-N asymptotic cumulants; depend on (m, k, k0) only, no handle needed.
#[no_mangle]
pub extern "C" fn egue_asymp_cumulants(
    m: i64,
    k: i64,
    k0: i64,
    out: *mut EgueCumulants,
) -> EgueStatus {
    if out.is_null() {
        return EgueStatus::NullPointer;
    }
    guarded(|| match asymptotic_cumulants(m, k, k0) {
        Ok(c) => {
            unsafe {
                *out = EgueCumulants {
                    xi: c.xi,
                    k40: c.k40,
                    k04: c.k04,
                    k31: c.k31,
                    k13: c.k13,
                    k22: c.k22,
                };
            }
            EgueStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Dilute-limit leading terms: ξ → 1 − k·k0/2m and the common fourth-order
/// value −k²/m.
#[no_mangle]
pub extern "C" fn egue_dilute_expansion(
    m: i64,
    k: i64,
    k0: i64,
    xi_out: *mut f64,
    krs_out: *mut f64,
) -> EgueStatus {
    if xi_out.is_null() || krs_out.is_null() {
        return EgueStatus::NullPointer;
    }
    guarded(
        || match egue_strengths::asymptotics::dilute_expansion(m, k, k0) {
            Ok((xi, krs)) => {
                unsafe {
                    *xi_out = xi;
                    *krs_out = krs;
                }
                EgueStatus::Ok
            }
            Err(e) => status_of(&e),
        },
    )
}

/// One ensemble-averaged moment M_PQ from the independent Wick-contraction
/// oracle. Strong cost guards apply; P+Q ≤ 4.
#[no_mangle]
pub extern "C" fn egue_wick_moment(
    params: *const EgueParams,
    mode: i32,
    p_order: u32,
    q_order: u32,
    out: *mut f64,
) -> EgueStatus {
    let Some(p) = params_ref(params) else {
        return EgueStatus::NullPointer;
    };
    if out.is_null() {
        return EgueStatus::NullPointer;
    }
    let Some(mode) = mode_from(mode) else {
        return EgueStatus::Invalid;
    };
    guarded(|| match wick_oracle(p, mode, p_order, q_order) {
        Ok(v) => {
            unsafe { *out = v };
            EgueStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Monte Carlo moment estimates over `n_samples` ensemble realizations with
/// an explicit seed. Writes the even-order means into `mean`; when `se` is
/// non-NULL it receives the matching standard errors.
#[no_mangle]
pub extern "C" fn egue_mc_moments(
    params: *const EgueParams,
    mode: i32,
    n_samples: usize,
    seed: u64,
    mean: *mut EgueMoments,
    se: *mut EgueMoments,
) -> EgueStatus {
    let Some(p) = params_ref(params) else {
        return EgueStatus::NullPointer;
    };
    if mean.is_null() {
        return EgueStatus::NullPointer;
    }
    let Some(mode) = mode_from(mode) else {
        return EgueStatus::Invalid;
    };
    guarded(|| {
        let cfg = EnsembleConfig::new(*p, mode, n_samples, seed);
        match mc_moments(&cfg) {
            Ok(est) => {
                let orders = [
                    (0u32, 0u32),
                    (2, 0),
                    (0, 2),
                    (1, 1),
                    (4, 0),
                    (0, 4),
                    (3, 1),
                    (1, 3),
                    (2, 2),
                ];
                let mut mean_v = EgueMoments::default();
                let mut se_v = EgueMoments::default();
                for (pp, qq) in orders {
                    let e = est.get(pp, qq).expect("covered order");
                    let (mv, sv) = match (pp, qq) {
                        (0, 0) => (&mut mean_v.m00, &mut se_v.m00),
                        (2, 0) => (&mut mean_v.m20, &mut se_v.m20),
                        (0, 2) => (&mut mean_v.m02, &mut se_v.m02),
                        (1, 1) => (&mut mean_v.m11, &mut se_v.m11),
                        (4, 0) => (&mut mean_v.m40, &mut se_v.m40),
                        (0, 4) => (&mut mean_v.m04, &mut se_v.m04),
                        (3, 1) => (&mut mean_v.m31, &mut se_v.m31),
                        (1, 3) => (&mut mean_v.m13, &mut se_v.m13),
                        _ => (&mut mean_v.m22, &mut se_v.m22),
                    };
                    *mv = e.mean;
                    *sv = e.se;
                }
                unsafe {
                    *mean = mean_v;
                    if !se.is_null() {
                        *se = se_v;
                    }
                }
                EgueStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Static description of a status code; never NULL.
#[no_mangle]
pub extern "C" fn egue_error_message(status: i32) -> *const c_char {
    let msg: &CStr = match status {
        0 => c"ok",
        1 => c"required pointer was NULL",
        2 => c"parameters outside the model domain",
        3 => c"request exceeds the exact-route cost guard",
        4 => c"internal numerical failure",
        _ => c"unknown status code",
    };
    msg.as_ptr()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn egue_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn handle(n: i64, m: i64, k: i64, k0: i64) -> *mut EgueParams {
        let mut h: *mut EgueParams = ptr::null_mut();
        assert_eq!(
            egue_params_new(n, m, k, k0, 1.0, 1.0, &mut h),
            EgueStatus::Ok
        );
        assert!(!h.is_null());
        h
    }

    #[test]
    fn exact_route_round_trips_through_the_abi() {
        let h = handle(20, 10, 2, 1);
        let mut mm = EgueMoments::default();
        assert_eq!(egue_exact_moments(h, EGUE_MODE_REMOVAL, &mut mm), EgueStatus::Ok);
        let want = exact_moments(&ModelParams::new(20, 10, 2, 1, 1.0, 1.0).unwrap(), Mode::Removal)
            .unwrap();
        assert_eq!(mm.m00.to_bits(), want.m00.to_bits());
        assert_eq!(mm.m31.to_bits(), want.m31.to_bits());
        assert_eq!(mm.m22.to_bits(), want.m22.to_bits());

        let mut c = EgueCumulants::default();
        assert_eq!(egue_exact_cumulants(h, EGUE_MODE_ADDITION, &mut c), EgueStatus::Ok);
        assert!(c.xi > 0.0 && c.xi < 1.0);
        egue_params_free(h);
    }

    #[test]
    fn status_codes_cover_the_failure_surface() {
        let mut h: *mut EgueParams = ptr::null_mut();
        // domain violation: k > m
        assert_eq!(
            egue_params_new(10, 3, 5, 1, 1.0, 1.0, &mut h),
            EgueStatus::Invalid
        );
        assert_eq!(
            egue_params_new(10, 3, 2, 1, 1.0, 1.0, ptr::null_mut()),
            EgueStatus::NullPointer
        );

        let good = handle(20, 10, 2, 1);
        let mut mm = EgueMoments::default();
        assert_eq!(
            egue_exact_moments(ptr::null(), EGUE_MODE_REMOVAL, &mut mm),
            EgueStatus::NullPointer
        );
        assert_eq!(egue_exact_moments(good, 7, &mut mm), EgueStatus::Invalid);

        // the oracle refuses desk-crushing dimensions
        let mut v = 0.0f64;
        assert_eq!(
            egue_wick_moment(good, EGUE_MODE_REMOVAL, 2, 0, &mut v),
            EgueStatus::CostGuard
        );
        egue_params_free(good);
        egue_params_free(ptr::null_mut()); // must be a no-op
    }

    #[test]
    fn wick_and_mc_agree_through_the_abi() {
        let h = handle(6, 3, 2, 1);
        let mut wick = 0.0f64;
        assert_eq!(
            egue_wick_moment(h, EGUE_MODE_REMOVAL, 1, 1, &mut wick),
            EgueStatus::Ok
        );
        let mut mean = EgueMoments::default();
        let mut se = EgueMoments::default();
        assert_eq!(
            egue_mc_moments(h, EGUE_MODE_REMOVAL, 400, 9, &mut mean, &mut se),
            EgueStatus::Ok
        );
        assert!(se.m11 > 0.0);
        assert!(
            (mean.m11 - wick).abs() <= 4.0 * se.m11,
            "mc {} vs wick {wick} (se {})",
            mean.m11,
            se.m11
        );
        egue_params_free(h);
    }

    #[test]
    fn asymptotics_need_no_handle() {
        let mut c = EgueCumulants::default();
        assert_eq!(egue_asymp_cumulants(10, 2, 1, &mut c), EgueStatus::Ok);
        assert!((c.xi - 0.894427).abs() < 1e-5);
        assert_eq!(egue_asymp_cumulants(2, 2, 1, &mut c), EgueStatus::Invalid);

        let (mut xi, mut krs) = (0.0f64, 0.0f64);
        assert_eq!(egue_dilute_expansion(100, 2, 1, &mut xi, &mut krs), EgueStatus::Ok);
        assert_eq!(xi, 0.99);
        assert_eq!(krs, -0.04);
    }

    #[test]
    fn strings_are_static_and_terminated() {
        for code in -1..=5 {
            let ptr = egue_error_message(code);
            assert!(!ptr.is_null());
            let s = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap();
            assert!(!s.is_empty());
        }
        let v = unsafe { CStr::from_ptr(egue_version()) }.to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn generated_header_declares_the_surface() {
        let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/egue_strengths.h");
        let text = std::fs::read_to_string(header).expect("build script wrote the header");
        for sym in [
            "egue_params_new",
            "egue_params_free",
            "egue_exact_moments",
            "egue_exact_cumulants",
            "egue_asymp_cumulants",
            "egue_dilute_expansion",
            "egue_wick_moment",
            "egue_mc_moments",
            "egue_error_message",
            "EgueStatus",
            "typedef struct EgueParams EgueParams",
        ] {
            assert!(text.contains(sym), "header misses {sym}");
        }
    }
}

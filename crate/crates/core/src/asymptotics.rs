//! N→∞ (fixed m, k, k0) asymptotic cumulants and the dilute-limit
//! (m→∞, m/N→0) leading terms.
//!
//! In the strict N→∞ limit the finite-N sums are dominated by their ν=k term
//! and every cumulant collapses to a ratio of binomials in m alone. The
//! correlation coefficient and the four fourth-order cumulants are provided
//! both as the definitional products (k31 = ξ·k40, k13 = ξ·k04) and as the
//! directly evaluated ratio forms; the two agree to machine precision, and the
//! acceptance suite checks precisely that.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::combinatorics::{binomial, ratio_to_f64};
use crate::{Error, Result};

/// Asymptotic and dilute-limit cumulants for one (m, k, k0) triple.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AsymptoticCumulants {
    pub xi: f64,
    pub k40: f64,
    pub k04: f64,
    pub k31: f64,
    pub k13: f64,
    pub k22: f64,
    /// Dilute-limit ξ ≈ 1 − k·k0/(2m).
    pub xi_dilute: f64,
    /// Dilute-limit common fourth-cumulant value −k²/m.
    pub krs_dilute: f64,
}

fn sq(x: BigInt) -> BigInt {
    &x * &x
}

/// Asymptotic correlation coefficient
/// ξ → C(m−k,k0)·√C(m,k) / (C(m,k0)·√C(m−k0,k)), computed as the square root
/// of one exact rational.
pub fn xi_asymp(m: i64, k: i64, k0: i64) -> Result<f64> {
    if m < k + k0 {
        return Err(Error::Domain(format!(
            "xi_asymp requires m >= k+k0, got m={m} k={k} k0={k0}"
        )));
    }
    let num = sq(binomial(m - k, k0)) * binomial(m, k);
    let den = sq(binomial(m, k0)) * binomial(m - k0, k);
    Ok(ratio_to_f64(&BigRational::new(num, den)).sqrt())
}

/// Asymptotic excess cumulants of the two marginals:
/// k40 → C(m−k,k)/C(m,k) − 1 and k04 → C(m−k0−k,k)/C(m−k0,k) − 1.
pub fn k40_k04_asymp(m: i64, k: i64, k0: i64) -> (f64, f64) {
    let k40 = ratio_to_f64(&BigRational::new(binomial(m - k, k), binomial(m, k))) - 1.0;
    let k04 = ratio_to_f64(&BigRational::new(
        binomial(m - k0 - k, k),
        binomial(m - k0, k),
    )) - 1.0;
    (k40, k04)
}

/// Asymptotic cross cumulants as their definitional products:
/// k31 = ξ·k40 and k13 = ξ·k04.
pub fn k31_k13_asymp(m: i64, k: i64, k0: i64) -> Result<(f64, f64)> {
    let xi = xi_asymp(m, k, k0)?;
    let (k40, k04) = k40_k04_asymp(m, k, k0);
    Ok((xi * k40, xi * k04))
}

/// k31 evaluated from its displayed ratio form,
/// C(m−k,k)·C(m−k,k0) / (C(m,k0)·√(C(m,k)·C(m−k0,k))) − ξ.
///
/// Algebraically identical to ξ·k40; kept separate so the identity can be
/// *checked* rather than assumed.
pub fn k31_asymp_ratio_form(m: i64, k: i64, k0: i64) -> Result<f64> {
    let xi = xi_asymp(m, k, k0)?;
    let num = sq(binomial(m - k, k)) * sq(binomial(m - k, k0));
    let den = sq(binomial(m, k0)) * binomial(m, k) * binomial(m - k0, k);
    Ok(ratio_to_f64(&BigRational::new(num, den)).sqrt() - xi)
}

/// k13 evaluated from its displayed ratio form,
/// C(m−k0−k,k)·C(m−k,k0)·√C(m,k) / (C(m,k0)·C(m−k0,k)^{3/2}) − ξ.
pub fn k13_asymp_ratio_form(m: i64, k: i64, k0: i64) -> Result<f64> {
    let xi = xi_asymp(m, k, k0)?;
    let num = sq(binomial(m - k0 - k, k)) * sq(binomial(m - k, k0)) * binomial(m, k);
    let mk0k = binomial(m - k0, k);
    let den = sq(binomial(m, k0)) * (&mk0k * &mk0k * &mk0k);
    Ok(ratio_to_f64(&BigRational::new(num, den)).sqrt() - xi)
}

/// Normalized asymptotic third term of the P=Q=2 moment,
/// t3 = C(m−2k,k0)·C(m−k,k) / (C(m,k0)·C(m−k0,k)).
///
/// Shared with the exact-hybrid reconstruction in `exact_moments`.
pub fn t3_asymp(m: i64, k: i64, k0: i64) -> f64 {
    ratio_to_f64(&BigRational::new(
        binomial(m - 2 * k, k0) * binomial(m - k, k),
        binomial(m, k0) * binomial(m - k0, k),
    ))
}

/// Asymptotic k22, first displayed form:
/// −2ξ² + C(m,k)·C(m−k,k0)²/(C(m−k0,k)·C(m,k0)²) + t3.
pub fn k22_asymp(m: i64, k: i64, k0: i64) -> Result<f64> {
    let xi = xi_asymp(m, k, k0)?;
    let mid = ratio_to_f64(&BigRational::new(
        binomial(m, k) * sq(binomial(m - k, k0)),
        binomial(m - k0, k) * sq(binomial(m, k0)),
    ));
    Ok(-2.0 * xi * xi + mid + t3_asymp(m, k, k0))
}

/// Asymptotic k22, the coarser "≈" variant:
/// −2ξ² + C(m−2k,k0)·[C(m,k) + C(m−k,k)] / (C(m,k0)·C(m−k0,k)).
pub fn k22_asymp_approx(m: i64, k: i64, k0: i64) -> Result<f64> {
    let xi = xi_asymp(m, k, k0)?;
    let rest = ratio_to_f64(&BigRational::new(
        binomial(m - 2 * k, k0) * (binomial(m, k) + binomial(m - k, k)),
        binomial(m, k0) * binomial(m - k0, k),
    ));
    Ok(-2.0 * xi * xi + rest)
}

/// Dilute-limit leading terms: ξ → 1 − k·k0/(2m) and k_rs → −k²/m for every
/// fourth-order cumulant (independent of k0).
pub fn dilute_expansion(m: i64, k: i64, k0: i64) -> Result<(f64, f64)> {
    if m <= k * k0 {
        return Err(Error::Domain(format!(
            "dilute_expansion requires m > k*k0, got m={m} k={k} k0={k0}"
        )));
    }
    let xi = 1.0 - (k as f64) * (k0 as f64) / (2.0 * m as f64);
    let krs = -(k as f64) * (k as f64) / (m as f64);
    Ok((xi, krs))
}

/// All asymptotic quantities for one parameter triple.
pub fn asymptotic_cumulants(m: i64, k: i64, k0: i64) -> Result<AsymptoticCumulants> {
    let xi = xi_asymp(m, k, k0)?;
    let (k40, k04) = k40_k04_asymp(m, k, k0);
    let (k31, k13) = k31_k13_asymp(m, k, k0)?;
    let k22 = k22_asymp(m, k, k0)?;
    let (xi_dilute, krs_dilute) = dilute_expansion(m, k, k0).unwrap_or((f64::NAN, f64::NAN));
    Ok(AsymptoticCumulants {
        xi,
        k40,
        k04,
        k31,
        k13,
        k22,
        xi_dilute,
        krs_dilute,
    })
}

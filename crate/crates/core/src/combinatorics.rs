//! Exact combinatorial building blocks.
//!
//! Everything downstream — moments, cumulants, asymptotics — reduces to
//! binomial coefficients, the two-binomial kernel Λ^μ(N′,m′,r), the irrep
//! sector dimension d(N:ν), and the squared U(N) recoupling coefficient.
//! All of them are evaluated in arbitrary-precision integer/rational
//! arithmetic; conversion to `f64` happens once, at the very end, through
//! [`ratio_to_f64`].
//!
//! Out-of-range binomials evaluate to 0 rather than erroring: the closed-form
//! sums silently rely on that convention (d(N:0) needs C(N,−1) = 0, and Λ^μ
//! with large μ must vanish).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Binomial coefficient C(n, k) with the zero convention: returns 0 whenever
/// k < 0, n < 0, or k > n.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut res = BigInt::one();
    for i in 0..k {
        res = res * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    res
}

/// Λ^μ(N′, m′, r) = C(m′−μ, r) · C(N′−m′+r−μ, r).
///
/// Total over all integer arguments; vanishes when either binomial is out of
/// range. This is the combinatorial kernel of all variance propagation.
pub fn lambda_coeff(np: i64, mp: i64, r: i64, mu: i64) -> BigInt {
    binomial(mp - mu, r) * binomial(np - mp + r - mu, r)
}

/// Sector dimension d(N:ν) = C(N,ν)² − C(N,ν−1)².
///
/// d(N:0) = 1 by the binomial zero convention. Rejects ν < 0; ν beyond N
/// evaluates to 0.
pub fn d_nu(n: i64, nu: i64) -> Result<BigInt> {
    if nu < 0 {
        return Err(Error::Domain(format!("d_nu requires nu >= 0, got {nu}")));
    }
    let a = binomial(n, nu);
    let b = binomial(n, nu - 1);
    Ok(&a * &a - &b * &b)
}

/// Squared U(N) recoupling coefficient
/// [U(f_m, f̄_p, f_m, f_p; f_{m−p}, ν)]², as an exact rational:
///
/// ```text
///        C(N+1,ν)² · C(m−ν, p−ν) · C(N−ν−p, m−p) · (N−2ν+1)
///        ----------------------------------------------------
///              C(N−m+p, p)² · C(N, m−p) · (N+1)
/// ```
///
/// Nonnegative for every valid input: the (N−2ν+1) factor can only turn
/// negative where one of the numerator binomials has already vanished.
pub fn u_coeff_sq(n: i64, m: i64, p: i64, nu: i64) -> Result<BigRational> {
    if !(0 <= p && p <= m && m <= n) {
        return Err(Error::Domain(format!(
            "u_coeff_sq requires 0 <= p <= m <= N, got N={n} m={m} p={p}"
        )));
    }
    if nu < 0 {
        return Err(Error::Domain(format!("u_coeff_sq requires nu >= 0, got {nu}")));
    }
    let c1 = binomial(n + 1, nu);
    let num = &c1 * &c1
        * binomial(m - nu, p - nu)
        * binomial(n - nu - p, m - p)
        * BigInt::from(n - 2 * nu + 1);
    let c2 = binomial(n - m + p, p);
    let den = &c2 * &c2 * binomial(n, m - p) * BigInt::from(n + 1);
    debug_assert!(!num.is_negative(), "u_coeff_sq numerator must be nonnegative");
    Ok(BigRational::new(num, den))
}

/// Convert an exact rational to the nearest `f64`, robust to numerators and
/// denominators far beyond `f64` range (both are reduced with a common power
/// of two before the division).
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    fn split(x: &BigInt) -> (f64, i64) {
        let bits = x.bits();
        if bits <= 53 {
            (x.to_f64().unwrap_or(0.0), 0)
        } else {
            let e = bits - 53;
            ((x >> e).to_f64().unwrap_or(0.0), e as i64)
        }
    }
    if r.numer().is_zero() {
        return 0.0;
    }
    let (fn_, en) = split(r.numer());
    let (fd, ed) = split(r.denom());
    (fn_ / fd) * 2f64.powi((en - ed) as i32)
}

/// Convenience: exact integer ratio a/b as `f64`.
pub fn int_ratio_to_f64(a: &BigInt, b: &BigInt) -> f64 {
    ratio_to_f64(&BigRational::new(a.clone(), b.clone()))
}

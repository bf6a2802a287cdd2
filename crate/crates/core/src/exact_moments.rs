//! Exact finite-N bivariate moments of transition strength densities.
//!
//! The model: m spinless fermions in N degenerate single-particle states, a
//! k-body Hamiltonian H drawn from the embedded Gaussian unitary ensemble
//! EGUE(k), and a transition operator O that removes (or adds) k0 particles
//! with independent Gaussian amplitudes. Strengths |⟨f|O|i⟩|² connect the
//! m-particle eigenbasis of H to its (m∓k0)-particle eigenbasis, and the
//! bivariate moments
//!
//!   M_PQ = ⟨⟨ tr[O† H^Q O H^P] ⟩⟩ / C(N,m)
//!
//! (ensemble average, trace over the m-particle space, same H realization on
//! both sides) determine the shape of the bivariate strength density. This
//! module evaluates every M_PQ with P+Q ≤ 4 in closed form, at finite N, from
//! exact integer and rational combinatorics; the only irrational steps are
//! square roots of single exact rationals, so each moment carries rounding at
//! the level of a few ulps.
//!
//! The P=Q=2 moment is the one place without a complete finite-N closed form:
//! its first two terms are exact and its third term uses the N→∞ value, so
//! the full set is tagged [`Provenance::ExactHybrid`].

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, d_nu, int_ratio_to_f64, lambda_coeff, ratio_to_f64, u_coeff_sq};
use crate::{Error, Result};

/// Whether O removes k0 particles (final space m−k0) or adds them (m+k0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Removal,
    Addition,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Removal => write!(f, "removal"),
            Mode::Addition => write!(f, "addition"),
        }
    }
}

/// Model parameters: space size, particle number, interaction and operator
/// body ranks, and the two Gaussian variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of single-particle states.
    #[serde(rename = "N")]
    pub n: i64,
    /// Number of fermions in the initial space.
    pub m: i64,
    /// Body rank of the Hamiltonian.
    pub k: i64,
    /// Body rank of the transition operator.
    pub k0: i64,
    /// Variance of the independent Hamiltonian matrix elements (energy²).
    pub vh2: f64,
    /// Variance of the transition-operator amplitudes.
    pub vo2: f64,
}

impl ModelParams {
    pub fn new(n: i64, m: i64, k: i64, k0: i64, vh2: f64, vo2: f64) -> Result<Self> {
        if !(0 < k && k <= m && m <= n) {
            return Err(Error::Domain(format!(
                "need 0 < k <= m <= N, got N={n} m={m} k={k}"
            )));
        }
        if !(0 < k0 && k0 <= m) {
            return Err(Error::Domain(format!("need 0 < k0 <= m, got m={m} k0={k0}")));
        }
        if !(vh2 > 0.0 && vh2.is_finite() && vo2 > 0.0 && vo2.is_finite()) {
            return Err(Error::Domain(format!(
                "variances must be positive and finite, got vh2={vh2} vo2={vo2}"
            )));
        }
        Ok(Self { n, m, k, k0, vh2, vo2 })
    }

    /// Mode-dependent check: addition needs room for k0 more particles.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        // Re-run the constructor checks so deserialized values get no free pass.
        Self::new(self.n, self.m, self.k, self.k0, self.vh2, self.vo2)?;
        if mode == Mode::Addition && self.m + self.k0 > self.n {
            return Err(Error::Domain(format!(
                "addition mode needs m+k0 <= N, got m={} k0={} N={}",
                self.m, self.k0, self.n
            )));
        }
        Ok(())
    }
}

/// How a set of moments was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Closed form, exact up to float conversion.
    Exact,
    /// Closed form except the third term of m22, which uses its N→∞ value.
    ExactHybrid,
    /// N→∞ limit throughout.
    Asymptotic,
    /// Ensemble-averaged by explicit Wick contraction over Fock space.
    Wick,
    /// Monte Carlo over sampled realizations, with a standard error per entry.
    Mc { se: MomentStdErrors },
}

/// Batch-mean standard errors attached to Monte Carlo moment estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentStdErrors {
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

/// The nine bivariate moments with P+Q ≤ 4 that survive the ensemble average
/// (odd P+Q vanish identically). Units: m_PQ carries vo2·vh2^{(P+Q)/2}.
///
/// For every valid parameter set m00, m20, m02 are positive and
/// m11² ≤ m20·m02 (Cauchy–Schwarz), so the correlation coefficient ξ lies in
/// (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateMoments {
    pub m00: f64,
    pub m20: f64,
    pub m02: f64,
    pub m11: f64,
    pub m40: f64,
    pub m04: f64,
    pub m31: f64,
    pub m13: f64,
    pub m22: f64,
    pub mode: Mode,
    pub provenance: Provenance,
}

/// Scale-free bivariate cumulants: the strength-weighted correlation
/// coefficient ξ and the four fourth-order excess cumulants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantSet {
    pub xi: f64,
    pub k40: f64,
    pub k04: f64,
    pub k31: f64,
    pub k13: f64,
    pub k22: f64,
}

fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

fn int_to_f64(x: BigInt) -> f64 {
    int_ratio_to_f64(&x, &BigInt::from(1))
}

/// Λ⁰(N,m,k) as an integer; zero when k > m.
fn h2_int(n: i64, m: i64, k: i64) -> BigInt {
    lambda_coeff(n, m, k, 0)
}

/// ⟨H⁴⟩ in the m-particle space, in units vh2², as an exact rational:
/// 2[Λ⁰]² + C(N,m)⁻¹ Σ_ν Λ^ν(N,m,k) Λ^ν(N,m,m−k) d(N:ν).
fn h4_rat(n: i64, m: i64, k: i64) -> BigRational {
    let l0 = h2_int(n, m, k);
    let mut cross = BigInt::from(0);
    for nu in 0..=k.min(m - k).max(-1) {
        cross += lambda_coeff(n, m, k, nu)
            * lambda_coeff(n, m, m - k, nu)
            * d_nu(n, nu).expect("nu >= 0");
    }
    BigRational::from(2 * &l0 * &l0) + BigRational::new(cross, binomial(n, m))
}

/// ⟨H²⟩ in the m-particle space, in units of vh2. Equals Λ⁰(N,m,k).
pub fn h2_moment(n: i64, m: i64, k: i64) -> Result<BigRational> {
    if !(0 <= k && k <= m && m <= n) {
        return Err(Error::Domain(format!(
            "h2_moment needs 0 <= k <= m <= N, got N={n} m={m} k={k}"
        )));
    }
    Ok(BigRational::from(h2_int(n, m, k)))
}

/// ⟨H⁴⟩ in the m-particle space, in units of vh2², as an exact rational.
pub fn h4_moment(n: i64, m: i64, k: i64) -> Result<BigRational> {
    if !(0 <= k && k <= m && m <= n) {
        return Err(Error::Domain(format!(
            "h4_moment needs 0 <= k <= m <= N, got N={n} m={m} k={k}"
        )));
    }
    Ok(h4_rat(n, m, k))
}

/// The exact rational whose square root is Z₁₁(ν) (removal convention):
/// C(N,k0) · d(N:ν) · Λ^ν(N,m,m−k) · Λ^ν(N,m−k0,m−k0−k) · U²,
/// with U² the squared unitary recoupling weight at p = m−k0.
fn z11_radicand(n: i64, m: i64, k0: i64, k: i64, nu: i64) -> BigRational {
    let ints = binomial(n, k0)
        * d_nu(n, nu).expect("nu >= 0")
        * lambda_coeff(n, m, m - k, nu)
        * lambda_coeff(n, m - k0, m - k0 - k, nu);
    BigRational::from(ints) * u_coeff_sq(n, m, m - k0, nu).expect("validated args")
}

/// One ν-term of the M11 angular sum, as a nonnegative real. The sign of the
/// recoupling phase times U is taken as +|U| throughout; the Wick oracle
/// equality is what validates that convention.
pub fn z11(n: i64, m: i64, k0: i64, k: i64, nu: i64) -> Result<f64> {
    if !(1 <= k && k <= m && m <= n && 1 <= k0 && k0 <= m) {
        return Err(Error::Domain(format!(
            "z11 needs 1 <= k <= m <= N and 1 <= k0 <= m, got N={n} m={m} k0={k0} k={k}"
        )));
    }
    if !(0 <= nu && nu <= k) {
        return Err(Error::Domain(format!("z11 needs 0 <= nu <= k, got nu={nu} k={k}")));
    }
    Ok(ratio_to_f64(&z11_radicand(n, m, k0, k, nu)).sqrt())
}

/// All nine moments at unit couplings (vh2 = vo2 = 1). Pure combinatorics;
/// the scale-free cumulants are computed from these directly so that they
/// cannot depend on the couplings even at the bit level.
#[derive(Debug, Clone, Copy)]
struct UnitMoments {
    m00: f64,
    m20: f64,
    m02: f64,
    m11: f64,
    m40: f64,
    m04: f64,
    m31: f64,
    m13: f64,
    m22: f64,
}

fn unit_removal(n: i64, m: i64, k: i64, k0: i64) -> UnitMoments {
    let m00_int = binomial(m, k0);
    let h2_i = h2_int(n, m, k); // ⟨H²⟩ in the initial space
    let h2_f = h2_int(n, m - k0, k); // ... and in the final space
    let m00 = int_to_f64(m00_int.clone());
    let m20 = int_to_f64(&m00_int * &h2_i);
    let m02 = int_to_f64(&m00_int * &h2_f);
    let m40 = ratio_to_f64(&(BigRational::from(m00_int.clone()) * h4_rat(n, m, k)));
    let m04 = ratio_to_f64(&(BigRational::from(m00_int.clone()) * h4_rat(n, m - k0, k)));

    // M11 = pref · Σ_ν Z11(ν) with pref = C(N−k0,m−k0)/C(N,m). Each term is
    // the square root of one exact rational (pref² folded into the radicand).
    let pref_num = binomial(n - k0, m - k0);
    let pref_den = binomial(n, m);
    let pref_sq = BigRational::new(&pref_num * &pref_num, &pref_den * &pref_den);
    let term = |nu: i64, extra: BigInt| -> f64 {
        let rad = BigRational::from(&extra * &extra) * &pref_sq * z11_radicand(n, m, k0, k, nu);
        ratio_to_f64(&rad).sqrt()
    };
    let mut m11 = 0.0;
    for nu in 0..=k {
        m11 += term(nu, big(1));
    }

    // M31 = 2⟨H²⟩_i·M11 + pref·Σ_ν Λ^ν(N,m,k)·Z11(ν), ν ≤ min(k, m−k);
    // M13 the same with the final-space ⟨H²⟩ and Λ^ν(N,m−k0,k), ν ≤ min(k, m−k0−k).
    let mut m31 = 2.0 * int_to_f64(h2_i.clone()) * m11;
    for nu in 0..=k.min(m - k).max(-1) {
        m31 += term(nu, lambda_coeff(n, m, k, nu));
    }
    let mut m13 = 2.0 * int_to_f64(h2_f.clone()) * m11;
    for nu in 0..=k.min(m - k0 - k).max(-1) {
        m13 += term(nu, lambda_coeff(n, m - k0, k, nu));
    }

    // Hybrid M22: term1 = M00·⟨H²⟩_i·⟨H²⟩_f and term2 = M11²/M00 are exact;
    // term3 is the N→∞ value t3 = C(m−2k,k0)C(m−k,k)/(C(m,k0)C(m−k0,k))
    // scaled back by M00·⟨H²⟩_i·⟨H²⟩_f, with the C(m−k0,k) factor cancelled
    // analytically against Λ⁰(N,m−k0,k) so the expression stays polynomial.
    let term1 = &m00_int * &h2_i * &h2_f;
    let term3 = binomial(m - 2 * k, k0)
        * binomial(m - k, k)
        * &h2_i
        * binomial(n - m + k0 + k, k);
    let m22 = int_to_f64(term1 + term3) + m11 * m11 / m00;

    UnitMoments { m00, m20, m02, m11, m40, m04, m31, m13, m22 }
}

/// Addition-mode moments via the exact duality
/// M_PQ(add; N,m) = [C(N,m+k0)/C(N,m)] · M_QP(removal; N,m+k0),
/// which follows from trace cyclicity and the conjugation invariance of the
/// two Gaussian ensembles. It reproduces the direct m→m+k0 substitution
/// forms wherever those are unambiguous (see tests).
fn unit_addition(n: i64, m: i64, k: i64, k0: i64) -> UnitMoments {
    let r = unit_removal(n, m + k0, k, k0);
    let ratio = int_ratio_to_f64(&binomial(n, m + k0), &binomial(n, m));
    UnitMoments {
        m00: ratio * r.m00,
        m20: ratio * r.m02,
        m02: ratio * r.m20,
        m11: ratio * r.m11,
        m40: ratio * r.m04,
        m04: ratio * r.m40,
        m31: ratio * r.m13,
        m13: ratio * r.m31,
        m22: ratio * r.m22,
    }
}

fn unit_moments(p: &ModelParams, mode: Mode) -> UnitMoments {
    match mode {
        Mode::Removal => unit_removal(p.n, p.m, p.k, p.k0),
        Mode::Addition => unit_addition(p.n, p.m, p.k, p.k0),
    }
}

/// All nine moments in physical units.
pub fn exact_moments(p: &ModelParams, mode: Mode) -> Result<BivariateMoments> {
    p.validate(mode)?;
    let u = unit_moments(p, mode);
    let s0 = p.vo2;
    let s2 = p.vo2 * p.vh2;
    let s4 = s2 * p.vh2;
    Ok(BivariateMoments {
        m00: s0 * u.m00,
        m20: s2 * u.m20,
        m02: s2 * u.m02,
        m11: s2 * u.m11,
        m40: s4 * u.m40,
        m04: s4 * u.m04,
        m31: s4 * u.m31,
        m13: s4 * u.m13,
        m22: s4 * u.m22,
        mode,
        provenance: Provenance::ExactHybrid,
    })
}

/// M00 = vo2·C(m,k0) for removal, vo2·C(N−m,k0) for addition: the total
/// ensemble-averaged strength per initial state.
pub fn m00(p: &ModelParams, mode: Mode) -> Result<f64> {
    Ok(exact_moments(p, mode)?.m00)
}

/// The four marginal moments (M20, M02, M40, M04): M00 times ⟨H²⟩ or ⟨H⁴⟩
/// in the initial and final spaces respectively.
pub fn m20_m02_m40_m04(p: &ModelParams, mode: Mode) -> Result<(f64, f64, f64, f64)> {
    let mm = exact_moments(p, mode)?;
    Ok((mm.m20, mm.m02, mm.m40, mm.m04))
}

/// The cross moment M11, the only P+Q = 2 moment that mixes the two spaces.
pub fn m11(p: &ModelParams, mode: Mode) -> Result<f64> {
    Ok(exact_moments(p, mode)?.m11)
}

pub fn m31(p: &ModelParams, mode: Mode) -> Result<f64> {
    Ok(exact_moments(p, mode)?.m31)
}

pub fn m13(p: &ModelParams, mode: Mode) -> Result<f64> {
    Ok(exact_moments(p, mode)?.m13)
}

/// M22 with exact first and second terms and the N→∞ third term.
pub fn m22_hybrid(p: &ModelParams, mode: Mode) -> Result<f64> {
    Ok(exact_moments(p, mode)?.m22)
}

/// The full moment set for the addition operator (final space m+k0).
pub fn addition_variants(p: &ModelParams) -> Result<BivariateMoments> {
    exact_moments(p, Mode::Addition)
}

/// Scale-free cumulants from a moment set: ξ is the bivariate correlation
/// coefficient and k40, k04, k31, k13, k22 are the excess (Gaussian-subtracted)
/// fourth-order cumulants
///
///   k40 = μ40 − 3,  k04 = μ04 − 3,  k31 = μ31 − 3ξ,  k13 = μ13 − 3ξ,
///   k22 = μ22 − 2ξ² − 1,
///
/// with μ_PQ = (M_PQ/M00) / (M̃20^{P/2} M̃02^{Q/2}).
pub fn cumulants(m: &BivariateMoments) -> Result<CumulantSet> {
    if !(m.m00 > 0.0) {
        return Err(Error::Domain(format!("m00 must be positive, got {}", m.m00)));
    }
    if !(m.m20 > 0.0 && m.m02 > 0.0) {
        return Err(Error::Domain(format!(
            "second moments must be positive, got m20={} m02={}",
            m.m20, m.m02
        )));
    }
    let t20 = m.m20 / m.m00;
    let t02 = m.m02 / m.m00;
    let geo = (t20 * t02).sqrt();
    let xi = m.m11 / m.m00 / geo;
    let mu40 = m.m40 / m.m00 / (t20 * t20);
    let mu04 = m.m04 / m.m00 / (t02 * t02);
    let mu31 = m.m31 / m.m00 / (t20 * geo);
    let mu13 = m.m13 / m.m00 / (t02 * geo);
    let mu22 = m.m22 / m.m00 / (t20 * t02);
    Ok(CumulantSet {
        xi,
        k40: mu40 - 3.0,
        k04: mu04 - 3.0,
        k31: mu31 - 3.0 * xi,
        k13: mu13 - 3.0 * xi,
        k22: mu22 - 2.0 * xi * xi - 1.0,
    })
}

/// Cumulants straight from the parameters. Computed from the unit-coupling
/// moments, so the result is bit-identical under any rescaling of vh2/vo2.
pub fn exact_cumulants(p: &ModelParams, mode: Mode) -> Result<CumulantSet> {
    p.validate(mode)?;
    let u = unit_moments(p, mode);
    cumulants(&BivariateMoments {
        m00: u.m00,
        m20: u.m20,
        m02: u.m02,
        m11: u.m11,
        m40: u.m40,
        m04: u.m04,
        m31: u.m31,
        m13: u.m13,
        m22: u.m22,
        mode,
        provenance: Provenance::ExactHybrid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn params(n: i64, m: i64, k: i64, k0: i64) -> ModelParams {
        ModelParams::new(n, m, k, k0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn h2_frozen_values() {
        assert_eq!(h2_moment(20, 10, 2).unwrap(), BigRational::from(big(2970)));
        assert_eq!(h2_moment(4, 2, 2).unwrap(), BigRational::from(big(6)));
        for &(n, m) in &[(10, 4), (20, 10), (7, 7)] {
            assert_eq!(h2_moment(n, m, 0).unwrap(), BigRational::from(big(1)));
        }
        assert!(h2_moment(10, 4, 5).is_err());
        assert!(h2_moment(4, 5, 1).is_err());
    }

    #[test]
    fn h4_frozen_values() {
        // m = k is an unembedded GUE of dimension d = C(N,m): ⟨H⁴⟩ = 2d²+1.
        assert_eq!(h4_moment(4, 2, 2).unwrap(), BigRational::from(big(73)));
        assert_eq!(h4_moment(5, 2, 2).unwrap(), BigRational::from(big(201)));
        assert_eq!(h4_moment(6, 3, 3).unwrap(), BigRational::from(big(801)));
        // k = 0 makes H a scalar Gaussian: fourth moment 3.
        assert_eq!(h4_moment(20, 10, 0).unwrap(), BigRational::from(big(3)));
        // h4 > 2·h2² always (the ν-sum is positive).
        let h2 = h2_moment(20, 10, 2).unwrap();
        assert!(h4_moment(20, 10, 2).unwrap() > &h2 * &h2 * BigRational::from(big(2)));
    }

    #[test]
    fn z11_domain_and_zeros() {
        assert!(z11(20, 10, 1, 2, 3).is_err()); // nu > k
        assert!(z11(20, 10, 1, 2, -1).is_err());
        assert!(z11(20, 10, 11, 2, 0).is_err()); // k0 > m
        // ν > N−m zeroes the initial-space Λ factor (bigger ν only more so).
        assert_eq!(z11(6, 5, 1, 3, 2).unwrap(), 0.0);
        assert_eq!(z11(6, 5, 1, 3, 3).unwrap(), 0.0);
        assert!(z11(6, 5, 1, 3, 1).unwrap() > 0.0);
    }

    #[test]
    fn m11_consistent_with_z11_sum() {
        let (n, m, k, k0) = (20, 10, 2, 1);
        let pref = int_ratio_to_f64(&binomial(n - k0, m - k0), &binomial(n, m));
        let mut sum = 0.0;
        for nu in 0..=k {
            sum += z11(n, m, k0, k, nu).unwrap();
        }
        let direct = m11(&params(n, m, k, k0), Mode::Removal).unwrap();
        assert_relative_eq!(direct, pref * sum, max_relative = 1e-13);
    }

    #[test]
    fn m00_frozen_values() {
        let p = ModelParams::new(20, 10, 2, 1, 1.0, 2.5).unwrap();
        assert_relative_eq!(m00(&p, Mode::Removal).unwrap(), 25.0, max_relative = 1e-14);
        assert_relative_eq!(m00(&p, Mode::Addition).unwrap(), 25.0, max_relative = 1e-13);
        let full = ModelParams::new(12, 5, 2, 5, 1.0, 3.0).unwrap();
        assert_relative_eq!(m00(&full, Mode::Removal).unwrap(), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn second_moments_factorize() {
        let p = ModelParams::new(20, 10, 2, 1, 1.75, 1.0).unwrap();
        let (m20, m02, m40, m04) = m20_m02_m40_m04(&p, Mode::Removal).unwrap();
        let base = m00(&p, Mode::Removal).unwrap();
        assert_relative_eq!(m20, base * 2970.0 * 1.75, max_relative = 1e-13);
        let h2f = ratio_to_f64(&h2_moment(20, 9, 2).unwrap());
        assert_relative_eq!(m02, base * h2f * 1.75, max_relative = 1e-13);
        assert!(m40 > 0.0 && m04 > 0.0);
        // h4 enters m40 exactly.
        let h4i = ratio_to_f64(&h4_moment(20, 10, 2).unwrap());
        assert_relative_eq!(m40, base * h4i * 1.75 * 1.75, max_relative = 1e-13);
        assert!(m04 < m40); // smaller final space at these parameters
    }

    // k = 0 is outside ModelParams (H would be a scalar), but the raw unit
    // engine must degenerate correctly: O† and O then see the same spectrum,
    // so M11 = M00 and M31 = M13 = 3·M00 (Gaussian fourth/second factorization).
    #[test]
    fn scalar_hamiltonian_degeneration() {
        for &(n, m, k0) in &[(8i64, 4i64, 1i64), (10, 5, 2), (12, 6, 3)] {
            let u = unit_removal(n, m, 0, k0);
            assert_relative_eq!(u.m11, u.m00, max_relative = 1e-12);
            assert_relative_eq!(u.m31, 3.0 * u.m00, max_relative = 1e-12);
            assert_relative_eq!(u.m13, 3.0 * u.m00, max_relative = 1e-12);
            assert_relative_eq!(u.m22, 3.0 * u.m00, max_relative = 1e-12);
        }
    }

    // k0 = 0 is likewise excluded (O would be a random multiple of the
    // identity), but the degenerate limit is a useful smoke check: both
    // spaces coincide, ξ = 1, and the hybrid k22 collapses onto the
    // asymptotic k40 form C(m−k,k)/C(m,k) − 1.
    #[test]
    fn identity_operator_degeneration() {
        for &(n, m, k) in &[(12i64, 6i64, 2i64), (16, 8, 3), (20, 10, 2)] {
            let u = unit_removal(n, m, k, 0);
            assert_relative_eq!(u.m20, u.m02, max_relative = 1e-14);
            assert_relative_eq!(u.m11, u.m20, max_relative = 1e-12);
            assert_relative_eq!(u.m31, u.m13, max_relative = 1e-14);
            let t20 = u.m20 / u.m00;
            let xi = u.m11 / u.m00 / t20;
            assert_relative_eq!(xi, 1.0, max_relative = 1e-12);
            let k22 = u.m22 / u.m00 / (t20 * t20) - 2.0 * xi * xi - 1.0;
            let (k40_inf, _) = crate::asymptotics::k40_k04_asymp(m, k, 1);
            assert_relative_eq!(k22, k40_inf, max_relative = 1e-10);
            // Addition with k0 = 0 is the same operator.
            let a = unit_addition(n, m, k, 0);
            assert_relative_eq!(a.m11, u.m11, max_relative = 1e-14);
            assert_relative_eq!(a.m31, u.m31, max_relative = 1e-14);
        }
    }

    #[test]
    fn reference_row_20_10_2_1() {
        let c = exact_cumulants(&params(20, 10, 2, 1), Mode::Removal).unwrap();
        assert!((c.xi - 0.82).abs() < 0.005);
        assert!((c.k40 - -0.54).abs() < 0.005);
        assert!((c.k04 - -0.55).abs() < 0.005);
        assert!((c.k31 - -0.44).abs() < 0.005);
        assert!((c.k13 - -0.45).abs() < 0.005);
        assert!((c.k22 - -0.21).abs() < 0.01);
    }

    #[test]
    fn reference_row_60_20_3_2() {
        let c = exact_cumulants(&params(60, 20, 3, 2), Mode::Removal).unwrap();
        assert!((c.xi - 0.79).abs() < 0.005);
        assert!((c.k40 - -0.51).abs() < 0.005);
        assert!((c.k04 - -0.54).abs() < 0.005);
        assert!((c.k31 - -0.40).abs() < 0.005);
        assert!((c.k13 - -0.43).abs() < 0.005);
        assert!((c.k22 - -0.22).abs() < 0.01);
    }

    #[test]
    fn reference_row_24_8_2_2_k22() {
        let c = exact_cumulants(&params(24, 8, 2, 2), Mode::Removal).unwrap();
        assert!((c.k22 - -0.22).abs() < 0.01);
    }

    #[test]
    fn gaussian_moments_have_zero_excess() {
        let (a, b, xi) = (2.3, 0.7, 0.62);
        let g = BivariateMoments {
            m00: 1.0,
            m20: a,
            m02: b,
            m11: xi * (a * b).sqrt(),
            m40: 3.0 * a * a,
            m04: 3.0 * b * b,
            m31: 3.0 * xi * a * (a * b).sqrt(),
            m13: 3.0 * xi * b * (a * b).sqrt(),
            m22: (1.0 + 2.0 * xi * xi) * a * b,
            mode: Mode::Removal,
            provenance: Provenance::Exact,
        };
        let c = cumulants(&g).unwrap();
        assert_relative_eq!(c.xi, xi, max_relative = 1e-14);
        for v in [c.k40, c.k04, c.k31, c.k13, c.k22] {
            assert!(v.abs() < 1e-13, "excess cumulant {v} should vanish");
        }
    }

    #[test]
    fn cumulants_reject_degenerate_moments() {
        let mut g = exact_moments(&params(12, 6, 2, 1), Mode::Removal).unwrap();
        g.m02 = 0.0;
        assert!(cumulants(&g).is_err());
        g.m02 = 1.0;
        g.m00 = 0.0;
        assert!(cumulants(&g).is_err());
    }

    #[test]
    fn cumulants_ignore_coupling_scales_bitwise() {
        let base = exact_cumulants(&params(20, 10, 2, 1), Mode::Removal).unwrap();
        for &(vh2, vo2) in &[(3.7, 0.04), (1e-6, 1e8), (0.5, 0.5)] {
            let p = ModelParams::new(20, 10, 2, 1, vh2, vo2).unwrap();
            let c = exact_cumulants(&p, Mode::Removal).unwrap();
            assert_eq!(base, c);
            // The float path through scaled moments agrees to rounding.
            let via = cumulants(&exact_moments(&p, Mode::Removal).unwrap()).unwrap();
            assert_relative_eq!(via.xi, base.xi, max_relative = 1e-12);
            assert_relative_eq!(via.k22, base.k22, max_relative = 1e-11, epsilon = 1e-12);
        }
    }

    #[test]
    fn addition_matches_literal_substitution() {
        // The duality mapping must reproduce the direct m−k0 → m+k0
        // substitution wherever that substitution is unambiguous.
        for &(n, m, k, k0) in &[(20i64, 10, 2, 1), (12, 5, 2, 2), (24, 8, 3, 2), (9, 3, 2, 1)] {
            let p = params(n, m, k, k0);
            let mm = exact_moments(&p, Mode::Addition).unwrap();
            let base = int_to_f64(binomial(n - m, k0));
            assert_relative_eq!(mm.m00, base, max_relative = 1e-13);
            let h2i = ratio_to_f64(&h2_moment(n, m, k).unwrap());
            let h2f = ratio_to_f64(&h2_moment(n, m + k0, k).unwrap());
            assert_relative_eq!(mm.m20, base * h2i, max_relative = 1e-13);
            assert_relative_eq!(mm.m02, base * h2f, max_relative = 1e-13);
            let h4i = ratio_to_f64(&h4_moment(n, m, k).unwrap());
            let h4f = ratio_to_f64(&h4_moment(n, m + k0, k).unwrap());
            assert_relative_eq!(mm.m40, base * h4i, max_relative = 1e-13);
            assert_relative_eq!(mm.m04, base * h4f, max_relative = 1e-13);
        }
    }

    #[test]
    fn addition_variants_is_addition_mode() {
        let p = params(12, 5, 2, 2);
        assert_eq!(
            addition_variants(&p).unwrap(),
            exact_moments(&p, Mode::Addition).unwrap()
        );
        // No room for k0 more particles → domain error.
        let tight = params(12, 11, 2, 2);
        assert!(addition_variants(&tight).is_err());
    }

    #[test]
    fn param_validation() {
        assert!(ModelParams::new(10, 11, 2, 1, 1.0, 1.0).is_err()); // m > N
        assert!(ModelParams::new(10, 5, 0, 1, 1.0, 1.0).is_err()); // k = 0
        assert!(ModelParams::new(10, 5, 6, 1, 1.0, 1.0).is_err()); // k > m
        assert!(ModelParams::new(10, 5, 2, 0, 1.0, 1.0).is_err()); // k0 = 0
        assert!(ModelParams::new(10, 5, 2, 6, 1.0, 1.0).is_err()); // k0 > m
        assert!(ModelParams::new(10, 5, 2, 1, -1.0, 1.0).is_err());
        assert!(ModelParams::new(10, 5, 2, 1, 1.0, 0.0).is_err());
        assert!(ModelParams::new(10, 5, 2, 1, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn moments_serialize_round_trip() {
        let mm = exact_moments(&params(12, 6, 2, 1), Mode::Removal).unwrap();
        let js = serde_json::to_string(&mm).unwrap();
        assert!(js.contains("\"exact-hybrid\""));
        let back: BivariateMoments = serde_json::from_str(&js).unwrap();
        assert_eq!(mm, back);
    }

    fn valid_quad() -> impl Strategy<Value = (i64, i64, i64, i64)> {
        (6i64..=20)
            .prop_flat_map(|n| (Just(n), 2i64..=n.min(10)))
            .prop_flat_map(|(n, m)| (Just(n), Just(m), 1i64..=m.min(4), 1i64..=m.min(3)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Cauchy–Schwarz and 0 < ξ < 1 across the whole parameter box, both modes.
        #[test]
        fn xi_strictly_inside_unit_interval((n, m, k, k0) in valid_quad()) {
            prop_assume!(m - k0 >= k); // final space must support H
            let p = params(n, m, k, k0);
            for mode in [Mode::Removal, Mode::Addition] {
                if p.validate(mode).is_err() {
                    continue;
                }
                let mm = exact_moments(&p, mode).unwrap();
                prop_assert!(mm.m00 > 0.0 && mm.m20 > 0.0 && mm.m02 > 0.0);
                prop_assert!(mm.m11 * mm.m11 <= mm.m20 * mm.m02 * (1.0 + 1e-13));
                let c = cumulants(&mm).unwrap();
                prop_assert!(c.xi > 0.0 && c.xi < 1.0, "xi = {} at {:?} {:?}", c.xi, p, mode);
            }
        }

        // The marginal excess cumulants are negative (sub-Gaussian) whenever
        // the space genuinely fluctuates. At N = m the initial space is
        // one-dimensional, the density collapses to a single Gaussian
        // variable, and k40 = 0 exactly — checked separately below.
        #[test]
        fn marginal_cumulants_negative((n, m, k, k0) in valid_quad()) {
            prop_assume!(m - k0 >= k && n > m);
            let c = exact_cumulants(&params(n, m, k, k0), Mode::Removal).unwrap();
            prop_assert!(c.k40 < 0.0 && c.k40 > -2.0, "k40 = {}", c.k40);
            prop_assert!(c.k04 < 0.0 && c.k04 > -2.0, "k04 = {}", c.k04);
        }
    }

    #[test]
    fn filled_initial_space_is_exactly_gaussian() {
        // N = m leaves a single configuration: the density over the initial
        // energy is one Gaussian variable, so its excess kurtosis vanishes,
        // while the final space (N > m − k0) still fluctuates.
        let c = exact_cumulants(&params(9, 9, 1, 1), Mode::Removal).unwrap();
        assert!(c.k40.abs() < 1e-12, "k40 = {}", c.k40);
        assert!(c.k04 < -1e-3);
    }

    #[test]
    fn big_parameter_values_stay_finite() {
        // Large N/m exercise the >53-bit integer → f64 path.
        let c = exact_cumulants(&params(80, 40, 3, 2), Mode::Removal).unwrap();
        for v in [c.xi, c.k40, c.k04, c.k31, c.k13, c.k22] {
            assert!(v.is_finite());
        }
        let h4 = h4_moment(80, 40, 3).unwrap();
        assert!(h4.to_f64().is_some() || ratio_to_f64(&h4).is_finite());
    }
}

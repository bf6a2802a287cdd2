//! Explicit fermionic Fock-space construction: occupation-number bases,
//! configuration creation/annihilation with fermionic signs, and dense
//! embeddings of the k-body Hamiltonian and the k0-body transition operator.
//!
//! Everything here is desk-scale verification plumbing: dimensions stay small
//! (the closed-form side never touches this module), so matrices are dense
//! and bases are plain sorted vectors of bit masks.
//!
//! Sign convention: single-particle modes are ordered by bit index, and the
//! normalized configuration creation operator for a mask with bits
//! i1 < i2 < ... < ik is A†(config) = c†_{i1} c†_{i2} ... c†_{ik}. Its
//! adjoint therefore applies annihilators lowest-index first. Signs are
//! accumulated by counting occupied modes below each acted index. Any
//! consistent convention gives the same ensemble-averaged traces (they are
//! basis independent — itself one of the tests); this one is the cheapest on
//! bit masks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::combinatorics::binomial;
use crate::{Error, Result};

/// Hard ceiling on basis length, to keep an accidental build_basis(63, 30)
/// from trying to allocate the solar system.
const MAX_BASIS: usize = 10_000_000;

/// An m-particle occupation basis over N single-particle states: all N-bit
/// masks of popcount m, sorted ascending as integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    pub n: i64,
    pub m: i64,
    pub states: Vec<u64>,
}

impl FockBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Index of a mask in the basis, if it belongs there.
    pub fn position(&self, mask: u64) -> Option<usize> {
        self.states.binary_search(&mask).ok()
    }
}

/// A dense complex matrix between two occupation bases.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyOperator {
    pub rows_basis: FockBasis,
    pub cols_basis: FockBasis,
    pub entries: DMatrix<Complex64>,
}

/// All C(N,m) occupation masks in increasing order.
pub fn build_basis(n: i64, m: i64) -> Result<FockBasis> {
    if !(0 <= m && m <= n && n <= 63) {
        return Err(Error::Domain(format!(
            "build_basis needs 0 <= m <= N <= 63, got N={n} m={m}"
        )));
    }
    let dim = binomial(n, m)
        .to_usize()
        .filter(|&d| d <= MAX_BASIS)
        .ok_or_else(|| Error::CostGuard(format!("basis dimension C({n},{m}) exceeds {MAX_BASIS}")))?;
    let mut states = Vec::with_capacity(dim);
    if m == 0 {
        states.push(0);
    } else {
        // Gosper's hack: next-larger integer with the same popcount.
        let mut v: u64 = (1 << m) - 1;
        let limit: u64 = 1 << n;
        while v < limit {
            states.push(v);
            let c = v & v.wrapping_neg();
            let r = v + c;
            v = r | (((v ^ r) >> 2) / c);
        }
    }
    debug_assert_eq!(states.len(), dim);
    Ok(FockBasis { n, m, states })
}

/// Apply the annihilation part A(config) to a basis state. Returns the
/// resulting mask and the fermionic sign, or None when config is not a
/// subset of the state. Annihilators act lowest-index first (the exact
/// adjoint of A†(config) as defined in the module docs).
pub fn annihilate_config(state: u64, config: u64) -> Option<(u64, i32)> {
    if state & config != config {
        return None;
    }
    let mut s = state;
    let mut sign = 1i32;
    let mut c = config;
    while c != 0 {
        let b = c.trailing_zeros();
        if (s & ((1u64 << b) - 1)).count_ones() & 1 == 1 {
            sign = -sign;
        }
        s &= !(1u64 << b);
        c &= c - 1;
    }
    Some((s, sign))
}

/// Apply A†(config): creators act highest-index first, so that
/// A†(config)|0⟩ = +|config⟩. Returns None when any target mode is occupied.
pub fn create_config(state: u64, config: u64) -> Option<(u64, i32)> {
    if state & config != 0 {
        return None;
    }
    let mut s = state;
    let mut sign = 1i32;
    let mut c = config;
    while c != 0 {
        let b = 63 - c.leading_zeros();
        if (s & ((1u64 << b) - 1)).count_ones() & 1 == 1 {
            sign = -sign;
        }
        s |= 1u64 << b;
        c &= !(1u64 << b);
    }
    Some((s, sign))
}

fn max_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Embed H = Σ_ij V_ij A†_i(k) A_j(k) into the m-particle space.
///
/// `v` is indexed by `basis_k` (the k-particle defining space); the result is
/// Hermitian on `basis_m`. V must be Hermitian to relative 1e-12.
pub fn build_hamiltonian(
    v: &DMatrix<Complex64>,
    basis_k: &FockBasis,
    basis_m: &FockBasis,
) -> Result<ManyBodyOperator> {
    if basis_k.n != basis_m.n {
        return Err(Error::Domain("defining and target bases disagree on N".into()));
    }
    if basis_k.m > basis_m.m {
        return Err(Error::Domain(format!(
            "k-body rank {} exceeds particle number {}",
            basis_k.m, basis_m.m
        )));
    }
    let dk = basis_k.dim();
    if v.nrows() != dk || v.ncols() != dk {
        return Err(Error::Domain(format!(
            "V is {}x{}, expected {dk}x{dk}",
            v.nrows(),
            v.ncols()
        )));
    }
    if max_norm(&(v - v.adjoint())) > 1e-12 * max_norm(v) {
        return Err(Error::Domain("V is not Hermitian within 1e-12".into()));
    }

    let dm = basis_m.dim();
    let mut h = DMatrix::<Complex64>::zeros(dm, dm);
    for (jv, &state) in basis_m.states.iter().enumerate() {
        for (jc, &cj) in basis_k.states.iter().enumerate() {
            let Some((w, s1)) = annihilate_config(state, cj) else {
                continue;
            };
            for (ic, &ci) in basis_k.states.iter().enumerate() {
                if w & ci != 0 {
                    continue;
                }
                let (u, s2) = create_config(w, ci).expect("modes checked free");
                let iu = basis_m.position(u).expect("action is popcount preserving");
                h[(iu, jv)] += v[(ic, jc)] * ((s1 * s2) as f64);
            }
        }
    }
    Ok(ManyBodyOperator {
        rows_basis: basis_m.clone(),
        cols_basis: basis_m.clone(),
        entries: h,
    })
}

/// Embed the transition operator O = Σ_α V_α A_α(k0) (removal: final basis
/// has m−k0 particles) or O = Σ_α V_α A†_α(k0) (addition: m+k0). The mode is
/// inferred from the particle numbers of the two bases.
pub fn build_transition(
    valpha: &DVector<Complex64>,
    basis_k0: &FockBasis,
    basis_i: &FockBasis,
    basis_f: &FockBasis,
) -> Result<ManyBodyOperator> {
    if basis_k0.n != basis_i.n || basis_i.n != basis_f.n {
        return Err(Error::Domain("bases disagree on N".into()));
    }
    let dk = basis_k0.dim();
    if valpha.len() != dk {
        return Err(Error::Domain(format!(
            "V_alpha has length {}, expected {dk}",
            valpha.len()
        )));
    }
    let k0 = basis_k0.m;
    let removal = if basis_f.m == basis_i.m - k0 {
        true
    } else if basis_f.m == basis_i.m + k0 {
        false
    } else {
        return Err(Error::Domain(format!(
            "final basis has {} particles; expected {} ± {}",
            basis_f.m, basis_i.m, k0
        )));
    };

    let mut o = DMatrix::<Complex64>::zeros(basis_f.dim(), basis_i.dim());
    for (jv, &state) in basis_i.states.iter().enumerate() {
        for (a, &ca) in basis_k0.states.iter().enumerate() {
            let stepped = if removal {
                annihilate_config(state, ca)
            } else {
                create_config(state, ca)
            };
            let Some((w, s)) = stepped else { continue };
            let iw = basis_f.position(w).expect("action is popcount shifting");
            o[(iw, jv)] += valpha[a] * (s as f64);
        }
    }
    Ok(ManyBodyOperator {
        rows_basis: basis_f.clone(),
        cols_basis: basis_i.clone(),
        entries: o,
    })
}

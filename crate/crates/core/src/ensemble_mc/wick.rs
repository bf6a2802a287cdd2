//! Exact ensemble-averaged moments by explicit Wick contraction.
//!
//! The trace tr[O† H^Q O H^P] is a word in the operators {O†, O, H, ..., H}.
//! Both coupling ensembles are zero-centered Gaussian, so the ensemble
//! average is a sum over pair partitions (Isserlis): the O†–O pairing is
//! forced (O and H couplings are independent, mixed pairings vanish), and the
//! P+Q Hamiltonian slots contribute one partition for two slots and three for
//! four; odd P+Q averages to zero identically. A paired H slot expands
//! through the defining-space covariance E[V_ij V_kl] = vh2 δ_il δ_jk into
//! Σ_ij A†_i A_j ⊗ A†_j A_i across the two spaces the slots act in, and the
//! O pairing into Σ_α A†_α ⊗ A_α. What remains is a sum over defining-space
//! indices of traces of products of explicit Fock-space matrices — no
//! angular-momentum algebra anywhere, which is exactly what makes this an
//! independent oracle for the closed forms.
//!
//! Two observations keep those nested sums affordable. First, with the
//! couplings integrated out, every matrix left in the word is a fixed
//! configuration operator: a signed partial permutation (at most one ±1 per
//! row and per column), a class closed under products, so long runs of them
//! collapse in O(dim) instead of a matrix multiply. Dense matrices appear
//! only as transfer-sum accumulations. Second, paired indices whose
//! in-between factors are already concrete are eliminated by transfer sums;
//! everything else is looped one index at a time (smallest range first,
//! preferring an index whose elimination unblocks a transfer sum). Dense ×
//! dense products memoize by operand identity for the duration of one oracle
//! call. Each call is single-threaded and deterministic; distinct calls can
//! run concurrently.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::combinatorics::binomial;
use crate::exact_moments::{Mode, ModelParams};
use crate::fock_space::{build_basis, build_transition, FockBasis};
use crate::{Error, Result};

type RMat = DMatrix<f64>;
type AMat = Arc<RMat>;

/// Signed partial permutation: column c maps to at most one row with weight
/// ±1, and no row is hit twice. Configuration operators and all their
/// products have this shape.
#[derive(Debug, Clone)]
struct Sel {
    nrows: usize,
    ncols: usize,
    /// per column: (row, sign)
    map: Vec<Option<(usize, f64)>>,
}

impl Sel {
    fn from_dense(m: &RMat) -> Option<Sel> {
        let mut map = vec![None; m.ncols()];
        let mut row_used = vec![false; m.nrows()];
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v != 0.0 {
                    if map[c].is_some() || row_used[r] {
                        return None;
                    }
                    map[c] = Some((r, v));
                    row_used[r] = true;
                }
            }
        }
        Some(Sel { nrows: m.nrows(), ncols: m.ncols(), map })
    }

    fn transpose(&self) -> Sel {
        let mut map = vec![None; self.nrows];
        for (c, e) in self.map.iter().enumerate() {
            if let Some((r, s)) = e {
                map[*r] = Some((c, *s));
            }
        }
        Sel { nrows: self.ncols, ncols: self.nrows, map }
    }

    /// a · b as partial permutations.
    fn compose(a: &Sel, b: &Sel) -> Sel {
        debug_assert_eq!(a.ncols, b.nrows);
        let map = b
            .map
            .iter()
            .map(|e| e.and_then(|(r1, s1)| a.map[r1].map(|(r2, s2)| (r2, s1 * s2))))
            .collect();
        Sel { nrows: a.nrows, ncols: b.ncols, map }
    }

    fn trace(&self) -> f64 {
        self.map
            .iter()
            .enumerate()
            .filter_map(|(c, e)| e.filter(|(r, _)| *r == c).map(|(_, s)| s))
            .sum()
    }

    #[cfg(test)]
    fn to_dense(&self) -> RMat {
        let mut m = RMat::zeros(self.nrows, self.ncols);
        for (c, e) in self.map.iter().enumerate() {
            if let Some((r, s)) = e {
                m[(*r, c)] = *s;
            }
        }
        m
    }
}

fn sel_mul_dense(a: &Sel, y: &RMat) -> RMat {
    debug_assert_eq!(a.ncols, y.nrows());
    let mut out = RMat::zeros(a.nrows, y.ncols());
    for (c, e) in a.map.iter().enumerate() {
        if let Some((r, s)) = e {
            for j in 0..y.ncols() {
                out[(*r, j)] = s * y[(c, j)];
            }
        }
    }
    out
}

fn dense_mul_sel(y: &RMat, b: &Sel) -> RMat {
    debug_assert_eq!(y.ncols(), b.nrows);
    let mut out = RMat::zeros(y.nrows(), b.ncols);
    for (c, e) in b.map.iter().enumerate() {
        if let Some((r, s)) = e {
            for i in 0..y.nrows() {
                out[(i, c)] = s * y[(i, *r)];
            }
        }
    }
    out
}

/// A concrete matrix value: sparse partial permutation or dense.
#[derive(Clone)]
enum Val {
    Sp(Arc<Sel>),
    Dn(AMat),
}

impl Val {
    fn nrows(&self) -> usize {
        match self {
            Val::Sp(s) => s.nrows,
            Val::Dn(m) => m.nrows(),
        }
    }

    fn ncols(&self) -> usize {
        match self {
            Val::Sp(s) => s.ncols,
            Val::Dn(m) => m.ncols(),
        }
    }

    fn trace(&self) -> f64 {
        match self {
            Val::Sp(s) => s.trace(),
            Val::Dn(m) => m.trace(),
        }
    }

    #[cfg(test)]
    fn dense(&self) -> RMat {
        match self {
            Val::Sp(s) => s.to_dense(),
            Val::Dn(m) => (**m).clone(),
        }
    }
}

type Table = Arc<Vec<Val>>;

/// Dense products cheaper than this many scalar multiplies are recomputed
/// rather than cached; caching them would cost more memory than time.
const CACHE_MIN_COST: usize = 2048;

/// Upper bound on memory pinned by the product cache (operands + results).
/// Hitting it flushes the whole cache: reusable products re-fill within one
/// transfer sum, while one-shot intermediates stop accumulating.
const CACHE_MAX_BYTES: usize = 192 << 20;

#[derive(Clone)]
enum Atom {
    Mat(Val),
    Sym { table: Table, var: usize },
}

impl Atom {
    fn var(&self) -> Option<usize> {
        match self {
            Atom::Mat(_) => None,
            Atom::Sym { var, .. } => Some(*var),
        }
    }

    fn first(&self) -> &Val {
        match self {
            Atom::Mat(v) => v,
            Atom::Sym { table, .. } => &table[0],
        }
    }

    fn nrows(&self) -> usize {
        self.first().nrows()
    }

    fn ncols(&self) -> usize {
        self.first().ncols()
    }
}

/// Product engine. Sparse × anything is cheap and never cached; dense ×
/// dense products memoize by operand address, with the operands kept alive
/// inside the map so an address can never be recycled under us. Total pinned
/// memory is bounded by [`CACHE_MAX_BYTES`].
struct Engine {
    cache: HashMap<(usize, usize), (AMat, AMat, AMat)>,
    pinned_bytes: usize,
}

fn mat_bytes(m: &RMat) -> usize {
    m.nrows() * m.ncols() * std::mem::size_of::<f64>()
}

impl Engine {
    fn new() -> Self {
        Engine { cache: HashMap::new(), pinned_bytes: 0 }
    }

    fn mul(&mut self, a: &Val, b: &Val) -> Val {
        match (a, b) {
            (Val::Sp(x), Val::Sp(y)) => Val::Sp(Arc::new(Sel::compose(x, y))),
            (Val::Sp(x), Val::Dn(y)) => Val::Dn(Arc::new(sel_mul_dense(x, y))),
            (Val::Dn(x), Val::Sp(y)) => Val::Dn(Arc::new(dense_mul_sel(x, y))),
            (Val::Dn(x), Val::Dn(y)) => Val::Dn(self.mul_dense(x, y)),
        }
    }

    fn mul_dense(&mut self, a: &AMat, b: &AMat) -> AMat {
        if a.nrows() * a.ncols() * b.ncols() < CACHE_MIN_COST {
            return Arc::new(&**a * &**b);
        }
        let key = (Arc::as_ptr(a) as usize, Arc::as_ptr(b) as usize);
        if let Some((_, _, r)) = self.cache.get(&key) {
            return r.clone();
        }
        let r = Arc::new(&**a * &**b);
        let entry_bytes = mat_bytes(a) + mat_bytes(b) + mat_bytes(&r);
        if self.pinned_bytes + entry_bytes > CACHE_MAX_BYTES {
            self.cache.clear();
            self.pinned_bytes = 0;
        }
        self.pinned_bytes += entry_bytes;
        self.cache.insert(key, (a.clone(), b.clone(), r.clone()));
        r
    }

    /// Product of a chain, collapsing sparse runs first (left to right, free)
    /// and then splitting the dense remainder at the smallest intermediate
    /// dimension; with memoization this reproduces the pair-table
    /// contraction schemes one would write by hand.
    fn chain(&mut self, mats: &[Val]) -> Val {
        match mats.len() {
            0 => unreachable!("empty chain"),
            1 => mats[0].clone(),
            2 => self.mul(&mats[0], &mats[1]),
            n => {
                // Merge adjacent sparse pairs first — O(dim) each and they
                // keep the chain sparse for as long as possible.
                if let Some(i) = (0..n - 1)
                    .find(|&i| matches!((&mats[i], &mats[i + 1]), (Val::Sp(_), Val::Sp(_))))
                {
                    let merged = self.mul(&mats[i], &mats[i + 1]);
                    let mut rest: Vec<Val> = Vec::with_capacity(n - 1);
                    rest.extend_from_slice(&mats[..i]);
                    rest.push(merged);
                    rest.extend_from_slice(&mats[i + 2..]);
                    return self.chain(&rest);
                }
                let cut = (1..n).min_by_key(|&i| mats[i].nrows()).unwrap();
                let l = self.chain(&mats[..cut]);
                let r = self.chain(&mats[cut..]);
                self.mul(&l, &r)
            }
        }
    }

    /// Trace of a cyclic product: cut the cycle at its two smallest boundary
    /// dimensions and pair the two halves.
    fn cycle_trace(&mut self, mats: &[Val]) -> f64 {
        if mats.len() == 1 {
            return mats[0].trace();
        }
        let mut cuts: Vec<usize> = (0..mats.len()).collect();
        cuts.sort_by_key(|&j| (mats[j].nrows(), j));
        let (c1, c2) = (cuts[0].min(cuts[1]), cuts[0].max(cuts[1]));
        let a = self.chain(&mats[c1..c2]);
        let rest: Vec<Val> = mats[c2..].iter().chain(&mats[..c1]).cloned().collect();
        let b = self.chain(&rest);
        tr_pair_val(&a, &b)
    }
}

/// tr(a·b) without forming a·b.
fn tr_pair_val(a: &Val, b: &Val) -> f64 {
    debug_assert_eq!((a.nrows(), a.ncols()), (b.ncols(), b.nrows()));
    match (a, b) {
        (Val::Sp(x), Val::Sp(y)) => Sel::compose(x, y).trace(),
        (Val::Sp(x), Val::Dn(y)) | (Val::Dn(y), Val::Sp(x)) => {
            // tr(X·Y) = Σ_{c→(r,s)} s · Y[c, r]
            x.map
                .iter()
                .enumerate()
                .filter_map(|(c, e)| e.map(|(r, s)| s * y[(c, r)]))
                .sum()
        }
        (Val::Dn(x), Val::Dn(y)) => {
            let mut s = 0.0;
            for i in 0..x.nrows() {
                for j in 0..x.ncols() {
                    s += x[(i, j)] * y[(j, i)];
                }
            }
            s
        }
    }
}

fn occurrences(word: &[Atom]) -> BTreeMap<usize, Vec<usize>> {
    let mut occ: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, atom) in word.iter().enumerate() {
        if let Some(v) = atom.var() {
            occ.entry(v).or_default().push(pos);
        }
    }
    occ
}

fn is_mat(atom: &Atom) -> bool {
    matches!(atom, Atom::Mat(_))
}

/// Positions strictly between p1 and p2 going forward (cyclically).
fn arc_positions(n: usize, p1: usize, p2: usize) -> impl Iterator<Item = usize> {
    (1..(p2 + n - p1) % n).map(move |s| (p1 + s) % n)
}

/// A variable is contractible when its two occurrences are separated, on at
/// least one side, by concrete matrices only. Returns (var, start_occurrence)
/// for the cheapest choice, scored by range × size of the transfer result.
fn best_contraction(word: &[Atom], skip_if_marked: Option<usize>) -> Option<(usize, usize)> {
    let n = word.len();
    let concrete = |p: usize| is_mat(&word[p]) || word[p].var() == skip_if_marked;
    let mut best: Option<(usize, usize, usize)> = None; // (score, var, start)
    for (v, pos) in occurrences(word) {
        if Some(v) == skip_if_marked {
            continue;
        }
        debug_assert_eq!(pos.len(), 2, "every Gaussian index appears twice");
        let (p1, p2) = (pos[0], pos[1]);
        let range = match &word[p1] {
            Atom::Sym { table, .. } => table.len(),
            Atom::Mat(_) => unreachable!(),
        };
        for (a, b) in [(p1, p2), (p2, p1)] {
            if arc_positions(n, a, b).all(concrete) {
                let score = range * word[a].nrows() * word[b].ncols();
                if best.map_or(true, |(s, ..)| score < s) {
                    best = Some((score, v, a));
                }
            }
        }
    }
    best.map(|(_, v, a)| (v, a))
}

fn substitute(word: &[Atom], v: usize, x: usize) -> Vec<Atom> {
    word.iter()
        .map(|atom| match atom {
            Atom::Sym { table, var } if *var == v => Atom::Mat(table[x].clone()),
            other => other.clone(),
        })
        .collect()
}

fn eval_cycle(mut word: Vec<Atom>, eng: &mut Engine) -> f64 {
    loop {
        let occ = occurrences(&word);

        if occ.is_empty() {
            let mats: Vec<Val> = word
                .iter()
                .map(|a| match a {
                    Atom::Mat(v) => v.clone(),
                    _ => unreachable!(),
                })
                .collect();
            return eng.cycle_trace(&mats);
        }

        // Last remaining index: sum cycle traces directly, letting the
        // cycle splitter and the product cache share work across values.
        if occ.len() == 1 {
            let (&v, _) = occ.iter().next().unwrap();
            let range = word
                .iter()
                .find_map(|a| match a {
                    Atom::Sym { table, var } if *var == v => Some(table.len()),
                    _ => None,
                })
                .unwrap();
            let mut total = 0.0;
            for x in 0..range {
                let mats: Vec<Val> = substitute(&word, v, x)
                    .into_iter()
                    .map(|a| match a {
                        Atom::Mat(v) => v,
                        _ => unreachable!(),
                    })
                    .collect();
                total += eng.cycle_trace(&mats);
            }
            return total;
        }

        if let Some((v, start)) = best_contraction(&word, None) {
            word = contract(word, v, start, eng);
            continue;
        }

        // No transfer sum available: loop over one index and recurse.
        // Prefer an index whose elimination makes some other index
        // contractible; among those, the smallest range, then the lowest id.
        let chosen = occ
            .keys()
            .map(|&v| {
                let unlocks = best_contraction(&word, Some(v)).is_some();
                let range = word
                    .iter()
                    .find_map(|a| match a {
                        Atom::Sym { table, var } if *var == v => Some(table.len()),
                        _ => None,
                    })
                    .unwrap();
                (!unlocks, range, v)
            })
            .min()
            .map(|(_, _, v)| v)
            .unwrap();
        let range = word
            .iter()
            .find_map(|a| match a {
                Atom::Sym { table, var } if *var == chosen => Some(table.len()),
                _ => None,
            })
            .unwrap();
        let mut total = 0.0;
        for x in 0..range {
            total += eval_cycle(substitute(&word, chosen, x), eng);
        }
        return total;
    }
}

fn add_val_into(acc: &mut RMat, v: &Val) {
    match v {
        Val::Sp(s) => {
            for (c, e) in s.map.iter().enumerate() {
                if let Some((r, w)) = e {
                    acc[(*r, c)] += w;
                }
            }
        }
        Val::Dn(m) => *acc += &**m,
    }
}

/// Transfer sum Σ_x A(x)·C₁···C_j·B(x) over the concrete arc that starts at
/// the occurrence `start`; the pair of atoms collapses to one matrix.
fn contract(mut word: Vec<Atom>, v: usize, start: usize, eng: &mut Engine) -> Vec<Atom> {
    word.rotate_left(start);
    let n = word.len();
    let partner = (1..n).find(|&p| word[p].var() == Some(v)).unwrap();
    let table_a = match &word[0] {
        Atom::Sym { table, .. } => table.clone(),
        _ => unreachable!(),
    };
    let table_b = match &word[partner] {
        Atom::Sym { table, .. } => table.clone(),
        _ => unreachable!(),
    };
    let arc: Vec<Val> = word[1..partner]
        .iter()
        .map(|a| match a {
            Atom::Mat(v) => v.clone(),
            _ => unreachable!("arc was checked concrete"),
        })
        .collect();

    let mut acc = RMat::zeros(table_a[0].nrows(), table_b[0].ncols());
    let mut link: Vec<Val> = Vec::with_capacity(arc.len() + 2);
    for x in 0..table_a.len() {
        link.clear();
        link.push(table_a[x].clone());
        link.extend(arc.iter().cloned());
        link.push(table_b[x].clone());
        let term = eng.chain(&link);
        add_val_into(&mut acc, &term);
    }

    let mut out = Vec::with_capacity(n - partner);
    out.push(Atom::Mat(Val::Dn(Arc::new(acc))));
    out.extend(word.drain(partner + 1..));
    out
}

/// A single-configuration transition matrix has exactly real (signed
/// integer) entries; strip the vanishing imaginary part.
fn to_real(m: &DMatrix<Complex64>) -> RMat {
    debug_assert!(m.iter().all(|z| z.im == 0.0));
    m.map(|z| z.re)
}

/// Classify a configuration matrix, falling back to dense storage if it is
/// ever not a partial permutation (correctness never depends on sparsity).
fn classify(m: RMat) -> Val {
    match Sel::from_dense(&m) {
        Some(sel) => Val::Sp(Arc::new(sel)),
        None => Val::Dn(Arc::new(m)),
    }
}

fn transpose_val(v: &Val) -> Val {
    match v {
        Val::Sp(s) => Val::Sp(Arc::new(s.transpose())),
        Val::Dn(m) => Val::Dn(Arc::new(m.transpose())),
    }
}

/// The matrices of the normalized configuration operators B_j(r): one
/// `r`-body annihilation matrix per defining-space configuration, mapping the
/// `from`-particle basis down to `from − r` particles.
fn config_table(n: i64, r: i64, from: i64) -> Result<Vec<Val>> {
    let bk = build_basis(n, r)?;
    let bi = build_basis(n, from)?;
    let bf = build_basis(n, from - r)?;
    let mut mats = Vec::with_capacity(bk.dim());
    for a in 0..bk.dim() {
        let mut e = DVector::<Complex64>::zeros(bk.dim());
        e[a] = Complex64::new(1.0, 0.0);
        mats.push(classify(to_real(&build_transition(&e, &bk, &bi, &bf)?.entries)));
    }
    Ok(mats)
}

fn adjoint_table(mats: &[Val]) -> Vec<Val> {
    mats.iter().map(transpose_val).collect()
}

fn basis_transition_table(bk0: &FockBasis, bi: &FockBasis, bf: &FockBasis) -> Result<Vec<Val>> {
    let mut mats = Vec::with_capacity(bk0.dim());
    for a in 0..bk0.dim() {
        let mut e = DVector::<Complex64>::zeros(bk0.dim());
        e[a] = Complex64::new(1.0, 0.0);
        mats.push(classify(to_real(&build_transition(&e, bk0, bi, bf)?.entries)));
    }
    Ok(mats)
}

fn pairings(count: usize) -> Vec<Vec<(usize, usize)>> {
    if count == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let free: Vec<usize> = (0..count).collect();
    fn rec(free: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if free.is_empty() {
            out.push(acc.clone());
            return;
        }
        let a = free[0];
        for (idx, &b) in free.iter().enumerate().skip(1) {
            let rest: Vec<usize> = free[1..]
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != idx - 1)
                .map(|(_, &x)| x)
                .collect();
            acc.push((a, b));
            rec(&rest, acc, out);
            acc.pop();
        }
    }
    rec(&free, &mut Vec::new(), &mut out);
    out
}

/// Exact ensemble-averaged moment M_PQ = ⟨⟨tr(O† H_f^Q O H_i^P)⟩⟩/C(N,m),
/// computed by Wick contraction over explicit Fock-space matrices. No
/// sampling error; float rounding only. Cost guards keep the Fock dimensions
/// desk-sized: C(N,m) ≤ 70 and C(N,k), C(N,k0) ≤ 60.
pub fn wick_oracle(params: &ModelParams, mode: Mode, p: u32, q: u32) -> Result<f64> {
    if p + q > 4 {
        return Err(Error::Domain(format!("wick oracle covers P+Q <= 4, got {p}+{q}")));
    }
    params.validate(mode)?;
    let (n, m, k, k0) = (params.n, params.m, params.k, params.k0);
    let dim_m = binomial(n, m)
        .to_usize()
        .filter(|&d| d <= 70)
        .ok_or_else(|| Error::CostGuard(format!("wick oracle needs C(N,m) <= 70, got C({n},{m})")))?;
    for (label, r) in [("k", k), ("k0", k0)] {
        if binomial(n, r).to_usize().map_or(true, |d| d > 60) {
            return Err(Error::CostGuard(format!(
                "wick oracle needs C(N,{label}) <= 60, got C({n},{r})"
            )));
        }
    }

    if (p + q) % 2 == 1 {
        return Ok(0.0); // odd number of H factors: no complete pairing
    }
    let f = match mode {
        Mode::Removal => m - k0,
        Mode::Addition => m + k0,
    };
    if q > 0 && f < k {
        return Ok(0.0); // H vanishes identically in the final space
    }

    let bm = build_basis(n, m)?;
    let bf = build_basis(n, f)?;
    let bk0 = build_basis(n, k0)?;

    let o_table: Table = Arc::new(basis_transition_table(&bk0, &bm, &bf)?);
    let odag_table: Table = Arc::new(adjoint_table(&o_table));
    let down_m: Table = Arc::new(config_table(n, k, m)?);
    let up_m: Table = Arc::new(adjoint_table(&down_m));
    let (down_f, up_f): (Table, Table) = if q > 0 {
        let d = config_table(n, k, f)?;
        let u = adjoint_table(&d);
        (Arc::new(d), Arc::new(u))
    } else {
        (Arc::new(Vec::new()), Arc::new(Vec::new()))
    };

    // Word in matrix order: O† · (Hf)^q · O · (Hi)^p. Slot s < q is an
    // Hf slot, the rest are Hi slots.
    let slot_tables = |slot: usize| -> (Table, Table) {
        if slot < q as usize {
            (up_f.clone(), down_f.clone())
        } else {
            (up_m.clone(), down_m.clone())
        }
    };

    let mut eng = Engine::new();
    let mut total = 0.0;
    for matching in pairings((p + q) as usize) {
        // var 0 is the O index; pair t owns vars (2t+1, 2t+2)
        let mut slot_atoms: Vec<Option<(Atom, Atom)>> = vec![None; (p + q) as usize];
        for (t, &(a, b)) in matching.iter().enumerate() {
            let (vi, vj) = (2 * t + 1, 2 * t + 2);
            let (up_a, down_a) = slot_tables(a);
            let (up_b, down_b) = slot_tables(b);
            slot_atoms[a] = Some((
                Atom::Sym { table: up_a, var: vi },
                Atom::Sym { table: down_a, var: vj },
            ));
            slot_atoms[b] = Some((
                Atom::Sym { table: up_b, var: vj },
                Atom::Sym { table: down_b, var: vi },
            ));
        }
        let mut word = Vec::with_capacity(2 + 2 * (p + q) as usize);
        word.push(Atom::Sym { table: odag_table.clone(), var: 0 });
        for atoms in slot_atoms.iter().take(q as usize) {
            let (u, d) = atoms.clone().unwrap();
            word.push(u);
            word.push(d);
        }
        word.push(Atom::Sym { table: o_table.clone(), var: 0 });
        for atoms in slot_atoms.iter().skip(q as usize) {
            let (u, d) = atoms.clone().unwrap();
            word.push(u);
            word.push(d);
        }
        total += eval_cycle(word, &mut eng);
    }

    let scale = params.vo2 * params.vh2.powi(((p + q) / 2) as i32);
    Ok(total * scale / dim_m as f64)
}

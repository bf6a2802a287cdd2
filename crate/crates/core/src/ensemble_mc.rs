//! Monte Carlo estimation over the embedded ensemble, plus the exact Wick
//! oracle that the sampler is checked against.
//!
//! One sample draws a defining-space Hamiltonian V(k) and an independent
//! transition-coupling vector, embeds both into the relevant particle-number
//! spaces, and reads every bivariate moment tr(O† H_f^Q O H_i^P)/C(N,m) for
//! P+Q ≤ 4 off matrix products — eigendecomposition is only needed for the
//! strength histogram, which also recomputes the same moments from the
//! spectral decomposition as a cross-check on both code paths.
//!
//! Reproducibility contract: a sample's randomness is keyed by (seed, sample
//! index, which object) through independent ChaCha8 streams, normals come
//! from an explicit Box–Muller transform, and matrix elements are drawn in a
//! fixed documented order. Samples may be evaluated on any number of worker
//! threads; results are reduced in sample order, so every configuration of
//! the thread pool produces bit-identical output.

mod wick;

pub use wick::wick_oracle;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, ratio_to_f64};
use crate::exact_moments::{
    exact_cumulants, h2_moment, BivariateMoments, Mode, ModelParams, MomentStdErrors, Provenance,
};
use crate::fock_space::{build_basis, build_hamiltonian, build_transition, FockBasis};
use crate::{Error, Result};

/// The (P,Q) grid covered by the sampler, in reading order.
pub const MOMENT_ORDERS: [(u32, u32); 15] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
    (4, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 4),
];

fn default_dim_cap() -> usize {
    5000
}

/// Parameters of one Monte Carlo run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub params: ModelParams,
    pub mode: Mode,
    pub n_samples: usize,
    pub seed: u64,
    /// Largest many-body dimension this run is willing to build.
    #[serde(default = "default_dim_cap")]
    pub dim_cap: usize,
}

impl EnsembleConfig {
    pub fn new(params: ModelParams, mode: Mode, n_samples: usize, seed: u64) -> Self {
        EnsembleConfig { params, mode, n_samples, seed, dim_cap: default_dim_cap() }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate(self.mode)?;
        if self.n_samples < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 samples for a standard error, got {}",
                self.n_samples
            )));
        }
        let (n, m) = (self.params.n, self.params.m);
        let f = self.final_particles();
        for space in [m, f] {
            let dim = binomial(n, space).to_usize();
            if dim.map_or(true, |d| d > self.dim_cap) {
                return Err(Error::CostGuard(format!(
                    "C({n},{space}) exceeds the dimension cap {}",
                    self.dim_cap
                )));
            }
        }
        Ok(())
    }

    fn final_particles(&self) -> i64 {
        match self.mode {
            Mode::Removal => self.params.m - self.params.k0,
            Mode::Addition => self.params.m + self.params.k0,
        }
    }
}

/// Mean and batch-means standard error of one sampled moment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McEstimate {
    pub p: u32,
    pub q: u32,
    pub mean: f64,
    pub se: f64,
}

/// Monte Carlo estimates for every moment with P+Q ≤ 4, odd orders included
/// (they average to zero only up to sampling noise, which is worth seeing).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McMomentEstimates {
    pub entries: Vec<McEstimate>,
    pub n_samples: usize,
}

impl McMomentEstimates {
    pub fn get(&self, p: u32, q: u32) -> Option<&McEstimate> {
        self.entries.iter().find(|e| e.p == p && e.q == q)
    }

    /// Repackage the even-order estimates as a moment set, standard errors
    /// riding along in the provenance.
    pub fn to_moments(&self, mode: Mode) -> BivariateMoments {
        let g = |p, q| self.get(p, q).expect("full grid").mean;
        let s = |p, q| self.get(p, q).expect("full grid").se;
        BivariateMoments {
            m00: g(0, 0),
            m20: g(2, 0),
            m02: g(0, 2),
            m11: g(1, 1),
            m40: g(4, 0),
            m04: g(0, 4),
            m31: g(3, 1),
            m13: g(1, 3),
            m22: g(2, 2),
            mode,
            provenance: Provenance::Mc {
                se: MomentStdErrors {
                    m00: s(0, 0),
                    m20: s(2, 0),
                    m02: s(0, 2),
                    m11: s(1, 1),
                    m40: s(4, 0),
                    m04: s(0, 4),
                    m31: s(3, 1),
                    m13: s(1, 3),
                    m22: s(2, 2),
                },
            },
        }
    }
}

/// One standard normal pair via Box–Muller. Written out explicitly so the
/// mapping from ChaCha8 output to matrix elements is pinned down by this
/// crate, not by a distribution crate's internals.
fn standard_normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let mut u1: f64 = rng.gen();
    while u1 <= 0.0 {
        u1 = rng.gen();
    }
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// GUE draw in the defining space: Hermitian, E[V_ab V_cd] = variance·δ_ad δ_bc.
/// Diagonal entries are real N(0, variance); off-diagonal real and imaginary
/// parts are independent N(0, variance/2). Element order is fixed: the
/// diagonal first (ascending), then columns j = 1.. with rows i < j.
pub fn sample_gue(dim: usize, variance: f64, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let mut v = DMatrix::<Complex64>::zeros(dim, dim);
    let sd = variance.sqrt();
    let sh = (variance / 2.0).sqrt();
    for i in 0..dim {
        let (z, _) = standard_normal_pair(rng);
        v[(i, i)] = Complex64::new(sd * z, 0.0);
    }
    for j in 1..dim {
        for i in 0..j {
            let (re, im) = standard_normal_pair(rng);
            v[(i, j)] = Complex64::new(sh * re, sh * im);
            v[(j, i)] = Complex64::new(sh * re, -sh * im);
        }
    }
    v
}

/// Transition couplings: independent complex entries with E[|V_α|²] = variance.
fn sample_couplings(dim: usize, variance: f64, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    let sh = (variance / 2.0).sqrt();
    DVector::from_fn(dim, |_, _| {
        let (re, im) = standard_normal_pair(rng);
        Complex64::new(sh * re, sh * im)
    })
}

/// Stream-keyed RNG for one sampled object: stream = 2·sample_index + tag,
/// tag 0 for the Hamiltonian couplings, 1 for the transition couplings.
fn sample_rng(seed: u64, sample: usize, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * sample as u64 + tag);
    rng
}

struct SampleSpaces {
    bk: FockBasis,
    bk0: FockBasis,
    bm: FockBasis,
    bf: FockBasis,
    dim_m: f64,
    f: i64,
    k: i64,
}

fn build_spaces(cfg: &EnsembleConfig) -> Result<SampleSpaces> {
    let p = &cfg.params;
    let f = cfg.final_particles();
    Ok(SampleSpaces {
        bk: build_basis(p.n, p.k)?,
        bk0: build_basis(p.n, p.k0)?,
        bm: build_basis(p.n, p.m)?,
        bf: build_basis(p.n, f)?,
        dim_m: binomial(p.n, p.m).to_f64().expect("guarded dimension"),
        f,
        k: p.k,
    })
}

struct SampleOps {
    hi: DMatrix<Complex64>,
    hf: DMatrix<Complex64>,
    o: DMatrix<Complex64>,
}

fn build_sample(cfg: &EnsembleConfig, sp: &SampleSpaces, idx: usize) -> SampleOps {
    let p = &cfg.params;
    let v = sample_gue(sp.bk.dim(), p.vh2, &mut sample_rng(cfg.seed, idx, 0));
    let valpha = sample_couplings(sp.bk0.dim(), p.vo2, &mut sample_rng(cfg.seed, idx, 1));
    let hi = build_hamiltonian(&v, &sp.bk, &sp.bm).expect("valid by construction").entries;
    let hf = if sp.f >= sp.k {
        build_hamiltonian(&v, &sp.bk, &sp.bf).expect("valid by construction").entries
    } else {
        DMatrix::zeros(sp.bf.dim(), sp.bf.dim())
    };
    let o = build_transition(&valpha, &sp.bk0, &sp.bm, &sp.bf)
        .expect("valid by construction")
        .entries;
    SampleOps { hi, hf, o }
}

/// tr(a·b) without forming the product.
fn tr_pair(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// All fifteen normalized traces tr(O† H_f^q O H_i^p)/C(N,m) of one sample.
fn sample_traces(ops: &SampleOps, dim_m: f64) -> [f64; 15] {
    let odag = ops.o.adjoint();
    // g[q] = O† H_f^q O, built by repeated application of H_f to O
    let mut fq = ops.o.clone();
    let mut g: Vec<DMatrix<Complex64>> = Vec::with_capacity(5);
    g.push(&odag * &fq);
    for _ in 1..5 {
        fq = &ops.hf * &fq;
        g.push(&odag * &fq);
    }
    // hip[p] = H_i^p
    let mut hip: Vec<DMatrix<Complex64>> = Vec::with_capacity(5);
    hip.push(DMatrix::identity(ops.hi.nrows(), ops.hi.ncols()));
    for pw in 1..5 {
        hip.push(&hip[pw - 1] * &ops.hi);
    }
    let mut out = [0.0; 15];
    for (slot, &(p, q)) in MOMENT_ORDERS.iter().enumerate() {
        // both factors are Hermitian, so the trace is real to rounding
        out[slot] = tr_pair(&g[q as usize], &hip[p as usize]).re / dim_m;
    }
    out
}

/// Mean and batch-means standard error (min(20, n) batches of consecutive
/// samples). Batching absorbs the mild nonlinearity of later cumulant
/// post-processing and keeps the estimate stable for correlated pipelines;
/// for i.i.d. samples it is simply a coarsened classical SE.
fn batch_stats(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let b = 20.min(n);
    let mut batch_means = Vec::with_capacity(b);
    for t in 0..b {
        let lo = t * n / b;
        let hi = (t + 1) * n / b;
        let bm = xs[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        batch_means.push(bm);
    }
    let centre = batch_means.iter().sum::<f64>() / b as f64;
    let var = batch_means.iter().map(|x| (x - centre).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// Monte Carlo moments over `n_samples` realizations of the ensemble.
/// Bit-identical for a fixed config regardless of thread count.
pub fn mc_moments(cfg: &EnsembleConfig) -> Result<McMomentEstimates> {
    cfg.validate()?;
    let sp = build_spaces(cfg)?;
    let rows: Vec<[f64; 15]> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|idx| sample_traces(&build_sample(cfg, &sp, idx), sp.dim_m))
        .collect();

    let entries = MOMENT_ORDERS
        .iter()
        .enumerate()
        .map(|(slot, &(p, q))| {
            let xs: Vec<f64> = rows.iter().map(|r| r[slot]).collect();
            let (mean, se) = batch_stats(&xs);
            McEstimate { p, q, mean, se }
        })
        .collect();
    Ok(McMomentEstimates { entries, n_samples: cfg.n_samples })
}

/// Binned bivariate strength density in standardized energies, with the
/// matching correlated-Gaussian reference surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrengthHistogram {
    pub bins: usize,
    /// Shared bin edges for both standardized axes, length bins + 1.
    pub edges: Vec<f64>,
    /// Accumulated strength per cell, row-major in (initial, final):
    /// counts[ix * bins + iy]. Out-of-range strength is counted in
    /// `total_weight` but not binned.
    pub counts: Vec<f64>,
    /// Bivariate Gaussian with correlation `xi_exact`, integrated to the
    /// same total weight and cell area.
    pub reference: Vec<f64>,
    pub total_weight: f64,
    pub n_samples: usize,
    /// Trace moments recomputed from the spectral decomposition; agrees
    /// with `mc_moments` on the same config to eigensolver accuracy.
    pub moments: McMomentEstimates,
    pub xi_exact: f64,
    pub xi_sample: f64,
}

/// Histogram of sampled transition strengths on a bins × bins grid over
/// [-4.5, 4.5]² in standardized units. Energies are standardized by the
/// exact ensemble widths, not per-sample estimates.
pub fn strength_histogram(cfg: &EnsembleConfig, bins: usize) -> Result<StrengthHistogram> {
    cfg.validate()?;
    if bins < 2 {
        return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
    }
    let sp = build_spaces(cfg)?;
    let p = &cfg.params;
    let var_i = ratio_to_f64(&h2_moment(p.n, p.m, p.k)?) * p.vh2;
    let var_f = if sp.f >= sp.k {
        ratio_to_f64(&h2_moment(p.n, sp.f, p.k)?) * p.vh2
    } else {
        0.0
    };
    if var_i <= 0.0 || var_f <= 0.0 {
        return Err(Error::Domain(
            "spectral width vanishes in one of the spaces; nothing to standardize".into(),
        ));
    }
    let (si, sf) = (var_i.sqrt(), var_f.sqrt());

    let lo = -4.5;
    let hi = 4.5;
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|t| lo + width * t as f64).collect();

    struct Partial {
        counts: Vec<f64>,
        weight: f64,
        traces: [f64; 15],
    }

    let partials: Vec<Partial> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|idx| {
            let ops = build_sample(cfg, &sp, idx);
            let ei = ops
                .hi
                .clone()
                .try_symmetric_eigen(1e-13, 10_000)
                .ok_or_else(|| Error::Numerical("eigensolver did not converge on H_i".into()))?;
            let ef = ops
                .hf
                .clone()
                .try_symmetric_eigen(1e-13, 10_000)
                .ok_or_else(|| Error::Numerical("eigensolver did not converge on H_f".into()))?;
            let amps = ef.eigenvectors.adjoint() * &ops.o * &ei.eigenvectors;
            let mut counts = vec![0.0; bins * bins];
            let mut weight = 0.0;
            let mut traces = [0.0; 15];
            for a in 0..amps.nrows() {
                for b in 0..amps.ncols() {
                    let w = amps[(a, b)].norm_sqr();
                    let e_i = ei.eigenvalues[b];
                    let e_f = ef.eigenvalues[a];
                    weight += w;
                    for (slot, &(pp, qq)) in MOMENT_ORDERS.iter().enumerate() {
                        traces[slot] += w * e_i.powi(pp as i32) * e_f.powi(qq as i32);
                    }
                    let x = (e_i / si - lo) / width;
                    let y = (e_f / sf - lo) / width;
                    if x >= 0.0 && y >= 0.0 {
                        let (ix, iy) = (x as usize, y as usize);
                        if ix < bins && iy < bins {
                            counts[ix * bins + iy] += w;
                        }
                    }
                }
            }
            for t in traces.iter_mut() {
                *t /= sp.dim_m;
            }
            Ok(Partial { counts, weight, traces })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut counts = vec![0.0; bins * bins];
    let mut total_weight = 0.0;
    for part in &partials {
        total_weight += part.weight;
        for (c, pc) in counts.iter_mut().zip(&part.counts) {
            *c += pc;
        }
    }
    let entries = MOMENT_ORDERS
        .iter()
        .enumerate()
        .map(|(slot, &(pp, qq))| {
            let xs: Vec<f64> = partials.iter().map(|part| part.traces[slot]).collect();
            let (mean, se) = batch_stats(&xs);
            McEstimate { p: pp, q: qq, mean, se }
        })
        .collect();
    let moments = McMomentEstimates { entries, n_samples: cfg.n_samples };

    let xi_exact = exact_cumulants(p, cfg.mode)?.xi;
    let g = |pp, qq| moments.get(pp, qq).expect("full grid").mean;
    let denom = (g(2, 0) * g(0, 2)).sqrt();
    let xi_sample = if denom > 0.0 { g(1, 1) / denom } else { f64::NAN };

    // Gaussian reference: density of a standardized bivariate normal with
    // correlation xi_exact, scaled to the histogram's weight and cell area.
    let norm = total_weight * width * width
        / (2.0 * std::f64::consts::PI * (1.0 - xi_exact * xi_exact).sqrt());
    let mut reference = vec![0.0; bins * bins];
    for ix in 0..bins {
        let x = lo + width * (ix as f64 + 0.5);
        for iy in 0..bins {
            let y = lo + width * (iy as f64 + 0.5);
            let quad = (x * x - 2.0 * xi_exact * x * y + y * y)
                / (2.0 * (1.0 - xi_exact * xi_exact));
            reference[ix * bins + iy] = norm * (-quad).exp();
        }
    }

    Ok(StrengthHistogram {
        bins,
        edges,
        counts,
        reference,
        total_weight,
        n_samples: cfg.n_samples,
        moments,
        xi_exact,
        xi_sample,
    })
}

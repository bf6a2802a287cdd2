//! Exact finite-N statistics of transition strength densities for embedded
//! Gaussian unitary ensembles, EGUE(k).
//!
//! A k-body random Hamiltonian H acts on m spinless fermions distributed over
//! N single-particle states, and a k0-body transition operator O either removes
//! or adds k0 particles. The bivariate strength density built from
//! |<final|O|initial>|^2 has moments M_PQ = <O† H^Q O H^P>^m whose ensemble
//! averages admit closed finite-N forms. This crate evaluates those forms in
//! exact rational arithmetic ([`exact_moments`]), their N→∞ asymptotics
//! ([`asymptotics`]), and verifies both against two independent oracles: an
//! analytic Wick-contraction evaluation and a Monte Carlo simulation over
//! explicit Fock spaces ([`ensemble_mc`], [`fock_space`]).
//!
//! The `egue-strengths` binary exposes the same functionality on the command
//! line (`table1`, `moments`, `verify`, `histogram`).

pub mod asymptotics;
pub mod cli;
pub mod combinatorics;
pub mod ensemble_mc;
pub mod exact_moments;
pub mod fock_space;

use thiserror::Error;

/// Unified error type for domain violations and guard rejections.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameters violate a documented precondition.
    #[error("domain violation: {0}")]
    Domain(String),
    /// A deliberately bounded computation was asked to exceed its cost guard.
    #[error("cost guard exceeded: {0}")]
    CostGuard(String),
    /// Numerical backend failure (eigensolver and similar).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Seeded random ensembles and admissible initial correlation states.
//!
//! Initial states are Gram matrices of unit vectors, which are always valid
//! correlation matrices (Hermitian, positive semidefinite, unit diagonal).
//! A symmetric matrix filled with arbitrary entries from the unit ball need not be.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lyapunov::{basin_certificate, BasinCertificate};
use crate::model::{CorrelationState, FrequencyEnsemble, PhaseLockedState, C64};
use crate::stability::assumption_check;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniformly random direction in `C^dim`.
pub fn random_unit_vector(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    normalize(v)
}

fn normalize(v: Vec<C64>) -> Vec<C64> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / norm).collect()
}

/// Correlation matrix `z_jk = <v_j, v_k>` of the given unit vectors.
pub fn gram_state(vectors: &[Vec<C64>]) -> CorrelationState {
    CorrelationState::from_upper(vectors.len(), |j, k| {
        vectors[j].iter().zip(&vectors[k]).map(|(a, b)| a.conj() * b).sum()
    })
}

/// Gram matrix of `n` random unit vectors in `C^dim` (`dim >= n`).
pub fn random_correlation_state(n: usize, dim: usize, rng: &mut impl Rng) -> Result<CorrelationState> {
    if dim < n || n < 2 {
        return Err(Error::InvalidInput(format!("need 2 <= n <= dim, got n = {n}, dim = {dim}")));
    }
    let vs: Vec<Vec<C64>> = (0..n).map(|_| random_unit_vector(dim, rng)).collect();
    Ok(gram_state(&vs))
}

/// Zero-mean ensemble with raw frequencies uniform in `[-scale, scale]`.
pub fn random_ensemble(n: usize, scale: f64, rng: &mut impl Rng) -> Result<FrequencyEnsemble> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..=scale)).collect();
    FrequencyEnsemble::new(&raw)
}

/// Random ensemble whose pairwise frequency differences are all distinct.
pub fn random_distinct_ensemble(n: usize, scale: f64, rng: &mut impl Rng) -> Result<FrequencyEnsemble> {
    for _ in 0..1000 {
        let e = random_ensemble(n, scale, rng)?;
        if assumption_check(&e) {
            return Ok(e);
        }
    }
    Err(Error::NonConvergence("could not draw distinct differences".into()))
}

/// Wave functions `psi_j = normalize(e^{-i a_j} v + eps w_j)` around a locked state,
/// returned as their correlation matrix.
pub fn perturbed_lock_state(pls: &PhaseLockedState, eps: f64, dim: usize, rng: &mut impl Rng) -> CorrelationState {
    let v = random_unit_vector(dim, rng);
    let vs: Vec<Vec<C64>> = pls
        .alphas
        .iter()
        .map(|a| {
            let w = random_unit_vector(dim, rng);
            let phase = C64::from_polar(1.0, -a);
            normalize(v.iter().zip(&w).map(|(vi, wi)| phase * vi + wi * eps).collect())
        })
        .collect();
    gram_state(&vs)
}

/// Draw a perturbation of the locked state, halving its size until the
/// basin certificate holds.
pub fn admissible_start(
    pls: &PhaseLockedState,
    ens: &FrequencyEnsemble,
    kappa: f64,
    eps0: f64,
    rng: &mut impl Rng,
) -> Result<(CorrelationState, BasinCertificate)> {
    let target = CorrelationState::from_phases(&pls.alphas);
    let dim = pls.n() + 2;
    let mut eps = eps0;
    for _ in 0..60 {
        let s = perturbed_lock_state(pls, eps, dim, rng);
        let cert = basin_certificate(&s, &target, ens, kappa)?;
        if cert.admissible {
            return Ok((s, cert));
        }
        if cert.reason.as_deref() == Some("A below Lyapunov threshold") {
            return Err(Error::InvalidInput("coupling below the Lyapunov threshold".into()));
        }
        eps *= 0.5;
    }
    Err(Error::NonConvergence("no admissible start found".into()))
}

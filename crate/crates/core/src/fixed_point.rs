//! Phase-locked equilibria of the correlation system and their
//! correspondence with Kuramoto locked states.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CMatrix, CorrelationState, FrequencyEnsemble, PhaseLockedState, C64};
use crate::selfconsistency::{angles_from_root, solve_order_parameter, Branch};

/// Stable phase-locked state at coupling `kappa`, or `None` below threshold.
pub fn solve_phase_locked(ens: &FrequencyEnsemble, kappa: f64) -> Result<Option<PhaseLockedState>> {
    solve_phase_locked_branch(ens, kappa, Branch::Stable)
}

/// Phase-locked state on the requested branch.
pub fn solve_phase_locked_branch(
    ens: &FrequencyEnsemble,
    kappa: f64,
    branch: Branch,
) -> Result<Option<PhaseLockedState>> {
    let Some(root) = solve_order_parameter(ens.omegas(), kappa, branch)? else {
        return Ok(None);
    };
    Ok(Some(PhaseLockedState::from_alphas(angles_from_root(
        ens.omegas(),
        kappa,
        root,
    ))))
}

/// `z_jk = exp(i (a_j - a_k))`.
pub fn correlations_from_phase_locked(pls: &PhaseLockedState) -> CorrelationState {
    CorrelationState::from_phases(&pls.alphas)
}

/// The fixed-point map `F = -RHS / kappa`, zero on the diagonal.
pub fn fmap(state: &CorrelationState, ens: &FrequencyEnsemble, kappa: f64) -> Result<CMatrix> {
    let n = state.n();
    ens.check_dim(n)?;
    let z = &state.z;
    let om = ens.omegas();
    let rows: Vec<C64> = (0..n).map(|j| (0..n).map(|l| z[(j, l)]).sum()).collect();
    let cols: Vec<C64> = (0..n).map(|k| (0..n).map(|l| z[(l, k)]).sum()).collect();
    let one = C64::new(1.0, 0.0);
    Ok(CMatrix::from_fn(n, n, |j, k| {
        if j == k {
            return C64::new(0.0, 0.0);
        }
        let zjk = z[(j, k)];
        C64::new(0.0, -(om[j] - om[k]) / kappa) * zjk
            - (rows[j] + cols[k]) * (one - zjk) / (2.0 * n as f64)
    }))
}

/// `max_{j != k} |F_jk|`.
pub fn fmap_residual(state: &CorrelationState, ens: &FrequencyEnsemble, kappa: f64) -> Result<f64> {
    Ok(fmap(state, ens, kappa)?.iter().fold(0.0, |m, c| m.max(c.norm())))
}

/// Kuramoto angles mapped from a correlation phase-locked state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correspondence {
    pub thetas: Vec<f64>,
    /// `theta_j = sign * alpha_j`.
    pub sign: i8,
    /// Largest violation of the Kuramoto locking equations.
    pub residual: f64,
}

/// Residual of `sin theta_j = w_j/(K R)`, `R = mean cos theta`, `mean sin theta = 0`.
pub fn kuramoto_lock_residual(thetas: &[f64], r: f64, ens: &FrequencyEnsemble, k: f64) -> f64 {
    let n = thetas.len() as f64;
    let mean_cos = thetas.iter().map(|t| t.cos()).sum::<f64>() / n;
    let mean_sin = thetas.iter().map(|t| t.sin()).sum::<f64>() / n;
    thetas
        .iter()
        .zip(ens.omegas())
        .map(|(t, w)| (t.sin() - w / (k * r)).abs())
        .fold((r - mean_cos).abs().max(mean_sin.abs()), f64::max)
}

/// Map `alpha -> theta` with `K = kappa`, `w = Omega`, `R = lambda`, choosing
/// whichever sign satisfies the Kuramoto locking equations.
pub fn kuramoto_correspondence(
    pls: &PhaseLockedState,
    ens: &FrequencyEnsemble,
    kappa: f64,
) -> Result<Correspondence> {
    ens.check_dim(pls.n())?;
    let mut best = f64::INFINITY;
    for sign in [1i8, -1] {
        let thetas: Vec<f64> = pls.alphas.iter().map(|a| sign as f64 * a).collect();
        let residual = kuramoto_lock_residual(&thetas, pls.lambda, ens, kappa);
        if residual < 1e-10 {
            return Ok(Correspondence { thetas, sign, residual });
        }
        best = best.min(residual);
    }
    Err(Error::Correspondence { residual: best })
}

/// Serializable summary of a solved locked state.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointReport {
    pub kappa: f64,
    pub lambda: f64,
    pub alphas: Vec<f64>,
    pub residual: f64,
}

impl FixedPointReport {
    pub fn new(pls: &PhaseLockedState, ens: &FrequencyEnsemble, kappa: f64) -> Result<Self> {
        Ok(Self {
            kappa,
            lambda: pls.lambda,
            alphas: pls.alphas.clone(),
            residual: fmap_residual(&correlations_from_phase_locked(pls), ens, kappa)?,
        })
    }
}

//! Classical Kuramoto oscillators: dynamics, order parameter and locked states.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{wrap_angle, FrequencyEnsemble, SolverConfig};
use crate::ode;
use crate::selfconsistency::{angles_from_root, solve_order_parameter, Branch};

#[derive(Debug, Clone, PartialEq)]
pub struct KuramotoState {
    pub thetas: Vec<f64>,
    pub t: f64,
}

/// `R e^{i Phi} = (1/N) sum_l e^{i theta_l}`, returned as `(R, Phi)`.
pub fn order_parameter(thetas: &[f64]) -> (f64, f64) {
    let n = thetas.len() as f64;
    let (s, c) = thetas
        .iter()
        .fold((0.0, 0.0), |(s, c), t| (s + t.sin(), c + t.cos()));
    let (s, c) = (s / n, c / n);
    (s.hypot(c), s.atan2(c))
}

fn pairwise(thetas: &[f64], omegas: &[f64], k: f64) -> Vec<f64> {
    let n = thetas.len();
    (0..n)
        .map(|j| {
            let coupling: f64 = thetas.iter().map(|tl| (tl - thetas[j]).sin()).sum();
            omegas[j] + k / n as f64 * coupling
        })
        .collect()
}

/// `dtheta_j/dt = w_j + (K/N) sum_l sin(theta_l - theta_j)`.
pub fn kuramoto_rhs(state: &KuramotoState, ens: &FrequencyEnsemble, k: f64) -> Result<Vec<f64>> {
    ens.check_dim(state.thetas.len())?;
    Ok(pairwise(&state.thetas, ens.omegas(), k))
}

/// Mean-field form `w_j - K R sin(theta_j - Phi)`.
pub fn kuramoto_rhs_reduced(state: &KuramotoState, ens: &FrequencyEnsemble, k: f64) -> Result<Vec<f64>> {
    ens.check_dim(state.thetas.len())?;
    let (r, phi) = order_parameter(&state.thetas);
    Ok(state
        .thetas
        .iter()
        .zip(ens.omegas())
        .map(|(t, w)| w - k * r * (t - phi).sin())
        .collect())
}

/// A phase-locked Kuramoto configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct KuramotoFixedPoint {
    pub thetas: Vec<f64>,
    pub r_inf: f64,
}

/// Stable phase-locked state, `sin theta_j = w_j / (K R)`, `R = mean cos theta_j`.
///
/// Returns `Ok(None)` when the self-consistency has no root.
pub fn kuramoto_fixed_point(ens: &FrequencyEnsemble, k: f64) -> Result<Option<KuramotoFixedPoint>> {
    let Some(root) = solve_order_parameter(ens.omegas(), k, Branch::Stable)? else {
        return Ok(None);
    };
    Ok(Some(KuramotoFixedPoint {
        thetas: angles_from_root(ens.omegas(), k, root),
        r_inf: root.r,
    }))
}

/// Integrate the Kuramoto model. Recorded angles are wrapped to `[-pi, pi)`;
/// the internal state is not, so wrapping never perturbs the dynamics.
pub fn integrate_kuramoto(
    state0: &KuramotoState,
    ens: &FrequencyEnsemble,
    k: f64,
    cfg: &SolverConfig,
) -> Result<Vec<KuramotoState>> {
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!("coupling must be positive, got {k}")));
    }
    ens.check_dim(state0.thetas.len())?;
    let omegas = ens.omegas().to_vec();
    let (times, ys) = ode::solve(
        state0.thetas.clone(),
        state0.t,
        cfg,
        |_, y: &Vec<f64>| pairwise(y, &omegas, k),
        |_, _| Ok(()),
    )?;
    Ok(times
        .into_iter()
        .zip(ys)
        .map(|(t, y)| KuramotoState {
            thetas: y.into_iter().map(wrap_angle).collect(),
            t,
        })
        .collect())
}

/// Continuous `theta_j - theta_k` along a wrapped trajectory, assuming
/// consecutive samples differ by less than pi.
pub fn unwrapped_difference(traj: &[KuramotoState], j: usize, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(traj.len());
    let mut prev: Option<f64> = None;
    for s in traj {
        let d = s.thetas[j] - s.thetas[k];
        let v = match prev {
            None => wrap_angle(d),
            Some(p) => p + wrap_angle(d - p),
        };
        out.push(v);
        prev = Some(v);
    }
    out
}

/// Write `t, theta_1..theta_N, R`.
pub fn write_csv<W: Write>(traj: &[KuramotoState], mut w: W) -> std::io::Result<()> {
    let n = traj.first().map_or(0, |s| s.thetas.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|j| format!("theta_{j}")));
    header.push("R".into());
    writeln!(w, "{}", header.join(","))?;
    for s in traj {
        let mut row = vec![format!("{:.10e}", s.t)];
        row.extend(s.thetas.iter().map(|t| format!("{t:.15e}")));
        row.push(format!("{:.15e}", order_parameter(&s.thetas).0));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

//! The autonomous correlation system, its real/imaginary split, time
//! integration, and regime diagnostics.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fixed_point::fmap_residual;
use crate::model::{CMatrix, CorrelationState, FrequencyEnsemble, SolverConfig, C64};
use crate::ode;

/// Recorded correlation states along one integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CorrelationState>,
    pub kappa: f64,
    /// Largest `|z_kj - conj(z_jk)|` seen on any step.
    pub max_symmetry_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &CorrelationState {
        self.states.last().expect("trajectory is never empty")
    }

    /// Write `t, re_z_j_k, im_z_j_k, ..., lambda` rows (1-based indices, j < k).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.states[0].n();
        let mut header = vec!["t".to_string()];
        for j in 0..n {
            for k in j + 1..n {
                header.push(format!("re_z_{}_{}", j + 1, k + 1));
                header.push(format!("im_z_{}_{}", j + 1, k + 1));
            }
        }
        header.push("lambda".into());
        writeln!(w, "{}", header.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![format!("{t:.10e}")];
            for j in 0..n {
                for k in j + 1..n {
                    row.push(format!("{:.15e}", s.z[(j, k)].re));
                    row.push(format!("{:.15e}", s.z[(j, k)].im));
                }
            }
            row.push(format!("{:.15e}", order_parameter(s).1));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn raw_rhs(z: &CMatrix, omegas: &[f64], kappa: f64) -> CMatrix {
    let n = z.nrows();
    let rows: Vec<C64> = (0..n).map(|j| (0..n).map(|l| z[(j, l)]).sum()).collect();
    let cols: Vec<C64> = (0..n).map(|k| (0..n).map(|l| z[(l, k)]).sum()).collect();
    let c = kappa / (2.0 * n as f64);
    CMatrix::from_fn(n, n, |j, k| {
        if j == k {
            return C64::new(0.0, 0.0);
        }
        let zjk = z[(j, k)];
        C64::new(0.0, omegas[j] - omegas[k]) * zjk
            + (rows[j] + cols[k]) * (C64::new(1.0, 0.0) - zjk) * c
    })
}

/// Time derivative of every correlation.
pub fn correlation_rhs(state: &CorrelationState, ens: &FrequencyEnsemble, kappa: f64) -> Result<CMatrix> {
    ens.check_dim(state.n())?;
    Ok(raw_rhs(&state.z, ens.omegas(), kappa))
}

/// Real and imaginary parts of the correlation system written out separately.
#[derive(Debug, Clone)]
pub struct SplitRhs {
    pub dr: DMatrix<f64>,
    pub ds: DMatrix<f64>,
    /// Derivatives of `r_j = Re z_j` and `s_j = Im z_j`.
    pub dr_j: Vec<f64>,
    pub ds_j: Vec<f64>,
}

/// Evaluate the system in real coordinates `z = r + i s`.
pub fn split_rhs(state: &CorrelationState, ens: &FrequencyEnsemble, kappa: f64) -> Result<SplitRhs> {
    let n = state.n();
    ens.check_dim(n)?;
    let r = state.z.map(|c| c.re);
    let s = state.z.map(|c| c.im);
    let om = ens.omegas();
    let c = kappa / (2.0 * n as f64);
    let mut dr = DMatrix::zeros(n, n);
    let mut ds = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let p: f64 = (0..n).map(|l| r[(j, l)] + r[(l, k)]).sum();
            let q: f64 = (0..n).map(|l| s[(j, l)] + s[(l, k)]).sum();
            let w = om[j] - om[k];
            let (rjk, sjk) = (r[(j, k)], s[(j, k)]);
            dr[(j, k)] = -w * sjk + c * (p * (1.0 - rjk) + q * sjk);
            ds[(j, k)] = w * rjk + c * (q * (1.0 - rjk) - p * sjk);
        }
    }
    let nf = n as f64;
    let dr_j = (0..n).map(|j| (0..n).map(|l| dr[(l, j)]).sum::<f64>() / nf).collect();
    let ds_j = (0..n).map(|j| (0..n).map(|l| ds[(l, j)]).sum::<f64>() / nf).collect();
    Ok(SplitRhs { dr, ds, dr_j, ds_j })
}

/// `z_j = (1/N) sum_l z_lj` and `lambda = |zeta|`, with
/// `lambda^2 = (1/N^2) sum_{j,l} Re z_lj`.
pub fn order_parameter(state: &CorrelationState) -> (Vec<C64>, f64) {
    let n = state.n();
    let nf = n as f64;
    let zj: Vec<C64> = (0..n)
        .map(|j| (0..n).map(|l| state.z[(l, j)]).sum::<C64>() / nf)
        .collect();
    let lam2 = zj.iter().map(|c| c.re).sum::<f64>() / nf;
    // Below the rounding floor of the sum, lambda^2 is indistinguishable from zero.
    let floor = 4.0 * nf * f64::EPSILON;
    (zj, if lam2 <= floor { 0.0 } else { lam2.sqrt() })
}

/// Integrate the correlation system from `state0`.
///
/// The diagonal is pinned to one after each step. Leaving the unit ball by
/// more than `cfg.tol_ball` aborts the run.
pub fn integrate(
    state0: &CorrelationState,
    ens: &FrequencyEnsemble,
    kappa: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidInput(format!("kappa must be positive, got {kappa}")));
    }
    ens.check_dim(state0.n())?;
    state0.validate(cfg.tol_ball)?;
    let omegas = ens.omegas().to_vec();
    let n = state0.n();
    let mut drift: f64 = 0.0;
    let (times, zs) = ode::solve(
        state0.z.clone(),
        state0.t,
        cfg,
        |_, z: &CMatrix| raw_rhs(z, &omegas, kappa),
        |t, z: &mut CMatrix| {
            let mut modulus: f64 = 0.0;
            for j in 0..n {
                z[(j, j)] = C64::new(1.0, 0.0);
                for k in 0..n {
                    drift = drift.max((z[(k, j)] - z[(j, k)].conj()).norm());
                    modulus = modulus.max(z[(j, k)].norm());
                }
            }
            if !(modulus <= 1.0 + cfg.tol_ball) {
                return Err(Error::BallViolation { t, modulus });
            }
            Ok(())
        },
    )?;
    let states = times
        .iter()
        .zip(zs)
        .map(|(&t, z)| CorrelationState::new_unchecked(z, t))
        .collect();
    Ok(Trajectory {
        times,
        states,
        kappa,
        max_symmetry_drift: drift,
    })
}

/// Long-time behavior inferred from a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    /// The final state is a fixed point to within the threshold.
    Converged { residual: f64 },
    /// The residual stays large and the correlations keep oscillating.
    Periodic {
        period: f64,
        min_residual: f64,
        amplitude: f64,
    },
    /// Neither criterion met over the trailing window.
    Unsettled { min_residual: f64 },
}

/// Length of the trailing window examined by [`classify_regime`].
pub const REGIME_WINDOW: f64 = 50.0;
/// Residual above which a trajectory is considered not converged.
pub const STAGNATION_RESIDUAL: f64 = 1e-3;

/// Classify the long-time regime from the trailing `REGIME_WINDOW` time units.
///
/// Periodic means: the fixed-point residual stays above
/// `STAGNATION_RESIDUAL` throughout the window and some correlation has at
/// least three local maxima there. The period is the mean spacing of those maxima.
pub fn classify_regime(traj: &Trajectory, ens: &FrequencyEnsemble, converged_tol: f64) -> Regime {
    let t_end = *traj.times.last().unwrap();
    let start = traj
        .times
        .iter()
        .position(|&t| t >= t_end - REGIME_WINDOW)
        .unwrap_or(0);
    let window = &traj.states[start..];
    let times = &traj.times[start..];
    let residuals: Vec<f64> = window
        .iter()
        .map(|s| fmap_residual(s, ens, traj.kappa).unwrap_or(f64::INFINITY))
        .collect();
    let final_res = *residuals.last().unwrap();
    if final_res < converged_tol {
        return Regime::Converged { residual: final_res };
    }
    let min_residual = residuals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_residual > STAGNATION_RESIDUAL {
        let n = traj.states[0].n();
        let mut best: Option<(f64, f64)> = None;
        for j in 0..n {
            for k in j + 1..n {
                let sig: Vec<f64> = window.iter().map(|s| s.z[(j, k)].re).collect();
                let (lo, hi) = sig
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                let amp = hi - lo;
                if amp <= STAGNATION_RESIDUAL {
                    continue;
                }
                let peaks: Vec<f64> = (1..sig.len().saturating_sub(1))
                    .filter(|&i| sig[i] > sig[i - 1] && sig[i] >= sig[i + 1] && sig[i] > lo + 0.5 * amp)
                    .map(|i| times[i])
                    .collect();
                if peaks.len() >= 3 && best.map_or(true, |(a, _)| amp > a) {
                    let period = (peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64;
                    best = Some((amp, period));
                }
            }
        }
        if let Some((amplitude, period)) = best {
            return Regime::Periodic {
                period,
                min_residual,
                amplitude,
            };
        }
    }
    Regime::Unsettled { min_residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn two(z12: C64) -> CorrelationState {
        CorrelationState::from_upper(2, |_, _| z12)
    }

    #[test]
    fn synchronized_homogeneous_is_stationary() {
        let e = FrequencyEnsemble::homogeneous(4).unwrap();
        let d = correlation_rhs(&CorrelationState::synchronized(4), &e, 1.3).unwrap();
        assert!(d.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn two_oscillator_rhs_matches_riccati_form() {
        let e = FrequencyEnsemble::new(&[1.0, -1.0]).unwrap();
        let s = two(C64::new(0.5, 0.0));
        let d = correlation_rhs(&s, &e, 4.0).unwrap();
        assert!((d[(0, 1)] - C64::new(1.5, 1.0)).norm() < 1e-14);
        // (kappa/2)(1 + 2 i Lambda z - z^2), Lambda = (W1 - W2)/kappa
        let z = C64::new(0.5, 0.0);
        let lam = 0.5;
        let ric = (C64::new(1.0, 0.0) + C64::new(0.0, 2.0 * lam) * z - z * z) * 2.0;
        assert!((d[(0, 1)] - ric).norm() < 1e-14);
        assert_eq!(d[(1, 0)], d[(0, 1)].conj());
        let sp = split_rhs(&s, &e, 4.0).unwrap();
        assert!((sp.dr[(0, 1)] - 1.5).abs() < 1e-14);
        assert!((sp.ds[(0, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn incoherent_order_parameter_vanishes() {
        let n = 3;
        let s = CorrelationState::from_upper(n, |j, k| {
            C64::from_polar(1.0, 2.0 * PI * (j as f64 - k as f64) / n as f64)
        });
        let (_, lam) = order_parameter(&s);
        assert!(lam < 1e-12);
        let (zj, lam) = order_parameter(&CorrelationState::synchronized(3));
        assert_eq!(lam, 1.0);
        assert!(zj.iter().all(|c| *c == C64::new(1.0, 0.0)));
    }

    #[test]
    fn homogeneous_flow_synchronizes() {
        let e = FrequencyEnsemble::homogeneous(3).unwrap();
        let s0 = CorrelationState::from_upper(3, |_, _| C64::new(0.9, 0.0));
        let traj = integrate(&s0, &e, 1.0, &SolverConfig::for_kappa(1.0, 50.0)).unwrap();
        let dev = traj.last().max_offdiag_distance(&CorrelationState::synchronized(3));
        assert!(dev < 1e-6, "{dev}");
    }

    #[test]
    fn two_oscillators_lock_at_pi_over_six() {
        let e = FrequencyEnsemble::new(&[1.0, -1.0]).unwrap();
        let s0 = two(C64::new(0.1, -0.3));
        let traj = integrate(&s0, &e, 4.0, &SolverConfig::for_kappa(4.0, 20.0)).unwrap();
        let z = traj.last().z[(0, 1)];
        assert!((z - C64::from_polar(1.0, PI / 6.0)).norm() < 1e-6, "{z}");
        assert!(traj.max_symmetry_drift < 1e-9);
        assert!(matches!(classify_regime(&traj, &e, 1e-6), Regime::Converged { .. }));
    }

    #[test]
    fn two_oscillators_above_ratio_one_are_periodic() {
        let e = FrequencyEnsemble::new(&[1.0, -1.0]).unwrap();
        let s0 = two(C64::new(0.5, 0.0));
        let traj = integrate(&s0, &e, 1.0, &SolverConfig::for_kappa(1.0, 200.0)).unwrap();
        match classify_regime(&traj, &e, 1e-6) {
            Regime::Periodic { period, min_residual, .. } => {
                assert!(period > 0.0 && min_residual > 1e-3);
            }
            other => panic!("expected periodic, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let e = FrequencyEnsemble::new(&[1.0, 0.0, -1.0]).unwrap();
        let s = CorrelationState::synchronized(2);
        assert!(matches!(
            correlation_rhs(&s, &e, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn csv_header() {
        let e = FrequencyEnsemble::homogeneous(3).unwrap();
        let s0 = CorrelationState::from_upper(3, |_, _| C64::new(0.9, 0.0));
        let cfg = SolverConfig::for_kappa(1.0, 0.01).with_record_every(5);
        let traj = integrate(&s0, &e, 1.0, &cfg).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,re_z_1_2,im_z_1_2,re_z_1_3,im_z_1_3,re_z_2_3,im_z_2_3,lambda\n"));
        assert_eq!(text.lines().count(), 1 + traj.times.len());
    }
}

//! Critical coupling: detection, sensitivities of the locked state, and the
//! closed forms for two-cluster and symmetric-triple ensembles.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed_point::{correlations_from_phase_locked, solve_phase_locked};
use crate::model::{FrequencyEnsemble, PhaseLockedState};
use crate::stability::{build_jacobian, spectrum, Classification};

/// Derivatives of the locked state with respect to `kappa`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sensitivities {
    pub dlambda_dkappa: f64,
    /// `d alpha_1 / d kappa` (first oscillator).
    pub dalpha1_dkappa: f64,
    pub dalpha_dkappa: Vec<f64>,
    /// `lambda - (1/N) sum sin^2 a / cos a`; vanishes at the critical coupling.
    pub denominator: f64,
}

/// Implicit derivatives of `lambda sin a_j = Omega_j / kappa`, `lambda = mean cos a_j`.
pub fn sensitivities(pls: &PhaseLockedState, ens: &FrequencyEnsemble, kappa: f64) -> Result<Sensitivities> {
    ens.check_dim(pls.n())?;
    let n = pls.n() as f64;
    let q = pls.alphas.iter().map(|a| a.sin().powi(2) / a.cos()).sum::<f64>() / n;
    let lam = pls.lambda;
    let denominator = lam - q;
    if denominator.abs() <= 1e-10 {
        return Err(Error::NearCritical { denominator });
    }
    let u = lam / (kappa * denominator);
    let dalpha: Vec<f64> = pls.alphas.iter().map(|a| -a.tan() * u).collect();
    Ok(Sensitivities {
        dlambda_dkappa: -lam / kappa + lam * lam / (kappa * denominator),
        dalpha1_dkappa: dalpha[0],
        dalpha_dkappa: dalpha,
        denominator,
    })
}

/// `g = (1/N) sum cos a_j - (1/(2N)) sum sec a_j`; positive above threshold.
pub fn lstar_gap(pls: &PhaseLockedState) -> f64 {
    let n = pls.n() as f64;
    pls.alphas.iter().map(|a| a.cos() - 0.5 / a.cos()).sum::<f64>() / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalMethod {
    ClosedFormTwoCluster,
    ClosedFormSymmetricTriple,
    Bisection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalReport {
    pub kappa_star: f64,
    pub lambda_star: f64,
    /// `alpha_max - alpha_min` at threshold.
    pub opening_angle: f64,
    pub alphas_star: Vec<f64>,
    pub method: CriticalMethod,
}

fn angles_at(omegas: &[f64], u: f64) -> Vec<f64> {
    omegas.iter().map(|w| (w / u).clamp(-1.0, 1.0).asin()).collect()
}

fn gap_at(omegas: &[f64], u: f64) -> f64 {
    let n = omegas.len() as f64;
    angles_at(omegas, u)
        .iter()
        .map(|a| {
            let c = a.cos();
            if c == 0.0 {
                f64::NEG_INFINITY
            } else {
                c - 0.5 / c
            }
        })
        .sum::<f64>()
        / n
}

/// Locate the critical coupling.
///
/// Along the locked branch the product `u = kappa lambda` parametrizes the
/// angles directly (`sin a_j = Omega_j / u`) and the gap `g(u)` increases
/// strictly from `-inf` at `u = max|Omega|`. Bisection in `u` therefore
/// resolves the threshold to machine precision, avoiding the square-root
/// singularity that `lambda(kappa)` has there.
pub fn find_kappa_star(ens: &FrequencyEnsemble) -> Result<CriticalReport> {
    let om = ens.omegas();
    let wmax = ens.max_abs();
    if wmax == 0.0 {
        return Err(Error::InvalidInput("all frequencies are zero: no threshold".into()));
    }
    let mut lo = wmax;
    let mut hi = 2.0 * wmax;
    let mut grow = 0;
    while gap_at(om, hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 40 {
            return Err(Error::BracketFailure("gap never became positive".into()));
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m == lo || m == hi {
            break;
        }
        if gap_at(om, m) > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    let u = hi;
    let pls = PhaseLockedState::from_alphas(angles_at(om, u));
    Ok(CriticalReport {
        kappa_star: u / pls.lambda,
        lambda_star: pls.lambda,
        opening_angle: pls.opening_angle(),
        alphas_star: pls.alphas,
        method: CriticalMethod::Bisection,
    })
}

/// Two-cluster threshold: `j` oscillators at one frequency, `N - j` at the other,
/// total spread `M`. Returns `(kappa_star, lambda_star, cos a_1, cos a_N)`.
pub fn two_cluster_kappa_star(n: usize, j: usize, m: f64) -> Result<(f64, f64, f64, f64)> {
    if j == 0 || j >= n {
        return Err(Error::InvalidInput(format!("cluster size {j} must be in 1..{n}")));
    }
    let (nf, jf) = (n as f64, j as f64);
    let rest = nf - jf;
    let hyp = (rest * rest + jf * jf).sqrt();
    Ok((
        nf * m / (2.0 * jf * rest),
        (jf * jf + rest * rest) / (nf * hyp),
        jf / hyp,
        rest / hyp,
    ))
}

/// Threshold for `Omega = (a, 0, ..., 0, -a)` with `M = 2a`.
/// Returns `(kappa_star, lambda_star, opening_angle)`.
pub fn symmetric_triple_kappa_star(n: usize, m: f64) -> Result<(f64, f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidInput("need N >= 2".into()));
    }
    let nf = n as f64;
    let sd = (nf * nf - 4.0 * nf + 36.0).sqrt();
    let p = 3.0 * (nf - 2.0) + sd;
    let kappa = 16.0 * nf * m / (p * (24.0 + 8.0 * nf - 2.0 * nf * nf + 2.0 * (nf - 2.0) * sd).sqrt());
    let lambda = p / (4.0 * nf);
    let opening = 2.0 * ((2.0 - nf + sd) / 8.0).acos();
    Ok((kappa, lambda, opening))
}

/// `(2M/N, symmetric-triple value, M)`.
pub fn kappa_star_bounds(n: usize, m: f64) -> Result<(f64, f64, f64)> {
    let (mid, _, _) = symmetric_triple_kappa_star(n, m)?;
    Ok((2.0 * m / n as f64, mid, m))
}

/// Closed-form threshold when the ensemble has one of the two special shapes.
pub fn kappa_star_closed_form(ens: &FrequencyEnsemble) -> Option<CriticalReport> {
    let om = ens.omegas();
    let n = om.len();
    let m = ens.total_spread();
    if m == 0.0 {
        return None;
    }
    let tol = 1e-12 * ens.max_abs();
    let mut distinct: Vec<f64> = Vec::new();
    for &w in om {
        if !distinct.iter().any(|d| (d - w).abs() <= tol) {
            distinct.push(w);
        }
    }
    let hi = om.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = om.iter().cloned().fold(f64::INFINITY, f64::min);
    if distinct.len() == 2 {
        let j = om.iter().filter(|&&w| (w - hi).abs() <= tol).count();
        let (k, l, c1, cn) = two_cluster_kappa_star(n, j, m).ok()?;
        let (a1, an) = (c1.acos(), -cn.acos());
        let alphas = om.iter().map(|&w| if (w - hi).abs() <= tol { a1 } else { an }).collect();
        return Some(CriticalReport {
            kappa_star: k,
            lambda_star: l,
            opening_angle: a1 - an,
            alphas_star: alphas,
            method: CriticalMethod::ClosedFormTwoCluster,
        });
    }
    let zeros = om.iter().filter(|w| w.abs() <= tol).count();
    if distinct.len() == 3 && zeros == n - 2 && (hi + lo).abs() <= tol {
        let (k, l, open) = symmetric_triple_kappa_star(n, m).ok()?;
        let alphas = om
            .iter()
            .map(|&w| if w.abs() <= tol { 0.0 } else { 0.5 * open * w.signum() })
            .collect();
        return Some(CriticalReport {
            kappa_star: k,
            lambda_star: l,
            opening_angle: open,
            alphas_star: alphas,
            method: CriticalMethod::ClosedFormSymmetricTriple,
        });
    }
    None
}

/// One point of a coupling sweep near threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSweepRow {
    pub kappa: f64,
    pub lambda: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub g: Option<f64>,
    pub stable: Option<bool>,
}

/// Solve, measure the gap, and classify the true spectrum at each coupling.
pub fn critical_sweep(ens: &FrequencyEnsemble, kappas: &[f64]) -> Result<Vec<CriticalSweepRow>> {
    kappas
        .iter()
        .map(|&kappa| {
            let Some(pls) = solve_phase_locked(ens, kappa)? else {
                return Ok(CriticalSweepRow { kappa, lambda: None, alphas: None, g: None, stable: None });
            };
            let jac = build_jacobian(&correlations_from_phase_locked(&pls), ens, kappa)?;
            let stable = spectrum(&jac)?.classification == Classification::Stable;
            Ok(CriticalSweepRow {
                kappa,
                lambda: Some(pls.lambda),
                g: Some(lstar_gap(&pls)),
                alphas: Some(pls.alphas),
                stable: Some(stable),
            })
        })
        .collect()
}

/// Write `kappa, lambda, alpha_1..alpha_N, g, stable`; unlocked rows leave fields empty.
pub fn write_sweep_csv<W: Write>(rows: &[CriticalSweepRow], n: usize, mut w: W) -> std::io::Result<()> {
    let mut header = vec!["kappa".to_string(), "lambda".into()];
    header.extend((1..=n).map(|j| format!("alpha_{j}")));
    header.push("g".into());
    header.push("stable".into());
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let mut row = vec![format!("{:.15e}", r.kappa)];
        row.push(r.lambda.map_or(String::new(), |v| format!("{v:.15e}")));
        match &r.alphas {
            Some(a) => row.extend(a.iter().map(|v| format!("{v:.15e}"))),
            None => row.extend(std::iter::repeat(String::new()).take(n)),
        }
        row.push(r.g.map_or(String::new(), |v| format!("{v:.15e}")));
        row.push(r.stable.map_or(String::new(), |v| v.to_string()));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Couplings in `kappas` (ascending) where `lambda` fails to increase or
/// `max|alpha|` fails to decrease between consecutive locked points.
pub fn monotonicity_violations(ens: &FrequencyEnsemble, kappas: &[f64]) -> Result<Vec<f64>> {
    let mut prev: Option<PhaseLockedState> = None;
    let mut bad = Vec::new();
    for &k in kappas {
        let Some(p) = solve_phase_locked(ens, k)? else {
            prev = None;
            continue;
        };
        if let Some(q) = &prev {
            let amax = |s: &PhaseLockedState| s.alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            let alpha_ok = ens.is_homogeneous() || amax(&p) < amax(q);
            let lambda_ok = ens.is_homogeneous() || p.lambda > q.lambda;
            if !(alpha_ok && lambda_ok) {
                bad.push(k);
            }
        }
        prev = Some(p);
    }
    Ok(bad)
}

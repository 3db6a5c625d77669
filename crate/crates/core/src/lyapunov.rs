//! Lyapunov functional, the explicit decay constants, the basin certificate
//! and empirical decay-rate fits.

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::model::{CorrelationState, FrequencyEnsemble};

/// `A` above which the certified decay interval is nonempty: `2 sqrt((11 + 8 sqrt 2)/7)`.
pub fn lyapunov_threshold() -> f64 {
    2.0 * ((11.0 + 8.0 * std::f64::consts::SQRT_2) / 7.0).sqrt()
}

/// `A = 2 sqrt 2`, where every locked `r_jk` is at least `sqrt(2)/2`.
pub const STABILITY_THRESHOLD: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Tolerance for calling the decay interval degenerate.
const DEGENERATE_TOL: f64 = 1e-12;
/// Width of the "marginal" band around the basin inequality.
pub const MARGINAL_TOL: f64 = 1e-12;
/// Values of the functional at or below this count as zero in fits.
pub const ZERO_LEVEL: f64 = 1e-24;

/// `L = (1/(2 N^2)) sum_{j,k} (f_jk^2 + g_jk^2)` with `f + i g = z - target`.
pub fn lyapunov_value(state: &CorrelationState, target: &CorrelationState) -> Result<f64> {
    let n = state.n();
    if target.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: target.n() });
    }
    let sum: f64 = state
        .z
        .iter()
        .zip(target.z.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(sum / (2.0 * (n * n) as f64))
}

/// Admissible interval for the decay weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interval {
    Empty,
    Point { at: f64 },
    Open { lo: f64, hi: f64 },
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Interval::Empty => false,
            Interval::Point { at } => (x - at).abs() <= 1e-9 * at.abs().max(1.0),
            Interval::Open { lo, hi } => x > lo && x < hi,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Interval::Empty)
    }
}

/// Constants of the decay estimate at `kappa = A max|Omega|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovConstants {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C_B")]
    pub c_b: f64,
    #[serde(rename = "I_B")]
    pub i_b: Interval,
    pub a_opt: f64,
    pub lambda_sq_lb: f64,
    pub r_lb: f64,
}

/// Evaluate every constant at ratio `A = kappa / max|Omega|` (`A >= 2`, may be infinite).
pub fn constants_for(a: f64) -> Result<LyapunovConstants> {
    if !(a >= 2.0) {
        return Err(Error::InvalidInput(format!("A must be at least 2, got {a}")));
    }
    let root = (1.0 - 4.0 / (a * a)).max(0.0).sqrt();
    let b = 1.0 / (a * a * (1.0 + root));
    let sb = b.sqrt();
    let c_b = 2.0 * (1.0 - 4.0 * sb - 4.0 * b);
    let disc = 1.0 - 24.0 * b + 16.0 * b * b;
    let i_b = if disc.abs() <= DEGENERATE_TOL {
        Interval::Point { at: (1.0 - 4.0 * b) / (16.0 * b) }
    } else if disc > 0.0 {
        let sd = disc.sqrt();
        // Lower endpoint rationalized so that B -> 0 stays finite.
        Interval::Open {
            lo: 1.0 / (1.0 - 4.0 * b + sd),
            hi: (1.0 - 4.0 * b + sd) / (16.0 * b),
        }
    } else {
        Interval::Empty
    };
    Ok(LyapunovConstants {
        a,
        b,
        c_b,
        i_b,
        a_opt: 1.0 / (4.0 * sb),
        lambda_sq_lb: (1.0 + root) / 2.0,
        r_lb: 1.0 - 4.0 * b,
    })
}

/// Sufficient condition for exponential convergence from `state0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinCertificate {
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    pub admissible: bool,
    /// Within `MARGINAL_TOL` of the boundary of the inequality.
    pub marginal: bool,
    /// `2 kappa (C_B - 2 M1)`; `L` decays at least like `exp(-C_M1 t / 2)`.
    #[serde(rename = "C_M1")]
    pub c_m1: f64,
    pub constants: Option<LyapunovConstants>,
    pub reason: Option<String>,
}

/// Check `4N(M1 + M2) - 2 M1 < C_B` for the deviations of `state0` from `target`.
pub fn basin_certificate(
    state0: &CorrelationState,
    target: &CorrelationState,
    ens: &FrequencyEnsemble,
    kappa: f64,
) -> Result<BasinCertificate> {
    let n = state0.n();
    ens.check_dim(n)?;
    if target.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: target.n() });
    }
    let (mut m1, mut m2) = (0.0f64, 0.0f64);
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let d = state0.z[(j, k)] - target.z[(j, k)];
                m1 = m1.max(d.re.abs());
                m2 = m2.max(d.im.abs());
            }
        }
    }
    let a = kappa / ens.max_abs();
    if !(a > lyapunov_threshold()) {
        return Ok(BasinCertificate {
            m1,
            m2,
            admissible: false,
            marginal: false,
            c_m1: f64::NAN,
            constants: constants_for(a).ok(),
            reason: Some("A below Lyapunov threshold".into()),
        });
    }
    let c = constants_for(a)?;
    let lhs = 4.0 * n as f64 * (m1 + m2) - 2.0 * m1;
    let admissible = lhs < c.c_b;
    let marginal = (lhs - c.c_b).abs() <= MARGINAL_TOL;
    Ok(BasinCertificate {
        m1,
        m2,
        admissible,
        marginal,
        c_m1: 2.0 * kappa * (c.c_b - 2.0 * m1),
        constants: Some(c),
        reason: (!admissible).then(|| "initial deviation outside the certified basin".into()),
    })
}

/// Least-squares exponential fit of `L(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Positive decay constant; infinite when `L` reached numerical zero.
    pub rate: f64,
    pub r_squared: f64,
    /// Fitted window `[t_start, t_end]`.
    pub window: (f64, f64),
    /// First time `L <= ZERO_LEVEL`, if any.
    pub zero_crossing: Option<f64>,
}

/// Fit `log L(t)` on the trailing half of the trajectory.
pub fn decay_rate_fit(traj: &Trajectory, target: &CorrelationState) -> Result<DecayFit> {
    let values = traj
        .states
        .iter()
        .map(|s| lyapunov_value(s, target))
        .collect::<Result<Vec<_>>>()?;
    fit_log_linear(&traj.times, &values)
}

/// Fit `log y(t)` on the trailing half of the samples.
pub fn fit_log_linear(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::InvalidInput("need at least two samples to fit".into()));
    }
    let t_end = *times.last().unwrap();
    let t_mid = times[0] + 0.5 * (t_end - times[0]);
    let start = times.iter().position(|&t| t >= t_mid).unwrap_or(0);
    let window = (times[start], t_end);
    if let Some(i) = values.iter().position(|&v| v <= ZERO_LEVEL) {
        return Ok(DecayFit {
            rate: f64::INFINITY,
            r_squared: f64::NAN,
            window,
            zero_crossing: Some(times[i]),
        });
    }
    let xs = &times[start..];
    let ys: Vec<f64> = values[start..].iter().map(|v| v.ln()).collect();
    if xs.len() < 2 {
        return Err(Error::InvalidInput("fit window holds fewer than two samples".into()));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit {
        rate: -slope,
        r_squared,
        window,
        zero_crossing: None,
    })
}

/// Serializable certificate report.
#[derive(Debug, Clone, Serialize)]
pub struct LyapunovReport {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C_B")]
    pub c_b: f64,
    #[serde(rename = "I_B")]
    pub i_b: Interval,
    pub a_opt: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    pub admissible: bool,
    pub marginal: bool,
    #[serde(rename = "C_M1")]
    pub c_m1: f64,
    pub fitted_rate: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub reason: Option<String>,
}

impl LyapunovReport {
    pub fn new(cert: &BasinCertificate, kappa_ratio: f64, fit: Option<&DecayFit>) -> Self {
        let c = cert.constants.or_else(|| constants_for(kappa_ratio).ok());
        Self {
            a: kappa_ratio,
            b: c.map_or(f64::NAN, |c| c.b),
            c_b: c.map_or(f64::NAN, |c| c.c_b),
            i_b: c.map_or(Interval::Empty, |c| c.i_b),
            a_opt: c.map_or(f64::NAN, |c| c.a_opt),
            m1: cert.m1,
            m2: cert.m2,
            admissible: cert.admissible,
            marginal: cert.marginal,
            c_m1: cert.c_m1,
            fitted_rate: fit.map(|f| f.rate),
            fit_window: fit.map(|f| f.window),
            reason: cert.reason.clone(),
        }
    }
}

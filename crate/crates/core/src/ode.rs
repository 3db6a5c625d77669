//! Generic explicit Runge-Kutta drivers (classical RK4 and Dormand-Prince 5(4)).

use crate::error::{Error, Result};
use crate::model::{CMatrix, Method, SolverConfig};

/// Minimal vector-space interface needed by the steppers.
pub trait OdeState: Clone {
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    /// Scaled RMS error norm used by the adaptive controller.
    fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64;
}

impl OdeState for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }

    fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..err.len() {
            let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
            acc += (err[i] / sc).powi(2);
        }
        (acc / err.len().max(1) as f64).sqrt()
    }
}

impl OdeState for CMatrix {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x.iter()) {
            *s += v * a;
        }
    }

    fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        let mut acc = 0.0;
        for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
            let sc = atol + rtol * a.norm().max(b.norm());
            acc += (e.norm() / sc).powi(2);
        }
        (acc / err.len().max(1) as f64).sqrt()
    }
}

fn lin<S: OdeState>(y: &S, terms: &[(f64, &S)]) -> S {
    let mut out = y.clone();
    for (c, k) in terms {
        if *c != 0.0 {
            out.axpy(*c, k);
        }
    }
    out
}

/// One classical RK4 step.
pub fn rk4_step<S: OdeState>(t: f64, y: &S, dt: f64, f: &mut impl FnMut(f64, &S) -> S) -> S {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, &lin(y, &[(0.5 * dt, &k1)]));
    let k3 = f(t + 0.5 * dt, &lin(y, &[(0.5 * dt, &k2)]));
    let k4 = f(t + dt, &lin(y, &[(dt, &k3)]));
    lin(
        y,
        &[(dt / 6.0, &k1), (dt / 3.0, &k2), (dt / 3.0, &k3), (dt / 6.0, &k4)],
    )
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand-Prince attempt; returns the 5th-order solution and the error estimate.
fn dopri_step<S: OdeState>(
    t: f64,
    y: &S,
    dt: f64,
    f: &mut impl FnMut(f64, &S) -> S,
) -> (S, S) {
    let k1 = f(t, y);
    let k2 = f(t + dt / 5.0, &lin(y, &[(dt * A21, &k1)]));
    let k3 = f(t + 0.3 * dt, &lin(y, &[(dt * A31, &k1), (dt * A32, &k2)]));
    let k4 = f(
        t + 0.8 * dt,
        &lin(y, &[(dt * A41, &k1), (dt * A42, &k2), (dt * A43, &k3)]),
    );
    let k5 = f(
        t + 8.0 * dt / 9.0,
        &lin(
            y,
            &[(dt * A51, &k1), (dt * A52, &k2), (dt * A53, &k3), (dt * A54, &k4)],
        ),
    );
    let k6 = f(
        t + dt,
        &lin(
            y,
            &[
                (dt * A61, &k1),
                (dt * A62, &k2),
                (dt * A63, &k3),
                (dt * A64, &k4),
                (dt * A65, &k5),
            ],
        ),
    );
    let y1 = lin(
        y,
        &[
            (dt * B1, &k1),
            (dt * B3, &k3),
            (dt * B4, &k4),
            (dt * B5, &k5),
            (dt * B6, &k6),
        ],
    );
    let k7 = f(t + dt, &y1);
    let mut err = k1.clone();
    // err = dt * (E1 k1 + E3 k3 + ... + E7 k7)
    err.axpy(-1.0, &k1);
    for (c, k) in [(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)] {
        err.axpy(dt * c, k);
    }
    (y1, err)
}

/// Number of uniform steps of size at most `dt` covering `t_final`, tolerant
/// of `dt` values that are themselves `t_final / n` up to rounding.
pub fn fixed_step_count(t_final: f64, dt: f64) -> usize {
    ((t_final / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Integrate `y' = f(t, y)` over `[t0, t0 + cfg.t_final]`.
///
/// `after_step` runs on every accepted state (projection, invariant checks);
/// the returned series holds the initial state, every `record_every`-th step
/// and the final state.
pub fn solve<S: OdeState>(
    y0: S,
    t0: f64,
    cfg: &SolverConfig,
    mut f: impl FnMut(f64, &S) -> S,
    mut after_step: impl FnMut(f64, &mut S) -> Result<()>,
) -> Result<(Vec<f64>, Vec<S>)> {
    cfg.validate()?;
    let t_end = t0 + cfg.t_final;
    let mut times = vec![t0];
    let mut states = vec![y0.clone()];
    let mut y = y0;
    match cfg.method {
        Method::Rk4 => {
            let steps = fixed_step_count(cfg.t_final, cfg.dt);
            let dt = cfg.t_final / steps as f64;
            for i in 1..=steps {
                let t_prev = t0 + (i - 1) as f64 * dt;
                y = rk4_step(t_prev, &y, dt, &mut f);
                let t = if i == steps { t_end } else { t0 + i as f64 * dt };
                after_step(t, &mut y)?;
                if i % cfg.record_every == 0 || i == steps {
                    times.push(t);
                    states.push(y.clone());
                }
            }
        }
        Method::Rk45Adaptive => {
            let mut t = t0;
            let mut dt = cfg.dt.min(cfg.t_final);
            let mut accepted = 0usize;
            while t < t_end {
                let last = t + dt >= t_end;
                let h = if last { t_end - t } else { dt };
                let (y1, err) = dopri_step(t, &y, h, &mut f);
                let e = S::error_norm(&err, &y, &y1, cfg.abs_tol, cfg.rel_tol);
                let factor = if e == 0.0 {
                    5.0
                } else {
                    (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
                };
                if e <= 1.0 {
                    t = if last { t_end } else { t + h };
                    y = y1;
                    after_step(t, &mut y)?;
                    accepted += 1;
                    if accepted % cfg.record_every == 0 || t >= t_end {
                        times.push(t);
                        states.push(y.clone());
                    }
                    dt = h * factor;
                } else {
                    dt = h * factor;
                }
                if dt < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepRejection { t, dt });
                }
            }
        }
    }
    Ok((times, states))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &Vec<f64>) -> Vec<f64> {
        vec![-y[0], y[0] - 2.0 * y[1]]
    }

    #[test]
    fn rk4_matches_exact_solution() {
        let cfg = SolverConfig {
            dt: 1e-3,
            t_final: 2.0,
            record_every: 1000,
            ..Default::default()
        };
        let (t, y) = solve(vec![1.0, 0.0], 0.0, &cfg, decay, |_, _| Ok(())).unwrap();
        let tf = *t.last().unwrap();
        assert_eq!(tf, 2.0);
        let yf = y.last().unwrap();
        let e = (-tf).exp();
        assert!((yf[0] - e).abs() < 1e-12);
        assert!((yf[1] - (e - (-2.0 * tf).exp())).abs() < 1e-12);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn dopri_matches_exact_solution() {
        let cfg = SolverConfig {
            dt: 0.1,
            t_final: 5.0,
            method: Method::Rk45Adaptive,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            record_every: 1,
            ..Default::default()
        };
        let (t, y) = solve(vec![1.0, 0.0], 0.0, &cfg, decay, |_, _| Ok(())).unwrap();
        assert_eq!(*t.last().unwrap(), 5.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        let yf = y.last().unwrap();
        assert!((yf[0] - (-5.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_rk4_energy() {
        let cfg = SolverConfig {
            dt: 1e-3,
            t_final: 10.0,
            record_every: 10_000,
            ..Default::default()
        };
        let (_, y) = solve(
            vec![1.0, 0.0],
            0.0,
            &cfg,
            |_, y: &Vec<f64>| vec![y[1], -y[0]],
            |_, _| Ok(()),
        )
        .unwrap();
        let yf = y.last().unwrap();
        assert!((yf[0] - 10f64.cos()).abs() < 1e-11);
    }
}

//! Shared value types: frequency ensembles, correlation matrices,
//! phase-locked states and solver settings.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;

/// Default slack allowed on `|z_jk| <= 1`.
pub const DEFAULT_TOL_BALL: f64 = 1e-8;

/// Natural frequencies in the rotating frame (zero mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEnsemble {
    omegas: Vec<f64>,
}

/// Build an ensemble from raw frequencies by subtracting their mean.
pub fn make_ensemble(raw: &[f64]) -> Result<FrequencyEnsemble> {
    if raw.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 frequencies, got {}",
            raw.len()
        )));
    }
    if let Some(bad) = raw.iter().find(|w| !w.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite frequency {bad}")));
    }
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    // A mean at rounding level is already zero; leaving it keeps centering idempotent.
    let scale = raw.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    if mean.abs() <= 2.0 * raw.len() as f64 * f64::EPSILON * scale {
        return Ok(FrequencyEnsemble { omegas: raw.to_vec() });
    }
    Ok(FrequencyEnsemble {
        omegas: raw.iter().map(|w| w - mean).collect(),
    })
}

impl FrequencyEnsemble {
    pub fn new(raw: &[f64]) -> Result<Self> {
        make_ensemble(raw)
    }

    /// `n` identical oscillators.
    pub fn homogeneous(n: usize) -> Result<Self> {
        make_ensemble(&vec![0.0; n])
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn n(&self) -> usize {
        self.omegas.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.omegas.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    /// `M = sum |Omega_j|`.
    pub fn total_spread(&self) -> f64 {
        self.omegas.iter().map(|w| w.abs()).sum()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.max_abs() == 0.0
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: n,
            });
        }
        Ok(())
    }
}

/// The matrix of pairwise correlations `z_jk = <psi_j, psi_k>` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationState {
    pub z: CMatrix,
    pub t: f64,
}

impl CorrelationState {
    /// Validate and wrap a matrix. The diagonal must be exactly one.
    pub fn new(z: CMatrix, t: f64) -> Result<Self> {
        let s = Self { z, t };
        s.validate(DEFAULT_TOL_BALL)?;
        Ok(s)
    }

    /// Wrap without validation (for deliberately invalid probes).
    pub fn new_unchecked(z: CMatrix, t: f64) -> Self {
        Self { z, t }
    }

    pub fn validate(&self, tol_ball: f64) -> Result<()> {
        let n = self.z.nrows();
        if self.z.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.z.ncols(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidInput("need N >= 2".into()));
        }
        for j in 0..n {
            if self.z[(j, j)] != C64::new(1.0, 0.0) {
                return Err(Error::InvalidInput(format!("z[{j}][{j}] != 1")));
            }
        }
        if self.symmetry_defect() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "z is not Hermitian (defect {:e})",
                self.symmetry_defect()
            )));
        }
        let m = self.max_modulus();
        if !(m <= 1.0 + tol_ball) {
            return Err(Error::BallViolation {
                t: self.t,
                modulus: m,
            });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    /// Fully synchronized: `z_jk = 1`.
    pub fn synchronized(n: usize) -> Self {
        Self::new_unchecked(CMatrix::from_element(n, n, C64::new(1.0, 0.0)), 0.0)
    }

    /// `z_jk = exp(i (a_j - a_k))` for the given phases.
    pub fn from_phases(alphas: &[f64]) -> Self {
        let n = alphas.len();
        let z = CMatrix::from_fn(n, n, |j, k| {
            if j == k {
                C64::new(1.0, 0.0)
            } else {
                C64::from_polar(1.0, alphas[j] - alphas[k])
            }
        });
        Self::new_unchecked(z, 0.0)
    }

    /// Build a state from a closure for the strict upper triangle; the lower
    /// triangle is filled by conjugation and the diagonal set to one.
    pub fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> C64) -> Self {
        let mut z = CMatrix::from_element(n, n, C64::new(1.0, 0.0));
        for j in 0..n {
            for k in j + 1..n {
                let v = upper(j, k);
                z[(j, k)] = v;
                z[(k, j)] = v.conj();
            }
        }
        Self::new_unchecked(z, 0.0)
    }

    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n();
        let mut d: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                d = d.max((self.z[(k, j)] - self.z[(j, k)].conj()).norm());
            }
        }
        d
    }

    pub fn max_modulus(&self) -> f64 {
        self.z.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest off-diagonal entry of `|a - b|`.
    pub fn max_offdiag_distance(&self, other: &Self) -> f64 {
        let n = self.n();
        let mut d: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    d = d.max((self.z[(j, k)] - other.z[(j, k)]).norm());
                }
            }
        }
        d
    }
}

/// Equilibrium angles and order-parameter norm of a phase-locked state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLockedState {
    pub alphas: Vec<f64>,
    pub lambda: f64,
}

impl PhaseLockedState {
    /// Wrap the angles into `[-pi, pi)` and set `lambda` to the mean cosine.
    pub fn from_alphas(alphas: Vec<f64>) -> Self {
        let alphas: Vec<f64> = alphas.into_iter().map(wrap_angle).collect();
        let lambda = alphas.iter().map(|a| a.cos()).sum::<f64>() / alphas.len() as f64;
        Self { alphas, lambda }
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    /// Largest violation of the defining identities; pass an ensemble and
    /// coupling to include the frequency balance `lambda sin a_j = Omega_j / kappa`.
    pub fn defect(&self, bound: Option<(&FrequencyEnsemble, f64)>) -> f64 {
        let n = self.n() as f64;
        let mean_cos = self.alphas.iter().map(|a| a.cos()).sum::<f64>() / n;
        let mean_sin = self.alphas.iter().map(|a| a.sin()).sum::<f64>() / n;
        let mut d = (self.lambda - mean_cos).abs().max(mean_sin.abs());
        if let Some((ens, kappa)) = bound {
            for (a, w) in self.alphas.iter().zip(ens.omegas()) {
                d = d.max((self.lambda * a.sin() - w / kappa).abs());
            }
        }
        d
    }

    /// `alpha_max - alpha_min`.
    pub fn opening_angle(&self) -> f64 {
        let hi = self.alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.alphas.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Map an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4,
    Rk45Adaptive,
}

/// Time-stepping settings shared by every integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub record_every: usize,
    pub tol_ball: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 50.0,
            method: Method::Rk4,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            record_every: 100,
            tol_ball: DEFAULT_TOL_BALL,
        }
    }
}

impl SolverConfig {
    /// Fixed-step RK4 with `dt = 1e-3 / kappa`.
    pub fn for_kappa(kappa: f64, t_final: f64) -> Self {
        Self {
            dt: 1e-3 / kappa,
            t_final,
            ..Self::default()
        }
    }

    pub fn with_record_every(mut self, stride: usize) -> Self {
        self.record_every = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.t_final > 0.0
            && self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.tol_ball > 0.0
            && self.record_every > 0
            && self.dt.is_finite()
            && self.t_final.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid solver config {self:?}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_examples() {
        assert_eq!(make_ensemble(&[1.0, -1.0]).unwrap().omegas(), &[1.0, -1.0]);
        assert_eq!(make_ensemble(&[2.0, 1.0, 0.0]).unwrap().omegas(), &[1.0, 0.0, -1.0]);
        let e = make_ensemble(&[3.0, -1.0, -1.0, -1.0]).unwrap();
        assert_eq!(e.omegas(), &[3.0, -1.0, -1.0, -1.0]);
        assert_eq!(e.total_spread(), 6.0);
        assert_eq!(e.max_abs(), 3.0);
    }

    #[test]
    fn ensemble_errors() {
        assert!(make_ensemble(&[1.0]).is_err());
        assert!(make_ensemble(&[1.0, f64::NAN]).is_err());
        assert!(make_ensemble(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn state_validation() {
        let s = CorrelationState::from_phases(&[0.3, -0.1, 0.7]);
        assert!(s.validate(1e-8).is_ok());
        let mut bad = s.clone();
        bad.z[(0, 1)] = C64::new(1.5, 0.0);
        bad.z[(1, 0)] = C64::new(1.5, 0.0);
        assert!(matches!(bad.validate(1e-8), Err(Error::BallViolation { .. })));
        let mut asym = s.clone();
        asym.z[(0, 1)] = C64::new(0.2, 0.1);
        assert!(asym.validate(1e-8).is_err());
    }

    #[test]
    fn wrap_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn solver_config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let mut c = SolverConfig::default();
        c.dt = 0.0;
        assert!(c.validate().is_err());
    }
}

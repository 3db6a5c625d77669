use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::C64;

/// Periodic grid on `[-L, L)` with `G` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_width: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0) || points < 4 || points % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "grid needs L > 0 and an even point count >= 4, got L = {half_width}, G = {points}"
            )));
        }
        Ok(Self { half_width, points })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points).map(|i| -self.half_width + i as f64 * self.dx()).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let g = self.points as i64;
        let base = PI / self.half_width;
        (0..g)
            .map(|i| base * if i < g / 2 { i } else { i - g } as f64)
            .collect()
    }

    /// `<a, b> = dx sum conj(a) b`.
    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * self.dx()
    }

    pub fn norm(&self, a: &[C64]) -> f64 {
        (a.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dx()).sqrt()
    }

    pub fn normalize(&self, mut a: Vec<C64>) -> Vec<C64> {
        let n = self.norm(&a);
        a.iter_mut().for_each(|c| *c /= n);
        a
    }

    /// Normalized Gaussian `exp(-(x - c)^2 / (4 s^2) + i p x)`.
    pub fn gaussian(&self, center: f64, width: f64, momentum: f64) -> Vec<C64> {
        let v = self
            .xs()
            .into_iter()
            .map(|x| C64::from_polar((-(x - center).powi(2) / (4.0 * width * width)).exp(), momentum * x))
            .collect();
        self.normalize(v)
    }

    /// Ground state of `-1/2 d^2 + (w^2/2) x^2`.
    pub fn harmonic_ground_state(&self, omega: f64) -> Vec<C64> {
        let v = self
            .xs()
            .into_iter()
            .map(|x| C64::new((-0.5 * omega * x * x).exp(), 0.0))
            .collect();
        self.normalize(v)
    }

    /// Free evolution of `(2 pi s^2)^{-1/4} exp(-x^2/(4 s^2))` at time `t`.
    pub fn free_gaussian_exact(&self, width: f64, t: f64) -> Vec<C64> {
        let s2 = width * width;
        let spread = C64::new(1.0, t / (2.0 * s2));
        let amp = (2.0 * PI * s2).powf(-0.25) / spread.sqrt();
        self.xs()
            .into_iter()
            .map(|x| amp * (-(x * x) / (4.0 * s2 * spread)).exp())
            .collect()
    }
}

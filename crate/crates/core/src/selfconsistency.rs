//! Scalar self-consistency for the locked order parameter:
//! `R = (1/N) sum_j sqrt(1 - (w_j / (K R))^2)`.
//!
//! `h(R) = (1/N) sum_j sqrt(1 - x_j^2) - R` is concave on `[R_floor, 1]`
//! with `R_floor = max|w| / K`, so Newton's method started at `R = 1`
//! decreases monotonically onto the largest root, and overshooting
//! `R_floor` proves that no root exists.

use crate::error::{Error, Result};

/// Which root of the self-consistency to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    /// Largest root; every angle on the principal arcsine branch.
    #[default]
    Stable,
    /// The other locked solution: the smaller root of `h` if one exists,
    /// otherwise the root with the fastest oscillator's cosine negated.
    Unstable,
}

/// A root of the self-consistency together with the branch layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRoot {
    pub r: f64,
    /// Oscillator whose cosine is taken negative, if any.
    pub flipped: Option<usize>,
}

const MAX_ITER: usize = 10_000;
const FOLD_SLOPE: f64 = 1e-7;
const FOLD_HEIGHT: f64 = 1e-14;

struct Problem<'a> {
    omegas: &'a [f64],
    k: f64,
    floor: f64,
}

impl Problem<'_> {
    fn cosines(&self, r: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.omegas.iter().map(move |w| {
            let x = (w / (self.k * r)).clamp(-1.0, 1.0);
            (x, (1.0 - x * x).max(0.0).sqrt())
        })
    }

    fn h(&self, r: f64) -> f64 {
        self.cosines(r).map(|(_, c)| c).sum::<f64>() / self.omegas.len() as f64 - r
    }

    fn dh(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for (x, c) in self.cosines(r) {
            if x != 0.0 {
                if c == 0.0 {
                    return f64::INFINITY;
                }
                acc += x * x / (r * c);
            }
        }
        acc / self.omegas.len() as f64 - 1.0
    }

    /// Maximizer of the concave `h` on `[floor, hi]`.
    fn argmax(&self, hi: f64) -> f64 {
        if self.dh(hi) >= 0.0 {
            return hi;
        }
        let (mut a, mut b) = (self.floor, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.dh(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Root of `g` between `a` and `b` (either order) with `g(a) >= 0 > g(b)`.
    fn bisect(&self, mut a: f64, mut b: f64, g: impl Fn(f64) -> f64) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if g(m) >= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Resolve the largest root once Newton can no longer be trusted
    /// (flat slope near the fold, or an overshoot of the floor).
    fn fold_resolve(&self, hi: f64) -> Option<f64> {
        let rm = self.argmax(hi);
        let hm = self.h(rm);
        if hm > FOLD_HEIGHT {
            Some(self.bisect(rm, hi, |r| self.h(r)))
        } else if hm >= -FOLD_HEIGHT {
            Some(rm)
        } else {
            None
        }
    }

    fn stable(&self) -> Result<Option<f64>> {
        if self.floor == 0.0 {
            return Ok(Some(1.0));
        }
        if self.floor >= 1.0 {
            return Ok(None);
        }
        let mut r = 1.0;
        let mut prev: Option<(f64, f64)> = None;
        for _ in 0..MAX_ITER {
            let h = self.h(r);
            if h == 0.0 {
                return Ok(Some(r));
            }
            // A sign change means rounding noise dominates Newton; the bracket is tight.
            if let Some((rp, hp)) = prev {
                if hp * h < 0.0 {
                    let (a, b) = if h > 0.0 { (r, rp) } else { (rp, r) };
                    return Ok(Some(self.bisect(a, b, |x| self.h(x))));
                }
            }
            prev = Some((r, h));
            let dh = self.dh(r);
            if dh >= -FOLD_SLOPE {
                return Ok(self.fold_resolve(r));
            }
            let step = h / dh;
            let next = r - step;
            if next < self.floor {
                return Ok(self.fold_resolve(r));
            }
            if step.abs() <= 4.0 * f64::EPSILON * r {
                return Ok(Some(next));
            }
            r = next;
        }
        Err(Error::NonConvergence(format!(
            "self-consistency did not converge in {MAX_ITER} steps (K = {})",
            self.k
        )))
    }

    fn unstable(&self) -> Result<Option<ScalarRoot>> {
        let Some(rs) = self.stable()? else {
            return Ok(None);
        };
        if self.floor == 0.0 {
            return Ok(None);
        }
        if self.h(self.floor) < 0.0 {
            let rm = self.argmax(rs);
            let r = self.bisect(rm, self.floor, |r| self.h(r));
            return Ok(Some(ScalarRoot { r, flipped: None }));
        }
        let m = (0..self.omegas.len())
            .max_by(|&a, &b| self.omegas[a].abs().total_cmp(&self.omegas[b].abs()))
            .unwrap();
        let n = self.omegas.len() as f64;
        let hu = |r: f64| {
            let x = (self.omegas[m] / (self.k * r)).clamp(-1.0, 1.0);
            self.h(r) - 2.0 / n * (1.0 - x * x).max(0.0).sqrt()
        };
        let r = self.bisect(self.floor, rs, hu);
        Ok(Some(ScalarRoot { r, flipped: Some(m) }))
    }
}

/// Solve for the locked order parameter at coupling `k`.
///
/// Returns `Ok(None)` when no locked state exists on the requested branch.
pub fn solve_order_parameter(omegas: &[f64], k: f64, branch: Branch) -> Result<Option<ScalarRoot>> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidInput(format!("coupling must be positive, got {k}")));
    }
    let floor = omegas.iter().fold(0.0f64, |m, w| m.max(w.abs())) / k;
    let p = Problem { omegas, k, floor };
    match branch {
        Branch::Stable => Ok(p.stable()?.map(|r| ScalarRoot { r, flipped: None })),
        Branch::Unstable => p.unstable(),
    }
}

/// Residual `|R - (1/N) sum sqrt(1 - (w/(K R))^2)|`.
pub fn self_consistency_residual(omegas: &[f64], k: f64, r: f64) -> f64 {
    let p = Problem { omegas, k, floor: 0.0 };
    p.h(r).abs()
}

/// Angles on the chosen branch: `sin a_j = w_j / (K R)`.
pub fn angles_from_root(omegas: &[f64], k: f64, root: ScalarRoot) -> Vec<f64> {
    use std::f64::consts::PI;
    omegas
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let a = (w / (k * root.r)).clamp(-1.0, 1.0).asin();
            if root.flipped == Some(j) {
                if a >= 0.0 {
                    PI - a
                } else {
                    -PI - a
                }
            } else {
                a
            }
        })
        .collect()
}

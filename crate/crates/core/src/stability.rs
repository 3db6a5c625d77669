//! Linear stability of equilibria through the holomorphic Jacobian of the
//! fixed-point map `F = -RHS / kappa`.
//!
//! Sign convention: because `F` is the negated right-hand side, an
//! equilibrium is linearly stable when every eigenvalue has positive real part.

use std::f64::consts::PI;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fixed_point::fmap;
use crate::model::{CMatrix, CorrelationState, FrequencyEnsemble, PhaseLockedState, C64};

/// Default band around zero treated as neither sign.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-9;

/// Row-major enumeration of the ordered pairs `(j, k)`, `j != k`:
/// `(0,1), (0,2), ..., (1,0), (1,2), ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    n: usize,
}

impl IndexMap {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    /// Number of variables, `N (N - 1)`.
    pub fn len(&self) -> usize {
        self.n * (self.n - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pair_to_flat(&self, j: usize, k: usize) -> Option<usize> {
        if j == k || j >= self.n || k >= self.n {
            return None;
        }
        Some(j * (self.n - 1) + if k < j { k } else { k - 1 })
    }

    pub fn flat_to_pair(&self, idx: usize) -> (usize, usize) {
        let j = idx / (self.n - 1);
        let r = idx % (self.n - 1);
        (j, if r < j { r } else { r + 1 })
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).map(|i| self.flat_to_pair(i))
    }
}

/// Jacobian of `F` in the `N(N-1)` off-diagonal variables, each `z_jk`
/// treated as independent of `z_kj`.
pub fn build_jacobian(state: &CorrelationState, ens: &FrequencyEnsemble, kappa: f64) -> Result<CMatrix> {
    let n = state.n();
    ens.check_dim(n)?;
    let idx = IndexMap::new(n);
    let z = &state.z;
    let om = ens.omegas();
    let nf = n as f64;
    let one = C64::new(1.0, 0.0);
    let rows: Vec<C64> = (0..n).map(|j| (0..n).map(|l| z[(j, l)]).sum()).collect();
    let cols: Vec<C64> = (0..n).map(|k| (0..n).map(|l| z[(l, k)]).sum()).collect();
    let mut jac = CMatrix::zeros(idx.len(), idx.len());
    for (row, (j, k)) in idx.pairs().enumerate() {
        let w = one - z[(j, k)];
        jac[(row, row)] = C64::new(0.0, -(om[j] - om[k]) / kappa) + (rows[j] + cols[k]) / (2.0 * nf) - w / nf;
        let off = -w / (2.0 * nf);
        for l in (0..n).filter(|&l| l != j && l != k) {
            jac[(row, idx.pair_to_flat(j, l).unwrap())] += off;
            jac[(row, idx.pair_to_flat(l, k).unwrap())] += off;
        }
    }
    Ok(jac)
}

/// Central holomorphic differences of `F`, perturbing one `z_jk` at a time.
pub fn finite_difference_jacobian(
    state: &CorrelationState,
    ens: &FrequencyEnsemble,
    kappa: f64,
    h: f64,
) -> Result<CMatrix> {
    let n = state.n();
    let idx = IndexMap::new(n);
    let mut jac = CMatrix::zeros(idx.len(), idx.len());
    for (col, (p, q)) in idx.pairs().enumerate() {
        let mut plus = state.clone();
        let mut minus = state.clone();
        plus.z[(p, q)] += h;
        minus.z[(p, q)] -= h;
        let fp = fmap(&plus, ens, kappa)?;
        let fm = fmap(&minus, ens, kappa)?;
        for (row, (j, k)) in idx.pairs().enumerate() {
            jac[(row, col)] = (fp[(j, k)] - fm[(j, k)]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Eigenvalues of a dense complex matrix via a complex Schur decomposition.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
    }
    if n == 0 {
        return Ok(vec![]);
    }
    let max_iter = 1000 * n.max(10);
    // Deflation at exactly machine epsilon can stall when diagonal entries vanish.
    let eps = 4.0 * f64::EPSILON;
    if let Some(schur) = m.clone().try_schur(eps, max_iter) {
        return Ok(schur.unpack().1.diagonal().iter().copied().collect());
    }
    // QR stalls on spectra symmetric about zero (e.g. real symmetric with a
    // zero diagonal); a complex diagonal shift breaks the symmetry.
    let scale = m.iter().fold(0.0f64, |a, c| a.max(c.norm())).max(f64::MIN_POSITIVE);
    for k in 1..=3 {
        let sigma = C64::new(0.31, 0.17) * (scale * k as f64);
        let shifted = m + CMatrix::identity(n, n) * sigma;
        if let Some(schur) = shifted.try_schur(eps, max_iter) {
            return Ok(schur.unpack().1.diagonal().iter().map(|e| e - sigma).collect());
        }
    }
    Err(Error::Eigensolver(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Stable,
    Saddle,
    Repulsive,
    Marginal,
}

impl Classification {
    pub fn of(eigs: &[C64], tol: f64) -> Self {
        let pos = eigs.iter().filter(|e| e.re > tol).count();
        let neg = eigs.iter().filter(|e| e.re < -tol).count();
        if pos == eigs.len() {
            Classification::Stable
        } else if neg == eigs.len() {
            Classification::Repulsive
        } else if pos > 0 && neg > 0 {
            Classification::Saddle
        } else {
            Classification::Marginal
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Stable => "stable",
            Classification::Saddle => "saddle",
            Classification::Repulsive => "repulsive",
            Classification::Marginal => "marginal",
        }
    }
}

fn as_pairs<S: Serializer>(eigs: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<[f64; 2]> = eigs.iter().map(|c| [c.re, c.im]).collect();
    v.serialize(s)
}

/// Eigenvalues of the F-map Jacobian with a sign classification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    #[serde(serialize_with = "as_pairs")]
    pub eigenvalues: Vec<C64>,
    pub classification: Classification,
    pub min_re: f64,
    pub zero_modes: usize,
    pub zero_tolerance: f64,
}

pub fn spectrum(m: &CMatrix) -> Result<SpectrumReport> {
    spectrum_with_tolerance(m, DEFAULT_ZERO_TOLERANCE)
}

pub fn spectrum_with_tolerance(m: &CMatrix, zero_tolerance: f64) -> Result<SpectrumReport> {
    let mut eigs = eigenvalues(m)?;
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(SpectrumReport {
        classification: Classification::of(&eigs, zero_tolerance),
        min_re: eigs.iter().map(|e| e.re).fold(f64::INFINITY, f64::min),
        zero_modes: eigs.iter().filter(|e| e.re.abs() <= zero_tolerance).count(),
        eigenvalues: eigs,
        zero_tolerance,
    })
}

/// Homogeneous (`Omega = 0`) equilibrium families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomogeneousKind {
    FullSync,
    /// The first `size` oscillators antipodal to the rest.
    Bipolar(usize),
    /// Phases `2 pi j / N`, so the mean field vanishes.
    Incoherent,
    /// Mutually orthogonal wave functions, `z_jk = 0`.
    Trivial,
}

pub fn homogeneous_state(kind: HomogeneousKind, n: usize) -> Result<CorrelationState> {
    if n < 2 {
        return Err(Error::InvalidInput("need N >= 2".into()));
    }
    Ok(match kind {
        HomogeneousKind::FullSync => CorrelationState::synchronized(n),
        HomogeneousKind::Bipolar(size) => {
            if size == 0 || size >= n {
                return Err(Error::InvalidInput(format!("bipolar size {size} must be in 1..{n}")));
            }
            CorrelationState::from_upper(n, |j, k| {
                C64::new(if (j < size) == (k < size) { 1.0 } else { -1.0 }, 0.0)
            })
        }
        HomogeneousKind::Incoherent => {
            let phases: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
            CorrelationState::from_phases(&phases)
        }
        HomogeneousKind::Trivial => CorrelationState::from_upper(n, |_, _| C64::new(0.0, 0.0)),
    })
}

/// Expected spectrum of a homogeneous family.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSpectrum {
    /// Exact real eigenvalue multiset.
    Exact(Vec<f64>),
    /// Only the sign statement: every eigenvalue has negative real part.
    AllNegativeReal,
}

/// The published reference spectra of the homogeneous families.
///
/// `FullSync`: `1` with multiplicity `N(N-1)`. `Bipolar(1)`: `0`, then
/// `-2/N` with multiplicity `(N-1)(N-2) - 1`, then `(N-2)/N` with
/// multiplicity `2(N-1)`. Incoherent and trivial: sign claim only.
/// These are the claimed values; see the tests for how they compare with the
/// computed spectra.
pub fn homogeneous_reference_spectrum(kind: HomogeneousKind, n: usize) -> Result<ReferenceSpectrum> {
    if n < 2 {
        return Err(Error::InvalidInput("need N >= 2".into()));
    }
    let nf = n as f64;
    Ok(match kind {
        HomogeneousKind::FullSync => ReferenceSpectrum::Exact(vec![1.0; n * (n - 1)]),
        HomogeneousKind::Bipolar(1) if n >= 3 => {
            let mut v = vec![0.0];
            v.extend(std::iter::repeat(-2.0 / nf).take((n - 1) * (n - 2) - 1));
            v.extend(std::iter::repeat((nf - 2.0) / nf).take(2 * (n - 1)));
            ReferenceSpectrum::Exact(v)
        }
        HomogeneousKind::Bipolar(size) => {
            return Err(Error::InvalidInput(format!(
                "no reference spectrum for bipolar size {size} at N = {n}"
            )))
        }
        HomogeneousKind::Incoherent | HomogeneousKind::Trivial => ReferenceSpectrum::AllNegativeReal,
    })
}

/// True if every expected value can be paired with a distinct computed
/// eigenvalue within `tol`.
pub fn multiset_matches(computed: &[C64], expected: &[C64], tol: f64) -> bool {
    if computed.len() != expected.len() {
        return false;
    }
    let mut used = vec![false; computed.len()];
    for e in expected {
        let best = computed
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|a, b| (a.1 - e).norm().total_cmp(&(b.1 - e).norm()));
        match best {
            Some((i, c)) if (c - e).norm() <= tol => used[i] = true,
            _ => return false,
        }
    }
    true
}

/// First-order estimate of the real part of one eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbedEstimate {
    pub pair: (usize, usize),
    pub re_estimate: f64,
}

/// `Re mu_jk ~ (lambda/2)(cos a_j + cos a_k) - (1/N)(1 - cos(a_j - a_k))`
/// for every ordered pair `j != k`.
pub fn perturbed_eigenvalues(pls: &PhaseLockedState) -> Vec<PerturbedEstimate> {
    let n = pls.n();
    let a = &pls.alphas;
    IndexMap::new(n)
        .pairs()
        .map(|(j, k)| PerturbedEstimate {
            pair: (j, k),
            re_estimate: 0.5 * pls.lambda * (a[j].cos() + a[k].cos())
                - (1.0 - (a[j] - a[k]).cos()) / n as f64,
        })
        .collect()
}

/// True iff the pairwise frequency differences `Omega_j - Omega_k` (`j != k`)
/// are mutually distinct to within `1e-12`.
pub fn assumption_check(ens: &FrequencyEnsemble) -> bool {
    let om = ens.omegas();
    let diffs: Vec<f64> = IndexMap::new(om.len()).pairs().map(|(j, k)| om[j] - om[k]).collect();
    for i in 0..diffs.len() {
        for l in i + 1..diffs.len() {
            if (diffs[i] - diffs[l]).abs() <= 1e-12 {
                return false;
            }
        }
    }
    true
}

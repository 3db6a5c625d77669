//! Split-step evolution of the full wave-function ensemble on a periodic
//! 1-D grid, used as an independent check on the correlation reduction.
//!
//! Each step is `K/2 . V/2 . C . V/2 . K/2`: the kinetic half-steps are exact
//! in Fourier space, the potential half-steps are exact phase multiplications,
//! and `C` integrates `psi_j' = -i Omega_j psi_j + (kappa/2)(zeta - z_j psi_j)`
//! with RK4. `C` only mixes the `psi_j` with coefficients that depend on their
//! correlations, so it commutes with the common linear propagator: the derived
//! correlations follow an RK4 discretization of the reduced system exactly,
//! and locked states stay stationary.

mod grid;

use std::io::Write;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, Trajectory};
use crate::error::{Error, Result};
use crate::model::{CorrelationState, FrequencyEnsemble, PhaseLockedState, SolverConfig, C64};
use crate::ode::fixed_step_count;

pub use grid::Grid;

/// Mass drift that aborts a run.
pub const MASS_ABORT: f64 = 1e-6;
/// Required integrand norm at the final time for the scattering states.
pub const TAIL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Free,
    Harmonic { omega_trap: f64 },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialSpec::Harmonic { omega_trap } if !(omega_trap > 0.0) => {
                Err(Error::InvalidInput(format!("omega_trap must be positive, got {omega_trap}")))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Harmonic { omega_trap } => 0.5 * omega_trap * omega_trap * x * x,
        }
    }

    /// Largest potential value on the grid.
    pub fn scale(&self, grid: &Grid) -> f64 {
        self.value(grid.half_width)
    }
}

/// `N` wave functions on a shared grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveEnsemble {
    pub psis: Vec<Vec<C64>>,
    pub grid: Grid,
    pub t: f64,
}

impl WaveEnsemble {
    pub fn new(psis: Vec<Vec<C64>>, grid: Grid) -> Result<Self> {
        if psis.is_empty() || psis.iter().any(|p| p.len() != grid.points) {
            return Err(Error::InvalidInput("wave functions must match the grid".into()));
        }
        let we = Self { psis, grid, t: 0.0 };
        let drift = we.mass_drift();
        if drift > 1e-8 {
            return Err(Error::InvalidInput(format!("wave functions not normalized (drift {drift:e})")));
        }
        Ok(we)
    }

    pub fn n(&self) -> usize {
        self.psis.len()
    }

    /// `max_j | ||psi_j|| - 1 |`.
    pub fn mass_drift(&self) -> f64 {
        self.psis.iter().map(|p| (self.grid.norm(p) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `z_jk = <psi_j, psi_k>`, with the diagonal set to one.
    pub fn correlations(&self) -> CorrelationState {
        let mut s = CorrelationState::from_upper(self.n(), |j, k| self.grid.inner(&self.psis[j], &self.psis[k]));
        s.t = self.t;
        s
    }

    /// Write `x, rho_1, ..., rho_N` with `rho_j = |psi_j(x)|^2`.
    pub fn write_density_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = vec!["x".to_string()];
        header.extend((1..=self.n()).map(|j| format!("rho_{j}")));
        writeln!(w, "# t={}", self.t)?;
        writeln!(w, "{}", header.join(","))?;
        for (i, x) in self.grid.xs().iter().enumerate() {
            let mut row = vec![format!("{x:.10e}")];
            row.extend(self.psis.iter().map(|p| format!("{:.15e}", p[i].norm_sqr())));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Step control for [`evolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Correlations are recorded every this many steps.
    pub record_every: usize,
    /// Full wave functions are kept every this many steps (never if `None`).
    pub snapshot_every: Option<usize>,
    /// Accumulate the Duhamel integrals needed by [`asymptotic_wavefunctions`].
    pub track_duhamel: bool,
}

impl WaveConfig {
    /// Largest step allowed for this problem: `1e-3 / max(kappa, max|Omega|, max V)`
    /// (unbounded when all three vanish).
    pub fn max_dt(kappa: f64, ens: &FrequencyEnsemble, v: &PotentialSpec, grid: &Grid) -> f64 {
        1e-3 / kappa.max(ens.max_abs()).max(v.scale(grid))
    }

    /// The largest admissible step with an even step count.
    pub fn for_problem(kappa: f64, ens: &FrequencyEnsemble, v: &PotentialSpec, grid: &Grid, t_final: f64) -> Self {
        let mut steps = fixed_step_count(t_final, Self::max_dt(kappa, ens, v, grid).min(1e-3));
        steps += steps % 2;
        Self {
            dt: t_final / steps as f64,
            t_final,
            record_every: 100,
            snapshot_every: None,
            track_duhamel: true,
        }
    }
}

/// Everything produced by one wave evolution.
#[derive(Debug, Clone)]
pub struct WaveRun {
    pub initial: WaveEnsemble,
    pub final_state: WaveEnsemble,
    pub correlations: Trajectory,
    pub snapshots: Vec<WaveEnsemble>,
    pub max_mass_drift: f64,
    /// `(t, ||G_j||)` at each recorded time, where `G_j` is the Duhamel integrand.
    pub integrand_norms: Vec<(f64, Vec<f64>)>,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    potential: PotentialSpec,
    duhamel: Option<Duhamel>,
}

#[derive(Debug, Clone)]
struct Duhamel {
    /// Trapezoid sums, propagated to the current time.
    trap: Vec<Vec<C64>>,
    /// Simpson sums (valid at even steps).
    simpson: Vec<Vec<C64>>,
    /// Linear evolution of the initial data.
    free: Vec<Vec<C64>>,
}

/// Linear propagators built from one FFT plan.
struct Propagator {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
    half_kinetic: Vec<C64>,
    full_kinetic: Vec<C64>,
    potential_full: Vec<C64>,
    free: bool,
    g: usize,
}

impl Propagator {
    fn new(grid: &Grid, v: &PotentialSpec, dt: f64) -> Self {
        let mut planner = FftPlanner::new();
        let g = grid.points;
        let fwd = planner.plan_fft_forward(g);
        let inv = planner.plan_fft_inverse(g);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let ks = grid.wavenumbers();
        Self {
            fwd,
            inv,
            scratch: vec![C64::new(0.0, 0.0); scratch_len],
            half_kinetic: ks.iter().map(|k| C64::from_polar(1.0, -0.25 * k * k * dt)).collect(),
            full_kinetic: ks.iter().map(|k| C64::from_polar(1.0, -0.5 * k * k * dt)).collect(),
            potential_full: grid.xs().iter().map(|&x| C64::from_polar(1.0, -v.value(x) * dt)).collect(),
            free: matches!(v, PotentialSpec::Free),
            g,
        }
    }

    fn kinetic(&mut self, psi: &mut [C64], factor_half: bool) {
        self.fwd.process_with_scratch(psi, &mut self.scratch);
        let f = if factor_half { &self.half_kinetic } else { &self.full_kinetic };
        let norm = 1.0 / self.g as f64;
        for (c, m) in psi.iter_mut().zip(f) {
            *c *= m * norm;
        }
        self.inv.process_with_scratch(psi, &mut self.scratch);
    }

    /// Representation used for the Duhamel accumulators: Fourier space when
    /// the propagator is diagonal there, physical space otherwise.
    fn to_repr(&mut self, psi: &mut [C64]) {
        if self.free {
            self.fwd.process_with_scratch(psi, &mut self.scratch);
        }
    }

    fn from_repr(&mut self, psi: &mut [C64]) {
        if self.free {
            self.inv.process_with_scratch(psi, &mut self.scratch);
            let norm = 1.0 / self.g as f64;
            psi.iter_mut().for_each(|c| *c *= norm);
        }
    }

    /// `exp(-i H dt)` in the accumulator representation, or its inverse.
    fn linear_step_repr(&mut self, psi: &mut [C64], inverse: bool) {
        if self.free {
            for (c, m) in psi.iter_mut().zip(&self.full_kinetic) {
                *c *= if inverse { m.conj() } else { *m };
            }
            return;
        }
        if inverse {
            self.conj_kinetic(psi);
            for (c, m) in psi.iter_mut().zip(&self.potential_full) {
                *c *= m.conj();
            }
            self.conj_kinetic(psi);
        } else {
            self.kinetic(psi, true);
            for (c, m) in psi.iter_mut().zip(&self.potential_full) {
                *c *= m;
            }
            self.kinetic(psi, true);
        }
    }

    fn conj_kinetic(&mut self, psi: &mut [C64]) {
        self.fwd.process_with_scratch(psi, &mut self.scratch);
        let norm = 1.0 / self.g as f64;
        for (c, m) in psi.iter_mut().zip(&self.half_kinetic) {
            *c *= m.conj() * norm;
        }
        self.inv.process_with_scratch(psi, &mut self.scratch);
    }
}

/// `zeta = (1/N) sum psi_l` and `z_j = <zeta, psi_j>`.
fn mean_field(grid: &Grid, psis: &[Vec<C64>]) -> (Vec<C64>, Vec<C64>) {
    let n = psis.len() as f64;
    let g = grid.points;
    let mut zeta = vec![C64::new(0.0, 0.0); g];
    for p in psis {
        for (z, c) in zeta.iter_mut().zip(p) {
            *z += c;
        }
    }
    zeta.iter_mut().for_each(|z| *z /= n);
    let zj = psis.iter().map(|p| grid.inner(&zeta, p)).collect();
    (zeta, zj)
}

/// `d psi_j / dt = -i Omega_j psi_j + (kappa/2)(zeta - z_j psi_j)`.
fn coupling_rhs(grid: &Grid, psis: &[Vec<C64>], omegas: &[f64], kappa: f64) -> Vec<Vec<C64>> {
    let (zeta, zj) = mean_field(grid, psis);
    psis.iter()
        .zip(&zj)
        .zip(omegas)
        .map(|((p, z), w)| {
            let rot = C64::new(0.0, -w);
            p.iter().zip(&zeta).map(|(c, m)| rot * c + (m - z * c) * (0.5 * kappa)).collect()
        })
        .collect()
}

fn axpy(out: &[Vec<C64>], a: f64, k: &[Vec<C64>]) -> Vec<Vec<C64>> {
    out.iter()
        .zip(k)
        .map(|(p, q)| p.iter().zip(q).map(|(x, y)| x + y * a).collect())
        .collect()
}

fn coupling_step(grid: &Grid, psis: &mut [Vec<C64>], omegas: &[f64], kappa: f64, dt: f64) {
    if kappa == 0.0 && omegas.iter().all(|w| *w == 0.0) {
        return;
    }
    let k1 = coupling_rhs(grid, psis, omegas, kappa);
    let k2 = coupling_rhs(grid, &axpy(psis, 0.5 * dt, &k1), omegas, kappa);
    let k3 = coupling_rhs(grid, &axpy(psis, 0.5 * dt, &k2), omegas, kappa);
    let k4 = coupling_rhs(grid, &axpy(psis, dt, &k3), omegas, kappa);
    for j in 0..psis.len() {
        for i in 0..grid.points {
            psis[j][i] += (k1[j][i] + (k2[j][i] + k3[j][i]) * 2.0 + k4[j][i]) * (dt / 6.0);
        }
    }
}

/// Duhamel integrand `G_j = Omega_j psi_j + (i kappa/2)(zeta - <zeta, psi_j> psi_j)`.
fn integrand(grid: &Grid, psis: &[Vec<C64>], omegas: &[f64], kappa: f64) -> Vec<Vec<C64>> {
    let (zeta, zj) = mean_field(grid, psis);
    let ik = C64::new(0.0, 0.5 * kappa);
    psis.iter()
        .zip(&zj)
        .zip(omegas)
        .map(|((p, z), w)| p.iter().zip(&zeta).map(|(c, m)| c * *w + ik * (m - z * c)).collect())
        .collect()
}

/// Evolve the ensemble and record the derived correlations.
pub fn evolve(
    we0: &WaveEnsemble,
    v: &PotentialSpec,
    ens: &FrequencyEnsemble,
    kappa: f64,
    cfg: &WaveConfig,
) -> Result<WaveRun> {
    v.validate()?;
    ens.check_dim(we0.n())?;
    if !(kappa >= 0.0) || !(cfg.dt > 0.0) || !(cfg.t_final > 0.0) || cfg.record_every == 0 {
        return Err(Error::InvalidInput(format!("invalid wave settings {cfg:?}, kappa = {kappa}")));
    }
    let limit = WaveConfig::max_dt(kappa, ens, v, &we0.grid);
    if cfg.dt > limit * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!("dt = {} exceeds the resolution limit {limit}", cfg.dt)));
    }
    let grid = we0.grid.clone();
    let mut steps = fixed_step_count(cfg.t_final, cfg.dt);
    if cfg.track_duhamel && steps % 2 == 1 {
        steps += 1;
    }
    let dt = cfg.t_final / steps as f64;
    let mut prop = Propagator::new(&grid, v, dt);
    let omegas = ens.omegas();
    let half_phase: Vec<C64> = grid.xs().iter().map(|&x| C64::from_polar(1.0, -v.value(x) * 0.5 * dt)).collect();

    let mut psis = we0.psis.clone();
    let t0 = we0.t;
    let mut times = vec![t0];
    let mut states = vec![we0.correlations()];
    let mut snapshots = if cfg.snapshot_every.is_some() { vec![we0.clone()] } else { vec![] };
    let mut integrand_norms = Vec::new();
    let mut max_drift = we0.mass_drift();

    let mut g_prev = integrand(&grid, &psis, omegas, kappa);
    integrand_norms.push((t0, g_prev.iter().map(|g| grid.norm(g)).collect()));
    let mut duhamel = cfg.track_duhamel.then(|| {
        let zero = vec![vec![C64::new(0.0, 0.0); grid.points]; psis.len()];
        let mut free = psis.clone();
        free.iter_mut().for_each(|p| prop.to_repr(p));
        Duhamel { trap: zero.clone(), simpson: zero, free }
    });
    if duhamel.is_some() {
        g_prev.iter_mut().for_each(|g| prop.to_repr(g));
    }

    for step in 1..=steps {
        for p in psis.iter_mut() {
            prop.kinetic(p, true);
            p.iter_mut().zip(&half_phase).for_each(|(c, m)| *c *= m);
        }
        coupling_step(&grid, &mut psis, omegas, kappa, dt);
        for p in psis.iter_mut() {
            p.iter_mut().zip(&half_phase).for_each(|(c, m)| *c *= m);
            prop.kinetic(p, true);
        }
        let t = if step == steps { t0 + cfg.t_final } else { t0 + step as f64 * dt };

        let drift = psis.iter().map(|p| (grid.norm(p) - 1.0).abs()).fold(0.0, f64::max);
        max_drift = max_drift.max(drift);
        if drift > MASS_ABORT {
            return Err(Error::MassDrift { drift });
        }

        let record = step % cfg.record_every == 0 || step == steps;
        let need_g = duhamel.is_some() || record;
        if need_g {
            let mut g_new = integrand(&grid, &psis, omegas, kappa);
            if record {
                integrand_norms.push((t, g_new.iter().map(|g| grid.norm(g)).collect()));
            }
            if let Some(d) = duhamel.as_mut() {
                g_new.iter_mut().for_each(|g| prop.to_repr(g));
                let odd = step % 2 == 1;
                for j in 0..psis.len() {
                    let (trap, simp, free) = (&mut d.trap[j], &mut d.simpson[j], &mut d.free[j]);
                    let (gp, gn) = (&g_prev[j], &g_new[j]);
                    trap.iter_mut().zip(gp).for_each(|(a, g)| *a += g * (0.5 * dt));
                    prop.linear_step_repr(trap, false);
                    trap.iter_mut().zip(gn).for_each(|(a, g)| *a += g * (0.5 * dt));
                    let (wp, wn) = if odd { (1.0 / 3.0, 4.0 / 3.0) } else { (0.0, 1.0 / 3.0) };
                    if wp != 0.0 {
                        simp.iter_mut().zip(gp).for_each(|(a, g)| *a += g * (wp * dt));
                    }
                    prop.linear_step_repr(simp, false);
                    simp.iter_mut().zip(gn).for_each(|(a, g)| *a += g * (wn * dt));
                    prop.linear_step_repr(free, false);
                }
                g_prev = g_new;
            }
        }
        if record {
            let we = WaveEnsemble { psis: psis.clone(), grid: grid.clone(), t };
            times.push(t);
            states.push(we.correlations());
            if let Some(stride) = cfg.snapshot_every {
                if step % stride == 0 || step == steps {
                    snapshots.push(we);
                }
            }
        }
    }

    let final_state = WaveEnsemble { psis, grid, t: t0 + cfg.t_final };
    Ok(WaveRun {
        initial: we0.clone(),
        final_state,
        correlations: Trajectory { times, states, kappa, max_symmetry_drift: 0.0 },
        snapshots,
        max_mass_drift: max_drift,
        integrand_norms,
        dt,
        steps,
        record_every: cfg.record_every,
        potential: *v,
        duhamel,
    })
}

/// Largest `|z_wave - z_ode|` over the recorded times, where `z_ode` solves
/// the reduced correlation system from the same initial correlations with the
/// same step and stride. Requires `kappa > 0`.
pub fn reduction_gap(run: &WaveRun, ens: &FrequencyEnsemble, kappa: f64) -> Result<f64> {
    let cfg = SolverConfig {
        dt: run.dt,
        t_final: run.dt * run.steps as f64,
        record_every: run.record_every,
        ..Default::default()
    };
    let ode = integrate(&run.initial.correlations(), ens, kappa, &cfg)?;
    if ode.times.len() != run.correlations.times.len() {
        return Err(Error::DimensionMismatch { expected: run.correlations.times.len(), got: ode.times.len() });
    }
    Ok(ode
        .states
        .iter()
        .zip(&run.correlations.states)
        .map(|(a, b)| a.max_offdiag_distance(b))
        .fold(0.0, f64::max))
}

/// One sample of the synchronization error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyncErrorSample {
    pub t: f64,
    /// `max_jk ||e^{i(a_j - a_k)} psi_j - psi_k||` from grid values.
    pub direct: f64,
    /// Squared error from grid values.
    pub direct_sq: f64,
    /// Squared error from `2 - 2 cos(b) r_jk - 2 sin(b) s_jk`, `b = a_j - a_k`.
    pub identity_sq: f64,
}

/// Squared synchronization error from correlations alone.
pub fn sync_error_identity(state: &CorrelationState, pls: &PhaseLockedState) -> f64 {
    let n = state.n();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let b = pls.alphas[j] - pls.alphas[k];
                let z = state.z[(j, k)];
                worst = worst.max(2.0 - 2.0 * b.cos() * z.re - 2.0 * b.sin() * z.im);
            }
        }
    }
    worst
}

/// Synchronization error of each snapshot, computed both ways.
pub fn sync_error(snapshots: &[WaveEnsemble], pls: &PhaseLockedState) -> Vec<SyncErrorSample> {
    snapshots
        .iter()
        .map(|we| {
            let n = we.n();
            let mut direct_sq: f64 = 0.0;
            for j in 0..n {
                for k in 0..n {
                    if j != k {
                        let ph = C64::from_polar(1.0, pls.alphas[j] - pls.alphas[k]);
                        let d: Vec<C64> = we.psis[j].iter().zip(&we.psis[k]).map(|(a, b)| ph * a - b).collect();
                        direct_sq = direct_sq.max(we.grid.norm(&d).powi(2));
                    }
                }
            }
            SyncErrorSample {
                t: we.t,
                direct: direct_sq.sqrt(),
                direct_sq,
                identity_sq: sync_error_identity(&we.correlations(), pls),
            }
        })
        .collect()
}

/// Scattering states and their consistency checks.
#[derive(Debug, Clone)]
pub struct AsymptoticReport {
    /// `psi_j(0) - i int_0^T e^{iHs} G_j(s) ds` by composite trapezoid.
    pub psi_tilde: Vec<Vec<C64>>,
    /// The same integral by composite Simpson.
    pub psi_tilde_simpson: Vec<Vec<C64>>,
    /// `||psi_j(T) - e^{-iHT} psi_tilde_j||` per oscillator.
    pub scattering_residual: Vec<f64>,
    pub scattering_residual_simpson: Vec<f64>,
    /// `max_j ||psi_tilde_trap - psi_tilde_simpson||`.
    pub quadrature_gap: f64,
    /// `max_j ||G_j(T)||`.
    pub tail_norm: f64,
}

/// Asymptotic free states `psi_tilde_j` with `psi_j(t) ~ e^{-iHt} psi_tilde_j`.
///
/// The integral is truncated at the final time of the run; the tail must
/// already be negligible (`||G_j(T)|| < TAIL_TOL`).
pub fn asymptotic_wavefunctions(run: &WaveRun) -> Result<AsymptoticReport> {
    let d = run
        .duhamel
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("run was evolved without Duhamel tracking".into()))?;
    let tail = run.integrand_norms.last().map_or(0.0, |(_, v)| v.iter().cloned().fold(0.0, f64::max));
    if tail >= TAIL_TOL {
        return Err(Error::TailNotConverged { tail });
    }
    let grid = &run.final_state.grid;
    let mut prop = Propagator::new(grid, &run.potential, run.dt);
    let minus_i = C64::new(0.0, -1.0);
    let n = run.final_state.n();
    let residual = |acc: &Vec<C64>, j: usize, prop: &mut Propagator| {
        let mut e: Vec<C64> = d.free[j].iter().zip(acc).map(|(f, a)| f + minus_i * a).collect();
        prop.from_repr(&mut e);
        let diff: Vec<C64> = run.final_state.psis[j].iter().zip(&e).map(|(a, b)| a - b).collect();
        grid.norm(&diff)
    };
    let scattering_residual: Vec<f64> = (0..n).map(|j| residual(&d.trap[j], j, &mut prop)).collect();
    let scattering_residual_simpson: Vec<f64> = (0..n).map(|j| residual(&d.simpson[j], j, &mut prop)).collect();
    let pull_back = |acc: &Vec<C64>, j: usize, prop: &mut Propagator| {
        let mut a = acc.clone();
        for _ in 0..run.steps {
            prop.linear_step_repr(&mut a, true);
        }
        prop.from_repr(&mut a);
        run.initial.psis[j].iter().zip(&a).map(|(p, x)| p + minus_i * x).collect::<Vec<C64>>()
    };
    let psi_tilde: Vec<Vec<C64>> = (0..n).map(|j| pull_back(&d.trap[j], j, &mut prop)).collect();
    let psi_tilde_simpson: Vec<Vec<C64>> = (0..n).map(|j| pull_back(&d.simpson[j], j, &mut prop)).collect();
    let quadrature_gap = psi_tilde
        .iter()
        .zip(&psi_tilde_simpson)
        .map(|(a, b)| grid.norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()))
        .fold(0.0, f64::max);
    Ok(AsymptoticReport {
        psi_tilde,
        psi_tilde_simpson,
        scattering_residual,
        scattering_residual_simpson,
        quadrature_gap,
        tail_norm: tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(20.0, 1024).unwrap()
    }

    #[test]
    fn free_gaussian_disperses_exactly() {
        let g = grid();
        let psi = g.free_gaussian_exact(1.0, 0.0);
        let we = WaveEnsemble::new(vec![psi.clone(), psi], g.clone()).unwrap();
        let e = FrequencyEnsemble::homogeneous(2).unwrap();
        let cfg = WaveConfig { dt: 1e-3, t_final: 1.0, record_every: 100, snapshot_every: None, track_duhamel: false };
        let run = evolve(&we, &PotentialSpec::Free, &e, 1.0, &cfg).unwrap();
        let exact = g.free_gaussian_exact(1.0, 1.0);
        for p in &run.final_state.psis {
            let d: Vec<C64> = p.iter().zip(&exact).map(|(a, b)| a - b).collect();
            assert!(g.norm(&d) < 1e-6, "{}", g.norm(&d));
        }
    }

    #[test]
    fn harmonic_ground_state_is_stationary() {
        let g = grid();
        let w = 0.2;
        let v = PotentialSpec::Harmonic { omega_trap: w };
        let psi = g.harmonic_ground_state(w);
        let we = WaveEnsemble::new(vec![psi.clone(), psi.clone(), psi.clone()], g.clone()).unwrap();
        let e = FrequencyEnsemble::homogeneous(3).unwrap();
        let cfg = WaveConfig::for_problem(0.0, &e, &v, &g, 2.0);
        let run = evolve(&we, &v, &e, 0.0, &cfg).unwrap();
        let phase = C64::from_polar(1.0, -0.5 * w * 2.0);
        let d: Vec<C64> = run.final_state.psis[0].iter().zip(&psi).map(|(a, b)| a - phase * b).collect();
        assert!(g.norm(&d) < 1e-6, "{}", g.norm(&d));
        for s in &run.correlations.states {
            assert!(s.max_offdiag_distance(&CorrelationState::synchronized(3)) < 1e-8);
        }
    }

    #[test]
    fn correlations_follow_the_reduced_system() {
        let g = grid();
        let e = FrequencyEnsemble::new(&[1.0, -1.0]).unwrap();
        let we = WaveEnsemble::new(vec![g.gaussian(-1.0, 1.0, 0.3), g.gaussian(1.5, 1.3, -0.2)], g.clone()).unwrap();
        let v = PotentialSpec::Free;
        let mut cfg = WaveConfig::for_problem(4.0, &e, &v, &g, 2.0);
        cfg.track_duhamel = false;
        let run = evolve(&we, &v, &e, 4.0, &cfg).unwrap();
        let ode_cfg = SolverConfig { dt: run.dt, t_final: 2.0, record_every: cfg.record_every, ..Default::default() };
        let ode = integrate(&we.correlations(), &e, 4.0, &ode_cfg).unwrap();
        assert_eq!(ode.times.len(), run.correlations.times.len());
        for (a, b) in ode.states.iter().zip(&run.correlations.states) {
            assert!(a.max_offdiag_distance(b) < 1e-7);
        }
        assert!(run.max_mass_drift < 1e-10);
    }

    #[test]
    fn no_coupling_scattering_state_is_initial_data() {
        let g = Grid::new(20.0, 256).unwrap();
        let e = FrequencyEnsemble::homogeneous(2).unwrap();
        let we = WaveEnsemble::new(vec![g.gaussian(-1.0, 1.0, 0.0), g.gaussian(1.0, 1.0, 0.5)], g.clone()).unwrap();
        let cfg = WaveConfig { dt: 1e-2, t_final: 1.0, record_every: 10, snapshot_every: None, track_duhamel: true };
        let run = evolve(&we, &PotentialSpec::Free, &e, 0.0, &cfg).unwrap();
        let rep = asymptotic_wavefunctions(&run).unwrap();
        for (a, b) in rep.psi_tilde.iter().zip(&we.psis) {
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-14));
        }
    }

    #[test]
    fn sync_error_agrees_with_identity() {
        let g = Grid::new(20.0, 256).unwrap();
        let pls = PhaseLockedState::from_alphas(vec![0.2, -0.2]);
        let base = g.gaussian(0.0, 1.0, 0.0);
        let psis: Vec<Vec<C64>> = pls
            .alphas
            .iter()
            .map(|a| base.iter().map(|c| c * C64::from_polar(1.0, -a)).collect())
            .collect();
        let we = WaveEnsemble::new(psis, g.clone()).unwrap();
        let s = sync_error(&[we], &pls);
        assert!(s[0].direct < 1e-12 && s[0].identity_sq.abs() < 1e-12);
        let we2 = WaveEnsemble::new(vec![g.gaussian(-1.0, 1.0, 0.0), g.gaussian(1.0, 1.2, 0.3)], g).unwrap();
        let s2 = sync_error(&[we2], &pls);
        assert!((s2[0].direct_sq - s2[0].identity_sq).abs() < 1e-10);
    }

    #[test]
    fn dt_limit_enforced() {
        let g = grid();
        let e = FrequencyEnsemble::new(&[1.0, -1.0]).unwrap();
        let we = WaveEnsemble::new(vec![g.gaussian(0.0, 1.0, 0.0); 2], g).unwrap();
        let cfg = WaveConfig { dt: 1e-2, t_final: 1.0, record_every: 1, snapshot_every: None, track_duhamel: false };
        assert!(evolve(&we, &PotentialSpec::Free, &e, 4.0, &cfg).is_err());
    }
}

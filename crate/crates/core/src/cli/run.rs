//! Command execution: each command resolves its inputs, runs the numerics,
//! and emits a JSON report plus any CSV tables.

use std::path::PathBuf;

use rand::Rng;
use serde::Serialize;

use super::config::{Command, ConfigError, ExperimentConfig, Model};
use super::sweep::{run_sweep, write_sweep_csv};
use crate::critical::{find_kappa_star, kappa_star_bounds, kappa_star_closed_form, lstar_gap, CriticalReport};
use crate::dynamics::{classify_regime, integrate, order_parameter, Regime};
use crate::error::Error;
use crate::fixed_point::{
    correlations_from_phase_locked, fmap_residual, kuramoto_correspondence, solve_phase_locked,
    solve_phase_locked_branch, Correspondence,
};
use crate::kuramoto::{integrate_kuramoto, kuramoto_rhs, KuramotoState};
use crate::lyapunov::{
    basin_certificate, decay_rate_fit, lyapunov_threshold, lyapunov_value, BasinCertificate, DecayFit,
    LyapunovReport,
};
use crate::model::{CorrelationState, FrequencyEnsemble, PhaseLockedState, SolverConfig, C64};
use crate::report::{to_json, Meta, OutputTarget};
use crate::sampling::{admissible_start, perturbed_lock_state, random_correlation_state, rng_from_seed};
use crate::selfconsistency::Branch;
use crate::stability::{
    assumption_check, build_jacobian, homogeneous_reference_spectrum, homogeneous_state, multiset_matches,
    perturbed_eigenvalues, spectrum, ReferenceSpectrum, SpectrumReport,
};
use crate::wave::{
    asymptotic_wavefunctions, evolve, reduction_gap, sync_error, Grid, WaveConfig, WaveEnsemble,
};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Config = 2,
    Numerical = 3,
    NoLock = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Result of a command that ran to completion (including `NoLock`).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: ExitStatus,
    /// The JSON report, also printed to stdout by the binary.
    pub json: String,
    pub files: Vec<PathBuf>,
    /// Human-readable note for stderr.
    pub diagnostic: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn status(&self) -> ExitStatus {
        match self {
            RunError::Config(_) | RunError::Io(_) => ExitStatus::Config,
            // Rejected inputs are configuration problems, whatever layer noticed them.
            RunError::Numerical(Error::InvalidInput(_) | Error::DimensionMismatch { .. }) => ExitStatus::Config,
            RunError::Numerical(_) => ExitStatus::Numerical,
        }
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

/// Seed for the random start at one coupling, shared by single runs and
/// sweep rows so both produce identical numbers.
pub fn row_seed(seed: u64, kappa: f64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ kappa.to_bits()
}

/// Horizon (in units of `1/kappa`) for decay runs at non-stable locks.
pub const DECAY_HORIZON: f64 = 40.0;
/// Target decay of `L` over a default run, as a multiple of `2 kappa min Re mu`.
const DECAY_SPAN: f64 = 12.0;
/// Cap on the default horizon, in units of `1/kappa`.
const MAX_HORIZON: f64 = 400.0;
/// Samples recorded per default decay run.
const DECAY_SAMPLES: usize = 1000;
/// Sampling interval for trajectories written by `simulate`.
const SIMULATE_SAMPLE: f64 = 0.01;
const SIMULATE_T_FINAL: f64 = 100.0;
const CONVERGED_TOL: f64 = 1e-6;

/// Default decay-run settings at a lock whose spectrum has smallest real
/// part `min_re`: long enough to fit a clean exponential, short enough that
/// `L` stays above the numerical-zero floor.
pub fn decay_solver_defaults(kappa: f64, min_re: f64) -> SolverConfig {
    let span = if min_re > 0.0 { (DECAY_SPAN / min_re).min(MAX_HORIZON) } else { DECAY_HORIZON };
    let base = SolverConfig::for_kappa(kappa, span / kappa);
    let steps = crate::ode::fixed_step_count(base.t_final, base.dt);
    base.with_record_every(steps.div_ceil(DECAY_SAMPLES).max(1))
}

/// Locked state at one coupling with its spectrum and a certified decay run.
#[derive(Debug, Clone)]
pub struct LockAnalysis {
    pub pls: PhaseLockedState,
    pub spectrum: SpectrumReport,
    pub certificate: BasinCertificate,
    pub fit: Option<DecayFit>,
    /// `max_t L(t) / (L(0) exp(-C_M1 t / 2))` for admissible starts.
    pub bound_ratio: Option<f64>,
    /// `A = kappa / max|Omega|`.
    pub ratio: f64,
}

/// Solve, classify and run the decay experiment. `None` when no lock exists.
/// Solver fields set in `cfg` override the spectrum-based defaults.
pub fn analyze_lock(
    cfg: &ExperimentConfig,
    ens: &FrequencyEnsemble,
    kappa: f64,
) -> RunResult<Option<LockAnalysis>> {
    let Some(pls) = solve_phase_locked(ens, kappa)? else {
        return Ok(None);
    };
    let target = correlations_from_phase_locked(&pls);
    let spec = spectrum(&build_jacobian(&target, ens, kappa)?)?;
    let solver = cfg.solver(decay_solver_defaults(kappa, spec.min_re))?;
    let ratio = kappa / ens.max_abs();
    let mut rng = rng_from_seed(row_seed(cfg.seed(), kappa));
    let (start, certificate) = if ratio > lyapunov_threshold() {
        admissible_start(&pls, ens, kappa, 0.1, &mut rng)?
    } else {
        let s = perturbed_lock_state(&pls, 0.05, pls.n() + 2, &mut rng);
        let c = basin_certificate(&s, &target, ens, kappa)?;
        (s, c)
    };
    let traj = integrate(&start, ens, kappa, &solver)?;
    let fit = decay_rate_fit(&traj, &target).ok();
    let bound_ratio = if certificate.admissible {
        let l0 = lyapunov_value(&traj.states[0], &target)?;
        let mut worst: f64 = 0.0;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let bound = l0 * (-0.5 * certificate.c_m1 * (t - traj.times[0])).exp();
            let l = lyapunov_value(s, &target)?;
            if bound > 0.0 {
                worst = worst.max(l / bound);
            }
        }
        Some(worst)
    } else {
        None
    };
    Ok(Some(LockAnalysis { pls, spectrum: spec, certificate, fit, bound_ratio, ratio }))
}

struct Emitter {
    meta: Meta,
    out: Option<OutputTarget>,
    files: Vec<PathBuf>,
}

impl Emitter {
    fn csv(&mut self, suffix: &str, schema: &str, body: Vec<u8>) -> RunResult<()> {
        if let Some(out) = &self.out {
            let mut bytes = self.meta.csv_preamble(schema).into_bytes();
            bytes.extend(body);
            self.files.push(out.write(suffix, &bytes)?);
        }
        Ok(())
    }

    fn finish<B: Serialize>(
        mut self,
        schema: &str,
        status: ExitStatus,
        body: &B,
        diagnostic: Option<String>,
    ) -> RunResult<Outcome> {
        let json = to_json(schema, &self.meta, body);
        if let Some(out) = &self.out {
            self.files.push(out.write("report.json", format!("{json}\n").as_bytes())?);
        }
        Ok(Outcome { status, json, files: self.files, diagnostic })
    }
}

/// Run a validated configuration. `output_dir` overrides the directory of
/// the configured output prefix.
pub fn run(cfg: &ExperimentConfig, output_dir: Option<&str>) -> RunResult<Outcome> {
    cfg.validate()?;
    // Where results land does not change them, so the hash ignores it.
    let hashed = ExperimentConfig { output: None, ..cfg.clone() };
    let em = Emitter {
        meta: Meta::for_config(&hashed),
        out: OutputTarget::resolve(cfg.output.as_deref(), output_dir),
        files: Vec::new(),
    };
    match cfg.command()? {
        Command::Simulate => simulate(cfg, em),
        Command::FixedPoint => fixed_point(cfg, em),
        Command::Stability => stability(cfg, em),
        Command::Lyapunov => lyapunov(cfg, em),
        Command::KappaStar => kappa_star(cfg, em),
        Command::Sweep => sweep(cfg, em),
        Command::Oracle => oracle(cfg, em),
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RegimeOut {
    Converged { residual: f64 },
    Periodic { period: f64, min_residual: f64, amplitude: f64 },
    Unsettled { min_residual: f64 },
}

#[derive(Serialize)]
struct SimulateBody {
    model: Model,
    n: usize,
    omegas: Vec<f64>,
    kappa: f64,
    seed: u64,
    t_final: f64,
    dt: f64,
    regime: RegimeOut,
    /// `lambda` for the correlation model, `R` for Kuramoto.
    final_order_parameter: f64,
    lock_exists: bool,
}

fn simulate(cfg: &ExperimentConfig, mut em: Emitter) -> RunResult<Outcome> {
    let ens = cfg.ensemble()?;
    let kappa = cfg.kappa()?;
    let seed = cfg.seed();
    let base = SolverConfig::for_kappa(kappa, SIMULATE_T_FINAL);
    let stride = ((SIMULATE_SAMPLE / base.dt).round() as usize).max(1);
    let solver = cfg.solver(base.with_record_every(stride))?;
    let mut rng = rng_from_seed(seed);
    let model = cfg.simulate.model.unwrap_or(Model::Correlation);
    let lock_exists = solve_phase_locked(&ens, kappa)?.is_some();

    let (regime, final_op) = match model {
        Model::Correlation => {
            let z0 = random_correlation_state(ens.n(), ens.n() + 1, &mut rng)?;
            let traj = integrate(&z0, &ens, kappa, &solver)?;
            let mut buf = Vec::new();
            traj.write_csv(&mut buf)?;
            em.csv("trajectory.csv", "trajectory", buf)?;
            let regime = match classify_regime(&traj, &ens, CONVERGED_TOL) {
                Regime::Converged { residual } => RegimeOut::Converged { residual },
                Regime::Periodic { period, min_residual, amplitude } => {
                    RegimeOut::Periodic { period, min_residual, amplitude }
                }
                Regime::Unsettled { min_residual } => RegimeOut::Unsettled { min_residual },
            };
            (regime, order_parameter(traj.last()).1)
        }
        Model::Kuramoto => {
            let thetas: Vec<f64> = (0..ens.n())
                .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect();
            let traj = integrate_kuramoto(&KuramotoState { thetas, t: 0.0 }, &ens, kappa, &solver)?;
            let mut buf = Vec::new();
            crate::kuramoto::write_csv(&traj, &mut buf)?;
            em.csv("kuramoto.csv", "kuramoto", buf)?;
            let last = traj.last().expect("trajectory is never empty");
            let speed = kuramoto_rhs(last, &ens, kappa)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let regime = if speed < CONVERGED_TOL {
                RegimeOut::Converged { residual: speed }
            } else {
                RegimeOut::Unsettled { min_residual: speed }
            };
            (regime, crate::kuramoto::order_parameter(&last.thetas).0)
        }
    };
    let (status, diag) = match &regime {
        RegimeOut::Converged { .. } => (ExitStatus::Success, None),
        RegimeOut::Periodic { period, .. } => (
            ExitStatus::NoLock,
            Some(format!("no phase lock: periodic regime with period {period:.6}")),
        ),
        RegimeOut::Unsettled { min_residual } => (
            ExitStatus::NoLock,
            Some(format!("no phase lock reached: residual {min_residual:.3e} at the end of the run")),
        ),
    };
    let body = SimulateBody {
        model,
        n: ens.n(),
        omegas: ens.omegas().to_vec(),
        kappa,
        seed,
        t_final: solver.t_final,
        dt: solver.dt,
        regime,
        final_order_parameter: final_op,
        lock_exists,
    };
    em.finish("simulate", status, &body, diag)
}

#[derive(Serialize)]
struct LockOut {
    lambda: f64,
    alphas: Vec<f64>,
    residual: f64,
    opening_angle: f64,
    kuramoto: Correspondence,
    unstable_branch_lambda: Option<f64>,
}

#[derive(Serialize)]
struct FixedPointBody {
    n: usize,
    omegas: Vec<f64>,
    kappa: f64,
    locked: bool,
    #[serde(flatten)]
    lock: Option<LockOut>,
    reason: Option<String>,
}

fn fixed_point(cfg: &ExperimentConfig, em: Emitter) -> RunResult<Outcome> {
    let ens = cfg.ensemble()?;
    let kappa = cfg.kappa()?;
    let mut body = FixedPointBody {
        n: ens.n(),
        omegas: ens.omegas().to_vec(),
        kappa,
        locked: false,
        lock: None,
        reason: None,
    };
    let Some(pls) = solve_phase_locked(&ens, kappa)? else {
        body.reason = Some("the self-consistency equation has no root at this coupling".into());
        return em.finish("fixed-point", ExitStatus::NoLock, &body, body.reason.clone());
    };
    let unstable = solve_phase_locked_branch(&ens, kappa, Branch::Unstable)?.map(|p| p.lambda);
    body.locked = true;
    body.lock = Some(LockOut {
        lambda: pls.lambda,
        residual: fmap_residual(&correlations_from_phase_locked(&pls), &ens, kappa)?,
        opening_angle: pls.opening_angle(),
        kuramoto: kuramoto_correspondence(&pls, &ens, kappa)?,
        alphas: pls.alphas,
        unstable_branch_lambda: unstable,
    });
    em.finish("fixed-point", ExitStatus::Success, &body, None)
}

#[derive(Serialize)]
struct ReferenceOut {
    claim: String,
    expected: Option<Vec<f64>>,
    matches: bool,
}

#[derive(Serialize)]
struct StabilityBody {
    state: String,
    n: usize,
    omegas: Vec<f64>,
    kappa: f64,
    fmap_residual: f64,
    sign_convention: &'static str,
    #[serde(flatten)]
    spectrum: SpectrumReport,
    reference: Option<ReferenceOut>,
    perturbed_min_re: Option<f64>,
    distinct_differences: Option<bool>,
}

const SIGN_CONVENTION: &str = "F = -RHS/kappa: stable iff every eigenvalue has positive real part";

fn stability(cfg: &ExperimentConfig, em: Emitter) -> RunResult<Outcome> {
    if let Some((kind, n)) = cfg.homogeneous_kind()? {
        let ens = FrequencyEnsemble::homogeneous(n)?;
        let kappa = cfg.coupling.kappa.unwrap_or(1.0);
        let state = homogeneous_state(kind, n)?;
        let spec = spectrum(&build_jacobian(&state, &ens, kappa)?)?;
        let reference = homogeneous_reference_spectrum(kind, n).ok().map(|r| match r {
            ReferenceSpectrum::Exact(v) => {
                let expected: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
                ReferenceOut {
                    claim: "exact multiset".into(),
                    matches: multiset_matches(&spec.eigenvalues, &expected, 1e-10),
                    expected: Some(v),
                }
            }
            ReferenceSpectrum::AllNegativeReal => ReferenceOut {
                claim: "all Re < 0".into(),
                expected: None,
                matches: spec.eigenvalues.iter().all(|e| e.re < -1e-10),
            },
        });
        let body = StabilityBody {
            state: cfg.ensemble.preset.map_or("homogeneous".into(), |p| {
                serde_json::to_value(p).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
            }),
            n,
            omegas: ens.omegas().to_vec(),
            kappa,
            fmap_residual: fmap_residual(&state, &ens, kappa)?,
            sign_convention: SIGN_CONVENTION,
            spectrum: spec,
            reference,
            perturbed_min_re: None,
            distinct_differences: None,
        };
        return em.finish("stability", ExitStatus::Success, &body, None);
    }
    let ens = cfg.ensemble()?;
    let kappa = cfg.kappa()?;
    let Some(pls) = solve_phase_locked(&ens, kappa)? else {
        let msg = format!("no phase-locked state at kappa = {kappa}");
        let body = serde_json::json!({ "state": "phase-locked", "locked": false, "kappa": kappa, "reason": msg });
        return em.finish("stability", ExitStatus::NoLock, &body, Some(msg));
    };
    let state = correlations_from_phase_locked(&pls);
    let spec = spectrum(&build_jacobian(&state, &ens, kappa)?)?;
    let body = StabilityBody {
        state: "phase-locked".into(),
        n: ens.n(),
        omegas: ens.omegas().to_vec(),
        kappa,
        fmap_residual: fmap_residual(&state, &ens, kappa)?,
        sign_convention: SIGN_CONVENTION,
        spectrum: spec,
        reference: None,
        perturbed_min_re: perturbed_eigenvalues(&pls).iter().map(|e| e.re_estimate).reduce(f64::min),
        distinct_differences: Some(assumption_check(&ens)),
    };
    em.finish("stability", ExitStatus::Success, &body, None)
}

#[derive(Serialize)]
struct LyapunovBody {
    n: usize,
    omegas: Vec<f64>,
    kappa: f64,
    seed: u64,
    lambda: f64,
    #[serde(flatten)]
    report: LyapunovReport,
    r_lb: Option<f64>,
    fit_r_squared: Option<f64>,
    zero_crossing: Option<f64>,
    /// Worst ratio of `L(t)` to its certified bound; at most one when honored.
    bound_ratio: Option<f64>,
}

fn lyapunov(cfg: &ExperimentConfig, em: Emitter) -> RunResult<Outcome> {
    let ens = cfg.ensemble()?;
    let kappa = cfg.kappa()?;
    let Some(a) = analyze_lock(cfg, &ens, kappa)? else {
        let msg = format!("no phase-locked state at kappa = {kappa}");
        let body = serde_json::json!({ "locked": false, "kappa": kappa, "reason": msg });
        return em.finish("lyapunov", ExitStatus::NoLock, &body, Some(msg));
    };
    let body = LyapunovBody {
        n: ens.n(),
        omegas: ens.omegas().to_vec(),
        kappa,
        seed: row_seed(cfg.seed(), kappa),
        lambda: a.pls.lambda,
        report: LyapunovReport::new(&a.certificate, a.ratio, a.fit.as_ref()),
        r_lb: a.certificate.constants.map(|c| c.r_lb),
        fit_r_squared: a.fit.as_ref().map(|f| f.r_squared),
        zero_crossing: a.fit.as_ref().and_then(|f| f.zero_crossing),
        bound_ratio: a.bound_ratio,
    };
    em.finish("lyapunov", ExitStatus::Success, &body, None)
}

#[derive(Serialize)]
struct Bounds {
    lower: f64,
    symmetric_triple: f64,
    upper: f64,
}

#[derive(Serialize)]
struct KappaStarBody {
    n: usize,
    omegas: Vec<f64>,
    #[serde(flatten)]
    report: CriticalReport,
    gap_at_threshold: f64,
    closed_form: Option<CriticalReport>,
    spread: f64,
    bounds: Bounds,
}

fn kappa_star(cfg: &ExperimentConfig, mut em: Emitter) -> RunResult<Outcome> {
    let ens = cfg.ensemble()?;
    if cfg.coupling.kappa.is_some() {
        return Err(ConfigError("kappa-star takes no kappa".into()).into());
    }
    let rep = find_kappa_star(&ens)?;
    let (lower, symmetric_triple, upper) = kappa_star_bounds(ens.n(), ens.total_spread())?;
    if em.out.is_some() {
        let kappas: Vec<f64> = (0..=20).map(|i| rep.kappa_star * (1.0 + 0.05 * i as f64)).collect();
        let rows = crate::critical::critical_sweep(&ens, &kappas)?;
        let mut buf = Vec::new();
        crate::critical::write_sweep_csv(&rows, ens.n(), &mut buf)?;
        em.csv("critical.csv", "critical", buf)?;
    }
    let body = KappaStarBody {
        n: ens.n(),
        omegas: ens.omegas().to_vec(),
        gap_at_threshold: lstar_gap(&PhaseLockedState::from_alphas(rep.alphas_star.clone())),
        report: rep,
        closed_form: kappa_star_closed_form(&ens),
        spread: ens.total_spread(),
        bounds: Bounds { lower, symmetric_triple, upper },
    };
    em.finish("kappa-star", ExitStatus::Success, &body, None)
}

fn sweep(cfg: &ExperimentConfig, mut em: Emitter) -> RunResult<Outcome> {
    let ens = cfg.ensemble()?;
    let kappas = cfg.kappa_range()?;
    // Resolve once so solver problems surface as config errors, not row errors.
    cfg.solver(decay_solver_defaults(kappas[0], 1.0))?;
    let rows = run_sweep(cfg, &ens, &kappas);
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    em.csv("sweep.csv", "sweep", buf)?;
    let body = serde_json::json!({
        "n": ens.n(),
        "omegas": ens.omegas(),
        "seed": cfg.seed(),
        "rows": rows,
    });
    em.finish("sweep", ExitStatus::Success, &body, None)
}

#[derive(Serialize)]
struct ScatteringOut {
    residual: Vec<f64>,
    residual_simpson: Vec<f64>,
    quadrature_gap: f64,
}

#[derive(Serialize)]
struct OracleBody {
    n: usize,
    omegas: Vec<f64>,
    kappa: f64,
    seed: u64,
    potential: crate::wave::PotentialSpec,
    half_width: f64,
    points: usize,
    t_final: f64,
    dt: f64,
    steps: usize,
    max_mass_drift: f64,
    reduction_gap: f64,
    max_modulus: f64,
    sync_error: Option<f64>,
    sync_identity_gap: Option<f64>,
    tail_norm: f64,
    scattering: Option<ScatteringOut>,
}

/// Default wave horizon.
const ORACLE_T_FINAL: f64 = 10.0;

fn oracle(cfg: &ExperimentConfig, mut em: Emitter) -> RunResult<Outcome> {
    let ens = cfg.ensemble()?;
    let kappa = cfg.kappa()?;
    let v = cfg.potential()?;
    let grid = Grid::new(cfg.oracle.half_width.unwrap_or(20.0), cfg.oracle.points.unwrap_or(1024))?;
    let seed = cfg.seed();
    let mut rng = rng_from_seed(seed);
    let psis = (0..ens.n())
        .map(|_| {
            let c = rng.random_range(-2.0..2.0);
            let w = rng.random_range(0.8..1.5);
            let p = rng.random_range(-0.5..0.5);
            grid.gaussian(c, w, p)
        })
        .collect();
    let we0 = WaveEnsemble::new(psis, grid.clone())?;
    let t_final = cfg.solver.t_final.unwrap_or(ORACLE_T_FINAL);
    let mut wcfg = WaveConfig::for_problem(kappa, &ens, &v, &grid, t_final);
    if let Some(dt) = cfg.solver.dt {
        wcfg.dt = dt;
    }
    if let Some(r) = cfg.solver.record_every {
        wcfg.record_every = r;
    }
    let run = evolve(&we0, &v, &ens, kappa, &wcfg)?;
    let gap = reduction_gap(&run, &ens, kappa)?;
    let max_modulus = run.correlations.states.iter().map(CorrelationState::max_modulus).fold(0.0, f64::max);
    let pls = solve_phase_locked(&ens, kappa)?;
    let sync = pls.as_ref().map(|p| sync_error(std::slice::from_ref(&run.final_state), p)[0]);
    let tail_norm = run.integrand_norms.last().map_or(0.0, |(_, v)| v.iter().cloned().fold(0.0, f64::max));
    let scattering = match asymptotic_wavefunctions(&run) {
        Ok(r) => Some(ScatteringOut {
            residual: r.scattering_residual,
            residual_simpson: r.scattering_residual_simpson,
            quadrature_gap: r.quadrature_gap,
        }),
        Err(Error::TailNotConverged { .. }) => None,
        Err(e) => return Err(e.into()),
    };

    let mut buf = Vec::new();
    run.correlations.write_csv(&mut buf)?;
    em.csv("correlations.csv", "trajectory", buf)?;
    let mut buf = Vec::new();
    run.final_state.write_density_csv(&mut buf)?;
    em.csv("density.csv", "density", buf)?;

    let body = OracleBody {
        n: ens.n(),
        omegas: ens.omegas().to_vec(),
        kappa,
        seed,
        potential: v,
        half_width: grid.half_width,
        points: grid.points,
        t_final,
        dt: run.dt,
        steps: run.steps,
        max_mass_drift: run.max_mass_drift,
        reduction_gap: gap,
        max_modulus,
        sync_error: sync.map(|s| s.direct),
        sync_identity_gap: sync.map(|s| (s.direct_sq - s.identity_sq).abs()),
        tail_norm,
        scattering,
    };
    em.finish("oracle", ExitStatus::Success, &body, None)
}

//! Experiment configuration: a TOML file merged with command-line overrides.

use serde::{Deserialize, Serialize};

use crate::model::{FrequencyEnsemble, Method, SolverConfig};
use crate::stability::HomogeneousKind;
use crate::wave::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    FixedPoint,
    Stability,
    Lyapunov,
    KappaStar,
    Sweep,
    Oracle,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::FixedPoint => "fixed-point",
            Command::Stability => "stability",
            Command::Lyapunov => "lyapunov",
            Command::KappaStar => "kappa-star",
            Command::Sweep => "sweep",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    FullSync,
    Bipolar,
    Incoherent,
    Trivial,
    /// Solved locked state of the configured ensemble and coupling.
    PhaseLocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Correlation,
    Kuramoto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Potential {
    Free,
    Harmonic,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub omegas: Option<Vec<f64>>,
    pub preset: Option<Preset>,
    pub n: Option<usize>,
    pub bipolar_size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingSection {
    pub kappa: Option<f64>,
    pub kappa_min: Option<f64>,
    pub kappa_max: Option<f64>,
    pub points: Option<usize>,
}

/// Solver overrides; unset fields take per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub method: Option<Method>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub record_every: Option<usize>,
    pub tol_ball: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub model: Option<Model>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub potential: Option<Potential>,
    pub omega_trap: Option<f64>,
    pub half_width: Option<f64>,
    pub points: Option<usize>,
}

/// The full experiment description. Every field is optional in the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub output: Option<String>,
    pub ensemble: EnsembleSection,
    pub coupling: CouplingSection,
    pub solver: SolverSection,
    pub simulate: SimulateSection,
    pub oracle: OracleSection,
}

/// A configuration problem; maps to exit status 2.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_BIPOLAR_SIZE: usize = 1;
/// Soft enough that the step limit set by the potential stays near 1e-4 on the default box.
pub const DEFAULT_OMEGA_TRAP: f64 = 0.2;

macro_rules! overlay {
    ($dst:expr, $src:expr, $($field:ident),+) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )+
    };
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &ExperimentConfig) {
        overlay!(self, other, command, seed, output);
        overlay!(self.ensemble, other.ensemble, omegas, preset, n, bipolar_size);
        overlay!(self.coupling, other.coupling, kappa, kappa_min, kappa_max, points);
        overlay!(self.solver, other.solver, dt, t_final, method, abs_tol, rel_tol, record_every, tol_ball);
        overlay!(self.simulate, other.simulate, model);
        overlay!(self.oracle, other.oracle, potential, omega_trap, half_width, points);
    }

    pub fn command(&self) -> Result<Command, ConfigError> {
        self.command.ok_or_else(|| ConfigError("no command given".into()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Cross-field checks that do not depend on the command's numerics.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let cmd = self.command()?;
        let c = &self.coupling;
        let ranged = c.kappa_min.is_some() || c.kappa_max.is_some() || c.points.is_some();
        if ranged && cmd != Command::Sweep {
            return bad("a kappa range is only valid for the sweep command");
        }
        if cmd == Command::Sweep && c.kappa.is_some() {
            return bad("sweep takes kappa-min/kappa-max/points, not a single kappa");
        }
        if self.ensemble.omegas.is_some() && self.ensemble.preset.is_some_and(|p| p != Preset::PhaseLocked) {
            return bad("give either omegas or a homogeneous preset, not both");
        }
        if self.ensemble.preset.is_some() && cmd != Command::Stability {
            return bad("presets apply to the stability command only");
        }
        if let Some(k) = c.kappa {
            if !(k > 0.0 && k.is_finite()) {
                return bad(format!("kappa must be positive and finite, got {k}"));
            }
        }
        if self.simulate.model.is_some() && cmd != Command::Simulate {
            return bad("model selection applies to simulate only");
        }
        Ok(())
    }

    /// Mean-centered ensemble from the configured frequencies.
    pub fn ensemble(&self) -> Result<FrequencyEnsemble, ConfigError> {
        let Some(om) = &self.ensemble.omegas else {
            return bad("omegas are required");
        };
        FrequencyEnsemble::new(om).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn kappa(&self) -> Result<f64, ConfigError> {
        self.coupling.kappa.ok_or_else(|| ConfigError("kappa is required".into()))
    }

    /// The homogeneous family selected by the preset, if any.
    pub fn homogeneous_kind(&self) -> Result<Option<(HomogeneousKind, usize)>, ConfigError> {
        let Some(p) = self.ensemble.preset else {
            return Ok(None);
        };
        if p == Preset::PhaseLocked {
            return Ok(None);
        }
        let Some(n) = self.ensemble.n else {
            return bad("homogeneous presets need n");
        };
        if n < 2 {
            return bad("n must be at least 2");
        }
        let kind = match p {
            Preset::FullSync => HomogeneousKind::FullSync,
            Preset::Bipolar => {
                let s = self.ensemble.bipolar_size.unwrap_or(DEFAULT_BIPOLAR_SIZE);
                if s == 0 || s >= n {
                    return bad(format!("bipolar-size must be in 1..{n}"));
                }
                HomogeneousKind::Bipolar(s)
            }
            Preset::Incoherent => HomogeneousKind::Incoherent,
            Preset::Trivial => HomogeneousKind::Trivial,
            Preset::PhaseLocked => unreachable!(),
        };
        Ok(Some((kind, n)))
    }

    /// Evenly spaced sweep couplings, endpoints included.
    pub fn kappa_range(&self) -> Result<Vec<f64>, ConfigError> {
        let c = &self.coupling;
        let (Some(lo), Some(hi)) = (c.kappa_min, c.kappa_max) else {
            return bad("sweep needs kappa-min and kappa-max");
        };
        let points = c.points.unwrap_or(26);
        if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
            return bad("kappa range must be positive and finite");
        }
        if !(hi > lo) {
            return bad(format!("empty kappa range [{lo}, {hi}]"));
        }
        if points < 2 {
            return bad("a sweep needs at least two points");
        }
        let step = (hi - lo) / (points - 1) as f64;
        Ok((0..points)
            .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
            .collect())
    }

    /// Resolve solver settings with the given defaults for unset fields.
    pub fn solver(&self, defaults: SolverConfig) -> Result<SolverConfig, ConfigError> {
        let s = &self.solver;
        let cfg = SolverConfig {
            dt: s.dt.unwrap_or(defaults.dt),
            t_final: s.t_final.unwrap_or(defaults.t_final),
            method: s.method.unwrap_or(defaults.method),
            abs_tol: s.abs_tol.unwrap_or(defaults.abs_tol),
            rel_tol: s.rel_tol.unwrap_or(defaults.rel_tol),
            record_every: s.record_every.unwrap_or(defaults.record_every),
            tol_ball: s.tol_ball.unwrap_or(defaults.tol_ball),
        };
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn potential(&self) -> Result<PotentialSpec, ConfigError> {
        let spec = match self.oracle.potential.unwrap_or(Potential::Free) {
            Potential::Free => {
                if self.oracle.omega_trap.is_some() {
                    return bad("omega-trap requires the harmonic potential");
                }
                PotentialSpec::Free
            }
            Potential::Harmonic => PotentialSpec::Harmonic {
                omega_trap: self.oracle.omega_trap.unwrap_or(DEFAULT_OMEGA_TRAP),
            },
        };
        spec.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
command = "sweep"
seed = 11
output = "runs/demo"

[ensemble]
omegas = [1.0, 0.0, -1.0]

[coupling]
kappa_min = 1.5
kappa_max = 3.0
points = 4

[solver]
t_final = 20.0
method = "rk45-adaptive"
"#;

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        c.validate().unwrap();
        assert_eq!(c.command, Some(Command::Sweep));
        assert_eq!(c.kappa_range().unwrap(), vec![1.5, 2.0, 2.5, 3.0]);
        let s = c.solver(SolverConfig::default()).unwrap();
        assert_eq!(s.method, Method::Rk45Adaptive);
        assert_eq!(s.t_final, 20.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("kapa = 1.0").is_err());
        assert!(ExperimentConfig::from_toml("[coupling]\nk = 1.0").is_err());
    }

    #[test]
    fn overlay_prefers_overrides() {
        let mut c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let mut o = ExperimentConfig::default();
        o.seed = Some(3);
        o.coupling.points = Some(2);
        c.overlay(&o);
        assert_eq!(c.seed(), 3);
        assert_eq!(c.coupling.points, Some(2));
        assert_eq!(c.coupling.kappa_min, Some(1.5));
    }

    #[test]
    fn range_rules() {
        let mut c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        c.coupling.kappa_max = Some(1.5);
        assert!(c.kappa_range().is_err());
        c.coupling.kappa_max = Some(3.0);
        c.command = Some(Command::Lyapunov);
        assert!(c.validate().is_err());
    }
}

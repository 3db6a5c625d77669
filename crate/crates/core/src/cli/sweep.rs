//! Coupling sweeps: rows run in parallel and are merged in input order.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::analyze_lock;
use crate::model::FrequencyEnsemble;
use crate::stability::Classification;

/// One coupling of the phase diagram. Unlocked rows leave the lock fields empty;
/// a failed row records its error instead of aborting the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub locked: bool,
    pub lambda: Option<f64>,
    pub min_re_eig: Option<f64>,
    pub classification: Option<Classification>,
    pub lyapunov_admissible: Option<bool>,
    pub fitted_rate: Option<f64>,
    pub error: Option<String>,
}

/// Evaluate a single row; identical to the corresponding single run.
pub fn sweep_row(cfg: &ExperimentConfig, ens: &FrequencyEnsemble, kappa: f64) -> SweepRow {
    let mut row = SweepRow {
        kappa,
        locked: false,
        lambda: None,
        min_re_eig: None,
        classification: None,
        lyapunov_admissible: None,
        fitted_rate: None,
        error: None,
    };
    match analyze_lock(cfg, ens, kappa) {
        Ok(None) => {}
        Ok(Some(a)) => {
            row.locked = true;
            row.lambda = Some(a.pls.lambda);
            row.min_re_eig = Some(a.spectrum.min_re);
            row.classification = Some(a.spectrum.classification);
            row.lyapunov_admissible = Some(a.certificate.admissible);
            row.fitted_rate = a.fit.map(|f| f.rate);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

pub fn run_sweep(cfg: &ExperimentConfig, ens: &FrequencyEnsemble, kappas: &[f64]) -> Vec<SweepRow> {
    // `collect` on an indexed parallel iterator preserves input order.
    kappas.par_iter().map(|&k| sweep_row(cfg, ens, k)).collect()
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map_or(String::new(), f)
}

fn num(v: f64) -> String {
    format!("{v:.15e}")
}

/// Write the phase-diagram table; empty fields mean "not applicable".
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "kappa,locked,lambda,min_re_eig,classification,lyapunov_admissible,fitted_rate,error"
    )?;
    for r in rows {
        let fields = [
            num(r.kappa),
            r.locked.to_string(),
            opt(r.lambda, num),
            opt(r.min_re_eig, num),
            opt(r.classification, |c| c.as_str().to_string()),
            opt(r.lyapunov_admissible, |b| b.to_string()),
            opt(r.fitted_rate, num),
            // Quote errors so commas in messages cannot break columns.
            opt(r.error.as_deref(), |e| format!("\"{}\"", e.replace('"', "'"))),
        ];
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

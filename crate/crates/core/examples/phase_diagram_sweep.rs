//! Phase-diagram sweep across coupling, as the `sweep` subcommand runs it.
//!
//! Run with: cargo run --release --example phase_diagram_sweep

use lohe_sync::cli::{run_sweep, ExperimentConfig};
use lohe_sync::FrequencyEnsemble;

fn main() -> lohe_sync::Result<()> {
    let cfg = ExperimentConfig::from_toml(
        r#"
        command = "sweep"
        seed = 5
        [ensemble]
        omegas = [1.0, 0.0, -1.0]
        [coupling]
        kappa_min = 1.5
        kappa_max = 3.0
        points = 16
        "#,
    )
    .expect("valid config");
    let ens = FrequencyEnsemble::new(cfg.ensemble.omegas.as_deref().unwrap())?;
    let kappas = cfg.kappa_range().expect("valid range");
    let rows = run_sweep(&cfg, &ens, &kappas);
    lohe_sync::cli::sweep::write_sweep_csv(&rows, std::io::stdout().lock()).expect("stdout");
    Ok(())
}

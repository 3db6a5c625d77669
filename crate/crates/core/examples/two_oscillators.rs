//! Two oscillators: a lock exists only once kappa reaches the frequency gap.
//! Below it the correlation keeps rotating.
//!
//! Run with: cargo run --release --example two_oscillators

use lohe_sync::dynamics::{classify_regime, integrate};
use lohe_sync::fixed_point::solve_phase_locked;
use lohe_sync::sampling::{random_correlation_state, rng_from_seed};
use lohe_sync::{FrequencyEnsemble, SolverConfig};

fn main() -> lohe_sync::Result<()> {
    let ens = FrequencyEnsemble::new(&[1.0, -1.0])?;
    let z0 = random_correlation_state(2, 3, &mut rng_from_seed(1))?;
    for kappa in [1.0, 1.5, 1.9, 2.0, 2.5, 4.0] {
        let lock = solve_phase_locked(&ens, kappa)?;
        let traj = integrate(&z0, &ens, kappa, &SolverConfig::for_kappa(kappa, 120.0).with_record_every(10))?;
        let regime = classify_regime(&traj, &ens, 1e-6);
        match lock {
            Some(p) => println!("kappa {kappa:4.2}: lambda = {:.6}, alpha = {:+.6}  -> {regime:?}", p.lambda, p.alphas[0]),
            None => println!("kappa {kappa:4.2}: no lock                           -> {regime:?}"),
        }
    }
    Ok(())
}

//! Certify a basin for the Lyapunov functional and compare the guaranteed
//! decay rate with the measured one.
//!
//! Run with: cargo run --release --example lyapunov_certificate

use lohe_sync::dynamics::integrate;
use lohe_sync::fixed_point::{correlations_from_phase_locked, solve_phase_locked};
use lohe_sync::lyapunov::{constants_for, decay_rate_fit, lyapunov_threshold, lyapunov_value, STABILITY_THRESHOLD};
use lohe_sync::sampling::{admissible_start, rng_from_seed};
use lohe_sync::{FrequencyEnsemble, SolverConfig};

fn main() -> lohe_sync::Result<()> {
    println!("thresholds: Lyapunov A > {:.6}, stability A >= {:.6}", lyapunov_threshold(), STABILITY_THRESHOLD);
    for a in [lyapunov_threshold(), 4.0, 5.0, 10.0, f64::INFINITY] {
        let c = constants_for(a)?;
        println!("A = {a:9.4}: B = {:.6}, C_B = {:.6}, r_lb = {:.6}, I_B = {:?}", c.b, c.c_b, c.r_lb, c.i_b);
    }

    let ens = FrequencyEnsemble::new(&[1.0, 0.3, -1.3])?;
    let kappa = 5.0 * ens.max_abs();
    let pls = solve_phase_locked(&ens, kappa)?.expect("locked");
    let target = correlations_from_phase_locked(&pls);
    let (z0, cert) = admissible_start(&pls, &ens, kappa, 0.1, &mut rng_from_seed(3))?;
    println!("\nM1 = {:.3e}, M2 = {:.3e}, guaranteed rate C_M1/2 = {:.4}", cert.m1, cert.m2, 0.5 * cert.c_m1);

    let traj = integrate(&z0, &ens, kappa, &SolverConfig::for_kappa(kappa, 2.0).with_record_every(100))?;
    let l0 = lyapunov_value(&z0, &target)?;
    let worst = traj
        .states
        .iter()
        .map(|s| lyapunov_value(s, &target).unwrap() / (l0 * (-0.5 * cert.c_m1 * s.t).exp()))
        .fold(0.0, f64::max);
    let fit = decay_rate_fit(&traj, &target)?;
    println!("measured rate {:.4} (r^2 = {:.6}); worst L(t)/bound = {worst:.3e}", fit.rate, fit.r_squared);
    Ok(())
}

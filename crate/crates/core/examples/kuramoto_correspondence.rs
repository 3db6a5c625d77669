//! The locked correlation state and the locked Kuramoto state share one
//! self-consistency equation: lambda equals R and the angles coincide.
//!
//! Run with: cargo run --release --example kuramoto_correspondence

use lohe_sync::fixed_point::{kuramoto_correspondence, solve_phase_locked};
use lohe_sync::kuramoto::{integrate_kuramoto, kuramoto_fixed_point, order_parameter, KuramotoState};
use lohe_sync::sampling::{random_ensemble, rng_from_seed};
use lohe_sync::SolverConfig;

fn main() -> lohe_sync::Result<()> {
    let mut rng = rng_from_seed(42);
    let ens = random_ensemble(6, 1.0, &mut rng)?;
    let kappa = 2.5 * ens.max_abs();

    let pls = solve_phase_locked(&ens, kappa)?.expect("locked");
    let kfp = kuramoto_fixed_point(&ens, kappa)?.expect("locked");
    let map = kuramoto_correspondence(&pls, &ens, kappa)?;
    println!("omegas        {:?}", ens.omegas());
    println!("lambda        {:.15}", pls.lambda);
    println!("R_inf         {:.15}", kfp.r_inf);
    println!("sign {:+}, locking residual {:.2e}", map.sign, map.residual);

    // Simulated Kuramoto angles relax onto the same order parameter.
    let theta0 = KuramotoState { thetas: vec![0.0; ens.n()], t: 0.0 };
    let traj = integrate_kuramoto(&theta0, &ens, kappa, &SolverConfig::for_kappa(kappa, 60.0))?;
    println!("R(t = 60)     {:.15}", order_parameter(&traj.last().unwrap().thetas).0);
    Ok(())
}

//! Critical coupling by bisection, checked against the closed forms and the
//! universal bounds `2M/N <= kappa* <= M`.
//!
//! Run with: cargo run --release --example critical_coupling

use lohe_sync::critical::{
    critical_sweep, find_kappa_star, kappa_star_bounds, kappa_star_closed_form, two_cluster_kappa_star,
};
use lohe_sync::FrequencyEnsemble;

fn main() -> lohe_sync::Result<()> {
    for omegas in [vec![1.0, -1.0], vec![1.0, 0.0, -1.0], vec![3.0, -1.0, -1.0, -1.0], vec![0.7, 0.1, -0.2, -0.6]] {
        let ens = FrequencyEnsemble::new(&omegas)?;
        let rep = find_kappa_star(&ens)?;
        let (lo, _, hi) = kappa_star_bounds(ens.n(), ens.total_spread())?;
        print!("{omegas:?}: kappa* = {:.10}, lambda* = {:.10}, opening = {:.6}", rep.kappa_star, rep.lambda_star, rep.opening_angle);
        if let Some(cf) = kappa_star_closed_form(&ens) {
            print!(", closed form {:.10} ({:?})", cf.kappa_star, cf.method);
        }
        println!("  in [{lo:.4}, {hi:.4}]");
    }

    let (k, l, _, _) = two_cluster_kappa_star(4, 1, 6.0)?;
    println!("\ntwo-cluster formula N=4, j=1, M=6: kappa* = {k:.10}, lambda* = {l:.10}");

    let ens = FrequencyEnsemble::new(&[1.0, 0.0, -1.0])?;
    let ks = find_kappa_star(&ens)?.kappa_star;
    println!("\n  kappa/kappa*   lambda     g        stable");
    let kappas: Vec<f64> = (0..6).map(|i| ks * (1.0 + 0.1 * i as f64)).collect();
    for row in critical_sweep(&ens, &kappas)? {
        println!("  {:.2}          {:.6}   {:+.5}  {:?}", row.kappa / ks, row.lambda.unwrap(), row.g.unwrap(), row.stable.unwrap());
    }
    Ok(())
}

//! Spectra of the F-map Jacobian: homogeneous equilibria against their
//! reference multisets, and a locked state against the first-order estimate.
//!
//! Run with: cargo run --release --example linear_stability

use lohe_sync::fixed_point::{correlations_from_phase_locked, solve_phase_locked};
use lohe_sync::stability::{
    assumption_check, build_jacobian, homogeneous_reference_spectrum, homogeneous_state, multiset_matches,
    perturbed_eigenvalues, spectrum, HomogeneousKind, ReferenceSpectrum,
};
use lohe_sync::{FrequencyEnsemble, C64};

fn main() -> lohe_sync::Result<()> {
    let n = 4;
    let ens = FrequencyEnsemble::homogeneous(n)?;
    for kind in [HomogeneousKind::FullSync, HomogeneousKind::Bipolar(1), HomogeneousKind::Incoherent, HomogeneousKind::Trivial] {
        let rep = spectrum(&build_jacobian(&homogeneous_state(kind, n)?, &ens, 1.0)?)?;
        let mut re: Vec<f64> = rep.eigenvalues.iter().map(|e| (e.re * 1e8).round() / 1e8).collect();
        re.dedup();
        let agrees = match homogeneous_reference_spectrum(kind, n)? {
            ReferenceSpectrum::Exact(v) => {
                let v: Vec<C64> = v.into_iter().map(|x| C64::new(x, 0.0)).collect();
                multiset_matches(&rep.eigenvalues, &v, 1e-10)
            }
            ReferenceSpectrum::AllNegativeReal => rep.eigenvalues.iter().all(|e| e.re < -1e-10),
        };
        println!("{kind:?}: {:?}, distinct Re {re:?}, reference holds: {agrees}", rep.classification);
    }

    let ens = FrequencyEnsemble::new(&[1.0, 0.2, -1.2])?;
    let kappa = 2.0 * std::f64::consts::SQRT_2 * ens.max_abs();
    let pls = solve_phase_locked(&ens, kappa)?.expect("locked");
    let rep = spectrum(&build_jacobian(&correlations_from_phase_locked(&pls), &ens, kappa)?)?;
    println!("\nlocked N=3 at the stability threshold (distinct differences: {})", assumption_check(&ens));
    for e in &rep.eigenvalues {
        println!("  mu = {:+.6} {:+.6}i", e.re, e.im);
    }
    for est in perturbed_eigenvalues(&pls) {
        println!("  first-order Re estimate for {:?}: {:+.6}", est.pair, est.re_estimate);
    }
    println!("classification {:?}, floor 1/2 - 1/N = {:.6}", rep.classification, 0.5 - 1.0 / 3.0);
    Ok(())
}

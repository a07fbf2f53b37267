//! Eigenvalues, rigidity, arcsine distance, Wegner counts and
//! delocalization for one noisy operator.

use heavyband::domain::{domain_mesh, SpectralDomain};
use heavyband::models::laplacian_1d;
use heavyband::noise::{build_noise_seeded, NoiseFamily, NoiseSpec};
use heavyband::spectrum::{
    delocalization_report_with, eigenvalues_bisection, empirical_vs_arcsine, reduce_to_tridiagonal, rigidity_report,
    wegner_check_with,
};

fn main() -> heavyband::error::Result<()> {
    let n = 1500;
    let kappa = 0.5;
    let spec = NoiseSpec::new(NoiseFamily::Truncated, 1.0, 1).with_omega(0.4).with_seed(3);
    let h = laplacian_1d(n).add(&build_noise_seeded(n, &spec)?)?;

    let t = reduce_to_tridiagonal(&h);
    let eigs = eigenvalues_bisection(&t, None);
    println!("spectrum in [{:.4}, {:.4}]", eigs[0], eigs[n - 1]);
    println!("arcsine distance {:.4e}", empirical_vs_arcsine(&eigs, n, kappa));
    let rig = rigidity_report(&eigs, n, kappa)?;
    println!("rigidity: max |lambda_i - gamma_i| = {:.4e}", rig.max_deviation);

    let domain = SpectralDomain::new(0.4, kappa).with_removal(1, 3);
    let worst = domain_mesh(&domain, n, 7, 4)?
        .into_iter()
        .map(|z| wegner_check_with(&t, &h, z))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|w| w.count as f64 / w.bound)
        .fold(0.0, f64::max);
    println!("Wegner: largest count / bound = {worst:.3}");

    let deloc = delocalization_report_with(&h, &eigs, kappa, &domain.removal_set(), domain.eta_floor(n), 7)?;
    println!(
        "delocalization: {} bulk eigenvectors, max ||v||_inf = {:.4} (N^-1/2 = {:.4}), green bound violations {}",
        deloc.eigenvectors,
        deloc.max_sup_norm,
        (n as f64).powf(-0.5),
        deloc.green_bound_violations
    );
    Ok(())
}

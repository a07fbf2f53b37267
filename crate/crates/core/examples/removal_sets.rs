//! Spectral domains, removal sets and the meshes built over them.

use heavyband::domain::{domain_mesh, mesh_energies, removal_set, EtaFloor, SpectralDomain};
use heavyband::models::ClosedFormContext;

fn main() -> heavyband::error::Result<()> {
    for k in 2..=4 {
        println!("K={k}: removed centres {:?}", removal_set(k, 3).points());
    }

    let domain = SpectralDomain::new(0.4, 0.5)
        .with_scaling(0.2, 1.0, EtaFloor::Entrywise)
        .with_removal(2, 3);
    let n = 2000;
    println!("eta floor at N={n}: {:.4e}", domain.eta_floor(n));
    println!("energies: {:?}", mesh_energies(&domain, 9)?);

    // |Im G_{i,i+2}| / Im G_ii over the mesh, for a bulk index.
    let mut worst = (0.0, 0.0);
    for z in domain_mesh(&domain, n, 9, 6)? {
        let ctx = ClosedFormContext::new(n, z)?;
        let r = ctx.entry(n / 2, n / 2 + 2).im.abs() / ctx.entry(n / 2, n / 2).im;
        if r > worst.0 {
            worst = (r, z.energy());
        }
    }
    println!("largest K=2 ratio {:.4} at E = {}", worst.0, worst.1);
    Ok(())
}

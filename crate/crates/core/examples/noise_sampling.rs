//! Heavy-tailed samplers and banded noise matrices.

use heavyband::noise::{
    build_noise, pareto_tail, sample_pareto_symmetric, sample_symmetric_stable, stable_tail_probability, NoiseFamily,
    NoiseSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> heavyband::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 200_000;
    for alpha in [0.5, 1.0, 1.5] {
        let pareto = (0..draws).filter(|_| sample_pareto_symmetric(alpha, &mut rng).abs() >= 3.0).count();
        let stable = (0..draws).filter(|_| sample_symmetric_stable(alpha, &mut rng).abs() >= 3.0).count();
        println!(
            "alpha {alpha}: P(|pareto| >= 3) {:.4} (exact {:.4}), P(|stable| >= 3) {:.4} (exact {:.4})",
            pareto as f64 / draws as f64,
            pareto_tail(alpha, 3.0),
            stable as f64 / draws as f64,
            stable_tail_probability(alpha, 3.0)
        );
    }

    let n = 2000;
    for spec in [
        NoiseSpec::new(NoiseFamily::Pareto, 1.0, 2),
        NoiseSpec::new(NoiseFamily::Truncated, 1.0, 2).with_omega(0.4),
        NoiseSpec::new(NoiseFamily::StableCms, 1.5, 1).with_sigma(0.3),
    ] {
        let a = build_noise(n, &spec, &mut rng)?;
        println!(
            "{:?} alpha={} K={}: max |A_ij| = {:.3}, ||A||_inf = {:.3}",
            spec.family,
            spec.alpha,
            spec.bandwidth,
            a.max_abs(),
            a.norm_inf()
        );
    }
    Ok(())
}

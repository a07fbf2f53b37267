//! Deterministic invariant suite behind `heavyband selftest`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::band::BandedSymmetricMatrix;
use crate::dense::oracle::jacobi_eigenvalues;
use crate::domain::{domain_mesh, SpectralDomain, SpectralParameter};
use crate::error::Result;
use crate::models::{laplacian_1d, laplacian_trace, stieltjes_arcsine, ClosedFormContext};
use crate::resolvent::{factorize, minor_trace, resolvent_identity_residual, ward_residual};
use crate::spectrum::{eigenvalues_bisection, reduce_to_tridiagonal, wegner_check};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_band(n: usize, k: usize, rng: &mut ChaCha8Rng) -> BandedSymmetricMatrix {
    let mut h = BandedSymmetricMatrix::zeros(n, k);
    for i in 0..n {
        for j in i..(i + k + 1).min(n) {
            h.set(i, j, rng.random_range(-1.0..1.0));
        }
    }
    h
}

fn closed_form_vs_lu() -> Result<(bool, String)> {
    let n = 64;
    let h = laplacian_1d(n);
    let mut worst = 0.0f64;
    for z in domain_mesh(&SpectralDomain::new(0.5, 0.5), n, 7, 7)? {
        let ctx = ClosedFormContext::new(n, z)?;
        let f = factorize(&h, z)?;
        for j in 0..n {
            let col = f.column(j);
            for (i, g) in col.iter().enumerate() {
                let want = ctx.entry(i, j);
                worst = worst.max((g - want).norm() / want.norm().max(1e-300));
            }
        }
    }
    Ok((worst <= 1e-9, format!("max relative deviation {worst:.3e}")))
}

fn ward_and_resolvent() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut ward, mut ident) = (0.0f64, 0.0f64);
    for t in 0..10 {
        let n = 40 + t;
        let a = random_band(n, 2, &mut rng).scaled(0.3);
        let h = laplacian_1d(n).add(&a)?;
        let z = SpectralParameter::new(rng.random_range(-1.5..1.5), rng.random_range(0.01..1.0))?;
        ward = ward.max(ward_residual(&h, z, rng.random_range(0..n))?);
        ident = ident.max(resolvent_identity_residual(&laplacian_1d(n), &a, z, t as u64)?);
    }
    Ok((ward <= 1e-9 && ident <= 1e-9, format!("ward {ward:.3e}, resolvent identity {ident:.3e}")))
}

fn eigen_oracle() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for k in 0..=3 {
        let h = random_band(48, k, &mut rng);
        let got = eigenvalues_bisection(&reduce_to_tridiagonal(&h), None);
        let want = jacobi_eigenvalues(&h.to_dense());
        worst = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    let n = 200;
    let lap = eigenvalues_bisection(&reduce_to_tridiagonal(&laplacian_1d(n)), None);
    let exact = lap
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let k = (n - i) as f64;
            (x - 2.0 * (k * std::f64::consts::PI / (n + 1) as f64).cos()).abs()
        })
        .fold(0.0f64, f64::max);
    Ok((worst <= 1e-9 && exact <= 1e-10, format!("oracle {worst:.3e}, laplacian {exact:.3e}")))
}

fn wegner_and_minor() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut wegner_ok, mut worst) = (true, 0.0f64);
    for _ in 0..10 {
        let n = 60;
        let h = laplacian_1d(n).add(&random_band(n, 1, &mut rng).scaled(0.5))?;
        let z = SpectralParameter::new(rng.random_range(-1.5..1.5), rng.random_range(0.05..0.5))?;
        wegner_ok &= wegner_check(&h, z)?.holds;
        let removed = [rng.random_range(0..n), rng.random_range(0..n)];
        let mut removed = removed.to_vec();
        removed.sort_unstable();
        removed.dedup();
        let m: Complex64 = crate::resolvent::stieltjes_trace(&h, z)?;
        let mt = minor_trace(&h, &removed, z)?;
        worst = worst.max((m - mt).norm() / (removed.len() as f64 / (n as f64 * z.eta())));
    }
    Ok((wegner_ok && worst <= 1.0 + 1e-9, format!("wegner holds {wegner_ok}, minor-trace ratio {worst:.3}")))
}

fn arcsine_gap_decay() -> Result<(bool, String)> {
    let mut gaps = Vec::new();
    for n in [256usize, 1024, 4096] {
        let z = SpectralParameter::new(0.5, (n as f64).powf(-0.8))?;
        gaps.push((laplacian_trace(n, z)? - stieltjes_arcsine(z)).norm());
    }
    let ok = gaps.windows(2).all(|w| w[1] < w[0]) && gaps[2] < 0.05;
    Ok((ok, format!("gaps {gaps:?}")))
}

/// Runs every check; errors count as failures.
pub fn run_selftest() -> Vec<CheckResult> {
    let checks: [(&'static str, fn() -> Result<(bool, String)>); 5] = [
        ("closed_form_vs_lu", closed_form_vs_lu),
        ("ward_and_resolvent_identity", ward_and_resolvent),
        ("eigenvalue_oracle", eigen_oracle),
        ("wegner_and_minor_trace", wegner_and_minor),
        ("arcsine_gap_decay", arcsine_gap_decay),
    ];
    checks
        .iter()
        .map(|(name, f)| {
            let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
            CheckResult { name, passed, detail }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        for c in super::run_selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}

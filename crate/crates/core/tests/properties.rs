use heavyband::band::BandedSymmetricMatrix;
use heavyband::domain::{mesh_energies, removal_set, SpectralDomain, SpectralParameter};
use heavyband::harness::record::quantile;
use heavyband::harness::{ExperimentConfig, TrialRecord};
use heavyband::models::{green_closed_form, laplacian_1d, laplacian_determinant_closed_form, laplacian_determinants};
use heavyband::noise::{build_noise_seeded, NoiseFamily, NoiseSpec};
use heavyband::resolvent::{factorize, minor_trace, stieltjes_trace, stieltjes_trace_lu, ward_residual, BandGreen};
use heavyband::spectrum::{eigenvalues_bisection, reduce_to_tridiagonal, sturm_count, wegner_check};
use proptest::prelude::*;

fn band_matrix(n: usize, k: usize, values: &[f64]) -> BandedSymmetricMatrix {
    let mut h = BandedSymmetricMatrix::zeros(n, k);
    let mut it = values.iter().cycle();
    for i in 0..n {
        for j in i..(i + k + 1).min(n) {
            h.set(i, j, *it.next().unwrap());
        }
    }
    h
}

fn arb_matrix() -> impl Strategy<Value = BandedSymmetricMatrix> {
    (8usize..60, 0usize..4, prop::collection::vec(-2.0f64..2.0, 16..64)).prop_map(|(n, k, v)| band_matrix(n, k, &v))
}

fn arb_z() -> impl Strategy<Value = SpectralParameter> {
    (-2.5f64..2.5, 0.01f64..2.0).prop_map(|(e, eta)| SpectralParameter::new(e, eta).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_is_symmetric_and_matches_lu(n in 2usize..80, z in arb_z()) {
        let f = factorize(&laplacian_1d(n), z).unwrap();
        let j = n / 3;
        let col = f.column(j);
        for (i, g) in col.iter().enumerate() {
            let want = green_closed_form(n, z, i, j).unwrap();
            prop_assert!((g - want).norm() <= 1e-9 * want.norm().max(1e-12));
            prop_assert!((want - green_closed_form(n, z, j, i).unwrap()).norm() <= 1e-14 * want.norm().max(1e-300));
        }
    }

    #[test]
    fn ward_identity(h in arb_matrix(), z in arb_z(), k in 0usize..8) {
        prop_assert!(ward_residual(&h, z, k % h.n()).unwrap() <= 1e-9);
    }

    #[test]
    fn trace_routes_agree_and_im_positive(h in arb_matrix(), z in arb_z()) {
        let a = stieltjes_trace(&h, z).unwrap();
        let b = stieltjes_trace_lu(&h, z).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
        prop_assert!(a.im > 0.0);
        let g = BandGreen::new(&h, z).unwrap();
        prop_assert!(g.diagonal().iter().all(|d| d.im > 0.0));
    }

    #[test]
    fn wegner_always_holds(h in arb_matrix(), z in arb_z()) {
        prop_assert!(wegner_check(&h, z).unwrap().holds);
    }

    #[test]
    fn minor_trace_bound(h in arb_matrix(), z in arb_z(), picks in prop::collection::vec(0usize..1000, 1..5)) {
        let n = h.n();
        let mut removed: Vec<usize> = picks.iter().map(|p| p % n).collect();
        removed.sort_unstable();
        removed.dedup();
        let diff = (stieltjes_trace(&h, z).unwrap() - minor_trace(&h, &removed, z).unwrap()).norm();
        prop_assert!(diff <= removed.len() as f64 / (n as f64 * z.eta()) + 1e-12);
    }

    #[test]
    fn interlacing_under_site_removal(h in arb_matrix(), site in 0usize..1000) {
        let n = h.n();
        let k = site % n;
        let full = eigenvalues_bisection(&reduce_to_tridiagonal(&h), None);
        let minor = h.minor(&[k]).unwrap();
        let sub = eigenvalues_bisection(&reduce_to_tridiagonal(&minor), None);
        let tol = 1e-9;
        for (i, mu) in sub.iter().enumerate() {
            prop_assert!(full[i] <= mu + tol && *mu <= full[i + 1] + tol);
        }
    }

    #[test]
    fn sturm_count_is_monotone(h in arb_matrix(), mut xs in prop::collection::vec(-6.0f64..6.0, 2..10)) {
        let t = reduce_to_tridiagonal(&h);
        xs.sort_by(f64::total_cmp);
        let counts: Vec<usize> = xs.iter().map(|&x| sturm_count(&t, x)).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(*counts.last().unwrap() <= h.n());
    }

    #[test]
    fn determinant_recursion(d in -1.9f64..1.9) {
        let rec = laplacian_determinants(d, 64);
        for (k, m) in rec.iter().enumerate() {
            let want = laplacian_determinant_closed_form(d, k);
            prop_assert!((m - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn mesh_avoids_removal_set(k in 2usize..6, p in 1u32..4, n_e in 1usize..30) {
        let domain = SpectralDomain::new(0.4, 0.3).with_removal(k, p);
        if let Ok(es) = mesh_energies(&domain, n_e) {
            let removed = removal_set(k, p);
            prop_assert!(es.iter().all(|&e| !removed.contains(e)));
            prop_assert!(es.iter().all(|&e| e.abs() <= 1.7 + 1e-12));
        }
    }

    #[test]
    fn quantiles_are_ordered(mut v in prop::collection::vec(-1e3f64..1e3, 1..50), q in 0.0f64..1.0) {
        let x = quantile(&v, q);
        v.sort_by(f64::total_cmp);
        prop_assert!(x >= v[0] && x <= v[v.len() - 1]);
        prop_assert!(quantile(&v, 0.0) <= x && x <= quantile(&v, 1.0));
    }

    #[test]
    fn seeded_noise_is_reproducible(seed in any::<u64>(), k in 0usize..3) {
        let spec = NoiseSpec::new(NoiseFamily::Pareto, 1.3, k).with_seed(seed);
        prop_assert_eq!(build_noise_seeded(50, &spec).unwrap(), build_noise_seeded(50, &spec).unwrap());
    }

    #[test]
    fn record_validation_rejects_non_finite(x in prop::num::f64::ANY) {
        let mut rec = TrialRecord::new(0, 1, 100);
        rec.sup_trace_deviation = Some(x);
        prop_assert_eq!(rec.validate().is_ok(), x.is_finite() && x >= 0.0);
    }
}

#[test]
fn config_roundtrip() {
    let cfg = ExperimentConfig::new("local_law", NoiseSpec::new(NoiseFamily::Truncated, 1.0, 2));
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
}

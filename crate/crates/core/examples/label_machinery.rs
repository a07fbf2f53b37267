//! T/F labels: counts, classes, and the minor-trace bound for one draw.

use heavyband::domain::SpectralParameter;
use heavyband::models::laplacian_1d;
use heavyband::noise::{
    assemble_from_labels, classify_label, label_cutoff, label_thresholds, sample_labels, LabelClass, NoiseFamily,
    NoiseSpec,
};
use heavyband::resolvent::{minor_trace, stieltjes_trace};
use heavyband::rng::{derive_seed, stream, substream};

fn main() -> heavyband::error::Result<()> {
    let n = 4000;
    let eps = 0.4;
    let spec = NoiseSpec::new(NoiseFamily::Pareto, 1.0, 1);
    let (max_f, lsep) = label_thresholds(n, spec.bandwidth, eps, 0.0);
    println!("cutoff {:.1}, max F count {max_f:.2}, separation {lsep:.1}", label_cutoff(n, &spec, eps));

    let trials = 300;
    let mut counts = [0usize; 3];
    for t in 0..trials {
        let mut rng = substream(derive_seed(5, n as u64, t), stream::LABELS);
        let labels = sample_labels(n, &spec, eps, &mut rng)?;
        counts[classify_label(&labels, n, eps, 0.0) as usize] += 1;
    }
    println!(
        "separably admissible {:.3}, admissible only {:.3}, neither {:.3}",
        counts[LabelClass::SeparablyAdmissible as usize] as f64 / trials as f64,
        counts[LabelClass::Admissible as usize] as f64 / trials as f64,
        counts[LabelClass::Neither as usize] as f64 / trials as f64
    );

    // One draw with at least one F label: the trace with and without the F rows.
    for t in 0.. {
        let seed = derive_seed(6, n as u64, t);
        let labels = sample_labels(n, &spec, eps, &mut substream(seed, stream::LABELS))?;
        if labels.f_count() == 0 {
            continue;
        }
        let a = assemble_from_labels(&labels, &spec, &mut substream(seed, stream::NOISE))?;
        let h = laplacian_1d(n).add(&a)?;
        let z = SpectralParameter::new(0.5, (n as f64).powf(-0.6))?;
        let removed = labels.removed_indices();
        let diff = (stieltjes_trace(&h, z)? - minor_trace(&h, &removed, z)?).norm();
        let bound = removed.len() as f64 / (n as f64 * z.eta());
        println!("F pairs {:?}: |m - m^(T)| = {diff:.3e} <= {bound:.3e}", labels.f_pairs());
        break;
    }
    Ok(())
}

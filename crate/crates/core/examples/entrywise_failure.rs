//! A single diagonal entry of size one breaks the entrywise law. Compares
//! the failure frequency with the frequency of such entries.

use heavyband::harness::{run_entrywise_failure, ExperimentConfig};
use heavyband::noise::{NoiseFamily, NoiseSpec};

fn main() -> heavyband::error::Result<()> {
    let mut cfg = ExperimentConfig::new("entrywise_failure", NoiseSpec::new(NoiseFamily::Pareto, 1.0, 0));
    cfg.n_list = vec![1000];
    cfg.trials = 200;
    let report = run_entrywise_failure(&cfg)?;
    let agg = &report.per_n[0];
    for key in [
        "atypical_exact",
        "atypical_frequency",
        "failure_frequency",
        "threshold",
        "joint_atypical_failed",
        "joint_atypical_held",
        "joint_typical_failed",
        "joint_typical_held",
    ] {
        println!("{key:>22}: {}", agg.extra.get(key).copied().unwrap_or(f64::NAN));
    }
    Ok(())
}

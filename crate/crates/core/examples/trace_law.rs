//! Trace local law for Pareto noise: sup deviation of the Stieltjes
//! transform over the mesh, at three sizes.

use heavyband::harness::{run_trace_law, ExperimentConfig};
use heavyband::noise::{NoiseFamily, NoiseSpec};

fn main() -> heavyband::error::Result<()> {
    let mut cfg = ExperimentConfig::new("trace_law", NoiseSpec::new(NoiseFamily::Pareto, 1.0, 0));
    cfg.n_list = vec![500, 1000, 2000];
    cfg.trials = 40;
    cfg.threshold = Some(0.1);
    let report = run_trace_law(&cfg)?;
    for agg in &report.per_n {
        let s = agg.statistic("sup_trace_deviation").unwrap();
        println!(
            "N={:>5}  median {:.4e}  q95 {:.4e}  pass {:.2}  separably admissible {:.2}",
            agg.n,
            s.q50,
            s.q95,
            s.pass_fraction.unwrap_or(f64::NAN),
            agg.extra["separably_admissible_frequency"]
        );
    }
    for v in &report.verdicts {
        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.criterion, v.detail);
    }
    Ok(())
}

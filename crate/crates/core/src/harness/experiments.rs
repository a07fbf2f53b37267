//! Per-trial computations and per-size aggregation of every experiment.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{EntryPolicy, ExperimentConfig, ModelKind, PsiProfile};
use super::record::{median, quantile, SizeAggregate, StatisticSummary, TrialRecord, Verdict};
use crate::band::BandedSymmetricMatrix;
use crate::domain::{mesh_energies, EtaFloor, SpectralParameter};
use crate::error::{Error, Result};
use crate::models::{
    beta_limit_matrix, laplacian_1d, stieltjes_arcsine, stieltjes_semicircle, wigner_with, ClosedFormContext,
    WignerDiagonal,
};
use crate::noise::{
    assemble_from_labels, build_noise, classify_label, detect_dn, dn_parameters, sample_labels, tail_probability,
    LabelClass, NoiseFamily,
};
use crate::resolvent::{factorize, green_entries, minor_trace, BandGreen};
use crate::rng::{mix64, stream, substream};
use crate::spectrum::{
    delocalization_report_with, eigenvalues_bisection, empirical_vs_arcsine, reduce_to_tridiagonal, rigidity_report,
    wegner_check_with,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LocalLaw,
    TraceLaw,
    EntrywiseFailure,
    Boundedness,
    SpectralStatistics,
    Concentration,
}

/// Statistic compared against a calibrated threshold.
#[derive(Debug, Clone, Copy)]
struct Gate {
    statistic: &'static str,
    multiplier: f64,
    quantile: f64,
    /// Pass means `value < threshold` rather than `<=`.
    strict: bool,
    /// Only pilot trials with an atypical diagonal enter the calibration.
    atypical_only: bool,
}

impl ExperimentKind {
    pub const ALL: [Self; 6] = [
        Self::LocalLaw,
        Self::TraceLaw,
        Self::EntrywiseFailure,
        Self::Boundedness,
        Self::SpectralStatistics,
        Self::Concentration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::LocalLaw => "local_law",
            Self::TraceLaw => "trace_law",
            Self::EntrywiseFailure => "entrywise_failure",
            Self::Boundedness => "boundedness",
            Self::SpectralStatistics => "spectral_statistics",
            Self::Concentration => "concentration",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::LocalLaw => "entrywise deviation of G from the noiseless resolvent over the spectral mesh",
            Self::TraceLaw => "deviation of the Stieltjes transform from the arcsine or semicircle law, by label class",
            Self::EntrywiseFailure => "entrywise failure frequency at one bulk z against atypical diagonal entries",
            Self::Boundedness => "sup of |G_ij| over the mesh, with and without removal sets",
            Self::SpectralStatistics => "Wegner ratios, arcsine distance, rigidity and eigenvector delocalization",
            Self::Concentration => "tail frequency of weighted sums of truncated heavy-tailed variables",
        }
    }

    fn default_eta_mode(self) -> EtaFloor {
        match self {
            Self::LocalLaw | Self::EntrywiseFailure | Self::Boundedness => EtaFloor::Entrywise,
            _ => EtaFloor::Trace,
        }
    }

    fn gate(self) -> Option<Gate> {
        let g = |statistic, multiplier, strict| Gate {
            statistic,
            multiplier,
            quantile: 0.5,
            strict,
            atypical_only: false,
        };
        match self {
            Self::LocalLaw => Some(g("sup_entry_deviation", 3.0, false)),
            Self::TraceLaw => Some(g("sup_trace_deviation", 3.0, true)),
            Self::EntrywiseFailure => Some(Gate {
                atypical_only: true,
                ..g("sup_entry_deviation", 0.5, true)
            }),
            Self::Boundedness => Some(g("sup_green", 3.0, false)),
            Self::SpectralStatistics => Some(g("delocalization", 3.0, false)),
            Self::Concentration => None,
        }
    }

    /// Calibrate once, from the pilot at the first size, and apply the
    /// threshold to every size.
    pub fn pooled_calibration(self) -> bool {
        self == Self::Boundedness
    }

    /// Whether pilot trials are needed to calibrate a threshold.
    pub fn needs_pilot(self, cfg: &ExperimentConfig) -> bool {
        self.gate().is_some() && cfg.threshold.is_none()
    }

    /// Model and noise restrictions of the experiment.
    pub fn check(self, cfg: &ExperimentConfig) -> Result<()> {
        let fam = cfg.noise.family;
        let bad = |m: &str| Err(Error::Config(format!("{}: {m}", self.name())));
        match self {
            Self::LocalLaw if cfg.model == ModelKind::Wigner => bad("model must be laplacian or beta_limit"),
            Self::TraceLaw if cfg.model == ModelKind::BetaLimit => bad("model must be laplacian or wigner"),
            Self::EntrywiseFailure | Self::Boundedness | Self::SpectralStatistics
                if cfg.model != ModelKind::Laplacian =>
            {
                bad("model must be laplacian")
            }
            Self::Concentration if !matches!(fam, NoiseFamily::Truncated | NoiseFamily::Zero) => {
                bad("noise family must be truncated or zero")
            }
            Self::Concentration if cfg.concentration.replications_per_trial == 0 => {
                bad("replications_per_trial must be positive")
            }
            _ => Ok(()),
        }
    }

    /// Runs one trial at dimension `n` from the trial seed.
    pub fn trial(self, cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<TrialRecord> {
        let mut rec = TrialRecord::new(0, seed, n);
        match self {
            Self::LocalLaw => local_law_trial(cfg, n, seed, &mut rec)?,
            Self::TraceLaw => trace_law_trial(cfg, n, seed, &mut rec)?,
            Self::EntrywiseFailure => entrywise_failure_trial(cfg, n, seed, &mut rec)?,
            Self::Boundedness => boundedness_trial(cfg, n, seed, &mut rec)?,
            Self::SpectralStatistics => spectral_trial(cfg, n, seed, &mut rec)?,
            Self::Concentration => concentration_trial(cfg, n, seed, &mut rec)?,
        }
        Ok(rec)
    }

    /// Threshold of the gated statistic: the configured one, or
    /// `multiplier * quantile` over the pilot records.
    pub fn threshold(self, cfg: &ExperimentConfig, pilot: &[&TrialRecord]) -> Option<f64> {
        let gate = self.gate()?;
        if let Some(t) = cfg.threshold {
            return Some(t);
        }
        let values: Vec<f64> = pilot
            .iter()
            .filter(|r| !gate.atypical_only || r.atypical_diagonal == Some(true))
            .filter_map(|r| stat(r, gate.statistic))
            .collect();
        if values.is_empty() {
            return None;
        }
        let m = cfg.calibration.multiplier.unwrap_or(gate.multiplier);
        let q = cfg.calibration.quantile.unwrap_or(gate.quantile);
        Some(m * quantile(&values, q))
    }

    /// Aggregates of one size from its evaluation and pilot records.
    pub fn aggregate(self, cfg: &ExperimentConfig, n: usize, records: &[&TrialRecord], pilot: &[&TrialRecord]) -> SizeAggregate {
        let mut agg = SizeAggregate {
            n,
            trials: records.len(),
            ..SizeAggregate::default()
        };
        let threshold = self.threshold(cfg, pilot);
        let gate = self.gate();
        let mut push = |name: &str, threshold: Option<f64>, strict: bool| {
            let values: Vec<f64> = records.iter().filter_map(|r| stat(r, name)).collect();
            if !values.is_empty() {
                agg.statistics.push(StatisticSummary::from_values(name, &values, threshold, strict));
            }
        };
        let gated = |name: &str| match gate {
            Some(g) if g.statistic == name => (threshold, g.strict),
            _ => (None, false),
        };
        for name in self.statistics() {
            let (t, strict) = gated(name);
            push(name, t, strict);
        }
        if self == Self::SpectralStatistics {
            // The Wegner bound ratio is deterministic: at most 1.
            if let Some(s) = agg.statistics.iter_mut().find(|s| s.statistic == "wegner_bound_ratio") {
                let values: Vec<f64> = records.iter().filter_map(|r| r.wegner_bound_ratio).collect();
                *s = StatisticSummary::from_values("wegner_bound_ratio", &values, Some(1.0), false);
            }
        }
        if let Some(t) = threshold {
            agg.extra.insert("threshold".into(), t);
        }
        agg.extra.insert("pilot_trials".into(), pilot.len() as f64);
        match self {
            Self::TraceLaw => trace_law_extra(cfg, records, &mut agg.extra),
            Self::EntrywiseFailure => entrywise_extra(cfg, n, records, threshold, &mut agg.extra),
            Self::Concentration => concentration_extra(cfg, n, records, &mut agg.extra),
            _ => {}
        }
        agg
    }

    fn statistics(self) -> &'static [&'static str] {
        match self {
            Self::LocalLaw => &["sup_entry_deviation"],
            Self::TraceLaw => &["sup_trace_deviation", "minor_trace_ratio"],
            Self::EntrywiseFailure => &["sup_entry_deviation"],
            Self::Boundedness => &["sup_green", "sup_green_unremoved"],
            Self::SpectralStatistics => &[
                "arcsine_distance",
                "rigidity_deviation",
                "delocalization",
                "max_sup_norm",
                "wegner_worst_ratio",
                "wegner_bound_ratio",
            ],
            Self::Concentration => &["exceedance_fraction"],
        }
    }

    /// Acceptance verdicts over all sizes; none in exploratory mode.
    pub fn verdicts(self, cfg: &ExperimentConfig, per_n: &[SizeAggregate]) -> Vec<Verdict> {
        if cfg.exploratory || (self == Self::LocalLaw && cfg.model == ModelKind::BetaLimit) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let pass = |a: &SizeAggregate, name: &str| a.statistic(name).and_then(|s| s.pass_fraction);
        let med = |a: &SizeAggregate, name: &str| a.statistic(name).map(|s| s.q50);
        let mut verdict = |criterion: String, passed: bool, detail: String| {
            out.push(Verdict {
                criterion,
                passed,
                detail,
            })
        };
        let first = per_n.first();
        let last = per_n.last();
        match self {
            Self::LocalLaw | Self::TraceLaw => {
                let (name, need) = if self == Self::LocalLaw {
                    ("sup_entry_deviation", 0.99)
                } else {
                    ("sup_trace_deviation", 0.9)
                };
                for a in per_n {
                    if let Some(p) = pass(a, name) {
                        verdict(format!("pass_fraction_N{}", a.n), p >= need, format!("{p} >= {need}"));
                    }
                }
                if let (Some(f), Some(l)) = (first, last) {
                    if f.n != l.n {
                        if let (Some(mf), Some(ml)) = (med(f, name), med(l, name)) {
                            verdict(
                                "median_decreases".into(),
                                ml <= mf,
                                format!("median at N={} is {ml}, at N={} is {mf}", l.n, f.n),
                            );
                        }
                    }
                }
                if self == Self::TraceLaw {
                    let worst = per_n.iter().filter_map(|a| a.extra.get("max_minor_trace_ratio")).fold(0.0f64, |m, &x| m.max(x));
                    verdict("minor_trace_bound".into(), worst <= 1.0, format!("worst ratio {worst}"));
                }
            }
            Self::EntrywiseFailure => {
                for a in per_n {
                    if let (Some(&emp), Some(&exact)) = (a.extra.get("atypical_frequency"), a.extra.get("atypical_exact")) {
                        verdict(
                            format!("atypical_frequency_N{}", a.n),
                            (emp - exact).abs() <= 0.05,
                            format!("empirical {emp}, exact {exact}"),
                        );
                    }
                    if let Some(&f) = a.extra.get("failure_frequency") {
                        verdict(format!("failure_frequency_N{}", a.n), f >= 0.25, format!("{f} >= 0.25"));
                    }
                }
            }
            Self::Boundedness => {
                if let (Some(f), Some(l)) = (first, last) {
                    if let (Some(pf), Some(pl)) = (pass(f, "sup_green"), pass(l, "sup_green")) {
                        verdict(
                            "pass_frequency_trend".into(),
                            pl >= pf - 0.05,
                            format!("N={}: {pl}, N={}: {pf}", l.n, f.n),
                        );
                    }
                }
            }
            Self::SpectralStatistics => {
                for w in per_n.windows(2) {
                    for name in ["arcsine_distance", "rigidity_deviation"] {
                        if let (Some(a), Some(b)) = (med(&w[0], name), med(&w[1], name)) {
                            verdict(
                                format!("{name}_decreases_N{}_N{}", w[0].n, w[1].n),
                                b < a,
                                format!("median {a} -> {b}"),
                            );
                        }
                    }
                }
                for a in per_n {
                    if let Some(p) = pass(a, "delocalization") {
                        verdict(format!("delocalization_N{}", a.n), p >= 0.95, format!("{p} >= 0.95"));
                    }
                    if let Some(p) = pass(a, "wegner_bound_ratio") {
                        verdict(format!("wegner_bound_N{}", a.n), p == 1.0, format!("fraction within bound {p}"));
                    }
                }
            }
            Self::Concentration => {
                for a in per_n {
                    for (i, xi) in cfg.concentration.xi.iter().enumerate() {
                        let (Some(&p), Some(&b)) = (a.extra.get(&format!("tail_probability_{i}")), a.extra.get(&format!("tail_bound_{i}"))) else {
                            continue;
                        };
                        verdict(format!("tail_N{}_xi{xi}", a.n), p <= b, format!("{p} <= {b}"));
                    }
                }
            }
        }
        out
    }
}

/// Value of a scalar statistic of a record, looked up by field name.
pub fn stat(rec: &TrialRecord, name: &str) -> Option<f64> {
    match name {
        "sup_entry_deviation" => rec.sup_entry_deviation,
        "sup_trace_deviation" => rec.sup_trace_deviation,
        "minor_trace_ratio" => rec.minor_trace_ratio,
        "sup_green" => rec.sup_green,
        "sup_green_unremoved" => rec.sup_green_unremoved,
        "max_sup_norm" => rec.max_sup_norm,
        "delocalization" => rec.delocalization,
        "rigidity_deviation" => rec.rigidity_deviation,
        "arcsine_distance" => rec.arcsine_distance,
        "wegner_worst_ratio" => rec.wegner_worst_ratio,
        "wegner_bound_ratio" => rec.wegner_bound_ratio,
        "exceedance_fraction" => {
            let reps = rec.replications? as f64;
            rec.exceedances.as_ref().map(|e| e.iter().copied().max().unwrap_or(0) as f64 / reps)
        }
        _ => None,
    }
}

fn banded_model(model: ModelKind, n: usize) -> Result<BandedSymmetricMatrix> {
    match model {
        ModelKind::Laplacian => Ok(laplacian_1d(n)),
        ModelKind::BetaLimit => Ok(beta_limit_matrix(n)),
        ModelKind::Wigner => Err(Error::Config("the wigner model is dense".into())),
    }
}

fn draw_noise(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<BandedSymmetricMatrix> {
    build_noise(n, &cfg.noise_spec(), &mut substream(seed, stream::NOISE))
}

/// Spectral mesh of the experiment, with or without removal sets.
fn mesh(cfg: &ExperimentConfig, kind: ExperimentKind, n: usize, removal: bool) -> Result<Vec<SpectralParameter>> {
    let mut domain = cfg.domain(kind.default_eta_mode());
    domain.removal &= removal;
    let energies = mesh_energies(&domain, cfg.mesh.n_e)?;
    let exponent = cfg.eta_floor_exponent.unwrap_or_else(|| domain.floor_exponent());
    let floor = (n as f64).powf(exponent);
    if !(floor < 1.0) {
        return Err(Error::Config(format!("eta floor {floor} is not below 1 for N = {n}")));
    }
    let k = cfg.mesh.n_eta;
    let etas: Vec<f64> = (0..k)
        .map(|i| {
            if k == 1 {
                floor
            } else if i + 1 == k {
                1.0
            } else {
                floor * (-floor.ln() * i as f64 / (k - 1) as f64).exp()
            }
        })
        .collect();
    let mut out = Vec::with_capacity(energies.len() * etas.len());
    for &e in &energies {
        for &eta in &etas {
            out.push(SpectralParameter::new(e, eta)?);
        }
    }
    Ok(out)
}

/// Entries over which an entrywise sup is taken.
struct EntrySet {
    /// Pairs within the block size of [`BandGreen`].
    band: Vec<(usize, usize)>,
    /// Pairs read from LU column solves.
    far: Vec<(usize, usize)>,
}

fn band_pairs(n: usize, width: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..=(i + width).min(n - 1)).map(move |j| (i, j))).collect()
}

fn entry_set(n: usize, bandwidth: usize, policy: EntryPolicy, seed: u64) -> EntrySet {
    let width = bandwidth.max(1);
    match policy {
        EntryPolicy::Full => EntrySet {
            band: band_pairs(n, width),
            far: (0..n).flat_map(|j| (0..j.saturating_sub(width)).map(move |i| (i, j))).collect(),
        },
        EntryPolicy::Sampled(r) => {
            let mut rng = substream(seed, stream::ENTRY_SAMPLE);
            EntrySet {
                band: band_pairs(n, width),
                far: (0..r).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect(),
            }
        }
    }
}

/// `G_ij(z)` of `h` over the entry set, band pairs first.
fn entries(h: &BandedSymmetricMatrix, z: SpectralParameter, set: &EntrySet) -> Result<Vec<Complex64>> {
    let bg = BandGreen::new(h, z)?;
    let mut out: Vec<Complex64> = set
        .band
        .iter()
        .map(|&(i, j)| bg.entry(i, j).expect("pair within block size"))
        .collect();
    if !set.far.is_empty() {
        let fact = factorize(h, z)?;
        let values = green_entries(&fact, &set.far)?;
        out.extend(set.far.iter().map(|p| values[p]));
    }
    Ok(out)
}

/// Noiseless reference entries over the entry set.
fn reference_entries(
    model: ModelKind,
    h_inf: &BandedSymmetricMatrix,
    z: SpectralParameter,
    set: &EntrySet,
) -> Result<Vec<Complex64>> {
    match model {
        ModelKind::Laplacian => {
            let ctx = ClosedFormContext::new(h_inf.n(), z)?;
            Ok(set.band.iter().chain(&set.far).map(|&(i, j)| ctx.entry(i, j)).collect())
        }
        _ => entries(h_inf, z, set),
    }
}

fn max_deviation(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn local_law_trial(cfg: &ExperimentConfig, n: usize, seed: u64, rec: &mut TrialRecord) -> Result<()> {
    let h_inf = banded_model(cfg.model, n)?;
    let a = draw_noise(cfg, n, seed)?;
    let h = h_inf.add(&a)?;
    let set = entry_set(n, cfg.noise.bandwidth, cfg.entry_policy, seed);
    let mut devs = Vec::new();
    for z in mesh(cfg, ExperimentKind::LocalLaw, n, true)? {
        // G equals G^inf exactly when there is no noise.
        let dev = if a.is_zero() {
            0.0
        } else {
            max_deviation(&entries(&h, z, &set)?, &reference_entries(cfg.model, &h_inf, z, &set)?)
        };
        devs.push(dev);
    }
    rec.sup_entry_deviation = Some(devs.iter().copied().fold(0.0, f64::max));
    rec.entry_deviation = Some(devs);
    Ok(())
}

fn trace_law_trial(cfg: &ExperimentConfig, n: usize, seed: u64, rec: &mut TrialRecord) -> Result<()> {
    let spec = cfg.noise_spec();
    let labelled = matches!(spec.family, NoiseFamily::Pareto | NoiseFamily::StableCms);
    let (a, labels) = if labelled {
        let labels = sample_labels(n, &spec, cfg.epsilon, &mut substream(seed, stream::LABELS))?;
        let a = assemble_from_labels(&labels, &spec, &mut substream(seed, stream::NOISE))?;
        (a, Some(labels))
    } else {
        (draw_noise(cfg, n, seed)?, None)
    };
    let zs = mesh(cfg, ExperimentKind::TraceLaw, n, true)?;
    let mut devs = Vec::with_capacity(zs.len());
    match cfg.model {
        ModelKind::Wigner => {
            let w = wigner_with(n, &mut substream(seed, stream::WIGNER), WignerDiagonal::Uniform);
            let t = w.add_banded(&a).tridiagonalize();
            let eigs = eigenvalues_bisection(&t, None);
            for z in &zs {
                let zc = z.z();
                let m: Complex64 = eigs.iter().map(|&l| 1.0 / (l - zc)).sum::<Complex64>() / n as f64;
                devs.push((m - stieltjes_semicircle(*z)).norm());
            }
        }
        _ => {
            let h = laplacian_1d(n).add(&a)?;
            let mut ms = Vec::with_capacity(zs.len());
            for z in &zs {
                let m = BandGreen::new(&h, *z)?.trace();
                devs.push((m - stieltjes_arcsine(*z)).norm());
                ms.push(m);
            }
            if let Some(labels) = &labels {
                let class = classify_label(labels, n, cfg.epsilon, spec.sigma * spec.alpha);
                let removed = labels.removed_indices();
                if class == LabelClass::SeparablyAdmissible && !removed.is_empty() && removed.len() < n {
                    let mut worst = 0.0f64;
                    for (z, m) in zs.iter().zip(&ms) {
                        let mt = minor_trace(&h, &removed, *z)?;
                        let bound = removed.len() as f64 / (n as f64 * z.eta());
                        worst = worst.max((m - mt).norm() / bound);
                    }
                    rec.minor_trace_ratio = Some(worst);
                }
            }
        }
    }
    if let Some(labels) = &labels {
        rec.label_class = Some(classify_label(labels, n, cfg.epsilon, spec.sigma * spec.alpha));
        rec.f_count = Some(labels.f_count());
    }
    let (q, l) = dn_parameters(n, cfg.epsilon, spec.alpha);
    rec.dn = Some(detect_dn(&a, q, l));
    rec.sup_trace_deviation = Some(devs.iter().copied().fold(0.0, f64::max));
    rec.trace_deviation = Some(devs);
    Ok(())
}

fn trace_law_extra(cfg: &ExperimentConfig, records: &[&TrialRecord], extra: &mut BTreeMap<String, f64>) {
    let total = records.len().max(1) as f64;
    let by_class = |c: LabelClass| -> Vec<f64> {
        records
            .iter()
            .filter(|r| r.label_class == Some(c))
            .filter_map(|r| r.sup_trace_deviation)
            .collect()
    };
    if records.iter().any(|r| r.label_class.is_some()) {
        let sep = by_class(LabelClass::SeparablyAdmissible);
        let other: Vec<f64> = records
            .iter()
            .filter(|r| matches!(r.label_class, Some(c) if c != LabelClass::SeparablyAdmissible))
            .filter_map(|r| r.sup_trace_deviation)
            .collect();
        extra.insert("separably_admissible_frequency".into(), sep.len() as f64 / total);
        extra.insert("admissible_frequency".into(), (total - by_class(LabelClass::Neither).len() as f64) / total);
        if !sep.is_empty() {
            extra.insert("median_sup_separably_admissible".into(), median(&sep));
        }
        if !other.is_empty() {
            extra.insert("median_sup_other".into(), median(&other));
        }
        let f: Vec<f64> = records.iter().filter_map(|r| r.f_count.map(|c| c as f64)).collect();
        extra.insert("mean_f_count".into(), f.iter().sum::<f64>() / total);
    }
    let dn = records.iter().filter(|r| r.dn == Some(true)).count();
    extra.insert("dn_frequency".into(), dn as f64 / total);
    let worst = records.iter().filter_map(|r| r.minor_trace_ratio).fold(0.0f64, f64::max);
    extra.insert("max_minor_trace_ratio".into(), worst);
    let _ = cfg;
}

fn entrywise_failure_trial(cfg: &ExperimentConfig, n: usize, seed: u64, rec: &mut TrialRecord) -> Result<()> {
    let h_inf = laplacian_1d(n);
    let a = draw_noise(cfg, n, seed)?;
    rec.atypical_diagonal = Some(a.diagonal().iter().any(|x| x.abs() > 1.0));
    let z = match mesh(cfg, ExperimentKind::EntrywiseFailure, n, true)?.first() {
        Some(z0) => SpectralParameter::new(cfg.energy, z0.eta())?,
        None => return Err(Error::Config("empty mesh".into())),
    };
    let set = EntrySet {
        band: band_pairs(n, cfg.noise.bandwidth.max(1)),
        far: Vec::new(),
    };
    let dev = if a.is_zero() {
        0.0
    } else {
        let h = h_inf.add(&a)?;
        max_deviation(&entries(&h, z, &set)?, &reference_entries(ModelKind::Laplacian, &h_inf, z, &set)?)
    };
    rec.sup_entry_deviation = Some(dev);
    Ok(())
}

/// `P(exists i: |A_ii| > 1)`, exact for the Pareto and stable families.
pub fn atypical_diagonal_probability(family: NoiseFamily, alpha: f64, sigma: f64, n: usize) -> Option<f64> {
    let c = (n as f64).powf(1.0 / alpha - sigma);
    let p = tail_probability(family, alpha, c).ok()?;
    Some(1.0 - (1.0 - p).powi(n as i32))
}

fn entrywise_extra(
    cfg: &ExperimentConfig,
    n: usize,
    records: &[&TrialRecord],
    c0: Option<f64>,
    extra: &mut BTreeMap<String, f64>,
) {
    let total = records.len().max(1) as f64;
    let failed = |r: &&&TrialRecord| match (c0, r.sup_entry_deviation) {
        (Some(c), Some(s)) => s > 0.0 && s >= c,
        _ => false,
    };
    let atypical = |r: &&&TrialRecord| r.atypical_diagonal == Some(true);
    let count = |f: &dyn Fn(&&&TrialRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64;
    extra.insert("failure_frequency".into(), count(&failed) / total);
    extra.insert("atypical_frequency".into(), count(&atypical) / total);
    extra.insert("joint_atypical_failed".into(), count(&|r| atypical(r) && failed(r)));
    extra.insert("joint_atypical_held".into(), count(&|r| atypical(r) && !failed(r)));
    extra.insert("joint_typical_failed".into(), count(&|r| !atypical(r) && failed(r)));
    extra.insert("joint_typical_held".into(), count(&|r| !atypical(r) && !failed(r)));
    let spec = cfg.noise_spec();
    if let Some(p) = atypical_diagonal_probability(spec.family, spec.alpha, spec.sigma, n) {
        extra.insert("atypical_exact".into(), p);
    }
}

fn boundedness_trial(cfg: &ExperimentConfig, n: usize, seed: u64, rec: &mut TrialRecord) -> Result<()> {
    let h = laplacian_1d(n).add(&draw_noise(cfg, n, seed)?)?;
    let set = entry_set(n, cfg.noise.bandwidth, cfg.entry_policy, seed);
    let sup_over = |zs: Vec<SpectralParameter>| -> Result<f64> {
        let mut best = 0.0f64;
        for z in zs {
            best = entries(&h, z, &set)?.iter().map(|g| g.norm()).fold(best, f64::max);
        }
        Ok(best)
    };
    rec.sup_green = Some(sup_over(mesh(cfg, ExperimentKind::Boundedness, n, true)?)?);
    if cfg.noise.bandwidth >= 2 && cfg.removal {
        rec.sup_green_unremoved = Some(sup_over(mesh(cfg, ExperimentKind::Boundedness, n, false)?)?);
    }
    Ok(())
}

fn spectral_trial(cfg: &ExperimentConfig, n: usize, seed: u64, rec: &mut TrialRecord) -> Result<()> {
    let h = laplacian_1d(n).add(&draw_noise(cfg, n, seed)?)?;
    let t = reduce_to_tridiagonal(&h);
    let eigs = eigenvalues_bisection(&t, None);
    rec.arcsine_distance = Some(empirical_vs_arcsine(&eigs, n, cfg.kappa));
    rec.rigidity_deviation = Some(rigidity_report(&eigs, n, cfg.kappa)?.max_deviation);
    let (mut worst, mut bound_ratio) = (0.0f64, 0.0f64);
    for z in mesh(cfg, ExperimentKind::SpectralStatistics, n, true)? {
        let w = wegner_check_with(&t, &h, z)?;
        worst = worst.max(w.count as f64 / (z.eta() * n as f64));
        if w.count > 0 {
            bound_ratio = bound_ratio.max(w.count as f64 / w.bound);
        }
    }
    rec.wegner_worst_ratio = Some(worst);
    rec.wegner_bound_ratio = Some(bound_ratio);
    let domain = cfg.domain(EtaFloor::Trace);
    let eta = (n as f64).powf(cfg.eta_floor_exponent.unwrap_or_else(|| domain.floor_exponent()));
    let deloc = delocalization_report_with(
        &h,
        &eigs,
        cfg.kappa,
        &domain.removal_set(),
        eta,
        mix64(seed ^ stream::START_VECTORS),
    )?;
    if !deloc.failed.is_empty() {
        return Err(Error::NoConvergence {
            lambda: eigs[deloc.failed[0]],
            restarts: 3,
        });
    }
    rec.max_sup_norm = Some(deloc.max_sup_norm);
    rec.delocalization = Some(deloc.max_sup_norm * (n as f64).powf(0.5 - cfg.epsilon));
    Ok(())
}

/// Right-hand side of the concentration bound without the `(log N)^xi`
/// factor, for variables with `E|a|^p <= C^p / (N q^(p - alpha))`.
pub fn concentration_scale(psi: &[f64], q: f64, alpha: f64) -> f64 {
    let n = psi.len() as f64;
    let sup = psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sq: f64 = psi.iter().map(|x| x * x).sum();
    sup / q + (q.powf(alpha - 2.0) / n * sq).sqrt()
}

pub fn psi_weights(profile: PsiProfile, scale: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| match profile {
            PsiProfile::Ones => scale,
            PsiProfile::Linear => scale * (i + 1) as f64 / n as f64,
        })
        .collect()
}

fn concentration_trial(cfg: &ExperimentConfig, n: usize, seed: u64, rec: &mut TrialRecord) -> Result<()> {
    let spec = cfg.noise_spec();
    let c = &cfg.concentration;
    let psi = psi_weights(c.psi, c.psi_scale, n);
    let q = spec.truncation_q(n).unwrap_or(1.0);
    let base = concentration_scale(&psi, q, spec.alpha);
    let log_n = (n as f64).ln();
    let cutoffs: Vec<f64> = c.xi.iter().map(|&xi| log_n.powf(xi) * base).collect();
    let scale = spec.scale(n);
    let mut rng = substream(seed, stream::CONCENTRATION);
    let mut exceed = vec![0usize; cutoffs.len()];
    for _ in 0..c.replications_per_trial {
        let s: f64 = if spec.family == NoiseFamily::Zero {
            0.0
        } else {
            psi.iter().map(|w| w * scale * spec.sample_entry(n, &mut rng)).sum()
        };
        for (e, cut) in exceed.iter_mut().zip(&cutoffs) {
            if s.abs() >= *cut {
                *e += 1;
            }
        }
    }
    rec.exceedances = Some(exceed);
    rec.replications = Some(c.replications_per_trial);
    Ok(())
}

fn concentration_extra(cfg: &ExperimentConfig, n: usize, records: &[&TrialRecord], extra: &mut BTreeMap<String, f64>) {
    let reps: usize = records.iter().filter_map(|r| r.replications).sum();
    extra.insert("replications".into(), reps as f64);
    let log_n = (n as f64).ln();
    for (i, xi) in cfg.concentration.xi.iter().enumerate() {
        let hits: usize = records
            .iter()
            .filter_map(|r| r.exceedances.as_ref().and_then(|e| e.get(i).copied()))
            .sum();
        extra.insert(format!("tail_probability_{i}"), hits as f64 / reps.max(1) as f64);
        extra.insert(format!("tail_bound_{i}"), (-cfg.concentration.nu * log_n.powf(*xi)).exp());
    }
}

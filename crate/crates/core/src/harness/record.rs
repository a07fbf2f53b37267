use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::noise::LabelClass;

/// Outcome of one trial. Absent fields do not apply to the experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Calibration trial, drawn from the pilot seed.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pilot: bool,
    /// Max entry deviation at each mesh point, in mesh order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_deviation: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_entry_deviation: Option<f64>,
    /// `|m(z) - reference(z)|` at each mesh point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_deviation: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_trace_deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dn: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_class: Option<LabelClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_count: Option<usize>,
    /// Worst `|m - m^(T)| / (|T| / (N eta))` over the mesh.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minor_trace_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atypical_diagonal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_green: Option<f64>,
    /// Sup over the mesh without removal sets, for comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_green_unremoved: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sup_norm: Option<f64>,
    /// `max ||v||_inf * N^(1/2 - epsilon)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delocalization: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigidity_deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arcsine_distance: Option<f64>,
    /// Max over the interval mesh of `N_I / (|I| N)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wegner_worst_ratio: Option<f64>,
    /// Max over the interval mesh of count divided by its Wegner bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wegner_bound_ratio: Option<f64>,
    /// Exceedance counts of the concentration bound, one per `xi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exceedances: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(skip)]
    pub wall_time: f64,
}

impl TrialRecord {
    pub fn new(trial: usize, seed: u64, n: usize) -> Self {
        Self {
            trial,
            seed,
            n,
            ..Self::default()
        }
    }

    /// Rejects non-finite or negative numbers anywhere in the record.
    pub fn validate(&self) -> Result<()> {
        let value = serde_json::to_value(self)?;
        check_value(&value, "").map_err(|path| {
            Error::Config(format!("trial {} has a non-finite or negative value at {path}", self.trial))
        })
    }
}

fn check_value(v: &serde_json::Value, path: &str) -> std::result::Result<(), String> {
    match v {
        serde_json::Value::Null => Err(path.to_string()),
        serde_json::Value::Number(x) => match x.as_f64() {
            Some(f) if f.is_finite() && f >= 0.0 => Ok(()),
            _ => Err(path.to_string()),
        },
        serde_json::Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                check_value(item, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        serde_json::Value::Object(map) => {
            for (k, item) in map {
                check_value(item, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Linear-interpolation quantile of unsorted data (numpy's default rule).
pub fn quantile(data: &[f64], q: f64) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(data: &[f64]) -> f64 {
    quantile(data, 0.5)
}

/// Quantiles of one statistic and, when a threshold applies, the fraction
/// of trials with `value <= threshold` (or `<` when `strict`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSummary {
    pub statistic: String,
    pub count: usize,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass_fraction: Option<f64>,
}

impl StatisticSummary {
    pub fn from_values(statistic: &str, values: &[f64], threshold: Option<f64>, strict: bool) -> Self {
        let pass_fraction = threshold.map(|t| {
            let ok = values.iter().filter(|&&v| if strict { v < t } else { v <= t }).count();
            ok as f64 / values.len().max(1) as f64
        });
        Self {
            statistic: statistic.to_string(),
            count: values.len(),
            q05: quantile(values, 0.05),
            q50: quantile(values, 0.5),
            q95: quantile(values, 0.95),
            threshold,
            pass_fraction,
        }
    }
}

/// Aggregates for one matrix size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SizeAggregate {
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub statistics: Vec<StatisticSummary>,
    /// Frequencies, calibrated constants and conditional medians.
    pub extra: BTreeMap<String, f64>,
}

impl SizeAggregate {
    pub fn statistic(&self, name: &str) -> Option<&StatisticSummary> {
        self.statistics.iter().find(|s| s.statistic == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub per_n: Vec<SizeAggregate>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    pub fn size(&self, n: usize) -> Option<&SizeAggregate> {
        self.per_n.iter().find(|a| a.n == n)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Summary table, one row per size and statistic.
    pub fn summary_csv(&self) -> String {
        let c = &self.config;
        let mut out = String::from("experiment,model,family,alpha,sigma,K,N,statistic,q05,q50,q95,pass_fraction\n");
        let family = serde_json::to_value(c.noise.family)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        for agg in &self.per_n {
            for s in &agg.statistics {
                let pass = s.pass_fraction.map(|p| p.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    c.experiment,
                    c.model.name(),
                    family,
                    c.noise.alpha,
                    c.noise.sigma,
                    c.noise.bandwidth,
                    agg.n,
                    s.statistic,
                    s.q05,
                    s.q50,
                    s.q95,
                    pass
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let d = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&d, 0.0), 1.0);
        assert_eq!(quantile(&d, 1.0), 4.0);
        assert_eq!(median(&d), 2.5);
        assert!((quantile(&d, 0.05) - 1.15).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_nan_and_negative() {
        let mut r = TrialRecord::new(0, 1, 10);
        r.sup_trace_deviation = Some(0.1);
        assert!(r.validate().is_ok());
        r.sup_trace_deviation = Some(f64::NAN);
        assert!(r.validate().is_err());
        r.sup_trace_deviation = Some(-1.0);
        assert!(r.validate().is_err());
    }

    #[test]
    fn record_roundtrip_skips_absent_fields() {
        let mut r = TrialRecord::new(3, 7, 100);
        r.label_class = Some(LabelClass::SeparablyAdmissible);
        r.wall_time = 1.5;
        let line = serde_json::to_string(&r).unwrap();
        assert!(!line.contains("wall_time") && !line.contains("pilot"));
        let back: TrialRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back.label_class, r.label_class);
        assert_eq!(back.wall_time, 0.0);
    }
}

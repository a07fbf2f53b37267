use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{EtaFloor, SpectralDomain};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;

/// Deterministic part of the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Laplacian,
    BetaLimit,
    Wigner,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Laplacian => "laplacian",
            Self::BetaLimit => "beta_limit",
            Self::Wigner => "wigner",
        }
    }
}

/// Which Green-function entries enter a sup over `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryPolicy {
    /// Every pair; `O(N^2)` per spectral parameter.
    Full,
    /// The diagonal, every pair within the band, and this many random pairs.
    Sampled(usize),
}

impl Default for EntryPolicy {
    fn default() -> Self {
        Self::Sampled(64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(rename = "nE")]
    pub n_e: usize,
    #[serde(rename = "nEta")]
    pub n_eta: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { n_e: 9, n_eta: 6 }
    }
}

/// Pilot-run calibration of statistical thresholds: threshold =
/// `multiplier * quantile(pilot statistic)`. Multiplier and quantile default
/// per experiment when absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    #[serde(default = "default_pilot_seed")]
    pub pilot_seed: u64,
    #[serde(default = "default_pilot_trials")]
    pub pilot_trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantile: Option<f64>,
}

fn default_pilot_seed() -> u64 {
    0x9110_7000
}
fn default_pilot_trials() -> usize {
    20
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            pilot_seed: default_pilot_seed(),
            pilot_trials: default_pilot_trials(),
            multiplier: None,
            quantile: None,
        }
    }
}

/// Weights used by the concentration experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiProfile {
    #[default]
    Ones,
    /// `Psi_i = i / N`.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationConfig {
    #[serde(default = "default_replications")]
    pub replications_per_trial: usize,
    #[serde(default = "default_xis")]
    pub xi: Vec<f64>,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default)]
    pub psi: PsiProfile,
    #[serde(default = "default_psi_scale")]
    pub psi_scale: f64,
}

fn default_replications() -> usize {
    100
}
fn default_xis() -> Vec<f64> {
    vec![2.0, 3.0]
}
fn default_nu() -> f64 {
    0.1
}
fn default_psi_scale() -> f64 {
    1.0
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        Self {
            replications_per_trial: default_replications(),
            xi: default_xis(),
            nu: default_nu(),
            psi: PsiProfile::default(),
            psi_scale: default_psi_scale(),
        }
    }
}

fn default_n_list() -> Vec<usize> {
    vec![1000, 2000, 4000]
}
fn default_epsilon() -> f64 {
    0.4
}
fn default_kappa() -> f64 {
    0.5
}
fn default_p() -> u32 {
    3
}
fn default_trials() -> usize {
    100
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}
fn default_energy() -> f64 {
    0.5
}

/// One experiment run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub model: ModelKind,
    pub noise: NoiseSpec,
    #[serde(rename = "N_list", default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_p")]
    pub p: u32,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub entry_policy: EntryPolicy,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Floor of the eta mesh; defaults per experiment when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_mode: Option<EtaFloor>,
    /// Overrides the exponent `x` of the eta floor `N^x`. Values below the
    /// theorem floor require `exploratory`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_floor_exponent: Option<f64>,
    /// Exclude removal sets from the energy mesh when `K >= 2`.
    #[serde(default = "default_true")]
    pub removal: bool,
    /// Fixed energy for single-z experiments.
    #[serde(default = "default_energy")]
    pub energy: f64,
    /// Absolute pass threshold; pilot-calibrated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub calibration: Calibration,
    #[serde(default)]
    pub concentration: ConcentrationConfig,
    /// Report statistics without acceptance verdicts.
    #[serde(default)]
    pub exploratory: bool,
}

impl ExperimentConfig {
    /// Defaults for `experiment` with the given noise.
    pub fn new(experiment: &str, noise: NoiseSpec) -> Self {
        serde_json::from_value(serde_json::json!({
            "experiment": experiment,
            "noise": noise,
        }))
        .expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("N_list must be nonempty with positive entries".into());
        }
        if self.mesh.n_e == 0 || self.mesh.n_eta == 0 {
            return bad("mesh sizes must be positive".into());
        }
        if let Some(q) = self.calibration.quantile {
            if !(0.0..=1.0).contains(&q) {
                return bad("calibration quantile must lie in [0, 1]".into());
            }
        }
        if let Some(m) = self.calibration.multiplier {
            if !(m.is_finite() && m > 0.0) {
                return bad("calibration multiplier must be positive".into());
            }
        }
        if self.calibration.pilot_seed == self.master_seed {
            return bad("pilot_seed must differ from master_seed".into());
        }
        if self.calibration.pilot_trials == 0 {
            return bad("pilot_trials must be at least 1".into());
        }
        if self.p == 0 {
            return bad("p must be at least 1".into());
        }
        if let Some(x) = self.eta_floor_exponent {
            if !(x < 0.0 && x > -2.0) {
                return bad(format!("eta_floor_exponent must lie in (-2, 0), got {x}"));
            }
            let floor = self.domain(self.eta_mode.unwrap_or_default()).floor_exponent();
            if x < floor - 1e-12 && !self.exploratory {
                return bad(format!(
                    "eta floor N^{x} lies below the theorem floor N^{floor}; set exploratory to allow it"
                ));
            }
        }
        self.noise_spec().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.domain(EtaFloor::Trace)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Noise law with `omega` bound to `epsilon` when neither `q` nor
    /// `omega` is given.
    pub fn noise_spec(&self) -> NoiseSpec {
        let mut spec = self.noise.clone();
        if spec.q.is_none() && spec.omega.is_none() {
            spec.omega = Some(self.epsilon);
        }
        spec
    }

    /// Spectral domain of the experiment with the given default floor mode.
    pub fn domain(&self, default_mode: EtaFloor) -> SpectralDomain {
        let mode = self.eta_mode.unwrap_or(default_mode);
        let mut d = SpectralDomain::new(self.epsilon, self.kappa).with_scaling(self.noise.sigma, self.noise.alpha, mode);
        if self.removal {
            d = d.with_removal(self.noise.bandwidth, self.p);
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseFamily;

    #[test]
    fn defaults_and_roundtrip() {
        let cfg = ExperimentConfig::new("trace_law", NoiseSpec::new(NoiseFamily::Pareto, 1.0, 0));
        assert_eq!(cfg.n_list, vec![1000, 2000, 4000]);
        assert_eq!(cfg.mesh, MeshConfig { n_e: 9, n_eta: 6 });
        assert_eq!(cfg.trials, 100);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let ok = r#"{"experiment": "trace_law", "noise": {"family": "pareto", "alpha": 1.0, "K": 0}}"#;
        assert!(ExperimentConfig::from_json(ok).is_ok());
        let unknown = r#"{"experiment": "trace_law", "noise": {"family": "pareto", "alpha": 1.0}, "bogus": 1}"#;
        assert!(ExperimentConfig::from_json(unknown).is_err());
        let zero = r#"{"experiment": "trace_law", "noise": {"family": "pareto", "alpha": 1.0}, "trials": 0}"#;
        assert!(ExperimentConfig::from_json(zero).is_err());
        let policy = r#"{"experiment": "x", "noise": {"family": "zero", "alpha": 1.0}, "entry_policy": {"sampled": 8}}"#;
        assert_eq!(ExperimentConfig::from_json(policy).unwrap().entry_policy, EntryPolicy::Sampled(8));
    }
}

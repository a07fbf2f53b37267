//! Spectral parameters, spectral domains and their discretization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// A point `z = E + i eta` of the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParameter {
    e: f64,
    eta: f64,
}

impl SpectralParameter {
    pub fn new(e: f64, eta: f64) -> Result<Self> {
        if !e.is_finite() || !eta.is_finite() {
            return Err(invalid(format!("non-finite spectral parameter ({e}, {eta})")));
        }
        if eta <= 0.0 {
            return Err(invalid(format!("eta must be positive, got {eta}")));
        }
        Ok(Self { e, eta })
    }

    pub fn energy(&self) -> f64 {
        self.e
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.e, self.eta)
    }

    /// Same energy, different imaginary part.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.e, eta)
    }
}

/// Which lower cut-off on `eta` a domain uses when `sigma > 0`.
///
/// `Trace` gives `N^(-1 + eps + sigma*alpha)`, `Entrywise` gives
/// `N^(-1 + eps + 2*sigma*alpha)`. Both reduce to `N^(-1 + eps)` at `sigma = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EtaFloor {
    Entrywise,
    #[default]
    Trace,
}

/// Neighbourhoods of the energies where `sin(l * arccos(E/2)) = 0` for some
/// `l = 2..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalSet {
    points: Vec<f64>,
    radius: f64,
}

impl RemovalSet {
    pub fn empty(radius: f64) -> Self {
        Self {
            points: Vec::new(),
            radius,
        }
    }

    /// Sorted centers in `(-2, 2)`.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Whether `e` lies strictly inside one of the removed intervals.
    pub fn contains(&self, e: f64) -> bool {
        self.points.iter().any(|&c| (e - c).abs() < self.radius)
    }

    /// Moves an interval end point off the interval in rounding terms, so
    /// that `contains` is false for it.
    fn push_out(&self, mut e: f64) -> f64 {
        while let Some(&c) = self.points.iter().find(|&&c| (e - c).abs() < self.radius) {
            e = if e < c { e.next_down() } else { e.next_up() };
        }
        e
    }

    /// The removed interval containing `e`, if any.
    fn interval_of(&self, e: f64) -> Option<(f64, f64)> {
        self.points
            .iter()
            .find(|&&c| (e - c).abs() < self.radius)
            .map(|&c| (c - self.radius, c + self.radius))
    }
}

/// Removal set for bandwidth `k` with interval radius `10^(-p)`.
///
/// The roots of `sin(l * arccos(E/2))` inside `(-2, 2)` are `2 cos(m pi / l)`,
/// `m = 1..l`, so no root finding is needed. `l = 1` only contributes the edges.
pub fn removal_set(k: usize, p: u32) -> RemovalSet {
    let radius = 10f64.powi(-(p as i32));
    let mut points = Vec::new();
    for l in 2..=k {
        for m in 1..l {
            let mut c = 2.0 * (m as f64 * PI / l as f64).cos();
            if c.abs() < 1e-12 {
                c = 0.0;
            }
            points.push(c);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    RemovalSet { points, radius }
}

/// The parameter sets `{ z : |E| <= 2 - kappa, eta_floor(N) <= eta <= 1 }`,
/// optionally with the removal set of the noise bandwidth cut out of the
/// energy window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDomain {
    pub epsilon: f64,
    pub kappa: f64,
    /// Noise scaling exponent; 0 for the unscaled model.
    pub sigma: f64,
    /// Tail index entering the `sigma * alpha` shift of the floor.
    pub alpha: f64,
    pub bandwidth: usize,
    pub p: u32,
    pub mode: EtaFloor,
    /// Apply the removal set (only has an effect for `bandwidth >= 2`).
    pub removal: bool,
}

impl SpectralDomain {
    /// `S(epsilon, kappa)` without scaling or removal.
    pub fn new(epsilon: f64, kappa: f64) -> Self {
        Self {
            epsilon,
            kappa,
            sigma: 0.0,
            alpha: 1.0,
            bandwidth: 0,
            p: 3,
            mode: EtaFloor::Trace,
            removal: false,
        }
    }

    pub fn with_scaling(mut self, sigma: f64, alpha: f64, mode: EtaFloor) -> Self {
        self.sigma = sigma;
        self.alpha = alpha;
        self.mode = mode;
        self
    }

    pub fn with_removal(mut self, bandwidth: usize, p: u32) -> Self {
        self.bandwidth = bandwidth;
        self.p = p;
        self.removal = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid(format!("epsilon must lie in (0,1), got {}", self.epsilon)));
        }
        if !(self.kappa > 0.0 && self.kappa < 2.0) {
            return Err(invalid(format!("kappa must lie in (0,2), got {}", self.kappa)));
        }
        if !(self.sigma >= 0.0) {
            return Err(invalid(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if self.sigma > 0.0 && !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(invalid(format!("alpha must lie in (0,2), got {}", self.alpha)));
        }
        if self.p == 0 {
            return Err(invalid("removal exponent p must be at least 1"));
        }
        Ok(())
    }

    /// Exponent `x` in `eta_floor(N) = N^x`.
    pub fn floor_exponent(&self) -> f64 {
        let shift = match self.mode {
            EtaFloor::Trace => self.sigma * self.alpha,
            EtaFloor::Entrywise => 2.0 * self.sigma * self.alpha,
        };
        -1.0 + self.epsilon + shift
    }

    pub fn eta_floor(&self, n: usize) -> f64 {
        (n as f64).powf(self.floor_exponent())
    }

    pub fn energy_window(&self) -> (f64, f64) {
        (-2.0 + self.kappa, 2.0 - self.kappa)
    }

    /// The removal set in force, empty unless removal is enabled and `K >= 2`.
    pub fn removal_set(&self) -> RemovalSet {
        if self.removal && self.bandwidth >= 2 {
            removal_set(self.bandwidth, self.p)
        } else {
            RemovalSet::empty(10f64.powi(-(self.p as i32)))
        }
    }

    pub fn contains(&self, n: usize, z: &SpectralParameter) -> bool {
        let (lo, hi) = self.energy_window();
        z.energy() >= lo
            && z.energy() <= hi
            && z.eta() >= self.eta_floor(n)
            && z.eta() <= 1.0
            && !self.removal_set().contains(z.energy())
    }
}

/// Energies of a mesh over the window of `domain`, `n_e` of them before
/// removal adjustments.
pub fn mesh_energies(domain: &SpectralDomain, n_e: usize) -> Result<Vec<f64>> {
    if n_e == 0 {
        return Err(invalid("mesh needs at least one energy"));
    }
    domain.validate()?;
    let (lo, hi) = domain.energy_window();
    let removal = domain.removal_set();
    let mut energies = Vec::with_capacity(n_e);
    for k in 0..n_e {
        let e = if n_e == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (n_e - 1) as f64
        };
        let e = match removal.interval_of(e) {
            None => e,
            Some((a, b)) => {
                let c = 0.5 * (a + b);
                let (near, far) = if e < c { (a, b) } else { (b, a) };
                let (near, far) = (removal.push_out(near), removal.push_out(far));
                if (lo..=hi).contains(&near) {
                    near
                } else if (lo..=hi).contains(&far) {
                    far
                } else {
                    continue;
                }
            }
        };
        energies.push(e);
    }
    energies.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    if energies.is_empty() {
        return Err(invalid("removal set covers the entire energy window"));
    }
    Ok(energies)
}

/// Geometric ladder of `n_eta` values from `eta_floor(N)` up to 1.
pub fn mesh_etas(domain: &SpectralDomain, n: usize, n_eta: usize) -> Result<Vec<f64>> {
    if n_eta == 0 {
        return Err(invalid("mesh needs at least one eta level"));
    }
    let floor = domain.eta_floor(n);
    if !(floor < 1.0) {
        return Err(invalid(format!(
            "eta floor N^{:.4} = {floor} is not below 1 for N = {n}",
            domain.floor_exponent()
        )));
    }
    if n_eta == 1 {
        return Ok(vec![floor]);
    }
    let span = -floor.ln();
    Ok((0..n_eta)
        .map(|k| {
            if k + 1 == n_eta {
                1.0
            } else {
                floor * (span * k as f64 / (n_eta - 1) as f64).exp()
            }
        })
        .collect())
}

/// Cartesian mesh of energies and eta levels over `domain` for dimension `n`.
///
/// Energies are uniformly spaced over `[-2 + kappa, 2 - kappa]`; an energy
/// falling inside a removed interval is moved to the nearest interval end and
/// duplicates are dropped. Eta levels are geometric between the floor and 1.
/// The list is ordered energy-major.
pub fn domain_mesh(
    domain: &SpectralDomain,
    n: usize,
    n_e: usize,
    n_eta: usize,
) -> Result<Vec<SpectralParameter>> {
    let energies = mesh_energies(domain, n_e)?;
    let etas = mesh_etas(domain, n, n_eta)?;
    let mut out = Vec::with_capacity(energies.len() * etas.len());
    for &e in &energies {
        for &eta in &etas {
            out.push(SpectralParameter::new(e, eta)?);
        }
    }
    Ok(out)
}

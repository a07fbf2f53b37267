//! Heavy-tailed noise: samplers, banded noise matrices, the T/F label
//! machinery used to split off atypically large entries, and atypical-entry
//! events.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::band::BandedSymmetricMatrix;
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, stream, substream};

/// Law of the unscaled entries `xi_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    /// Symmetric alpha-stable, Chambers-Mallows-Stuck.
    StableCms,
    /// Symmetric Pareto, `P(|xi| >= x) = x^-alpha` for `x >= 1`.
    Pareto,
    /// Pareto with entries above `N^(1/alpha) / q` set to zero.
    Truncated,
    /// Pareto with tail exponent `alpha + 2 delta`, scaled as if it had exponent `alpha`.
    HeavierMoment,
    Zero,
}

fn default_delta() -> f64 {
    0.25
}

/// Full description of the noise law. Serialized field names: `family`,
/// `alpha`, `sigma`, `K`, `delta`, `seed`, and optional `q` / `omega` for
/// the truncated family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub alpha: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(rename = "K", default)]
    pub bandwidth: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    /// Explicit truncation parameter; overrides `omega`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Exponent in `q = N^(omega / (10 alpha))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, alpha: f64, bandwidth: usize) -> Self {
        Self {
            family,
            alpha,
            sigma: 0.0,
            bandwidth,
            delta: default_delta(),
            seed: 0,
            q: None,
            omega: None,
        }
    }

    pub fn zero(bandwidth: usize) -> Self {
        Self::new(NoiseFamily::Zero, 1.0, bandwidth)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = Some(q);
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = Some(omega);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(invalid(format!("alpha must lie in (0, 2), got {}", self.alpha)));
        }
        if !(self.sigma >= 0.0 && self.sigma < 1.0 / self.alpha) {
            return Err(invalid(format!(
                "sigma must lie in [0, 1/alpha) = [0, {}), got {}",
                1.0 / self.alpha,
                self.sigma
            )));
        }
        if self.family == NoiseFamily::HeavierMoment && !(self.delta > 0.0) {
            return Err(invalid("delta must be positive"));
        }
        if self.family == NoiseFamily::Truncated {
            match (self.q, self.omega) {
                (Some(q), _) if !(q >= 1.0) => return Err(invalid("q must be at least 1")),
                (None, Some(w)) if !(w > 0.0) => return Err(invalid("omega must be positive")),
                (None, None) => return Err(invalid("truncated family needs q or omega")),
                _ => {}
            }
        }
        Ok(())
    }

    /// Entry scale `N^(sigma - 1/alpha)`.
    pub fn scale(&self, n: usize) -> f64 {
        (n as f64).powf(self.sigma - 1.0 / self.alpha)
    }

    /// Truncation parameter `q` at dimension `n` (truncated family only).
    pub fn truncation_q(&self, n: usize) -> Option<f64> {
        if self.family != NoiseFamily::Truncated {
            return None;
        }
        self.q
            .or_else(|| self.omega.map(|w| (n as f64).powf(w / (10.0 * self.alpha))))
    }

    /// Draws one unscaled entry.
    pub fn sample_entry<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> f64 {
        match self.family {
            NoiseFamily::Zero => 0.0,
            NoiseFamily::StableCms => sample_symmetric_stable(self.alpha, rng),
            NoiseFamily::Pareto => sample_pareto_symmetric(self.alpha, rng),
            NoiseFamily::HeavierMoment => sample_pareto_symmetric(self.alpha + 2.0 * self.delta, rng),
            NoiseFamily::Truncated => {
                let x = sample_pareto_symmetric(self.alpha, rng);
                let cut = (n as f64).powf(1.0 / self.alpha) / self.truncation_q(n).unwrap_or(1.0);
                if x.abs() > cut {
                    0.0
                } else {
                    x
                }
            }
        }
    }
}

/// One standard symmetric alpha-stable draw, characteristic function
/// `exp(-|t|^alpha)`.
pub fn sample_symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    stable_from_uniforms(alpha, v, w)
}

fn stable_from_uniforms(alpha: f64, v: f64, w: f64) -> f64 {
    (alpha * v).sin() / v.cos().powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Magnitude `u^(-1/alpha)` of a Pareto draw from a uniform `u` in `(0, 1]`.
pub fn pareto_from_uniform(alpha: f64, u: f64) -> f64 {
    u.powf(-1.0 / alpha)
}

/// One symmetric Pareto draw: `|xi| = U^(-1/alpha)` with a fair random sign.
pub fn sample_pareto_symmetric<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    let x = pareto_from_uniform(alpha, u);
    if rng.random::<bool>() {
        x
    } else {
        -x
    }
}

/// `P(|xi| >= x)` for the symmetric Pareto law.
pub fn pareto_tail(alpha: f64, x: f64) -> f64 {
    if x <= 1.0 {
        1.0
    } else {
        x.powf(-alpha)
    }
}

/// `P(|X| > x)` for the standard symmetric alpha-stable law, by Nolan's
/// integral representation.
pub fn stable_tail_probability(alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if alpha == 1.0 {
        return 1.0 - 2.0 / PI * x.atan();
    }
    let expo = alpha / (alpha - 1.0);
    let nodes = 4000;
    let h = FRAC_PI_2 / nodes as f64;
    let mut acc = 0.0;
    for m in 0..nodes {
        let theta = (m as f64 + 0.5) * h;
        // x^expo V(theta), evaluated in logs since expo is large near alpha = 1.
        let log_g = expo * (x * theta.cos() / (alpha * theta).sin()).ln()
            + (((alpha - 1.0) * theta).cos() / theta.cos()).ln();
        let g = log_g.exp();
        acc += if alpha < 1.0 { -(-g).exp_m1() } else { (-g).exp() };
    }
    2.0 * acc * h / PI
}

/// Two-sided tail `P(|xi| >= c)` of the family's base law.
pub fn tail_probability(family: NoiseFamily, alpha: f64, c: f64) -> Result<f64> {
    match family {
        NoiseFamily::Pareto => Ok(pareto_tail(alpha, c)),
        NoiseFamily::StableCms => Ok(stable_tail_probability(alpha, c)),
        _ => Err(invalid("labels are defined for the pareto and stable_cms families")),
    }
}

/// Draw of the base law conditioned on `|xi| < c` (`large = false`) or
/// `|xi| >= c` (`large = true`).
pub fn sample_conditional<R: Rng + ?Sized>(family: NoiseFamily, alpha: f64, c: f64, large: bool, rng: &mut R) -> Result<f64> {
    let magnitude = match family {
        NoiseFamily::Pareto => {
            let tail = pareto_tail(alpha, c);
            let r = 1.0 - rng.random::<f64>();
            if large {
                // U uniform on (0, tail].
                pareto_from_uniform(alpha, r * tail)
            } else {
                if tail >= 1.0 {
                    return Err(invalid("no mass below the cutoff"));
                }
                pareto_from_uniform(alpha, tail + (1.0 - tail) * (1.0 - r))
            }
        }
        NoiseFamily::StableCms if large => StableTailSampler::new(alpha, c).sample(rng),
        NoiseFamily::StableCms => loop {
            let x = sample_symmetric_stable(alpha, rng).abs();
            if x < c {
                break x;
            }
        },
        _ => return Err(invalid("labels are defined for the pareto and stable_cms families")),
    };
    Ok(if rng.random::<bool>() { magnitude } else { -magnitude })
}

/// Sampler of `|X|` conditioned on `|X| >= c` for the stable law.
///
/// In the CMS representation `|X| = a(V) W^(-(1-alpha)/alpha)` is monotone in
/// `W` for fixed `V`, so `W` given `V` is an exactly sampled truncated
/// exponential; `V` itself is drawn by rejection against a tabulated
/// envelope of `P(|X| >= c | V)`.
#[derive(Debug, Clone)]
pub struct StableTailSampler {
    alpha: f64,
    c: f64,
    width: f64,
    envelope: Vec<f64>,
    total: f64,
}

impl StableTailSampler {
    const CELLS: usize = 512;

    pub fn new(alpha: f64, c: f64) -> Self {
        let width = FRAC_PI_2 / Self::CELLS as f64;
        let mut out = Self {
            alpha,
            c,
            width,
            envelope: Vec::new(),
            total: 0.0,
        };
        if alpha != 1.0 {
            let samples = 16;
            out.envelope = (0..Self::CELLS)
                .map(|m| {
                    let peak = (0..=samples)
                        .map(|s| out.cond((m as f64 + s as f64 / samples as f64) * width))
                        .fold(0.0f64, f64::max);
                    (1.5 * peak + 1e-300).min(1.0)
                })
                .collect();
            out.total = out.envelope.iter().sum();
        }
        out
    }

    fn power(&self) -> f64 {
        (1.0 - self.alpha) / self.alpha
    }

    fn a_of(&self, v: f64) -> f64 {
        let alpha = self.alpha;
        ((alpha * v).sin() / v.cos().powf(1.0 / alpha)).abs() * ((1.0 - alpha) * v).cos().powf(self.power())
    }

    fn w_star(&self, v: f64) -> f64 {
        (self.a_of(v) / self.c).powf(1.0 / self.power())
    }

    fn cond(&self, v: f64) -> f64 {
        let ws = self.w_star(v);
        let p = if self.alpha < 1.0 { -(-ws).exp_m1() } else { (-ws).exp() };
        if p.is_finite() {
            p.clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.alpha == 1.0 {
            let lo = self.c.atan();
            let v = lo + (FRAC_PI_2 - lo) * rng.random::<f64>();
            return v.tan().max(self.c);
        }
        let p = self.power();
        loop {
            let mut t = rng.random::<f64>() * self.total;
            let mut cell = Self::CELLS - 1;
            for (m, e) in self.envelope.iter().enumerate() {
                if t < *e {
                    cell = m;
                    break;
                }
                t -= e;
            }
            let v = (cell as f64 + rng.random::<f64>()) * self.width;
            if rng.random::<f64>() * self.envelope[cell] > self.cond(v) {
                continue;
            }
            let ws = self.w_star(v);
            let u = rng.random::<f64>();
            let w = if self.alpha < 1.0 {
                -(1.0 - u * (-(-ws).exp_m1())).ln()
            } else {
                ws - (1.0 - u).ln()
            };
            let x = self.a_of(v) * w.powf(-p);
            if x >= self.c && x.is_finite() {
                return x;
            }
        }
    }
}

/// Banded noise matrix `N^(sigma - 1/alpha) xi_ij`, entries drawn for
/// `i <= j <= i + K` in row-major order.
pub fn build_noise<R: Rng + ?Sized>(n: usize, spec: &NoiseSpec, rng: &mut R) -> Result<BandedSymmetricMatrix> {
    spec.validate()?;
    let k = spec.bandwidth;
    let mut a = BandedSymmetricMatrix::zeros(n, k);
    if spec.family == NoiseFamily::Zero {
        return Ok(a);
    }
    let scale = spec.scale(n);
    for i in 0..n {
        for j in i..=(i + k).min(n - 1) {
            a.set(i, j, scale * spec.sample_entry(n, rng));
        }
    }
    Ok(a)
}

/// [`build_noise`] with the generator derived from `spec.seed` and `n`.
pub fn build_noise_seeded(n: usize, spec: &NoiseSpec) -> Result<BandedSymmetricMatrix> {
    let mut rng = substream(derive_seed(spec.seed, n as u64, 0), stream::NOISE);
    build_noise(n, spec, &mut rng)
}

/// Label of one in-band pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    T,
    F,
}

/// T/F labels on the in-band pairs `i <= j <= i + K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    n: usize,
    cutoff: f64,
    bands: Vec<Vec<Label>>,
}

impl LabelMatrix {
    /// All-T labels.
    pub fn all_true(n: usize, bandwidth: usize, cutoff: f64) -> Self {
        let bands = (0..=bandwidth).map(|d| vec![Label::T; n.saturating_sub(d)]).collect();
        Self { n, cutoff, bands }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn get(&self, i: usize, j: usize) -> Label {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.bands[hi - lo][lo]
    }

    pub fn set(&mut self, i: usize, j: usize, label: Label) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.bands[hi - lo][lo] = label;
    }

    /// F-labelled pairs `(i, j)`, `i <= j`, in row-major order.
    pub fn f_pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .bands
            .iter()
            .enumerate()
            .flat_map(|(d, b)| {
                b.iter()
                    .enumerate()
                    .filter(|(_, l)| **l == Label::F)
                    .map(move |(i, _)| (i, i + d))
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn f_count(&self) -> usize {
        self.bands.iter().flatten().filter(|l| **l == Label::F).count()
    }

    /// The index set `T^L`: every row or column touched by an F pair.
    pub fn removed_indices(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.f_pairs().into_iter().flat_map(|(i, j)| [i, j]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Label cutoff `(K+1)^(1/alpha) N^((1 - eps/10)/alpha) N^(-sigma)`.
pub fn label_cutoff(n: usize, spec: &NoiseSpec, epsilon: f64) -> f64 {
    let nf = n as f64;
    ((spec.bandwidth + 1) as f64).powf(1.0 / spec.alpha)
        * nf.powf((1.0 - epsilon / 10.0) / spec.alpha)
        * nf.powf(-spec.sigma)
}

/// Labels each in-band pair F independently with probability
/// `P(|xi| >= cutoff)`.
pub fn sample_labels<R: Rng + ?Sized>(n: usize, spec: &NoiseSpec, epsilon: f64, rng: &mut R) -> Result<LabelMatrix> {
    spec.validate()?;
    let cutoff = label_cutoff(n, spec, epsilon);
    let p_f = tail_probability(spec.family, spec.alpha, cutoff)?;
    let mut labels = LabelMatrix::all_true(n, spec.bandwidth, cutoff);
    for i in 0..n {
        for j in i..=(i + spec.bandwidth).min(n - 1) {
            if rng.random::<f64>() < p_f {
                labels.set(i, j, Label::F);
            }
        }
    }
    Ok(labels)
}

/// Noise matrix drawn conditionally on the labels: T pairs below the cutoff,
/// F pairs above it. Has the same law as [`build_noise`].
pub fn assemble_from_labels<R: Rng + ?Sized>(
    labels: &LabelMatrix,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<BandedSymmetricMatrix> {
    let n = labels.n();
    let k = labels.bandwidth();
    let scale = spec.scale(n);
    let mut a = BandedSymmetricMatrix::zeros(n, k);
    for i in 0..n {
        for j in i..=(i + k).min(n - 1) {
            let large = labels.get(i, j) == Label::F;
            let x = sample_conditional(spec.family, spec.alpha, labels.cutoff(), large, rng)?;
            a.set(i, j, scale * x);
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelClass {
    SeparablyAdmissible,
    Admissible,
    Neither,
}

/// Classification thresholds: maximal F count and separation scale.
pub fn label_thresholds(n: usize, bandwidth: usize, epsilon: f64, sigma_alpha: f64) -> (f64, f64) {
    let nf = n as f64;
    let max_f = (bandwidth + 1) as f64 * nf.powf(sigma_alpha + epsilon / 4.0);
    let lsep = nf.powf(1.0 - 2.0 * sigma_alpha - 0.5 * epsilon);
    (max_f, lsep)
}

pub fn classify_label(labels: &LabelMatrix, n: usize, epsilon: f64, sigma_alpha: f64) -> LabelClass {
    let (max_f, lsep) = label_thresholds(n, labels.bandwidth(), epsilon, sigma_alpha);
    classify_label_with(labels, max_f, lsep)
}

/// Admissible: at most `max_f` F pairs. Separably admissible: additionally
/// every F row `i` (1-based) lies outside `[1, lsep]` and `[N - lsep, N]`,
/// and distinct F pairs have rows more than `lsep` apart.
pub fn classify_label_with(labels: &LabelMatrix, max_f: f64, lsep: f64) -> LabelClass {
    let pairs = labels.f_pairs();
    if pairs.len() as f64 > max_f {
        return LabelClass::Neither;
    }
    let n = labels.n() as f64;
    let mut rows: Vec<f64> = pairs.iter().map(|&(i, _)| (i + 1) as f64).collect();
    rows.sort_by(f64::total_cmp);
    let edge = rows.iter().any(|&r| r <= lsep || r >= n - lsep);
    let close = rows.windows(2).any(|w| w[1] - w[0] <= lsep);
    if edge || close {
        LabelClass::Admissible
    } else {
        LabelClass::SeparablyAdmissible
    }
}

/// `q = N^(0.01 eps / alpha)` and `L = N^(1 - 0.5 eps)` for the event D_N.
pub fn dn_parameters(n: usize, epsilon: f64, alpha: f64) -> (f64, f64) {
    let nf = n as f64;
    (nf.powf(0.01 * epsilon / alpha), nf.powf(1.0 - 0.5 * epsilon))
}

/// Atypical entries (`|A_ij| > 1/q`) too close to each other or to the edge:
/// two distinct ones with rows within `2L`, or one with row (1-based) in
/// `[1, L]` or `[N - L, N]`.
pub fn detect_dn(a: &BandedSymmetricMatrix, q: f64, l_scale: f64) -> bool {
    let n = a.n() as f64;
    let mut rows: Vec<f64> = a
        .upper_entries()
        .filter(|&(_, _, v)| v.abs() > 1.0 / q)
        .map(|(i, _, _)| (i + 1) as f64)
        .collect();
    rows.sort_by(f64::total_cmp);
    rows.iter().any(|&r| r <= l_scale || r >= n - l_scale) || rows.windows(2).any(|w| w[1] - w[0] <= 2.0 * l_scale)
}

/// Upper bound on `E[|xi|^k 1{|xi| <= x}]` for a tail `P(|xi| >= x) = x^-alpha`:
/// `k/(k - alpha) x^(k - alpha)` for `k > alpha` and `alpha/(alpha - k)` for
/// `k < alpha`.
pub fn truncated_moment_bound(alpha: f64, k: u32, x: f64) -> Result<f64> {
    if k == 0 || x < 1.0 {
        return Err(invalid("need k >= 1 and x >= 1"));
    }
    let kf = k as f64;
    if kf == alpha {
        return Err(invalid("k = alpha is not covered"));
    }
    Ok(if kf > alpha {
        kf / (kf - alpha) * x.powf(kf - alpha)
    } else {
        alpha / (alpha - kf)
    })
}

/// Exact `E[|xi|^k 1{|xi| <= x}]` for the Pareto law.
pub fn pareto_truncated_moment(alpha: f64, k: f64, x: f64) -> f64 {
    if x <= 1.0 {
        return 0.0;
    }
    if k == alpha {
        alpha * x.ln()
    } else {
        alpha / (k - alpha) * (x.powf(k - alpha) - 1.0)
    }
}

/// Threshold and maximal count for the large-entry count event: more than
/// `2 (K+1) N^(sigma alpha + eps/4)` entries of `N^sigma A` with modulus
/// above `(K+1)^(1/alpha) N^(-eps/(10 alpha))`.
pub fn large_entry_event(n: usize, bandwidth: usize, alpha: f64, epsilon: f64, sigma_alpha: f64) -> (f64, f64) {
    let nf = n as f64;
    let kk = (bandwidth + 1) as f64;
    let threshold = kk.powf(1.0 / alpha) * nf.powf(-epsilon / (10.0 * alpha));
    let count = 2.0 * kk * nf.powf(sigma_alpha + epsilon / 4.0);
    (threshold, count)
}

/// Number of entries of `a` above `threshold` in modulus.
pub fn count_above(a: &BandedSymmetricMatrix, threshold: f64) -> usize {
    a.upper_entries().filter(|&(_, _, v)| v.abs() > threshold).count()
}

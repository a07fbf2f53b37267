//! Deterministic reference objects: the 1d Laplacian and its closed-form
//! Green function, the beta-ensemble limit matrix, Wigner matrices, and the
//! arcsine / semicircle Stieltjes transforms.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::band::BandedSymmetricMatrix;
use crate::dense::DenseSymmetric;
use crate::domain::SpectralParameter;
use crate::error::{invalid, Error, Result};
use crate::rng::stream;

/// Discrete Laplacian: zero diagonal, ones on the first off-diagonal.
pub fn laplacian_1d(n: usize) -> BandedSymmetricMatrix {
    let mut m = BandedSymmetricMatrix::zeros(n, 1);
    for i in 0..n.saturating_sub(1) {
        m.set(i, i + 1, 1.0);
    }
    m
}

/// Limit matrix of the Gaussian beta ensemble: zero diagonal, `(k, k+1)` entry
/// `2 * sqrt((N - k) / N)` for one-based `k`.
pub fn beta_limit_matrix(n: usize) -> BandedSymmetricMatrix {
    let mut m = BandedSymmetricMatrix::zeros(n, 1);
    let nf = n as f64;
    for i in 0..n.saturating_sub(1) {
        let k = (i + 1) as f64;
        m.set(i, i + 1, 2.0 * ((nf - k) / nf).sqrt());
    }
    m
}

/// Diagonal variance convention for [`wigner`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WignerDiagonal {
    /// Every entry has variance `1/N`.
    #[default]
    Uniform,
    /// GOE convention, diagonal variance `2/N`.
    Goe,
}

/// Symmetric matrix of independent centered Gaussians with variance `1/N`.
pub fn wigner(n: usize, seed: u64, diagonal: WignerDiagonal) -> DenseSymmetric {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream::WIGNER);
    wigner_with(n, &mut rng, diagonal)
}

pub(crate) fn wigner_with(
    n: usize,
    rng: &mut impl rand::Rng,
    diagonal: WignerDiagonal,
) -> DenseSymmetric {
    let sd = (1.0 / n as f64).sqrt();
    let sd_diag = match diagonal {
        WignerDiagonal::Uniform => sd,
        WignerDiagonal::Goe => (2.0 / n as f64).sqrt(),
    };
    let mut m = DenseSymmetric::zeros(n);
    for i in 0..n {
        for j in i..n {
            let g: f64 = StandardNormal.sample(rng);
            m.set(i, j, g * if i == j { sd_diag } else { sd });
        }
    }
    m
}

/// Precomputed quantities for evaluating the Laplacian resolvent in closed
/// form at one spectral parameter.
///
/// `lambda` is `arccos(z/2)` with its sign chosen so that `Im lambda > 0`;
/// the resolvent entries are even in `lambda`, so this only fixes which
/// exponentials are small. With `w = exp(i lambda)`, `|w| < 1` and every
/// cosine / sine of `m * lambda` is written as a decaying power of `w` times
/// the dominant factor, which cancels between numerator and denominator.
#[derive(Debug, Clone)]
pub struct ClosedFormContext {
    n: usize,
    z: SpectralParameter,
    lambda: Complex64,
    sin_lambda: Complex64,
    /// `w^k` for `k = 0..=2(N+1)`.
    powers: Vec<Complex64>,
}

impl ClosedFormContext {
    pub fn new(n: usize, z: SpectralParameter) -> Result<Self> {
        if n == 0 {
            return Err(invalid("matrix dimension must be positive"));
        }
        let mut lambda = (z.z() / 2.0).acos();
        if lambda.im < 0.0 {
            lambda = -lambda;
        }
        let sin_lambda = lambda.sin();
        if sin_lambda.norm() < 1e-14 {
            return Err(Error::EdgeSingularity {
                re: z.energy(),
                im: z.eta(),
            });
        }
        let w = (Complex64::i() * lambda).exp();
        let m = n + 1;
        let mut powers = Vec::with_capacity(2 * m + 1);
        let mut acc = Complex64::new(1.0, 0.0);
        for _ in 0..=2 * m {
            powers.push(acc);
            acc *= w;
        }
        Ok(Self {
            n,
            z,
            lambda,
            sin_lambda,
            powers,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z(&self) -> SpectralParameter {
        self.z
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    /// `G^inf_{ij}(z)` for zero-based `i, j`.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        assert!(i < self.n && j < self.n, "index out of range");
        let m = (self.n + 1) as i64;
        let d = (i as i64 - j as i64).abs();
        let s = (i + j + 2) as i64;
        let r = (m - s).abs();
        let p = |k: i64| self.powers[k as usize];
        // cos((M-d)l) - cos((M-s)l) over 2 sin(l) sin(Ml), scaled by w^M.
        let num = p(d) + p(2 * m - d) - p(m - r) - p(m + r);
        let den = Complex64::new(0.0, 2.0) * self.sin_lambda * (Complex64::new(1.0, 0.0) - p(2 * m));
        num / den
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n).map(|j| self.entry(j, j)).collect()
    }

    /// Normalized trace `m^inf(z)`, averaged over all `N` diagonal entries.
    pub fn trace(&self) -> Complex64 {
        self.diagonal().iter().sum::<Complex64>() / self.n as f64
    }

    /// `cos((N+1-K) lambda) / cos((N+1) lambda)`.
    pub fn offdiag_ratio(&self, k: usize) -> Complex64 {
        assert!(k <= self.n, "offset exceeds dimension");
        let m = self.n + 1;
        let one = Complex64::new(1.0, 0.0);
        self.powers[k] * (one + self.powers[2 * (m - k)]) / (one + self.powers[2 * m])
    }
}

/// Closed-form Laplacian Green function entry `[(H^inf - z)^{-1}]_{ij}`.
pub fn green_closed_form(n: usize, z: SpectralParameter, i: usize, j: usize) -> Result<Complex64> {
    if i >= n || j >= n {
        return Err(invalid(format!("index ({i}, {j}) out of range for N = {n}")));
    }
    Ok(ClosedFormContext::new(n, z)?.entry(i, j))
}

/// `m^inf(z)`, the normalized trace of the Laplacian resolvent.
pub fn laplacian_trace(n: usize, z: SpectralParameter) -> Result<Complex64> {
    Ok(ClosedFormContext::new(n, z)?.trace())
}

/// Ratio `cos((N+1-K) lambda) / cos((N+1) lambda)`, which approximates
/// `G^inf_{i,i+K} / G^inf_{ii}` for bulk indices.
pub fn offdiag_imag_ratio(z: SpectralParameter, n: usize, k: usize) -> Result<Complex64> {
    if k > n {
        return Err(invalid(format!("offset {k} exceeds N = {n}")));
    }
    Ok(ClosedFormContext::new(n, z)?.offdiag_ratio(k))
}

/// Stieltjes transform of the arcsine law, `1 / (2 sqrt(z^2/4 - 1))`, on the
/// branch with positive imaginary part.
pub fn stieltjes_arcsine(z: SpectralParameter) -> Complex64 {
    let z = z.z();
    let m = 1.0 / (2.0 * (z * z / 4.0 - 1.0).sqrt());
    if m.im < 0.0 {
        -m
    } else {
        m
    }
}

/// Stieltjes transform of the semicircle law, the root of `m^2 + z m + 1 = 0`
/// with positive imaginary part.
pub fn stieltjes_semicircle(z: SpectralParameter) -> Complex64 {
    let z = z.z();
    let mut root = (z * z - 4.0).sqrt();
    // The Herglotz root is the one of modulus below 1; dividing avoids the
    // cancellation in (-z + root) / 2 for large |z|.
    if (z.conj() * root).re < 0.0 {
        root = -root;
    }
    -2.0 / (z + root)
}

/// Arcsine distribution function `1/2 + arcsin(E/2) / pi`, clamped outside `[-2, 2]`.
pub fn arcsine_cdf(e: f64) -> f64 {
    if e <= -2.0 {
        0.0
    } else if e >= 2.0 {
        1.0
    } else {
        0.5 + (e / 2.0).asin() / PI
    }
}

pub fn arcsine_density(e: f64) -> f64 {
    if e.abs() >= 2.0 {
        0.0
    } else {
        1.0 / (2.0 * PI * (1.0 - e * e / 4.0).sqrt())
    }
}

/// Classical locations `gamma_i = 2 sin(pi (i - 1/2) / N)`, `i = 1..=N/2`, of
/// the positive eigenvalues. Negative locations are `-gamma_i`.
pub fn classical_locations(n: usize) -> Result<Vec<f64>> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(invalid(format!("classical locations need even N, got {n}")));
    }
    let nf = n as f64;
    Ok((1..=n / 2)
        .map(|i| 2.0 * (PI * (i as f64 - 0.5) / nf).sin())
        .collect())
}

/// Determinants `M_0..=M_kmax` of `H_k^inf + D I` via the three-term recursion.
pub fn laplacian_determinants(d: f64, kmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(1.0);
    if kmax >= 1 {
        out.push(d);
    }
    for k in 2..=kmax {
        let next = d * out[k - 1] - out[k - 2];
        out.push(next);
    }
    out
}

/// `M_k = (-1)^k sin((k+1) lambda) / sin(lambda)` with `D = -2 cos(lambda)`, `|D| < 2`.
pub fn laplacian_determinant_closed_form(d: f64, k: usize) -> f64 {
    let lambda = (-d / 2.0).acos();
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * ((k as f64 + 1.0) * lambda).sin() / lambda.sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zp(e: f64, eta: f64) -> SpectralParameter {
        SpectralParameter::new(e, eta).unwrap()
    }

    #[test]
    fn laplacian_small_cases() {
        let l1 = laplacian_1d(1);
        assert_eq!(l1.n(), 1);
        assert!(l1.is_zero());
        let l2 = laplacian_1d(2);
        assert_eq!(l2.get(0, 1), 1.0);
        assert_eq!(l2.get(1, 0), 1.0);
        assert_eq!(l2.get(0, 0), 0.0);
        assert_eq!(l2.get(1, 1), 0.0);
    }

    #[test]
    fn beta_limit_entries() {
        assert!(beta_limit_matrix(1).is_zero());
        assert!((beta_limit_matrix(2).get(0, 1) - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((beta_limit_matrix(4).get(0, 1) - 1.732_050_807_568_877).abs() < 1e-12);
        assert!((beta_limit_matrix(4).get(2, 3) - 2.0 * 0.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_scalar_and_two_by_two() {
        assert!((green_closed_form(1, zp(0.0, 1.0), 0, 0).unwrap() - Complex64::i()).norm() < 1e-14);
        // z = -3 is real; approach it from above, the resolvent is continuous there.
        let z = zp(-3.0, 1e-13);
        let g11 = green_closed_form(2, z, 0, 0).unwrap();
        let g12 = green_closed_form(2, z, 0, 1).unwrap();
        assert!((g11 - Complex64::new(3.0 / 8.0, 0.0)).norm() < 1e-10);
        assert!((g12 - Complex64::new(-1.0 / 8.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn closed_form_is_symmetric_and_branch_invariant() {
        let ctx = ClosedFormContext::new(37, zp(0.7, 0.05)).unwrap();
        for i in 0..37 {
            for j in 0..37 {
                assert!((ctx.entry(i, j) - ctx.entry(j, i)).norm() < 1e-13);
            }
        }
        // Evaluate the textbook formula with lambda and with -lambda directly.
        let n = 12usize;
        for (e, eta) in [(0.3, 0.2), (-1.1, 0.4), (1.6, 0.9), (0.0, 0.05)] {
            let z = zp(e, eta);
            let lam = (z.z() / 2.0).acos();
            let formula = |l: Complex64, i: usize, j: usize| {
                let m = (n + 1) as f64;
                let (i, j) = ((i + 1) as f64, (j + 1) as f64);
                let num = ((m - (j - i).abs()) * l).cos() - ((m - j - i) * l).cos();
                num / (2.0 * l.sin() * (m * l).sin())
            };
            for (i, j) in [(0, 0), (2, 5), (7, 3), (11, 11)] {
                let a = formula(lam, i, j);
                let b = formula(-lam, i, j);
                let c = ClosedFormContext::new(n, z).unwrap().entry(i, j);
                assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
                assert!((a - c).norm() < 1e-11 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn closed_form_survives_large_n_eta() {
        // N * eta ~ 4000: the naive formula overflows.
        let ctx = ClosedFormContext::new(4096, zp(0.5, 1.0)).unwrap();
        let g = ctx.entry(2000, 2000);
        assert!(g.re.is_finite() && g.im.is_finite());
        let m = stieltjes_arcsine(zp(0.5, 1.0));
        assert!((g - m).norm() < 1e-10);
    }

    #[test]
    fn edge_is_rejected() {
        let z = SpectralParameter::new(2.0, 1e-300).unwrap();
        assert!(matches!(
            ClosedFormContext::new(5, z),
            Err(Error::EdgeSingularity { .. })
        ));
    }

    #[test]
    fn determinant_recursion_matches_closed_form() {
        for &d in &[-1.9, -1.2, -0.3, 0.0, 0.45, 1.1, 1.9] {
            let rec = laplacian_determinants(d, 64);
            for (k, &mk) in rec.iter().enumerate() {
                let cf = laplacian_determinant_closed_form(d, k);
                let scale = mk.abs().max(cf.abs()).max(1.0);
                assert!((mk - cf).abs() <= 1e-10 * scale, "D = {d}, k = {k}: {mk} vs {cf}");
            }
        }
    }

    /// Composite Gauss-Legendre on the arcsine Stieltjes integral after the
    /// substitution x = 2 sin(t), which removes the endpoint singularity.
    fn arcsine_stieltjes_quadrature(z: Complex64) -> Complex64 {
        let nodes = 20_000;
        let h = PI / nodes as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..nodes {
            // midpoint rule in t is spectrally accurate for this periodic integrand
            let t = -PI / 2.0 + (k as f64 + 0.5) * h;
            acc += 1.0 / (Complex64::new(2.0 * t.sin(), 0.0) - z);
        }
        acc * h / PI
    }

    #[test]
    fn arcsine_transform_values() {
        let m = stieltjes_arcsine(zp(0.0, 2.0));
        assert!((m - Complex64::new(0.0, 0.353_553_390_593_273_8)).norm() < 1e-12);
        let q = arcsine_stieltjes_quadrature(Complex64::new(0.0, 2.0));
        assert!((m - q).norm() < 1e-9);
        for (e, eta) in [(0.5, 0.3), (-1.4, 0.1), (1.9, 0.5)] {
            let m = stieltjes_arcsine(zp(e, eta));
            let q = arcsine_stieltjes_quadrature(Complex64::new(e, eta));
            assert!((m - q).norm() < 1e-8, "{e} {eta}");
            let r = stieltjes_arcsine(zp(-e, eta));
            assert!((r + m.conj()).norm() < 1e-14);
        }
        let y = 1e6;
        let m = stieltjes_arcsine(zp(0.0, y));
        assert!((m - Complex64::new(0.0, 1.0 / y)).norm() < 1e-10 / y);
    }

    #[test]
    fn semicircle_transform_values() {
        let m = stieltjes_semicircle(zp(0.0, 1.0));
        assert!((m - Complex64::new(0.0, (5f64.sqrt() - 1.0) / 2.0)).norm() < 1e-14);
        let y = 1e6;
        let m = stieltjes_semicircle(zp(0.0, y));
        assert!((m.im - 1.0 / y).abs() < 1e-12 / y);
        for a in 0..10 {
            for b in 0..10 {
                let z = zp(-3.0 + 0.6 * a as f64, 0.01 + 0.2 * b as f64);
                let m = stieltjes_semicircle(z);
                assert!(m.im > 0.0);
                assert!((m * m + z.z() * m + 1.0).norm() < 1e-12);
                assert!((m - 1.0 / (-z.z() - m)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn classical_locations_invert_the_cdf() {
        let g = classical_locations(4).unwrap();
        assert!((g[0] - 0.765_366_864_730_179_9).abs() < 1e-12);
        assert!((g[1] - 1.847_759_065_022_573_5).abs() < 1e-12);
        // quadrature oracle for N int_0^gamma rho = i - 1/2
        for (i, &gamma) in g.iter().enumerate() {
            let steps = 200_000;
            let h = gamma / steps as f64;
            let integral: f64 = (0..steps)
                .map(|k| arcsine_density((k as f64 + 0.5) * h) * h)
                .sum();
            assert!((4.0 * integral - (i as f64 + 0.5)).abs() < 1e-6);
        }
        let g = classical_locations(200).unwrap();
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[0] > 0.0 && *g.last().unwrap() < 2.0);
        assert!(classical_locations(5).is_err());
    }

    #[test]
    fn wigner_moments_and_determinism() {
        let n = 200;
        let w = wigner(n, 11, WignerDiagonal::Uniform);
        assert_eq!(w, wigner(n, 11, WignerDiagonal::Uniform));
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut off = Vec::new();
        for i in 0..n {
            for j in 0..n {
                sum += w.get(i, j);
                count += 1;
                if i < j {
                    off.push(w.get(i, j));
                }
            }
        }
        let mean = sum / count as f64;
        assert!(mean.abs() < 3.0 / n as f64, "mean {mean}");
        let var = off.iter().map(|v| v * v).sum::<f64>() / off.len() as f64;
        assert!((var * n as f64 - 1.0).abs() < 0.15, "var {var}");
    }

    #[test]
    fn offdiag_ratio_trivial_offset() {
        assert_eq!(offdiag_imag_ratio(zp(0.3, 0.01), 100, 0).unwrap(), Complex64::new(1.0, 0.0));
    }
}

//! Eigenvalues and eigenvectors of banded symmetric matrices, and the
//! spectral statistics built on them.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::band::BandedSymmetricMatrix;
use crate::domain::{RemovalSet, SpectralParameter};
use crate::error::{invalid, Error, Result};
use crate::models::{arcsine_cdf, arcsine_density, classical_locations};
use crate::resolvent::{stieltjes_trace, BandGreen, BandLu};

/// Absolute tolerance of bisection.
pub const BISECTION_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one cluster.
pub const CLUSTER_GAP: f64 = 1e-10;
/// Fixed shift offset used by inverse iteration.
pub const INVERSE_ITERATION_JITTER: f64 = 1e-12;

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len(), diag.len().saturating_sub(1), "off-diagonal length");
        Self { diag, off }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.off
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn to_band(&self) -> BandedSymmetricMatrix {
        let n = self.n();
        let mut bands = vec![self.diag.clone()];
        if n > 1 {
            bands.push(self.off.clone());
        }
        BandedSymmetricMatrix::from_bands(n, bands).expect("consistent lengths")
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            out[i][i] = self.diag[i];
            if i + 1 < n {
                out[i][i + 1] = self.off[i];
                out[i + 1][i] = self.off[i];
            }
        }
        out
    }

    /// Interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        let pad = 1e-10 * (1.0 + lo.abs().max(hi.abs()));
        (lo - pad, hi + pad)
    }
}

/// Orthogonally similar tridiagonal matrix.
///
/// Bandwidth 0 and 1 inputs are copied. Wider bands are reduced by Givens
/// rotations, chasing each bulge off the end of the matrix before the next
/// element is annihilated.
pub fn reduce_to_tridiagonal(h: &BandedSymmetricMatrix) -> Tridiagonal {
    let n = h.n();
    let k = h.bandwidth();
    if k <= 1 || n <= 2 {
        let off = (0..n.saturating_sub(1)).map(|i| h.get(i, i + 1)).collect();
        return Tridiagonal::new(h.diagonal().to_vec(), off);
    }
    let mut a = Work::new(h);
    for j in 0..n - 2 {
        for d in (2..=k).rev() {
            let i = j + d;
            if i >= n || a.get(i, j) == 0.0 {
                continue;
            }
            a.annihilate(i, j);
            let mut row = i + k;
            let mut col = i - 1;
            while row < n {
                if a.get(row, col) != 0.0 {
                    a.annihilate(row, col);
                }
                col = row - 1;
                row += k;
            }
        }
    }
    let diag = (0..n).map(|i| a.get(i, i)).collect();
    let off = (0..n - 1).map(|i| a.get(i + 1, i)).collect();
    Tridiagonal::new(diag, off)
}

/// Full-storage band with one extra diagonal for the bulge.
struct Work {
    n: usize,
    w: usize,
    data: Vec<f64>,
}

impl Work {
    fn new(h: &BandedSymmetricMatrix) -> Self {
        let n = h.n();
        let w = h.bandwidth() + 1;
        let mut out = Self {
            n,
            w,
            data: vec![0.0; n * (2 * w + 1)],
        };
        for (i, j, v) in h.upper_entries() {
            out.set(i, j, v);
            out.set(j, i, v);
        }
        out
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let d = j as isize - i as isize;
        if d.unsigned_abs() > self.w || i >= self.n || j >= self.n {
            None
        } else {
            Some(i * (2 * self.w + 1) + (d + self.w as isize) as usize)
        }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        match self.slot(i, j) {
            Some(s) => self.data[s] = v,
            None => debug_assert!(v == 0.0, "fill outside working band at ({i}, {j})"),
        }
    }

    /// Rotates planes `(i - 1, i)` so that entry `(i, j)` (and `(j, i)`) vanishes.
    fn annihilate(&mut self, i: usize, j: usize) {
        let p = i - 1;
        let (x, y) = (self.get(p, j), self.get(i, j));
        let r = x.hypot(y);
        if r == 0.0 {
            return;
        }
        let (c, s) = (x / r, y / r);
        let lo = p.saturating_sub(self.w);
        let hi = (i + self.w).min(self.n - 1);
        for col in lo..=hi {
            let (u, v) = (self.get(p, col), self.get(i, col));
            self.set(p, col, c * u + s * v);
            self.set(i, col, -s * u + c * v);
        }
        for row in lo..=hi {
            let (u, v) = (self.get(row, p), self.get(row, i));
            self.set(row, p, c * u + s * v);
            self.set(row, i, -s * u + c * v);
        }
        self.set(i, j, 0.0);
        self.set(j, i, 0.0);
    }
}

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count(t: &Tridiagonal, x: f64) -> usize {
    let scale = t.diag.iter().chain(&t.off).fold(1.0f64, |m, v| m.max(v.abs()));
    let pivmin = f64::MIN_POSITIVE.sqrt() * scale;
    let mut count = 0;
    let mut d = t.diag[0] - x;
    if d.abs() < pivmin {
        d = -pivmin;
    }
    if d < 0.0 {
        count += 1;
    }
    for i in 1..t.n() {
        let b = t.off[i - 1];
        d = t.diag[i] - x - b * b / d;
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Number of eigenvalues in `[a, b)`.
pub fn eigen_count(t: &Tridiagonal, a: f64, b: f64) -> usize {
    if b <= a {
        return 0;
    }
    sturm_count(t, b) - sturm_count(t, a)
}

/// Sorted eigenvalues in `[lo, hi)`, or all of them, by Sturm bisection to
/// absolute tolerance [`BISECTION_TOL`].
pub fn eigenvalues_bisection(t: &Tridiagonal, interval: Option<(f64, f64)>) -> Vec<f64> {
    if t.n() == 0 {
        return Vec::new();
    }
    let (lo, hi) = interval.unwrap_or_else(|| t.gershgorin());
    let mut out = Vec::new();
    if hi <= lo {
        return out;
    }
    let (clo, chi) = (sturm_count(t, lo), sturm_count(t, hi));
    bisect(t, lo, hi, clo, chi, &mut out);
    out
}

fn bisect(t: &Tridiagonal, lo: f64, hi: f64, clo: usize, chi: usize, out: &mut Vec<f64>) {
    if chi == clo {
        return;
    }
    let mid = 0.5 * (lo + hi);
    let tol = BISECTION_TOL.max(4.0 * f64::EPSILON * lo.abs().max(hi.abs()));
    if hi - lo <= tol || mid <= lo || mid >= hi {
        out.extend(std::iter::repeat_n(mid, chi - clo));
        return;
    }
    let cm = sturm_count(t, mid);
    bisect(t, lo, mid, clo, cm, out);
    bisect(t, mid, hi, cm, chi, out);
}

/// Unit eigenvector of `h` for an eigenvalue `lambda` accurate to about 1e-8.
///
/// Shifted inverse iteration with at most 5 solves per start vector and up
/// to 3 restarts from fresh random vectors.
pub fn eigenvector(h: &BandedSymmetricMatrix, lambda: f64, seed: u64) -> Result<Vec<f64>> {
    let n = h.n();
    let scale = h.norm_inf().max(1.0);
    let lu = BandLu::factor(h, lambda + INVERSE_ITERATION_JITTER, Some(f64::EPSILON * scale))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = 1e-9 * scale;
    for _restart in 0..=3 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        normalize(&mut v);
        for _ in 0..5 {
            lu.solve_in_place(&mut v);
            if !normalize(&mut v) {
                break;
            }
            if residual(h, &v, lambda) <= target {
                return Ok(v);
            }
        }
    }
    Err(Error::NoConvergence { lambda, restarts: 3 })
}

/// Orthonormal basis of the eigenspace of a cluster of `m` eigenvalues near
/// `lambda`, by inverse subspace iteration.
pub fn cluster_eigenvectors(h: &BandedSymmetricMatrix, lambda: f64, m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let n = h.n();
    let scale = h.norm_inf().max(1.0);
    let lu = BandLu::factor(h, lambda + INVERSE_ITERATION_JITTER, Some(f64::EPSILON * scale))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _restart in 0..=3 {
        let mut basis: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        for _ in 0..5 {
            basis.iter_mut().for_each(|v| lu.solve_in_place(v));
            if !orthonormalize(&mut basis) {
                break;
            }
            if basis.iter().all(|v| residual(h, v, lambda) <= 1e-8 * scale) {
                return Ok(basis);
            }
        }
    }
    Err(Error::NoConvergence { lambda, restarts: 3 })
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

fn orthonormalize(basis: &mut [Vec<f64>]) -> bool {
    for i in 0..basis.len() {
        for _pass in 0..2 {
            for j in 0..i {
                let dot: f64 = basis[i].iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
                let bj = basis[j].clone();
                basis[i].iter_mut().zip(&bj).for_each(|(a, b)| *a -= dot * b);
            }
        }
        if !normalize(&mut basis[i]) {
            return false;
        }
    }
    true
}

/// `||H v - lambda v||_2`.
pub fn residual(h: &BandedSymmetricMatrix, v: &[f64], lambda: f64) -> f64 {
    h.matvec(v)
        .iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Sorted eigenvalues with eigenvectors for selected indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<(usize, Vec<f64>)>,
}

impl SpectralDecomposition {
    /// All eigenvalues of `h`; no eigenvectors.
    pub fn eigenvalues_of(h: &BandedSymmetricMatrix) -> Self {
        Self {
            eigenvalues: eigenvalues_bisection(&reduce_to_tridiagonal(h), None),
            eigenvectors: Vec::new(),
        }
    }

    /// Adds eigenvectors for the given indices; members of a cluster share a
    /// jointly orthonormalized basis.
    pub fn with_eigenvectors(mut self, h: &BandedSymmetricMatrix, indices: &[usize], seed: u64) -> Result<Self> {
        for (idx, v) in eigenvectors_for(h, &self.eigenvalues, indices, seed)? {
            self.eigenvectors.push((idx, v));
        }
        Ok(self)
    }

    /// One eigenvalue per line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "index,eigenvalue")?;
        for (i, v) in self.eigenvalues.iter().enumerate() {
            writeln!(f, "{i},{v:e}")?;
        }
        Ok(())
    }

    /// Eigenvectors as float64 little-endian, one vector per row, in the
    /// order of `eigenvectors`.
    pub fn write_eigenvectors(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (_, v) in &self.eigenvectors {
            for x in v {
                f.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Eigenvectors for `indices` into the sorted `eigenvalues`; clusters of
/// eigenvalues closer than [`CLUSTER_GAP`] get an orthonormal basis.
pub fn eigenvectors_for(
    h: &BandedSymmetricMatrix,
    eigenvalues: &[f64],
    indices: &[usize],
    seed: u64,
) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut out = Vec::with_capacity(indices.len());
    let mut done = vec![false; eigenvalues.len()];
    for &idx in indices {
        if idx >= eigenvalues.len() {
            return Err(invalid(format!("eigenvalue index {idx} out of range")));
        }
        if done[idx] {
            continue;
        }
        let (mut lo, mut hi) = (idx, idx);
        while lo > 0 && eigenvalues[lo] - eigenvalues[lo - 1] < CLUSTER_GAP {
            lo -= 1;
        }
        while hi + 1 < eigenvalues.len() && eigenvalues[hi + 1] - eigenvalues[hi] < CLUSTER_GAP {
            hi += 1;
        }
        let sub_seed = crate::rng::mix64(seed ^ idx as u64);
        if lo == hi {
            out.push((idx, eigenvector(h, eigenvalues[idx], sub_seed)?));
            done[idx] = true;
        } else {
            let center = 0.5 * (eigenvalues[lo] + eigenvalues[hi]);
            let basis = cluster_eigenvectors(h, center, hi - lo + 1, sub_seed)?;
            for (off, v) in basis.into_iter().enumerate() {
                done[lo + off] = true;
                if indices.contains(&(lo + off)) {
                    out.push((lo + off, v));
                }
            }
        }
    }
    Ok(out)
}

/// Outcome of the counting inequality `N_I <= (5/4) N eta Im m(z)` on
/// `I = [E - eta/2, E + eta/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WegnerCheck {
    pub count: usize,
    pub bound: f64,
    pub holds: bool,
}

pub fn wegner_check(h: &BandedSymmetricMatrix, z: SpectralParameter) -> Result<WegnerCheck> {
    let t = reduce_to_tridiagonal(h);
    wegner_check_with(&t, h, z)
}

/// As [`wegner_check`] with the tridiagonal form already available.
pub fn wegner_check_with(t: &Tridiagonal, h: &BandedSymmetricMatrix, z: SpectralParameter) -> Result<WegnerCheck> {
    let (e, eta) = (z.energy(), z.eta());
    let count = eigen_count(t, e - eta / 2.0, e + eta / 2.0);
    let m = stieltjes_trace(h, z)?;
    let bound = 1.25 * h.n() as f64 * eta * m.im;
    Ok(WegnerCheck {
        count,
        bound,
        holds: count as f64 <= bound * (1.0 + 1e-12),
    })
}

/// Largest `|lambda'_i - gamma_i|` over nonnegative eigenvalues in
/// `[0, 2 - kappa]`, with negative eigenvalues mirrored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub max_deviation: f64,
    pub positive_count: usize,
    pub negative_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Pairs the `i`-th smallest nonnegative eigenvalue with `gamma_i` and the
/// `i`-th largest negative eigenvalue with `-gamma_i`; only pairs whose
/// eigenvalue lies within `2 - kappa` in modulus count.
pub fn rigidity_report(eigs: &[f64], n: usize, kappa: f64) -> Result<RigidityReport> {
    let gamma = classical_locations(n)?;
    let limit = 2.0 - kappa;
    let mut pos: Vec<f64> = eigs.iter().copied().filter(|&x| x >= 0.0).collect();
    let mut neg: Vec<f64> = eigs.iter().filter(|&&x| x < 0.0).map(|x| -x).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let mut worst = 0.0f64;
    for side in [&pos, &neg] {
        for (x, g) in side.iter().zip(&gamma) {
            if *x <= limit {
                worst = worst.max((x - g).abs());
            }
        }
    }
    let note = (pos.len() != n / 2 || neg.len() != n / 2).then(|| {
        format!(
            "{} nonnegative and {} negative eigenvalues for N = {n}; paired by rank from 0",
            pos.len(),
            neg.len()
        )
    });
    Ok(RigidityReport {
        max_deviation: worst,
        positive_count: pos.len(),
        negative_count: neg.len(),
        note,
    })
}

/// Sup-norm delocalization over bulk eigenvectors, with the Green-function
/// upper bound `|v_i(k)|^2 <= eta Im G_kk(lambda_i + i eta)` checked at the
/// argmax site and 10 random sites per eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelocalizationReport {
    pub max_sup_norm: f64,
    pub eigenvectors: usize,
    pub green_bound_violations: usize,
    /// Largest `|v_i(k)|^2 / (eta Im G_kk)` over tested pairs.
    pub worst_green_ratio: f64,
    /// Indices whose eigenvector failed to converge.
    pub failed: Vec<usize>,
}

pub fn delocalization_report(
    h: &BandedSymmetricMatrix,
    kappa: f64,
    removal: &RemovalSet,
    eta: f64,
    seed: u64,
) -> Result<DelocalizationReport> {
    let eigs = eigenvalues_bisection(&reduce_to_tridiagonal(h), None);
    delocalization_report_with(h, &eigs, kappa, removal, eta, seed)
}

/// As [`delocalization_report`] with the spectrum already computed.
pub fn delocalization_report_with(
    h: &BandedSymmetricMatrix,
    eigs: &[f64],
    kappa: f64,
    removal: &RemovalSet,
    eta: f64,
    seed: u64,
) -> Result<DelocalizationReport> {
    let n = h.n();
    let limit = 2.0 - kappa;
    let indices: Vec<usize> = (0..eigs.len())
        .filter(|&i| eigs[i].abs() <= limit && !removal.contains(eigs[i]))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = DelocalizationReport {
        max_sup_norm: 0.0,
        eigenvectors: 0,
        green_bound_violations: 0,
        worst_green_ratio: 0.0,
        failed: Vec::new(),
    };
    let mut vectors = Vec::with_capacity(indices.len());
    for &idx in &indices {
        match eigenvectors_for(h, eigs, &[idx], seed ^ 0x9e37) {
            Ok(mut v) => vectors.push((idx, v.remove(0).1)),
            Err(Error::NoConvergence { .. }) => report.failed.push(idx),
            Err(e) => return Err(e),
        }
    }
    for (idx, v) in vectors {
        let (kmax, sup) = v
            .iter()
            .enumerate()
            .map(|(k, x)| (k, x.abs()))
            .fold((0, 0.0f64), |acc, (k, x)| if x > acc.1 { (k, x) } else { acc });
        report.max_sup_norm = report.max_sup_norm.max(sup);
        report.eigenvectors += 1;
        let diag = BandGreen::new(h, SpectralParameter::new(eigs[idx], eta)?)?.diagonal();
        let mut sites = vec![kmax];
        sites.extend((0..10).map(|_| rng.random_range(0..n)));
        for k in sites {
            let bound = eta * diag[k].im;
            let val = v[k] * v[k];
            let ratio = if bound > 0.0 { val / bound } else { f64::INFINITY };
            report.worst_green_ratio = report.worst_green_ratio.max(ratio);
            if val > bound * (1.0 + 1e-8) + 1e-14 {
                report.green_bound_violations += 1;
            }
        }
    }
    Ok(report)
}

/// Resolution of the endpoint grid used by [`empirical_vs_arcsine`].
pub const ARCSINE_GRID: f64 = 1.0 / 1024.0;

/// `sup_I |mu_N(I) - rho(I)|` over half-open intervals `I` inside
/// `[-2 + kappa, 2 - kappa]` whose endpoints lie on a grid of spacing
/// `2^-10` (plus the window ends).
///
/// With `D = F_mu - F_rho` on the grid, the supremum is `max D - min D`; it
/// underestimates the supremum over all intervals by at most
/// `2 * 2^-10 * max rho`.
pub fn empirical_vs_arcsine(eigs: &[f64], n: usize, kappa: f64) -> f64 {
    let (lo, hi) = (-2.0 + kappa, 2.0 - kappa);
    let mut sorted = eigs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let steps = ((hi - lo) / ARCSINE_GRID).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|m| lo + m as f64 * ARCSINE_GRID).collect();
    if *grid.last().unwrap() < hi {
        grid.push(hi);
    }
    let mut ptr = 0;
    let (mut dmax, mut dmin) = (f64::NEG_INFINITY, f64::INFINITY);
    for x in grid {
        while ptr < sorted.len() && sorted[ptr] < x {
            ptr += 1;
        }
        let d = ptr as f64 / n as f64 - arcsine_cdf(x);
        dmax = dmax.max(d);
        dmin = dmin.min(d);
    }
    dmax - dmin
}

/// Supremum over all intervals inside the window, by enumerating every pair
/// of breakpoints. `O(M^2)`; a test oracle for [`empirical_vs_arcsine`].
pub fn empirical_vs_arcsine_exact(eigs: &[f64], n: usize, kappa: f64) -> f64 {
    let (lo, hi) = (-2.0 + kappa, 2.0 - kappa);
    let mut pts: Vec<f64> = eigs.iter().copied().filter(|&x| x > lo && x < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    let below = |x: f64, inclusive: bool| {
        eigs.iter().filter(|&&e| if inclusive { e <= x } else { e < x }).count() as f64 / n as f64
    };
    let mut best = 0.0f64;
    // F_mu is right-continuous with jumps at eigenvalues; both one-sided
    // values at each breakpoint are candidates.
    let vals: Vec<f64> = pts
        .iter()
        .flat_map(|&x| [below(x, false) - arcsine_cdf(x), below(x, true) - arcsine_cdf(x)])
        .collect();
    for a in &vals {
        for b in &vals {
            best = best.max((a - b).abs());
        }
    }
    best
}

/// Upper bound on the arcsine density over the window.
pub fn arcsine_window_max_density(kappa: f64) -> f64 {
    arcsine_density(2.0 - kappa)
}

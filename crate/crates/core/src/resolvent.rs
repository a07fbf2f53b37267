//! Green functions of banded symmetric matrices.
//!
//! Two engines are provided. [`ShiftedBandFactorization`] is a banded LU with
//! partial pivoting of `H - z` and yields arbitrary entries column by column.
//! [`BandGreen`] runs the block-tridiagonal recursion on blocks of size
//! `max(K, 1)` and yields every entry within the band, including the full
//! diagonal, in `O(N K^3)`; traces go through it.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::band::BandedSymmetricMatrix;
use crate::domain::SpectralParameter;
use crate::error::{invalid, Error, Result};

const PIVOT_FLOOR: f64 = 1e-300;
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub(crate) trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + PartialEq
    + Send
    + Sync
    + std::fmt::Debug
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        ZERO
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Banded LU with partial pivoting in the layout of LAPACK `gbtrf`: after
/// factorization row `i` of `U` occupies columns `i..=i + 2K`.
#[derive(Debug, Clone)]
pub(crate) struct BandLu<T: Scalar> {
    n: usize,
    k: usize,
    width: usize,
    rows: Vec<T>,
    mult: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> BandLu<T> {
    /// Factorizes `H - shift`. With `perturb`, tiny pivots are replaced by
    /// `perturb` instead of failing (inverse iteration wants this).
    pub(crate) fn factor(h: &BandedSymmetricMatrix, shift: T, perturb: Option<f64>) -> Result<Self> {
        let n = h.n();
        let k = h.bandwidth();
        let width = 3 * k + 1;
        let mut rows = vec![T::zero(); n * width];
        let at = |i: usize, c: usize| i * width + (c + k - i);
        for i in 0..n {
            for c in i.saturating_sub(k)..=(i + k).min(n - 1) {
                let mut v = T::from_real(h.get(i, c));
                if c == i {
                    v -= shift;
                }
                rows[at(i, c)] = v;
            }
        }
        let mut mult = vec![T::zero(); n * k];
        let mut piv = vec![0; n];
        for col in 0..n {
            let last = (col + k).min(n - 1);
            let mut p = col;
            let mut best = rows[at(col, col)].modulus();
            for r in col + 1..=last {
                let m = rows[at(r, col)].modulus();
                if m > best {
                    best = m;
                    p = r;
                }
            }
            if best < PIVOT_FLOOR {
                match perturb {
                    Some(eps) => rows[at(col, col)] = T::from_real(eps),
                    None => return Err(Error::Singular { row: col, pivot: best }),
                }
            }
            piv[col] = p;
            let right = (col + 2 * k).min(n - 1);
            if p != col {
                for c in col..=right {
                    rows.swap(at(col, c), at(p, c));
                }
            }
            let pivot = rows[at(col, col)];
            for r in col + 1..=last {
                let m = rows[at(r, col)] / pivot;
                mult[col * k + (r - col - 1)] = m;
                rows[at(r, col)] = T::zero();
                if m == T::zero() {
                    continue;
                }
                for c in col + 1..=right {
                    let u = rows[at(col, c)];
                    rows[at(r, c)] -= m * u;
                }
            }
        }
        Ok(Self {
            n,
            k,
            width,
            rows,
            mult,
            piv,
        })
    }

    pub(crate) fn solve_in_place(&self, b: &mut [T]) {
        let (n, k, width) = (self.n, self.k, self.width);
        assert_eq!(b.len(), n);
        for col in 0..n {
            let p = self.piv[col];
            if p != col {
                b.swap(col, p);
            }
            let bc = b[col];
            if bc == T::zero() {
                continue;
            }
            for r in col + 1..=(col + k).min(n - 1) {
                let m = self.mult[col * k + (r - col - 1)];
                b[r] -= m * bc;
            }
        }
        for i in (0..n).rev() {
            let base = i * width + k - i;
            let mut acc = b[i];
            for c in i + 1..=(i + 2 * k).min(n - 1) {
                acc -= self.rows[base + c] * b[c];
            }
            b[i] = acc / self.rows[base + i];
        }
    }
}

/// Banded LU factorization of `H - z`.
#[derive(Debug, Clone)]
pub struct ShiftedBandFactorization {
    z: SpectralParameter,
    lu: BandLu<Complex64>,
}

/// Factorizes `H - z` with partial pivoting; fill is confined to `K` extra
/// superdiagonals.
pub fn factorize(h: &BandedSymmetricMatrix, z: SpectralParameter) -> Result<ShiftedBandFactorization> {
    let lu = BandLu::factor(h, z.z(), None)?;
    Ok(ShiftedBandFactorization { z, lu })
}

impl ShiftedBandFactorization {
    pub fn n(&self) -> usize {
        self.lu.n
    }

    pub fn z(&self) -> SpectralParameter {
        self.z
    }

    /// Bandwidth of `U` after pivoting fill.
    pub fn effective_bandwidth(&self) -> usize {
        2 * self.lu.k
    }

    /// Solves `(H - z) x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.lu.solve_in_place(&mut x);
        x
    }

    /// Column `j` of `G(z)`.
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        let mut x = vec![ZERO; self.n()];
        x[j] = ONE;
        self.lu.solve_in_place(&mut x);
        x
    }

    /// The full matrix `G(z)`, as rows (equal to columns by symmetry).
    pub fn full(&self) -> Vec<Vec<Complex64>> {
        (0..self.n()).map(|j| self.column(j)).collect()
    }
}

/// Entries `G_ij` for the requested pairs.
///
/// Each pair is read from a column that is already solved when possible, so
/// requesting `(i, j)` and `(j, i)` costs one solve.
pub fn green_entries(
    fact: &ShiftedBandFactorization,
    pairs: &[(usize, usize)],
) -> Result<BTreeMap<(usize, usize), Complex64>> {
    let n = fact.n();
    let mut columns: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for &(i, j) in pairs {
        if i >= n || j >= n {
            return Err(invalid(format!("entry ({i}, {j}) out of range for N = {n}")));
        }
        let value = if let Some(col) = columns.get(&j) {
            col[i]
        } else if let Some(col) = columns.get(&i) {
            col[j]
        } else {
            let col = fact.column(j);
            let v = col[i];
            columns.insert(j, col);
            v
        };
        out.insert((i, j), value);
    }
    Ok(out)
}

fn mat_mul(a: &[Complex64], b: &[Complex64], m: usize, k: usize, n: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; m * n];
    for i in 0..m {
        for l in 0..k {
            let a_il = a[i * k + l];
            if a_il == ZERO {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += a_il * b[l * n + j];
            }
        }
    }
    out
}

fn transpose(a: &[Complex64], m: usize, n: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a[i * n + j];
        }
    }
    out
}

fn mat_inv(a: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    if n == 1 {
        if a[0].norm() < PIVOT_FLOOR {
            return Err(Error::Singular { row: 0, pivot: a[0].norm() });
        }
        return Ok(vec![ONE / a[0]]);
    }
    let mut m = a.to_vec();
    let mut inv = vec![ZERO; n * n];
    for i in 0..n {
        inv[i * n + i] = ONE;
    }
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| m[x * n + col].norm().total_cmp(&m[y * n + col].norm()))
            .unwrap_or(col);
        let pivot = m[p * n + col];
        if pivot.norm() < PIVOT_FLOOR {
            return Err(Error::Singular { row: col, pivot: pivot.norm() });
        }
        if p != col {
            for j in 0..n {
                m.swap(col * n + j, p * n + j);
                inv.swap(col * n + j, p * n + j);
            }
        }
        let s = ONE / pivot;
        for j in 0..n {
            m[col * n + j] *= s;
            inv[col * n + j] *= s;
        }
        for r in 0..n {
            let f = m[r * n + col];
            if r == col || f == ZERO {
                continue;
            }
            for j in 0..n {
                let (mc, ic) = (m[col * n + j], inv[col * n + j]);
                m[r * n + j] -= f * mc;
                inv[r * n + j] -= f * ic;
            }
        }
    }
    Ok(inv)
}

/// Band of `G(z)` from the block-tridiagonal recursion.
///
/// With blocks of size `b = max(K, 1)` the matrix `H - z` is block
/// tridiagonal. Left and right Schur complements `S^L_p`, `S^R_p` have
/// imaginary part at most `-eta`, so the recursion is stable for every
/// `eta > 0`, and
/// `G_pp = (S^L_p + S^R_p - (D_p - z))^{-1}`,
/// `G_{p,p+1} = -G_pp U_p (S^R_{p+1})^{-1}`.
#[derive(Debug, Clone)]
pub struct BandGreen {
    n: usize,
    b: usize,
    diag_blocks: Vec<Vec<Complex64>>,
    upper_blocks: Vec<Vec<Complex64>>,
}

impl BandGreen {
    pub fn new(h: &BandedSymmetricMatrix, z: SpectralParameter) -> Result<Self> {
        let n = h.n();
        let zc = z.z();
        let b = h.bandwidth().max(1);
        if b == 1 {
            return Self::tridiagonal(h, zc);
        }
        let blocks = n.div_ceil(b);
        // Padding sites beyond N are decoupled with diagonal 0.
        let entry = |i: usize, j: usize| -> f64 {
            if i < n && j < n {
                h.get(i, j)
            } else {
                0.0
            }
        };
        let d_block = |p: usize| -> Vec<Complex64> {
            let mut d = vec![ZERO; b * b];
            for r in 0..b {
                for c in 0..b {
                    d[r * b + c] = Complex64::new(entry(p * b + r, p * b + c), 0.0);
                }
                d[r * b + r] -= zc;
            }
            d
        };
        let u_block = |p: usize| -> Vec<Complex64> {
            let mut u = vec![ZERO; b * b];
            for r in 0..b {
                for c in 0..b {
                    u[r * b + c] = Complex64::new(entry(p * b + r, (p + 1) * b + c), 0.0);
                }
            }
            u
        };
        let ds: Vec<Vec<Complex64>> = (0..blocks).map(d_block).collect();
        let us: Vec<Vec<Complex64>> = (0..blocks.saturating_sub(1)).map(u_block).collect();

        let mut sl: Vec<Vec<Complex64>> = Vec::with_capacity(blocks);
        let mut inv_l: Vec<Complex64> = Vec::new();
        for p in 0..blocks {
            let mut s = ds[p].clone();
            if p > 0 {
                let u = &us[p - 1];
                let corr = mat_mul(&transpose(u, b, b), &mat_mul(&inv_l, u, b, b, b), b, b, b);
                s.iter_mut().zip(&corr).for_each(|(x, c)| *x -= c);
            }
            inv_l = mat_inv(&s, b)?;
            sl.push(s);
        }
        let mut inv_r: Vec<Vec<Complex64>> = vec![Vec::new(); blocks];
        for p in (0..blocks).rev() {
            let mut s = ds[p].clone();
            if p + 1 < blocks {
                let u = &us[p];
                let corr = mat_mul(u, &mat_mul(&inv_r[p + 1], &transpose(u, b, b), b, b, b), b, b, b);
                s.iter_mut().zip(&corr).for_each(|(x, c)| *x -= c);
            }
            inv_r[p] = mat_inv(&s, b)?;
        }
        let mut diag_blocks = Vec::with_capacity(blocks);
        let mut upper_blocks = Vec::with_capacity(blocks.saturating_sub(1));
        for p in 0..blocks {
            let mut m = sl[p].clone();
            if p + 1 < blocks {
                let u = &us[p];
                let corr = mat_mul(u, &mat_mul(&inv_r[p + 1], &transpose(u, b, b), b, b, b), b, b, b);
                m.iter_mut().zip(&corr).for_each(|(x, c)| *x -= c);
            }
            let g = mat_inv(&m, b)?;
            if p + 1 < blocks {
                let mut up = mat_mul(&mat_mul(&g, &us[p], b, b, b), &inv_r[p + 1], b, b, b);
                up.iter_mut().for_each(|x| *x = -*x);
                upper_blocks.push(up);
            }
            diag_blocks.push(g);
        }
        Ok(Self {
            n,
            b,
            diag_blocks,
            upper_blocks,
        })
    }

    fn tridiagonal(h: &BandedSymmetricMatrix, z: Complex64) -> Result<Self> {
        let n = h.n();
        let a = h.diagonal();
        let off: Vec<f64> = if h.bandwidth() >= 1 { h.band(1).to_vec() } else { vec![0.0; n - 1] };
        let check = |v: Complex64, row: usize| -> Result<Complex64> {
            if v.norm() < PIVOT_FLOOR {
                Err(Error::Singular { row, pivot: v.norm() })
            } else {
                Ok(v)
            }
        };
        let mut left = vec![ZERO; n];
        for i in 0..n {
            let mut s = Complex64::new(a[i], 0.0) - z;
            if i > 0 {
                s -= off[i - 1] * off[i - 1] / left[i - 1];
            }
            left[i] = check(s, i)?;
        }
        let mut right = vec![ZERO; n];
        for i in (0..n).rev() {
            let mut s = Complex64::new(a[i], 0.0) - z;
            if i + 1 < n {
                s -= off[i] * off[i] / right[i + 1];
            }
            right[i] = check(s, i)?;
        }
        let mut diag_blocks = Vec::with_capacity(n);
        let mut upper_blocks = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let mut m = left[i];
            if i + 1 < n {
                m -= off[i] * off[i] / right[i + 1];
            }
            let g = ONE / check(m, i)?;
            if i + 1 < n {
                upper_blocks.push(vec![-g * off[i] / right[i + 1]]);
            }
            diag_blocks.push(vec![g]);
        }
        Ok(Self {
            n,
            b: 1,
            diag_blocks,
            upper_blocks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `G_ij` for `|i - j|` up to the block size; `None` further out.
    pub fn entry(&self, i: usize, j: usize) -> Option<Complex64> {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        if hi >= self.n {
            return None;
        }
        let (p, q) = (lo / self.b, hi / self.b);
        let (r, c) = (lo % self.b, hi % self.b);
        match q - p {
            0 => Some(self.diag_blocks[p][r * self.b + c]),
            1 => Some(self.upper_blocks[p][r * self.b + c]),
            _ => None,
        }
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.diag_blocks[i / self.b][(i % self.b) * (self.b + 1)]).collect()
    }

    /// `(1/N) Tr G`.
    pub fn trace(&self) -> Complex64 {
        let sum: Complex64 = (0..self.n)
            .map(|i| self.diag_blocks[i / self.b][(i % self.b) * (self.b + 1)])
            .sum();
        sum / self.n as f64
    }
}

/// Stieltjes transform `m_N(z) = (1/N) Tr G(z)`.
pub fn stieltjes_trace(h: &BandedSymmetricMatrix, z: SpectralParameter) -> Result<Complex64> {
    Ok(BandGreen::new(h, z)?.trace())
}

/// Same quantity via `N` LU column solves; slower, kept as a cross-check.
pub fn stieltjes_trace_lu(h: &BandedSymmetricMatrix, z: SpectralParameter) -> Result<Complex64> {
    let fact = factorize(h, z)?;
    let sum: Complex64 = (0..h.n()).map(|j| fact.column(j)[j]).sum();
    Ok(sum / h.n() as f64)
}

/// One requested entry of a [`GreenReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryValue {
    pub i: usize,
    pub j: usize,
    pub value: Complex64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
}

/// Green-function entries and trace at one spectral parameter. Complex
/// numbers serialize as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenReport {
    pub z: SpectralParameter,
    pub entries: Vec<EntryValue>,
    pub trace: Complex64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_reference: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_deviation: Option<f64>,
}

impl GreenReport {
    /// Builds a report for `pairs`; `reference` supplies optional oracle
    /// entries and `trace_reference` an oracle trace.
    pub fn compute(
        h: &BandedSymmetricMatrix,
        z: SpectralParameter,
        pairs: &[(usize, usize)],
        reference: Option<&dyn Fn(usize, usize) -> Result<Complex64>>,
        trace_reference: Option<Complex64>,
    ) -> Result<Self> {
        let fact = factorize(h, z)?;
        let values = green_entries(&fact, pairs)?;
        let mut entries = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            let value = values[&(i, j)];
            let reference = match reference {
                Some(f) => Some(f(i, j)?),
                None => None,
            };
            entries.push(EntryValue {
                i,
                j,
                value,
                reference,
                deviation: reference.map(|r| (value - r).norm()),
            });
        }
        let trace = stieltjes_trace(h, z)?;
        Ok(Self {
            z,
            entries,
            trace,
            trace_reference,
            trace_deviation: trace_reference.map(|r| (trace - r).norm()),
        })
    }

    pub fn max_deviation(&self) -> Option<f64> {
        self.entries
            .iter()
            .filter_map(|e| e.deviation)
            .fold(None, |m, d| Some(m.map_or(d, |m: f64| m.max(d))))
    }
}

/// Scaled Ward residual `|sum_j |G_jk|^2 - Im G_kk / eta| / max(1, Im G_kk / eta)`.
pub fn ward_residual(h: &BandedSymmetricMatrix, z: SpectralParameter, k: usize) -> Result<f64> {
    if k >= h.n() {
        return Err(invalid(format!("index {k} out of range")));
    }
    let col = factorize(h, z)?.column(k);
    let lhs: f64 = col.iter().map(|g| g.norm_sqr()).sum();
    let rhs = col[k].im / z.eta();
    Ok((lhs - rhs).abs() / rhs.abs().max(1.0))
}

/// Largest entry of `(G - G^inf) + G A G^inf` where `G` is the resolvent of
/// `H^inf + A`.
///
/// All entries are checked for `N <= 512`; otherwise 64 entries drawn with
/// the given seed.
pub fn resolvent_identity_residual(
    h_inf: &BandedSymmetricMatrix,
    a: &BandedSymmetricMatrix,
    z: SpectralParameter,
    seed: u64,
) -> Result<f64> {
    let n = h_inf.n();
    let h = h_inf.add(a)?;
    let f = factorize(&h, z)?;
    let f_inf = factorize(h_inf, z)?;
    let pairs: Vec<(usize, usize)> = if n <= 512 {
        (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..64).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect()
    };
    let mut by_column: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, j) in pairs {
        by_column.entry(j).or_default().push(i);
    }
    let mut worst = 0.0f64;
    for (j, rows) in by_column {
        let g = f.column(j);
        let g_inf = f_inf.column(j);
        let re: Vec<f64> = g_inf.iter().map(|c| c.re).collect();
        let im: Vec<f64> = g_inf.iter().map(|c| c.im).collect();
        let (are, aim) = (a.matvec(&re), a.matvec(&im));
        let ag: Vec<Complex64> = are.into_iter().zip(aim).map(|(r, i)| Complex64::new(r, i)).collect();
        let gag = f.solve(&ag);
        for i in rows {
            worst = worst.max((g[i] - g_inf[i] + gag[i]).norm());
        }
    }
    Ok(worst)
}

/// Outcome of the two comparison inequalities between `G(E + i eta)` and
/// `G'(E + i (eta + eta'))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaComparison {
    /// `|G_jk - G'_jk| <= eta'/(2 eta) (|Im G'_jj| + |Im G_kk|)` at every tested pair.
    pub entry_bound_holds: bool,
    /// `min(|G'_jj|, |G_jj|) / max(...) > 1 - eta'/eta` at every tested `j`
    /// (checked as `>=` up to rounding).
    pub ratio_bound_holds: bool,
    /// Largest `lhs - rhs` of the entry bound (non-positive when it holds).
    pub entry_margin: f64,
    /// Largest `(1 - eta'/eta) - ratio` (non-positive when it holds).
    pub ratio_margin: f64,
}

/// Checks both comparison inequalities at all pairs for `N <= 256`, and at
/// 256 sampled columns' worth of pairs otherwise.
pub fn eta_comparison_check(
    h: &BandedSymmetricMatrix,
    e: f64,
    eta: f64,
    eta_prime: f64,
) -> Result<EtaComparison> {
    if eta_prime <= 0.0 {
        return Err(invalid("eta_prime must be positive"));
    }
    let n = h.n();
    let z = SpectralParameter::new(e, eta)?;
    let zp = SpectralParameter::new(e, eta + eta_prime)?;
    let f = factorize(h, z)?;
    let fp = factorize(h, zp)?;
    let cols: Vec<usize> = if n <= 256 {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x05ee_de7a);
        (0..256).map(|_| rng.random_range(0..n)).collect()
    };
    let g_diag: Vec<Complex64>;
    let gp_diag: Vec<Complex64>;
    {
        let bg = BandGreen::new(h, z)?;
        let bgp = BandGreen::new(h, zp)?;
        g_diag = bg.diagonal();
        gp_diag = bgp.diagonal();
    }
    let tol = 1e-12;
    let mut entry_margin = f64::NEG_INFINITY;
    for &k in &cols {
        let g = f.column(k);
        let gp = fp.column(k);
        for j in 0..n {
            let lhs = (g[j] - gp[j]).norm();
            let rhs = eta_prime / (2.0 * eta) * (gp_diag[j].im.abs() + g_diag[k].im.abs());
            entry_margin = entry_margin.max(lhs - rhs - tol * rhs.max(1.0));
        }
    }
    let mut ratio_margin = f64::NEG_INFINITY;
    for j in 0..n {
        let (a, b) = (g_diag[j].norm(), gp_diag[j].norm());
        let ratio = a.min(b) / a.max(b);
        ratio_margin = ratio_margin.max((1.0 - eta_prime / eta) - ratio - tol);
    }
    Ok(EtaComparison {
        entry_bound_holds: entry_margin <= 0.0,
        ratio_bound_holds: ratio_margin <= 0.0,
        entry_margin,
        ratio_margin,
    })
}

fn minor_of(h: &BandedSymmetricMatrix, removed: &[usize]) -> Result<(BandedSymmetricMatrix, Vec<usize>)> {
    let n = h.n();
    if removed.iter().any(|&k| k >= n) {
        return Err(invalid("removed index out of range"));
    }
    let minor = h
        .minor(removed)
        .ok_or_else(|| invalid("cannot remove every index"))?;
    let mut drop = vec![false; n];
    removed.iter().for_each(|&k| drop[k] = true);
    let keep = (0..n).filter(|&i| !drop[i]).collect();
    Ok((minor, keep))
}

/// `m^(T)(z) = (1/N) sum_{i not in T} G^(T)_ii` with `N` the size of `H`, not
/// of the minor.
pub fn minor_trace(h: &BandedSymmetricMatrix, removed: &[usize], z: SpectralParameter) -> Result<Complex64> {
    let (minor, _) = minor_of(h, removed)?;
    let sum: Complex64 = BandGreen::new(&minor, z)?.diagonal().into_iter().sum();
    Ok(sum / h.n() as f64)
}

/// `(1/N) sum_i (G^(T)_ik)^2 / G^(T)_kk`, which equals `m^(T) - m^(kT)`.
pub fn minor_trace_increment(
    h: &BandedSymmetricMatrix,
    removed: &[usize],
    k: usize,
    z: SpectralParameter,
) -> Result<Complex64> {
    let (minor, keep) = minor_of(h, removed)?;
    let pos = keep
        .iter()
        .position(|&i| i == k)
        .ok_or_else(|| invalid(format!("index {k} is already removed")))?;
    let col = factorize(&minor, z)?.column(pos);
    let sq: Complex64 = col.iter().map(|g| g * g).sum();
    Ok(sq / col[pos] / h.n() as f64)
}

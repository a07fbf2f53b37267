//! Real symmetric band matrices stored as upper diagonals.

use crate::error::{invalid, Result};

/// Real symmetric matrix whose entries vanish beyond distance `bandwidth`
/// from the diagonal.
///
/// Only the upper diagonals are stored: `bands[d][i]` holds `M[i][i + d]` for
/// `d = 0..=bandwidth`, so band `d` has length `n - d` and the lower triangle is
/// implied. Indices are zero-based throughout the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSymmetricMatrix {
    n: usize,
    bands: Vec<Vec<f64>>,
}

impl BandedSymmetricMatrix {
    /// The `n x n` zero matrix with room for `bandwidth` off-diagonals.
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        let bands = (0..=bandwidth)
            .map(|d| vec![0.0; n.saturating_sub(d)])
            .collect();
        Self { n, bands }
    }

    /// Builds a matrix from explicit upper bands; band `d` must have length `n - d`.
    pub fn from_bands(n: usize, bands: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("matrix dimension must be positive"));
        }
        if bands.is_empty() {
            return Err(invalid("at least the main diagonal is required"));
        }
        for (d, band) in bands.iter().enumerate() {
            if band.len() != n.saturating_sub(d) {
                return Err(invalid(format!(
                    "band {d} has length {} but expected {}",
                    band.len(),
                    n.saturating_sub(d)
                )));
            }
        }
        Ok(Self { n, bands })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    /// Upper band `d`, i.e. the entries `M[i][i + d]`.
    pub fn band(&self, d: usize) -> &[f64] {
        &self.bands[d]
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.bands[0]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if hi >= self.n || d >= self.bands.len() {
            return 0.0;
        }
        self.bands[d][lo]
    }

    /// Sets `M[i][j]` and, implicitly, `M[j][i]`.
    ///
    /// Panics if the pair lies outside the stored band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(hi < self.n, "index ({i}, {j}) out of range for n = {}", self.n);
        assert!(
            d < self.bands.len(),
            "entry ({i}, {j}) lies outside bandwidth {}",
            self.bandwidth()
        );
        self.bands[d][lo] = value;
    }

    /// Entrywise sum; the result carries the larger bandwidth.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(invalid(format!(
                "dimension mismatch: {} vs {}",
                self.n, other.n
            )));
        }
        let width = self.bandwidth().max(other.bandwidth());
        let mut out = Self::zeros(self.n, width);
        for (d, band) in out.bands.iter_mut().enumerate() {
            for (i, v) in band.iter_mut().enumerate() {
                let a = self.bands.get(d).map_or(0.0, |b| b[i]);
                let b = other.bands.get(d).map_or(0.0, |b| b[i]);
                *v = a + b;
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let bands = self
            .bands
            .iter()
            .map(|b| b.iter().map(|v| v * factor).collect())
            .collect();
        Self { n: self.n, bands }
    }

    /// Copy with the bandwidth widened to at least `bandwidth` (new bands zero).
    pub fn widened(&self, bandwidth: usize) -> Self {
        let mut out = self.clone();
        while out.bands.len() <= bandwidth {
            let d = out.bands.len();
            out.bands.push(vec![0.0; self.n.saturating_sub(d)]);
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y: Vec<f64> = self.bands[0].iter().zip(x).map(|(a, b)| a * b).collect();
        for (d, band) in self.bands.iter().enumerate().skip(1) {
            for (i, &a) in band.iter().enumerate() {
                y[i] += a * x[i + d];
                y[i + d] += a * x[i];
            }
        }
        y
    }

    pub fn trace(&self) -> f64 {
        self.bands[0].iter().sum()
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0f64; self.n];
        rows.iter_mut()
            .zip(&self.bands[0])
            .for_each(|(r, a)| *r += a.abs());
        for (d, band) in self.bands.iter().enumerate().skip(1) {
            for (i, a) in band.iter().enumerate() {
                rows[i] += a.abs();
                rows[i + d] += a.abs();
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.bands
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.bands.iter().all(|b| b.iter().all(|&v| v == 0.0))
    }

    /// Stored `(i, j, value)` with `i <= j`, band-major.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.bands
            .iter()
            .enumerate()
            .flat_map(|(d, b)| b.iter().enumerate().map(move |(i, &v)| (i, i + d, v)))
    }

    /// Principal submatrix with the rows and columns in `removed` deleted.
    ///
    /// Distances between surviving indices can only shrink, so the bandwidth
    /// is preserved. Returns `None` when every index is removed.
    pub fn minor(&self, removed: &[usize]) -> Option<Self> {
        let mut drop = vec![false; self.n];
        for &k in removed {
            assert!(k < self.n, "removed index {k} out of range");
            drop[k] = true;
        }
        let keep: Vec<usize> = (0..self.n).filter(|&i| !drop[i]).collect();
        if keep.is_empty() {
            return None;
        }
        let m = keep.len();
        let mut out = Self::zeros(m, self.bandwidth());
        for a in 0..m {
            for b in a..m.min(a + self.bandwidth() + 1) {
                let v = self.get(keep[a], keep[b]);
                if v != 0.0 {
                    out.set(a, b, v);
                }
            }
        }
        Some(out)
    }

    /// Dense row-major copy, for oracles and small problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.upper_entries() {
            out[i][j] = v;
            out[j][i] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BandedSymmetricMatrix {
        let mut m = BandedSymmetricMatrix::zeros(5, 2);
        for i in 0..5 {
            m.set(i, i, i as f64 + 1.0);
        }
        m.set(0, 1, -1.0);
        m.set(3, 2, 0.5);
        m.set(1, 3, 2.0);
        m
    }

    #[test]
    fn symmetric_access() {
        let m = sample();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        assert_eq!(m.get(0, 4), 0.0);
        assert_eq!(m.band(2).len(), 3);
    }

    #[test]
    #[should_panic]
    fn set_outside_band_panics() {
        let mut m = BandedSymmetricMatrix::zeros(5, 1);
        m.set(0, 2, 1.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let m = sample();
        let x = [1.0, -2.0, 0.5, 3.0, 1.5];
        let dense = m.to_dense();
        let want: Vec<f64> = dense
            .iter()
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
        assert_eq!(m.matvec(&x), want);
    }

    #[test]
    fn minor_keeps_band_structure() {
        let m = sample();
        let minor = m.minor(&[2]).unwrap();
        assert_eq!(minor.n(), 4);
        assert_eq!(minor.get(1, 2), m.get(1, 3));
        assert_eq!(minor.get(0, 0), 1.0);
        assert!(m.minor(&[0, 1, 2, 3, 4]).is_none());
    }

    #[test]
    fn add_widens() {
        let a = BandedSymmetricMatrix::zeros(4, 0);
        let b = sample().minor(&[4]).unwrap();
        let c = a.add(&b).unwrap();
        assert_eq!(c.bandwidth(), 2);
        assert_eq!(c, b);
    }

    #[test]
    fn from_bands_checks_lengths() {
        assert!(BandedSymmetricMatrix::from_bands(3, vec![vec![0.0; 3], vec![0.0; 3]]).is_err());
        assert!(BandedSymmetricMatrix::from_bands(3, vec![vec![0.0; 3], vec![0.0; 2]]).is_ok());
    }
}

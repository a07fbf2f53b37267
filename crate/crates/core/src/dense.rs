//! Dense symmetric matrices (Wigner model) and dense reference solvers.

use num_complex::Complex64;

use crate::band::BandedSymmetricMatrix;
use crate::error::{Error, Result};
use crate::spectrum::Tridiagonal;

/// Dense real symmetric matrix, row-major, both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymmetric {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn add_banded(&self, band: &BandedSymmetricMatrix) -> Self {
        assert_eq!(band.n(), self.n, "dimension mismatch");
        let mut out = self.clone();
        for (i, j, v) in band.upper_entries() {
            let cur = out.get(i, j);
            out.set(i, j, cur + v);
        }
        out
    }

    /// Principal submatrix without the listed indices.
    pub fn minor(&self, removed: &[usize]) -> Self {
        let mut drop = vec![false; self.n];
        for &k in removed {
            drop[k] = true;
        }
        let keep: Vec<usize> = (0..self.n).filter(|&i| !drop[i]).collect();
        let m = keep.len();
        let mut out = Self::zeros(m);
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                out.data[a * m + b] = self.get(i, j);
            }
        }
        out
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Orthogonally similar tridiagonal matrix by Householder reflections.
    pub fn tridiagonalize(&self) -> Tridiagonal {
        let n = self.n;
        let mut a = self.data.clone();
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        for k in 0..n.saturating_sub(2) {
            let start = k + 1;
            let norm: f64 = (start..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let x0 = a[start * n + k];
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            for i in start..n {
                v[i] = a[i * n + k];
            }
            v[start] -= alpha;
            let vnorm: f64 = (start..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
            if vnorm == 0.0 {
                continue;
            }
            for vi in &mut v[start..n] {
                *vi /= vnorm;
            }
            for i in start..n {
                let row = &a[i * n..(i + 1) * n];
                p[i] = (start..n).map(|j| row[j] * v[j]).sum();
            }
            let kdot: f64 = (start..n).map(|i| v[i] * p[i]).sum();
            for i in start..n {
                p[i] -= kdot * v[i];
            }
            for i in start..n {
                let (vi, wi) = (v[i], p[i]);
                let row = &mut a[i * n..(i + 1) * n];
                for j in start..n {
                    row[j] -= 2.0 * (vi * p[j] + wi * v[j]);
                }
            }
            a[start * n + k] = alpha;
            a[k * n + start] = alpha;
            for i in start + 1..n {
                a[i * n + k] = 0.0;
                a[k * n + i] = 0.0;
            }
        }
        let diag = (0..n).map(|i| a[i * n + i]).collect();
        let off = (0..n.saturating_sub(1)).map(|i| a[(i + 1) * n + i]).collect();
        Tridiagonal::new(diag, off)
    }
}

/// Dense reference solvers, used to cross-check the banded code paths on
/// small problems.
pub mod oracle {
    use super::*;

    /// Inverse of a dense complex matrix by Gauss-Jordan elimination with
    /// partial pivoting.
    pub fn complex_inverse(a: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        let n = a.len();
        let mut m: Vec<Vec<Complex64>> = a.to_vec();
        let mut inv: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                let mut row = vec![Complex64::new(0.0, 0.0); n];
                row[i] = Complex64::new(1.0, 0.0);
                row
            })
            .collect();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
                .unwrap_or(col);
            let pivot = m[piv][col];
            if pivot.norm() < 1e-300 {
                return Err(Error::Singular {
                    row: col,
                    pivot: pivot.norm(),
                });
            }
            m.swap(col, piv);
            inv.swap(col, piv);
            let scale = 1.0 / m[col][col];
            for j in 0..n {
                m[col][j] *= scale;
                inv[col][j] *= scale;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = m[r][col];
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let (mc, ic) = (m[col][j], inv[col][j]);
                    m[r][j] -= f * mc;
                    inv[r][j] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    /// Dense resolvent `(H - z)^{-1}` of a real symmetric matrix.
    pub fn resolvent(h: &[Vec<f64>], z: Complex64) -> Result<Vec<Vec<Complex64>>> {
        let a: Vec<Vec<Complex64>> = h
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        if i == j {
                            Complex64::new(v, 0.0) - z
                        } else {
                            Complex64::new(v, 0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        complex_inverse(&a)
    }

    /// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations, sorted.
    pub fn jacobi_eigenvalues(h: &[Vec<f64>]) -> Vec<f64> {
        let n = h.len();
        let mut a: Vec<Vec<f64>> = h.to_vec();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
            if off <= 1e-30 * scale.max(1e-300) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        eig.sort_by(f64::total_cmp);
        eig
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(n: usize, seed: u64) -> DenseSymmetric {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseSymmetric::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
        m
    }

    #[test]
    fn jacobi_on_known_spectrum() {
        let h = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let e = oracle::jacobi_eigenvalues(&h);
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn householder_preserves_spectrum() {
        let m = random_dense(25, 3);
        let tri = m.tridiagonalize();
        let want = oracle::jacobi_eigenvalues(&m.rows());
        let got = oracle::jacobi_eigenvalues(&tri.to_dense());
        for (a, b) in want.iter().zip(&got) {
            assert!((a - b).abs() < 1e-11);
        }
        assert!((tri.trace() - m.trace()).abs() < 1e-11);
    }

    #[test]
    fn complex_inverse_roundtrip() {
        let m = random_dense(12, 9);
        let z = Complex64::new(0.2, 0.3);
        let g = oracle::resolvent(&m.rows(), z).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..12 {
                    let hik = if i == k { Complex64::new(m.get(i, k), 0.0) - z } else { Complex64::new(m.get(i, k), 0.0) };
                    acc += hik * g[k][j];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((acc - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }
}

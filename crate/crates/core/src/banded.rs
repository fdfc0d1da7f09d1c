//! Direct solvers for banded linear systems.
//!
//! [`SymBanded`] is a real symmetric positive definite matrix stored by its
//! lower band and factored with Cholesky. [`ComplexBandedLu`] factors a
//! general complex band matrix with partial pivoting.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Symmetric banded matrix, lower band stored row by row.
///
/// Row `i` holds columns `i - bw ..= i`; entry `(i, j)` with `j <= i` lives at
/// `data[i * (bw + 1) + (j + bw - i)]`.
#[derive(Debug, Clone)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `value` to entry `(i, j)` (and implicitly `(j, i)`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.data[k] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        if r - c > self.bw {
            return 0.0;
        }
        self.data[self.idx(r, c)]
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place Cholesky factorization `A = L Lᵀ`.
    pub fn cholesky(mut self) -> Result<CholeskyBanded> {
        let bw = self.bw;
        let w = bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // s = A[i][j] - sum_k L[i][k] L[j][k] over the shared band
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = self.data[i * w + (j + bw - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in klo..j {
                    s -= self.data[ri + k] * self.data[rj + k];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::SingularSystem { pivot: i });
                    }
                    self.data[ri + i] = s.sqrt();
                } else {
                    self.data[ri + j] = s / self.data[rj + j];
                }
            }
        }
        Ok(CholeskyBanded { l: self })
    }
}

/// Lower Cholesky factor of a [`SymBanded`] matrix.
#[derive(Debug, Clone)]
pub struct CholeskyBanded {
    l: SymBanded,
}

impl CholeskyBanded {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.l.n;
        let bw = self.l.bw;
        let w = bw + 1;
        let d = &self.l.data;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let ri = i * w + bw - i;
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= d[ri + k] * b[k];
            }
            b[i] = s / d[ri + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..(i + bw + 1).min(n) {
                s -= d[k * w + bw - k + i] * b[k];
            }
            b[i] = s / d[i * w + bw];
        }
    }
}

/// General complex band matrix with `kl` sub- and `ku` super-diagonals,
/// factored by Gaussian elimination with partial (row) pivoting.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku` so that fill-in from row
/// interchanges fits; entry `(i, j)` lives at `i * width + (j + kl - i)`.
#[derive(Debug, Clone)]
pub struct ComplexBanded {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<Complex64>,
}

impl ComplexBanded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, data: vec![Complex64::new(0.0, 0.0); n * width] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: Complex64) {
        debug_assert!(j + self.kl >= i && j <= i + self.ku);
        let w = self.width();
        self.data[i * w + (j + self.kl - i)] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if j + self.kl < i || j > i + self.ku {
            return Complex64::new(0.0, 0.0);
        }
        self.data[i * self.width() + (j + self.kl - i)]
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let w = self.width();
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[i * w + (j + self.kl - i)] * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<ComplexBandedLu> {
        let n = self.n;
        let kl = self.kl;
        let w = self.width();
        let reach = kl + self.ku;
        let mut pivots = vec![0usize; n];
        let mut row_k = vec![Complex64::new(0.0, 0.0); reach + 1];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            // pivot search in column k
            let mut p = k;
            let mut best = self.data[k * w + kl].norm_sqr();
            for i in (k + 1)..=last_row {
                let m = self.data[i * w + (k + kl - i)].norm_sqr();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::FactorizationFailure { pivot: k });
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let a = k * w + (j + kl - k);
                    let b = p * w + (j + kl - p);
                    self.data.swap(a, b);
                }
            }
            let base_k = k * w + kl - k;
            let inv = self.data[base_k + k].inv();
            let len = last_col - k;
            row_k[..len].copy_from_slice(&self.data[base_k + k + 1..base_k + last_col + 1]);
            for i in (k + 1)..=last_row {
                let base_i = i * w + kl - i;
                let lik = self.data[base_i + k] * inv;
                self.data[base_i + k] = lik;
                if lik.re == 0.0 && lik.im == 0.0 {
                    continue;
                }
                let dst = &mut self.data[base_i + k + 1..base_i + last_col + 1];
                for (d, &u) in dst.iter_mut().zip(&row_k[..len]) {
                    *d -= lik * u;
                }
            }
        }
        Ok(ComplexBandedLu { a: self, pivots })
    }
}

/// LU factors of a [`ComplexBanded`] matrix; reusable for any right-hand side.
#[derive(Debug, Clone)]
pub struct ComplexBandedLu {
    a: ComplexBanded,
    pivots: Vec<usize>,
}

impl ComplexBandedLu {
    pub fn size(&self) -> usize {
        self.a.n
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.a.n;
        let kl = self.a.kl;
        let w = self.a.width();
        let reach = kl + self.a.ku;
        let d = &self.a.data;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk.re == 0.0 && bk.im == 0.0 {
                continue;
            }
            for i in (k + 1)..=(k + kl).min(n - 1) {
                b[i] -= d[i * w + (k + kl - i)] * bk;
            }
        }
        for i in (0..n).rev() {
            let base = i * w + kl - i;
            let mut s = b[i];
            for j in (i + 1)..=(i + reach).min(n - 1) {
                s -= d[base + j] * b[j];
            }
            b[i] = s / d[base + i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn cholesky_solves_pentadiagonal() {
        let n = 30;
        let mut a = SymBanded::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, 6.0);
            if i >= 1 {
                a.add(i, i - 1, -4.0);
            }
            if i >= 2 {
                a.add(i, i - 2, 1.0);
            }
            a.add(i, i, 0.5);
        }
        let mut s = 7;
        let x: Vec<f64> = (0..n).map(|_| lcg(&mut s)).collect();
        let mut b = a.matvec(&x);
        let f = a.clone().cholesky().unwrap();
        f.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = SymBanded::zeros(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 1.0);
        a.add(2, 2, 1.0);
        assert!(matches!(a.cholesky(), Err(Error::SingularSystem { pivot: 1 })));
    }

    #[test]
    fn complex_lu_needs_pivoting() {
        // zero leading diagonal forces an interchange
        let n = 40;
        let (kl, ku) = (3, 2);
        let mut a = ComplexBanded::zeros(n, kl, ku);
        let mut s = 11;
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                a.add(i, j, Complex64::new(lcg(&mut s), lcg(&mut s)));
            }
        }
        let d = a.get(0, 0);
        a.add(0, 0, -d);
        let x: Vec<Complex64> = (0..n).map(|_| Complex64::new(lcg(&mut s), lcg(&mut s))).collect();
        let mut b = a.matvec(&x);
        let lu = a.factor().unwrap();
        lu.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-9, "{u} vs {v}");
        }
    }

    #[test]
    fn complex_lu_singular() {
        let a = ComplexBanded::zeros(4, 1, 1);
        assert!(matches!(a.factor(), Err(Error::FactorizationFailure { .. })));
    }
}
